use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Key=value configuration file, holding the same keys as the long flags.
/// Flags win over file entries; file entries win over built-in defaults
/// (and over the seed environment variable).
#[derive(Debug, Default)]
pub struct Overlay {
    entries: BTreeMap<String, String>,
}

/// Environment variable consulted for the default master seed.
pub const SEED_ENV: &str = "FPSEARCH_SEED";

impl Overlay {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config {} line {}: expected key=value, got {raw:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    /// Typed lookup of a config key; parse failures are usage errors.
    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Usage(format!("config key {key}: cannot parse {raw:?}"))
            }),
        }
    }

    pub fn get_string(&self, key: &str) -> Option<String> {
        self.entries.get(key).cloned()
    }
}

/// Resolves a value from flag, then config file, then default.
pub fn resolve<T: FromStr + Copy>(
    flag: Option<T>,
    overlay: &Overlay,
    key: &str,
    default: T,
) -> CliResult<T> {
    Ok(flag.or(overlay.get(key)?).unwrap_or(default))
}

/// Seed resolution adds the environment override between file and default.
pub fn resolve_seed(flag: Option<u64>, overlay: &Overlay, default: u64) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = overlay.get::<u64>("seed")? {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .parse::<u64>()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}: cannot parse {raw:?} as u64"))),
        Err(_) => Ok(default),
    }
}
