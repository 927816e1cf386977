use std::io::Write;
use std::path::Path;

use crate::error::CliResult;

/// Formats a float with 12 significant digits, plain decimal where readable
/// and scientific otherwise. All numeric CLI output funnels through here.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.11e}", x)
    }
}

/// The same value rounded to 12 significant digits, for JSON fields.
pub fn round12(x: f64) -> f64 {
    sig12(x).parse().unwrap_or(x)
}

/// Writes rows of pre-formatted fields as a CSV file with the given header.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes a value as pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}
