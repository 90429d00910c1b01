//! Reading observation files.

use std::io::Read;

use crate::error::{Error, Result};

/// Read a single numeric column in time order.
///
/// A first row that does not parse as a number is taken as a header. Blank
/// lines are skipped. Errors name the offending 1-based line.
pub fn read_series_csv<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(idx as u64 + 1, |p| p.line());
            Error::InvalidSeries(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != 1 {
            return Err(Error::InvalidSeries(format!(
                "line {line}: expected a single column, found {}",
                record.len()
            )));
        }
        let field = &record[0];
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => {
                return Err(Error::InvalidSeries(format!("line {line}: non-finite value '{field}'")))
            }
            Err(_) if idx == 0 => continue,
            Err(_) => {
                return Err(Error::InvalidSeries(format!("line {line}: cannot parse '{field}' as a number")))
            }
        }
    }
    if values.is_empty() {
        return Err(Error::InvalidSeries("no observations found".into()));
    }
    Ok(values)
}
