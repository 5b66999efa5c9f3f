//! Panel CSV ingestion and emission.
//!
//! Layout: a header row of series names, an optional leading `date`
//! column (opaque labels, carried through untouched), numeric cells
//! everywhere else. Blank or non-numeric cells are rejected with their
//! coordinates; floats are written in shortest round-trip form so
//! loading a written panel reproduces it exactly.

use std::path::Path;

use mvhp_core::Panel64;

use crate::error::CliError;

/// A loaded panel with its date labels, if the file carried any.
#[derive(Debug)]
pub struct PanelFile {
    pub panel: Panel64,
    pub dates: Option<Vec<String>>,
}

pub fn load_panel(path: &Path) -> Result<PanelFile, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;

    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(rec)) if !rec.is_empty() && rec.iter().any(|c| !c.is_empty()) => rec,
        Some(Err(e)) => return Err(CliError::input(format!("malformed header row: {e}"))),
        _ => {
            return Err(CliError::input(format!(
                "missing header row in {}",
                path.display()
            )))
        }
    };

    let has_dates = header
        .get(0)
        .map(|c| c.eq_ignore_ascii_case("date"))
        .unwrap_or(false);
    let first_value_col = usize::from(has_dates);
    let names: Vec<String> = header
        .iter()
        .skip(first_value_col)
        .map(str::to_owned)
        .collect();
    if names.is_empty() {
        return Err(CliError::input("header row carries no series names"));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dates: Vec<String> = Vec::new();
    for (idx, record) in records.enumerate() {
        let row_no = idx + 2; // 1-based, counting the header
        let record =
            record.map_err(|e| CliError::input(format!("parse error at row {row_no}: {e}")))?;
        if record.len() != header.len() {
            return Err(CliError::input(format!(
                "parse error at row {row_no}: expected {} cells, found {}",
                header.len(),
                record.len()
            )));
        }
        if has_dates {
            dates.push(record.get(0).unwrap_or("").to_owned());
        }
        let mut row = Vec::with_capacity(names.len());
        for (j, cell) in record.iter().enumerate().skip(first_value_col) {
            let parsed: Option<f64> = if cell.is_empty() {
                None
            } else {
                cell.parse().ok().filter(|v: &f64| v.is_finite())
            };
            let value = parsed.ok_or_else(|| {
                CliError::input(format!(
                    "non-numeric cell {cell:?} at row {row_no}, column {} ({})",
                    j + 1,
                    header.get(j).unwrap_or("?")
                ))
            })?;
            row.push(value);
        }
        rows.push(row);
    }

    let panel = Panel64::from_rows(rows, names).map_err(CliError::from)?;
    Ok(PanelFile {
        panel,
        dates: has_dates.then_some(dates),
    })
}

/// Floats are written with `Display`, the shortest form that parses
/// back to the same bits, so `load_panel(write_panel(p)) == p`.
pub fn write_panel(path: &Path, panel: &Panel64, dates: Option<&[String]>) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", path.display())))?;
    let mut header: Vec<String> = Vec::with_capacity(panel.dim() + 1);
    if dates.is_some() {
        header.push("date".to_owned());
    }
    header.extend(panel.names().iter().cloned());
    writer
        .write_record(&header)
        .map_err(|e| CliError::internal(e.to_string()))?;
    for t in 0..panel.len() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        if let Some(d) = dates {
            record.push(d.get(t).cloned().unwrap_or_default());
        }
        record.extend(panel.row(t).iter().map(|v| format!("{v}")));
        writer
            .write_record(&record)
            .map_err(|e| CliError::internal(e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::internal(e.to_string()))
}
