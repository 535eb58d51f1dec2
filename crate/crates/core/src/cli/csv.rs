//! Fixed-format CSV output: header row, `,` separator, 17 significant digits.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a number with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

pub struct CsvWriter {
    out: csv::Writer<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<CsvWriter> {
        let mut out = csv::Writer::from_path(path).map_err(csv_err)?;
        out.write_record(header).map_err(csv_err)?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        self.out.write_record(values.iter().map(|&x| fmt_num(x))).map_err(csv_err)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Parses a file written by [`CsvWriter`] into its header and rows.
pub fn read(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| Error::Format(format!("bad number `{c}`"))))
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
