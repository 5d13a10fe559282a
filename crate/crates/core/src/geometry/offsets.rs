//! Hull offset CSV: `L,B,d,y_001,...,y_800`, one hull per row.

use super::{GridSpec, HullGrid};
use crate::error::{Error, Result};
use crate::scalar::Real;
use std::io::{Read, Write};

fn header(grid_len: usize) -> Vec<String> {
    let mut h = vec!["L".to_string(), "B".to_string(), "d".to_string()];
    h.extend((1..=grid_len).map(|k| format!("y_{k:03}")));
    h
}

/// Formats with 17 significant digits, enough to round-trip an `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_offsets_csv<T: Real, W: Write>(out: W, hulls: &[HullGrid<T>]) -> Result<()> {
    let grid_len = hulls.first().map_or(GridSpec::<T>::standard().len(), |h| h.grid.len());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header(grid_len)).map_err(csv_err)?;
    for h in hulls {
        if h.y.len() != grid_len {
            return Err(Error::Shape(format!("hull with {} offsets, expected {grid_len}", h.y.len())));
        }
        let mut rec = Vec::with_capacity(grid_len + 3);
        for v in [h.length, h.beam_nominal, h.draft_nominal].iter().chain(&h.y) {
            rec.push(fmt_f64(v.to_f64().unwrap_or(f64::NAN)));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_offsets_csv<T: Real, R: Read>(input: R, grid: &GridSpec<T>) -> Result<Vec<HullGrid<T>>> {
    let want = header(grid.len());
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let got: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if got != want {
        return Err(Error::Format(format!(
            "offset header mismatch: expected {} columns starting L,B,d,y_001, got {} columns",
            want.len(),
            got.len()
        )));
    }
    let mut hulls = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(csv_err)?;
        if rec.len() != want.len() {
            return Err(Error::Format(format!(
                "row {line}: expected {} columns, found {}",
                want.len(),
                rec.len()
            )));
        }
        let mut vals = Vec::with_capacity(rec.len());
        for (col, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Format(format!("row {line}, column {} ({}): not a number: {cell:?}", col + 1, want[col]))
            })?;
            vals.push(T::from_f64(v).unwrap_or_else(T::nan));
        }
        hulls.push(HullGrid {
            grid: grid.clone(),
            y: vals[3..].to_vec(),
            length: vals[0],
            beam_nominal: vals[1],
            draft_nominal: vals[2],
        });
    }
    Ok(hulls)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Format(format!("csv error at line {}: {e}", p.line())),
        None => Error::Format(format!("csv error: {e}")),
    }
}
