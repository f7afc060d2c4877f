//! Plain-text field files.
//!
//! Line 1 is the JSON grid header `{"d":..,"half_width":[..],"samples":[..]}`,
//! line 2 the CSV header `index,re,im`, then one row per sample in row-major
//! order (axis 0 slowest). Floats use the shortest round-trip representation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::ArrayD;
use num_complex::Complex64;

use super::{GridSpec, SampledField};
use crate::error::{Error, Result};

const CSV_HEADER: &str = "index,re,im";

/// Shortest round-trip text for `v`, switching to exponent form outside
/// [1e-5, 1e16).
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_field<W: Write>(mut out: W, field: &SampledField) -> Result<()> {
    serde_json::to_writer(&mut out, field.spec())?;
    out.write_all(b"\n")?;
    writeln!(out, "{CSV_HEADER}")?;
    for (index, v) in field.values().iter().enumerate() {
        writeln!(out, "{index},{},{}", format_float(v.re), format_float(v.im))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_field<R: BufRead>(input: R) -> Result<SampledField> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))??;
    let spec: GridSpec = serde_json::from_str(&header)?;
    let csv_header = lines
        .next()
        .ok_or_else(|| Error::Format("missing CSV header".into()))??;
    if csv_header.trim() != CSV_HEADER {
        return Err(Error::Format(format!(
            "expected CSV header {CSV_HEADER:?}, found {csv_header:?}"
        )));
    }
    let total = spec.len();
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let mut seen = vec![false; total];
    for (line_no, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line_no + 3;
        let mut parts = line.split(',');
        let mut next = |what: &str| {
            parts
                .next()
                .map(str::trim)
                .ok_or_else(|| Error::Format(format!("line {row}: missing {what}")))
        };
        let index: usize = next("index")?
            .parse()
            .map_err(|e| Error::Format(format!("line {row}: bad index: {e}")))?;
        let re: f64 = next("re")?
            .parse()
            .map_err(|e| Error::Format(format!("line {row}: bad re: {e}")))?;
        let im: f64 = next("im")?
            .parse()
            .map_err(|e| Error::Format(format!("line {row}: bad im: {e}")))?;
        if index >= total {
            return Err(Error::Format(format!(
                "line {row}: index {index} out of range for {total} samples"
            )));
        }
        if seen[index] {
            return Err(Error::Format(format!(
                "line {row}: duplicate index {index}"
            )));
        }
        seen[index] = true;
        data[index] = Complex64::new(re, im);
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Format(format!("missing sample index {missing}")));
    }
    let values =
        ArrayD::from_shape_vec(spec.shape(), data).map_err(|e| Error::Format(e.to_string()))?;
    SampledField::from_values(spec, values)
}

impl SampledField {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_field(BufWriter::new(File::create(path)?), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_field(BufReader::new(File::open(path)?))
    }
}
