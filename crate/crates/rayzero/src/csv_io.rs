//! CSV tables written and read back at full double precision.
//!
//! Every float is printed with 17 significant digits (`{:.16e}`), which
//! round-trips an `f64` exactly.

use std::fmt::Write as _;

use rayzero_core::{SpectrumPoint, ZeroRecord};
use thiserror::Error;

pub const SPECTRUM_HEADER: &str = "omega_cm1,a_zz,a_xz,sigma_zz,sigma_xz,p_l";
pub const ZEROS_HEADER: &str = "method,ref_n,omega_zero_cm1,offset_cm1,bracket_lo,bracket_hi,residual";
pub const FIT_HEADER: &str =
    "target,value_a0sq,sigma_stat,sigma_fiducial,sigma_remote,sigma_total,truth";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unexpected header `{0}`")]
    Header(String),
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn spectrum_csv(points: &[SpectrumPoint]) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(p.omega),
            num(p.a_zz),
            num(p.a_xz),
            num(p.sigma_zz),
            num(p.sigma_xz),
            num(p.p_l)
        );
    }
    out
}

/// One row of the zero table. `ref_n` and `offset` refer to the level the
/// offsets are quoted against.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroRow {
    pub method: String,
    pub ref_n: u32,
    pub omega_zero: f64,
    pub offset: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub residual: f64,
}

impl From<&ZeroRecord> for ZeroRow {
    fn from(z: &ZeroRecord) -> Self {
        ZeroRow {
            method: z.method.label().to_string(),
            ref_n: z.reference.n,
            omega_zero: z.omega_zero,
            offset: z.offset,
            bracket_lo: z.bracket.0,
            bracket_hi: z.bracket.1,
            residual: z.residual,
        }
    }
}

pub fn zeros_csv(rows: &[ZeroRow]) -> String {
    let mut out = String::from(ZEROS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method,
            r.ref_n,
            num(r.omega_zero),
            num(r.offset),
            num(r.bracket_lo),
            num(r.bracket_hi),
            num(r.residual)
        );
    }
    out
}

fn rows<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((_, h)) => return Err(CsvError::Header(h.to_string())),
        None => return Err(CsvError::Header(String::new())),
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect())))
}

fn field<T: std::str::FromStr>(cols: &[&str], idx: usize, line: usize) -> Result<T, CsvError> {
    cols.get(idx)
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| CsvError::Malformed {
            line,
            message: format!("column {} is missing or malformed", idx + 1),
        })
}

fn width(cols: &[&str], expected: usize, line: usize) -> Result<(), CsvError> {
    if cols.len() == expected {
        Ok(())
    } else {
        Err(CsvError::Malformed {
            line,
            message: format!("expected {expected} columns, found {}", cols.len()),
        })
    }
}

pub fn read_spectrum_csv(text: &str) -> Result<Vec<SpectrumPoint>, CsvError> {
    rows(text, SPECTRUM_HEADER)?
        .map(|(line, c)| {
            width(&c, 6, line)?;
            Ok(SpectrumPoint {
                omega: field(&c, 0, line)?,
                a_zz: field(&c, 1, line)?,
                a_xz: field(&c, 2, line)?,
                sigma_zz: field(&c, 3, line)?,
                sigma_xz: field(&c, 4, line)?,
                p_l: field(&c, 5, line)?,
            })
        })
        .collect()
}

pub fn read_zeros_csv(text: &str) -> Result<Vec<ZeroRow>, CsvError> {
    rows(text, ZEROS_HEADER)?
        .map(|(line, c)| {
            width(&c, 7, line)?;
            Ok(ZeroRow {
                method: c[0].to_string(),
                ref_n: field(&c, 1, line)?,
                omega_zero: field(&c, 2, line)?,
                offset: field(&c, 3, line)?,
                bracket_lo: field(&c, 4, line)?,
                bracket_hi: field(&c, 5, line)?,
                residual: field(&c, 6, line)?,
            })
        })
        .collect()
}
