//! Versioned plain-text parameter files.
//!
//! ```text
//! danet-model v1        danet-dae v1          danet-norm v1
//! d k l                 d k                   d
//! U1, d+1 rows of k     encoder, d+1 rows     mean, one row of d
//! U2, k+1 rows of l     decoder, k+1 rows     std, one row of d
//! ```
//!
//! Row 0 of every weight block is the bias. Values are space separated and
//! printed with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use dann_core::dae::DaeParams;
use dann_core::data::NormStats;
use dann_core::network::DannParams;
use dann_core::Matrix;

use crate::csvio::fmt_f64;
use crate::error::{CliError, Result};

pub const MODEL_HEADER: &str = "danet-model v1";
pub const DAE_HEADER: &str = "danet-dae v1";
pub const NORM_HEADER: &str = "danet-norm v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct FormatError {
    pub line: u64,
    pub msg: String,
}

fn push_block(out: &mut String, m: &Matrix) {
    for row in m.iter_rows() {
        let fields: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
}

pub fn model_to_string(p: &DannParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_HEADER}");
    let _ = writeln!(out, "{} {} {}", p.input_dim(), p.hidden(), p.classes());
    push_block(&mut out, p.u1());
    push_block(&mut out, p.u2());
    out
}

pub fn dae_to_string(p: &DaeParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DAE_HEADER}");
    let _ = writeln!(out, "{} {}", p.input_dim(), p.hidden());
    push_block(&mut out, p.encoder());
    push_block(&mut out, p.decoder());
    out
}

pub fn norm_to_string(s: &NormStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{NORM_HEADER}");
    let _ = writeln!(out, "{}", s.dim());
    for v in [&s.mean, &s.std] {
        let fields: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
        let _ = writeln!(out, "{}", fields.join(" "));
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: u64,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> FormatError {
        FormatError {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str, FormatError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i as u64 + 1;
                Ok(l)
            }
            None => {
                self.line += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    fn header(&mut self, expected: &str) -> Result<(), FormatError> {
        let l = self.next_line()?;
        if l.trim() != expected {
            return Err(self.err(format!("expected header {expected:?}, found {:?}", l.trim())));
        }
        Ok(())
    }

    fn counts(&mut self, n: usize) -> Result<Vec<usize>, FormatError> {
        let l = self.next_line()?;
        let v: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| self.err(format!("expected {n} non-negative integers")))?;
        if v.len() != n || v.contains(&0) {
            return Err(self.err(format!("expected {n} positive integers")));
        }
        Ok(v)
    }

    fn row(&mut self, width: usize) -> Result<Vec<f64>, FormatError> {
        let l = self.next_line()?;
        let mut v = Vec::with_capacity(width);
        for tok in l.split_whitespace() {
            let x: f64 = tok
                .parse()
                .map_err(|_| self.err(format!("{tok:?} is not a number")))?;
            if !x.is_finite() {
                return Err(self.err("non-finite value"));
            }
            v.push(x);
        }
        if v.len() != width {
            return Err(self.err(format!("expected {width} values, found {}", v.len())));
        }
        Ok(v)
    }

    fn block(&mut self, rows: usize, cols: usize) -> Result<Matrix, FormatError> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.row(cols)?);
        }
        Matrix::from_vec(rows, cols, data).map_err(|e| self.err(e.to_string()))
    }

    fn end(&mut self) -> Result<(), FormatError> {
        for (i, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                return Err(FormatError {
                    line: i as u64 + 1,
                    msg: "trailing content".into(),
                });
            }
        }
        Ok(())
    }
}

pub fn parse_model(text: &str) -> Result<DannParams, FormatError> {
    let mut r = Lines::new(text);
    r.header(MODEL_HEADER)?;
    let c = r.counts(3)?;
    let (d, k, l) = (c[0], c[1], c[2]);
    let u1 = r.block(d + 1, k)?;
    let u2 = r.block(k + 1, l)?;
    r.end()?;
    DannParams::new(u1, u2).map_err(|e| r.err(e.to_string()))
}

pub fn parse_dae(text: &str) -> Result<DaeParams, FormatError> {
    let mut r = Lines::new(text);
    r.header(DAE_HEADER)?;
    let c = r.counts(2)?;
    let (d, k) = (c[0], c[1]);
    let enc = r.block(d + 1, k)?;
    let dec = r.block(k + 1, d)?;
    r.end()?;
    DaeParams::new(enc, dec).map_err(|e| r.err(e.to_string()))
}

pub fn parse_norm(text: &str) -> Result<NormStats, FormatError> {
    let mut r = Lines::new(text);
    r.header(NORM_HEADER)?;
    let d = r.counts(1)?[0];
    let mean = r.row(d)?;
    let std = r.row(d)?;
    if std.iter().any(|&s| s <= 0.0) {
        return Err(r.err("std entries must be positive"));
    }
    r.end()?;
    Ok(NormStats { mean, std })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn lift<T>(path: &Path, r: Result<T, FormatError>) -> Result<T> {
    r.map_err(|e| CliError::parse(path, e.line, e.msg))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<DannParams> {
    lift(path, parse_model(&read_text(path)?))
}

pub fn load_dae(path: &Path) -> Result<DaeParams> {
    lift(path, parse_dae(&read_text(path)?))
}

pub fn load_norm(path: &Path) -> Result<NormStats> {
    lift(path, parse_norm(&read_text(path)?))
}
