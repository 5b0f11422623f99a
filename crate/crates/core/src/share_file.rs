//! Line-oriented text format for a single share at rest.
//!
//! ```text
//! SHARE v1
//! p=<decimal prime>
//! k=<decimal>
//! n=<decimal>
//! index=<decimal>
//! x=<decimal>
//! c=<decimal>[,<decimal>...]
//! ```
//!
//! The key order is fixed, unknown keys are rejected, lines end with LF,
//! and the trailing newline is required. One `c` value per secret block.

use num_bigint::BigUint;
use thiserror::Error;

use crate::field::PrimeContext;
use crate::partition::ShareBundle;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShareFormatError {
    #[error("share file must end with a newline")]
    MissingTrailingNewline,
    #[error("share files are LF-only; found a carriage return")]
    CarriageReturn,
    #[error("expected header `SHARE v1`, found {0:?}")]
    BadMagic(String),
    #[error("expected `{expected}=...` line, found {found:?}")]
    UnexpectedKey { expected: &'static str, found: String },
    #[error("bad value for {key}: {value:?}")]
    BadValue { key: &'static str, value: String },
    #[error("missing `{0}=` line")]
    MissingLine(&'static str),
    #[error("unexpected extra line {0:?}")]
    UnexpectedLine(String),
}

/// A parsed share file: the bundle's numbers plus the header fields every
/// share of one split must agree on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareRecord {
    pub p: BigUint,
    pub k: usize,
    pub n: usize,
    pub index: usize,
    pub x: BigUint,
    pub c: Vec<BigUint>,
}

impl ShareRecord {
    pub fn from_bundle(bundle: &ShareBundle, k: usize, n: usize) -> ShareRecord {
        ShareRecord {
            p: bundle.x.context().modulus().clone(),
            k,
            n,
            index: bundle.index,
            x: bundle.x.value().clone(),
            c: bundle.c.iter().map(|e| e.value().clone()).collect(),
        }
    }

    /// Rebinds the raw numbers to a field context (values reduced mod p).
    pub fn to_bundle(&self, ctx: &PrimeContext) -> ShareBundle {
        ShareBundle {
            index: self.index,
            x: ctx.element(self.x.clone()),
            c: self.c.iter().map(|v| ctx.element(v.clone())).collect(),
        }
    }
}

pub fn render_share(record: &ShareRecord) -> String {
    let c_list: Vec<String> = record.c.iter().map(|v| v.to_string()).collect();
    format!(
        "SHARE v1\np={}\nk={}\nn={}\nindex={}\nx={}\nc={}\n",
        record.p,
        record.k,
        record.n,
        record.index,
        record.x,
        c_list.join(",")
    )
}

fn take_value<'a>(
    lines: &mut std::str::Lines<'a>,
    key: &'static str,
) -> Result<&'a str, ShareFormatError> {
    let line = lines.next().ok_or(ShareFormatError::MissingLine(key))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| ShareFormatError::UnexpectedKey {
            expected: key,
            found: line.to_string(),
        })
}

fn parse_biguint(key: &'static str, value: &str) -> Result<BigUint, ShareFormatError> {
    if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ShareFormatError::BadValue {
            key,
            value: value.to_string(),
        });
    }
    value.parse().map_err(|_| ShareFormatError::BadValue {
        key,
        value: value.to_string(),
    })
}

fn parse_usize(key: &'static str, value: &str) -> Result<usize, ShareFormatError> {
    value.parse().map_err(|_| ShareFormatError::BadValue {
        key,
        value: value.to_string(),
    })
}

pub fn parse_share(text: &str) -> Result<ShareRecord, ShareFormatError> {
    if text.contains('\r') {
        return Err(ShareFormatError::CarriageReturn);
    }
    if !text.ends_with('\n') {
        return Err(ShareFormatError::MissingTrailingNewline);
    }
    let mut lines = text.lines();
    let magic = lines
        .next()
        .ok_or_else(|| ShareFormatError::BadMagic(String::new()))?;
    if magic != "SHARE v1" {
        return Err(ShareFormatError::BadMagic(magic.to_string()));
    }
    let p = parse_biguint("p", take_value(&mut lines, "p")?)?;
    let k = parse_usize("k", take_value(&mut lines, "k")?)?;
    let n = parse_usize("n", take_value(&mut lines, "n")?)?;
    let index = parse_usize("index", take_value(&mut lines, "index")?)?;
    let x = parse_biguint("x", take_value(&mut lines, "x")?)?;
    let c_raw = take_value(&mut lines, "c")?;
    let c = c_raw
        .split(',')
        .map(|part| parse_biguint("c", part))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(extra) = lines.next() {
        return Err(ShareFormatError::UnexpectedLine(extra.to_string()));
    }
    Ok(ShareRecord { p, k, n, index, x, c })
}
