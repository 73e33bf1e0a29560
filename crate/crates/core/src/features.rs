//! Feature matrices and the TFEA container.
//!
//! TFEA layout (all integers little-endian):
//!
//! | offset | size  | field                                   |
//! |--------|-------|-----------------------------------------|
//! | 0      | 4     | magic `b"TFEA"`                         |
//! | 4      | 4     | version, `u32` = 1                      |
//! | 8      | 8     | `n` rows, `u64`                         |
//! | 16     | 8     | `d` columns, `u64`                      |
//! | 24     | 1     | dtype code, `0x01` = IEEE-754 `f32`     |
//! | 25     | 7     | reserved, zero                          |
//! | 32     | 4·n·d | values, row-major                       |
//! | …      | 4 + L | optional provenance: `u32` length L, then L bytes of UTF-8 |
//!
//! Headerless delimiter-separated text (comma, tab, semicolon or spaces;
//! one row per line, `#` comments) is also accepted for small fixtures.

use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TFEA";
pub const VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0x01;
pub const HEADER_LEN: usize = 32;

/// `n × d` embedding values, one row per sample, stored as `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    values: Vec<f32>,
    tag: String,
}

impl FeatureMatrix {
    /// Build from row-major values; every value must be finite.
    pub fn new(n: usize, d: usize, values: Vec<f32>, tag: impl Into<String>) -> Result<Self> {
        let expected = n.checked_mul(d).ok_or_else(|| Error::InvalidParams("n·d overflows".into()))?;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d.max(1),
                col: pos % d.max(1),
            });
        }
        Ok(FeatureMatrix {
            n,
            d,
            values,
            tag: tag.into(),
        })
    }

    /// Build from equally long columns of `f64` values (rounded to `f32`).
    pub fn from_columns(columns: &[Vec<f64>], tag: impl Into<String>) -> Result<Self> {
        let d = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let mut values = Vec::with_capacity(n * d);
        for i in 0..n {
            values.extend(columns.iter().map(|c| c[i] as f32));
        }
        FeatureMatrix::new(n, d, values, tag)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn set_tag(&mut self, tag: impl Into<String>) {
        self.tag = tag.into();
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.d + j]
    }

    /// Column `j` widened to `f64`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        assert!(j < self.d, "column {j} out of range for d = {}", self.d);
        self.values.iter().skip(j).step_by(self.d).map(|&v| f64::from(v)).collect()
    }

    /// Position of the first negative value, if any.
    pub fn first_negative(&self) -> Option<(usize, usize)> {
        self.values
            .iter()
            .position(|&v| v < 0.0)
            .map(|pos| (pos / self.d, pos % self.d))
    }

    /// Matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.d);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            n: rows.len(),
            d: self.d,
            values,
            tag: self.tag.clone(),
        }
    }

    /// Serialize to TFEA bytes.
    pub fn to_tfea_bytes(&self) -> Vec<u8> {
        let trailer = if self.tag.is_empty() { 0 } else { 4 + self.tag.len() };
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.values.len() + trailer);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.d as u64).to_le_bytes());
        out.push(DTYPE_F32);
        out.extend_from_slice(&[0u8; 7]);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if !self.tag.is_empty() {
            out.extend_from_slice(&(self.tag.len() as u32).to_le_bytes());
            out.extend_from_slice(self.tag.as_bytes());
        }
        out
    }

    /// Parse TFEA bytes.
    pub fn from_tfea_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::MalformedHeader(format!(
                "{} bytes is shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::MalformedHeader(format!("bad magic {:02x?}", &bytes[0..4])));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let d = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let dtype = bytes[24];
        if dtype != DTYPE_F32 {
            return Err(Error::UnsupportedDtype(dtype));
        }
        if bytes[25..32].iter().any(|&b| b != 0) {
            return Err(Error::MalformedHeader("reserved bytes are not zero".into()));
        }
        let count = usize::try_from(n)
            .ok()
            .zip(usize::try_from(d).ok())
            .and_then(|(n, d)| n.checked_mul(d))
            .ok_or_else(|| Error::MalformedHeader(format!("n = {n}, d = {d} is not addressable")))?;
        let payload_len = count
            .checked_mul(4)
            .ok_or_else(|| Error::MalformedHeader("payload size overflows".into()))?;
        let body = &bytes[HEADER_LEN..];
        if body.len() < payload_len {
            return Err(Error::TruncatedPayload {
                expected: payload_len,
                found: body.len(),
            });
        }
        let values: Vec<f32> = body[..payload_len]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();

        let rest = &body[payload_len..];
        let tag = match rest.len() {
            0 => String::new(),
            1..=3 => return Err(Error::MalformedHeader("incomplete provenance length".into())),
            _ => {
                let len = u32::from_le_bytes(rest[0..4].try_into().unwrap()) as usize;
                if rest.len() - 4 != len {
                    return Err(Error::MalformedHeader(format!(
                        "provenance length {len} does not match {} trailing bytes",
                        rest.len() - 4
                    )));
                }
                String::from_utf8(rest[4..].to_vec())
                    .map_err(|_| Error::MalformedHeader("provenance is not UTF-8".into()))?
            }
        };
        FeatureMatrix::new(n as usize, d as usize, values, tag)
    }

    /// Parse delimiter-separated text, one row per line.
    pub fn from_text(text: &str, tag: impl Into<String>) -> Result<Self> {
        let mut values = Vec::new();
        let mut d = None;
        let mut n = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f32> = line
                .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f32>().map_err(|e| Error::Parse {
                        line: lineno + 1,
                        detail: format!("'{t}': {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            match d {
                None => d = Some(row.len()),
                Some(width) if width != row.len() => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        detail: format!("expected {width} columns, found {}", row.len()),
                    })
                }
                _ => {}
            }
            values.extend(row);
            n += 1;
        }
        FeatureMatrix::new(n, d.unwrap_or(0), values, tag)
    }

    /// Delimiter-separated text with the shortest round-tripping decimals.
    pub fn to_text(&self, delimiter: char) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(&delimiter.to_string()));
            out.push('\n');
        }
        out
    }
}

/// Read a TFEA file.
pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureMatrix::from_tfea_bytes(&bytes)
}

/// Write a TFEA file; identical matrices produce identical bytes.
pub fn write_feature_file(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, m.to_tfea_bytes()).map_err(|e| Error::io(path, e))
}

/// Read a delimiter-separated text file; the tag is the file name.
pub fn read_text_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let tag = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    FeatureMatrix::from_text(&text, tag)
}

/// Load by extension: `.csv`, `.tsv` and `.txt` are text, anything else TFEA.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let mut m = match ext.as_deref() {
        Some("csv" | "tsv" | "txt") => read_text_features(path)?,
        _ => read_feature_file(path)?,
    };
    if m.tag().is_empty() {
        m.set_tag(path.display().to_string());
    }
    Ok(m)
}

/// `floor(fraction·n)` rows drawn without replacement, kept in original order.
pub fn subsample(m: &FeatureMatrix, fraction: f64, seed: u64) -> Result<FeatureMatrix> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParams(format!("fraction {fraction} must lie in (0, 1]")));
    }
    let keep = (fraction * m.n() as f64).floor() as usize;
    if keep == 0 {
        return Err(Error::Empty(format!("fraction {fraction} of {} rows keeps nothing", m.n())));
    }
    if keep == m.n() {
        return Ok(m.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = index::sample(&mut rng, m.n(), keep).into_vec();
    rows.sort_unstable();
    Ok(m.select_rows(&rows))
}
