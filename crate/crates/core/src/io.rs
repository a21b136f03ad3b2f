//! CSV formats: matrices, vectors, instrument tables and price histories.
//!
//! Parsers take the file contents as text so they can be exercised without a
//! filesystem. Blank lines and lines starting with `#` are skipped; errors
//! carry the 1-based line number of the offending record.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{SquareMatrix, SymmetricMatrix};
use crate::portfolio::{Instrument, OptionKind};

/// Relative tolerance on mirrored entries below which a matrix counts as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub const INSTRUMENT_HEADER: [&str; 9] = [
    "name",
    "kind",
    "strike",
    "rate",
    "maturity_years",
    "spot",
    "vol",
    "quantity",
    "hedge_shares",
];

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

struct Record {
    line: u64,
    fields: Vec<String>,
}

fn records(text: &str) -> Result<Vec<Record>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push(Record {
            line,
            fields: rec.iter().map(str::to_owned).collect(),
        });
    }
    Ok(out)
}

fn number(field: &str, line: u64, what: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{what}: '{field}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{what}: '{field}' is not finite"),
        });
    }
    Ok(v)
}

fn numeric_row(rec: &Record) -> Result<Vec<f64>> {
    rec.fields
        .iter()
        .enumerate()
        .map(|(j, f)| number(f, rec.line, &format!("column {}", j + 1)))
        .collect()
}

fn is_numeric(rec: &Record) -> bool {
    rec.fields.iter().all(|f| f.parse::<f64>().is_ok())
}

/// A square matrix with optional column labels from a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub labels: Option<Vec<String>>,
    pub matrix: SymmetricMatrix,
}

/// Reads a symmetric matrix, one row per line, with an optional header of labels.
///
/// Mirrored entries must agree to `sym_tol · max|entry|`; they are then averaged.
pub fn parse_symmetric_matrix(text: &str, sym_tol: f64) -> Result<LabeledMatrix> {
    let recs = records(text)?;
    let (labels, body) = match recs.split_first() {
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "matrix file is empty".into(),
            })
        }
        Some((first, rest)) if !is_numeric(first) => (Some(first.fields.clone()), rest),
        Some(_) => (None, &recs[..]),
    };
    let n = body.len();
    if n == 0 {
        return Err(Error::Parse {
            line: recs[0].line,
            message: "matrix has no numeric rows".into(),
        });
    }
    if let Some(l) = &labels {
        if l.len() != n {
            return Err(Error::Parse {
                line: recs[0].line,
                message: format!("header has {} labels but the matrix has {n} rows", l.len()),
            });
        }
    }
    let mut rows = Vec::with_capacity(n);
    for rec in body {
        if rec.fields.len() != n {
            return Err(Error::Parse {
                line: rec.line,
                message: format!("expected {n} columns, found {}", rec.fields.len()),
            });
        }
        rows.push(numeric_row(rec)?);
    }
    let matrix = SymmetricMatrix::from_square(SquareMatrix::from_rows(&rows)?, sym_tol)?;
    Ok(LabeledMatrix { labels, matrix })
}

/// Reads a vector laid out as one row, one column, or one value per line.
/// A single non-numeric header line is skipped.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let recs = records(text)?;
    let body = match recs.first() {
        Some(first) if !is_numeric(first) => &recs[1..],
        _ => &recs[..],
    };
    if body.is_empty() {
        return Err(Error::Parse {
            line: recs.first().map_or(1, |r| r.line),
            message: "vector file has no values".into(),
        });
    }
    if body.len() > 1 {
        if let Some(wide) = body.iter().find(|r| r.fields.len() != 1) {
            return Err(Error::Parse {
                line: wide.line,
                message: format!("expected one value per line, found {}", wide.fields.len()),
            });
        }
    }
    let mut out = Vec::new();
    for rec in body {
        out.extend(numeric_row(rec)?);
    }
    Ok(out)
}

/// Instrument row as read; `vol` may be left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentRow {
    pub line: u64,
    pub name: String,
    pub kind: OptionKind,
    pub strike: f64,
    pub rate: f64,
    pub maturity: f64,
    pub spot: f64,
    pub vol: Option<f64>,
    pub quantity: f64,
    pub hedge_shares: Option<f64>,
}

impl InstrumentRow {
    /// Fills a missing volatility with `vol_fallback`.
    pub fn into_instrument(
        self,
        vol_fallback: impl FnOnce(&str) -> Option<f64>,
    ) -> Result<Instrument> {
        let vol = match self.vol {
            Some(v) => v,
            None => vol_fallback(&self.name).ok_or_else(|| Error::Parse {
                line: self.line,
                message: format!("{}: vol is empty and cannot be derived", self.name),
            })?,
        };
        let inst = Instrument {
            name: self.name,
            kind: self.kind,
            strike: self.strike,
            rate: self.rate,
            maturity: self.maturity,
            spot: self.spot,
            vol,
            quantity: self.quantity,
            hedge_shares: self.hedge_shares,
        };
        inst.validate().map_err(|e| Error::Parse {
            line: self.line,
            message: e.to_string(),
        })?;
        Ok(inst)
    }
}

/// Reads `name,kind,strike,rate,maturity_years,spot,vol,quantity,hedge_shares`.
pub fn parse_instruments(text: &str) -> Result<Vec<InstrumentRow>> {
    let recs = records(text)?;
    let Some((header, body)) = recs.split_first() else {
        return Err(Error::Parse {
            line: 1,
            message: "instrument file is empty".into(),
        });
    };
    let names: Vec<String> = header
        .fields
        .iter()
        .map(|f| f.to_ascii_lowercase())
        .collect();
    if names != INSTRUMENT_HEADER {
        return Err(Error::Parse {
            line: header.line,
            message: format!("expected header '{}'", INSTRUMENT_HEADER.join(",")),
        });
    }
    let mut out = Vec::with_capacity(body.len());
    for rec in body {
        let f = &rec.fields;
        if f.len() != INSTRUMENT_HEADER.len() {
            return Err(Error::Parse {
                line: rec.line,
                message: format!(
                    "expected {} fields, found {}",
                    INSTRUMENT_HEADER.len(),
                    f.len()
                ),
            });
        }
        if f[0].is_empty() {
            return Err(Error::Parse {
                line: rec.line,
                message: "name is empty".into(),
            });
        }
        let kind = OptionKind::parse(&f[1]).map_err(|e| Error::Parse {
            line: rec.line,
            message: e.to_string(),
        })?;
        let optional = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                number(s, rec.line, what).map(Some)
            }
        };
        out.push(InstrumentRow {
            line: rec.line,
            name: f[0].clone(),
            kind,
            strike: number(&f[2], rec.line, "strike")?,
            rate: number(&f[3], rec.line, "rate")?,
            maturity: number(&f[4], rec.line, "maturity_years")?,
            spot: number(&f[5], rec.line, "spot")?,
            vol: optional(&f[6], "vol")?,
            quantity: number(&f[7], rec.line, "quantity")?,
            hedge_shares: optional(&f[8], "hedge_shares")?,
        });
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: header.line,
            message: "no instruments listed".into(),
        });
    }
    Ok(out)
}

/// Close prices, oldest first, under a header row of tickers.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub tickers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse_prices(text: &str) -> Result<PriceTable> {
    let recs = records(text)?;
    let Some((header, body)) = recs.split_first() else {
        return Err(Error::Parse {
            line: 1,
            message: "price file is empty".into(),
        });
    };
    if is_numeric(header) {
        return Err(Error::Parse {
            line: header.line,
            message: "expected a header row of tickers".into(),
        });
    }
    let tickers = header.fields.clone();
    if let Some(t) = tickers.iter().find(|t| t.is_empty()) {
        return Err(Error::Parse {
            line: header.line,
            message: format!("empty ticker '{t}'"),
        });
    }
    for (i, t) in tickers.iter().enumerate() {
        if tickers[..i].contains(t) {
            return Err(Error::Parse {
                line: header.line,
                message: format!("duplicate ticker '{t}'"),
            });
        }
    }
    let mut rows = Vec::with_capacity(body.len());
    for rec in body {
        if rec.fields.len() != tickers.len() {
            return Err(Error::Parse {
                line: rec.line,
                message: format!(
                    "expected {} prices, found {}",
                    tickers.len(),
                    rec.fields.len()
                ),
            });
        }
        let row = numeric_row(rec)?;
        if let Some(p) = row.iter().find(|p| **p <= 0.0) {
            return Err(Error::Parse {
                line: rec.line,
                message: format!("price {p} is not positive"),
            });
        }
        rows.push(row);
    }
    Ok(PriceTable { tickers, rows })
}

/// Writes a matrix in the format read by [`parse_symmetric_matrix`], using the
/// shortest representation that round-trips each entry.
pub fn format_matrix(labels: Option<&[String]>, m: &SymmetricMatrix) -> String {
    let mut out = String::new();
    if let Some(l) = labels {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(l);
        out.push_str(&String::from_utf8_lossy(
            &w.into_inner().unwrap_or_default(),
        ));
    }
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m.get(i, j));
        }
        out.push('\n');
    }
    out
}
