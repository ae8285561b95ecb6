//! Summability matrices `A = (a_ik)` and the row transform `A_i(x) = Σ_k a_ik x_k`.
//!
//! Rows whose support reaches past the truncation are an error rather than a
//! silently truncated partial sum.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::sequence::{parse_options, read_lines, split_spec, SequencePrefix};

#[derive(Debug, Clone)]
pub enum MatrixKind {
    Identity,
    /// `a_ik = 1/i` for `k <= i`.
    Cesaro,
    /// `a_ik = p_k / (p_1 + ... + p_i)` for `k <= i`.
    Riesz(Arc<[f64]>),
    /// Sparse rows keyed by `i`, entries sorted by `k`. Missing rows are zero.
    Explicit(Arc<BTreeMap<usize, Vec<(usize, f64)>>>),
}

#[derive(Debug, Clone)]
pub struct SummabilityMatrix {
    kind: MatrixKind,
    label: String,
}

impl SummabilityMatrix {
    pub fn identity() -> Self {
        Self::new(MatrixKind::Identity, "identity")
    }

    pub fn cesaro() -> Self {
        Self::new(MatrixKind::Cesaro, "cesaro")
    }

    pub fn riesz(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid("riesz needs at least one weight".into()));
        }
        if let Some((k, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Invalid(format!("riesz weight p_{} = {w} must be finite and >= 0", k + 1)));
        }
        if weights[0] <= 0.0 {
            return Err(Error::Invalid("riesz weight p_1 must be > 0".into()));
        }
        Ok(Self::new(MatrixKind::Riesz(weights.into()), "riesz"))
    }

    /// Builds an explicit matrix from `(i, k, a_ik)` triples (1-indexed).
    pub fn explicit(entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut rows: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (i, k, a) in entries {
            if i == 0 || k == 0 {
                return Err(Error::Invalid("matrix entries are 1-indexed".into()));
            }
            if !a.is_finite() {
                return Err(Error::NonFinite { index: i, value: a });
            }
            rows.entry(i).or_default().push((k, a));
        }
        for (i, row) in rows.iter_mut() {
            row.sort_by_key(|&(k, _)| k);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Invalid(format!("row {i} repeats a column")));
            }
        }
        Ok(Self::new(MatrixKind::Explicit(Arc::new(rows)), "explicit"))
    }

    fn new(kind: MatrixKind, label: &str) -> Self {
        SummabilityMatrix {
            kind,
            label: label.to_string(),
        }
    }

    pub fn kind(&self) -> &MatrixKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Column range `(min k, max k)` of the nonzero pattern of row `i`;
    /// `None` for an empty row.
    pub fn row_support(&self, i: usize) -> Result<Option<(usize, usize)>> {
        Ok(match &self.kind {
            MatrixKind::Identity => Some((i, i)),
            MatrixKind::Cesaro => Some((1, i)),
            MatrixKind::Riesz(p) => {
                self.check_riesz_row(p, i)?;
                Some((1, i))
            }
            MatrixKind::Explicit(rows) => rows
                .get(&i)
                .and_then(|r| Some((r.first()?.0, r.last()?.0))),
        })
    }

    fn check_riesz_row(&self, p: &[f64], i: usize) -> Result<()> {
        if i > p.len() {
            return Err(Error::OutOfRange {
                index: i,
                max: p.len(),
            });
        }
        Ok(())
    }

    /// Materialised entries `(k, a_ik)` of row `i`, sorted by `k`.
    pub fn row(&self, i: usize) -> Result<Vec<(usize, f64)>> {
        if i == 0 {
            return Err(Error::OutOfRange { index: 0, max: 0 });
        }
        Ok(match &self.kind {
            MatrixKind::Identity => vec![(i, 1.0)],
            MatrixKind::Cesaro => (1..=i).map(|k| (k, 1.0 / i as f64)).collect(),
            MatrixKind::Riesz(p) => {
                self.check_riesz_row(p, i)?;
                let total: CompensatedSum = p[..i].iter().copied().collect();
                let total = total.value();
                (1..=i).map(|k| (k, p[k - 1] / total)).collect()
            }
            MatrixKind::Explicit(rows) => rows.get(&i).cloned().unwrap_or_default(),
        })
    }

    fn check_row(&self, x: &SequencePrefix, i: usize) -> Result<()> {
        let n = x.len();
        if i == 0 || i > n {
            return Err(Error::OutOfRange { index: i, max: n });
        }
        if let Some((_, hi)) = self.row_support(i)? {
            if hi > n {
                return Err(Error::TruncationIncomplete {
                    row: i,
                    needed: hi,
                    have: n,
                });
            }
        }
        Ok(())
    }
}

fn finite(i: usize, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { index: i, value: v })
    }
}

/// `A_i(x)`, accumulated with compensated summation.
pub fn apply_row(a: &SummabilityMatrix, x: &SequencePrefix, i: usize) -> Result<f64> {
    a.check_row(x, i)?;
    let xs = x.values();
    let v = match &a.kind {
        MatrixKind::Identity => xs[i - 1],
        MatrixKind::Cesaro => {
            let s: CompensatedSum = xs[..i].iter().copied().collect();
            s.value() / i as f64
        }
        MatrixKind::Riesz(p) => {
            let mut num = CompensatedSum::new();
            let mut den = CompensatedSum::new();
            for k in 0..i {
                num.add(p[k] * xs[k]);
                den.add(p[k]);
            }
            num.value() / den.value()
        }
        MatrixKind::Explicit(rows) => rows
            .get(&i)
            .map(|r| r.iter().map(|&(k, a)| a * xs[k - 1]).collect::<CompensatedSum>().value())
            .unwrap_or(0.0),
    };
    finite(i, v)
}

/// `(A_1(x), ..., A_upto(x))`. Cesàro and Riesz rows reuse one running
/// accumulator, which yields exactly the per-row [`apply_row`] values.
pub fn transform_prefix(a: &SummabilityMatrix, x: &SequencePrefix, upto: usize) -> Result<SequencePrefix> {
    if upto == 0 || upto > x.len() {
        return Err(Error::OutOfRange {
            index: upto,
            max: x.len(),
        });
    }
    let xs = x.values();
    let values = match &a.kind {
        MatrixKind::Identity => xs[..upto].to_vec(),
        MatrixKind::Cesaro => {
            let mut s = CompensatedSum::new();
            (1..=upto)
                .map(|i| {
                    s.add(xs[i - 1]);
                    finite(i, s.value() / i as f64)
                })
                .collect::<Result<_>>()?
        }
        MatrixKind::Riesz(p) => {
            a.check_riesz_row(p, upto)?;
            let mut num = CompensatedSum::new();
            let mut den = CompensatedSum::new();
            (1..=upto)
                .map(|i| {
                    num.add(p[i - 1] * xs[i - 1]);
                    den.add(p[i - 1]);
                    finite(i, num.value() / den.value())
                })
                .collect::<Result<_>>()?
        }
        MatrixKind::Explicit(_) => (1..=upto).map(|i| apply_row(a, x, i)).collect::<Result<_>>()?,
    };
    SequencePrefix::new(values, format!("{}({})", a.label, x.label()))
}

/// Silverman-Toeplitz style diagnostics at truncation. Advisory only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub rows: usize,
    /// `sup_i Σ_k |a_ik|` over the checked rows.
    pub sup_abs_row_sum: f64,
    /// Row attaining the supremum.
    pub sup_row: usize,
    /// `Σ_k a_ik` for the last row.
    pub last_row_sum: f64,
    /// `max |Σ_k a_ik - 1|` over the last third of rows.
    pub tail_row_sum_deviation: f64,
    /// `|a_ik|` for the first few columns, at the middle row and the last row.
    pub column_entries_mid: Vec<f64>,
    pub column_entries_last: Vec<f64>,
    pub rows_sum_to_one: bool,
    pub columns_vanish: bool,
}

/// Checks rows `1..=upto`. Cost is the total row support, so Cesàro and
/// Riesz matrices are quadratic in `upto`.
pub fn regularity_check(a: &SummabilityMatrix, upto: usize) -> Result<RegularityReport> {
    if upto == 0 {
        return Err(Error::Invalid("regularity check needs at least one row".into()));
    }
    const COLUMNS: usize = 5;
    let tail_from = upto - upto.div_ceil(3) + 1;
    let mid = upto.div_ceil(2);
    let mut sup = (0.0, 1);
    let mut last_sum = 0.0;
    let mut tail_dev: f64 = 0.0;
    let mut col_mid = vec![0.0; COLUMNS];
    let mut col_last = vec![0.0; COLUMNS];
    for i in 1..=upto {
        let row = a.row(i)?;
        let abs: f64 = row.iter().map(|&(_, v)| v.abs()).collect::<CompensatedSum>().value();
        let sum: f64 = row.iter().map(|&(_, v)| v).collect::<CompensatedSum>().value();
        if abs > sup.0 {
            sup = (abs, i);
        }
        if i >= tail_from {
            tail_dev = tail_dev.max((sum - 1.0).abs());
        }
        if i == mid || i == upto {
            let target = if i == upto { &mut col_last } else { &mut col_mid };
            for &(k, v) in row.iter().filter(|(k, _)| *k <= COLUMNS) {
                target[k - 1] = v.abs();
            }
        }
        last_sum = sum;
    }
    let columns_vanish = col_last
        .iter()
        .zip(&col_mid)
        .all(|(l, m)| *l == 0.0 || (*l < *m && *l <= 2.0 / upto as f64));
    Ok(RegularityReport {
        rows: upto,
        sup_abs_row_sum: sup.0,
        sup_row: sup.1,
        last_row_sum: last_sum,
        tail_row_sum_deviation: tail_dev,
        column_entries_mid: col_mid,
        column_entries_last: col_last,
        rows_sum_to_one: tail_dev <= 1e-9,
        columns_vanish,
    })
}

/// Parses `identity`, `cesaro`, `riesz:file=PATH` (one weight per line) or
/// `file:PATH` (CSV with header `i,k,a`).
pub fn make_matrix(spec: &str) -> Result<SummabilityMatrix> {
    let spec = spec.trim();
    let wrap = |e: Error| Error::spec(spec, e.to_string());
    match split_spec(spec) {
        ("identity", None) => Ok(SummabilityMatrix::identity()),
        ("cesaro", None) => Ok(SummabilityMatrix::cesaro()),
        ("riesz", Some(arg)) => {
            let opts = parse_options(arg);
            match opts.as_slice() {
                [(k, path)] if k == "file" => {
                    let w = read_lines::<f64>(Path::new(path))?;
                    SummabilityMatrix::riesz(w).map_err(wrap)
                }
                _ => Err(Error::spec(spec, "expected `riesz:file=PATH`")),
            }
        }
        ("file", Some(path)) => read_matrix_csv(Path::new(path)),
        _ => Err(Error::spec(spec, "unknown matrix spec")),
    }
}

fn read_matrix_csv(path: &Path) -> Result<SummabilityMatrix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.replace(' ', "") == "i,k,a" => {}
        Some((n, _)) => return Err(err(n + 1, "expected header `i,k,a`".into())),
        None => return Err(err(1, "empty matrix file".into())),
    }
    let mut entries = Vec::new();
    for (n, line) in lines {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let [i, k, a] = cols.as_slice() else {
            return Err(err(n + 1, "expected `i,k,a`".into()));
        };
        let i: usize = i.parse().map_err(|_| err(n + 1, format!("bad row index `{i}`")))?;
        let k: usize = k.parse().map_err(|_| err(n + 1, format!("bad column index `{k}`")))?;
        let a: f64 = a.parse().map_err(|_| err(n + 1, format!("bad entry `{a}`")))?;
        entries.push((i, k, a));
    }
    SummabilityMatrix::explicit(entries).map_err(|e| err(0, e.to_string()))
}
