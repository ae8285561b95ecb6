//! Natural density and f-density estimation over prefixes.
//!
//! Ratios are sampled at geometric checkpoints `n = ceil(N / 2^j)`, so the
//! trail is dense in the tail where the limit lives. A limit "exists" at
//! truncation when the ratios over the last third of checkpoints spread by at
//! most `tol`. Estimates are never certificates: every report carries the raw
//! trail it was derived from.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modulus::Modulus;
use crate::numeric::slack;
use crate::sequence::{IndexSet, SequencePrefix};

/// Smallest truncation accepted by the estimators.
pub const MIN_TRUNCATION: usize = 100;
/// Checkpoints below this are not sampled.
const MIN_CHECKPOINT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityVerdict {
    Converged,
    /// Tail spread above `tol` and not shrinking.
    Oscillating,
    /// Tail spread above `tol` but still shrinking.
    Undetermined,
}

/// Correction term `g(n)` of the tail model `ratio(n) ≈ a + b g(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailModel {
    Constant,
    Inverse,
    InverseSqrt,
    InverseQuarterRoot,
    InverseLog,
    /// No element of the set falls in the tail window: treated as finite,
    /// whose f-density is 0 for every unbounded `f`.
    Finite,
}

impl TailModel {
    const ALL: [TailModel; 5] = [
        TailModel::Constant,
        TailModel::Inverse,
        TailModel::InverseSqrt,
        TailModel::InverseQuarterRoot,
        TailModel::InverseLog,
    ];

    fn basis(self, n: f64) -> f64 {
        match self {
            TailModel::Constant => 0.0,
            TailModel::Inverse => 1.0 / n,
            TailModel::InverseSqrt => 1.0 / n.sqrt(),
            TailModel::InverseQuarterRoot => 1.0 / n.sqrt().sqrt(),
            TailModel::InverseLog => 1.0 / n.ln_1p(),
            TailModel::Finite => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub checkpoints: Vec<usize>,
    pub ratios: Vec<f64>,
    pub final_ratio: f64,
    /// Limit estimate; `None` unless the verdict is `converged`.
    pub value: Option<f64>,
    pub verdict: DensityVerdict,
    /// Max pairwise spread of the ratios in the tail window.
    pub tail_spread: f64,
    /// Index into `checkpoints` where the tail window starts.
    pub tail_start: usize,
    pub tol: f64,
    /// Tail model used for extrapolation (f-density only).
    pub model: Option<TailModel>,
}

impl DensityEstimate {
    pub fn converged_to_at_most(&self, bound: f64) -> bool {
        self.verdict == DensityVerdict::Converged && self.value.is_some_and(|v| v <= bound)
    }
}

/// Geometric checkpoints `ceil(n / 2^j) >= 10`, ascending and deduplicated.
pub fn checkpoints(n: usize) -> Vec<usize> {
    let mut pts = Vec::new();
    let mut j = 0u32;
    while j < usize::BITS {
        let c = n.div_ceil(1usize << j);
        if c < MIN_CHECKPOINT {
            break;
        }
        pts.push(c);
        j += 1;
    }
    pts.reverse();
    pts.dedup();
    pts
}

/// Length of the tail window: the last `ceil(m/3)` of `m` trail entries.
pub fn tail_len(m: usize) -> usize {
    m.div_ceil(3)
}

fn spread(xs: &[f64]) -> f64 {
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if xs.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

fn validate(n: usize, tol: f64) -> Result<()> {
    if n < MIN_TRUNCATION {
        return Err(Error::TruncationTooSmall {
            have: n,
            need: MIN_TRUNCATION,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be > 0, got {tol}")));
    }
    Ok(())
}

fn diagnose(checkpoints: Vec<usize>, ratios: Vec<f64>, tol: f64) -> DensityEstimate {
    let m = ratios.len();
    let w = tail_len(m);
    let tail_start = m - w;
    let tail_spread = spread(&ratios[tail_start..]);
    let verdict = if tail_spread <= tol {
        DensityVerdict::Converged
    } else {
        let prev = spread(&ratios[tail_start.saturating_sub(w)..tail_start]);
        if tail_spread >= 0.5 * prev {
            DensityVerdict::Oscillating
        } else {
            DensityVerdict::Undetermined
        }
    };
    DensityEstimate {
        final_ratio: *ratios.last().expect("at least one checkpoint"),
        checkpoints,
        ratios,
        value: None,
        verdict,
        tail_spread,
        tail_start,
        tol,
        model: None,
    }
}

/// `|A(n)| / n` at geometric checkpoints; the value is the final ratio.
pub fn natural_density(set: &IndexSet, n: usize, tol: f64) -> Result<DensityEstimate> {
    validate(n, tol)?;
    let pts = checkpoints(n);
    let ratios = pts.iter().map(|&c| set.count(c) as f64 / c as f64).collect();
    let mut est = diagnose(pts, ratios, tol);
    if est.verdict == DensityVerdict::Converged {
        est.value = Some(est.final_ratio);
    }
    Ok(est)
}

/// `f(|A(n)|) / f(n)` at geometric checkpoints.
///
/// Ratios of slowly varying moduli converge like `1/ln n`, so when the tail
/// is stable the value is extrapolated: each [`TailModel`] is least-squares
/// fitted on the tail window and the best fit's intercept (clamped to
/// `[0, 1]`) is reported. A set with no element inside the tail window is
/// treated as finite: `f(c)/f(n) -> 0`, however slowly the ratios decay.
pub fn f_density(set: &IndexSet, f: &Modulus, n: usize, tol: f64) -> Result<DensityEstimate> {
    f.require_unbounded()?;
    validate(n, tol)?;
    let pts = checkpoints(n);
    let ratios = pts
        .iter()
        .map(|&c| (f.eval(set.count(c) as f64) / f.eval(c as f64)).clamp(0.0, 1.0))
        .collect();
    let mut est = diagnose(pts, ratios, tol);
    if set.count(est.checkpoints[est.tail_start]) == set.count(n) {
        est.verdict = DensityVerdict::Converged;
        est.model = Some(TailModel::Finite);
        est.value = Some(0.0);
    } else if est.verdict == DensityVerdict::Converged {
        let (model, value) = extrapolate(&est.checkpoints[est.tail_start..], &est.ratios[est.tail_start..]);
        est.model = Some(model);
        est.value = Some(value);
    }
    Ok(est)
}

fn extrapolate(ns: &[usize], rs: &[f64]) -> (TailModel, f64) {
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let r_bar = mean(rs);
    let mut best = (TailModel::Constant, r_bar, rs.iter().map(|r| (r - r_bar).powi(2)).sum::<f64>());
    for model in TailModel::ALL.into_iter().skip(1) {
        let g: Vec<f64> = ns.iter().map(|&n| model.basis(n as f64)).collect();
        let g_bar = mean(&g);
        let sgg: f64 = g.iter().map(|x| (x - g_bar).powi(2)).sum();
        if sgg == 0.0 {
            continue;
        }
        let sgr: f64 = g.iter().zip(rs).map(|(x, r)| (x - g_bar) * (r - r_bar)).sum();
        let b = sgr / sgg;
        let a = r_bar - b * g_bar;
        let sse: f64 = g.iter().zip(rs).map(|(x, r)| (r - a - b * x).powi(2)).sum();
        if sse < best.2 {
            best = (model, a, sse);
        }
    }
    (best.0, best.1.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplementViolation {
    pub n: usize,
    /// `f(n)`
    pub lhs: f64,
    /// `f(|A(n)|) + f(|(N \ A)(n)|)`
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplementCheck {
    pub checked: usize,
    pub passed: bool,
    pub violations: usize,
    pub first_violation: Option<ComplementViolation>,
}

/// Scans `f(n) <= f(|A(n)|) + f(|(N \ A)(n)|)` for every `n <= N` with
/// `1e-12` slack. Violations are reported, never raised.
pub fn complement_inequality_check(set: &IndexSet, f: &Modulus, n: usize) -> ComplementCheck {
    let counts = set.prefix_counts(n);
    let mut violations = 0;
    let mut first = None;
    for (k, &c) in counts.iter().enumerate() {
        let m = k + 1;
        let lhs = f.eval(m as f64);
        let rhs = f.eval(c as f64) + f.eval((m - c) as f64);
        if lhs > rhs + 1e-12 {
            violations += 1;
            first.get_or_insert(ComplementViolation { n: m, lhs, rhs });
        }
    }
    ComplementCheck {
        checked: n,
        passed: violations == 0,
        violations,
        first_violation: first,
    }
}

/// `{i <= N : s_i > eps}` as an explicit finite set.
pub fn exceedance_set(scores: &SequencePrefix, eps: f64) -> Result<IndexSet> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps must be > 0, got {eps}")));
    }
    let idx = scores
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > eps)
        .map(|(k, _)| k + 1)
        .collect();
    IndexSet::from_list(idx)
}

/// f-density against natural density on the same set.
///
/// `implied` is `None` when the f-density estimate is not `<= tol`;
/// otherwise it records whether the natural-density final ratio is within
/// `natural_bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicationCheck {
    pub f_density: DensityEstimate,
    pub natural: DensityEstimate,
    pub natural_bound: f64,
    pub implied: Option<bool>,
}

pub fn density_implication_check(
    set: &IndexSet,
    f: &Modulus,
    n: usize,
    tol: f64,
    natural_bound: f64,
) -> Result<ImplicationCheck> {
    let fd = f_density(set, f, n, tol)?;
    let nd = natural_density(set, n, tol)?;
    let implied = fd
        .converged_to_at_most(tol)
        .then(|| nd.final_ratio <= natural_bound + slack(natural_bound));
    Ok(ImplicationCheck {
        f_density: fd,
        natural: nd,
        natural_bound,
        implied,
    })
}
