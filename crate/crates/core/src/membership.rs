//! Membership diagnostics for the lacunary spaces `w_θ^α(A, 𝓜)` and
//! `f_θ^α(A, 𝓜)`.
//!
//! Everything is driven by the pointwise scores
//! `s_i = M_i(|A_i(x) - L| / ρ^{(i)})`. The `w` test looks at block
//! residuals `t_r = h_r^{-α} Σ_{J_r} s_i`; the statistical test comes in two
//! readings: per-block exceedance counts, or the f-density of the global
//! exceedance set.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::density::{checkpoints, f_density, DensityEstimate, DensityVerdict};
use crate::error::{Error, Result};
use crate::matrix::{transform_prefix, SummabilityMatrix};
use crate::modulus::Modulus;
use crate::numeric::{pow_exact, CompensatedSum};
use crate::orlicz::{OrliczFamily, RhoSchedule};
use crate::sequence::{IndexSet, LacunaryScheme, SequencePrefix};

/// Fewest blocks a trail verdict is drawn from.
pub const MIN_BLOCKS: usize = 6;

const BLOCK_READING: &str = "statistical test read per block: c_r counts i in J_r with s_i >= eps";
const GLOBAL_READING: &str =
    "statistical test read globally: f-density of {i <= N : s_i > eps}; may disagree with the per-block reading";

#[derive(Debug, Clone)]
pub struct SpaceParams {
    pub matrix: SummabilityMatrix,
    pub family: OrliczFamily,
    pub scheme: LacunaryScheme,
    pub alpha: f64,
    pub rho: RhoSchedule,
    /// Candidate limit `L`.
    pub limit: f64,
    /// Exceedance threshold.
    pub eps: f64,
}

impl SpaceParams {
    /// Identity matrix, `α = 1`, `ρ ≡ 1`, `L = 0`, `eps = 0.1`.
    pub fn new(scheme: LacunaryScheme, family: OrliczFamily) -> Self {
        SpaceParams {
            matrix: SummabilityMatrix::identity(),
            family,
            scheme,
            alpha: 1.0,
            rho: RhoSchedule::Constant(1.0),
            limit: 0.0,
            eps: 0.1,
        }
    }

    pub fn with_limit(mut self, limit: f64) -> Self {
        self.limit = limit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Invalid(format!("eps must be > 0, got {}", self.eps)));
        }
        if !self.limit.is_finite() {
            return Err(Error::Invalid(format!("limit must be finite, got {}", self.limit)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Member,
    NonMember,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipMode {
    W,
    FstatBlock,
    FstatGlobal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub mode: MembershipMode,
    pub verdict: Verdict,
    pub limit: f64,
    pub eps: f64,
    pub tol: f64,
    pub block_lengths: Vec<usize>,
    /// `t_r`, empty when the scheme is not covered (global mode only).
    pub block_residuals: Vec<f64>,
    /// `c_r`, same coverage as `block_residuals`.
    pub exceedance_ratios: Vec<f64>,
    /// First block (1-based) of the final-third window the verdict reads.
    pub tail_start_block: Option<usize>,
    /// `|E|` for the global exceedance set.
    pub exceedances: Option<usize>,
    pub f_density: Option<DensityEstimate>,
    pub notes: Vec<String>,
}

fn scores_upto(x: &SequencePrefix, p: &SpaceParams, upto: usize) -> Result<Vec<f64>> {
    p.validate()?;
    let a = transform_prefix(&p.matrix, x, upto)?;
    a.values()
        .iter()
        .enumerate()
        .map(|(k, &ai)| {
            let i = k + 1;
            let s = p.family.eval(i, (ai - p.limit).abs() / p.rho.at(i)?)?;
            if s.is_finite() {
                Ok(s)
            } else {
                Err(Error::NonFinite { index: i, value: s })
            }
        })
        .collect()
}

/// `s_i = M_i(|A_i(x) - L| / ρ^{(i)})` for every `i <= N`.
pub fn pointwise_scores(x: &SequencePrefix, p: &SpaceParams) -> Result<SequencePrefix> {
    let s = scores_upto(x, p, x.len())?;
    SequencePrefix::new(s, format!("scores({})", x.label()))
}

/// Scores over `(0, k_R]` only; nothing past the last cut is read.
fn block_scores(x: &SequencePrefix, p: &SpaceParams) -> Result<Vec<f64>> {
    p.scheme.require_within(x.len())?;
    scores_upto(x, p, p.scheme.end())
}

fn residuals_from(scores: &[f64], scheme: &LacunaryScheme, alpha: f64) -> Vec<f64> {
    (1..=scheme.blocks())
        .map(|r| {
            let s: CompensatedSum = scheme.block(r).map(|i| scores[i - 1]).collect();
            s.value() / pow_exact(scheme.h(r) as f64, alpha)
        })
        .collect()
}

fn ratios_from(scores: &[f64], scheme: &LacunaryScheme, alpha: f64, eps: f64) -> Vec<f64> {
    (1..=scheme.blocks())
        .map(|r| {
            let hits = scheme.block(r).filter(|&i| scores[i - 1] >= eps).count();
            hits as f64 / pow_exact(scheme.h(r) as f64, alpha)
        })
        .collect()
}

/// `t_r = h_r^{-α} Σ_{i ∈ J_r} s_i`.
pub fn block_residuals(x: &SequencePrefix, p: &SpaceParams) -> Result<Vec<f64>> {
    Ok(residuals_from(&block_scores(x, p)?, &p.scheme, p.alpha))
}

/// `c_r = h_r^{-α} #{i ∈ J_r : s_i >= eps}`.
pub fn exceedance_ratios(x: &SequencePrefix, p: &SpaceParams) -> Result<Vec<f64>> {
    Ok(ratios_from(&block_scores(x, p)?, &p.scheme, p.alpha, p.eps))
}

/// Final third of `r` blocks, rounded down: blocks 8..=10 out of 10.
pub fn block_window(r: usize) -> usize {
    (r / 3).max(1)
}

/// Member when the final third is `<= tol`; non-member when it stays
/// `>= 2 tol` without dropping by more than `tol` between blocks.
fn trail_verdict(trail: &[f64], tol: f64) -> (Verdict, usize) {
    let start = trail.len() - block_window(trail.len());
    let tail = &trail[start..];
    let verdict = if tail.iter().all(|&t| t <= tol) {
        Verdict::Member
    } else if tail.iter().all(|&t| t >= 2.0 * tol) && tail.windows(2).all(|w| w[1] >= w[0] - tol) {
        Verdict::NonMember
    } else {
        Verdict::Inconclusive
    };
    (verdict, start + 1)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("tolerance must be > 0, got {tol}")))
    }
}

fn block_report(x: &SequencePrefix, p: &SpaceParams, tol: f64, mode: MembershipMode) -> Result<MembershipReport> {
    check_tol(tol)?;
    if p.scheme.blocks() < MIN_BLOCKS {
        return Err(Error::TooFewBlocks {
            have: p.scheme.blocks(),
            need: MIN_BLOCKS,
        });
    }
    let scores = block_scores(x, p)?;
    let t = residuals_from(&scores, &p.scheme, p.alpha);
    let c = ratios_from(&scores, &p.scheme, p.alpha, p.eps);
    let (verdict, tail_start) = trail_verdict(if mode == MembershipMode::W { &t } else { &c }, tol);
    let notes = match mode {
        MembershipMode::FstatBlock => vec![BLOCK_READING.to_string(), GLOBAL_READING.to_string()],
        _ => Vec::new(),
    };
    Ok(MembershipReport {
        mode,
        verdict,
        limit: p.limit,
        eps: p.eps,
        tol,
        block_lengths: p.scheme.lengths(),
        block_residuals: t,
        exceedance_ratios: c,
        tail_start_block: Some(tail_start),
        exceedances: None,
        f_density: None,
        notes,
    })
}

/// `w_θ^α(A, 𝓜)` test on the residual trail `t_r`.
pub fn w_membership(x: &SequencePrefix, p: &SpaceParams, tol: f64) -> Result<MembershipReport> {
    block_report(x, p, tol, MembershipMode::W)
}

/// Statistical test on the per-block exceedance ratios `c_r`.
pub fn fstat_membership_block(x: &SequencePrefix, p: &SpaceParams, tol: f64) -> Result<MembershipReport> {
    block_report(x, p, tol, MembershipMode::FstatBlock)
}

/// Statistical test on the f-density of `E = {i <= N : s_i > eps}`.
///
/// Member when the density estimate converges to at most `tol`, non-member
/// when it converges to at least `2 tol`. Block trails are attached when the
/// scheme fits inside the prefix.
pub fn fstat_membership_global(
    x: &SequencePrefix,
    p: &SpaceParams,
    f: &Modulus,
    tol: f64,
) -> Result<MembershipReport> {
    f.require_unbounded()?;
    check_tol(tol)?;
    let scores = scores_upto(x, p, x.len())?;
    let hits: Vec<usize> = (1..=scores.len()).filter(|&i| scores[i - 1] > p.eps).collect();
    let exceedances = hits.len();
    let set = IndexSet::from_list(hits)?;
    let est = f_density(&set, f, x.len(), tol)?;
    let verdict = match (est.verdict, est.value) {
        (DensityVerdict::Converged, Some(v)) if v <= tol => Verdict::Member,
        (DensityVerdict::Converged, Some(v)) if v >= 2.0 * tol => Verdict::NonMember,
        _ => Verdict::Inconclusive,
    };
    let (t, c) = if p.scheme.end() <= x.len() {
        let s = &scores[..p.scheme.end()];
        (
            residuals_from(s, &p.scheme, p.alpha),
            ratios_from(s, &p.scheme, p.alpha, p.eps),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(MembershipReport {
        mode: MembershipMode::FstatGlobal,
        verdict,
        limit: p.limit,
        eps: p.eps,
        tol,
        block_lengths: p.scheme.lengths(),
        block_residuals: t,
        exceedance_ratios: c,
        tail_start_block: None,
        exceedances: Some(exceedances),
        f_density: Some(est),
        notes: vec![GLOBAL_READING.to_string(), BLOCK_READING.to_string()],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub limit: Option<f64>,
    /// Candidates in the order they were tried.
    pub candidates: Vec<f64>,
}

/// Most populated histogram bins tried as limit candidates.
const MAX_CANDIDATES: usize = 8;

/// Scans histogram modes of `A_i(x)` (bin width `eps`, candidate = median
/// of the bin's values) and returns the first candidate whose global
/// statistical verdict is `member`. `p.limit` is ignored.
pub fn fstat_limit_estimate(x: &SequencePrefix, p: &SpaceParams, f: &Modulus, tol: f64) -> Result<LimitEstimate> {
    f.require_unbounded()?;
    p.validate()?;
    let a = transform_prefix(&p.matrix, x, x.len())?;
    let mut bins: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for &v in a.values() {
        bins.entry((v / p.eps).floor() as i64).or_default().push(v);
    }
    let mut ranked: Vec<(i64, Vec<f64>)> = bins.into_iter().collect();
    // stable sort keeps ascending bin order among equal counts
    ranked.sort_by(|a, b| b.1.len().cmp(&a.1.len()));
    let mut candidates = Vec::new();
    for (_, mut values) in ranked.into_iter().take(MAX_CANDIDATES) {
        values.sort_by(f64::total_cmp);
        let cand = values[(values.len() - 1) / 2];
        candidates.push(cand);
        let q = SpaceParams { limit: cand, ..p.clone() };
        if fstat_membership_global(x, &q, f, tol)?.verdict == Verdict::Member {
            return Ok(LimitEstimate {
                limit: Some(cand),
                candidates,
            });
        }
    }
    Ok(LimitEstimate {
        limit: None,
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyReport {
    pub cauchy: bool,
    pub anchor: Option<usize>,
    /// `A_{N*}(x)` at the accepted anchor.
    pub anchor_value: Option<f64>,
    pub anchors_tried: Vec<usize>,
    pub f_density: Option<DensityEstimate>,
}

/// Looks for an anchor `N*` among the checkpoints (largest first) such that
/// `{i : M_i(|A_i(x) - A_{N*}(x)| / ρ^{(i)}) > eps}` has f-density
/// converging to at most `tol`.
pub fn fstat_cauchy_check(x: &SequencePrefix, p: &SpaceParams, f: &Modulus, tol: f64) -> Result<CauchyReport> {
    f.require_unbounded()?;
    p.validate()?;
    let a = transform_prefix(&p.matrix, x, x.len())?;
    let mut tried = Vec::new();
    for anchor in checkpoints(x.len()).into_iter().rev() {
        tried.push(anchor);
        let value = a.values()[anchor - 1];
        let q = SpaceParams { limit: value, ..p.clone() };
        let rep = fstat_membership_global(x, &q, f, tol)?;
        if rep.verdict == Verdict::Member {
            return Ok(CauchyReport {
                cauchy: true,
                anchor: Some(anchor),
                anchor_value: Some(value),
                anchors_tried: tried,
                f_density: rep.f_density,
            });
        }
    }
    Ok(CauchyReport {
        cauchy: false,
        anchor: None,
        anchor_value: None,
        anchors_tried: tried,
        f_density: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessProbe {
    pub hypothesis_met: bool,
    /// Why the hypothesis failed, if it did.
    pub reason: Option<String>,
    pub bounded: bool,
    /// `max |h_r^{1-α} - 1|` over the final third of blocks.
    pub ratio_deviation: f64,
    pub block_maxima: Vec<f64>,
    pub block_verdict: Option<Verdict>,
    pub w_verdict: Option<Verdict>,
    pub block_trail: Vec<f64>,
    pub w_trail: Vec<f64>,
    /// `Some(w ∈ {member, inconclusive})` when the block verdict is member.
    pub inclusion_holds: Option<bool>,
}

/// Empirical check that for bounded `x` (and `h_r / h_r^α -> 1`) the
/// per-block statistical test implies the `w` test.
///
/// A prefix cannot prove boundedness; `x` is treated as unbounded when the
/// per-block maxima of `|x_i|` are nondecreasing over the final third and at
/// least double across it.
pub fn boundedness_inclusion_probe(x: &SequencePrefix, p: &SpaceParams, tol: f64) -> Result<BoundednessProbe> {
    check_tol(tol)?;
    p.validate()?;
    p.scheme.require_within(x.len())?;
    let scheme = &p.scheme;
    let maxima: Vec<f64> = (1..=scheme.blocks())
        .map(|r| scheme.block(r).map(|i| x.values()[i - 1].abs()).fold(0.0, f64::max))
        .collect();
    let start = maxima.len() - block_window(maxima.len());
    let tail = &maxima[start..];
    let last = tail[tail.len() - 1];
    let growing = tail.windows(2).all(|w| w[1] >= w[0]) && last > 0.0 && last >= 2.0 * tail[0];
    let bounded = maxima.iter().all(|m| m.is_finite()) && !growing;
    let ratio_deviation = (start + 1..=scheme.blocks())
        .map(|r| (pow_exact(scheme.h(r) as f64, 1.0 - p.alpha) - 1.0).abs())
        .fold(0.0, f64::max);
    let reason = if !bounded {
        Some(format!(
            "sequence looks unbounded: block maxima grow from {} to {last} over the final third",
            tail[0]
        ))
    } else if ratio_deviation > tol {
        Some(format!("h_r / h_r^alpha deviates from 1 by {ratio_deviation} on the final third"))
    } else {
        None
    };
    let mut probe = BoundednessProbe {
        hypothesis_met: reason.is_none(),
        reason,
        bounded,
        ratio_deviation,
        block_maxima: maxima,
        block_verdict: None,
        w_verdict: None,
        block_trail: Vec::new(),
        w_trail: Vec::new(),
        inclusion_holds: None,
    };
    if probe.hypothesis_met {
        let b = fstat_membership_block(x, p, tol)?;
        let w = w_membership(x, p, tol)?;
        probe.inclusion_holds = (b.verdict == Verdict::Member).then_some(w.verdict != Verdict::NonMember);
        probe.block_verdict = Some(b.verdict);
        probe.w_verdict = Some(w.verdict);
        probe.block_trail = b.exceedance_ratios;
        probe.w_trail = w.block_residuals;
    }
    Ok(probe)
}
