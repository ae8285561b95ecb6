use serde::Serialize;

use super::OrliczFamily;
use crate::error::{Error, Result};
use crate::numeric::golden_section;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplementaryResult {
    pub value: f64,
    pub maximizer: f64,
    /// The objective still increases at `u_max`; `value` is only a lower bound.
    pub divergent: bool,
}

/// `N_i(v) = sup_{u >= 0} (|v| u - M_i(u))` on `[0, u_max]`.
///
/// Coarse grid of `grid + 1` points, then golden-section refinement in the
/// two cells around the best grid point. No derivatives are used, so kinked
/// `M_i` are fine.
pub fn complementary(
    family: &OrliczFamily,
    i: usize,
    v: f64,
    u_max: f64,
    grid: usize,
) -> Result<ComplementaryResult> {
    if !(u_max > 0.0 && u_max.is_finite()) {
        return Err(Error::Invalid(format!("u_max must be > 0, got {u_max}")));
    }
    if grid < 1000 {
        return Err(Error::Invalid(format!("grid needs >= 1000 points, got {grid}")));
    }
    let m = family.at(i)?;
    let v = v.abs();
    let obj = |u: f64| v * u - m.eval(u);
    let step = u_max / grid as f64;
    let (mut jbest, mut best) = (0, obj(0.0));
    for j in 1..=grid {
        let o = obj(j as f64 * step);
        if o > best {
            (jbest, best) = (j, o);
        }
    }
    if jbest == grid && obj(u_max) > obj(u_max - step) {
        return Ok(ComplementaryResult {
            value: obj(u_max),
            maximizer: u_max,
            divergent: true,
        });
    }
    let lo = (jbest.saturating_sub(1)) as f64 * step;
    let hi = ((jbest + 1).min(grid)) as f64 * step;
    let (u, neg, _) = golden_section(|u| -obj(u), lo, hi, 1e-14, 300);
    let (maximizer, value) = if -neg >= best { (u, -neg) } else { (jbest as f64 * step, best) };
    Ok(ComplementaryResult {
        value,
        maximizer,
        divergent: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta2Witness {
    pub k: usize,
    pub u: f64,
    /// `M_k(2u)`
    pub lhs: f64,
    /// `K M_k(u) + c_k`
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta2Report {
    /// No counterexample among the sampled pairs.
    pub passed: bool,
    /// Pairs where `M_k(u) <= a`, i.e. where the inequality applies.
    pub checked: usize,
    pub c_sum: f64,
    pub witness: Option<Delta2Witness>,
}

/// Samples `M_k(2u) <= K M_k(u) + c_k` on every `(k, u)` with `M_k(u) <= a`.
///
/// `c` lists `c_1, c_2, ...` and must cover every sampled `k`; an empty
/// slice means `c ≡ 0`. For each `k`, `u` is scanned from the largest sample
/// down, so a witness sits as close to the `M_k(u) = a` boundary as the
/// samples allow.
pub fn delta2_check(
    family: &OrliczFamily,
    a: f64,
    big_k: f64,
    c: &[f64],
    ks: &[usize],
    us: &[f64],
) -> Result<Delta2Report> {
    if !(a > 0.0 && big_k > 0.0) {
        return Err(Error::Invalid(format!("need a > 0 and K > 0, got a={a}, K={big_k}")));
    }
    if let Some(x) = c.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Invalid(format!("c_k must be finite and >= 0, got {x}")));
    }
    let max_k = ks.iter().copied().max().unwrap_or(0);
    if !c.is_empty() && c.len() < max_k {
        return Err(Error::Invalid(format!("c covers k <= {}, samples reach k = {max_k}", c.len())));
    }
    let mut us: Vec<f64> = us.iter().copied().filter(|u| *u >= 0.0).collect();
    us.sort_by(|a, b| b.total_cmp(a));
    let mut checked = 0;
    for &k in ks {
        let ck = c.get(k.wrapping_sub(1)).copied().unwrap_or(0.0);
        for &u in &us {
            let mu = family.eval(k, u)?;
            if mu > a {
                continue;
            }
            checked += 1;
            let lhs = family.eval(k, 2.0 * u)?;
            let rhs = big_k * mu + ck;
            if lhs > rhs + crate::numeric::slack(rhs) {
                return Ok(Delta2Report {
                    passed: false,
                    checked,
                    c_sum: c.iter().sum(),
                    witness: Some(Delta2Witness { k, u, lhs, rhs }),
                });
            }
        }
    }
    Ok(Delta2Report {
        passed: true,
        checked,
        c_sum: c.iter().sum(),
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::log_grid;
    use crate::orlicz::{make_orlicz_family, OrliczFn};

    fn half_square() -> OrliczFamily {
        OrliczFamily::uniform(OrliczFn::poly(2.0).unwrap().scaled(0.5))
    }

    #[test]
    fn conjugate_of_half_square() {
        let r = complementary(&half_square(), 1, 3.0, 10.0, 1000).unwrap();
        assert!(!r.divergent);
        assert!((r.value - 4.5).abs() < 1e-4, "{r:?}");
        assert!((r.maximizer - 3.0).abs() < 1e-3);
        let neg = complementary(&half_square(), 1, -3.0, 10.0, 1000).unwrap();
        assert_eq!(neg.value, r.value);
    }

    #[test]
    fn conjugate_at_zero() {
        let r = complementary(&half_square(), 7, 0.0, 10.0, 1000).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(!r.divergent);
    }

    #[test]
    fn conjugate_of_linear_diverges() {
        let lin = make_orlicz_family("linear").unwrap();
        let r = complementary(&lin, 1, 2.0, 50.0, 1000).unwrap();
        assert!(r.divergent);
        assert_eq!(r.maximizer, 50.0);
    }

    #[test]
    fn conjugate_rejects_bad_inputs() {
        assert!(complementary(&half_square(), 1, 1.0, 0.0, 1000).is_err());
        assert!(complementary(&half_square(), 1, 1.0, 1.0, 999).is_err());
    }

    #[test]
    fn delta2_examples() {
        let us = log_grid(1e-3, 10.0, 8);
        let ks: Vec<usize> = (1..=8).collect();
        let sq = make_orlicz_family("poly:2").unwrap();
        assert!(delta2_check(&sq, 1.0, 4.0, &[], &ks, &us).unwrap().passed);
        let lin = make_orlicz_family("linear").unwrap();
        assert!(delta2_check(&lin, 1.0, 2.0, &[], &ks, &us).unwrap().passed);

        let powers = OrliczFamily::indexed("t^k", |k| OrliczFn::poly(k as f64).unwrap());
        let r = delta2_check(&powers, 1.0, 4.0, &[], &ks, &us).unwrap();
        assert!(!r.passed);
        let w = r.witness.unwrap();
        assert!(w.k >= 3);
        assert!((w.u - 1.0).abs() < 0.5, "{w:?}");
        assert!(w.lhs > w.rhs);
    }

    #[test]
    fn delta2_with_summable_slack() {
        let us = log_grid(1e-3, 1.0, 8);
        let ks: Vec<usize> = (1..=3).collect();
        let powers = OrliczFamily::indexed("t^k", |k| OrliczFn::poly(k as f64).unwrap());
        // with K = 8 = 2^3 every k <= 3 is satisfied even with c ≡ 0
        let r = delta2_check(&powers, 1.0, 8.0, &[0.5, 0.25, 0.125], &ks, &us).unwrap();
        assert!(r.passed);
        assert_eq!(r.c_sum, 0.875);
        assert!(delta2_check(&powers, 1.0, 8.0, &[0.5], &ks, &us).is_err());
        assert!(delta2_check(&powers, 0.0, 8.0, &[], &ks, &us).is_err());
    }
}
