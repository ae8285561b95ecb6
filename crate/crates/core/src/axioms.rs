//! Sampled axiom checks shared by moduli and Orlicz functions.
//!
//! A pass means "no counterexample on the sampled inputs"; failures carry the
//! witnessing inputs together with both sides of the violated inequality.

use serde::Serialize;

use crate::numeric::{log_grid, slack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    ZeroAtZero,
    Subadditive,
    Convex,
    Monotone,
    RightContinuous,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub inputs: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub subject: String,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, axiom: Axiom) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }

    pub fn passed(&self, axiom: Axiom) -> bool {
        self.check(axiom).is_some_and(|c| c.passed)
    }
}

/// Log-spaced sample grid over `[1e-6, 1e6]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-6, 1e6, 4)
}

fn outcome(axiom: Axiom, witness: Option<Witness>) -> AxiomCheck {
    AxiomCheck {
        axiom,
        passed: witness.is_none(),
        witness,
    }
}

/// `f(0) = 0` exactly and `f(x) > 0` on the grid.
pub(crate) fn zero_at_zero(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> AxiomCheck {
    let f0 = f(0.0);
    let witness = if f0 != 0.0 {
        Some(Witness {
            inputs: vec![0.0],
            lhs: f0,
            rhs: 0.0,
        })
    } else {
        grid.iter().find(|&&x| f(x) <= 0.0).map(|&x| Witness {
            inputs: vec![x],
            lhs: f(x),
            rhs: 0.0,
        })
    };
    outcome(Axiom::ZeroAtZero, witness)
}

/// `f(x + y) <= f(x) + f(y)` over all grid pairs `x <= y`, scanned in grid order.
pub(crate) fn subadditive(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> AxiomCheck {
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    for (a, (&x, &fx)) in grid.iter().zip(&values).enumerate() {
        for (&y, &fy) in grid[a..].iter().zip(&values[a..]) {
            let (lhs, rhs) = (f(x + y), fx + fy);
            if lhs > rhs + slack(rhs) {
                return outcome(
                    Axiom::Subadditive,
                    Some(Witness {
                        inputs: vec![x, y],
                        lhs,
                        rhs,
                    }),
                );
            }
        }
    }
    outcome(Axiom::Subadditive, None)
}

/// Midpoint convexity over all pairs from `{0} ∪ grid`.
pub(crate) fn midpoint_convex(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> AxiomCheck {
    let mut pts = Vec::with_capacity(grid.len() + 1);
    pts.push(0.0);
    pts.extend(grid.iter().copied().filter(|&x| x != 0.0));
    let values: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let (s, t) = (pts[a], pts[b]);
            let lhs = f(0.5 * (s + t));
            let rhs = 0.5 * (values[a] + values[b]);
            if lhs > rhs + slack(rhs) {
                return outcome(
                    Axiom::Convex,
                    Some(Witness {
                        inputs: vec![s, t],
                        lhs,
                        rhs,
                    }),
                );
            }
        }
    }
    outcome(Axiom::Convex, None)
}

/// `f` nondecreasing along the sorted grid.
pub(crate) fn monotone(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> AxiomCheck {
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let witness = sorted.windows(2).find_map(|w| {
        let (a, b) = (f(w[0]), f(w[1]));
        (a > b + slack(b)).then(|| Witness {
            inputs: vec![w[0], w[1]],
            lhs: a,
            rhs: b,
        })
    });
    outcome(Axiom::Monotone, witness)
}

/// `f(10^-k) -> 0`: passes when some `f(10^-k) <= 1e-6` with `k <= 12`, or
/// when the tail decays geometrically (last three successive ratios `<= 0.99`).
pub(crate) fn right_continuous(f: &dyn Fn(f64) -> f64) -> AxiomCheck {
    let tail: Vec<f64> = (1..=12).map(|k| f(10f64.powi(-k))).collect();
    let reaches = tail.iter().any(|&v| v <= 1e-6);
    let decays = tail.windows(2).rev().take(3).all(|w| w[0] > 0.0 && w[1] <= 0.99 * w[0]);
    let witness = (!reaches && !decays).then(|| Witness {
        inputs: vec![1e-12],
        lhs: tail[11],
        rhs: 1e-6,
    });
    outcome(Axiom::RightContinuous, witness)
}

/// `f(10^k)` strictly increasing for `k = 0..=15` (or until it saturates at
/// +inf) and `f(1e15) >= 2 f(1e5)`, so flat-topped functions are caught even
/// while they still creep upward in floating point.
pub(crate) fn unbounded_growth(f: &dyn Fn(f64) -> f64) -> AxiomCheck {
    let mut values = vec![f(1.0)];
    for k in 1..=15 {
        let prev = values[k - 1];
        if prev == f64::INFINITY {
            return outcome(Axiom::Unbounded, None);
        }
        let x = 10f64.powi(k as i32);
        let cur = f(x);
        if !(cur > prev) {
            return outcome(
                Axiom::Unbounded,
                Some(Witness {
                    inputs: vec![x / 10.0, x],
                    lhs: prev,
                    rhs: cur,
                }),
            );
        }
        values.push(cur);
    }
    let witness = (values[15] < 2.0 * values[5]).then(|| Witness {
        inputs: vec![1e5, 1e15],
        lhs: values[5],
        rhs: values[15],
    });
    outcome(Axiom::Unbounded, witness)
}
