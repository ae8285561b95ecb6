//! Small numerical kernels shared by the diagnostics.

/// Neumaier-compensated running sum.
///
/// The state after adding `x_1..x_i` depends only on those terms and their
/// order, so a running accumulator and a fresh per-row accumulator fed the
/// same terms produce bit-identical totals.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimisation of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `rel_tol * max(1, |x|)` or after
/// `max_iter` shrink steps. Returns `(argmin, min, iterations)`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, f64, usize) {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while iters < max_iter && (hi - lo) > rel_tol * c.abs().max(1.0) {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        iters += 1;
    }
    if fc <= fd {
        (c, fc, iters)
    } else {
        (d, fd, iters)
    }
}

/// Logarithmically spaced grid with `per_decade` points per decade on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && per_decade > 0);
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round().max(1.0) as usize;
    let (a, b) = (lo.log10(), hi.log10());
    (0..=steps)
        .map(|j| 10f64.powf(a + (b - a) * j as f64 / steps as f64))
        .collect()
}

/// `x^alpha` with the `alpha == 1` case kept exact.
pub(crate) fn pow_exact(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x
    } else {
        x.powf(alpha)
    }
}

/// Relative slack used by the sampled axiom and inequality checks.
pub(crate) fn slack(rhs: f64) -> f64 {
    1e-12 * (1.0 + rhs.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut terms = vec![1e16];
        terms.extend(std::iter::repeat(1.0).take(1000));
        terms.push(-1e16);
        assert_eq!(compensated_sum(terms.iter().copied()), 1000.0);
        assert_ne!(terms.iter().sum::<f64>(), 1000.0);
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx, _) = golden_section(|x| (x - 0.3) * (x - 0.3) + 2.0, -1.0, 4.0, 1e-12, 500);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_grid_spans_endpoints() {
        let g = log_grid(1e-6, 1e6, 4);
        assert_eq!(g.len(), 49);
        assert!((g[0] - 1e-6).abs() < 1e-18);
        assert!((g[48] - 1e6).abs() < 1e-6);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
