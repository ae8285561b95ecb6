//! Modulus functions: `f(0) = 0`, subadditive, increasing, right-continuous at 0.

use std::fmt;
use std::sync::Arc;

use crate::axioms::{self, AxiomReport};
use crate::error::{Error, Result};
use crate::sequence::{parse_num, split_spec};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ModulusKind {
    Identity,
    Log1p,
    /// `x^p`, `0 < p <= 1`.
    Power(f64),
    /// `x / (1 + x)`.
    Bounded,
    Custom(ScalarFn),
}

#[derive(Clone)]
pub struct Modulus {
    kind: ModulusKind,
    name: String,
    unbounded: bool,
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modulus")
            .field("name", &self.name)
            .field("unbounded", &self.unbounded)
            .finish()
    }
}

impl Modulus {
    pub fn identity() -> Self {
        Self::new(ModulusKind::Identity, "id", true)
    }

    pub fn log1p() -> Self {
        Self::new(ModulusKind::Log1p, "log1p", true)
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Invalid(format!(
                "pow:p needs 0 < p <= 1 (subadditivity fails otherwise), got {p}"
            )));
        }
        Ok(Self::new(ModulusKind::Power(p), format!("pow:{p}"), true))
    }

    pub fn bounded() -> Self {
        Self::new(ModulusKind::Bounded, "bounded", false)
    }

    /// A user-supplied function. Nothing is verified here; run
    /// [`check_modulus_axioms`] to see whether it actually is a modulus.
    pub fn custom(
        name: impl Into<String>,
        unbounded: bool,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(ModulusKind::Custom(Arc::new(eval)), name, unbounded)
    }

    fn new(kind: ModulusKind, name: impl Into<String>, unbounded: bool) -> Self {
        Modulus {
            kind,
            name: name.into(),
            unbounded,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            ModulusKind::Identity => x,
            ModulusKind::Log1p => x.ln_1p(),
            ModulusKind::Power(p) => {
                if x == 0.0 {
                    0.0
                } else {
                    x.powf(*p)
                }
            }
            ModulusKind::Bounded => x / (1.0 + x),
            ModulusKind::Custom(f) => f(x),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ModulusKind {
        &self.kind
    }

    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }

    pub(crate) fn require_unbounded(&self) -> Result<()> {
        if self.unbounded {
            Ok(())
        } else {
            Err(Error::BoundedModulus(self.name.clone()))
        }
    }
}

/// Parses `id`, `log1p`, `pow:p` or `bounded`.
pub fn make_modulus(spec: &str) -> Result<Modulus> {
    let spec = spec.trim();
    match split_spec(spec) {
        ("id", None) => Ok(Modulus::identity()),
        ("log1p", None) => Ok(Modulus::log1p()),
        ("bounded", None) => Ok(Modulus::bounded()),
        ("pow", Some(p)) => Modulus::power(parse_num(spec, p)?).map_err(|e| Error::spec(spec, e.to_string())),
        _ => Err(Error::spec(spec, "unknown modulus (expected id, log1p, pow:p, bounded)")),
    }
}

/// The built-in moduli that are unbounded, as used by the density tools.
pub fn builtin_unbounded() -> Vec<Modulus> {
    vec![
        Modulus::identity(),
        Modulus::log1p(),
        Modulus::power(0.5).expect("valid exponent"),
    ]
}

/// Samples the modulus axioms on `grid` (all entries must be positive and finite).
///
/// Subadditivity is scanned over grid pairs in order, so the first reported
/// witness is the earliest violating pair. The unboundedness flag is checked
/// only when the modulus claims it.
pub fn check_modulus_axioms(f: &Modulus, grid: &[f64]) -> Result<AxiomReport> {
    validate_grid(grid)?;
    let eval = |x: f64| f.eval(x);
    let mut checks = vec![
        axioms::zero_at_zero(&eval, grid),
        axioms::subadditive(&eval, grid),
        axioms::monotone(&eval, grid),
        axioms::right_continuous(&eval),
    ];
    if f.is_unbounded() {
        checks.push(axioms::unbounded_growth(&eval));
    }
    Ok(AxiomReport {
        subject: f.name().to_string(),
        checks,
    })
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Invalid("axiom grid is empty".into()));
    }
    if let Some(x) = grid.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::Invalid(format!("grid values must be positive and finite, got {x}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{default_grid, Axiom};

    #[test]
    fn builtin_values() {
        assert_eq!(make_modulus("id").unwrap().eval(3.0), 3.0);
        assert_eq!(make_modulus("log1p").unwrap().eval(0.0), 0.0);
        assert_eq!(make_modulus("pow:0.5").unwrap().eval(4.0), 2.0);
        let b = make_modulus("bounded").unwrap();
        assert!(!b.is_unbounded());
        assert_eq!(b.eval(1.0), 0.5);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(make_modulus("pow:0").is_err());
        assert!(make_modulus("pow:1.5").is_err());
        assert!(make_modulus("pow:-1").is_err());
        assert!(make_modulus("pow:abc").is_err());
        assert!(make_modulus("exp").is_err());
    }

    #[test]
    fn identity_passes_small_grid() {
        let r = check_modulus_axioms(&Modulus::identity(), &[1.0, 2.0, 3.0]).unwrap();
        assert!(r.all_passed(), "{r:?}");
    }

    #[test]
    fn square_fails_subadditivity_at_one_one() {
        let sq = Modulus::custom("square", true, |x| x * x);
        let r = check_modulus_axioms(&sq, &[1.0, 2.0, 3.0]).unwrap();
        let c = r.check(Axiom::Subadditive).unwrap();
        assert!(!c.passed);
        let w = c.witness.as_ref().unwrap();
        assert_eq!(w.inputs, vec![1.0, 1.0]);
        assert_eq!((w.lhs, w.rhs), (4.0, 2.0));
    }

    #[test]
    fn sqrt_passes() {
        let r = check_modulus_axioms(&make_modulus("pow:0.5").unwrap(), &[0.1, 1.0, 10.0]).unwrap();
        assert!(r.all_passed(), "{r:?}");
    }

    #[test]
    fn builtins_pass_default_grid() {
        for spec in ["id", "log1p", "pow:0.5", "pow:0.1", "pow:1", "bounded"] {
            let f = make_modulus(spec).unwrap();
            let r = check_modulus_axioms(&f, &default_grid()).unwrap();
            assert!(r.all_passed(), "{spec}: {r:?}");
        }
    }

    #[test]
    fn grid_validation() {
        assert!(check_modulus_axioms(&Modulus::identity(), &[]).is_err());
        assert!(check_modulus_axioms(&Modulus::identity(), &[1.0, -2.0]).is_err());
        assert!(check_modulus_axioms(&Modulus::identity(), &[f64::INFINITY]).is_err());
    }

    #[test]
    fn bounded_stays_below_one() {
        let b = Modulus::bounded();
        assert!(default_grid().iter().all(|&x| b.eval(x) < 1.0));
    }
}
