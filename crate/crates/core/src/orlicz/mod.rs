//! Orlicz and Musielak-Orlicz functions and the modular `I(x) = Σ_k M_k(|x_k|)`.

mod conjugate;
mod norm;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::axioms::{self, AxiomReport};
use crate::error::{Error, Result};
use crate::modulus::{validate_grid, ScalarFn};
use crate::numeric::CompensatedSum;
use crate::sequence::{parse_num, parse_options, read_lines, split_spec, SequencePrefix};

pub use conjugate::{complementary, delta2_check, ComplementaryResult, Delta2Report, Delta2Witness};
pub use norm::{
    luxemburg_norm, ntheta_norm, orlicz_norm, Attainment, LuxemburgResult, OrliczNormResult,
};

#[derive(Clone)]
pub enum Shape {
    /// `t^p`, `p >= 1`.
    Power(f64),
    /// `e^t - 1`.
    ExpM1,
    Custom(ScalarFn),
}

/// `M(t) = scale * shape(t)`.
#[derive(Clone)]
pub struct OrliczFn {
    shape: Shape,
    scale: f64,
    name: String,
}

impl fmt::Debug for OrliczFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrliczFn({})", self.name)
    }
}

impl OrliczFn {
    pub fn linear() -> Self {
        Self::new(Shape::Power(1.0), "linear")
    }

    pub fn poly(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Invalid(format!("poly:p needs p >= 1 (convexity), got {p}")));
        }
        Ok(Self::new(Shape::Power(p), format!("poly:{p}")))
    }

    pub fn explog() -> Self {
        Self::new(Shape::ExpM1, "explog")
    }

    /// Arbitrary function; run [`check_orlicz_axioms`] to vet it.
    pub fn custom(name: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(Shape::Custom(Arc::new(eval)), name)
    }

    fn new(shape: Shape, name: impl Into<String>) -> Self {
        OrliczFn {
            shape,
            scale: 1.0,
            name: name.into(),
        }
    }

    /// `w * M`.
    pub fn scaled(&self, w: f64) -> Self {
        OrliczFn {
            shape: self.shape.clone(),
            scale: self.scale * w,
            name: format!("{w}*{}", self.name),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        let v = match &self.shape {
            Shape::Power(p) if *p == 1.0 => t,
            Shape::Power(p) => {
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(*p)
                }
            }
            Shape::ExpM1 => t.exp_m1(),
            Shape::Custom(f) => f(t),
        };
        if self.scale == 1.0 {
            v
        } else {
            self.scale * v
        }
    }
}

/// Index-dependent weights `w_i` of a weighted family.
#[derive(Debug, Clone)]
pub enum WeightSchedule {
    Table(Arc<[f64]>),
    /// `w_i = 1/i`.
    Reciprocal,
}

#[derive(Clone)]
pub enum FamilyKind {
    Uniform(OrliczFn),
    /// `M_i(t) = w_i * base(t)`.
    Weighted { base: OrliczFn, weights: WeightSchedule },
    /// `M_i` built on demand.
    Indexed(Arc<dyn Fn(usize) -> OrliczFn + Send + Sync>),
}

/// A Musielak-Orlicz family `i -> M_i`.
#[derive(Clone)]
pub struct OrliczFamily {
    kind: FamilyKind,
    name: String,
}

impl fmt::Debug for OrliczFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrliczFamily({})", self.name)
    }
}

impl OrliczFamily {
    pub fn uniform(m: OrliczFn) -> Self {
        let name = m.name().to_string();
        OrliczFamily {
            kind: FamilyKind::Uniform(m),
            name,
        }
    }

    pub fn weighted(base: OrliczFn, weights: WeightSchedule) -> Result<Self> {
        let wname = match &weights {
            WeightSchedule::Table(w) => {
                if let Some((k, v)) = w.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::Invalid(format!("weight w_{} = {v} must be > 0", k + 1)));
                }
                format!("table[{}]", w.len())
            }
            WeightSchedule::Reciprocal => "reciprocal".to_string(),
        };
        let name = format!("weighted(base={},weights={wname})", base.name());
        Ok(OrliczFamily {
            kind: FamilyKind::Weighted { base, weights },
            name,
        })
    }

    pub fn indexed(name: impl Into<String>, build: impl Fn(usize) -> OrliczFn + Send + Sync + 'static) -> Self {
        OrliczFamily {
            kind: FamilyKind::Indexed(Arc::new(build)),
            name: name.into(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    fn undefined(&self, index: usize) -> Error {
        Error::FamilyUndefined {
            family: self.name.clone(),
            index,
        }
    }

    /// `M_i` as a standalone function.
    pub fn at(&self, i: usize) -> Result<OrliczFn> {
        if i == 0 {
            return Err(self.undefined(0));
        }
        match &self.kind {
            FamilyKind::Uniform(m) => Ok(m.clone()),
            FamilyKind::Weighted { base, weights } => match weights {
                WeightSchedule::Table(w) => w.get(i - 1).map(|&w| base.scaled(w)).ok_or_else(|| self.undefined(i)),
                WeightSchedule::Reciprocal => Ok(base.scaled(1.0 / i as f64)),
            },
            FamilyKind::Indexed(build) => Ok(build(i)),
        }
    }

    /// `M_i(t)` without materialising `M_i`.
    pub fn eval(&self, i: usize, t: f64) -> Result<f64> {
        if i == 0 {
            return Err(self.undefined(0));
        }
        match &self.kind {
            FamilyKind::Uniform(m) => Ok(m.eval(t)),
            FamilyKind::Weighted { base, weights } => match weights {
                WeightSchedule::Table(w) => w.get(i - 1).map(|&w| w * base.eval(t)).ok_or_else(|| self.undefined(i)),
                WeightSchedule::Reciprocal => Ok(base.eval(t) / i as f64),
            },
            FamilyKind::Indexed(build) => Ok(build(i).eval(t)),
        }
    }
}

/// Per-index scaling `ρ^{(i)} > 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoSchedule {
    Constant(f64),
    Table(Arc<[f64]>),
}

impl RhoSchedule {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Invalid(format!("rho must be > 0, got {c}")));
        }
        Ok(RhoSchedule::Constant(c))
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("rho table is empty".into()));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Invalid(format!("rho_{} = {v} must be > 0", k + 1)));
        }
        Ok(RhoSchedule::Table(values.into()))
    }

    pub fn at(&self, i: usize) -> Result<f64> {
        match self {
            RhoSchedule::Constant(c) => Ok(*c),
            RhoSchedule::Table(t) => i
                .checked_sub(1)
                .and_then(|k| t.get(k))
                .copied()
                .ok_or(Error::OutOfRange { index: i, max: t.len() }),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            RhoSchedule::Constant(c) => format!("const:{c}"),
            RhoSchedule::Table(t) => format!("table[{}]", t.len()),
        }
    }
}

/// `Σ_k M_k(scale * |x_k|)`, allowed to reach +inf.
pub(crate) fn modular_scaled(family: &OrliczFamily, x: &SequencePrefix, scale: f64) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for (k, &v) in x.values().iter().enumerate() {
        let term = family.eval(k + 1, scale * v.abs())?;
        if term == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        acc.add(term);
    }
    Ok(acc.value())
}

/// `I(x) = Σ_k M_k(|x_k|)`; overflow reports the first index where the
/// running sum leaves the finite range.
pub fn modular(family: &OrliczFamily, x: &SequencePrefix) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for (k, &v) in x.values().iter().enumerate() {
        acc.add(family.eval(k + 1, v.abs())?);
        if !acc.value().is_finite() {
            return Err(Error::ModularOverflow { index: k + 1 });
        }
    }
    Ok(acc.value())
}

/// Samples the Orlicz axioms: `M(0) = 0` with `M > 0` on the grid, midpoint
/// convexity (pairs drawn from `{0} ∪ grid`), monotonicity, right-continuity
/// at 0 and unbounded growth.
pub fn check_orlicz_axioms(m: &OrliczFn, grid: &[f64]) -> Result<AxiomReport> {
    validate_grid(grid)?;
    let eval = |t: f64| m.eval(t);
    Ok(AxiomReport {
        subject: m.name().to_string(),
        checks: vec![
            axioms::zero_at_zero(&eval, grid),
            axioms::midpoint_convex(&eval, grid),
            axioms::monotone(&eval, grid),
            axioms::right_continuous(&eval),
            axioms::unbounded_growth(&eval),
        ],
    })
}

/// Parses `poly:p`, `explog` or `linear`.
pub fn make_orlicz_fn(spec: &str) -> Result<OrliczFn> {
    let spec = spec.trim();
    match split_spec(spec) {
        ("linear", None) => Ok(OrliczFn::linear()),
        ("explog", None) => Ok(OrliczFn::explog()),
        ("poly", Some(p)) => OrliczFn::poly(parse_num(spec, p)?).map_err(|e| Error::spec(spec, e.to_string())),
        _ => Err(Error::spec(spec, "unknown Orlicz function (expected poly:p, explog, linear)")),
    }
}

/// Parses a family: any [`make_orlicz_fn`] spec (uniform family) or
/// `weighted:base=SPEC,weights=file:PATH|reciprocal`.
pub fn make_orlicz_family(spec: &str) -> Result<OrliczFamily> {
    let spec = spec.trim();
    match split_spec(spec) {
        ("weighted", Some(arg)) => {
            let mut base = None;
            let mut weights = None;
            for (k, v) in parse_options(arg) {
                match k.as_str() {
                    "base" => base = Some(make_orlicz_fn(&v)?),
                    "weights" => {
                        weights = Some(match split_spec(&v) {
                            ("reciprocal", None) => WeightSchedule::Reciprocal,
                            ("file", Some(path)) => {
                                let w = read_lines::<f64>(Path::new(path))?;
                                if w.is_empty() {
                                    return Err(Error::spec(spec, "weight file is empty"));
                                }
                                WeightSchedule::Table(w.into())
                            }
                            _ => return Err(Error::spec(spec, "weights must be `file:PATH` or `reciprocal`")),
                        })
                    }
                    other => return Err(Error::spec(spec, format!("unknown option `{other}`"))),
                }
            }
            match (base, weights) {
                (Some(b), Some(w)) => OrliczFamily::weighted(b, w).map_err(|e| Error::spec(spec, e.to_string())),
                _ => Err(Error::spec(spec, "weighted needs base= and weights=")),
            }
        }
        _ => make_orlicz_fn(spec).map(OrliczFamily::uniform),
    }
}

/// Parses `const:c` (or a bare number), or `file:PATH` (one value per line).
pub fn make_rho(spec: &str) -> Result<RhoSchedule> {
    let spec = spec.trim();
    let wrap = |e: Error| Error::spec(spec, e.to_string());
    match split_spec(spec) {
        ("const", Some(c)) => RhoSchedule::constant(parse_num(spec, c)?).map_err(wrap),
        ("file", Some(path)) => RhoSchedule::table(read_lines(Path::new(path))?).map_err(wrap),
        _ => match spec.parse::<f64>() {
            Ok(c) => RhoSchedule::constant(c).map_err(wrap),
            Err(_) => Err(Error::spec(spec, "unknown rho spec (expected const:c, a bare number, or file:PATH)")),
        },
    }
}
