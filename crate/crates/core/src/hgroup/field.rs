//! Scalar fields as immutable expression trees with exact jet evaluation.
//!
//! A [`ScalarField`] is a closed expression over the coordinate atoms, the
//! quartic gauge `s`, complex constants, arithmetic, `conj`, reciprocal,
//! the powers `n` and `±1/2`, `exp`, coordinate derivatives, and smooth
//! univariate profiles (used by the cutoff machinery). Evaluation produces
//! a truncated Taylor jet at a point; a derivative node simply evaluates
//! its child one order higher, so arbitrarily nested derivatives stay
//! exact.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::taylor::{CJet, MAX_ORDER};
use super::HPoint;
use crate::{Error, Result};

/// Per-evaluation memo: expression node (by address) and order to jet.
/// Shared subtrees — the normalizing factor appears in nearly every term
/// of the curvature expression — are evaluated once per point.
type EvalCache = HashMap<(usize, usize), CJet>;

/// Chart coordinate axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coord {
    X = 0,
    Y = 1,
    Z = 2,
}

/// A smooth (at least `C²`) univariate function that can report its
/// derivative list at a point, composable into a field.
pub trait SmoothProfile: Send + Sync {
    /// Derivatives `[g(u), g'(u), ..., g^{(k)}(u)]`.
    fn derivs(&self, u: f64, k: usize) -> Vec<f64>;
    /// Short label used in error messages and debug printing.
    fn label(&self) -> String;
}

#[derive(Clone)]
pub(crate) enum Expr {
    Coord(Coord),
    /// Quartic gauge `s = (x²+y²)² + z²`.
    Gauge,
    Const(Complex64),
    Add(ScalarField, ScalarField),
    Sub(ScalarField, ScalarField),
    Mul(ScalarField, ScalarField),
    Div(ScalarField, ScalarField),
    Neg(ScalarField),
    Conj(ScalarField),
    Recip(ScalarField),
    Powi(ScalarField, i32),
    Sqrt(ScalarField),
    InvSqrt(ScalarField),
    Exp(ScalarField),
    Deriv(ScalarField, Coord),
    Profile(Arc<dyn SmoothProfile>, ScalarField),
}

/// An evaluable complex scalar field on the chart.
#[derive(Clone)]
pub struct ScalarField(pub(crate) Arc<Expr>);

impl ScalarField {
    fn wrap(e: Expr) -> Self {
        ScalarField(Arc::new(e))
    }

    pub fn x() -> Self {
        Self::wrap(Expr::Coord(Coord::X))
    }

    pub fn y() -> Self {
        Self::wrap(Expr::Coord(Coord::Y))
    }

    pub fn z() -> Self {
        Self::wrap(Expr::Coord(Coord::Z))
    }

    /// The quartic gauge `s = (x²+y²)² + z²` as an atom.
    pub fn gauge() -> Self {
        Self::wrap(Expr::Gauge)
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Self::wrap(Expr::Const(c.into()))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn i() -> Self {
        Self::constant(Complex64::I)
    }

    pub fn conj(&self) -> Self {
        Self::wrap(Expr::Conj(self.clone()))
    }

    pub fn recip(&self) -> Self {
        Self::wrap(Expr::Recip(self.clone()))
    }

    pub fn powi(&self, n: i32) -> Self {
        Self::wrap(Expr::Powi(self.clone(), n))
    }

    pub fn sqrt(&self) -> Self {
        Self::wrap(Expr::Sqrt(self.clone()))
    }

    pub fn inv_sqrt(&self) -> Self {
        Self::wrap(Expr::InvSqrt(self.clone()))
    }

    pub fn exp(&self) -> Self {
        Self::wrap(Expr::Exp(self.clone()))
    }

    /// Coordinate derivative `∂f/∂coord` as a new field.
    pub fn deriv(&self, coord: Coord) -> Self {
        Self::wrap(Expr::Deriv(self.clone(), coord))
    }

    /// Composition `g(f)` with a smooth univariate profile `g`.
    pub fn profile(&self, g: Arc<dyn SmoothProfile>) -> Self {
        Self::wrap(Expr::Profile(g, self.clone()))
    }

    /// Squared modulus `f · conj(f)` (real-valued).
    pub fn norm_sq(&self) -> Self {
        self.clone() * self.conj()
    }

    /// Evaluates the truncated Taylor jet of the field at `p`.
    pub fn eval_jet(&self, p: HPoint, order: usize) -> Result<CJet> {
        let mut cache = EvalCache::new();
        self.eval_jet_cached(p, order, &mut cache)
    }

    fn eval_jet_cached(&self, p: HPoint, order: usize, cache: &mut EvalCache) -> Result<CJet> {
        let key = (Arc::as_ptr(&self.0) as *const () as usize, order);
        if let Some(hit) = cache.get(&key) {
            return Ok(hit.clone());
        }
        let jet = self.eval_jet_uncached(p, order, cache)?;
        cache.insert(key, jet.clone());
        Ok(jet)
    }

    fn eval_jet_uncached(&self, p: HPoint, order: usize, cache: &mut EvalCache) -> Result<CJet> {
        if order > MAX_ORDER {
            return Err(Error::domain(
                self.node_label(),
                p,
                format!("requested jet order {order} exceeds the supported maximum"),
            ));
        }
        match &*self.0 {
            Expr::Coord(c) => Ok(CJet::coordinate(coord_value(p, *c), *c as usize, order)),
            Expr::Gauge => {
                let x = CJet::coordinate(p.x, 0, order);
                let y = CJet::coordinate(p.y, 1, order);
                let z = CJet::coordinate(p.z, 2, order);
                let r2 = x.mul(&x).add(&y.mul(&y));
                Ok(r2.mul(&r2).add(&z.mul(&z)))
            }
            Expr::Const(c) => Ok(CJet::constant(*c, order)),
            Expr::Add(a, b) => {
                Ok(a.eval_jet_cached(p, order, cache)?
                    .add(&b.eval_jet_cached(p, order, cache)?))
            }
            Expr::Sub(a, b) => {
                Ok(a.eval_jet_cached(p, order, cache)?
                    .sub(&b.eval_jet_cached(p, order, cache)?))
            }
            Expr::Mul(a, b) => {
                Ok(a.eval_jet_cached(p, order, cache)?
                    .mul(&b.eval_jet_cached(p, order, cache)?))
            }
            Expr::Div(a, b) => {
                let den = b.eval_jet_cached(p, order, cache)?;
                self.guard_nonzero(&den, b, p)?;
                Ok(a.eval_jet_cached(p, order, cache)?.mul(&den.recip()))
            }
            Expr::Neg(a) => Ok(a.eval_jet_cached(p, order, cache)?.neg()),
            Expr::Conj(a) => Ok(a.eval_jet_cached(p, order, cache)?.conj()),
            Expr::Recip(a) => {
                let base = a.eval_jet_cached(p, order, cache)?;
                self.guard_nonzero(&base, a, p)?;
                Ok(base.recip())
            }
            Expr::Powi(a, n) => {
                let base = a.eval_jet_cached(p, order, cache)?;
                if *n >= 0 {
                    Ok(base.powi(*n as u32))
                } else {
                    self.guard_nonzero(&base, a, p)?;
                    Ok(base.recip().powi(n.unsigned_abs()))
                }
            }
            Expr::Sqrt(a) => {
                let base = a.eval_jet_cached(p, order, cache)?;
                self.guard_positive_real(&base, a, p)?;
                Ok(base.powf(0.5))
            }
            Expr::InvSqrt(a) => {
                let base = a.eval_jet_cached(p, order, cache)?;
                self.guard_positive_real(&base, a, p)?;
                Ok(base.powf(-0.5))
            }
            Expr::Exp(a) => Ok(a.eval_jet_cached(p, order, cache)?.exp()),
            Expr::Deriv(a, coord) => {
                Ok(a.eval_jet_cached(p, order + 1, cache)?.deriv(*coord as usize))
            }
            Expr::Profile(g, inner) => {
                let base = inner.eval_jet_cached(p, order, cache)?;
                let u = base.value();
                if u.im.abs() > 1e-9 * (1.0 + u.re.abs()) {
                    return Err(Error::domain(
                        g.label(),
                        p,
                        "profile argument must be real-valued",
                    ));
                }
                let derivs: Vec<Complex64> = g
                    .derivs(u.re, order)
                    .into_iter()
                    .map(|d| Complex64::new(d, 0.0))
                    .collect();
                Ok(base.compose(&derivs))
            }
        }
    }

    /// Value of the field at `p`.
    pub fn eval(&self, p: HPoint) -> Result<Complex64> {
        Ok(self.eval_jet(p, 0)?.value())
    }

    /// Value of a real-valued field at `p`; errors if the imaginary
    /// residue is beyond round-off.
    pub fn eval_real(&self, p: HPoint) -> Result<f64> {
        let v = self.eval(p)?;
        if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
            return Err(Error::NumericalInvariant {
                what: "real-valued field evaluation",
                residue: v.im.abs(),
            });
        }
        Ok(v.re)
    }

    fn guard_nonzero(&self, jet: &CJet, node: &ScalarField, p: HPoint) -> Result<()> {
        if jet.value().norm() == 0.0 {
            return Err(Error::domain(
                node.node_label(),
                p,
                "division by zero".to_string(),
            ));
        }
        Ok(())
    }

    fn guard_positive_real(&self, jet: &CJet, node: &ScalarField, p: HPoint) -> Result<()> {
        let v = jet.value();
        if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) || v.re <= 0.0 {
            return Err(Error::domain(
                node.node_label(),
                p,
                format!("half power requires a positive real base, got {v}"),
            ));
        }
        Ok(())
    }

    /// Short label for error messages: the expression truncated to a
    /// readable length.
    pub fn node_label(&self) -> String {
        let full = self.to_string();
        if full.len() > 48 {
            format!("{}…", &full[..47])
        } else {
            full
        }
    }
}

fn coord_value(p: HPoint, c: Coord) -> f64 {
    match c {
        Coord::X => p.x,
        Coord::Y => p.y,
        Coord::Z => p.z,
    }
}

impl std::ops::Add for ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: ScalarField) -> ScalarField {
        ScalarField::wrap(Expr::Add(self, rhs))
    }
}

impl std::ops::Sub for ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: ScalarField) -> ScalarField {
        ScalarField::wrap(Expr::Sub(self, rhs))
    }
}

impl std::ops::Mul for ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: ScalarField) -> ScalarField {
        ScalarField::wrap(Expr::Mul(self, rhs))
    }
}

impl std::ops::Div for ScalarField {
    type Output = ScalarField;
    fn div(self, rhs: ScalarField) -> ScalarField {
        ScalarField::wrap(Expr::Div(self, rhs))
    }
}

impl std::ops::Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        ScalarField::wrap(Expr::Neg(self))
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        match (&*self.0, &*other.0) {
            (Expr::Coord(a), Expr::Coord(b)) => a == b,
            (Expr::Gauge, Expr::Gauge) => true,
            (Expr::Const(a), Expr::Const(b)) => a == b,
            (Expr::Add(a1, a2), Expr::Add(b1, b2))
            | (Expr::Sub(a1, a2), Expr::Sub(b1, b2))
            | (Expr::Mul(a1, a2), Expr::Mul(b1, b2))
            | (Expr::Div(a1, a2), Expr::Div(b1, b2)) => a1 == b1 && a2 == b2,
            (Expr::Neg(a), Expr::Neg(b))
            | (Expr::Conj(a), Expr::Conj(b))
            | (Expr::Recip(a), Expr::Recip(b))
            | (Expr::Sqrt(a), Expr::Sqrt(b))
            | (Expr::InvSqrt(a), Expr::InvSqrt(b))
            | (Expr::Exp(a), Expr::Exp(b)) => a == b,
            (Expr::Powi(a, n), Expr::Powi(b, m)) => n == m && a == b,
            (Expr::Deriv(a, ca), Expr::Deriv(b, cb)) => ca == cb && a == b,
            (Expr::Profile(ga, a), Expr::Profile(gb, b)) => Arc::ptr_eq(ga, gb) && a == b,
            _ => false,
        }
    }
}

fn fmt_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{:?}", c.re)
    } else if c.re == 0.0 {
        format!("{:?}i", c.im)
    } else {
        format!("({:?}+{:?}i)", c.re, c.im)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Expr::Coord(Coord::X) => write!(f, "x"),
            Expr::Coord(Coord::Y) => write!(f, "y"),
            Expr::Coord(Coord::Z) => write!(f, "z"),
            Expr::Gauge => write!(f, "s"),
            Expr::Const(c) => write!(f, "{}", fmt_complex(*c)),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Conj(a) => write!(f, "conj({a})"),
            Expr::Recip(a) => write!(f, "({a})^-1"),
            Expr::Powi(a, n) => write!(f, "({a})^{n}"),
            Expr::Sqrt(a) => write!(f, "({a})^0.5"),
            Expr::InvSqrt(a) => write!(f, "({a})^-0.5"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Deriv(a, c) => {
                let axis = match c {
                    Coord::X => "x",
                    Coord::Y => "y",
                    Coord::Z => "z",
                };
                write!(f, "D{axis}[{a}]")
            }
            Expr::Profile(g, a) => write!(f, "{}({a})", g.label()),
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_jet_has_no_derivatives() {
        let f = ScalarField::constant(Complex64::new(2.5, -1.0));
        let jet = f.eval_jet(HPoint::new(0.4, 0.2, -0.3), 2).unwrap();
        assert_eq!(jet.value(), Complex64::new(2.5, -1.0));
        assert_eq!(jet.partial(1, 0, 0), Complex64::ZERO);
        assert_eq!(jet.partial(0, 1, 1), Complex64::ZERO);
    }

    #[test]
    fn gauge_matches_pointwise_formula() {
        let f = ScalarField::gauge();
        for p in [
            HPoint::new(0.3, -0.7, 0.2),
            HPoint::new(1.0, 0.0, 0.0),
            HPoint::ORIGIN,
        ] {
            let (s, _) = crate::hgroup::koranyi_gauge(p);
            assert!((f.eval(p).unwrap().re - s).abs() < 1e-14);
        }
    }

    #[test]
    fn division_by_zero_is_guarded() {
        let f = ScalarField::one() / ScalarField::x();
        let err = f.eval(HPoint::ORIGIN).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
        assert!(f.eval(HPoint::new(2.0, 0.0, 0.0)).is_ok());
    }

    #[test]
    fn sqrt_rejects_negative_base() {
        let f = ScalarField::x().sqrt();
        assert!(f.eval(HPoint::new(-1.0, 0.0, 0.0)).is_err());
        let v = f.eval(HPoint::new(4.0, 0.0, 0.0)).unwrap();
        assert!((v.re - 2.0).abs() < 1e-15 && v.im == 0.0);
    }

    #[test]
    fn nested_derivative_bumps_order() {
        // ∂x ∂x (x³) = 6x, evaluated as a value at x = 2.
        let f = ScalarField::x().powi(3).deriv(Coord::X).deriv(Coord::X);
        let v = f.eval(HPoint::new(2.0, 0.0, 0.0)).unwrap();
        assert!((v.re - 12.0).abs() < 1e-12);
    }

    #[test]
    fn display_roundtrip_is_stable() {
        let f = (ScalarField::x() + ScalarField::constant(Complex64::new(0.0, 0.5)))
            * ScalarField::y().powi(2);
        assert_eq!(f.to_string(), "((x + 0.5i) * (y)^2)");
    }
}
