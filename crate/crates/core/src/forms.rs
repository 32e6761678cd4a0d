//! Differential 1- and 2-forms in the fixed coframe `{Θ, θ̊¹, θ̊¹̄}` with
//! scalar-field coefficients.
//!
//! The coframe is dual to `(T, Z̊₁, Z̊₁̄)`: for every field `f`,
//! `df = (Tf)Θ + (Z̊₁f)θ̊¹ + (Z̊₁̄f)θ̊¹̄`. The structure inputs are
//! `dθ̊¹ = 0` and `dΘ = σ·i·θ̊¹∧θ̊¹̄`; the sign `σ` is pinned by the
//! finite-difference exterior-derivative oracle, not derived on paper.
//!
//! Coordinate conversions (`dx, dy, dz` components) exist only for the
//! oracle; all calculus stays in the moving coframe.

use num_complex::Complex64;

use crate::hgroup::{frame_deriv, FrameDir, HPoint, ScalarField};
use crate::Result;

/// Frozen structure sign in `dΘ = SIGMA · i · θ̊¹∧θ̊¹̄`.
pub const SIGMA: f64 = 1.0;

/// A 1-form `c_theta·Θ + c_1·θ̊¹ + c_1b·θ̊¹̄`.
#[derive(Clone, Debug)]
pub struct CoframeForm1 {
    pub c_theta: ScalarField,
    pub c_1: ScalarField,
    pub c_1b: ScalarField,
}

/// A 2-form `c_11b·θ̊¹∧θ̊¹̄ + c_t1·Θ∧θ̊¹ + c_t1b·Θ∧θ̊¹̄`.
#[derive(Clone, Debug)]
pub struct CoframeForm2 {
    pub c_11b: ScalarField,
    pub c_t1: ScalarField,
    pub c_t1b: ScalarField,
}

/// Pointwise value of a 1-form in the coframe basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Form1Value {
    pub c_theta: Complex64,
    pub c_1: Complex64,
    pub c_1b: Complex64,
}

/// Pointwise value of a 2-form in the coframe basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Form2Value {
    pub c_11b: Complex64,
    pub c_t1: Complex64,
    pub c_t1b: Complex64,
}

impl Form2Value {
    pub fn max_norm(&self) -> f64 {
        self.c_11b
            .norm()
            .max(self.c_t1.norm())
            .max(self.c_t1b.norm())
    }
}

impl CoframeForm1 {
    pub fn zero() -> Self {
        CoframeForm1 {
            c_theta: ScalarField::zero(),
            c_1: ScalarField::zero(),
            c_1b: ScalarField::zero(),
        }
    }

    /// The contact form `Θ`.
    pub fn theta() -> Self {
        CoframeForm1 {
            c_theta: ScalarField::one(),
            c_1: ScalarField::zero(),
            c_1b: ScalarField::zero(),
        }
    }

    /// The flat holomorphic coframe `θ̊¹`.
    pub fn theta1() -> Self {
        CoframeForm1 {
            c_theta: ScalarField::zero(),
            c_1: ScalarField::one(),
            c_1b: ScalarField::zero(),
        }
    }

    pub fn theta1_bar() -> Self {
        CoframeForm1 {
            c_theta: ScalarField::zero(),
            c_1: ScalarField::zero(),
            c_1b: ScalarField::one(),
        }
    }

    /// The differential `df` of a scalar field in the coframe.
    pub fn d_of(f: &ScalarField) -> Self {
        CoframeForm1 {
            c_theta: frame_deriv(f, FrameDir::T),
            c_1: frame_deriv(f, FrameDir::Z1),
            c_1b: frame_deriv(f, FrameDir::Z1b),
        }
    }

    /// Complex conjugate form: `conj(θ̊¹) = θ̊¹̄` swaps the horizontal
    /// slots.
    pub fn conj(&self) -> Self {
        CoframeForm1 {
            c_theta: self.c_theta.conj(),
            c_1: self.c_1b.conj(),
            c_1b: self.c_1.conj(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        CoframeForm1 {
            c_theta: self.c_theta.clone() + rhs.c_theta.clone(),
            c_1: self.c_1.clone() + rhs.c_1.clone(),
            c_1b: self.c_1b.clone() + rhs.c_1b.clone(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        CoframeForm1 {
            c_theta: self.c_theta.clone() - rhs.c_theta.clone(),
            c_1: self.c_1.clone() - rhs.c_1.clone(),
            c_1b: self.c_1b.clone() - rhs.c_1b.clone(),
        }
    }

    pub fn scale(&self, k: &ScalarField) -> Self {
        CoframeForm1 {
            c_theta: k.clone() * self.c_theta.clone(),
            c_1: k.clone() * self.c_1.clone(),
            c_1b: k.clone() * self.c_1b.clone(),
        }
    }

    pub fn eval(&self, p: HPoint) -> Result<Form1Value> {
        Ok(Form1Value {
            c_theta: self.c_theta.eval(p)?,
            c_1: self.c_1.eval(p)?,
            c_1b: self.c_1b.eval(p)?,
        })
    }
}

impl CoframeForm2 {
    pub fn sub(&self, rhs: &Self) -> Self {
        CoframeForm2 {
            c_11b: self.c_11b.clone() - rhs.c_11b.clone(),
            c_t1: self.c_t1.clone() - rhs.c_t1.clone(),
            c_t1b: self.c_t1b.clone() - rhs.c_t1b.clone(),
        }
    }

    pub fn eval(&self, p: HPoint) -> Result<Form2Value> {
        Ok(Form2Value {
            c_11b: self.c_11b.eval(p)?,
            c_t1: self.c_t1.eval(p)?,
            c_t1b: self.c_t1b.eval(p)?,
        })
    }
}

/// Wedge product of two 1-forms, expanded on the coframe basis.
pub fn wedge(a: &CoframeForm1, b: &CoframeForm1) -> CoframeForm2 {
    CoframeForm2 {
        c_11b: a.c_1.clone() * b.c_1b.clone() - a.c_1b.clone() * b.c_1.clone(),
        c_t1: a.c_theta.clone() * b.c_1.clone() - a.c_1.clone() * b.c_theta.clone(),
        c_t1b: a.c_theta.clone() * b.c_1b.clone() - a.c_1b.clone() * b.c_theta.clone(),
    }
}

/// Exterior derivative of a 1-form `a = fΘ + gθ̊¹ + hθ̊¹̄` by the Leibniz
/// rule with `dθ̊¹ = dθ̊¹̄ = 0` and `dΘ = σ·i·θ̊¹∧θ̊¹̄`:
///
/// ```text
/// da = (σ·i·f − Z̊₁̄g + Z̊₁h) θ̊¹∧θ̊¹̄ + (Tg − Z̊₁f) Θ∧θ̊¹ + (Th − Z̊₁̄f) Θ∧θ̊¹̄
/// ```
pub fn exterior_d(a: &CoframeForm1) -> CoframeForm2 {
    let sigma_i = ScalarField::constant(Complex64::new(0.0, SIGMA));
    CoframeForm2 {
        c_11b: sigma_i * a.c_theta.clone() + frame_deriv(&a.c_1b, FrameDir::Z1)
            - frame_deriv(&a.c_1, FrameDir::Z1b),
        c_t1: frame_deriv(&a.c_1, FrameDir::T) - frame_deriv(&a.c_theta, FrameDir::Z1),
        c_t1b: frame_deriv(&a.c_1b, FrameDir::T) - frame_deriv(&a.c_theta, FrameDir::Z1b),
    }
}

/// Coordinate components `(a_x, a_y, a_z)` of a 1-form value at `p`,
/// using `Θ = dz + x dy − y dx` and `θ̊¹ = dx + i dy`.
pub fn form1_to_coords(p: HPoint, v: Form1Value) -> [Complex64; 3] {
    let i = Complex64::I;
    [
        -p.y * v.c_theta + v.c_1 + v.c_1b,
        p.x * v.c_theta + i * (v.c_1 - v.c_1b),
        v.c_theta,
    ]
}

/// Inverse of [`form1_to_coords`].
pub fn coords_to_form1(p: HPoint, a: [Complex64; 3]) -> Form1Value {
    let i = Complex64::I;
    let f = a[2];
    let gp = a[0] + p.y * f; // g + h
    let gm = -i * (a[1] - p.x * f); // g − h
    Form1Value {
        c_theta: f,
        c_1: 0.5 * (gp + gm),
        c_1b: 0.5 * (gp - gm),
    }
}

/// Converts coordinate 2-form components `(A, B, C)` — the coefficients of
/// `dx∧dy, dx∧dz, dy∧dz` — to the coframe basis at `p`.
pub fn coords_to_form2(p: HPoint, a: [Complex64; 3]) -> Form2Value {
    let i = Complex64::I;
    let [cxy, cxz, cyz] = a;
    Form2Value {
        c_11b: 0.5 * i * cxy - 0.5 * i * p.x * cxz - 0.5 * i * p.y * cyz,
        c_t1: -0.5 * cxz + 0.5 * i * cyz,
        c_t1b: -0.5 * cxz - 0.5 * i * cyz,
    }
}

/// Inverse of [`coords_to_form2`].
pub fn form2_to_coords(p: HPoint, v: Form2Value) -> [Complex64; 3] {
    let i = Complex64::I;
    let cxz = -(v.c_t1 + v.c_t1b);
    let cyz = -i * (v.c_t1 - v.c_t1b);
    let cxy = -2.0 * i * v.c_11b + p.x * cxz + p.y * cyz;
    [cxy, cxz, cyz]
}

/// Finite-difference exterior derivative of a pointwise 1-form evaluator:
/// converts to coordinate components, takes the central-difference curl,
/// and converts back at `p`. Agrees with [`exterior_d`] to `O(h²)`.
pub fn fd_exterior_d<F>(a: &F, p: HPoint, h: f64) -> Result<Form2Value>
where
    F: Fn(HPoint) -> Result<Form1Value>,
{
    assert!(h > 0.0);
    let comp = |q: HPoint| -> Result<[Complex64; 3]> { Ok(form1_to_coords(q, a(q)?)) };
    let two_h = 2.0 * h;
    let dd = |axis: usize| -> Result<[Complex64; 3]> {
        let mut dp = [0.0; 3];
        dp[axis] = h;
        let plus = comp(HPoint::new(p.x + dp[0], p.y + dp[1], p.z + dp[2]))?;
        let minus = comp(HPoint::new(p.x - dp[0], p.y - dp[1], p.z - dp[2]))?;
        Ok([
            (plus[0] - minus[0]) / two_h,
            (plus[1] - minus[1]) / two_h,
            (plus[2] - minus[2]) / two_h,
        ])
    };
    let dx = dd(0)?;
    let dy = dd(1)?;
    let dz = dd(2)?;
    // Curl components of the coordinate 1-form.
    let cxy = dx[1] - dy[0];
    let cxz = dx[2] - dz[0];
    let cyz = dy[2] - dz[1];
    Ok(coords_to_form2(p, [cxy, cxz, cyz]))
}

/// Measures the structure sign `σ` in `dΘ = σ·i·θ̊¹∧θ̊¹̄` with the
/// finite-difference oracle. The frozen [`SIGMA`] must match.
pub fn calibrate_sigma() -> f64 {
    let theta = CoframeForm1::theta();
    let mut acc = 0.0;
    let probes = [
        HPoint::new(0.2, -0.4, 0.6),
        HPoint::new(-0.8, 0.3, -0.1),
        HPoint::ORIGIN,
    ];
    for p in probes {
        let v = fd_exterior_d(&|q| theta.eval(q), p, 1e-3).expect("Θ is polynomial");
        acc += (v.c_11b / Complex64::I).re;
    }
    acc / probes.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn wedge_of_basis_forms() {
        let p = HPoint::new(0.3, 0.1, -0.2);
        let w = wedge(&CoframeForm1::theta1(), &CoframeForm1::theta1_bar())
            .eval(p)
            .unwrap();
        assert_eq!(w.c_11b, Complex64::ONE);
        assert_eq!(w.c_t1, Complex64::ZERO);
        assert_eq!(w.c_t1b, Complex64::ZERO);

        let w = wedge(&CoframeForm1::theta(), &CoframeForm1::theta1())
            .eval(p)
            .unwrap();
        assert_eq!(w.c_t1, Complex64::ONE);
        assert_eq!(w.c_11b, Complex64::ZERO);
    }

    #[test]
    fn wedge_is_alternating() {
        let a = CoframeForm1 {
            c_theta: ScalarField::x() * ScalarField::z(),
            c_1: ScalarField::y() + ScalarField::constant(c(0.0, 1.0)),
            c_1b: ScalarField::x().powi(2),
        };
        let w = wedge(&a, &a).eval(HPoint::new(0.7, -0.5, 0.4)).unwrap();
        assert!(w.max_norm() < 1e-14);
    }

    #[test]
    fn d_theta_is_sigma_i() {
        let v = exterior_d(&CoframeForm1::theta())
            .eval(HPoint::new(0.4, 0.9, -0.3))
            .unwrap();
        assert!((v.c_11b - c(0.0, SIGMA)).norm() < 1e-14);
        assert!(v.c_t1.norm() < 1e-14 && v.c_t1b.norm() < 1e-14);
    }

    #[test]
    fn d_theta1_vanishes() {
        let v = exterior_d(&CoframeForm1::theta1())
            .eval(HPoint::new(-0.6, 0.2, 0.8))
            .unwrap();
        assert!(v.max_norm() < 1e-14);
    }

    #[test]
    fn d_squared_vanishes_on_differentials() {
        let f = ScalarField::x() * ScalarField::z();
        let ddf = exterior_d(&CoframeForm1::d_of(&f));
        for p in [HPoint::ORIGIN, HPoint::new(0.5, -0.7, 0.2)] {
            assert!(ddf.eval(p).unwrap().max_norm() < 1e-9);
        }
    }

    #[test]
    fn sigma_is_pinned_by_the_oracle() {
        let measured = calibrate_sigma();
        assert!(
            (measured - SIGMA).abs() < 1e-7,
            "measured σ = {measured}, frozen σ = {SIGMA}"
        );
    }

    #[test]
    fn coordinate_roundtrip_is_identity() {
        let p = HPoint::new(0.9, -0.4, 0.15);
        let v = Form1Value {
            c_theta: c(0.3, -0.2),
            c_1: c(-1.1, 0.7),
            c_1b: c(0.4, 0.9),
        };
        let back = coords_to_form1(p, form1_to_coords(p, v));
        assert!((back.c_theta - v.c_theta).norm() < 1e-12);
        assert!((back.c_1 - v.c_1).norm() < 1e-12);
        assert!((back.c_1b - v.c_1b).norm() < 1e-12);

        let w = Form2Value {
            c_11b: c(0.2, 0.5),
            c_t1: c(-0.3, 0.8),
            c_t1b: c(0.6, -0.1),
        };
        let back = coords_to_form2(p, form2_to_coords(p, w));
        assert!((back.c_11b - w.c_11b).norm() < 1e-12);
        assert!((back.c_t1 - w.c_t1).norm() < 1e-12);
        assert!((back.c_t1b - w.c_t1b).norm() < 1e-12);
    }

    #[test]
    fn fd_exterior_d_on_x_dy() {
        // x·dy in the coframe is c_1 = −i x/2, c_1b = i x/2; its exterior
        // derivative is dx∧dy, i.e. coordinate coefficient 1.
        let half_i = ScalarField::constant(c(0.0, 0.5));
        let a = CoframeForm1 {
            c_theta: ScalarField::zero(),
            c_1: -(half_i.clone() * ScalarField::x()),
            c_1b: half_i * ScalarField::x(),
        };
        let p = HPoint::new(0.25, -0.6, 0.1);
        let v = fd_exterior_d(&|q| a.eval(q), p, 1e-3).unwrap();
        let coords = form2_to_coords(p, v);
        assert!((coords[0] - Complex64::ONE).norm() < 1e-9);
        assert!(coords[1].norm() < 1e-9 && coords[2].norm() < 1e-9);
    }

    #[test]
    fn fd_matches_exact_exterior_d() {
        let a = CoframeForm1 {
            c_theta: ScalarField::x() * ScalarField::y(),
            c_1: ScalarField::z() + ScalarField::x().powi(2),
            c_1b: ScalarField::y() * ScalarField::z(),
        };
        let p = HPoint::new(0.3, 0.2, -0.5);
        let exact = exterior_d(&a).eval(p).unwrap();
        let approx = fd_exterior_d(&|q| a.eval(q), p, 1e-3).unwrap();
        assert!((exact.c_11b - approx.c_11b).norm() < 1e-8);
        assert!((exact.c_t1 - approx.c_t1).norm() < 1e-8);
        assert!((exact.c_t1b - approx.c_t1b).norm() < 1e-8);
    }

    #[test]
    fn closed_forms_have_small_fd_derivative() {
        let f = ScalarField::x().powi(2) * ScalarField::y() + ScalarField::z();
        let df = CoframeForm1::d_of(&f);
        let p = HPoint::new(-0.2, 0.5, 0.7);
        let v = fd_exterior_d(&|q| df.eval(q), p, 1e-3).unwrap();
        assert!(v.max_norm() < 1e-8);
    }
}
