//! Frame jets: value, first derivatives along `Z̊₁, Z̊₁̄, T`, and the four
//! ordered second derivatives in `{Z̊₁, Z̊₁̄}²`.
//!
//! Frame derivatives do not commute: `[Z̊₁, Z̊₁̄] = κ·i·T` with a sign `κ`
//! that depends on orientation conventions. `κ` is not taken from a hand
//! derivation; [`calibrate_kappa`] measures it with the finite-difference
//! oracle on the calibration field `f = z`, and the frozen constant
//! [`KAPPA`] is pinned against it by tests and by the verify suite.

use num_complex::Complex64;

use super::field::{Coord, ScalarField};
use super::taylor::CJet;
use super::{fd_jet, HPoint};
use crate::Result;

/// Frozen commutator sign: `Z̊₁Z̊₁̄ − Z̊₁̄Z̊₁ = KAPPA · i · T`.
pub const KAPPA: f64 = -1.0;

/// Horizontal frame directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    Z1 = 0,
    Z1b = 1,
}

/// All frame directions, including the Reeb field `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameDir {
    Z1,
    Z1b,
    T,
}

/// Value and first frame derivatives of a field at a point.
#[derive(Clone, Copy, Debug)]
pub struct Jet1 {
    pub val: Complex64,
    pub d_z1: Complex64,
    pub d_z1b: Complex64,
    pub d_t: Complex64,
}

/// First-order jet plus the ordered second horizontal derivatives.
///
/// `d2[a][b]` stores `Z̊_a (Z̊_b f)`; the two mixed slots are kept separate
/// because the frame does not commute.
#[derive(Clone, Copy, Debug)]
pub struct Jet2 {
    pub j1: Jet1,
    pub d2: [[Complex64; 2]; 2],
}

impl Jet2 {
    pub fn d2(&self, a: Dir, b: Dir) -> Complex64 {
        self.d2[a as usize][b as usize]
    }

    /// Flat sublaplacian `Δ̊_b f = −(Z̊₁Z̊₁̄ + Z̊₁̄Z̊₁) f`.
    pub fn flat_sublap(&self) -> Complex64 {
        -(self.d2(Dir::Z1, Dir::Z1b) + self.d2(Dir::Z1b, Dir::Z1))
    }

    /// Commutator defect `d2[z1,z1b] − d2[z1b,z1] − κ·i·d_t`.
    pub fn commutator_defect(&self) -> Complex64 {
        self.d2(Dir::Z1, Dir::Z1b) - self.d2(Dir::Z1b, Dir::Z1)
            - Complex64::new(0.0, KAPPA) * self.j1.d_t
    }

    /// A crude magnitude used to scale relative tolerances.
    pub fn magnitude(&self) -> f64 {
        let mut m = self.j1.val.norm().max(self.j1.d_t.norm());
        m = m.max(self.j1.d_z1.norm()).max(self.j1.d_z1b.norm());
        for row in &self.d2 {
            for v in row {
                m = m.max(v.norm());
            }
        }
        m
    }
}

/// Symmetric coordinate partials of a function at a point, up to second
/// order. This is the interchange format between the exact Taylor path,
/// the finite-difference oracle and the grid stencils.
#[derive(Clone, Copy, Debug, Default)]
pub struct Partials {
    pub val: Complex64,
    /// `(f_x, f_y, f_z)`
    pub d1: [Complex64; 3],
    /// `(f_xx, f_yy, f_zz, f_xy, f_xz, f_yz)`
    pub d2: [Complex64; 6],
}

/// Assembles the frame jet at `p` from symmetric coordinate partials.
///
/// ```text
/// e̊₁e̊₁ = f_xx + 2y f_xz + y² f_zz
/// e̊₁e̊₂ = f_xy − f_z − x f_xz + y f_yz − xy f_zz
/// e̊₂e̊₁ = f_xy + f_z − x f_xz + y f_yz − xy f_zz
/// e̊₂e̊₂ = f_yy − 2x f_yz + x² f_zz
/// ```
pub fn assemble_jet2(p: HPoint, parts: &Partials) -> Jet2 {
    let [fx, fy, fz] = parts.d1;
    let [fxx, fyy, fzz, fxy, fxz, fyz] = parts.d2;
    let (x, y) = (p.x, p.y);

    let e1 = fx + y * fz;
    let e2 = fy - x * fz;
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, 0.5);
    let d_z1 = half * e1 - half_i * e2;
    let d_z1b = half * e1 + half_i * e2;

    let ee = [
        [
            fxx + 2.0 * y * fxz + y * y * fzz,
            fxy - fz - x * fxz + y * fyz - x * y * fzz,
        ],
        [
            fxy + fz - x * fxz + y * fyz - x * y * fzz,
            fyy - 2.0 * x * fyz + x * x * fzz,
        ],
    ];
    // Weights of Z̊₁ and Z̊₁̄ over (e̊₁, e̊₂).
    let w = [[half, -half_i], [half, half_i]];
    let mut d2 = [[Complex64::ZERO; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = Complex64::ZERO;
            for (i, wi) in w[a].iter().enumerate() {
                for (j, wj) in w[b].iter().enumerate() {
                    acc += wi * wj * ee[i][j];
                }
            }
            d2[a][b] = acc;
        }
    }

    Jet2 {
        j1: Jet1 {
            val: parts.val,
            d_z1,
            d_z1b,
            d_t: fz,
        },
        d2,
    }
}

pub(crate) fn partials_from_cjet(jet: &CJet) -> Partials {
    Partials {
        val: jet.value(),
        d1: [
            jet.partial(1, 0, 0),
            jet.partial(0, 1, 0),
            jet.partial(0, 0, 1),
        ],
        d2: [
            jet.partial(2, 0, 0),
            jet.partial(0, 2, 0),
            jet.partial(0, 0, 2),
            jet.partial(1, 1, 0),
            jet.partial(1, 0, 1),
            jet.partial(0, 1, 1),
        ],
    }
}

/// Exact frame jet of a scalar field at `p`.
pub fn jet2_eval(f: &ScalarField, p: HPoint) -> Result<Jet2> {
    let jet = f.eval_jet(p, 2)?;
    Ok(assemble_jet2(p, &partials_from_cjet(&jet)))
}

/// The frame derivative of a field, as a new field.
///
/// `Z̊₁ f = (f_x − i f_y)/2 + (y + i x)/2 · f_z`, and conjugate for `Z̊₁̄`;
/// `T f = f_z`.
pub fn frame_deriv(f: &ScalarField, dir: FrameDir) -> ScalarField {
    let fx = f.deriv(Coord::X);
    let fy = f.deriv(Coord::Y);
    let fz = f.deriv(Coord::Z);
    let half = ScalarField::constant(0.5);
    let half_i = ScalarField::constant(Complex64::new(0.0, 0.5));
    match dir {
        FrameDir::Z1 => {
            half.clone() * fx - half_i.clone() * fy
                + (half * ScalarField::y() + half_i * ScalarField::x()) * fz
        }
        FrameDir::Z1b => {
            half.clone() * fx + half_i.clone() * fy
                + (half * ScalarField::y() - half_i * ScalarField::x()) * fz
        }
        FrameDir::T => fz,
    }
}

/// Commutator defect of the exact jet of `f` at `p`; the contract is that
/// its magnitude stays within round-off of zero.
pub fn commutator_defect(f: &ScalarField, p: HPoint) -> Result<Complex64> {
    Ok(jet2_eval(f, p)?.commutator_defect())
}

/// Measures the commutator sign on the calibration field `f = z` with the
/// finite-difference oracle. The frozen [`KAPPA`] must match.
pub fn calibrate_kappa() -> f64 {
    let f = |p: HPoint| Complex64::new(p.z, 0.0);
    let mut acc = 0.0;
    let probes = [
        HPoint::new(0.3, -0.2, 0.1),
        HPoint::new(-0.7, 0.4, -0.5),
        HPoint::new(0.05, 0.85, 0.6),
    ];
    for p in probes {
        let jet = fd_jet(&f, p, 1e-3);
        let diff = jet.d2(Dir::Z1, Dir::Z1b) - jet.d2(Dir::Z1b, Dir::Z1);
        // diff = κ·i·T f with T z = 1, so κ = Im-free ratio diff / i.
        acc += (diff / Complex64::I).re;
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
    fn jet_of_x_at_origin() {
        let jet = jet2_eval(&ScalarField::x(), HPoint::ORIGIN).unwrap();
        assert_eq!(jet.j1.val, Complex64::ZERO);
        assert_eq!(jet.j1.d_z1, c(0.5, 0.0));
        assert_eq!(jet.j1.d_z1b, c(0.5, 0.0));
        assert_eq!(jet.j1.d_t, Complex64::ZERO);
    }

    #[test]
    fn jet_of_z_anywhere() {
        let p = HPoint::new(0.4, -1.1, 0.3);
        let jet = jet2_eval(&ScalarField::z(), p).unwrap();
        assert_eq!(jet.j1.d_t, Complex64::ONE);
        // Z̊₁ z = (y + i x)/2
        let expect = c(p.y / 2.0, p.x / 2.0);
        assert!((jet.j1.d_z1 - expect).norm() < 1e-15);
    }

    #[test]
    fn jet_of_constant() {
        let jet = jet2_eval(&ScalarField::constant(c(3.0, -2.0)), HPoint::new(1.0, 2.0, 3.0))
            .unwrap();
        assert_eq!(jet.j1.val, c(3.0, -2.0));
        assert_eq!(jet.j1.d_z1, Complex64::ZERO);
        assert_eq!(jet.d2(Dir::Z1, Dir::Z1b), Complex64::ZERO);
    }

    #[test]
    fn kappa_is_pinned_by_the_oracle() {
        let measured = calibrate_kappa();
        assert!(
            (measured - KAPPA).abs() < 1e-8,
            "measured κ = {measured}, frozen κ = {KAPPA}"
        );
    }

    #[test]
    fn commutator_defect_vanishes_on_coordinates() {
        for f in [
            ScalarField::z(),
            ScalarField::x() * ScalarField::y(),
            ScalarField::x().powi(2) * ScalarField::z(),
        ] {
            for p in [HPoint::ORIGIN, HPoint::new(0.2, -0.9, 0.5)] {
                let d = commutator_defect(&f, p).unwrap();
                assert!(d.norm() < 1e-12, "field {f}, defect {d}");
            }
        }
    }

    #[test]
    fn frame_deriv_field_matches_jet_slots() {
        let f = ScalarField::x().powi(2) * ScalarField::z()
            + ScalarField::y() * ScalarField::x();
        let p = HPoint::new(0.3, 0.7, -0.2);
        let jet = jet2_eval(&f, p).unwrap();
        let d1 = frame_deriv(&f, FrameDir::Z1).eval(p).unwrap();
        let d1b = frame_deriv(&f, FrameDir::Z1b).eval(p).unwrap();
        let dt = frame_deriv(&f, FrameDir::T).eval(p).unwrap();
        assert!((d1 - jet.j1.d_z1).norm() < 1e-13);
        assert!((d1b - jet.j1.d_z1b).norm() < 1e-13);
        assert!((dt - jet.j1.d_t).norm() < 1e-13);
        // Second slots: Z̊_a(Z̊_b f) as nested field derivatives.
        let z1z1b = frame_deriv(&frame_deriv(&f, FrameDir::Z1b), FrameDir::Z1)
            .eval(p)
            .unwrap();
        assert!((z1z1b - jet.d2(Dir::Z1, Dir::Z1b)).norm() < 1e-13);
    }
}
