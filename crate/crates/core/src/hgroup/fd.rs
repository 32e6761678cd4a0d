//! Finite-difference oracle for frame jets.
//!
//! Builds all coordinate partials up to second order by central
//! differences and assembles them into frame directions with the same
//! combinatorics as the exact path. This is the independent check for
//! the jet algebra: it touches none of the Taylor code.

use num_complex::Complex64;

use super::jet::{assemble_jet2, Jet2, Partials};
use super::HPoint;

/// Central-difference coordinate partials of a pointwise evaluator.
pub fn fd_partials<F>(f: &F, p: HPoint, h: f64) -> Partials
where
    F: Fn(HPoint) -> Complex64,
{
    assert!(h > 0.0, "step must be positive");
    let at = |dx: f64, dy: f64, dz: f64| f(HPoint::new(p.x + dx, p.y + dy, p.z + dz));
    let f0 = at(0.0, 0.0, 0.0);
    let two_h = 2.0 * h;
    let h2 = h * h;

    let fxp = at(h, 0.0, 0.0);
    let fxm = at(-h, 0.0, 0.0);
    let fyp = at(0.0, h, 0.0);
    let fym = at(0.0, -h, 0.0);
    let fzp = at(0.0, 0.0, h);
    let fzm = at(0.0, 0.0, -h);

    let d1 = [
        (fxp - fxm) / two_h,
        (fyp - fym) / two_h,
        (fzp - fzm) / two_h,
    ];

    let mixed = |a: usize, b: usize| {
        let mut dp = [0.0; 3];
        let mut dm = [0.0; 3];
        dp[a] = h;
        dm[b] = h;
        let pp = at(dp[0] + dm[0], dp[1] + dm[1], dp[2] + dm[2]);
        let pm = at(dp[0] - dm[0], dp[1] - dm[1], dp[2] - dm[2]);
        let mp = at(-dp[0] + dm[0], -dp[1] + dm[1], -dp[2] + dm[2]);
        let mm = at(-dp[0] - dm[0], -dp[1] - dm[1], -dp[2] - dm[2]);
        (pp - pm - mp + mm) / (4.0 * h2)
    };

    let d2 = [
        (fxp - 2.0 * f0 + fxm) / h2,
        (fyp - 2.0 * f0 + fym) / h2,
        (fzp - 2.0 * f0 + fzm) / h2,
        mixed(0, 1),
        mixed(0, 2),
        mixed(1, 2),
    ];

    Partials { val: f0, d1, d2 }
}

/// Finite-difference frame jet of a pointwise evaluator at `p`.
///
/// Agrees with the exact jet to `O(h²)` on smooth fields and to round-off
/// on polynomials of low degree. The caller owns the step choice.
pub fn fd_jet<F>(f: &F, p: HPoint, h: f64) -> Jet2
where
    F: Fn(HPoint) -> Complex64,
{
    assemble_jet2(p, &fd_partials(f, p, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgroup::{jet2_eval, Dir, ScalarField};

    #[test]
    fn constant_has_exact_zero_derivatives() {
        let jet = fd_jet(&|_| Complex64::new(4.2, 0.0), HPoint::new(0.1, 0.2, 0.3), 1e-3);
        assert_eq!(jet.j1.d_z1, Complex64::ZERO);
        assert_eq!(jet.d2(Dir::Z1, Dir::Z1), Complex64::ZERO);
    }

    #[test]
    fn z_field_reeb_derivative() {
        let jet = fd_jet(
            &|p| Complex64::new(p.z, 0.0),
            HPoint::new(0.3, -0.2, 0.1),
            1e-3,
        );
        assert!((jet.j1.d_t - Complex64::ONE).norm() < 1e-10);
    }

    #[test]
    fn matches_exact_jet_on_squares() {
        let f = ScalarField::x().powi(2);
        let p = HPoint::new(1.0, 0.0, 0.0);
        let exact = jet2_eval(&f, p).unwrap();
        let fdj = fd_jet(&|q| f.eval(q).unwrap(), p, 1e-3);
        assert!((fdj.d2(Dir::Z1, Dir::Z1) - exact.d2(Dir::Z1, Dir::Z1)).norm() < 1e-8);
        assert!((fdj.j1.d_z1 - exact.j1.d_z1).norm() < 1e-10);
    }

    #[test]
    fn second_order_convergence_on_smooth_field() {
        // f = exp(x) / (2 + y), non-polynomial in both axes.
        let f = (ScalarField::x().exp())
            / (ScalarField::constant(2.0) + ScalarField::y());
        let p = HPoint::new(0.2, 0.4, -0.1);
        let exact = jet2_eval(&f, p).unwrap();
        let err = |h: f64| {
            let jet = fd_jet(&|q| f.eval(q).unwrap(), p, h);
            let mut e: f64 = 0.0;
            for a in [Dir::Z1, Dir::Z1b] {
                for b in [Dir::Z1, Dir::Z1b] {
                    e = e.max((jet.d2(a, b) - exact.d2(a, b)).norm());
                }
            }
            e.max((jet.j1.d_z1 - exact.j1.d_z1).norm())
        };
        let (e1, e2, e3) = (err(1e-2), err(5e-3), err(2.5e-3));
        let slope1 = (e1 / e2).log2();
        let slope2 = (e2 / e3).log2();
        assert!(slope1 > 1.8 && slope2 > 1.8, "orders {slope1}, {slope2}");
    }
}
