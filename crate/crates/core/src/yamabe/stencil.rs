//! Second-order finite-difference stencils on the box grid.
//!
//! First derivatives are central in the interior and one-sided
//! second-order on the boundary ring; second derivatives are only taken
//! at interior nodes (central, with the 4-point cross stencil for mixed
//! partials).

use num_complex::Complex64;

use super::BoxGrid;
use crate::hgroup::Partials;

/// First derivative of the grid values along `axis` at node `(i,j,k)`.
pub fn d1(grid: &BoxGrid, v: &[f64], idx: [usize; 3], axis: usize) -> f64 {
    let n = grid.n();
    let h = grid.spacing();
    let i = idx[axis];
    let stride = grid.stride(axis);
    let at = grid.index(idx[0], idx[1], idx[2]);
    if i == 0 {
        (-3.0 * v[at] + 4.0 * v[at + stride] - v[at + 2 * stride]) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * v[at] - 4.0 * v[at - stride] + v[at - 2 * stride]) / (2.0 * h)
    } else {
        (v[at + stride] - v[at - stride]) / (2.0 * h)
    }
}

/// Stencil (offsets in units of the axis stride, weights in units of
/// `1/(2h)`) used by [`d1`]; exposed so the energy gradient can scatter
/// through exactly the same coefficients.
pub fn d1_stencil(n: usize, i: usize) -> [(isize, f64); 3] {
    if i == 0 {
        [(0, -3.0), (1, 4.0), (2, -1.0)]
    } else if i == n - 1 {
        [(0, 3.0), (-1, -4.0), (-2, 1.0)]
    } else {
        [(-1, -1.0), (1, 1.0), (0, 0.0)]
    }
}

/// Full symmetric partials at an interior node.
pub fn interior_partials(grid: &BoxGrid, v: &[f64], idx: [usize; 3]) -> Partials {
    let [i, j, k] = idx;
    let n = grid.n();
    assert!(
        i > 0 && i < n - 1 && j > 0 && j < n - 1 && k > 0 && k < n - 1,
        "second derivatives need an interior node"
    );
    let h = grid.spacing();
    let h2 = h * h;
    let at = grid.index(i, j, k);
    let s = [grid.stride(0), grid.stride(1), grid.stride(2)];

    let c = |x: f64| Complex64::new(x, 0.0);
    let first = [
        (v[at + s[0]] - v[at - s[0]]) / (2.0 * h),
        (v[at + s[1]] - v[at - s[1]]) / (2.0 * h),
        (v[at + s[2]] - v[at - s[2]]) / (2.0 * h),
    ];
    let second = |a: usize| (v[at + s[a]] - 2.0 * v[at] + v[at - s[a]]) / h2;
    let mixed = |a: usize, b: usize| {
        (v[at + s[a] + s[b]] - v[at + s[a] - s[b]] - v[at - s[a] + s[b]] + v[at - s[a] - s[b]])
            / (4.0 * h2)
    };

    Partials {
        val: c(v[at]),
        d1: [c(first[0]), c(first[1]), c(first[2])],
        d2: [
            c(second(0)),
            c(second(1)),
            c(second(2)),
            c(mixed(0, 1)),
            c(mixed(0, 2)),
            c(mixed(1, 2)),
        ],
    }
}
