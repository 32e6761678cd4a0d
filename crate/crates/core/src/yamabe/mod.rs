//! Discretized CR Yamabe energy and quotient on a fixed box domain.
//!
//! The closed-manifold Yamabe constant is replaced by a Dirichlet proxy:
//! the infimum of `E(u)/ (∫u⁴ dV)^{1/2}` over grid functions vanishing on
//! the boundary ring of a box `[−L,L]³`, with
//!
//! ```text
//! E(u) = ∫ (4|∇_b u|² + R u²) dV_θ,    dV_θ = w⁴ · ν · dx dy dz,
//! ```
//!
//! the gradient norm and curvature taken from the pseudohermitian
//! calculus, `u`-derivatives from second-order stencils, and the volume
//! density `ν` pinned by an oracle. The minimizer is a projected gradient
//! descent with backtracking line search and per-step renormalization of
//! `∫u⁴ dV = 1`.

mod stencil;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::forms::{fd_exterior_d, form1_to_coords, form2_to_coords, CoframeForm1};
use crate::gluing::{glue, validate_deltas, GluedStructure};
use crate::hgroup::{assemble_jet2, HPoint, ScalarField};
use crate::phcalc::{
    grad_form, scalar_curvature_field, sublaplacian_coeffs, DeformationTensor, GradFormValues,
    SublapValues,
};
use crate::{Error, Result};

/// Frozen coordinate density of `Θ∧dΘ`: `Θ∧dΘ = ν · dx∧dy∧dz` with the
/// standard orientation. Pinned by [`calibrate_nu`].
pub const NU: f64 = 2.0;

/// Measures the volume density by evaluating `Θ∧dΘ` on the coordinate
/// frame, with `dΘ` taken from the finite-difference exterior-derivative
/// oracle. The frozen [`NU`] must match.
pub fn calibrate_nu() -> f64 {
    let theta = CoframeForm1::theta();
    let probes = [
        HPoint::new(0.7, -0.3, 0.4),
        HPoint::new(-0.2, 0.9, -0.6),
        HPoint::ORIGIN,
    ];
    let mut acc = 0.0;
    for p in probes {
        let alpha = form1_to_coords(p, theta.eval(p).expect("Θ is polynomial"));
        let beta = fd_exterior_d(&|q| theta.eval(q), p, 1e-3).expect("Θ is polynomial");
        let [cxy, cxz, cyz] = form2_to_coords(p, beta);
        // (α∧β)(∂x,∂y,∂z) = α_x β(∂y,∂z) − α_y β(∂x,∂z) + α_z β(∂x,∂y)
        let val = alpha[0] * cyz - alpha[1] * cxz + alpha[2] * cxy;
        acc += val.re;
    }
    acc / probes.len() as f64
}

/// A cubical grid over `[−L,L]³` with an odd number of points per axis,
/// so the origin is a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxGrid {
    half_width: f64,
    n: usize,
    spacing: f64,
}

impl BoxGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if half_width <= 0.0 {
            return Err(Error::Range {
                param: "half_width",
                value: half_width,
                expected: "> 0",
            });
        }
        if n < 9 || n % 2 == 0 {
            return Err(Error::Range {
                param: "n",
                value: n as f64,
                expected: ">= 9 and odd",
            });
        }
        Ok(BoxGrid {
            half_width,
            n,
            spacing: 2.0 * half_width / (n - 1) as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + self.spacing * i as f64
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n * self.n,
            1 => self.n,
            _ => 1,
        }
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> HPoint {
        HPoint::new(self.coord(i), self.coord(j), self.coord(k))
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.n;
        let j = (idx / self.n) % self.n;
        let i = idx / (self.n * self.n);
        [i, j, k]
    }

    pub fn is_boundary(&self, idx: [usize; 3]) -> bool {
        idx.iter().any(|&i| i == 0 || i == self.n - 1)
    }

    pub fn points(&self) -> Vec<HPoint> {
        (0..self.len())
            .map(|idx| {
                let [i, j, k] = self.multi_index(idx);
                self.point(i, j, k)
            })
            .collect()
    }

    /// Composite trapezoid weight of a node (product over axes of 1/2 at
    /// the edges, 1 inside) times `h³`.
    fn trapezoid_weight(&self, idx: [usize; 3]) -> f64 {
        let mut w = self.spacing.powi(3);
        for &i in &idx {
            if i == 0 || i == self.n - 1 {
                w *= 0.5;
            }
        }
        w
    }
}

/// Real values on the grid nodes, zero on the boundary ring (the compact
/// support proxy for trial functions).
#[derive(Clone, Debug)]
pub struct GridField {
    grid: BoxGrid,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: BoxGrid) -> Self {
        GridField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples a function on the nodes, forcing the boundary ring to zero.
    pub fn from_fn(grid: BoxGrid, f: impl Fn(HPoint) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        for (idx, v) in values.iter_mut().enumerate() {
            let mi = grid.multi_index(idx);
            if !grid.is_boundary(mi) {
                *v = f(grid.point(mi[0], mi[1], mi[2]));
            }
        }
        GridField { grid, values }
    }

    /// A smooth positive bump vanishing on the boundary:
    /// `Π cos²(π ξ / 2L)`.
    pub fn bump(grid: BoxGrid) -> Self {
        let l = grid.half_width();
        Self::from_fn(grid, |p| {
            let c = |t: f64| (std::f64::consts::FRAC_PI_2 * t / l).cos().powi(2);
            c(p.x) * c(p.y) * c(p.z)
        })
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn zero_boundary(&mut self) {
        for idx in 0..self.grid.len() {
            if self.grid.is_boundary(self.grid.multi_index(idx)) {
                self.values[idx] = 0.0;
            }
        }
    }
}

/// Structure data assembled on the grid: per node the gradient quadratic
/// form, the conformal curvature, and the volume measure weight.
#[derive(Clone, Debug)]
pub struct GridStructure {
    grid: BoxGrid,
    gq: Vec<GradFormValues>,
    r: Vec<f64>,
    /// `trapezoid weight · ν · w⁴` per node.
    meas: Vec<f64>,
}

impl GridStructure {
    /// Assembles the structure `(φ, w²Θ)` on the grid by exact pointwise
    /// evaluation of the calculus fields.
    pub fn assemble(phi: &DeformationTensor, w: &ScalarField, grid: BoxGrid) -> Result<Self> {
        let r_field = scalar_curvature_field(phi);
        let coeffs = sublaplacian_coeffs(phi);
        let rows: Vec<(GradFormValues, f64, f64)> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let [i, j, k] = grid.multi_index(idx);
                let p = grid.point(i, j, k);
                let w_jet = crate::hgroup::jet2_eval(w, p)?;
                let w_v = w_jet.j1.val;
                if w_v.im.abs() > 1e-9 * (1.0 + w_v.re.abs()) || w_v.re <= 0.0 {
                    return Err(Error::Positivity {
                        what: "conformal factor w",
                        point: p,
                        value: w_v.re,
                    });
                }
                let w_v = w_v.re;
                let lap_w = coeffs.eval(p)?.apply(&w_jet);
                let r_base = r_field.eval(p)?;
                let r_conf = (4.0 * lap_w.re + r_base.re * w_v) / (w_v * w_v * w_v);
                let gq = grad_form(phi, w, p)?;
                let meas = grid.trapezoid_weight([i, j, k]) * NU * w_v.powi(4);
                Ok((gq, r_conf, meas))
            })
            .collect::<Result<_>>()?;
        Ok(GridStructure {
            grid,
            gq: rows.iter().map(|r| r.0).collect(),
            r: rows.iter().map(|r| r.1).collect(),
            meas: rows.iter().map(|r| r.2).collect(),
        })
    }

    /// Assembles the glued structure `(φ^δ, (v^δ)²Θ)`.
    pub fn assemble_glued(gs: &GluedStructure, grid: BoxGrid) -> Result<Self> {
        Self::assemble(gs.phi_delta(), gs.v_delta(), grid)
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn curvature(&self) -> &[f64] {
        &self.r
    }

    /// Frame gradient components `(e̊₁u, e̊₂u)` at every node.
    fn frame_gradient(&self, u: &GridField) -> Vec<(f64, f64)> {
        let grid = &self.grid;
        let v = u.values();
        (0..grid.len())
            .map(|idx| {
                let mi = grid.multi_index(idx);
                let p = grid.point(mi[0], mi[1], mi[2]);
                let ux = stencil::d1(grid, v, mi, 0);
                let uy = stencil::d1(grid, v, mi, 1);
                let uz = stencil::d1(grid, v, mi, 2);
                (ux + p.y * uz, uy - p.x * uz)
            })
            .collect()
    }

    /// Energy `E(u) = Σ meas·(4·|∇u|² + R·u²)`.
    pub fn energy(&self, u: &GridField) -> f64 {
        let d = self.frame_gradient(u);
        let mut acc = 0.0;
        for idx in 0..self.grid.len() {
            let gnsq = self.gq[idx].apply(d[idx].0, d[idx].1);
            let ui = u.values()[idx];
            acc += self.meas[idx] * (4.0 * gnsq + self.r[idx] * ui * ui);
        }
        acc
    }

    /// `∫ u⁴ dV`.
    pub fn l4(&self, u: &GridField) -> f64 {
        u.values()
            .iter()
            .zip(&self.meas)
            .map(|(&ui, &m)| m * ui * ui * ui * ui)
            .sum()
    }

    /// `∫ u² dV` weighted by the curvature.
    fn curvature_term(&self, u: &GridField) -> f64 {
        u.values()
            .iter()
            .zip(self.meas.iter().zip(&self.r))
            .map(|(&ui, (&m, &r))| m * r * ui * ui)
            .sum()
    }

    /// `∫ |∇u|² dV`.
    fn gradient_term(&self, u: &GridField) -> f64 {
        let d = self.frame_gradient(u);
        d.iter()
            .enumerate()
            .map(|(idx, &(d1, d2))| self.meas[idx] * self.gq[idx].apply(d1, d2))
            .sum()
    }

    /// Yamabe quotient `Q(u) = E(u)/(∫u⁴ dV)^{1/2}`.
    pub fn quotient(&self, u: &GridField) -> Result<f64> {
        let n4 = self.l4(u);
        if n4 <= 0.0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(self.energy(u) / n4.sqrt())
    }

    /// Exact gradient of the discrete energy with respect to the nodal
    /// values, accumulated by scattering through the same stencils that
    /// define the frame gradient.
    fn energy_gradient(&self, u: &GridField) -> Vec<f64> {
        let grid = &self.grid;
        let n = grid.n();
        let h = grid.spacing();
        let d = self.frame_gradient(u);
        let mut grad = vec![0.0; grid.len()];

        // Reaction term.
        for idx in 0..grid.len() {
            grad[idx] = 2.0 * self.meas[idx] * self.r[idx] * u.values()[idx];
        }

        // Gradient term: ∂/∂u Σ 4·meas·dᵀGq d. For each node the
        // sensitivity to (e̊₁u, e̊₂u) is gd = 8·meas·Gq·d, routed to
        // (u_x, u_y, u_z) by e̊₁ = u_x + y u_z, e̊₂ = u_y − x u_z, then
        // scattered through the difference stencils.
        for idx in 0..grid.len() {
            let mi = grid.multi_index(idx);
            let p = grid.point(mi[0], mi[1], mi[2]);
            let (gd1, gd2) = self.gq[idx].mat_vec(d[idx].0, d[idx].1);
            let scale = 8.0 * self.meas[idx];
            let gx = scale * gd1;
            let gy = scale * gd2;
            let gz = scale * (p.y * gd1 - p.x * gd2);
            for (axis, gval) in [(0usize, gx), (1, gy), (2, gz)] {
                if gval == 0.0 {
                    continue;
                }
                let stride = grid.stride(axis) as isize;
                for (off, coef) in stencil::d1_stencil(n, mi[axis]) {
                    if coef == 0.0 {
                        continue;
                    }
                    let target = idx as isize + off * stride;
                    grad[target as usize] += gval * coef / (2.0 * h);
                }
            }
        }
        grad
    }
}

/// Options for the quotient minimizer.
#[derive(Clone, Debug)]
pub struct MinimizeOpts {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Warm start; defaults to a seeded positive bump.
    pub initial: Option<GridField>,
}

impl Default for MinimizeOpts {
    fn default() -> Self {
        MinimizeOpts {
            tol: 1e-8,
            max_iter: 5000,
            seed: 7,
            initial: None,
        }
    }
}

/// Result of a quotient minimization.
#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub lambda: f64,
    pub u_star: GridField,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes the Yamabe quotient over boundary-zero grid fields by
/// projected gradient descent with backtracking; the iterate is
/// renormalized to `∫u⁴ dV = 1` after every step, so the quotient equals
/// the energy of the iterate. Deterministic given the seed.
pub fn minimize_quotient_assembled(
    gs: &GridStructure,
    opts: &MinimizeOpts,
) -> Result<MinimizeResult> {
    let grid = *gs.grid();
    let mut u = match &opts.initial {
        Some(start) => {
            let mut start = start.clone();
            start.zero_boundary();
            start
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut u = GridField::bump(grid);
            for v in u.values_mut() {
                let jitter: f64 = rng.gen_range(0.0..0.05);
                if *v != 0.0 {
                    *v *= 1.0 + jitter;
                }
            }
            u
        }
    };

    normalize_l4(gs, &mut u)?;
    let mut q = gs.energy(&u);
    let mut step = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (u values, gradient)
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..opts.max_iter {
        iterations = it + 1;
        let mut g = rayleigh_gradient(gs, &u, q);
        for idx in 0..grid.len() {
            if grid.is_boundary(grid.multi_index(idx)) {
                g[idx] = 0.0;
            }
        }

        // Barzilai-Borwein step seed from the previous accepted pair.
        if let Some((pu, pg)) = &prev {
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..g.len() {
                let s = u.values()[i] - pu[i];
                let y = g[i] - pg[i];
                ss += s * s;
                sy += s * y;
            }
            if sy > 1e-300 {
                step = (ss / sy).clamp(1e-10, 1e6);
            }
        }

        let gnorm_sq: f64 = g.iter().map(|x| x * x).sum();
        if gnorm_sq == 0.0 {
            converged = true;
            break;
        }

        prev = Some((u.values().to_vec(), g.clone()));

        let mut alpha = step;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = u.clone();
            for (tv, (uv, gv)) in trial
                .values_mut()
                .iter_mut()
                .zip(u.values().iter().zip(&g))
            {
                *tv = uv - alpha * gv;
            }
            trial.zero_boundary();
            if normalize_l4(gs, &mut trial).is_err() {
                alpha *= 0.5;
                continue;
            }
            let q_trial = gs.energy(&trial);
            if q_trial < q {
                let rel_drop = (q - q_trial) / q.abs().max(1e-300);
                u = trial;
                q = q_trial;
                accepted = true;
                if rel_drop < opts.tol {
                    converged = true;
                }
                break;
            }
            alpha *= 0.5;
        }
        step = alpha;
        if !accepted {
            // No descent direction at line-search resolution: converged.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    // Sign normalization: the quotient is even in u; present the
    // minimizer with positive mass.
    if u.values().iter().sum::<f64>() < 0.0 {
        for v in u.values_mut() {
            *v = -*v;
        }
    }

    Ok(MinimizeResult {
        lambda: q,
        u_star: u,
        iterations,
        converged,
    })
}

/// Gradient of the quotient at an iterate normalized to `∫u⁴ = 1`:
/// `∇Q = ∇E − (E/2)·∇(∫u⁴)`.
fn rayleigh_gradient(gs: &GridStructure, u: &GridField, energy: f64) -> Vec<f64> {
    let mut g = gs.energy_gradient(u);
    for (idx, gi) in g.iter_mut().enumerate() {
        let ui = u.values()[idx];
        *gi -= energy / 2.0 * 4.0 * gs.meas[idx] * ui * ui * ui;
    }
    g
}

fn normalize_l4(gs: &GridStructure, u: &mut GridField) -> Result<()> {
    let n4 = gs.l4(u);
    if n4 <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let scale = n4.powf(-0.25);
    for v in u.values_mut() {
        *v *= scale;
    }
    Ok(())
}

// ---- public spec-level operations ----------------------------------------

/// `∫ f dV_θ` by the composite trapezoid rule with density `w⁴·ν`.
pub fn volume_integral(
    f: impl Fn(HPoint) -> f64,
    w: &ScalarField,
    grid: BoxGrid,
) -> Result<f64> {
    let mut acc = 0.0;
    for idx in 0..grid.len() {
        let mi = grid.multi_index(idx);
        let p = grid.point(mi[0], mi[1], mi[2]);
        let w_v = w.eval_real(p)?;
        if w_v <= 0.0 {
            return Err(Error::Positivity {
                what: "conformal factor w",
                point: p,
                value: w_v,
            });
        }
        acc += grid.trapezoid_weight(mi) * NU * w_v.powi(4) * f(p);
    }
    Ok(acc)
}

/// Energy of a trial function under the structure `(φ, w²Θ)`.
pub fn energy(
    phi: &DeformationTensor,
    w: &ScalarField,
    u: &GridField,
) -> Result<f64> {
    Ok(GridStructure::assemble(phi, w, *u.grid())?.energy(u))
}

/// Yamabe quotient of a trial function.
pub fn yamabe_quotient(
    phi: &DeformationTensor,
    w: &ScalarField,
    u: &GridField,
) -> Result<f64> {
    GridStructure::assemble(phi, w, *u.grid())?.quotient(u)
}

/// Minimizes the quotient for the structure `(φ, w²Θ)`.
pub fn minimize_quotient(
    phi: &DeformationTensor,
    w: &ScalarField,
    grid: BoxGrid,
    opts: &MinimizeOpts,
) -> Result<MinimizeResult> {
    minimize_quotient_assembled(&GridStructure::assemble(phi, w, grid)?, opts)
}

/// Result of the integration-by-parts duality check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DualityCheck {
    /// `∫ (Δ_b u) v dV`
    pub lhs: f64,
    /// `∫ ⟨∇u, ∇v⟩ dV` (polarization of the gradient form)
    pub rhs: f64,
    pub defect: f64,
    /// `lhs/rhs`; the continuum constant is 1.
    pub constant: f64,
}

/// Checks the defining duality of the sublaplacian on the grid:
/// `∫(Δ_b u)v dV` against the polarized gradient form, both under `Θ`
/// (`w ≡ 1`). The defect is `O(h²)`.
pub fn integration_by_parts_check(
    phi: &DeformationTensor,
    u: &GridField,
    v: &GridField,
) -> Result<DualityCheck> {
    let grid = *u.grid();
    assert_eq!(grid, *v.grid(), "u and v must share a grid");
    let coeffs = sublaplacian_coeffs(phi);
    let one = ScalarField::one();

    // Per-node operator coefficients and gradient forms.
    let node_data: Vec<(SublapValues, GradFormValues)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let mi = grid.multi_index(idx);
            let p = grid.point(mi[0], mi[1], mi[2]);
            Ok((coeffs.eval(p)?, grad_form(phi, &one, p)?))
        })
        .collect::<Result<_>>()?;

    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for idx in 0..grid.len() {
        let mi = grid.multi_index(idx);
        let meas = grid.trapezoid_weight(mi) * NU;
        let p = grid.point(mi[0], mi[1], mi[2]);

        // Bilinear gradient pairing at every node (one-sided at the ring).
        let du = frame_d1(&grid, u.values(), mi, p);
        let dv = frame_d1(&grid, v.values(), mi, p);
        let gq = node_data[idx].1;
        rhs += meas
            * (gq.g11 * du.0 * dv.0
                + gq.g12 * (du.0 * dv.1 + du.1 * dv.0)
                + gq.g22 * du.1 * dv.1);

        // Δ_b u only where v is supported (interior).
        if !grid.is_boundary(mi) && v.values()[idx] != 0.0 {
            let parts = stencil::interior_partials(&grid, u.values(), mi);
            let jet = assemble_jet2(p, &parts);
            lhs += meas * node_data[idx].0.apply(&jet).re * v.values()[idx];
        }
    }

    let defect = (lhs - rhs).abs();
    Ok(DualityCheck {
        lhs,
        rhs,
        defect,
        constant: if rhs != 0.0 { lhs / rhs } else { f64::NAN },
    })
}

fn frame_d1(grid: &BoxGrid, v: &[f64], mi: [usize; 3], p: HPoint) -> (f64, f64) {
    let ux = stencil::d1(grid, v, mi, 0);
    let uy = stencil::d1(grid, v, mi, 1);
    let uz = stencil::d1(grid, v, mi, 2);
    (ux + p.y * uz, uy - p.x * uz)
}

/// Pointwise comparison of the horizontal gradient norms of the base and
/// glued structures (the structures agree exactly outside the gauge
/// ball).
#[derive(Clone, Debug, Serialize)]
pub struct GradientComparison {
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// Sup over the active region (χ > 0) of the upper envelope
    /// `(v^δ)²F²(1+|φ|)²/((F^δ)²(1−|φ^δ|)²)`.
    pub envelope_upper_max: f64,
    /// Inf over the active region of the mirrored lower envelope.
    pub envelope_lower_min: f64,
    /// Ratios stayed inside the envelope at every sampled node.
    pub contained: bool,
    /// Nodes skipped because the glued gradient vanished there.
    pub skipped: usize,
}

/// Compares `|∇_b u|²` (structure `(φ,Θ)`) against `|∇^δ_b u|²_δ`
/// (structure `(φ^δ, (v^δ)²Θ)`) node by node.
pub fn gradient_comparison(
    phi: &DeformationTensor,
    gs: &GluedStructure,
    u: &GridField,
) -> Result<GradientComparison> {
    let grid = *u.grid();
    let one = ScalarField::one();
    let mut max_ratio = f64::MIN;
    let mut min_ratio = f64::MAX;
    let mut env_upper: f64 = 1.0;
    let mut env_lower: f64 = 1.0;
    let mut contained = true;
    let mut skipped = 0;

    for idx in 0..grid.len() {
        let mi = grid.multi_index(idx);
        let p = grid.point(mi[0], mi[1], mi[2]);
        let d = frame_d1(&grid, u.values(), mi, p);

        let q_base = grad_form(phi, &one, p)?.apply(d.0, d.1);
        let q_glued = grad_form(gs.phi_delta(), gs.v_delta(), p)?.apply(d.0, d.1);

        // Envelope from the pointwise structure data.
        let phi_v = phi.phi().eval(p)?.norm();
        let phi_d = gs.phi_delta().phi().eval(p)?.norm();
        let v_d = gs.v_delta().eval_real(p)?;
        let f_sq = 1.0 / (1.0 - phi_v * phi_v);
        let fd_sq = 1.0 / (1.0 - phi_d * phi_d);
        let upper = v_d * v_d * f_sq * (1.0 + phi_v).powi(2)
            / (fd_sq * (1.0 - phi_d).powi(2));
        let lower = v_d * v_d * f_sq * (1.0 - phi_v).powi(2)
            / (fd_sq * (1.0 + phi_d).powi(2));

        if gs.chi_at(p) > 0.0 {
            env_upper = env_upper.max(upper);
            env_lower = env_lower.min(lower);
        }

        if q_glued.abs() < 1e-30 {
            skipped += 1;
            continue;
        }
        let ratio = q_base / q_glued;
        max_ratio = max_ratio.max(ratio);
        min_ratio = min_ratio.min(ratio);
        let tol = 1e-9 * (1.0 + upper.abs());
        if ratio > upper + tol || ratio < lower - tol {
            contained = false;
        }
    }

    Ok(GradientComparison {
        max_ratio,
        min_ratio,
        envelope_upper_max: env_upper,
        envelope_lower_min: env_lower,
        contained,
        skipped,
    })
}

/// One row of the λ comparison study.
#[derive(Clone, Debug, Serialize)]
pub struct YamabeRow {
    pub delta: f64,
    pub lambda_delta: f64,
    pub lambda_gap_rel: f64,
    /// `|∫R(u^δ)² dV − ∫R^δ(u^δ)² dV^δ|`
    pub curv_term_diff: f64,
    /// `|∫|∇u^δ|² dV − ∫|∇^δ u^δ|²_δ dV^δ|`
    pub grad_term_diff: f64,
    /// `|E_{θ^δ}(u⁰) − E_θ(u⁰)|`
    pub cross_energy_gap: f64,
    /// `|∫(u⁰)⁴ dV^δ − 1|`
    pub norm_pinch_base: f64,
    /// `|∫(u^δ)⁴ dV − 1|`
    pub norm_pinch_delta: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Report of the λ comparison study over a δ sweep.
#[derive(Clone, Debug, Serialize)]
pub struct YamabeReport {
    pub lambda_base: f64,
    pub grid_n: usize,
    pub half_width: f64,
    pub rows: Vec<YamabeRow>,
}

impl YamabeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "delta,lambda_delta,lambda_base,lambda_gap_rel,curv_term_diff,grad_term_diff,cross_energy_gap,norm_pinch_base,norm_pinch_delta,iterations,converged\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.delta,
                r.lambda_delta,
                self.lambda_base,
                r.lambda_gap_rel,
                r.curv_term_diff,
                r.grad_term_diff,
                r.cross_energy_gap,
                r.norm_pinch_base,
                r.norm_pinch_delta,
                r.iterations,
                r.converged
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "lambda_base": self.lambda_base,
            "grid_n": self.grid_n,
            "half_width": self.half_width,
            "rows": self.rows,
        })
    }
}

/// Runs the λ comparison study: the Dirichlet-proxy quotient of the base
/// structure once, then the glued structure per δ, with the integrand
/// comparisons evaluated on the computed near-minimizers.
pub fn lambda_comparison_study(
    phi: &DeformationTensor,
    r0: f64,
    deltas: &[f64],
    grid: BoxGrid,
    opts: &MinimizeOpts,
) -> Result<YamabeReport> {
    validate_deltas(deltas)?;
    let base = GridStructure::assemble(phi, &ScalarField::one(), grid)?;
    let base_min = minimize_quotient_assembled(&base, opts)?;
    let lambda_base = base_min.lambda;
    let u0 = &base_min.u_star;

    let mut rows = Vec::new();
    for &delta in deltas {
        let glued = glue(phi, r0, delta)?;
        let gsd = GridStructure::assemble_glued(&glued, grid)?;
        let min_d = minimize_quotient_assembled(&gsd, opts)?;
        let ud = &min_d.u_star;

        let curv_term_diff = (base.curvature_term(ud) - gsd.curvature_term(ud)).abs();
        let grad_term_diff = (base.gradient_term(ud) - gsd.gradient_term(ud)).abs();
        let cross_energy_gap = (gsd.energy(u0) - base.energy(u0)).abs();
        let norm_pinch_base = (gsd.l4(u0) - 1.0).abs();
        let norm_pinch_delta = (base.l4(ud) - 1.0).abs();

        rows.push(YamabeRow {
            delta,
            lambda_delta: min_d.lambda,
            lambda_gap_rel: (min_d.lambda - lambda_base).abs()
                / lambda_base.abs().max(1e-300),
            curv_term_diff,
            grad_term_diff,
            cross_energy_gap,
            norm_pinch_base,
            norm_pinch_delta,
            iterations: min_d.iterations,
            converged: min_d.converged,
        });
    }

    Ok(YamabeReport {
        lambda_base,
        grid_n: grid.n(),
        half_width: grid.half_width(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phcalc::default_probes;

    fn flat() -> DeformationTensor {
        DeformationTensor::new(ScalarField::zero(), default_probes(1.0)).unwrap()
    }

    #[test]
    fn grid_invariants() {
        assert!(BoxGrid::new(1.0, 8).is_err());
        assert!(BoxGrid::new(1.0, 7).is_err());
        assert!(BoxGrid::new(-1.0, 9).is_err());
        let g = BoxGrid::new(1.0, 9).unwrap();
        assert_eq!(g.coord(4), 0.0);
        assert_eq!(g.len(), 729);
    }

    #[test]
    fn nu_is_pinned_by_the_oracle() {
        let measured = calibrate_nu();
        assert!((measured - NU).abs() < 1e-6, "measured ν = {measured}");
    }

    #[test]
    fn volume_of_unit_box() {
        let g = BoxGrid::new(1.0, 17).unwrap();
        let v = volume_integral(|_| 1.0, &ScalarField::one(), g).unwrap();
        assert!((v - NU * 8.0).abs() < 1e-6, "volume {v}");
    }

    #[test]
    fn volume_scales_with_conformal_factor() {
        let g = BoxGrid::new(1.0, 9).unwrap();
        let c = 1.3_f64;
        let base = volume_integral(|_| 1.0, &ScalarField::one(), g).unwrap();
        let scaled = volume_integral(|_| 1.0, &ScalarField::constant(c), g).unwrap();
        assert!((scaled - c.powi(4) * base).abs() < 1e-10 * base);
    }

    #[test]
    fn nonnegative_integrand_gives_nonnegative_integral() {
        let g = BoxGrid::new(1.0, 9).unwrap();
        let v = volume_integral(|p| p.x * p.x, &ScalarField::one(), g).unwrap();
        assert!(v >= 0.0);
    }

    #[test]
    fn energy_basics() {
        let g = BoxGrid::new(1.0, 17).unwrap();
        let phi = flat();
        let one = ScalarField::one();
        let zero = GridField::zeros(g);
        assert_eq!(energy(&phi, &one, &zero).unwrap(), 0.0);

        let bump = GridField::bump(g);
        let e = energy(&phi, &one, &bump).unwrap();
        assert!(e > 0.0);

        // Quadratic homogeneity.
        let mut scaled = bump.clone();
        for v in scaled.values_mut() {
            *v *= 3.0;
        }
        let e9 = energy(&phi, &one, &scaled).unwrap();
        assert!((e9 - 9.0 * e).abs() < 1e-9 * e);
    }

    #[test]
    fn quotient_scale_invariance() {
        let g = BoxGrid::new(1.0, 17).unwrap();
        let gs = GridStructure::assemble(&flat(), &ScalarField::one(), g).unwrap();
        let u = GridField::bump(g);
        let q = gs.quotient(&u).unwrap();
        let mut u2 = u.clone();
        for v in u2.values_mut() {
            *v *= 2.0;
        }
        let q2 = gs.quotient(&u2).unwrap();
        assert!((q - q2).abs() < 1e-12 * q.abs());
        assert!(q > 0.0);
    }

    #[test]
    fn zero_denominator_is_reported() {
        let g = BoxGrid::new(1.0, 9).unwrap();
        let gs = GridStructure::assemble(&flat(), &ScalarField::one(), g).unwrap();
        assert!(matches!(
            gs.quotient(&GridField::zeros(g)),
            Err(Error::ZeroDenominator)
        ));
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let g = BoxGrid::new(1.0, 9).unwrap();
        let phi_field = ScalarField::constant(0.1)
            * (ScalarField::x().powi(2) + ScalarField::y().powi(2));
        let phi = DeformationTensor::new(phi_field, default_probes(1.0)).unwrap();
        let w = ScalarField::one() + ScalarField::constant(0.05) * ScalarField::x().powi(2);
        let gs = GridStructure::assemble(&phi, &w, g).unwrap();
        let u = GridField::bump(g);
        let grad = gs.energy_gradient(&u);
        let e0 = gs.energy(&u);
        let h = 1e-6;
        for &idx in &[g.index(4, 4, 4), g.index(2, 5, 3), g.index(6, 2, 6)] {
            let mut up = u.clone();
            up.values_mut()[idx] += h;
            let e1 = gs.energy(&up);
            let fd = (e1 - e0) / h;
            let gi = grad[idx];
            assert!(
                (fd - gi).abs() < 1e-5 * (1.0 + gi.abs()),
                "node {idx}: fd {fd}, exact {gi}"
            );
        }
    }

    #[test]
    fn minimizer_monotone_and_fixed_point() {
        let g = BoxGrid::new(1.0, 9).unwrap();
        let gs = GridStructure::assemble(&flat(), &ScalarField::one(), g).unwrap();
        let opts = MinimizeOpts {
            max_iter: 400,
            ..Default::default()
        };
        let res = minimize_quotient_assembled(&gs, &opts).unwrap();
        assert!(res.lambda > 0.0);

        // Restarting from the minimizer must not decrease beyond tol.
        let warm = MinimizeOpts {
            initial: Some(res.u_star.clone()),
            max_iter: 200,
            ..Default::default()
        };
        let res2 = minimize_quotient_assembled(&gs, &warm).unwrap();
        assert!(res2.lambda <= res.lambda + 1e-12);
        assert!((res.lambda - res2.lambda) / res.lambda < 1e-6);
    }

    #[test]
    fn lambda_decreases_with_domain_growth() {
        let opts = MinimizeOpts {
            max_iter: 600,
            ..Default::default()
        };
        let l1 = minimize_quotient(
            &flat(),
            &ScalarField::one(),
            BoxGrid::new(1.0, 13).unwrap(),
            &opts,
        )
        .unwrap()
        .lambda;
        let l2 = minimize_quotient(
            &flat(),
            &ScalarField::one(),
            BoxGrid::new(2.0, 13).unwrap(),
            &opts,
        )
        .unwrap()
        .lambda;
        assert!(
            l2 < l1,
            "quotient should fall on the larger box: L=1 gives {l1}, L=2 gives {l2}"
        );
    }

    #[test]
    fn duality_defect_shrinks_quadratically() {
        let phi = flat();
        let bump17 = |g: BoxGrid| GridField::bump(g);
        let mut defects = Vec::new();
        for n in [9, 17, 33] {
            let g = BoxGrid::new(1.0, n).unwrap();
            let u = bump17(g);
            let check = integration_by_parts_check(&phi, &u, &u).unwrap();
            defects.push(check.defect);
        }
        let order1 = (defects[0] / defects[1]).log2();
        let order2 = (defects[1] / defects[2]).log2();
        assert!(
            order1 > 1.5 && order2 > 1.5,
            "orders {order1}, {order2} (defects {defects:?})"
        );
    }

    #[test]
    fn duality_constant_is_one() {
        // The raw discrete constant carries an O(h²) bias, so pin the
        // continuum value by Richardson extrapolation of two grids.
        let phi = flat();
        let mut constants = Vec::new();
        for n in [17, 33] {
            let g = BoxGrid::new(1.0, n).unwrap();
            let u = GridField::bump(g);
            constants.push(integration_by_parts_check(&phi, &u, &u).unwrap().constant);
        }
        let extrapolated = (4.0 * constants[1] - constants[0]) / 3.0;
        assert!(
            (extrapolated - 1.0).abs() < 1e-3,
            "extrapolated duality constant {extrapolated} from {constants:?}"
        );
    }

    #[test]
    fn duality_is_symmetric_and_degenerate_on_zero() {
        let phi = flat();
        let g = BoxGrid::new(1.0, 17).unwrap();
        let u = GridField::bump(g);
        let v = GridField::from_fn(g, |p| {
            ((1.0 - p.x * p.x) * (1.0 - p.y * p.y) * (1.0 - p.z * p.z)).powi(2)
        });
        // The pairing side is symmetric by construction; the operator side
        // agrees with it to discretization error from either slot.
        let uv = integration_by_parts_check(&phi, &u, &v).unwrap();
        let vu = integration_by_parts_check(&phi, &v, &u).unwrap();
        assert_eq!(uv.rhs, vu.rhs);
        let scale = uv.rhs.abs();
        assert!(uv.defect < 0.05 * scale, "defect {} vs {scale}", uv.defect);
        assert!(vu.defect < 0.05 * scale, "defect {} vs {scale}", vu.defect);

        let zero = GridField::zeros(g);
        let z = integration_by_parts_check(&phi, &u, &zero).unwrap();
        assert_eq!(z.lhs, 0.0);
        assert_eq!(z.rhs, 0.0);
    }
}
