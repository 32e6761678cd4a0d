//! Pseudohermitian calculus from a deformation tensor.
//!
//! A compatible CR structure on the chart is encoded by a complex field
//! `φ` with `|φ| < 1`; the anti-holomorphic direction is spanned by
//! `Z̊₁̄ + φ Z̊₁`. With `G = 1/(1−|φ|²)` and `F = G^{1/2}` the unit frame
//! is `Z₁̄ = F(Z̊₁̄ + φZ̊₁)` and the dual coframe `θ¹ = F(θ̊¹ − φθ̊¹̄)`.
//!
//! Everything below is transcribed term by term from the closed
//! expressions for the torsion coefficient, the connection form, the
//! scalar curvature and the sublaplacian in this frame, with all
//! derivatives taken in the flat Heisenberg frame. Two independent
//! routes guard the transcription: the structure-equation residual for
//! the connection form, and a finite-difference extraction of the
//! curvature from `dθ₁¹`.

use num_complex::Complex64;

use crate::forms::{exterior_d, fd_exterior_d, wedge, CoframeForm1, CoframeForm2};
use crate::hgroup::{frame_deriv, jet2_eval, Dir, FrameDir, HPoint, Jet2, ScalarField};
use crate::{Error, Result};

/// A deformation tensor `φ` with its probe set for invariant checking.
///
/// Construction verifies `|φ| < 1` strictly at every probe point; each
/// downstream evaluation is additionally guarded where `1 − |φ|²` is
/// inverted.
#[derive(Clone, Debug)]
pub struct DeformationTensor {
    phi: ScalarField,
    probes: Vec<HPoint>,
}

impl DeformationTensor {
    pub fn new(phi: ScalarField, probes: Vec<HPoint>) -> Result<Self> {
        for &p in &probes {
            let v = phi.eval(p)?;
            if v.norm() >= 1.0 {
                return Err(Error::domain(
                    phi.node_label(),
                    p,
                    format!("|φ| = {} must be < 1", v.norm()),
                ));
            }
        }
        Ok(DeformationTensor { phi, probes })
    }

    /// The zero deformation tensor (the flat structure).
    pub fn flat() -> Self {
        DeformationTensor {
            phi: ScalarField::zero(),
            probes: vec![HPoint::ORIGIN],
        }
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn probes(&self) -> &[HPoint] {
        &self.probes
    }

    /// Same probe set, different field. Used by the gluing construction,
    /// whose fields only shrink `|φ|`.
    pub fn with_field(&self, phi: ScalarField) -> Result<Self> {
        DeformationTensor::new(phi, self.probes.clone())
    }
}

/// A deformation tensor paired with a positive conformal factor `w`,
/// representing the contact form `w²Θ`.
#[derive(Clone, Debug)]
pub struct PHStructure {
    pub phi: DeformationTensor,
    pub w: ScalarField,
}

impl PHStructure {
    pub fn new(phi: DeformationTensor, w: ScalarField) -> Result<Self> {
        for &p in phi.probes() {
            let v = w.eval(p)?;
            if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) || v.re <= 0.0 {
                return Err(Error::Positivity {
                    what: "conformal factor w",
                    point: p,
                    value: v.re,
                });
            }
        }
        Ok(PHStructure { phi, w })
    }
}

/// Default probe cloud: a 4³ lattice over the working box plus the origin.
pub fn default_probes(half_width: f64) -> Vec<HPoint> {
    let mut probes = vec![HPoint::ORIGIN];
    let n = 4;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let t = |m: usize| -half_width + 2.0 * half_width * (m as f64 + 0.5) / n as f64;
                probes.push(HPoint::new(t(i), t(j), t(k)));
            }
        }
    }
    probes
}

/// `G = 1/(1−|φ|²)` as a field.
fn g_field(phi: &ScalarField) -> ScalarField {
    (ScalarField::one() - phi.norm_sq()).recip()
}

/// The normalizing factor `F = (1/(1−|φ|²))^{1/2}`; real, `F ≥ 1`.
pub fn fcal(phi: &DeformationTensor) -> ScalarField {
    g_field(phi.phi()).sqrt()
}

/// The unitary coframe `θ¹ = F(θ̊¹ − φθ̊¹̄)`.
pub fn unitary_coframe(phi: &DeformationTensor) -> CoframeForm1 {
    let f = fcal(phi);
    CoframeForm1 {
        c_theta: ScalarField::zero(),
        c_1: f.clone(),
        c_1b: -(f * phi.phi().clone()),
    }
}

/// Torsion coefficient `A¹₁̄ = −φ₀/(1−|φ|²)` as a field.
pub fn torsion_field(phi: &DeformationTensor) -> ScalarField {
    -(frame_deriv(phi.phi(), FrameDir::T) * g_field(phi.phi()))
}

/// Torsion coefficient at a point.
pub fn torsion(phi: &DeformationTensor, p: HPoint) -> Result<Complex64> {
    torsion_field(phi).eval(p)
}

/// The two horizontal coefficient brackets shared by the connection form
/// and the curvature:
///
/// ```text
/// g_bracket = (φ̄₁̄ + φ̄φ₁)G + φ̄·Z̊₁̄(G) + Z̊₁(G)      (θ̊¹ slot)
/// h_bracket = (φ₁ + φφ̄₁̄)G + |φ|²·Z̊₁̄(G) + φ·Z̊₁(G)   (−θ̊¹̄ slot)
/// ```
fn coefficient_brackets(phi: &ScalarField) -> (ScalarField, ScalarField) {
    let g = g_field(phi);
    let phi_bar = phi.conj();
    let phi_1 = frame_deriv(phi, FrameDir::Z1);
    let phibar_1b = frame_deriv(&phi_bar, FrameDir::Z1b);
    let g_1 = frame_deriv(&g, FrameDir::Z1);
    let g_1b = frame_deriv(&g, FrameDir::Z1b);

    let g_bracket = (phibar_1b.clone() + phi_bar.clone() * phi_1.clone()) * g.clone()
        + phi_bar.clone() * g_1b.clone()
        + g_1.clone();
    let h_bracket = (phi_1 + phi.clone() * phibar_1b) * g
        + phi.norm_sq() * g_1b
        + phi.clone() * g_1;
    (g_bracket, h_bracket)
}

/// The pseudohermitian connection form
///
/// ```text
/// θ₁¹ = −d ln F + [φ̄φ₀ G] Θ + g_bracket θ̊¹ − h_bracket θ̊¹̄
/// ```
///
/// with `d ln F = dF/F` expanded through jets.
pub fn connection_form(phi: &DeformationTensor) -> CoframeForm1 {
    let f = fcal(phi);
    let g = g_field(phi.phi());
    let phi_bar = phi.phi().conj();
    let phi_0 = frame_deriv(phi.phi(), FrameDir::T);
    let inv_f = f.recip();

    let (g_bracket, h_bracket) = coefficient_brackets(phi.phi());

    CoframeForm1 {
        c_theta: -(inv_f.clone() * frame_deriv(&f, FrameDir::T)) + phi_bar * phi_0 * g,
        c_1: -(inv_f.clone() * frame_deriv(&f, FrameDir::Z1)) + g_bracket,
        c_1b: -(inv_f * frame_deriv(&f, FrameDir::Z1b)) - h_bracket,
    }
}

/// Tanaka-Webster scalar curvature as a field:
///
/// ```text
/// R = −Z̊₁̄[g_bracket] − Z̊₁[h_bracket] + i·φ̄φ₀·G
/// ```
pub fn scalar_curvature_field(phi: &DeformationTensor) -> ScalarField {
    let (g_bracket, h_bracket) = coefficient_brackets(phi.phi());
    let g = g_field(phi.phi());
    let torsion_term = ScalarField::i()
        * phi.phi().conj()
        * frame_deriv(phi.phi(), FrameDir::T)
        * g;
    -frame_deriv(&g_bracket, FrameDir::Z1b) - frame_deriv(&h_bracket, FrameDir::Z1)
        + torsion_term
}

/// Scalar curvature at a point; the imaginary residue must stay within
/// round-off (reality is a theorem for this expression).
pub fn scalar_curvature(phi: &DeformationTensor, p: HPoint) -> Result<f64> {
    let v = scalar_curvature_field(phi).eval(p)?;
    reality_check("scalar curvature", v)
}

fn reality_check(what: &'static str, v: Complex64) -> Result<f64> {
    if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
        return Err(Error::NumericalInvariant {
            what,
            residue: v.im.abs(),
        });
    }
    Ok(v.re)
}

/// Independent curvature estimate: extracts the `θ̊¹∧θ̊¹̄` coefficient of
/// the finite-difference exterior derivative of the connection form,
/// using `θ¹∧θ¹̄ = θ̊¹∧θ̊¹̄` for the unit coframe. Agrees with
/// [`scalar_curvature`] to `O(h²)`.
pub fn curvature_via_structure_eq(phi: &DeformationTensor, p: HPoint, h: f64) -> Result<f64> {
    let conn = connection_form(phi);
    let v = fd_exterior_d(&|q| conn.eval(q), p, h)?;
    Ok(v.c_11b.re)
}

/// Structure-equation residual `dθ¹ − θ¹∧θ₁¹ − Θ∧τ¹` with
/// `τ¹ = A¹₁̄·θ¹̄`. Its coefficients vanish identically when the
/// connection form and torsion are correct.
pub fn structure_residual(phi: &DeformationTensor) -> CoframeForm2 {
    let theta1 = unitary_coframe(phi);
    let conn = connection_form(phi);
    let tau = theta1.conj().scale(&torsion_field(phi));
    exterior_d(&theta1)
        .sub(&wedge(&theta1, &conn))
        .sub(&wedge(&CoframeForm1::theta(), &tau))
}

/// Pointwise coefficient values of the sublaplacian
///
/// ```text
/// Δ_b u = lap·Δ̊_b u + u1b1b·u₁̄₁̄ + u11·u₁₁ + u1b·u₁̄ + u1·u₁
/// ```
#[derive(Clone, Copy, Debug)]
pub struct SublapValues {
    pub lap: f64,
    pub u11: Complex64,
    pub u1b1b: Complex64,
    pub u1: Complex64,
    pub u1b: Complex64,
}

impl SublapValues {
    /// Applies the operator to the frame jet of a (real) function.
    pub fn apply(&self, jet: &Jet2) -> Complex64 {
        self.lap * jet.flat_sublap()
            + self.u1b1b * jet.d2(Dir::Z1b, Dir::Z1b)
            + self.u11 * jet.d2(Dir::Z1, Dir::Z1)
            + self.u1b * jet.j1.d_z1b
            + self.u1 * jet.j1.d_z1
    }
}

/// Coefficient fields of the sublaplacian expansion:
///
/// ```text
/// Δ_b u = [(1+|φ|²)G]·Δ̊_b u − [2φ̄G]·u₁̄₁̄ − [2φG]·u₁₁
///         − [(2φ̄₁̄ + (|φ|²)₁)G + 2φ̄·Z̊₁̄(G) + (1+|φ|²)·Z̊₁(G)]·u₁̄
///         − [(2φ₁ + (|φ|²)₁̄)G + (1+|φ|²)·Z̊₁̄(G) + 2φ·Z̊₁(G)]·u₁
/// ```
#[derive(Clone, Debug)]
pub struct SublapCoeffs {
    pub lap: ScalarField,
    pub u11: ScalarField,
    pub u1b1b: ScalarField,
    pub u1: ScalarField,
    pub u1b: ScalarField,
}

pub fn sublaplacian_coeffs(phi: &DeformationTensor) -> SublapCoeffs {
    let phi = phi.phi();
    let g = g_field(phi);
    let two = ScalarField::constant(2.0);
    let phi_bar = phi.conj();
    let norm_sq = phi.norm_sq();
    let one_plus = ScalarField::one() + norm_sq.clone();
    let g_1 = frame_deriv(&g, FrameDir::Z1);
    let g_1b = frame_deriv(&g, FrameDir::Z1b);
    let phi_1 = frame_deriv(phi, FrameDir::Z1);
    let phibar_1b = frame_deriv(&phi_bar, FrameDir::Z1b);
    let nsq_1 = frame_deriv(&norm_sq, FrameDir::Z1);
    let nsq_1b = frame_deriv(&norm_sq, FrameDir::Z1b);

    SublapCoeffs {
        lap: one_plus.clone() * g.clone(),
        u1b1b: -(two.clone() * phi_bar.clone() * g.clone()),
        u11: -(two.clone() * phi.clone() * g.clone()),
        u1b: -((two.clone() * phibar_1b + nsq_1) * g.clone()
            + two.clone() * phi_bar * g_1b.clone()
            + one_plus.clone() * g_1.clone()),
        u1: -((two.clone() * phi_1 + nsq_1b) * g
            + one_plus * g_1b
            + two * phi.clone() * g_1),
    }
}

impl SublapCoeffs {
    pub fn eval(&self, p: HPoint) -> Result<SublapValues> {
        Ok(SublapValues {
            lap: reality_check("sublaplacian leading coefficient", self.lap.eval(p)?)?,
            u11: self.u11.eval(p)?,
            u1b1b: self.u1b1b.eval(p)?,
            u1: self.u1.eval(p)?,
            u1b: self.u1b.eval(p)?,
        })
    }

    /// The operator applied to a scalar field, as a field.
    pub fn apply_field(&self, u: &ScalarField) -> ScalarField {
        let u1 = frame_deriv(u, FrameDir::Z1);
        let u1b = frame_deriv(u, FrameDir::Z1b);
        let u11 = frame_deriv(&u1, FrameDir::Z1);
        let u1b1b = frame_deriv(&u1b, FrameDir::Z1b);
        let flat = -(frame_deriv(&u1b, FrameDir::Z1) + frame_deriv(&u1, FrameDir::Z1b));
        self.lap.clone() * flat
            + self.u1b1b.clone() * u1b1b
            + self.u11.clone() * u11
            + self.u1b.clone() * u1b
            + self.u1.clone() * u1
    }
}

/// Sublaplacian `Δ_b u` at a point, for a real field `u`.
pub fn sublaplacian(phi: &DeformationTensor, u: &ScalarField, p: HPoint) -> Result<f64> {
    let coeffs = sublaplacian_coeffs(phi).eval(p)?;
    let jet = jet2_eval(u, p)?;
    reality_check("sublaplacian", coeffs.apply(&jet))
}

/// Definitional route for the sublaplacian:
///
/// ```text
/// Δ_b u = −(Z₁̄Z₁u − θ₁¹(Z₁̄)·Z₁u) + conjugate
/// ```
///
/// with the unit frame `Z₁ = F(Z̊₁ + φ̄Z̊₁̄)`, `Z₁̄ = F(Z̊₁̄ + φZ̊₁)` and the
/// connection form paired against `Z₁̄`. This is a second independent
/// derivation, not a rearrangement of the coefficient expansion.
pub fn defn_sublaplacian_oracle(
    phi: &DeformationTensor,
    u: &ScalarField,
    p: HPoint,
) -> Result<f64> {
    let f = fcal(phi);
    let phi_f = phi.phi().clone();
    let apply_z1 = |g: &ScalarField| {
        f.clone() * (frame_deriv(g, FrameDir::Z1) + phi_f.conj() * frame_deriv(g, FrameDir::Z1b))
    };
    let apply_z1b = |g: &ScalarField| {
        f.clone() * (frame_deriv(g, FrameDir::Z1b) + phi_f.clone() * frame_deriv(g, FrameDir::Z1))
    };

    let z1u = apply_z1(u);
    let z1b_z1u = apply_z1b(&z1u);

    // θ₁¹ paired with Z₁̄ = F·Z̊₁̄ + Fφ·Z̊₁ (no Θ component).
    let conn = connection_form(phi);
    let pairing = conn.c_1 * f.clone() * phi_f + conn.c_1b * f;

    let t = (z1b_z1u - pairing * z1u).eval(p)?;
    Ok(-(t + t.conj()).re)
}

/// Pointwise values of the horizontal gradient quadratic form: for real
/// `u` with `d = (e̊₁u, e̊₂u)`,
///
/// `|∇_b u|² = g11·d₁² + 2·g12·d₁d₂ + g22·d₂²`.
#[derive(Clone, Copy, Debug)]
pub struct GradFormValues {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl GradFormValues {
    pub fn apply(&self, d1: f64, d2: f64) -> f64 {
        self.g11 * d1 * d1 + 2.0 * self.g12 * d1 * d2 + self.g22 * d2 * d2
    }

    /// Matrix-vector product with the form matrix.
    pub fn mat_vec(&self, d1: f64, d2: f64) -> (f64, f64) {
        (
            self.g11 * d1 + self.g12 * d2,
            self.g12 * d1 + self.g22 * d2,
        )
    }
}

/// Gradient form of the structure `(φ, w²Θ)` at `p`:
/// `c = F²/(2w²)`, matrix `c·[[1+|φ|²+2Reφ, 2Imφ], [2Imφ, 1+|φ|²−2Reφ]]`.
///
/// This is the real-coordinates form of
/// `2F²((1+|φ|²)|u₁̄|² + φ(u₁)² + φ̄(u₁̄)²) / w²`.
pub fn grad_form(
    phi: &DeformationTensor,
    w: &ScalarField,
    p: HPoint,
) -> Result<GradFormValues> {
    let phi_v = phi.phi().eval(p)?;
    let nsq = phi_v.norm_sqr();
    if nsq >= 1.0 {
        return Err(Error::domain(
            phi.phi().node_label(),
            p,
            format!("|φ| = {} must be < 1", nsq.sqrt()),
        ));
    }
    let w_v = w.eval_real(p)?;
    if w_v <= 0.0 {
        return Err(Error::Positivity {
            what: "conformal factor w",
            point: p,
            value: w_v,
        });
    }
    let f_sq = 1.0 / (1.0 - nsq);
    let c = f_sq / (2.0 * w_v * w_v);
    Ok(GradFormValues {
        g11: c * (1.0 + nsq + 2.0 * phi_v.re),
        g12: c * 2.0 * phi_v.im,
        g22: c * (1.0 + nsq - 2.0 * phi_v.re),
    })
}

/// Squared horizontal gradient norm of a real field `u` under `(φ, w²Θ)`:
///
/// ```text
/// |∇_b u|² = 2F²((1+|φ|²)|u₁̄|² + φ(u₁)² + φ̄(u₁̄)²) · w⁻²
/// ```
pub fn grad_norm_sq(
    phi: &DeformationTensor,
    w: &ScalarField,
    u: &ScalarField,
    p: HPoint,
) -> Result<f64> {
    let jet = jet2_eval(u, p)?;
    let phi_v = phi.phi().eval(p)?;
    let w_v = w.eval_real(p)?;
    if w_v <= 0.0 {
        return Err(Error::Positivity {
            what: "conformal factor w",
            point: p,
            value: w_v,
        });
    }
    let nsq = phi_v.norm_sqr();
    if nsq >= 1.0 {
        return Err(Error::domain(
            phi.phi().node_label(),
            p,
            format!("|φ| = {} must be < 1", nsq.sqrt()),
        ));
    }
    let f_sq = 1.0 / (1.0 - nsq);
    let u1 = jet.j1.d_z1;
    let u1b = jet.j1.d_z1b;
    let val = 2.0 * f_sq / (w_v * w_v)
        * ((1.0 + nsq) * u1b.norm_sqr() + (phi_v * u1 * u1 + phi_v.conj() * u1b * u1b).re);
    Ok(val)
}

/// Conformal transformation of the curvature: for `θ^w = w²Θ`,
///
/// `R^{φ,θ^w} = w⁻³ (4 Δ_b^{φ,Θ} w + R^{φ,Θ} w)`.
pub fn conformal_curvature(
    phi: &DeformationTensor,
    w: &ScalarField,
    p: HPoint,
) -> Result<f64> {
    let w_v = w.eval_real(p)?;
    if w_v <= 0.0 {
        return Err(Error::Positivity {
            what: "conformal factor w",
            point: p,
            value: w_v,
        });
    }
    let lap_w = sublaplacian(phi, w, p)?;
    let r = scalar_curvature(phi, p)?;
    Ok((4.0 * lap_w + r * w_v) / (w_v * w_v * w_v))
}
