//! 4×4 transfer matrices for uniaxial layers at imaginary frequency.
//!
//! At `ω = iζ` every entry of the Berreman system matrix is real, so the whole
//! pipeline runs in `f64`. Fields are the tangential components
//! `(E_x, E_y, H_x, H_y)` with the plane of incidence along `x` after rotating
//! the lab frame by `η`; the layer occupies `z < 0`, the isotropic gap
//! `z > 0`, and a transfer matrix maps the fields at the back face of a layer
//! to the fields at its front face.
//!
//! The second and fourth components are carried in the balanced gauge
//! `diag(1, k̄/u, 1, k̄/u)` with `u = ζ/c` and `k̄ = sqrt(u² + k_ρ²)`. This keeps
//! every entry finite as `ζ → 0` and leaves Fresnel coefficients untouched.
//!
//! Mode ordering everywhere is `(e⁺, e⁻, o⁺, o⁻)` for anisotropic layers and
//! `(s⁺, s⁻, p⁺, p⁻)` for the gap, where `⁺` grows towards `+z`.

use nalgebra::{Matrix4x2, Vector4};

use crate::error::{Error, Result};
use crate::linalg::{invert4, max_abs, Mat2, Mat4};
use crate::media::SPEED_OF_LIGHT;

/// Relative anisotropy `|ε_x − ε_y| / ε_y` below which [`mode_basis`] refuses
/// to build the extraordinary/ordinary split.
pub const DEGENERACY_REL_TOL: f64 = 1e-13;

/// The static Matsubara term (`ζ = 0`) is evaluated at `u = STATIC_FLOOR · k_ρ`.
/// Reflection coefficients are analytic in `u²` there, so the induced error is
/// of order `STATIC_FLOOR²`.
pub const STATIC_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveIndices {
    /// Radial in-plane wavevector, 1/m.
    pub k_rho: f64,
    /// Azimuth of the in-plane wavevector, rad, in `[0, 2π)`.
    pub eta: f64,
    /// Imaginary angular frequency, rad/s.
    pub zeta: f64,
}

impl WaveIndices {
    /// Validates the indices and wraps `eta` into `[0, 2π)`.
    pub fn new(k_rho: f64, eta: f64, zeta: f64) -> Result<Self> {
        if !(k_rho.is_finite() && k_rho >= 0.0) {
            return Err(Error::validation(
                "k_rho",
                format!("{k_rho} must be finite and >= 0"),
            ));
        }
        if !(zeta.is_finite() && zeta >= 0.0) {
            return Err(Error::validation(
                "zeta",
                format!("{zeta} must be finite and >= 0"),
            ));
        }
        if !eta.is_finite() {
            return Err(Error::validation("eta", "must be finite"));
        }
        let mut eta = eta.rem_euclid(std::f64::consts::TAU);
        if eta >= std::f64::consts::TAU {
            eta = 0.0;
        }
        Ok(Self { k_rho, eta, zeta })
    }

    /// `ζ / c` in 1/m.
    #[inline]
    pub fn reduced_frequency(&self) -> f64 {
        self.zeta / SPEED_OF_LIGHT
    }

    fn ensure_propagating(&self) -> Result<()> {
        if self.zeta == 0.0 && self.k_rho == 0.0 {
            return Err(Error::DegenerateInput(
                "zeta = 0 and k_rho = 0 has no static mode".to_owned(),
            ));
        }
        Ok(())
    }

    /// Frequency used inside the matrix builders, floored for the static term.
    #[inline]
    pub(crate) fn regularized_u(&self) -> f64 {
        self.reduced_frequency().max(STATIC_FLOOR * self.k_rho)
    }
}

/// Optical state of one homogeneous uniaxial layer at a fixed frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerOptics {
    pub eps_x: f64,
    pub eps_y: f64,
    /// Optic-axis angle from the lab `x` axis, rad.
    pub theta: f64,
}

impl LayerOptics {
    pub fn new(eps_x: f64, eps_y: f64, theta: f64) -> Self {
        Self {
            eps_x,
            eps_y,
            theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemMatrix {
    /// Generator of `z`-translations in the balanced gauge, 1/m.
    pub entries: Mat4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBasis {
    pub q_e: f64,
    pub q_o: f64,
    /// Eigenvector columns.
    pub s: Mat4,
    pub s_inv: Mat4,
}

impl ModeBasis {
    fn from_columns(q_e: f64, q_o: f64, s: Mat4) -> Result<Self> {
        let s_inv =
            invert4(&s).ok_or_else(|| Error::Contract("mode basis is singular".to_owned()))?;
        Ok(Self { q_e, q_o, s, s_inv })
    }

    /// Eigenvalues matching the column order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        [self.q_e, -self.q_e, self.q_o, -self.q_o]
    }

    /// Multiplies column `j` by `factors[j]`.
    pub fn rescale_columns(&self, factors: [f64; 4]) -> Self {
        let f = Mat4::from_diagonal(&Vector4::from(factors));
        let f_inv = Mat4::from_diagonal(&Vector4::from(factors.map(|x| 1.0 / x)));
        Self {
            q_e: self.q_e,
            q_o: self.q_o,
            s: self.s * f,
            s_inv: f_inv * self.s_inv,
        }
    }
}

/// A 4×4 matrix stored as `core · exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix4 {
    pub core: Mat4,
    pub log_scale: f64,
}

impl TransferMatrix4 {
    pub fn identity() -> Self {
        Self {
            core: Mat4::identity(),
            log_scale: 0.0,
        }
    }

    /// Builds from parts and renormalizes so the largest core entry is 1.
    pub fn new(core: Mat4, log_scale: f64) -> Self {
        let mut t = Self { core, log_scale };
        t.renormalize();
        t
    }

    fn renormalize(&mut self) {
        let m = max_abs(&self.core);
        if m > 0.0 && m.is_finite() {
            self.core /= m;
            self.log_scale += m.ln();
        }
    }

    /// The represented matrix. Overflows to infinity for large `log_scale`.
    pub fn physical(&self) -> Mat4 {
        self.core * self.log_scale.exp()
    }

    /// `self · next`, i.e. `next` lies behind `self`.
    pub fn then(&self, next: &TransferMatrix4) -> Self {
        Self::new(self.core * next.core, self.log_scale + next.log_scale)
    }
}

/// Reflection amplitudes in the gap's s/p basis, laid out as
/// `[[r_ss, r_sp], [r_ps, r_pp]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionMatrix {
    pub r_ss: f64,
    pub r_sp: f64,
    pub r_ps: f64,
    pub r_pp: f64,
}

impl ReflectionMatrix {
    pub const ZERO: Self = Self {
        r_ss: 0.0,
        r_sp: 0.0,
        r_ps: 0.0,
        r_pp: 0.0,
    };

    pub fn as_matrix(&self) -> Mat2 {
        Mat2::new(self.r_ss, self.r_sp, self.r_ps, self.r_pp)
    }

    pub fn from_matrix(m: &Mat2) -> Self {
        Self {
            r_ss: m[(0, 0)],
            r_sp: m[(0, 1)],
            r_ps: m[(1, 0)],
            r_pp: m[(1, 1)],
        }
    }

    pub fn elements(&self) -> [f64; 4] {
        [self.r_ss, self.r_sp, self.r_ps, self.r_pp]
    }

    pub fn is_finite(&self) -> bool {
        self.elements().iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &ReflectionMatrix) -> f64 {
        self.elements()
            .iter()
            .zip(other.elements())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

struct Rotated {
    c: f64,
    s: f64,
    u: f64,
    k: f64,
    kbar: f64,
}

fn rotated(layer: &LayerOptics, wave: &WaveIndices) -> Rotated {
    let (s, c) = (layer.theta - wave.eta).sin_cos();
    let u = wave.regularized_u();
    let k = wave.k_rho;
    Rotated {
        c,
        s,
        u,
        k,
        kbar: u.hypot(k),
    }
}

pub fn build_system_matrix(layer: &LayerOptics, wave: &WaveIndices) -> Result<SystemMatrix> {
    wave.ensure_propagating()?;
    let Rotated { c, s, u, k, kbar } = rotated(layer, wave);
    let (ex, ey) = (layer.eps_x, layer.eps_y);
    let ez = ey;
    let exx = ex * c * c + ey * s * s;
    let eyy = ex * s * s + ey * c * c;
    let exy = (ex - ey) * s * c;

    let mut a = Mat4::zeros();
    a[(0, 3)] = -(ez * u * u + k * k) / (ez * kbar);
    a[(1, 2)] = kbar;
    a[(2, 0)] = u * exy;
    a[(2, 1)] = (eyy * u * u + k * k) / kbar;
    a[(3, 0)] = -kbar * exx;
    a[(3, 1)] = -u * exy;
    Ok(SystemMatrix { entries: a })
}

fn eigenvalues_at(ex: f64, ey: f64, c: f64, s: f64, u: f64, k: f64) -> (f64, f64) {
    let q_o = (ey * u * u + k * k).sqrt();
    let q_e = (ex * u * u + (ex / ey) * k * k * c * c + k * k * s * s).sqrt();
    (q_e, q_o)
}

/// Extraordinary and ordinary decay constants `(q_e, q_o)`, 1/m.
pub fn mode_eigenvalues(layer: &LayerOptics, wave: &WaveIndices) -> Result<(f64, f64)> {
    wave.ensure_propagating()?;
    let (s, c) = (layer.theta - wave.eta).sin_cos();
    Ok(eigenvalues_at(
        layer.eps_x,
        layer.eps_y,
        c,
        s,
        wave.reduced_frequency(),
        wave.k_rho,
    ))
}

fn normalized(v: [f64; 4]) -> Vector4<f64> {
    let v = Vector4::from(v);
    v / v.norm()
}

pub fn mode_basis(layer: &LayerOptics, wave: &WaveIndices) -> Result<ModeBasis> {
    wave.ensure_propagating()?;
    let (ex, ey) = (layer.eps_x, layer.eps_y);
    if (ex - ey).abs() < DEGENERACY_REL_TOL * ey {
        return Err(Error::IsotropicDegeneracy {
            eps_x: ex,
            eps_y: ey,
        });
    }
    let Rotated { c, s, u, k, kbar } = rotated(layer, wave);
    let (q_e, q_o) = eigenvalues_at(ex, ey, c, s, u, k);
    let qo2 = q_o * q_o;

    let e_plus = [
        qo2 * c,
        ey * u * kbar * s,
        ey * q_e * u * s,
        -ey * q_e * kbar * c,
    ];
    let e_minus = [
        qo2 * c,
        ey * u * kbar * s,
        -ey * q_e * u * s,
        ey * q_e * kbar * c,
    ];
    let o_plus = [-q_o * u * s, q_o * kbar * c, qo2 * c, ey * u * kbar * s];
    let o_minus = [q_o * u * s, -q_o * kbar * c, qo2 * c, ey * u * kbar * s];

    let s_mat = Mat4::from_columns(&[
        normalized(e_plus),
        normalized(e_minus),
        normalized(o_plus),
        normalized(o_minus),
    ]);
    ModeBasis::from_columns(q_e, q_o, s_mat)
}

/// Basis of the isotropic gap in s/p ordering. Columns are kept unscaled; in
/// the balanced gauge they read
///
/// ```text
/// [ 0    0    k₃/ε₃  k₃/ε₃ ]
/// [ k̄    k̄    0      0     ]
/// [ k₃  −k₃   0      0     ]
/// [ 0    0   −k̄      k̄     ]
/// ```
///
/// which is the lab-frame matrix up to one overall factor.
pub fn iso_basis(eps_gap: f64, wave: &WaveIndices) -> Result<ModeBasis> {
    if !(eps_gap.is_finite() && eps_gap >= 1.0) {
        return Err(Error::validation(
            "gap_eps",
            format!("{eps_gap} must be >= 1"),
        ));
    }
    wave.ensure_propagating()?;
    let u = wave.regularized_u();
    let k = wave.k_rho;
    let kbar = u.hypot(k);
    let k3 = (eps_gap * u * u + k * k).sqrt();
    let a = k3 / eps_gap;
    #[rustfmt::skip]
    let s = Mat4::new(
        0.0,  0.0,  a,     a,
        kbar, kbar, 0.0,   0.0,
        k3,   -k3,  0.0,   0.0,
        0.0,  0.0,  -kbar, kbar,
    );
    ModeBasis::from_columns(k3, k3, s)
}

/// `S · diag(e^{x_j}) · S⁻¹` with the largest exponent moved into `log_scale`.
pub fn propagator_transfer(basis: &ModeBasis, exponents: [f64; 4]) -> TransferMatrix4 {
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let diag = Vector4::from(exponents.map(|x| (x - top).exp()));
    let core = basis.s * Mat4::from_diagonal(&diag) * basis.s_inv;
    TransferMatrix4::new(core, top)
}

/// Transfer matrix across a homogeneous layer of the given thickness (m).
pub fn layer_transfer(basis: &ModeBasis, thickness: f64) -> TransferMatrix4 {
    debug_assert!(thickness >= 0.0);
    let (qe, qo) = (basis.q_e * thickness, basis.q_o * thickness);
    propagator_transfer(basis, [qe, -qe, qo, -qo])
}

/// Product in physical order: the first element is the layer facing the gap.
pub fn stack_transfer(layers: &[TransferMatrix4]) -> Result<TransferMatrix4> {
    let (first, rest) = layers
        .split_first()
        .ok_or_else(|| Error::Contract("stack_transfer needs at least one layer".to_owned()))?;
    Ok(rest.iter().fold(*first, |acc, t| acc.then(t)))
}

/// `S₀⁻¹ · T · S₀`; `log_scale` is carried through untouched.
pub fn to_sp_basis(stack: &TransferMatrix4, iso: &ModeBasis) -> TransferMatrix4 {
    TransferMatrix4 {
        core: iso.s_inv * stack.core * iso.s,
        log_scale: stack.log_scale,
    }
}

/// `S₀⁻¹ · S₁` for a half-space: only the decaying columns of `S₁` matter.
pub fn half_space_transfer(basis: &ModeBasis, iso: &ModeBasis) -> TransferMatrix4 {
    TransferMatrix4::new(iso.s_inv * basis.s, 0.0)
}

/// Transfer matrix of one homogeneous layer in the s/p basis, with the
/// columns of the incident gap modes re-gauged so that no growing exponential
/// ever multiplies them.
///
/// Only the span of columns 0 and 2 enters the Fresnel ratios, and a right
/// factor acting within that span leaves every ratio unchanged. Writing the
/// incident amplitudes in the layer's eigenbasis and dividing out the growing
/// part leaves only factors `exp(x_minus − x_plus) ≤ 1`, so the result is exact
/// for any thickness. Columns 1 and 3 are the physical ones scaled by
/// `exp(−max x)`. `exponents` follow the `(e⁺, e⁻, o⁺, o⁻)` order with the
/// `⁺` entries non-negative.
pub fn layer_sp_regauged(
    basis: &ModeBasis,
    exponents: [f64; 4],
    iso: &ModeBasis,
) -> Result<TransferMatrix4> {
    debug_assert!(exponents[0] >= 0.0 && exponents[2] >= 0.0);
    let y = basis.s_inv * iso.s;
    const PLUS: [usize; 2] = [0, 2];
    const MINUS: [usize; 2] = [1, 3];

    let w_p = Mat2::new(y[(0, 0)], y[(0, 2)], y[(2, 0)], y[(2, 2)]);
    let w_m = Mat2::new(y[(1, 0)], y[(1, 2)], y[(3, 0)], y[(3, 2)]);
    let w_p_inv = w_p
        .try_inverse()
        .ok_or_else(|| Error::SingularDenominator {
            denominator: w_p.determinant(),
        })?;
    let c = w_m * w_p_inv;

    let mut z = Matrix4x2::zeros();
    z[(0, 0)] = 1.0;
    z[(2, 1)] = 1.0;
    for (i, &mi) in MINUS.iter().enumerate() {
        for (j, &pj) in PLUS.iter().enumerate() {
            z[(mi, j)] = c[(i, j)] * (exponents[mi] - exponents[pj]).exp();
        }
    }
    let incident = iso.s_inv * basis.s * z;

    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let diag = Vector4::from(exponents.map(|x| (x - top).exp()));
    let other = iso.s_inv * basis.s * Mat4::from_diagonal(&diag) * y;

    let mut core = other;
    core.set_column(0, &incident.column(0));
    core.set_column(2, &incident.column(1));
    Ok(TransferMatrix4::new(core, 0.0))
}

/// Fresnel ratios from the two incident columns `[M_·1, M_·3]` of an s/p
/// transfer matrix. Any right factor on these columns cancels.
pub fn fresnel_from_columns(x: &Matrix4x2<f64>) -> Result<ReflectionMatrix> {
    let den = x[(0, 0)] * x[(2, 1)] - x[(0, 1)] * x[(2, 0)];
    let scale = x.amax();
    if !den.is_finite() || den == 0.0 || den.abs() < 1e-300 * scale * scale {
        return Err(Error::SingularDenominator { denominator: den });
    }
    Ok(ReflectionMatrix {
        r_ss: (x[(1, 0)] * x[(2, 1)] - x[(1, 1)] * x[(2, 0)]) / den,
        r_sp: (x[(2, 1)] * x[(3, 0)] - x[(2, 0)] * x[(3, 1)]) / den,
        r_ps: (x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)]) / den,
        r_pp: (x[(0, 0)] * x[(3, 1)] - x[(0, 1)] * x[(3, 0)]) / den,
    })
}

/// Fresnel ratios from an s/p transfer matrix; `log_scale` cancels.
pub fn fresnel_from_transfer(m: &TransferMatrix4) -> Result<ReflectionMatrix> {
    let x = Matrix4x2::from_columns(&[m.core.column(0), m.core.column(2)]);
    fresnel_from_columns(&x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn wave(k: f64, eta: f64, u: f64) -> WaveIndices {
        WaveIndices::new(k, eta, u * SPEED_OF_LIGHT).unwrap()
    }

    fn eig_residual(a: &Mat4, b: &ModeBasis) -> f64 {
        let d = Mat4::from_diagonal(&Vector4::from(b.eigenvalues()));
        (a * b.s - b.s * d).amax() / (a.amax() * b.s.amax())
    }

    #[test]
    fn eta_wraps_into_period() {
        let w = WaveIndices::new(1.0, -0.5, 0.0).unwrap();
        assert!((0.0..std::f64::consts::TAU).contains(&w.eta));
        assert!(WaveIndices::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn static_zero_k_rejected() {
        let w = WaveIndices::new(0.0, 0.0, 0.0).unwrap();
        let l = LayerOptics::new(2.0, 3.0, 0.0);
        assert!(matches!(
            build_system_matrix(&l, &w),
            Err(Error::DegenerateInput(_))
        ));
        assert!(mode_basis(&l, &w).is_err());
        assert!(iso_basis(1.0, &w).is_err());
    }

    #[test]
    fn isotropic_layer_has_no_mixing_terms() {
        let a = build_system_matrix(&LayerOptics::new(2.0, 2.0, 0.7), &wave(1e6, 0.1, 1e6))
            .unwrap()
            .entries;
        assert_eq!(a[(2, 0)], 0.0);
        assert_eq!(a[(3, 1)], 0.0);
    }

    #[test]
    fn aligned_axes_kill_sine_entries() {
        let a = build_system_matrix(&LayerOptics::new(2.0, 3.0, 0.4), &wave(1e6, 0.4, 1e6))
            .unwrap()
            .entries;
        assert_eq!(a[(2, 0)], 0.0);
        assert_eq!(a[(3, 1)], 0.0);
        let b = mode_basis(&LayerOptics::new(2.0, 3.0, 0.4), &wave(1e6, 0.4, 1e6)).unwrap();
        for col in 0..2 {
            assert_eq!(b.s[(1, col)], 0.0);
            assert_eq!(b.s[(2, col)], 0.0);
        }
    }

    #[test]
    fn hand_evaluated_extraordinary_eigenvalue() {
        let l = LayerOptics::new(2.0, 3.0, 0.0);
        let (qe, qo) = mode_eigenvalues(&l, &wave(1e6, 0.0, 1e6)).unwrap();
        assert_relative_eq!(qe, (2e12_f64 + 2e12 / 3.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(qe, 1.633e6, max_relative = 1e-3);
        assert_relative_eq!(qo, 2e6, max_relative = 1e-14);
        let perp = LayerOptics::new(2.0, 3.0, std::f64::consts::FRAC_PI_2);
        let (qe, _) = mode_eigenvalues(&perp, &wave(1e6, 0.0, 1e6)).unwrap();
        assert_relative_eq!(qe, 3e6_f64.sqrt() * 1e3, max_relative = 1e-14);
    }

    #[test]
    fn isotropic_eigenvalues_coincide() {
        let l = LayerOptics::new(2.5, 2.5, 1.1);
        let (qe, qo) = mode_eigenvalues(&l, &wave(3e5, 2.0, 7e5)).unwrap();
        assert_relative_eq!(qe, qo, max_relative = 1e-15);
    }

    #[test]
    fn degeneracy_is_reported() {
        let l = LayerOptics::new(2.0, 2.0, 0.0);
        assert!(matches!(
            mode_basis(&l, &wave(1e6, 0.0, 1e6)),
            Err(Error::IsotropicDegeneracy { .. })
        ));
    }

    #[test]
    fn gap_basis_entries_and_inverse() {
        let w = wave(7e5, 0.3, 3e5);
        let eps3 = 1.3;
        let b = iso_basis(eps3, &w).unwrap();
        let k3 = (eps3 * 9e10 + 49e10_f64).sqrt();
        assert_relative_eq!(b.s[(0, 2)], k3 / eps3, max_relative = 1e-15);
        assert_eq!(b.s[(0, 2)], b.s[(0, 3)]);
        assert!((b.s * b.s_inv - Mat4::identity()).amax() < 1e-14);
        let a = build_system_matrix(&LayerOptics::new(eps3, eps3, 0.0), &w).unwrap();
        let res = eig_residual(&a.entries, &b);
        assert!(res < 1e-14, "{res}");

        let stat = iso_basis(1.0, &WaveIndices::new(2e6, 0.0, 0.0).unwrap()).unwrap();
        assert_relative_eq!(stat.q_e, 2e6, max_relative = 1e-15);
    }

    #[test]
    fn zero_thickness_is_identity() {
        let b = mode_basis(&LayerOptics::new(2.2, 2.6, 0.3), &wave(1e6, 0.0, 5e5)).unwrap();
        let t = layer_transfer(&b, 0.0);
        assert!((t.core - Mat4::identity()).amax() < 1e-14);
        assert!(t.log_scale.abs() < 1e-14);
    }

    #[test]
    fn semigroup_halves() {
        let b = mode_basis(&LayerOptics::new(2.2, 2.6, 0.3), &wave(1e6, 0.0, 5e5)).unwrap();
        let whole = layer_transfer(&b, 2e-6);
        let half = layer_transfer(&b, 1e-6);
        let two = stack_transfer(&[half, half]).unwrap();
        let diff = (two.physical() - whole.physical()).amax() / whole.physical().amax();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn thick_layer_is_finite() {
        let b = mode_basis(&LayerOptics::new(2.2, 2.6, 0.3), &wave(1e6, 0.0, 5e5)).unwrap();
        let t = layer_transfer(&b, 800.0 / b.q_e.max(b.q_o));
        assert!(t.core.iter().all(|x| x.is_finite()));
        assert!(
            t.log_scale >= 800.0 - 1.0 && t.log_scale < 800.0 + 10.0,
            "{}",
            t.log_scale
        );
        let m = max_abs(&t.core);
        assert!((1e-8..=1e8).contains(&m));
    }

    #[test]
    fn singleton_stack_unchanged_and_order_matters() {
        let b1 = mode_basis(&LayerOptics::new(2.2, 2.6, 0.3), &wave(1e6, 0.0, 5e5)).unwrap();
        let b2 = mode_basis(&LayerOptics::new(2.2, 2.6, 1.3), &wave(1e6, 0.0, 5e5)).unwrap();
        let t1 = layer_transfer(&b1, 1e-6);
        let t2 = layer_transfer(&b2, 1e-6);
        assert_eq!(stack_transfer(&[t1]).unwrap(), t1);
        let ab = stack_transfer(&[t1, t2]).unwrap();
        let ba = stack_transfer(&[t2, t1]).unwrap();
        assert!((ab.core - ba.core).amax() > 1e-6);
        assert!(stack_transfer(&[]).is_err());
    }

    #[test]
    fn long_stack_accumulates_log_scale() {
        let b = mode_basis(&LayerOptics::new(2.2, 2.6, 0.3), &wave(1e6, 0.0, 5e5)).unwrap();
        let d = 1.0 / b.q_e.max(b.q_o);
        let layers = vec![layer_transfer(&b, d); 2000];
        let t = stack_transfer(&layers).unwrap();
        assert!((t.log_scale - 2000.0).abs() < 10.0, "{}", t.log_scale);
        let m = max_abs(&t.core);
        assert!((1e-8..=1e8).contains(&m));
    }

    #[test]
    fn basis_change_round_trip() {
        let w = wave(1e6, 0.2, 5e5);
        let iso = iso_basis(1.0, &w).unwrap();
        let id = to_sp_basis(&TransferMatrix4::identity(), &iso);
        assert!((id.core - Mat4::identity()).amax() < 1e-14);

        let b = mode_basis(&LayerOptics::new(2.2, 2.6, 0.3), &w).unwrap();
        let t = layer_transfer(&b, 1e-6);
        let m = to_sp_basis(&t, &iso);
        assert_eq!(m.log_scale, t.log_scale);
        let back = iso.s * m.core * iso.s_inv;
        assert!((back - t.core).amax() < 1e-12);
    }

    #[test]
    fn identity_reflects_nothing() {
        let r = fresnel_from_transfer(&TransferMatrix4::identity()).unwrap();
        assert_eq!(r, ReflectionMatrix::ZERO);
        let zero = TransferMatrix4 {
            core: Mat4::zeros(),
            log_scale: 0.0,
        };
        assert!(fresnel_from_transfer(&zero).is_err());
    }

    #[test]
    fn static_term_is_finite() {
        let w = WaveIndices::new(1e6, 0.4, 0.0).unwrap();
        let b = mode_basis(&LayerOptics::new(2.2, 2.6, 0.3), &w).unwrap();
        let iso = iso_basis(1.0, &w).unwrap();
        let r = fresnel_from_transfer(&half_space_transfer(&b, &iso)).unwrap();
        assert!(r.is_finite());
        // Cross-polarization vanishes with ζ.
        assert!(r.r_sp.abs() < 1e-8 && r.r_ps.abs() < 1e-8);
        assert!(r.r_ss.abs() < 1e-8);
    }

    fn layer_strategy() -> impl Strategy<Value = (LayerOptics, WaveIndices)> {
        (
            1.0..6.0_f64,
            1.0..6.0_f64,
            0.0..6.3_f64,
            0.0..6.3_f64,
            1e3..1e8_f64,
            0.0..1e8_f64,
        )
            .prop_filter("anisotropic", |(ex, ey, ..)| (ex - ey).abs() > 1e-6)
            .prop_map(|(ex, ey, th, eta, k, u)| (LayerOptics::new(ex, ey, th), wave(k, eta, u)))
    }

    proptest! {
        #[test]
        fn diagonal_blocks_are_zero((l, w) in layer_strategy()) {
            let a = build_system_matrix(&l, &w).unwrap().entries;
            for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)] {
                prop_assert_eq!(a[(i, j)], 0.0);
            }
        }

        #[test]
        fn columns_are_eigenvectors((l, w) in layer_strategy()) {
            let a = build_system_matrix(&l, &w).unwrap().entries;
            let b = mode_basis(&l, &w).unwrap();
            prop_assert!(eig_residual(&a, &b) < 1e-10);
            let err = (b.s * b.s_inv - Mat4::identity()).amax();
            prop_assert!(err < 1e-12, "{}", err);
        }

        #[test]
        fn column_scaling_cancels(
            (l, w) in layer_strategy(),
            f in prop::array::uniform4(0.01..100.0_f64),
            x in 0.01..20.0_f64,
        ) {
            let b = mode_basis(&l, &w).unwrap();
            let iso = iso_basis(1.0, &w).unwrap();
            let d = x / b.q_e.max(b.q_o);
            let naive = |b: &ModeBasis| {
                fresnel_from_transfer(&to_sp_basis(&layer_transfer(b, d), &iso)).unwrap()
            };
            let diff = naive(&b).max_abs_diff(&naive(&b.rescale_columns(f)));
            prop_assert!(diff < 1e-10, "{}", diff);
            let regauged = |b: &ModeBasis| {
                let e = [b.q_e * d, -b.q_e * d, b.q_o * d, -b.q_o * d];
                fresnel_from_transfer(&layer_sp_regauged(b, e, &iso).unwrap()).unwrap()
            };
            let diff = regauged(&b).max_abs_diff(&regauged(&b.rescale_columns(f)));
            prop_assert!(diff < 1e-10, "{}", diff);
        }

        #[test]
        fn regauged_matches_direct_product((l, w) in layer_strategy(), x in 0.0..8.0_f64) {
            let b = mode_basis(&l, &w).unwrap();
            let iso = iso_basis(1.0, &w).unwrap();
            let d = x / b.q_e.max(b.q_o);
            let direct = fresnel_from_transfer(&to_sp_basis(&layer_transfer(&b, d), &iso)).unwrap();
            let e = [b.q_e * d, -b.q_e * d, b.q_o * d, -b.q_o * d];
            let stable = fresnel_from_transfer(&layer_sp_regauged(&b, e, &iso).unwrap()).unwrap();
            prop_assert!(direct.max_abs_diff(&stable) < 1e-11, "{:?} {:?}", direct, stable);
        }

        #[test]
        fn thick_regauged_layer_is_half_space((l, w) in layer_strategy(), x in 60.0..1000.0_f64) {
            let b = mode_basis(&l, &w).unwrap();
            let iso = iso_basis(1.0, &w).unwrap();
            let d = x / b.q_e.min(b.q_o);
            let e = [b.q_e * d, -b.q_e * d, b.q_o * d, -b.q_o * d];
            let thick = fresnel_from_transfer(&layer_sp_regauged(&b, e, &iso).unwrap()).unwrap();
            let half = fresnel_from_transfer(&half_space_transfer(&b, &iso)).unwrap();
            prop_assert!(thick.max_abs_diff(&half) < 1e-12);
        }

        #[test]
        fn fresnel_ignores_log_scale((l, w) in layer_strategy(), shift in -100.0..100.0_f64) {
            let b = mode_basis(&l, &w).unwrap();
            let iso = iso_basis(1.0, &w).unwrap();
            let m = to_sp_basis(&layer_transfer(&b, 1.0 / b.q_e.max(b.q_o)), &iso);
            let shifted = TransferMatrix4 { core: m.core, log_scale: m.log_scale + shift };
            prop_assert_eq!(fresnel_from_transfer(&m).unwrap(), fresnel_from_transfer(&shifted).unwrap());
        }

        #[test]
        fn extreme_thickness_never_overflows(
            (l, _) in layer_strategy(),
            k in 0.0..1e10_f64,
            zeta in 1.0..1e18_f64,
            d in 1e-9..1.0_f64,
        ) {
            let w = WaveIndices::new(k, 0.3, zeta).unwrap();
            let b = mode_basis(&l, &w).unwrap();
            let t = layer_transfer(&b, d);
            prop_assert!(t.core.iter().all(|x| x.is_finite()));
            prop_assert!(t.log_scale.is_finite());
        }
    }
}
