//! Spiral-staircase model of a finite cholesteric slab.
//!
//! Over the slab the optic axis turns through `Θ = π d_tot / L`. The
//! extraordinary eigenvalue is averaged over that turn,
//!
//! ```text
//! q_int = (1/Θ) ∫₀^Θ q_e(α₀ + h t) dt,      α₀ = θ_front − η,
//! ```
//!
//! and the slab is replaced by a uniform uniaxial layer whose axis sits at the
//! angle `⟨θ⟩` (relative to the plane of incidence) for which
//! `q_e(⟨θ⟩) = q_int`. The sign of `⟨θ⟩` is the handedness `h`.
//!
//! The averages are evaluated through
//!
//! ```text
//! g(α) = cos²α / (q_e(α) + q₀),   q₀ = sqrt(ε_x u² + k²),
//! q_int = q₀ + k² (ε_x/ε_y − 1) ⟨g⟩,   cos²⟨θ⟩ = (q_int + q₀) ⟨g⟩,
//! ```
//!
//! which avoids the cancellation in `k² + ε_x u² − q_int²` near isotropy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::berreman::{
    fresnel_from_transfer, half_space_transfer, iso_basis, layer_sp_regauged, mode_basis,
    LayerOptics, ModeBasis, ReflectionMatrix, TransferMatrix4, WaveIndices,
};
use crate::error::{Error, Result};
use crate::media::{DielectricModel, Permittivity};
use crate::quadrature::{adaptive_gauss_legendre, periodic_mean};

/// Above this value of `max(q_e, q_o)·d_tot` the slab is treated as a
/// half-space. `e^{300}` is representable and the dropped terms are `O(e^{−600})`.
pub const X_SWITCH: f64 = 300.0;

/// Slack allowed on the arccos argument before it counts as out of domain.
pub const INVERSION_CLAMP_TOL: f64 = 1e-9;

const REMAINDER_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    Left,
    Right,
}

impl Handedness {
    /// `+1` for right, `−1` for left.
    pub fn sign(self) -> f64 {
        match self {
            Handedness::Left => -1.0,
            Handedness::Right => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Handedness::Left => Handedness::Right,
            Handedness::Right => Handedness::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlabBranch {
    Finite,
    SemiInfinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CholestericSlab {
    /// Total thickness, m.
    pub d_tot: f64,
    /// Distance over which the axis turns by π, m.
    pub pitch: f64,
    pub handedness: Handedness,
    /// Optic-axis angle at the face towards the gap, rad.
    pub theta_front: f64,
    pub model: DielectricModel,
}

impl CholestericSlab {
    pub fn new(
        d_tot: f64,
        pitch: f64,
        handedness: Handedness,
        theta_front: f64,
        model: DielectricModel,
    ) -> Result<Self> {
        let slab = Self {
            d_tot,
            pitch,
            handedness,
            theta_front,
            model,
        };
        slab.validate()?;
        Ok(slab)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_tot.is_finite() && self.d_tot > 0.0) {
            return Err(Error::validation("d_tot_m", "must be finite and > 0"));
        }
        if !(self.pitch.is_finite() && self.pitch > 0.0 && self.pitch <= self.d_tot) {
            return Err(Error::validation(
                "pitch_m",
                format!(
                    "{} must satisfy 0 < pitch <= d_tot = {} (at least one pitch inside the slab)",
                    self.pitch, self.d_tot
                ),
            ));
        }
        if !self.theta_front.is_finite() {
            return Err(Error::validation("theta_front_rad", "must be finite"));
        }
        self.model.validate()
    }

    /// Total turn of the optic axis across the slab, `π d_tot / L`.
    pub fn turn_angle(&self) -> f64 {
        PI * self.d_tot / self.pitch
    }

    pub fn with_theta_front(&self, theta_front: f64) -> Self {
        Self {
            theta_front,
            ..self.clone()
        }
    }

    pub fn with_handedness(&self, handedness: Handedness) -> Self {
        Self {
            handedness,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedMode {
    pub q_int: f64,
    /// Averaged axis angle relative to the plane of incidence, signed by
    /// handedness.
    pub theta_avg: f64,
    pub q_e_avg: f64,
    pub q_o: f64,
}

/// Helix averages for one slab at fixed `(ζ, k_ρ)`; reusable for every `η`.
#[derive(Debug, Clone)]
pub struct SlabOptics {
    pub eps: Permittivity,
    d_tot: f64,
    h: f64,
    u: f64,
    k: f64,
    q0: f64,
    q_o: f64,
    turn: f64,
    full_turns: f64,
    remainder: f64,
    period_mean_g: f64,
    isotropic: bool,
}

impl SlabOptics {
    pub fn new(slab: &CholestericSlab, eps: Permittivity, wave: &WaveIndices) -> Self {
        let u = wave.regularized_u();
        let k = wave.k_rho;
        let q0 = (eps.x * u * u + k * k).sqrt();
        let q_o = (eps.y * u * u + k * k).sqrt();
        let turn = slab.turn_angle();
        let full_turns = (turn / PI).floor();
        let remainder = (turn - full_turns * PI).max(0.0);
        let mut optics = Self {
            eps,
            d_tot: slab.d_tot,
            h: slab.handedness.sign(),
            u,
            k,
            q0,
            q_o,
            turn,
            full_turns,
            remainder,
            period_mean_g: 0.0,
            isotropic: eps.x == eps.y,
        };
        optics.period_mean_g = optics.full_period_mean_g();
        optics
    }

    #[inline]
    fn q_e(&self, alpha: f64) -> f64 {
        let (s, c) = alpha.sin_cos();
        let (ex, ey, u, k) = (self.eps.x, self.eps.y, self.u, self.k);
        (ex * u * u + (ex / ey) * k * k * c * c + k * k * s * s).sqrt()
    }

    #[inline]
    fn g(&self, alpha: f64) -> f64 {
        let c = alpha.cos();
        c * c / (self.q_e(alpha) + self.q0)
    }

    fn full_period_mean_g(&self) -> f64 {
        let mut n = 32;
        let mut prev = periodic_mean(|a| self.g(a), PI, n);
        while n < 8192 {
            n *= 2;
            let next = periodic_mean(|a| self.g(a), PI, n);
            if (next - prev).abs() <= 1e-15 * next.abs() {
                return next;
            }
            prev = next;
        }
        prev
    }

    /// `⟨g⟩` over the helix starting at relative angle `alpha0`.
    fn mean_g(&self, alpha0: f64) -> f64 {
        let full = self.full_turns * PI * self.period_mean_g;
        let rem = if self.remainder > 0.0 {
            let (a0, h) = (alpha0, self.h);
            adaptive_gauss_legendre(
                |t| self.g(a0 + h * t),
                0.0,
                self.remainder,
                REMAINDER_REL_TOL,
            )
        } else {
            0.0
        };
        (full + rem) / self.turn
    }

    fn anisotropy(&self) -> f64 {
        self.k * self.k * (self.eps.x / self.eps.y - 1.0)
    }

    /// Averaged extraordinary eigenvalue for front-face angle `theta_front`.
    pub fn q_int(&self, theta_front: f64, eta: f64) -> f64 {
        self.q0 + self.anisotropy() * self.mean_g(theta_front - eta)
    }

    pub fn averaged_mode(&self, theta_front: f64, eta: f64) -> Result<AveragedMode> {
        if self.k == 0.0 {
            let q = self.q0;
            return Ok(AveragedMode {
                q_int: q,
                theta_avg: 0.0,
                q_e_avg: q,
                q_o: self.q_o,
            });
        }
        let mean = self.mean_g(theta_front - eta);
        let q_int = self.q0 + self.anisotropy() * mean;
        let x2 = (q_int + self.q0) * mean;
        let x = clamped_sqrt(x2)?;
        let theta_avg = self.h * x.acos();
        let q_e_avg = self.q_e(theta_avg);
        Ok(AveragedMode {
            q_int,
            theta_avg,
            q_e_avg,
            q_o: self.q_o,
        })
    }

    /// Layer basis at the averaged orientation; exact isotropy uses the
    /// s/p eigenbasis of the medium.
    fn basis(&self, mode: &AveragedMode, wave: &WaveIndices) -> Result<ModeBasis> {
        if self.isotropic {
            return iso_basis(self.eps.x, wave);
        }
        let layer = LayerOptics::new(self.eps.x, self.eps.y, wave.eta + mode.theta_avg);
        mode_basis(&layer, wave)
    }

    pub fn branch(&self, mode: &AveragedMode) -> SlabBranch {
        if mode.q_e_avg.max(mode.q_o) * self.d_tot > X_SWITCH {
            SlabBranch::SemiInfinite
        } else {
            SlabBranch::Finite
        }
    }

    pub fn transfer_on_branch(
        &self,
        mode: &AveragedMode,
        wave: &WaveIndices,
        iso: &ModeBasis,
        branch: SlabBranch,
    ) -> Result<TransferMatrix4> {
        let basis = self.basis(mode, wave)?;
        match branch {
            SlabBranch::SemiInfinite => Ok(half_space_transfer(&basis, iso)),
            SlabBranch::Finite => {
                let d = self.d_tot;
                let e = [basis.q_e * d, -basis.q_e * d, basis.q_o * d, -basis.q_o * d];
                layer_sp_regauged(&basis, e, iso)
            }
        }
    }

    /// Reflection matrix seen from the gap for the given front-face angle.
    pub fn reflection(
        &self,
        theta_front: f64,
        wave: &WaveIndices,
        iso: &ModeBasis,
    ) -> Result<ReflectionMatrix> {
        let mode = self.averaged_mode(theta_front, wave.eta)?;
        let m = self.transfer_on_branch(&mode, wave, iso, self.branch(&mode))?;
        fresnel_from_transfer(&m)
    }
}

fn clamped_sqrt(x2: f64) -> Result<f64> {
    let lo = -INVERSION_CLAMP_TOL;
    let hi = (1.0 + INVERSION_CLAMP_TOL) * (1.0 + INVERSION_CLAMP_TOL);
    if !(lo..=hi).contains(&x2) {
        let argument = x2.abs().sqrt().copysign(x2);
        return Err(Error::InversionDomain { argument });
    }
    Ok(x2.clamp(0.0, 1.0).sqrt())
}

/// Helix average of the extraordinary eigenvalue.
pub fn average_eigenvalue(
    slab: &CholestericSlab,
    wave: &WaveIndices,
    eps: Permittivity,
) -> Result<f64> {
    slab.validate()?;
    Ok(SlabOptics::new(slab, eps, wave).q_int(slab.theta_front, wave.eta))
}

/// Inverts `q_e(θ) = q_int` for the angle relative to the plane of
/// incidence. `Forward` takes the positive arccos argument, `Backward` the
/// negative one; the overall sign is the handedness. Returns 0 at `k_ρ = 0`,
/// where `q_e` does not depend on the angle.
pub fn average_theta(
    q_int: f64,
    wave: &WaveIndices,
    eps: Permittivity,
    handedness: Handedness,
    direction: Direction,
) -> Result<f64> {
    let k = wave.k_rho;
    if k == 0.0 {
        return Ok(0.0);
    }
    if eps.x == eps.y {
        return Err(Error::IsotropicDegeneracy {
            eps_x: eps.x,
            eps_y: eps.y,
        });
    }
    let u = wave.regularized_u();
    let x2 = (k * k + eps.x * u * u - q_int * q_int) / (k * k * (1.0 - eps.x / eps.y));
    let x = clamped_sqrt(x2)?;
    let x = match direction {
        Direction::Forward => x,
        Direction::Backward => -x,
    };
    Ok(handedness.sign() * x.acos())
}

/// Exponents `(⟨q_e⟩d, −⟨q_e⟩d, q_o d, −q_o d)` of the averaged propagator.
pub fn averaged_propagator(mode: &AveragedMode, d_tot: f64) -> [f64; 4] {
    let (e, o) = (mode.q_e_avg * d_tot, mode.q_o * d_tot);
    [e, -e, o, -o]
}

/// Regularized s/p transfer matrix of the slab and the branch that produced it.
pub fn slab_transfer_regularized(
    slab: &CholestericSlab,
    wave: &WaveIndices,
    eps: Permittivity,
    iso: &ModeBasis,
) -> Result<(TransferMatrix4, SlabBranch)> {
    let optics = SlabOptics::new(slab, eps, wave);
    let mode = optics.averaged_mode(slab.theta_front, wave.eta)?;
    let branch = optics.branch(&mode);
    Ok((optics.transfer_on_branch(&mode, wave, iso, branch)?, branch))
}

/// Same as [`slab_transfer_regularized`] with the branch forced.
pub fn slab_transfer_on_branch(
    slab: &CholestericSlab,
    wave: &WaveIndices,
    eps: Permittivity,
    iso: &ModeBasis,
    branch: SlabBranch,
) -> Result<TransferMatrix4> {
    let optics = SlabOptics::new(slab, eps, wave);
    let mode = optics.averaged_mode(slab.theta_front, wave.eta)?;
    optics.transfer_on_branch(&mode, wave, iso, branch)
}

/// Full pipeline from dielectric model to the slab's reflection matrix.
pub fn slab_reflection(
    slab: &CholestericSlab,
    wave: &WaveIndices,
    gap_eps: f64,
) -> Result<ReflectionMatrix> {
    let eps = slab.model.eval(wave.zeta);
    let iso = iso_basis(gap_eps, wave)?;
    let (m, _) = slab_transfer_regularized(slab, wave, eps, &iso)?;
    fresnel_from_transfer(&m)
}
