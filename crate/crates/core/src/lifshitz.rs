//! Casimir free energy per area between two cholesteric slabs, the torque
//! `τ = −∂E/∂φ`, and its orientational Fourier spectrum.
//!
//! ```text
//! E(φ) = (k_B T / 4π²) Σ'_n ∫₀^∞ k dk ∫₀^{2π} dη  ln det(I − r₁ r₂ e^{−2 k₃ a})
//! ```
//!
//! with `r₁` at front angle `θ₁`, `r₂` at `θ₁ + φ`, and the `n = 0` term halved.
//! The radial integral runs over `U = 2 k₃ a` (so `k dk = U dU / 4a²`) on
//! Gauss-Legendre panels anchored at the smallest `U` allowed at `ζ_n`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::berreman::{iso_basis, ReflectionMatrix, WaveIndices};
use crate::cholesteric::{CholestericSlab, SlabOptics};
use crate::error::{Error, Result};
use crate::media::{ThermalGrid, CONSTANTS, SPEED_OF_LIGHT};
use crate::quadrature::PanelRule;

/// Consecutive small Matsubara terms required before the sum is truncated.
pub const MATSUBARA_QUIET_TERMS: usize = 3;

/// Step of the five-point stencil used to cross-check the spectral torque.
pub const FD_STEP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Trapezoid points on `[0, 2π)` for the azimuth.
    pub n_eta: usize,
    /// Gauss-Legendre points per radial panel.
    pub n_krho: usize,
    /// Radial cutoff on `U − U_min` with `U = 2 k₃ a`.
    pub krho_cut: f64,
    /// Uniform samples of `φ` on `[0, π)`.
    pub phi_points: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n_eta: 32,
            n_krho: 40,
            krho_cut: 60.0,
            phi_points: 32,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_eta < 8 || !self.n_eta.is_multiple_of(2) {
            return Err(Error::validation("n_eta", "must be even and >= 8"));
        }
        if self.n_krho < 2 {
            return Err(Error::validation("n_krho", "must be >= 2"));
        }
        if !(self.krho_cut.is_finite() && self.krho_cut > 0.0) {
            return Err(Error::validation("krho_cut", "must be > 0"));
        }
        if self.phi_points < 8 || !self.phi_points.is_multiple_of(2) {
            return Err(Error::validation("phi_points", "must be even and >= 8"));
        }
        Ok(())
    }

    /// Panel edges in `U − U_min`.
    pub fn panel_edges(&self) -> Vec<f64> {
        let mut edges: Vec<f64> = [0.0, 5.0, 20.0]
            .into_iter()
            .filter(|&e| e < self.krho_cut)
            .collect();
        edges.push(self.krho_cut);
        edges
    }

    pub fn phi_grid(&self) -> Vec<f64> {
        uniform_phi_grid(self.phi_points)
    }
}

pub fn uniform_phi_grid(points: usize) -> Vec<f64> {
    (0..points).map(|j| PI * j as f64 / points as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionConfig {
    /// Its `theta_front` is `θ₁`.
    pub slab1: CholestericSlab,
    /// Its own `theta_front` is ignored; the front axis sits at `θ₁ + φ`.
    pub slab2: CholestericSlab,
    pub gap_eps: f64,
    /// Gap width `a`, m.
    pub separation: f64,
    pub thermal: ThermalGrid,
    pub quadrature: QuadratureSpec,
}

impl InteractionConfig {
    pub fn validate(&self) -> Result<()> {
        self.slab1.validate()?;
        self.slab2.validate()?;
        if !(self.gap_eps.is_finite() && self.gap_eps >= 1.0) {
            return Err(Error::validation("gap_eps", "must be >= 1"));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(Error::validation("separation", "must be > 0"));
        }
        self.thermal.validate()?;
        self.quadrature.validate()
    }

    pub fn with_separation(&self, separation: f64) -> Self {
        Self {
            separation,
            ..self.clone()
        }
    }
}

/// `ln det(I − r₁ r₂ e^{−2 k₃ a})` by the closed-form 2×2 determinant. The
/// expansion `1 − x tr(r₁r₂) + x² det r₁ det r₂` is symmetric in the two
/// matrices term by term, so swapping them gives a bit-identical result.
pub fn log_det_d(r1: &ReflectionMatrix, r2: &ReflectionMatrix, k3: f64, a: f64) -> Result<f64> {
    log_det_weighted(r1, r2, (-2.0 * k3 * a).exp())
}

#[inline]
fn log_det_weighted(r1: &ReflectionMatrix, r2: &ReflectionMatrix, x: f64) -> Result<f64> {
    let tr = r1.r_ss * r2.r_ss + r1.r_pp * r2.r_pp + (r1.r_sp * r2.r_ps + r1.r_ps * r2.r_sp);
    let det1 = r1.r_ss * r1.r_pp - r1.r_sp * r1.r_ps;
    let det2 = r2.r_ss * r2.r_pp - r2.r_sp * r2.r_ps;
    let delta = x * (x * (det1 * det2) - tr);
    if delta.is_nan() || delta <= -1.0 {
        return Err(Error::NonPositiveDeterminant(1.0 + delta));
    }
    Ok(delta.ln_1p())
}

/// Matsubara terms actually summed and the resulting energies.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// `E(φ_j)`, J/m².
    pub energy: Vec<f64>,
    /// `terms[n][j]`: weighted contribution of `ζ_n` to `E(φ_j)`, J/m².
    pub terms: Vec<Vec<f64>>,
}

impl EnergyReport {
    pub fn matsubara_terms(&self) -> usize {
        self.terms.len()
    }

    /// Whether `|term_n|` is non-increasing for `n ≥ 1` at every angle.
    pub fn terms_monotone(&self) -> bool {
        self.terms
            .iter()
            .skip(1)
            .zip(self.terms.iter().skip(2))
            .all(|(a, b)| a.iter().zip(b).all(|(x, y)| y.abs() <= x.abs()))
    }
}

#[derive(Clone, Copy)]
enum PhiSet<'a> {
    /// `φ_j = jπ/N`; reflection matrices are shared through integer keys.
    Uniform(usize),
    Arbitrary(&'a [f64]),
}

impl PhiSet<'_> {
    fn len(&self) -> usize {
        match self {
            PhiSet::Uniform(n) => *n,
            PhiSet::Arbitrary(p) => p.len(),
        }
    }
}

/// Matsubara stopping rule. `Some(terms)` fixes the count instead.
#[derive(Clone, Copy)]
enum Truncation {
    Adaptive,
    Fixed(usize),
}

fn radial_rule(quad: &QuadratureSpec) -> Result<PanelRule> {
    PanelRule::new(&quad.panel_edges(), quad.n_krho)
}

/// `∫ k dk ∫ dη ln D` at `ζ_n` for every requested angle.
fn matsubara_integral(
    config: &InteractionConfig,
    rule: &PanelRule,
    zeta: f64,
    phis: PhiSet<'_>,
) -> Result<Vec<f64>> {
    let a = config.separation;
    let eps3 = config.gap_eps;
    let u = zeta / SPEED_OF_LIGHT;
    let u_min = 2.0 * a * eps3.sqrt() * u;
    let eps1 = config.slab1.model.eval(zeta);
    let eps2 = config.slab2.model.eval(zeta);
    let theta1 = config.slab1.theta_front;
    let n_eta = config.quadrature.n_eta;
    let n_phi = phis.len();
    let d_eta = 2.0 * PI / n_eta as f64;

    let per_node: Vec<Result<Vec<f64>>> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(&s, &w)| {
            let big_u = u_min + s;
            let k3 = big_u / (2.0 * a);
            let k = (k3 * k3 - eps3 * u * u).max(0.0).sqrt();
            // Everything depends on η only through θ − η, so the frame is
            // fixed at η = 0 and the slab angles carry the azimuth.
            let wave = WaveIndices::new(k, 0.0, zeta)?;
            let iso = iso_basis(eps3, &wave)?;
            let optics1 = SlabOptics::new(&config.slab1, eps1, &wave);
            let optics2 = SlabOptics::new(&config.slab2, eps2, &wave);
            let x = (-big_u).exp();
            let jacobian = w * big_u / (4.0 * a * a) * d_eta;

            let r1: Vec<ReflectionMatrix> = (0..n_eta)
                .map(|i| optics1.reflection(theta1 - i as f64 * d_eta, &wave, &iso))
                .collect::<Result<_>>()?;

            let mut out = vec![0.0; n_phi];
            match phis {
                PhiSet::Uniform(np) => {
                    // α₀ = θ₁ + φ_j − η_i = θ₁ + π key / (N_φ N_η).
                    let period = (np * n_eta) as i64;
                    let mut table: Vec<Option<ReflectionMatrix>> = vec![None; period as usize];
                    for (j, acc) in out.iter_mut().enumerate() {
                        for (i, r1i) in r1.iter().enumerate() {
                            let key = (j as i64 * n_eta as i64 - 2 * i as i64 * np as i64)
                                .rem_euclid(period);
                            let slot = &mut table[key as usize];
                            let r2 = match slot {
                                Some(r) => *r,
                                None => {
                                    let alpha = theta1 + PI * key as f64 / period as f64;
                                    let r = optics2.reflection(alpha, &wave, &iso)?;
                                    *slot = Some(r);
                                    r
                                }
                            };
                            *acc += log_det_weighted(r1i, &r2, x)?;
                        }
                    }
                }
                PhiSet::Arbitrary(list) => {
                    for (acc, &phi) in out.iter_mut().zip(list) {
                        for (i, r1i) in r1.iter().enumerate() {
                            let alpha = (theta1 + phi - i as f64 * d_eta).rem_euclid(PI);
                            let r2 = optics2.reflection(alpha, &wave, &iso)?;
                            *acc += log_det_weighted(r1i, &r2, x)?;
                        }
                    }
                }
            }
            for v in out.iter_mut() {
                *v *= jacobian;
            }
            Ok(out)
        })
        .collect();

    let mut total = vec![0.0; n_phi];
    for node in per_node {
        for (t, v) in total.iter_mut().zip(node?) {
            *t += v;
        }
    }
    Ok(total)
}

fn energy_report(
    config: &InteractionConfig,
    phis: PhiSet<'_>,
    truncation: Truncation,
) -> Result<EnergyReport> {
    config.validate()?;
    let rule = radial_rule(&config.quadrature)?;
    let grid = &config.thermal;
    let prefactor = CONSTANTS.k_b * grid.temperature / (4.0 * PI * PI);
    let n_phi = phis.len();
    let mut energy = vec![0.0; n_phi];
    let mut terms = Vec::new();
    let mut quiet = 0;
    let mut last_ratio = f64::INFINITY;

    let cap = match truncation {
        Truncation::Adaptive => grid.max_terms,
        Truncation::Fixed(n) => n,
    };
    for n in 0..cap {
        let weight = if n == 0 { 0.5 } else { 1.0 };
        let integral = matsubara_integral(config, &rule, grid.frequency(n), phis)?;
        let term: Vec<f64> = integral.iter().map(|v| prefactor * weight * v).collect();
        last_ratio = 0.0;
        for (e, t) in energy.iter_mut().zip(&term) {
            *e += t;
        }
        for (e, t) in energy.iter().zip(&term) {
            let ratio = if *e == 0.0 { 0.0 } else { (t / e).abs() };
            last_ratio = last_ratio.max(ratio);
        }
        terms.push(term);
        if let Truncation::Adaptive = truncation {
            if last_ratio <= grid.rel_tol {
                quiet += 1;
                if quiet == MATSUBARA_QUIET_TERMS {
                    return Ok(EnergyReport { energy, terms });
                }
            } else {
                quiet = 0;
            }
        }
    }
    match truncation {
        Truncation::Fixed(_) => Ok(EnergyReport { energy, terms }),
        Truncation::Adaptive => Err(Error::Convergence {
            terms: cap,
            last_ratio,
        }),
    }
}

/// Free energy per area at misalignment `phi`, J/m².
pub fn energy_per_area(config: &InteractionConfig, phi: f64) -> Result<f64> {
    Ok(energy_report(config, PhiSet::Arbitrary(&[phi]), Truncation::Adaptive)?.energy[0])
}

/// Energies at arbitrary angles with per-term diagnostics.
pub fn energy_at_angles(config: &InteractionConfig, phis: &[f64]) -> Result<EnergyReport> {
    energy_report(config, PhiSet::Arbitrary(phis), Truncation::Adaptive)
}

/// Energies on the uniform grid `φ_j = jπ/phi_points` with diagnostics.
pub fn energy_curve(config: &InteractionConfig) -> Result<EnergyReport> {
    energy_report(
        config,
        PhiSet::Uniform(config.quadrature.phi_points),
        Truncation::Adaptive,
    )
}

/// Spectral derivative `dE/dφ` of π-periodic samples on a uniform grid. The
/// Nyquist harmonic has no well-defined derivative and is dropped.
pub fn spectral_derivative(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let phis = uniform_phi_grid(n);
    let half = n / 2;
    let mut coeffs = Vec::with_capacity(half);
    for m in 1..half.max(1) {
        if m * 2 == n {
            break;
        }
        let w = 2.0 * m as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for (e, p) in samples.iter().zip(&phis) {
            let (s, c) = (w * p).sin_cos();
            a += e * c;
            b += e * s;
        }
        coeffs.push((w, 2.0 * a / n as f64, 2.0 * b / n as f64));
    }
    phis.iter()
        .map(|p| {
            coeffs
                .iter()
                .map(|(w, a, b)| {
                    let (s, c) = (w * p).sin_cos();
                    w * (b * c - a * s)
                })
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDifferenceCheck {
    pub phi: f64,
    pub spectral: f64,
    pub finite_difference: f64,
    /// `|spectral − finite_difference| / max|τ|`.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueCurve {
    pub phi_grid: Vec<f64>,
    /// J/m².
    pub energy: Vec<f64>,
    /// J/(m² rad).
    pub torque: Vec<f64>,
    /// m.
    pub separation: f64,
    pub matsubara_terms: usize,
    pub terms_monotone: bool,
    pub fd_check: Option<FiniteDifferenceCheck>,
}

impl TorqueCurve {
    pub fn max_abs_torque(&self) -> f64 {
        self.torque.iter().fold(0.0_f64, |m, t| m.max(t.abs()))
    }

    pub fn mean_torque(&self) -> f64 {
        self.torque.iter().sum::<f64>() / self.torque.len() as f64
    }
}

/// Builds a curve from energy samples on the uniform grid.
pub fn torque_from_energy(energy: Vec<f64>, separation: f64) -> TorqueCurve {
    let torque = spectral_derivative(&energy)
        .into_iter()
        .map(|d| -d)
        .collect();
    TorqueCurve {
        phi_grid: uniform_phi_grid(energy.len()),
        energy,
        torque,
        separation,
        matsubara_terms: 0,
        terms_monotone: true,
        fd_check: None,
    }
}

/// Spectral torque at `phi` from the curve's samples (trigonometric interpolation).
fn spectral_torque_at(curve: &TorqueCurve, phi: f64) -> f64 {
    let n = curve.energy.len();
    let mut d = 0.0;
    for m in 1..n.div_ceil(2) {
        let w = 2.0 * m as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for (e, p) in curve.energy.iter().zip(&curve.phi_grid) {
            let (s, c) = (w * p).sin_cos();
            a += e * c;
            b += e * s;
        }
        let (a, b) = (2.0 * a / n as f64, 2.0 * b / n as f64);
        let (s, c) = (w * phi).sin_cos();
        d += w * (b * c - a * s);
    }
    -d
}

/// Energy, torque and a five-point finite-difference check at `φ = π/3`
/// computed from fresh energy evaluations with the same Matsubara count.
pub fn torque_curve(config: &InteractionConfig) -> Result<TorqueCurve> {
    let report = energy_curve(config)?;
    let n_terms = report.matsubara_terms();
    let monotone = report.terms_monotone();
    let mut curve = torque_from_energy(report.energy, config.separation);
    curve.matsubara_terms = n_terms;
    curve.terms_monotone = monotone;

    let phi0 = PI / 3.0;
    let h = FD_STEP;
    let stencil = [phi0 - 2.0 * h, phi0 - h, phi0 + h, phi0 + 2.0 * h];
    let e = energy_report(
        config,
        PhiSet::Arbitrary(&stencil),
        Truncation::Fixed(n_terms),
    )?
    .energy;
    let derivative = (e[0] - 8.0 * e[1] + 8.0 * e[2] - e[3]) / (12.0 * h);
    let fd = -derivative;
    let spectral = spectral_torque_at(&curve, phi0);
    let scale = curve.max_abs_torque();
    curve.fd_check = Some(FiniteDifferenceCheck {
        phi: phi0,
        spectral,
        finite_difference: fd,
        rel_error: if scale > 0.0 {
            (spectral - fd).abs() / scale
        } else {
            (spectral - fd).abs()
        },
    });
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSpectrum {
    pub orders: Vec<usize>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub separation: f64,
}

impl FourierSpectrum {
    pub fn b1(&self) -> f64 {
        self.b.first().copied().unwrap_or(0.0)
    }

    /// `(a_m / b_1, b_m / b_1)` per order.
    pub fn ratios(&self) -> Vec<(f64, f64)> {
        let b1 = self.b1();
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| (a / b1, b / b1))
            .collect()
    }

    /// Trigonometric sum at `phi`.
    pub fn evaluate(&self, phi: f64) -> f64 {
        self.orders
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(&m, (a, b))| {
                let (s, c) = (2.0 * m as f64 * phi).sin_cos();
                a * c + b * s
            })
            .sum()
    }
}

/// `a_m = (2/π)∫τ cos 2mφ`, `b_m = (2/π)∫τ sin 2mφ` for `m = 1..=max_order`
/// by the trapezoid rule on the curve's uniform grid.
pub fn fourier_components(curve: &TorqueCurve, max_order: usize) -> Result<FourierSpectrum> {
    let n = curve.torque.len();
    if max_order == 0 || 2 * max_order >= n {
        return Err(Error::Aliasing {
            order: max_order,
            points: n,
        });
    }
    let orders: Vec<usize> = (1..=max_order).collect();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for &m in &orders {
        let w = 2.0 * m as f64;
        let (mut am, mut bm) = (0.0, 0.0);
        for (t, p) in curve.torque.iter().zip(&curve.phi_grid) {
            let (s, c) = (w * p).sin_cos();
            am += t * c;
            bm += t * s;
        }
        a.push(2.0 * am / n as f64);
        b.push(2.0 * bm / n as f64);
    }
    Ok(FourierSpectrum {
        orders,
        a,
        b,
        separation: curve.separation,
    })
}

/// Evaluates each configuration independently, keeping input order. A
/// failing configuration does not stop the others.
pub fn sweep(
    configs: &[InteractionConfig],
    max_order: usize,
) -> Vec<Result<(TorqueCurve, FourierSpectrum)>> {
    configs
        .iter()
        .map(|c| {
            let curve = torque_curve(c)?;
            let spectrum = fourier_components(&curve, max_order)?;
            Ok((curve, spectrum))
        })
        .collect()
}
