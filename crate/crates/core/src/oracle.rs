//! Reference implementations used to referee the staircase pipeline: a
//! brute-force stack of thin uniform layers, and closed-form isotropic
//! Fresnel coefficients in the same s/p sign convention as the pipeline.

use nalgebra::{Matrix4x2, Vector4};

use crate::berreman::{
    fresnel_from_columns, fresnel_from_transfer, iso_basis, layer_sp_regauged, layer_transfer,
    mode_basis, stack_transfer, LayerOptics, ModeBasis, ReflectionMatrix, TransferMatrix4,
    WaveIndices,
};
use crate::cholesteric::{slab_reflection, CholestericSlab};
use crate::error::{Error, Result};
use crate::media::{DielectricModel, Permittivity, ThermalGrid};

/// A cholesteric slab discretized into `n_layers` uniform layers of thickness
/// `layer_thickness`, layer `j` (counted from the gap) at angle
/// `theta_front + j·delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStackSpec {
    pub n_layers: usize,
    pub layer_thickness: f64,
    pub delta: f64,
    pub theta_front: f64,
    pub model: DielectricModel,
}

impl DiscreteStackSpec {
    /// The stack that shadows `slab` with `layers_per_pitch` layers per pitch,
    /// so `δ = ±π / layers_per_pitch` and `L = π d / |δ|`.
    pub fn shadowing(slab: &CholestericSlab, layers_per_pitch: usize) -> Result<Self> {
        if layers_per_pitch == 0 {
            return Err(Error::validation("layers_per_pitch", "must be >= 1"));
        }
        let d = slab.pitch / layers_per_pitch as f64;
        let n_layers = (slab.d_tot / d).round().max(1.0) as usize;
        Ok(Self {
            n_layers,
            layer_thickness: d,
            delta: slab.handedness.sign() * std::f64::consts::PI / layers_per_pitch as f64,
            theta_front: slab.theta_front,
            model: slab.model.clone(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 {
            return Err(Error::validation("n_layers", "must be >= 1"));
        }
        if !(self.layer_thickness.is_finite() && self.layer_thickness > 0.0) {
            return Err(Error::validation("layer_thickness", "must be > 0"));
        }
        if !(self.delta.is_finite() && self.theta_front.is_finite()) {
            return Err(Error::validation("delta", "angles must be finite"));
        }
        Ok(())
    }

    fn layer_basis(&self, j: usize, eps: Permittivity, wave: &WaveIndices) -> Result<ModeBasis> {
        if eps.x == eps.y {
            return iso_basis(eps.x, wave);
        }
        let theta = self.theta_front + j as f64 * self.delta;
        mode_basis(&LayerOptics::new(eps.x, eps.y, theta), wave)
    }
}

/// The literal layer-by-layer product in physical order (front layer first).
pub fn discrete_stack_transfer(
    spec: &DiscreteStackSpec,
    wave: &WaveIndices,
) -> Result<TransferMatrix4> {
    spec.validate()?;
    let eps = spec.model.eval(wave.zeta);
    let layers = (0..spec.n_layers)
        .map(|j| {
            Ok(layer_transfer(
                &spec.layer_basis(j, eps, wave)?,
                spec.layer_thickness,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    stack_transfer(&layers)
}

/// Reflection of the discrete stack, embedded in the gap medium on both sides.
///
/// The two incident gap columns are pushed through the layers from the back
/// and re-orthonormalized after every layer, which tracks the same column
/// span as the full product without losing the weaker growing mode.
pub fn discrete_stack_reflection(
    spec: &DiscreteStackSpec,
    wave: &WaveIndices,
    gap_eps: f64,
) -> Result<ReflectionMatrix> {
    spec.validate()?;
    let eps = spec.model.eval(wave.zeta);
    let iso = iso_basis(gap_eps, wave)?;
    let mut v = Matrix4x2::from_columns(&[iso.s.column(0), iso.s.column(2)]);
    orthonormalize(&mut v);
    for j in (0..spec.n_layers).rev() {
        let t = layer_transfer(&spec.layer_basis(j, eps, wave)?, spec.layer_thickness);
        v = t.core * v;
        orthonormalize(&mut v);
    }
    fresnel_from_columns(&(iso.s_inv * v))
}

fn orthonormalize(v: &mut Matrix4x2<f64>) {
    let a: Vector4<f64> = v.column(0).into();
    let a = a / a.norm();
    let b: Vector4<f64> = v.column(1).into();
    let b = b - a * a.dot(&b);
    let b = b / b.norm();
    v.set_column(0, &a);
    v.set_column(1, &b);
}

fn gap_and_medium(eps_gap: f64, eps_medium: f64, wave: &WaveIndices) -> (f64, f64) {
    let u = wave.reduced_frequency();
    let k = wave.k_rho;
    (
        (eps_gap * u * u + k * k).sqrt(),
        (eps_medium * u * u + k * k).sqrt(),
    )
}

/// Half-space Fresnel coefficients. The p amplitude follows the gap basis
/// convention of the pipeline, which makes `r_pp → (ε₃ − ε_m)/(ε₃ + ε_m)` in
/// the static limit.
pub fn isotropic_fresnel(eps_gap: f64, eps_medium: f64, wave: &WaveIndices) -> ReflectionMatrix {
    let (k3, km) = gap_and_medium(eps_gap, eps_medium, wave);
    ReflectionMatrix {
        r_ss: (k3 - km) / (k3 + km),
        r_sp: 0.0,
        r_ps: 0.0,
        r_pp: (eps_gap * km - eps_medium * k3) / (eps_gap * km + eps_medium * k3),
    }
}

/// Slab of `eps_medium` with the gap medium on both sides (Airy sum).
pub fn isotropic_slab_reflection(
    eps_gap: f64,
    eps_medium: f64,
    thickness: f64,
    wave: &WaveIndices,
) -> ReflectionMatrix {
    let (_, km) = gap_and_medium(eps_gap, eps_medium, wave);
    let half = isotropic_fresnel(eps_gap, eps_medium, wave);
    let x = (-2.0 * km * thickness).exp();
    let airy = |r: f64| r * (1.0 - x) / (1.0 - r * r * x);
    ReflectionMatrix {
        r_ss: airy(half.r_ss),
        r_sp: 0.0,
        r_ps: 0.0,
        r_pp: airy(half.r_pp),
    }
}

/// Reflection of one uniform birefringent layer computed in a single step.
pub fn uniform_slab_reflection(
    model: &DielectricModel,
    theta: f64,
    thickness: f64,
    wave: &WaveIndices,
    gap_eps: f64,
) -> Result<ReflectionMatrix> {
    let eps = model.eval(wave.zeta);
    let iso = iso_basis(gap_eps, wave)?;
    let basis = if eps.x == eps.y {
        iso_basis(eps.x, wave)?
    } else {
        mode_basis(&LayerOptics::new(eps.x, eps.y, theta), wave)?
    };
    let (xe, xo) = (basis.q_e * thickness, basis.q_o * thickness);
    let m = layer_sp_regauged(&basis, [xe, -xe, xo, -xo], &iso)?;
    fresnel_from_transfer(&m)
}

/// Largest difference between an untwisted discrete stack and one uniform
/// layer of the same total thickness. Both models coincide without twist.
pub fn zero_twist_error(
    slab: &CholestericSlab,
    probes: &[WaveIndices],
    gap_eps: f64,
    layers_per_pitch: usize,
) -> Result<f64> {
    let mut spec = DiscreteStackSpec::shadowing(slab, layers_per_pitch)?;
    spec.delta = 0.0;
    let thickness = spec.n_layers as f64 * spec.layer_thickness;
    let mut max_error = 0.0_f64;
    for w in probes {
        let stack = discrete_stack_reflection(&spec, w, gap_eps)?;
        let one = uniform_slab_reflection(&slab.model, slab.theta_front, thickness, w, gap_eps)?;
        max_error = max_error.max(stack.max_abs_diff(&one));
    }
    Ok(max_error)
}

/// Fixed probe set: the first few Matsubara frequencies at `temperature`,
/// in-plane wavenumbers around the inverse micron, two azimuths.
pub fn default_probes(temperature: f64) -> Result<Vec<WaveIndices>> {
    let spacing = ThermalGrid {
        temperature,
        ..ThermalGrid::default()
    }
    .spacing();
    let mut probes = Vec::new();
    for n in [1.0, 4.0, 16.0] {
        for k in [2e5, 1e6, 4e6] {
            for eta in [0.3, 1.9] {
                probes.push(WaveIndices::new(k, eta, n * spacing)?);
            }
        }
    }
    Ok(probes)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint {
    pub layers_per_pitch: usize,
    pub delta: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub points: Vec<ConvergencePoint>,
    /// Fitted exponent `p` in `error ∝ δ^p`.
    pub slope: Option<f64>,
}

impl ConvergenceStudy {
    pub fn is_monotone(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].max_error < w[0].max_error)
    }
}

/// Largest elementwise staircase-vs-stack difference over the probe set for
/// each resolution.
pub fn convergence_study(
    slab: &CholestericSlab,
    probes: &[WaveIndices],
    gap_eps: f64,
    resolutions: &[usize],
) -> Result<ConvergenceStudy> {
    let staircase = probes
        .iter()
        .map(|w| slab_reflection(slab, w, gap_eps))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let spec = DiscreteStackSpec::shadowing(slab, n)?;
        let mut max_error = 0.0_f64;
        for (w, r) in probes.iter().zip(&staircase) {
            let d = discrete_stack_reflection(&spec, w, gap_eps)?;
            max_error = max_error.max(d.max_abs_diff(r));
        }
        points.push(ConvergencePoint {
            layers_per_pitch: n,
            delta: spec.delta.abs(),
            max_error,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.delta).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.max_error).collect();
    Ok(ConvergenceStudy {
        slope: log_log_slope(&xs, &ys),
        points,
    })
}
