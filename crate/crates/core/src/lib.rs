//! Casimir-Lifshitz free energy and torque between two finite-thickness
//! cholesteric liquid-crystal slabs across an isotropic gap.
//!
//! Each slab is reduced to a single effective uniaxial layer (the staircase
//! average of its helix), whose 4×4 transfer matrix yields the 2×2
//! reflection matrix seen from the gap. The Lifshitz sum over Matsubara
//! frequencies then gives `E(φ)` and the torque `τ = −∂E/∂φ`.
//!
//! ```no_run
//! use casimir_core::{torque_curve, fourier_components, InteractionConfig};
//! # fn run(config: InteractionConfig) -> casimir_core::Result<()> {
//! let curve = torque_curve(&config)?;
//! let spectrum = fourier_components(&curve, 4)?;
//! println!("b1 = {:e}", spectrum.b1());
//! # Ok(()) }
//! ```

pub mod berreman;
pub mod cholesteric;
pub mod error;
pub mod lifshitz;
pub mod linalg;
pub mod media;
pub mod oracle;
pub mod quadrature;

pub use berreman::{ReflectionMatrix, TransferMatrix4, WaveIndices};
pub use cholesteric::{CholestericSlab, Handedness, SlabBranch};
pub use error::{Error, Result};
pub use lifshitz::{
    energy_curve, energy_per_area, fourier_components, log_det_d, sweep, torque_curve,
    EnergyReport, FourierSpectrum, InteractionConfig, QuadratureSpec, TorqueCurve,
};
pub use media::{DielectricModel, OscillatorTerm, Permittivity, ThermalGrid};
