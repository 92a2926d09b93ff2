//! Dielectric response on the imaginary frequency axis, the Matsubara grid,
//! and the physical constants shared by every other module.
//!
//! Permittivities follow the undamped Lorentz form evaluated at `ω = iζ`:
//!
//! ```text
//! ε(iζ) = ε_D + Σ_k C_k / (1 + ζ² / ω_k²)
//! ```
//!
//! which is real, positive and non-increasing in `ζ`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values (exact in the SI since 2019).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Speed of light in vacuum, m/s.
    pub c: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    c: 299_792_458.0,
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
};

pub const SPEED_OF_LIGHT: f64 = CONSTANTS.c;

pub const DEFAULT_TEMPERATURE: f64 = 298.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorTerm {
    pub strength: f64,
    /// Resonance angular frequency in rad/s.
    #[serde(rename = "resonance_rad_s")]
    pub resonance: f64,
}

impl OscillatorTerm {
    pub fn new(strength: f64, resonance: f64) -> Self {
        Self {
            strength,
            resonance,
        }
    }

    #[inline]
    fn eval(&self, zeta: f64) -> f64 {
        let x = zeta / self.resonance;
        self.strength / (1.0 + x * x)
    }
}

/// Principal permittivities of a uniaxial medium, `ε_x` along the optic axis
/// and `ε_y = ε_z` across it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Permittivity {
    pub x: f64,
    pub y: f64,
}

impl Permittivity {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn isotropic(eps: f64) -> Self {
        Self { x: eps, y: eps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DielectricModel {
    pub label: String,
    pub debye_static_x: f64,
    pub debye_static_y: f64,
    #[serde(default)]
    pub oscillators_x: Vec<OscillatorTerm>,
    #[serde(default)]
    pub oscillators_y: Vec<OscillatorTerm>,
}

impl DielectricModel {
    /// Builds a model and checks every invariant.
    pub fn new(
        label: impl Into<String>,
        debye_static_x: f64,
        debye_static_y: f64,
        oscillators_x: Vec<OscillatorTerm>,
        oscillators_y: Vec<OscillatorTerm>,
    ) -> Result<Self> {
        let model = Self {
            label: label.into(),
            debye_static_x,
            debye_static_y,
            oscillators_x,
            oscillators_y,
        };
        model.validate()?;
        Ok(model)
    }

    /// Constant permittivity on both axes.
    pub fn constant(label: impl Into<String>, eps_x: f64, eps_y: f64) -> Result<Self> {
        Self::new(label, eps_x, eps_y, Vec::new(), Vec::new())
    }

    pub fn vacuum() -> Self {
        Self {
            label: "vacuum".to_owned(),
            debye_static_x: 1.0,
            debye_static_y: 1.0,
            oscillators_x: Vec::new(),
            oscillators_y: Vec::new(),
        }
    }

    /// Illustrative positive-birefringence parameter set shaped like a
    /// cyanobiphenyl nematic: one infrared and one ultraviolet oscillator per
    /// axis on top of a constant background. These are NOT literature values.
    pub fn example_5cb_like() -> Self {
        Self {
            label: EXAMPLE_MODEL_LABEL.to_owned(),
            debye_static_x: 1.10,
            debye_static_y: 1.05,
            oscillators_x: vec![
                OscillatorTerm::new(0.40, 1.5e14),
                OscillatorTerm::new(1.30, 1.2e16),
            ],
            oscillators_y: vec![
                OscillatorTerm::new(0.35, 1.5e14),
                OscillatorTerm::new(1.00, 1.3e16),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, debye) in [("x", self.debye_static_x), ("y", self.debye_static_y)] {
            if !debye.is_finite() || debye < 1.0 {
                return Err(Error::validation(
                    format!("debye_static_{axis}"),
                    format!("{debye} must be finite and >= 1 so that eps(i zeta) >= 1"),
                ));
            }
        }
        for (axis, terms) in [("x", &self.oscillators_x), ("y", &self.oscillators_y)] {
            for (i, term) in terms.iter().enumerate() {
                if !term.strength.is_finite() || term.strength < 0.0 {
                    return Err(Error::validation(
                        format!("oscillators_{axis}[{i}].strength"),
                        format!("{} must be finite and >= 0", term.strength),
                    ));
                }
                if !term.resonance.is_finite() || term.resonance <= 0.0 {
                    return Err(Error::validation(
                        format!("oscillators_{axis}[{i}].resonance_rad_s"),
                        format!("{} must be finite and > 0", term.resonance),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, zeta: f64) -> Permittivity {
        let axis = |debye: f64, terms: &[OscillatorTerm]| {
            terms.iter().fold(debye, |acc, t| acc + t.eval(zeta))
        };
        Permittivity {
            x: axis(self.debye_static_x, &self.oscillators_x),
            y: axis(self.debye_static_y, &self.oscillators_y),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: "dielectric model".to_owned(),
            message: e.to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("dielectric model serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string() + "\n").map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }
}

pub const EXAMPLE_MODEL_LABEL: &str = "5cb-like-illustrative";

pub fn eval_permittivity(model: &DielectricModel, zeta: f64) -> Permittivity {
    model.eval(zeta)
}

pub fn load_dielectric_model(path: impl AsRef<Path>) -> Result<DielectricModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    DielectricModel::from_json_str(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            context: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Temperature and truncation controls for the Matsubara sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalGrid {
    pub temperature: f64,
    pub max_terms: usize,
    pub rel_tol: f64,
}

impl Default for ThermalGrid {
    fn default() -> Self {
        Self {
            temperature: DEFAULT_TEMPERATURE,
            max_terms: 5000,
            rel_tol: 1e-8,
        }
    }
}

impl ThermalGrid {
    pub fn new(temperature: f64, max_terms: usize, rel_tol: f64) -> Result<Self> {
        let grid = Self {
            temperature,
            max_terms,
            rel_tol,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::validation("temperature", "must be > 0 K"));
        }
        if self.max_terms < 1 {
            return Err(Error::validation("max_terms", "must be >= 1"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::validation("rel_tol", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Spacing of the Matsubara grid, `2π k_B T / ħ`.
    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI * CONSTANTS.k_b * self.temperature / CONSTANTS.hbar
    }

    pub fn frequency(&self, n: usize) -> f64 {
        n as f64 * self.spacing()
    }
}

pub fn matsubara_frequency(n: usize, grid: &ThermalGrid) -> f64 {
    grid.frequency(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn matsubara_zero_and_linear() {
        let grid = ThermalGrid::new(300.0, 10, 1e-8).unwrap();
        assert_eq!(matsubara_frequency(0, &grid), 0.0);
        let z1 = matsubara_frequency(1, &grid);
        // 2π k_B 300 / ħ evaluated by hand.
        assert_relative_eq!(z1, 2.4678e14, max_relative = 1e-4);
        assert_eq!(matsubara_frequency(10, &grid), 10.0 * z1);
    }

    #[test]
    fn constant_model() {
        let m = DielectricModel::constant("c", 2.0, 3.0).unwrap();
        assert_eq!(m.eval(1e15), Permittivity::new(2.0, 3.0));
    }

    #[test]
    fn half_amplitude_at_resonance() {
        let m = DielectricModel::new(
            "one",
            1.5,
            1.5,
            vec![OscillatorTerm::new(1.0, 1e16)],
            vec![],
        )
        .unwrap();
        assert_relative_eq!(m.eval(1e16).x, 2.0, max_relative = 1e-15);
        assert_eq!(m.eval(1e16).y, 1.5);
    }

    #[test]
    fn example_model_tends_to_background() {
        let m = DielectricModel::example_5cb_like();
        let far = m.eval(1e24);
        assert!((far.x - m.debye_static_x).abs() < 1e-6);
        assert!((far.y - m.debye_static_y).abs() < 1e-6);
        let grid = ThermalGrid::default();
        for n in 0..200 {
            let eps = m.eval(grid.frequency(n));
            assert!(eps.x > eps.y, "positive birefringence at n = {n}");
        }
    }

    #[test]
    fn negative_strength_rejected() {
        let text = r#"{"label":"bad","debye_static_x":1.2,"debye_static_y":1.1,
            "oscillators_x":[{"strength":-1.0,"resonance_rad_s":1e15}],"oscillators_y":[]}"#;
        let err = DielectricModel::from_json_str(text).unwrap_err();
        assert!(
            err.to_string().contains("oscillators_x[0].strength"),
            "{err}"
        );
    }

    #[test]
    fn nonpositive_resonance_rejected() {
        let err = DielectricModel::new("r", 1.0, 1.0, vec![], vec![OscillatorTerm::new(1.0, 0.0)])
            .unwrap_err();
        assert!(err.to_string().contains("oscillators_y[0].resonance_rad_s"));
    }

    #[test]
    fn vacuum_file() {
        let text = r#"{"label":"vac","debye_static_x":1.0,"debye_static_y":1.0,
            "oscillators_x":[],"oscillators_y":[]}"#;
        let m = DielectricModel::from_json_str(text).unwrap();
        assert_eq!(m.eval(0.0), Permittivity::isotropic(1.0));
        assert_eq!(m.eval(1e17), Permittivity::isotropic(1.0));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dielectric_model("/nonexistent/model.json").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn thermal_grid_validation() {
        assert!(ThermalGrid::new(0.0, 10, 1e-8).is_err());
        assert!(ThermalGrid::new(300.0, 0, 1e-8).is_err());
        assert!(ThermalGrid::new(300.0, 10, 1.0).is_err());
    }
}
