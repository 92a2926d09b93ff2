//! Run configuration file (JSON) and its resolution into library inputs.

use std::fs;
use std::path::{Path, PathBuf};

use casimir_core::cholesteric::{CholestericSlab, Handedness};
use casimir_core::lifshitz::{InteractionConfig, QuadratureSpec};
use casimir_core::media::{
    load_dielectric_model, DielectricModel, ThermalGrid, EXAMPLE_MODEL_LABEL,
};
use casimir_core::Error;
use serde::{Deserialize, Serialize};

use crate::output::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DielectricRef {
    /// Built-in label (`5cb-like-illustrative`, `vacuum`) or a model file
    /// path relative to the configuration file.
    Named(String),
    Inline(DielectricModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabConfig {
    pub d_tot_m: f64,
    pub pitch_m: f64,
    pub handedness: Handedness,
    #[serde(default)]
    pub theta_front_rad: f64,
    pub dielectric: DielectricRef,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_eta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_krho: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub krho_cut: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_matsubara_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matsubara_rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    Homochiral,
    Heterochiral,
}

impl Pairing {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pairing::Homochiral => "homochiral",
            Pairing::Heterochiral => "heterochiral",
        }
    }
}

/// Grid for the `sweep` verb; every thickness is combined with every pairing
/// and every separation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub d_tot_um: Vec<f64>,
    pub pairings: Vec<Pairing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSettings {
    pub resolutions: Vec<usize>,
    /// Pass threshold on the largest element error at `reference_resolution`.
    pub max_error: f64,
    pub reference_resolution: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            resolutions: vec![100, 300, 1000, 3000],
            max_error: 1e-3,
            reference_resolution: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

fn default_gap_eps() -> f64 {
    1.0
}

fn default_temperature() -> f64 {
    casimir_core::media::DEFAULT_TEMPERATURE
}

fn default_phi_points() -> usize {
    32
}

fn default_orders() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub slabs: [SlabConfig; 2],
    #[serde(default = "default_gap_eps")]
    pub gap_eps: f64,
    #[serde(default = "default_temperature")]
    pub temperature_k: f64,
    pub separations_um: Vec<f64>,
    #[serde(default = "default_phi_points")]
    pub phi_points: usize,
    #[serde(default = "default_orders")]
    pub fourier_orders: usize,
    #[serde(default)]
    pub quadrature: QuadratureOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

impl RunConfig {
    pub fn from_json_str(text: &str, context: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Core(Error::Parse {
                context: context.to_owned(),
                message: e.to_string(),
            })
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| {
            CliError::Core(Error::Io {
                path: path.to_owned(),
                source,
            })
        })?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    /// Inlines every dielectric model and checks all invariants. The result
    /// reproduces the run without reference to other files.
    pub fn resolve(mut self, base_dir: &Path) -> Result<Self, CliError> {
        for (i, slab) in self.slabs.iter_mut().enumerate() {
            let model = match &slab.dielectric {
                DielectricRef::Inline(m) => m.clone(),
                DielectricRef::Named(name) if name == EXAMPLE_MODEL_LABEL => {
                    DielectricModel::example_5cb_like()
                }
                DielectricRef::Named(name) if name == "vacuum" => DielectricModel::vacuum(),
                DielectricRef::Named(name) => {
                    let path = base_dir.join(name);
                    if !path.is_file() {
                        return Err(config_error(
                            format!("slabs[{i}].dielectric"),
                            format!("'{name}' is neither a built-in model nor a readable file"),
                        ));
                    }
                    load_dielectric_model(path)?
                }
            };
            slab.dielectric = DielectricRef::Inline(model);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for slab in self.slabs.iter() {
            self.slab(slab, None)?.validate()?;
        }
        if self.separations_um.is_empty() {
            return Err(config_error(
                "separations_um",
                "must list at least one separation",
            ));
        }
        if self
            .separations_um
            .iter()
            .any(|a| !(a.is_finite() && *a > 0.0))
        {
            return Err(config_error("separations_um", "must be strictly positive"));
        }
        if self.separations_um.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_error(
                "separations_um",
                "must be sorted ascending without repeats",
            ));
        }
        if self.phi_points < 2 * self.fourier_orders + 2 {
            return Err(config_error(
                "phi_points",
                format!(
                    "{} is too few for fourier_orders = {} (need >= 2 * orders + 2)",
                    self.phi_points, self.fourier_orders
                ),
            ));
        }
        if let Some(grid) = &self.sweep {
            if grid.d_tot_um.is_empty() || grid.pairings.is_empty() {
                return Err(config_error(
                    "sweep",
                    "needs at least one thickness and one pairing",
                ));
            }
            if grid.d_tot_um.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                return Err(config_error("sweep.d_tot_um", "must be strictly positive"));
            }
        }
        if self.oracle.resolutions.is_empty() || self.oracle.resolutions.contains(&0) {
            return Err(config_error(
                "oracle.resolutions",
                "must be a non-empty list of positive integers",
            ));
        }
        self.interaction(self.separations_um[0] / 1e6)?.validate()?;
        Ok(())
    }

    fn model(&self, slab: &SlabConfig) -> Result<DielectricModel, CliError> {
        match &slab.dielectric {
            DielectricRef::Inline(m) => Ok(m.clone()),
            DielectricRef::Named(name) => Err(CliError::Core(Error::Contract(format!(
                "dielectric '{name}' used before the configuration was resolved"
            )))),
        }
    }

    fn slab(&self, slab: &SlabConfig, d_tot: Option<f64>) -> Result<CholestericSlab, CliError> {
        Ok(CholestericSlab {
            d_tot: d_tot.unwrap_or(slab.d_tot_m),
            pitch: slab.pitch_m,
            handedness: slab.handedness,
            theta_front: slab.theta_front_rad,
            model: self.model(slab)?,
        })
    }

    pub fn thermal(&self) -> ThermalGrid {
        let defaults = ThermalGrid::default();
        ThermalGrid {
            temperature: self.temperature_k,
            max_terms: self
                .quadrature
                .max_matsubara_terms
                .unwrap_or(defaults.max_terms),
            rel_tol: self
                .quadrature
                .matsubara_rel_tol
                .unwrap_or(defaults.rel_tol),
        }
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        let defaults = QuadratureSpec::default();
        QuadratureSpec {
            n_eta: self.quadrature.n_eta.unwrap_or(defaults.n_eta),
            n_krho: self.quadrature.n_krho.unwrap_or(defaults.n_krho),
            krho_cut: self.quadrature.krho_cut.unwrap_or(defaults.krho_cut),
            phi_points: self.phi_points,
        }
    }

    pub fn slabs(&self) -> Result<[CholestericSlab; 2], CliError> {
        Ok([
            self.slab(&self.slabs[0], None)?,
            self.slab(&self.slabs[1], None)?,
        ])
    }

    /// Library input for the configured slabs at separation `a` (m).
    pub fn interaction(&self, separation: f64) -> Result<InteractionConfig, CliError> {
        let [slab1, slab2] = self.slabs()?;
        Ok(InteractionConfig {
            slab1,
            slab2,
            gap_eps: self.gap_eps,
            separation,
            thermal: self.thermal(),
            quadrature: self.quadrature_spec(),
        })
    }

    pub fn separations_m(&self) -> Vec<f64> {
        self.separations_um.iter().map(|a| a / 1e6).collect()
    }

    /// Sweep entries in output order: thickness, then pairing, then
    /// separation. Without a sweep block the configured slabs are used as is.
    pub fn sweep_entries(&self) -> Result<Vec<SweepEntry>, CliError> {
        let mut out = Vec::new();
        let Some(grid) = &self.sweep else {
            for a in self.separations_m() {
                let pairing = if self.slabs[0].handedness == self.slabs[1].handedness {
                    Pairing::Homochiral
                } else {
                    Pairing::Heterochiral
                };
                out.push(SweepEntry {
                    d_tot: self.slabs[0].d_tot_m,
                    pairing,
                    config: self.interaction(a)?,
                });
            }
            return Ok(out);
        };
        for &d_um in &grid.d_tot_um {
            let d = d_um / 1e6;
            for &pairing in &grid.pairings {
                for a in self.separations_m() {
                    let slab1 = self.slab(&self.slabs[0], Some(d))?;
                    let handedness = match pairing {
                        Pairing::Homochiral => slab1.handedness,
                        Pairing::Heterochiral => slab1.handedness.flipped(),
                    };
                    let mut slab2 = self.slab(&self.slabs[1], Some(d))?;
                    slab2.handedness = handedness;
                    out.push(SweepEntry {
                        d_tot: d,
                        pairing,
                        config: InteractionConfig {
                            slab1,
                            slab2,
                            gap_eps: self.gap_eps,
                            separation: a,
                            thermal: self.thermal(),
                            quadrature: self.quadrature_spec(),
                        },
                    });
                }
            }
        }
        Ok(out)
    }

    /// Compact canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("run configuration serializes")
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub d_tot: f64,
    pub pairing: Pairing,
    pub config: InteractionConfig,
}

fn config_error(field: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Core(Error::validation(field, reason))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "slabs": [
            {"d_tot_m": 5e-6, "pitch_m": 6e-7, "handedness": "right", "dielectric": "5cb-like-illustrative"},
            {"d_tot_m": 5e-6, "pitch_m": 6e-7, "handedness": "left", "dielectric": "5cb-like-illustrative"}
        ],
        "separations_um": [1, 2]
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json_str(MINIMAL, "t")
            .unwrap()
            .resolve(Path::new("."))
            .unwrap();
        assert_eq!(c.phi_points, 32);
        assert_eq!(c.fourier_orders, 6);
        assert_eq!(c.gap_eps, 1.0);
        assert_eq!(c.separations_m(), vec![1e-6, 2e-6]);
        assert!(matches!(c.slabs[0].dielectric, DielectricRef::Inline(_)));
        let entries = c.sweep_entries().unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].pairing, Pairing::Heterochiral);
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = RunConfig::from_json_str(MINIMAL, "t")
            .unwrap()
            .resolve(Path::new("."))
            .unwrap();
        let again = RunConfig::from_json_str(&c.canonical_json(), "t").unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn field_level_errors() {
        let bad = MINIMAL.replace("[1, 2]", "[2, 1]");
        let err = RunConfig::from_json_str(&bad, "t")
            .unwrap()
            .resolve(Path::new("."))
            .unwrap_err();
        assert!(err.to_string().contains("separations_um"), "{err}");

        let bad = MINIMAL.replace(
            "\"pitch_m\": 6e-7, \"handedness\": \"right\"",
            "\"pitch_m\": 6e-5, \"handedness\": \"right\"",
        );
        let err = RunConfig::from_json_str(&bad, "t")
            .unwrap()
            .resolve(Path::new("."))
            .unwrap_err();
        assert!(err.to_string().contains("pitch_m"), "{err}");

        let bad = MINIMAL.replace("\"separations_um\"", "\"separation_um\"");
        assert!(RunConfig::from_json_str(&bad, "t").is_err());

        let bad = MINIMAL.replacen("5cb-like-illustrative", "no-such-model", 1);
        let err = RunConfig::from_json_str(&bad, "t")
            .unwrap()
            .resolve(Path::new("."))
            .unwrap_err();
        assert!(err.to_string().contains("slabs[0].dielectric"), "{err}");
    }

    #[test]
    fn sweep_grid_expands_in_order() {
        let text = MINIMAL.replace(
            "\"separations_um\": [1, 2]",
            "\"separations_um\": [1, 2], \"sweep\": {\"d_tot_um\": [1, 5], \"pairings\": [\"homochiral\", \"heterochiral\"]}",
        );
        let c = RunConfig::from_json_str(&text, "t")
            .unwrap()
            .resolve(Path::new("."))
            .unwrap();
        let e = c.sweep_entries().unwrap();
        assert_eq!(e.len(), 8);
        assert_eq!(e[0].config.slab2.handedness, Handedness::Right);
        assert_eq!(e[2].config.slab2.handedness, Handedness::Left);
        assert_eq!(e[4].d_tot, 5e-6);
        assert_eq!(e[1].config.separation, 2e-6);
    }
}
