//! JSON run configurations.
//!
//! Every document shares a header (`schema_version`, `output_dir`, `seed`,
//! `frame`, `spec`) and carries one section per subcommand that needs one.
//! Unknown fields are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::AnalyzeOptions;
use crate::error::{Error, Result};
use crate::frame::ScalingFrame;
use crate::grid::Grid;
use crate::nonlinearity::{Nonlinearity, Term};
use crate::relevance::{predicted_rates, PdeSpec};
use crate::scaledflow::ScaledConfig;
use crate::simulator::{InitialData, IntegratorConfig};
use crate::spectrum::{ProfileKind, ProfileOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Recorded in every output; no stage draws random numbers.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub frame: Option<ScalingFrame>,
    #[serde(default)]
    pub spec: Option<PdeSpec>,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub scaled: Option<ScaledRunConfig>,
    #[serde(default)]
    pub analyze: Option<AnalyzeOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// `eig`: eigenvalues for `j = 0..=max_index`.
    pub max_index: u32,
    /// `profile`: target grid; a default grid for the dimension when absent.
    pub grid: Option<Grid>,
    /// `profile`: defaults to the kind selected by the frame.
    pub kind: Option<ProfileKind>,
    pub profile: ProfileOptions,
    /// `kernel` and `decay-fit`.
    pub tau: f64,
    /// `kernel`: radii `0..=z_max` in `z_points` samples.
    pub z_max: f64,
    pub z_points: usize,
    /// `decay-fit`: defaults to a range scaled with `τ`.
    pub z_range: Option<(f64, f64)>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            max_index: 4,
            grid: None,
            kind: None,
            profile: ProfileOptions::default(),
            tau: 1.0,
            z_max: 10.0,
            z_points: 201,
            z_range: None,
        }
    }
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("spectrum.tau must be positive"));
        }
        if !(self.z_max > 0.0 && self.z_max.is_finite()) || self.z_points < 2 {
            return Err(Error::invalid("spectrum.z_max must be positive and z_points >= 2"));
        }
        if let Some((a, b)) = self.z_range {
            if !(a > 0.0 && b > a && b.is_finite()) {
                return Err(Error::invalid("spectrum.z_range must satisfy 0 < a < b"));
            }
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub grid: Grid,
    /// Overrides the header spec's monomials with an equivalent (and
    /// cheaper) divergence form.
    #[serde(default)]
    pub nonlinearity: Option<Nonlinearity>,
    pub initial: InitialData,
    pub integrator: IntegratorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledRunConfig {
    /// The `ξ`-grid.
    pub grid: Grid,
    #[serde(default)]
    pub nonlinearity: Option<Nonlinearity>,
    /// `v(ξ, τ_start)`.
    pub initial: InitialData,
    pub integrator: ScaledConfig,
}

/// The equation a run integrates.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub n: u32,
    pub d: u32,
    pub nonlinearity: Nonlinearity,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// A bare header.
    pub fn new() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            output_dir: None,
            seed: 0,
            frame: None,
            spec: None,
            spectrum: None,
            simulate: None,
            scaled: None,
            analyze: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(spec) = &self.spec {
            spec.validate()?;
        }
        if let Some(s) = &self.spectrum {
            s.validate()?;
        }
        if let Some(s) = &self.simulate {
            s.grid.validate()?;
            s.integrator.validate()?;
        }
        if let Some(s) = &self.scaled {
            s.grid.validate()?;
            s.integrator.validate()?;
        }
        Ok(())
    }

    pub fn require_spec(&self) -> Result<&PdeSpec> {
        self.spec.as_ref().ok_or_else(|| Error::invalid("config needs a 'spec'"))
    }

    /// The header frame, or the frame of the predicted asymptotics.
    pub fn resolve_frame(&self) -> Result<ScalingFrame> {
        if let Some(f) = self.frame {
            return Ok(f);
        }
        let spec = self.require_spec()?;
        predicted_rates(spec)?
            .frame()
            .copied()
            .ok_or_else(|| Error::invalid("no frame given and the spec has no predicted frame"))
    }

    /// Equation from the header spec and an optional override, checked for
    /// consistency with the grid dimension.
    pub fn equation(&self, grid: &Grid, nl: Option<&Nonlinearity>) -> Result<Equation> {
        let spec = self.require_spec()?;
        if grid.dim as u32 != spec.d {
            return Err(Error::invalid(format!(
                "grid dimension {} differs from spec dimension {}",
                grid.dim, spec.d
            )));
        }
        let nonlinearity = match nl {
            Some(nl) => {
                nl.validate(spec.n, spec.d)?;
                if predicted_rates(&nl.to_pde_spec(spec.n, spec.d))? != predicted_rates(spec)? {
                    return Err(Error::invalid("nonlinearity override changes the predicted asymptotics of the spec"));
                }
                nl.clone()
            }
            None => Nonlinearity {
                terms: spec.nonlinearity.iter().map(|t| Term::Monomial { term: t.clone() }).collect(),
            },
        };
        Ok(Equation {
            n: spec.n,
            d: spec.d,
            nonlinearity,
        })
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIM: &str = r#"{
        "schema_version": 1,
        "spec": {"n": 2, "d": 1},
        "simulate": {
            "grid": {"dim": 1, "points": 256, "length": 100.0},
            "initial": {"kind": "gaussian", "amplitude": 0.1, "width": 2.0},
            "integrator": {"t_end": 10.0}
        }
    }"#;

    #[test]
    fn parses_a_minimal_simulation() {
        let cfg = RunConfig::from_json(SIM).unwrap();
        let sim = cfg.simulate.as_ref().unwrap();
        let eq = cfg.equation(&sim.grid, None).unwrap();
        assert_eq!((eq.n, eq.d), (2, 1));
        assert!(eq.nonlinearity.is_empty());
        assert_eq!(cfg.resolve_frame().unwrap(), ScalingFrame::standard(2, 1).unwrap());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = SIM.replace("\"schema_version\": 1,", "\"schema_version\": 1, \"colour\": 3,");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Invalid(_))));
        let bad = SIM.replace("\"t_end\": 10.0", "\"t_end\": 10.0, \"tolerence\": 1e-3");
        assert!(RunConfig::from_json(&bad).is_err());
        let bad = SIM.replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn override_must_match_the_spec() {
        let spec = PdeSpec::cahn_hilliard(2);
        let mut cfg = RunConfig::new();
        cfg.spec = Some(spec);
        let grid = Grid::new(2, 64, 20.0).unwrap();
        assert!(cfg.equation(&grid, Some(&Nonlinearity::cahn_hilliard())).is_ok());
        assert!(cfg.equation(&Grid::new(1, 64, 20.0).unwrap(), None).is_err());
        cfg.spec = Some(PdeSpec {
            n: 2,
            d: 2,
            nonlinearity: vec![],
        });
        // Both predict the standard frame in d = 2, so the override is accepted.
        assert!(cfg.equation(&grid, Some(&Nonlinearity::cahn_hilliard())).is_ok());
        cfg.spec = Some(PdeSpec {
            n: 2,
            d: 1,
            nonlinearity: vec![],
        });
        let line = Grid::new(1, 64, 20.0).unwrap();
        assert!(cfg.equation(&line, Some(&Nonlinearity::cahn_hilliard())).is_err());
    }
}
