//! Run configuration: a TOML file whose every key can also be given as a
//! flag. Flags win.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use voxhand_core::eval::ErrorMode;
use voxhand_core::kinematics::Span;
use voxhand_core::pipeline::desk_grid;
use voxhand_core::synth::{GenerateConfig, NoiseConfig};
use voxhand_core::voxel::{DetectionThreshold, ExemplarOptions, GridConfig, SearchOptions};
use voxhand_core::Point3;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub paths: Paths,
    pub grid: GridSection,
    pub exemplar: ExemplarSection,
    pub search: SearchSection,
    pub synth: SynthSection,
    pub eval: EvalSection,
    pub serve: ServeSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub scene_side: Option<usize>,
    pub template_side: Option<usize>,
    pub voxel_size: Option<f64>,
    pub origin: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExemplarSection {
    pub min_columns: Option<usize>,
    pub max_protrusion: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    /// Fraction of the matched exemplar's mass.
    pub threshold: Option<f64>,
    /// Voxel count; takes precedence over `threshold`.
    pub absolute_threshold: Option<u64>,
    /// Report the raw nearest neighbor for every frame.
    pub no_threshold: Option<bool>,
    pub coarse: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub count: Option<usize>,
    pub backgrounds: Option<usize>,
    pub negatives: Option<usize>,
    pub noise_sigma: Option<f64>,
    pub edge_dropout: Option<f64>,
    pub tilt: Option<[f64; 2]>,
    pub yaw: Option<[f64; 2]>,
    pub roll: Option<[f64; 2]>,
    pub depth: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub host: Option<String>,
    pub port: Option<u16>,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_RELATIVE_THRESHOLD: f64 = 0.35;

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn grid_overridden(&self) -> bool {
        self.grid != GridSection::default()
    }

    /// The desk grid with any configured overrides applied.
    pub fn grid(&self) -> CliResult<GridConfig> {
        let mut g = desk_grid();
        let s = &self.grid;
        if let Some(v) = s.scene_side {
            g.scene_side = v;
        }
        if let Some(v) = s.template_side {
            g.template_side = v;
        }
        if let Some(v) = s.voxel_size {
            g.voxel_size = v;
        }
        if let Some([x, y, z]) = s.origin {
            g.origin = Point3::new(x, y, z);
        }
        g.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(g)
    }

    pub fn exemplar_options(&self) -> ExemplarOptions {
        let d = ExemplarOptions::default();
        ExemplarOptions {
            min_columns: self.exemplar.min_columns.unwrap_or(d.min_columns),
            max_protrusion: self.exemplar.max_protrusion.unwrap_or(d.max_protrusion),
        }
    }

    pub fn search_options(&self) -> CliResult<SearchOptions> {
        let s = &self.search;
        let threshold = if s.no_threshold.unwrap_or(false) {
            None
        } else if let Some(a) = s.absolute_threshold {
            Some(DetectionThreshold::Absolute(a))
        } else {
            let r = s.threshold.unwrap_or(DEFAULT_RELATIVE_THRESHOLD);
            if !(r.is_finite() && r >= 0.0) {
                return Err(CliError::Usage(format!("threshold must be a non-negative fraction, got {r}")));
            }
            Some(DetectionThreshold::RelativeToExemplar(r))
        };
        Ok(SearchOptions { threshold, coarse_stride: s.coarse.unwrap_or(false) })
    }

    pub fn error_mode(&self) -> CliResult<ErrorMode> {
        self.eval.mode.as_deref().unwrap_or("max").parse().map_err(CliError::Usage)
    }

    pub fn generate_config(&self) -> CliResult<GenerateConfig> {
        let mut g = GenerateConfig::default();
        let s = &self.synth;
        let span = |name: &str, v: [f64; 2]| {
            if v[0].is_finite() && v[1].is_finite() && v[0] <= v[1] {
                Ok(Span::new(v[0], v[1]))
            } else {
                Err(CliError::Usage(format!("{name} range must be finite with lo <= hi")))
            }
        };
        if let Some(v) = s.tilt {
            g.sampler.ranges.tilt = span("tilt", v)?;
        }
        if let Some(v) = s.yaw {
            g.sampler.ranges.yaw = span("yaw", v)?;
        }
        if let Some(v) = s.roll {
            g.sampler.ranges.roll = span("roll", v)?;
        }
        if let Some(z) = s.depth {
            g.placement.center.z = z;
        }
        if s.noise_sigma.is_some() || s.edge_dropout.is_some() {
            let n = NoiseConfig { sigma: s.noise_sigma.unwrap_or(0.0), edge_dropout: s.edge_dropout.unwrap_or(0.0) };
            if !(n.sigma >= 0.0 && (0.0..=1.0).contains(&n.edge_dropout)) {
                return Err(CliError::Usage("noise sigma must be >= 0 and edge dropout in [0, 1]".into()));
            }
            g.noise = Some(n);
        }
        g.render.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(g)
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
        path.as_deref().ok_or_else(|| CliError::Usage(format!("missing --{flag} (or paths.{} in the config file)", flag)))
    }
}
