//! TOML experiment configuration and its resolution into concrete run
//! parameters (couplings, boundaries, step counts, seeds, grids).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::default_fss_grids;
use crate::error::{Error, Result};
use crate::spin::{Boundary, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PurityDynamics,
    TmiDynamics,
    TmiSaturation,
    TmiSpatial,
    HaarRef,
    FssFit,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::PurityDynamics => "purity-dynamics",
            Experiment::TmiDynamics => "tmi-dynamics",
            Experiment::TmiSaturation => "tmi-saturation",
            Experiment::TmiSpatial => "tmi-spatial",
            Experiment::HaarRef => "haar-ref",
            Experiment::FssFit => "fss-fit",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Chaotic,
    Integrable,
    TrivialIntegrable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeSpec {
    pub l: usize,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSpec {
    pub preset: Option<Preset>,
    pub j_zz: f64,
    pub h_x: f64,
    pub h_z: f64,
    /// Boundary named explicitly in the config; when absent the
    /// experiment and preset pick one.
    pub boundary: Option<Boundary>,
    pub delta_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FssConfig {
    pub saturation_csv: Option<PathBuf>,
    pub grid_pc: Vec<f64>,
    pub grid_nu: Vec<f64>,
    pub weighted: bool,
    /// Number of trailing steps averaged into the saturation value;
    /// 1 means the final step alone.
    pub window: usize,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub experiment: Experiment,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub memory_budget_bytes: u64,
    pub p_values: Vec<f64>,
    pub sizes: Vec<SizeSpec>,
    pub model: ModelSpec,
    pub n_steps_override: Option<usize>,
    pub stride_override: Option<usize>,
    pub haar_samples: usize,
    pub haar_seed: u64,
    pub fss: FssConfig,
}

const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;
const DEFAULT_HAAR_SAMPLES: usize = 20;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<Experiment>,
    master_seed: Option<u64>,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
    memory_budget_bytes: Option<u64>,
    p_values: Option<Vec<f64>>,
    n_samples: Option<usize>,
    n_steps: Option<usize>,
    stride: Option<usize>,
    model: Option<RawModel>,
    sizes: Option<Vec<RawSize>>,
    haar: Option<RawHaar>,
    fss: Option<RawFss>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    preset: Option<Preset>,
    l: Option<usize>,
    j_zz: Option<f64>,
    h_x: Option<f64>,
    h_z: Option<f64>,
    boundary: Option<Boundary>,
    delta_t: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSize {
    l: usize,
    n_samples: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHaar {
    n_samples: Option<usize>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFss {
    saturation_csv: Option<PathBuf>,
    pc_min: Option<f64>,
    pc_max: Option<f64>,
    pc_step: Option<f64>,
    nu_min: Option<f64>,
    nu_max: Option<f64>,
    nu_step: Option<f64>,
    weighted: Option<bool>,
    window: Option<usize>,
}

fn grid(min: f64, max: f64, step: f64, name: &str) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && step.is_finite() && step > 0.0 && max >= min) {
        return Err(Error::Config(format!("invalid {name} grid: [{min}, {max}] step {step}")));
    }
    let n = ((max - min) / step).round() as usize + 1;
    Ok((0..n).map(|i| min + step * i as f64).collect())
}

impl Config {
    pub fn from_path(path: &Path, expected: Option<Experiment>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, expected)
    }

    pub fn from_toml(text: &str, expected: Option<Experiment>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        let experiment = match (raw.experiment, expected) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!(
                    "config file is for experiment {a} but {b} was requested"
                )))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => {
                return Err(Error::Config("no experiment named in config or on the command line".into()))
            }
        };

        let model_raw = raw.model.as_ref();
        let preset = model_raw.and_then(|m| m.preset);
        let (base_j, base_x, base_z) = match preset {
            Some(Preset::Chaotic) => (Some(-1.0), Some(1.05), Some(-0.5)),
            Some(Preset::Integrable) => (Some(-1.0), Some(-1.0), Some(0.0)),
            Some(Preset::TrivialIntegrable) => (Some(1.0), Some(0.0), None),
            None => (None, None, None),
        };
        let pick = |field: Option<f64>, base: Option<f64>, name: &str| {
            field.or(base).ok_or_else(|| {
                Error::Config(format!("model.{name} is required (no preset supplies it)"))
            })
        };
        let model = ModelSpec {
            preset,
            j_zz: pick(model_raw.and_then(|m| m.j_zz), base_j, "j_zz")?,
            h_x: pick(model_raw.and_then(|m| m.h_x), base_x, "h_x")?,
            h_z: pick(model_raw.and_then(|m| m.h_z), base_z, "h_z")?,
            boundary: model_raw.and_then(|m| m.boundary),
            delta_t: model_raw.and_then(|m| m.delta_t).unwrap_or(1.0),
        };

        let needs_ensemble = !matches!(experiment, Experiment::HaarRef | Experiment::FssFit);
        let sizes = match (&raw.sizes, model_raw.and_then(|m| m.l)) {
            (Some(list), _) if !list.is_empty() => {
                let mut out = Vec::with_capacity(list.len());
                for s in list {
                    let n = s.n_samples.or(raw.n_samples).unwrap_or(1);
                    out.push(SizeSpec { l: s.l, n_samples: n });
                }
                out
            }
            (_, Some(l)) => vec![SizeSpec { l, n_samples: raw.n_samples.unwrap_or(1) }],
            _ if matches!(experiment, Experiment::FssFit) => Vec::new(),
            _ => return Err(Error::Config("set model.l or a [[sizes]] list".into())),
        };

        let p_values = raw.p_values.unwrap_or_default();
        for &p in &p_values {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(Error::Config(format!("p = {p} outside [0, 1]")));
            }
        }
        if needs_ensemble && p_values.is_empty() {
            return Err(Error::Config(format!("{experiment} needs a non-empty p_values list")));
        }
        if let Some(s) = raw.stride {
            if s < 1 {
                return Err(Error::Config("stride must be at least 1".into()));
            }
        }
        for s in &sizes {
            if s.n_samples < 1 {
                return Err(Error::Config(format!("L = {} has n_samples = 0", s.l)));
            }
        }

        let fss_raw = raw.fss.as_ref();
        let (default_pc, default_nu) = default_fss_grids();
        let grid_pc = match fss_raw {
            Some(f) if f.pc_min.is_some() || f.pc_max.is_some() || f.pc_step.is_some() => grid(
                f.pc_min.unwrap_or(0.04),
                f.pc_max.unwrap_or(0.14),
                f.pc_step.unwrap_or(0.001),
                "p_c",
            )?,
            _ => default_pc,
        };
        let grid_nu = match fss_raw {
            Some(f) if f.nu_min.is_some() || f.nu_max.is_some() || f.nu_step.is_some() => grid(
                f.nu_min.unwrap_or(0.5),
                f.nu_max.unwrap_or(3.5),
                f.nu_step.unwrap_or(0.02),
                "nu",
            )?,
            _ => default_nu,
        };
        let window = fss_raw.and_then(|f| f.window).unwrap_or(1);
        if window < 1 {
            return Err(Error::Config("fss.window must be at least 1".into()));
        }

        let cfg = Config {
            experiment,
            master_seed: raw.master_seed.unwrap_or(0),
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            workers: raw.workers,
            memory_budget_bytes: raw.memory_budget_bytes.unwrap_or(DEFAULT_MEMORY_BUDGET),
            p_values,
            sizes,
            model,
            n_steps_override: raw.n_steps,
            stride_override: raw.stride,
            haar_samples: raw
                .haar
                .as_ref()
                .and_then(|h| h.n_samples)
                .unwrap_or(DEFAULT_HAAR_SAMPLES),
            haar_seed: raw
                .haar
                .as_ref()
                .and_then(|h| h.seed)
                .or(raw.master_seed)
                .unwrap_or(0),
            fss: FssConfig {
                saturation_csv: fss_raw.and_then(|f| f.saturation_csv.clone()),
                grid_pc,
                grid_nu,
                weighted: fss_raw.and_then(|f| f.weighted).unwrap_or(false),
                window,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let quadripartite = matches!(
            self.experiment,
            Experiment::TmiDynamics | Experiment::TmiSaturation | Experiment::HaarRef
        );
        for s in &self.sizes {
            let params = self.model_params(s.l)?;
            params.validate().map_err(|e| Error::Config(e.to_string()))?;
            if quadripartite && s.l % 2 != 0 {
                return Err(Error::Config(format!(
                    "{} needs even L for the equal quadripartition, got {}",
                    self.experiment, s.l
                )));
            }
            if self.experiment == Experiment::TmiSpatial && s.l < 4 {
                return Err(Error::Config(format!(
                    "tmi-spatial needs L >= 4 for the two-site end blocks, got {}",
                    s.l
                )));
            }
        }
        if self.haar_samples < 1 {
            return Err(Error::Config("haar.n_samples must be at least 1".into()));
        }
        Ok(())
    }

    /// Model parameters for one size, with the boundary resolved:
    /// explicit config wins, spatial scans default to open, otherwise
    /// the preset decides (periodic for chaotic, open for the rest).
    pub fn model_params(&self, l: usize) -> Result<ModelParams> {
        let boundary = match (self.model.boundary, self.experiment, self.model.preset) {
            (Some(b), _, _) => b,
            (None, Experiment::TmiSpatial, _) => Boundary::Open,
            (None, _, Some(Preset::Chaotic)) => Boundary::Periodic,
            (None, _, Some(_)) => Boundary::Open,
            (None, _, None) => {
                return Err(Error::Config(
                    "model.boundary is required when no preset is named".into(),
                ))
            }
        };
        Ok(ModelParams {
            l,
            j_zz: self.model.j_zz,
            h_x: self.model.h_x,
            h_z: self.model.h_z,
            boundary,
            delta_t: self.model.delta_t,
        })
    }

    /// Steps to simulate at one size: explicit override, else 50 for
    /// purity dynamics, 10 L for TMI dynamics and saturation, 10 for the
    /// spatial scan.
    pub fn n_steps(&self, l: usize) -> usize {
        self.n_steps_override.unwrap_or(match self.experiment {
            Experiment::PurityDynamics => 50,
            Experiment::TmiDynamics | Experiment::TmiSaturation => 10 * l,
            Experiment::TmiSpatial => 10,
            Experiment::HaarRef | Experiment::FssFit => 0,
        })
    }

    pub fn stride(&self) -> usize {
        self.stride_override.unwrap_or(1)
    }

    /// Stream index of one trajectory; every (size, p, sample) triple
    /// gets its own independent stream of the master seed.
    pub fn stream_for(&self, size_idx: usize, p_idx: usize, sample_idx: usize) -> u64 {
        ((size_idx as u64) << 40) | ((p_idx as u64) << 24) | sample_idx as u64
    }
}
