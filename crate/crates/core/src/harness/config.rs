//! TOML experiment configuration.
//!
//! ```toml
//! [problem]
//! nu = 1.0
//! t_end = 2.0
//! h = 0.002
//! m = 8
//! levels = 2
//!
//! [problem.forcing]
//! kind = "band"
//! lo = 1
//! hi = 2
//! amplitude = 2.0
//! seed = 1
//!
//! [problem.initial]
//! kind = "random"
//! cutoff = 6
//! decay = 1.5
//! amplitude = 1.0
//! seed = 7
//!
//! [sweep]
//! m = [4, 8, 12, 16]
//! ```
//!
//! Omitted keys take the defaults documented on each field.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::{random_field, ModeIndex, NormKind, SpectralField, Variant};
use crate::error::{Error, Result};
use crate::persist::read_field;
use crate::problem::{band_forcing, ProblemSpec};

fn default_period() -> f64 {
    TAU
}

fn default_m_out_factor() -> usize {
    2
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_norms() -> Vec<NormKind> {
    NormKind::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub j1: usize,
    pub j2: usize,
    pub variant: u8,
    pub coefficient: f64,
}

/// Where a forcing or initial field comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    Zero,
    /// Uniform random coefficients on the modes with `lo <= j1, j2 <= hi`.
    Band {
        lo: usize,
        hi: usize,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `amplitude * random_field(cutoff, seed, decay)`.
    Random {
        cutoff: usize,
        decay: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        seed: u64,
    },
    Modes {
        modes: Vec<ModeEntry>,
    },
    /// A field file, relative to the config file's directory.
    File {
        path: PathBuf,
    },
}

impl FieldSource {
    fn build(&self, period: f64, base: &Path, seed_override: Option<u64>) -> Result<SpectralField> {
        match self {
            FieldSource::Zero => SpectralField::zeros(period, 1),
            FieldSource::Band { lo, hi, amplitude, seed } => {
                band_forcing(period, *lo, *hi, *amplitude, seed_override.unwrap_or(*seed))
            }
            FieldSource::Random {
                cutoff,
                decay,
                amplitude,
                seed,
            } => Ok(random_field(period, *cutoff, seed_override.unwrap_or(*seed), *decay)?.scaled(*amplitude)),
            FieldSource::Modes { modes } => {
                let cutoff = modes.iter().map(|e| e.j1.max(e.j2)).max().unwrap_or(1).max(1);
                let mut f = SpectralField::zeros(period, cutoff)?;
                for e in modes {
                    let v = Variant::from_code(e.variant)
                        .ok_or_else(|| Error::Config(format!("mode variant {} not in 1..=4", e.variant)))?;
                    let mode = ModeIndex::new(e.j1, e.j2, v).map_err(|err| Error::Config(err.to_string()))?;
                    f.set(mode, e.coefficient)?;
                }
                Ok(f)
            }
            FieldSource::File { path } => {
                let f = read_field(&base.join(path))?;
                if f.period() != period {
                    return Err(Error::Config(format!(
                        "{} has period {} but the problem uses {period}",
                        path.display(),
                        f.period()
                    )));
                }
                Ok(f)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Side of the periodic square; default `2 pi`.
    #[serde(default = "default_period")]
    pub period: f64,
    pub nu: f64,
    pub t_end: f64,
    pub h: f64,
    /// Cutoff for `run`; defaults to the first sweep value.
    pub m: Option<usize>,
    /// `m_out = m_out_factor * m`, between 1 and 4; default 2.
    #[serde(default = "default_m_out_factor")]
    pub m_out_factor: usize,
    #[serde(default)]
    pub levels: usize,
    pub forcing: FieldSource,
    pub initial: FieldSource,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub m: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Default `2 m_out` of the largest run, which is `4 m` by default.
    pub m_ref: Option<usize>,
    /// Default `h / 4`.
    pub h_ref: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Start of the window for time-sup errors; default `T / 2`.
    pub t_skip: Option<f64>,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormKind>,
    /// Report the `P_p`/`P_q` split in the small-scale diagnostics; needs
    /// even cutoffs.
    #[serde(default)]
    pub split_diagnostics: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            t_skip: None,
            norms: default_norms(),
            split_diagnostics: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    pub output_dir: Option<PathBuf>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// Replaces the seed of random initial states.
    #[serde(skip)]
    pub seed_override: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    /// The cutoff used by single runs.
    pub fn run_cutoff(&self) -> usize {
        self.problem.m.or_else(|| self.sweep.m.first().copied()).unwrap_or(1)
    }

    /// Cutoffs to sweep; the run cutoff alone when no sweep is given.
    pub fn sweep_cutoffs(&self) -> Vec<usize> {
        if self.sweep.m.is_empty() {
            vec![self.run_cutoff()]
        } else {
            self.sweep.m.clone()
        }
    }

    pub fn t_skip(&self) -> f64 {
        self.analysis.t_skip.unwrap_or(0.5 * self.problem.t_end)
    }

    pub fn m_ref(&self) -> usize {
        let max_m = self.sweep_cutoffs().into_iter().chain(self.problem.m).max().unwrap_or(1);
        self.reference.m_ref.unwrap_or(2 * self.problem.m_out_factor * max_m)
    }

    pub fn h_ref(&self) -> f64 {
        self.reference.h_ref.unwrap_or(self.problem.h / 4.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let p = &self.problem;
        if !(p.nu > 0.0) {
            return bad(format!("problem.nu must be > 0, got {}", p.nu));
        }
        if !(p.period > 0.0 && p.period.is_finite()) {
            return bad(format!("problem.period must be > 0, got {}", p.period));
        }
        if !(p.h > 0.0) {
            return bad(format!("problem.h must be > 0, got {}", p.h));
        }
        if !(p.t_end >= p.h) {
            return bad(format!("problem.t_end ({}) must be >= problem.h ({})", p.t_end, p.h));
        }
        if !(1..=4).contains(&p.m_out_factor) {
            return bad(format!("problem.m_out_factor must be in 1..=4, got {}", p.m_out_factor));
        }
        if p.m == Some(0) {
            return bad("problem.m must be >= 1".into());
        }
        let distinct: BTreeSet<_> = self.sweep.m.iter().collect();
        if distinct.len() != self.sweep.m.len() {
            return bad("sweep.m values must be distinct".into());
        }
        if let Some(m) = self.sweep.m.iter().find(|m| **m < 2) {
            return bad(format!("sweep.m values must be >= 2, got {m}"));
        }
        let t_skip = self.t_skip();
        if !(t_skip >= 0.0 && t_skip < p.t_end) {
            return bad(format!("analysis.t_skip ({t_skip}) must lie in [0, t_end = {})", p.t_end));
        }
        if self.analysis.norms.is_empty() {
            return bad("analysis.norms must not be empty".into());
        }
        if self.analysis.split_diagnostics {
            let cutoffs = self.sweep_cutoffs().into_iter().chain(p.m);
            if let Some(m) = cutoffs.into_iter().find(|m| m % 2 != 0) {
                return bad(format!(
                    "analysis.split_diagnostics needs even cutoffs (m = 2n), got m = {m}"
                ));
            }
        }
        if let Some(h_ref) = self.reference.h_ref {
            if !(h_ref > 0.0 && h_ref <= p.h) {
                return bad(format!("reference.h_ref must be in (0, h], got {h_ref}"));
            }
        }
        let max_out = self.sweep_cutoffs().into_iter().chain(p.m).max().unwrap_or(1) * p.m_out_factor;
        if self.m_ref() < 2 * max_out {
            return bad(format!(
                "reference.m_ref ({}) must be at least 2 m_out = {}",
                self.m_ref(),
                2 * max_out
            ));
        }
        // Building the fields surfaces bad sources early.
        self.problem_spec(self.run_cutoff())?;
        Ok(())
    }

    /// The problem at cutoff `m`.
    pub fn problem_spec(&self, m: usize) -> Result<ProblemSpec> {
        let p = &self.problem;
        let forcing = p.forcing.build(p.period, &self.base_dir, None)?;
        let initial = p.initial.build(p.period, &self.base_dir, self.seed_override)?;
        ProblemSpec::new(p.nu, forcing, initial, m, p.t_end, p.h, p.levels)?.with_m_out(p.m_out_factor * m)
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    ExperimentConfig::from_toml_str(&text, &base)
}
