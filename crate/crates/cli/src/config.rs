//! Run configuration. One TOML file fully determines a run; every key has a
//! default, so an empty file describes the reference parameter set.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use udw_core::statistics::DEFAULT_EPSILON;
use udw_core::{DetectorPair, OracleSettings, ProcessParams};

use crate::failure::Failure;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub process: ProcessSection,
    pub detectors: DetectorSection,
    pub model: ModelSection,
    pub stats: StatsSection,
    pub oracle: OracleSection,
    pub output: OutputSection,
    pub classical2d: Option<Classical2dSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessSection {
    pub m: f64,
    #[serde(rename = "M")]
    pub mass_parent: f64,
    #[serde(rename = "P")]
    pub momentum: f64,
}

impl Default for ProcessSection {
    fn default() -> Self {
        Self {
            m: 1.0,
            mass_parent: 4.0,
            momentum: 3.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(x) => vec![*x],
            Self::Many(xs) => xs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default = "linear")]
    pub spacing: Spacing,
}

fn linear() -> Spacing {
    Spacing::Linear
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>, Failure> {
        if self.count < 2 {
            return Err(Failure::usage("detectors.r_sweep.count must be at least 2"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop <= self.start {
            return Err(Failure::usage("detectors.r_sweep needs finite start < stop"));
        }
        if self.spacing == Spacing::Log && self.start <= 0.0 {
            return Err(Failure::usage("log-spaced detectors.r_sweep needs start > 0"));
        }
        let last = (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * t,
                    Spacing::Log => (self.start.ln() + (self.stop / self.start).ln() * t).exp(),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub delta1: f64,
    pub delta2: f64,
    pub r: f64,
    pub r_sweep: Option<SweepSpec>,
    pub alpha: OneOrMany,
    pub radius_a: Option<f64>,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            delta1: 2.0,
            delta2: 3.0,
            r: 5.0,
            r_sweep: None,
            alpha: OneOrMany::One(std::f64::consts::FRAC_PI_2),
            radius_a: None,
            eps1: 1.0,
            eps2: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub filter: bool,
    pub sigma_angle: f64,
    pub form_factors: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            filter: false,
            sigma_angle: udw_core::distribution::DEFAULT_SIGMA_ANGLE,
            form_factors: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub epsilon: f64,
    pub psi_grid: usize,
}

impl Default for StatsSection {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            psi_grid: udw_core::distribution::DEFAULT_TABULATION_POINTS,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub enabled: bool,
    pub eta: f64,
    pub n_k: usize,
    pub n_cos: usize,
    pub n_psi: usize,
    /// Separations compared; defaults to `detectors.r`.
    pub r: Option<Vec<f64>>,
    pub eta_scan: Vec<f64>,
    /// Switches to the Monte Carlo integrator with this many samples per ψ and
    /// branch, rounded up to a multiple of `n_k · n_cos`.
    pub mc_samples: Option<usize>,
}

impl Default for OracleSection {
    fn default() -> Self {
        let d = OracleSettings::default();
        Self {
            enabled: true,
            eta: d.eta,
            n_k: d.n_k,
            n_cos: d.n_cos,
            n_psi: d.n_psi,
            r: None,
            eta_scan: vec![0.04, 0.02, 0.01, 0.005],
            mc_samples: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub seed: u64,
    pub formats: Vec<Format>,
    /// Inverse-CDF draws written by `distribution`; 0 disables.
    pub samples: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            seed: 0,
            formats: vec![Format::Csv],
            samples: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Classical2dSection {
    /// Defaults to `(P, 0)`.
    pub p: Option<[f64; 2]>,
    pub m: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|f| f.context(path.display().to_string()))
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::usage(format!("parse error: {e}")))
    }

    pub fn process(&self) -> ProcessParams {
        ProcessParams::new(self.process.m, self.process.mass_parent, self.process.momentum)
    }

    /// Detector template at `detectors.r` and the first α.
    pub fn detectors(&self) -> Result<DetectorPair, Failure> {
        let d = &self.detectors;
        let mut pair = DetectorPair::new(d.delta1, d.delta2, d.r, self.alphas()?[0]);
        pair.eps1 = d.eps1;
        pair.eps2 = d.eps2;
        if let Some(a) = d.radius_a {
            pair = pair.with_radius(a);
        }
        Ok(pair)
    }

    pub fn alphas(&self) -> Result<Vec<f64>, Failure> {
        let alphas = self.detectors.alpha.values();
        if alphas.is_empty() {
            return Err(Failure::usage("detectors.alpha must list at least one angle"));
        }
        Ok(alphas)
    }

    /// Separations swept by `stats`: `r_sweep` when present, else `[r]`.
    pub fn sweep_r(&self) -> Result<Vec<f64>, Failure> {
        match &self.detectors.r_sweep {
            Some(spec) => spec.values(),
            None => Ok(vec![self.detectors.r]),
        }
    }

    pub fn oracle_r(&self) -> Vec<f64> {
        self.oracle.r.clone().unwrap_or_else(|| vec![self.detectors.r])
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}
