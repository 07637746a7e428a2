//! Problem files: TOML documents naming a source, a distortion (explicit
//! tensor or preset), solver overrides, a distortion grid and `y0`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use srd_core::{DistortionTensor, GaussianSpec, SolverConfig, SourcePmf};

use crate::error::{CliError, CliResult};
use crate::format::fmt_num;

/// Grid used when neither the problem file nor the command line gives one.
pub const DEFAULT_GRID: GridSpec = GridSpec {
    min: 0.0,
    max: 0.6,
    count: 61,
};

/// Default start-up costs of the switching-cost family, recorded in metadata.
pub const DEFAULT_FIG2_COSTS: [f64; 3] = [0.25, 0.5, 1.0];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<usize>,
    pub distortion: DistortionSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    /// `tensor[x][y][ŷ]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::Validation("grid: min and max must be finite".into()));
        }
        if self.count < 2 {
            return Err(CliError::Validation(format!("grid.count must be at least 2, got {}", self.count)));
        }
        if self.max <= self.min {
            return Err(CliError::Validation(format!(
                "grid.max ({}) must exceed grid.min ({})",
                self.max, self.min
            )));
        }
        Ok(())
    }

    /// Evenly spaced points, each rounded to the twelve significant digits
    /// written to CSV so that a printed `D` is exactly the solved target.
    pub fn points(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 })
            .map(|v| fmt_num(v).parse().expect("formatted number parses"))
            .collect()
    }

    /// Parses `min:max:count`.
    pub fn parse(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Validation(format!("grid '{s}' is not of the form min:max:count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let g = GridSpec {
            min: parts[0].trim().parse().map_err(|_| bad())?,
            max: parts[1].trim().parse().map_err(|_| bad())?,
            count: parts[2].trim().parse().map_err(|_| bad())?,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn label(&self) -> String {
        format!("{}:{}:{}", self.min, self.max, self.count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Finite { source: SourcePmf, tensor: DistortionTensor },
    Gaussian(GaussianSpec),
}

/// Validated, preset-free form of a problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub model: Model,
    pub solver: SolverConfig,
    pub grid: Option<GridSpec>,
    pub y0: usize,
}

/// A problem together with a short description of where its tensor came from.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: Problem,
    pub origin: String,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn required(v: Option<f64>, preset: &str, key: &str) -> CliResult<f64> {
    let v = v.ok_or_else(|| invalid(format!("distortion: preset '{preset}' needs distortion.{key}")))?;
    if !v.is_finite() {
        return Err(invalid(format!("distortion.{key} must be finite, got {v}")));
    }
    Ok(v)
}

fn forbid(present: bool, preset: &str, key: &str) -> CliResult<()> {
    if present {
        return Err(invalid(format!("distortion: preset '{preset}' does not take distortion.{key}")));
    }
    Ok(())
}

impl ProblemFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| invalid(format!("malformed problem file: {e}")))
    }

    pub fn into_problem(self) -> CliResult<LoadedProblem> {
        let ds = &self.distortion;
        let (model, origin) = match (&ds.preset, &ds.tensor) {
            (Some(_), Some(_)) => {
                return Err(invalid("distortion: give either distortion.preset or distortion.tensor, not both"))
            }
            (None, None) => return Err(invalid("distortion: one of distortion.preset or distortion.tensor is required")),
            (None, Some(t)) => {
                forbid(ds.c.is_some(), "tensor", "c")?;
                forbid(ds.gamma.is_some(), "tensor", "gamma")?;
                forbid(ds.sigma2.is_some(), "tensor", "sigma2")?;
                let tensor =
                    DistortionTensor::from_nested(t).map_err(|e| invalid(format!("distortion.tensor: {e}")))?;
                let probs = self
                    .source
                    .clone()
                    .ok_or_else(|| invalid("source: an explicit tensor needs a source pmf"))?;
                let source = SourcePmf::new(probs).map_err(|e| invalid(format!("source: {e}")))?;
                tensor.check_source(&source).map_err(|e| invalid(format!("source: {e}")))?;
                (Model::Finite { source, tensor }, format!("tensor {}x{}", tensor_x(t), tensor_y(t)))
            }
            (Some(name), None) => match name.as_str() {
                "fig2" => {
                    let c = required(ds.c, name, "c")?;
                    forbid(ds.gamma.is_some(), name, "gamma")?;
                    forbid(ds.sigma2.is_some(), name, "sigma2")?;
                    let tensor = DistortionTensor::fig2(c)?;
                    (Model::Finite { source: self.binary_source()?, tensor }, format!("fig2 c={c}"))
                }
                "gamma_hamming" => {
                    let gamma = required(ds.gamma, name, "gamma")?;
                    forbid(ds.c.is_some(), name, "c")?;
                    forbid(ds.sigma2.is_some(), name, "sigma2")?;
                    let tensor = DistortionTensor::gamma_hamming(gamma)?;
                    (Model::Finite { source: self.binary_source()?, tensor }, format!("gamma_hamming gamma={gamma}"))
                }
                "gaussian" => {
                    let sigma2 = required(ds.sigma2, name, "sigma2")?;
                    let gamma = required(ds.gamma, name, "gamma")?;
                    forbid(ds.c.is_some(), name, "c")?;
                    if self.source.is_some() {
                        return Err(invalid("source: the gaussian preset takes no source pmf"));
                    }
                    let spec = GaussianSpec::new(sigma2, gamma).map_err(|e| invalid(format!("distortion: {e}")))?;
                    (Model::Gaussian(spec), format!("gaussian sigma2={sigma2} gamma={gamma}"))
                }
                other => {
                    return Err(invalid(format!(
                        "distortion.preset: unknown preset '{other}' (expected fig2, gamma_hamming or gaussian)"
                    )))
                }
            },
        };
        self.solver.validate().map_err(|e| invalid(format!("solver: {e}")))?;
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        let y0 = self.y0.unwrap_or(0);
        if let Model::Finite { tensor, .. } = &model {
            if y0 >= tensor.y_size() {
                return Err(invalid(format!(
                    "y0 = {y0} is outside the reconstruction alphabet of size {}",
                    tensor.y_size()
                )));
            }
        }
        Ok(LoadedProblem {
            problem: Problem {
                model,
                solver: self.solver,
                grid: self.grid,
                y0,
            },
            origin,
        })
    }

    /// Presets are binary; the source defaults to the fair coin.
    fn binary_source(&self) -> CliResult<SourcePmf> {
        let source = match &self.source {
            Some(p) => SourcePmf::new(p.clone()).map_err(|e| invalid(format!("source: {e}")))?,
            None => SourcePmf::uniform(2)?,
        };
        if source.len() != 2 {
            return Err(invalid(format!("source: binary presets need 2 probabilities, got {}", source.len())));
        }
        Ok(source)
    }
}

fn tensor_x(t: &[Vec<Vec<f64>>]) -> usize {
    t.len()
}

fn tensor_y(t: &[Vec<Vec<f64>>]) -> usize {
    t.first().map_or(0, Vec::len)
}

pub fn parse_problem(text: &str) -> CliResult<LoadedProblem> {
    ProblemFile::parse(text)?.into_problem()
}

pub fn load_problem(path: &Path) -> CliResult<LoadedProblem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text).map_err(|e| match e {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl Problem {
    /// Problem file with presets expanded into an explicit tensor and every
    /// solver setting spelled out.
    pub fn to_file(&self) -> ProblemFile {
        let (source, distortion) = match &self.model {
            Model::Finite { source, tensor } => (
                Some(source.probs().to_vec()),
                DistortionSpec {
                    tensor: Some(tensor.to_nested()),
                    ..DistortionSpec::default()
                },
            ),
            Model::Gaussian(g) => (
                None,
                DistortionSpec {
                    preset: Some("gaussian".into()),
                    sigma2: Some(g.sigma2),
                    gamma: Some(g.gamma),
                    ..DistortionSpec::default()
                },
            ),
        };
        ProblemFile {
            source,
            y0: Some(self.y0),
            distortion,
            solver: self.solver.clone(),
            grid: self.grid,
        }
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(&self.to_file()).map_err(|e| CliError::Io(format!("cannot serialize problem: {e}")))
    }

    pub fn finite(&self) -> Option<(&SourcePmf, &DistortionTensor)> {
        match &self.model {
            Model::Finite { source, tensor } => Some((source, tensor)),
            Model::Gaussian(_) => None,
        }
    }
}
