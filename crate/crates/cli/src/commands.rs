use std::path::{Path, PathBuf};

use serde::Serialize;
use srd_core::{
    convexity_report, feasibility_range, gaussian_curve, gaussian_feasibility, inner_curves, lower_convex_envelope,
    memory_span, outer_curve, product_curve, sandwich_check, shift_curve, two_letter_curve, BoundCurve, BoundId,
    ConvexityReport, OracleConfig, SandwichReport, SolverConfig, Witness,
};

use crate::error::{CliError, CliResult};
use crate::format::{combined_csv, curve_csv, sha256_hex};
use crate::problem::{GridSpec, LoadedProblem, Model, Problem, DEFAULT_FIG2_COSTS, DEFAULT_GRID};

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    Finite {
        origin: String,
        source_size: usize,
        reproduction_size: usize,
        memory_span: f64,
        d_min: f64,
        d_max: f64,
        witness_min: Vec<Vec<f64>>,
        witness_max: Vec<Vec<f64>>,
        convexity: ConvexityReport,
        convexity_scope: String,
    },
    Gaussian {
        origin: String,
        sigma2: f64,
        gamma: f64,
        d_min: f64,
        d_zero_rate: f64,
    },
}

pub fn analyze(loaded: &LoadedProblem) -> CliResult<Analysis> {
    let problem = &loaded.problem;
    Ok(match &problem.model {
        Model::Finite { source, tensor } => {
            let range = feasibility_range(source, tensor, &problem.solver)?;
            let convexity = convexity_report(tensor, source)?;
            let convexity_scope = if convexity.binary_uniform {
                "binary uniform source: e1 = e2 >= 0 criterion and Hessian test"
            } else {
                "general Hessian test only; the e1/e2 criterion covers binary uniform sources"
            };
            Analysis::Finite {
                origin: loaded.origin.clone(),
                source_size: tensor.x_size(),
                reproduction_size: tensor.y_size(),
                memory_span: memory_span(tensor),
                d_min: range.d_min,
                d_max: range.d_max,
                witness_min: range.witness_min.to_rows(),
                witness_max: range.zero_rate_kernel().to_rows(),
                convexity,
                convexity_scope: convexity_scope.into(),
            }
        }
        Model::Gaussian(spec) => {
            let f = gaussian_feasibility(spec);
            Analysis::Gaussian {
                origin: loaded.origin.clone(),
                sigma2: spec.sigma2,
                gamma: spec.gamma,
                d_min: f.d_min,
                d_zero_rate: f.d_zero_rate,
            }
        }
    })
}

/// Where the distortion grid of a run came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridOrigin {
    CommandLine,
    File,
    Default,
}

pub fn resolve_grid(problem: &Problem, cli: Option<GridSpec>) -> (GridSpec, GridOrigin) {
    match (cli, problem.grid) {
        (Some(g), _) => (g, GridOrigin::CommandLine),
        (None, Some(g)) => (g, GridOrigin::File),
        (None, None) => (DEFAULT_GRID, GridOrigin::Default),
    }
}

/// Requested bounds in a stable order, duplicates removed.
pub fn parse_bounds(list: &str) -> CliResult<Vec<BoundId>> {
    let mut out: Vec<BoundId> = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let b: BoundId = item.parse().map_err(|e: srd_core::SrdError| CliError::Validation(e.to_string()))?;
        if !out.contains(&b) {
            out.push(b);
        }
    }
    if out.is_empty() {
        return Err(CliError::Validation("--bounds names no bound".into()));
    }
    Ok(out)
}

/// Computes the requested curves on `grid`, sharing work between bounds that
/// come from the same solver run.
pub fn compute_curves(problem: &Problem, bounds: &[BoundId], grid: &[f64]) -> CliResult<Vec<BoundCurve>> {
    let cfg = &problem.solver;
    let (source, tensor) = match &problem.model {
        Model::Gaussian(spec) => {
            if let Some(b) = bounds.iter().find(|b| **b != BoundId::RI2) {
                return Err(CliError::Validation(format!(
                    "unsupported combination: bound {b} needs a finite alphabet; the gaussian preset supports only R_I2"
                )));
            }
            return Ok(vec![gaussian_curve(spec, grid)?]);
        }
        Model::Finite { source, tensor } => (source, tensor),
    };
    let needs_inner = bounds
        .iter()
        .any(|b| matches!(b, BoundId::RI1 | BoundId::RI2 | BoundId::EnvI1 | BoundId::EnvI2 | BoundId::R2));
    let (ri2, ri1) = if needs_inner {
        Some(inner_curves(source, tensor, grid, cfg)?)
    } else {
        None
    }
    .unzip();
    let ri2 = || ri2.clone().expect("inner curves computed");
    let ri1 = || ri1.clone().expect("inner curves computed");
    let relabel = |mut c: BoundCurve, id: BoundId| {
        c.bound = id;
        c
    };
    bounds
        .iter()
        .map(|&b| {
            Ok(match b {
                BoundId::RI2 => ri2(),
                BoundId::RI1 => ri1(),
                BoundId::R2 => relabel(ri1(), BoundId::R2),
                BoundId::EnvI1 => lower_convex_envelope(&ri1()),
                BoundId::EnvI2 => lower_convex_envelope(&ri2()),
                BoundId::RO1 => product_curve(source, tensor, grid, cfg)?,
                BoundId::RO2 => two_letter_curve(source, tensor, grid, cfg)?,
                BoundId::Thm3 => shift_curve(source, tensor, grid, cfg)?,
                BoundId::R1 => outer_curve(source, tensor, grid, cfg)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PointMeta {
    pub d: f64,
    pub rate: Option<f64>,
    pub converged: bool,
    pub term: Option<String>,
    pub witness_sha256: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundMeta {
    pub bound: BoundId,
    pub file: String,
    pub notes: Vec<String>,
    pub points: Vec<PointMeta>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridMeta {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub origin: GridOrigin,
}

#[derive(Debug, Clone, Serialize)]
pub struct Defaults {
    pub grid: String,
    pub fig2_costs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub problem: String,
    pub problem_sha256: String,
    pub y0: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    pub grid: GridMeta,
    pub defaults: Defaults,
    pub combined_file: String,
    pub bounds: Vec<BoundMeta>,
}

pub fn witness_digest(w: &Witness) -> String {
    sha256_hex(&serde_json::to_vec(w).expect("witness serializes"))
}

pub fn bound_file_name(b: BoundId) -> String {
    format!("{}.csv", b.label())
}

pub const COMBINED_FILE: &str = "curves.csv";
pub const METADATA_FILE: &str = "metadata.json";

pub struct CurvesRun {
    pub curves: Vec<BoundCurve>,
    pub metadata: Metadata,
    pub unconverged: usize,
}

pub fn run_curves(loaded: &LoadedProblem, bounds: &[BoundId], grid: GridSpec, origin: GridOrigin) -> CliResult<CurvesRun> {
    let problem = &loaded.problem;
    let curves = compute_curves(problem, bounds, &grid.points())?;
    let unconverged = curves.iter().flat_map(|c| &c.points).filter(|p| !p.converged).count();
    let metadata = Metadata {
        tool: "srd".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        problem: loaded.origin.clone(),
        problem_sha256: sha256_hex(problem.to_toml()?.as_bytes()),
        y0: problem.y0,
        seed: problem.solver.seed,
        solver: problem.solver.clone(),
        grid: GridMeta {
            min: grid.min,
            max: grid.max,
            count: grid.count,
            origin,
        },
        defaults: Defaults {
            grid: DEFAULT_GRID.label(),
            fig2_costs: DEFAULT_FIG2_COSTS.to_vec(),
        },
        combined_file: COMBINED_FILE.into(),
        bounds: curves
            .iter()
            .map(|c| BoundMeta {
                bound: c.bound,
                file: bound_file_name(c.bound),
                notes: c.notes.clone(),
                points: c
                    .points
                    .iter()
                    .map(|p| PointMeta {
                        d: p.d,
                        rate: p.rate,
                        converged: p.converged,
                        term: p.term.clone(),
                        witness_sha256: p.witness.as_ref().map(witness_digest),
                    })
                    .collect(),
            })
            .collect(),
    };
    Ok(CurvesRun {
        curves,
        metadata,
        unconverged,
    })
}

/// Writes one CSV per curve, the combined CSV and the metadata document.
/// Returns the paths written, in order.
pub fn write_curves(run: &CurvesRun, dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> CliResult<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
        Ok(())
    };
    for c in &run.curves {
        put(&bound_file_name(c.bound), curve_csv(c))?;
    }
    put(COMBINED_FILE, combined_csv(&run.curves))?;
    let mut meta = serde_json::to_string_pretty(&run.metadata).expect("metadata serializes");
    meta.push('\n');
    put(METADATA_FILE, meta)?;
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub origin: String,
    pub grid: String,
    /// Holds the operational point, its codebook and the comparison.
    pub sandwich: SandwichReport,
}

pub fn oracle(loaded: &LoadedProblem, n: usize, messages: usize, y0: Option<usize>, grid: GridSpec) -> CliResult<OracleReport> {
    let problem = &loaded.problem;
    let (source, tensor) = problem.finite().ok_or_else(|| {
        CliError::Validation("unsupported combination: the oracle needs a finite alphabet, not the gaussian preset".into())
    })?;
    let cfg = OracleConfig {
        n,
        num_messages: messages,
        y0: y0.unwrap_or(problem.y0),
    };
    // Fail fast on size guards before computing curves.
    srd_core::operational_distortion(source, tensor, &cfg)?;
    let points = grid.points();
    let (_, mut inner) = inner_curves(source, tensor, &points, &problem.solver)?;
    inner.bound = BoundId::R2;
    let outer = outer_curve(source, tensor, &points, &problem.solver)?;
    let sandwich = sandwich_check(source, tensor, &cfg, &inner, &outer)?;
    Ok(OracleReport {
        origin: loaded.origin.clone(),
        grid: grid.label(),
        sandwich,
    })
}
