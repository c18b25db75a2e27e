//! Algorithm dispatch and experiment grids.

use std::fmt;
use std::str::FromStr;

use log::error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, BaselineConfig, BaselineKind};
use crate::error::{Error, Result};
use crate::harness::metrics::{run_metrics, FeasibilityStatus, MetricsRecord};
use crate::io::Problem;
use crate::objective::ObjectiveContext;
use crate::primal_dual::{run_primal_dual, IterationRecord, PdConfig, RunReport};
use crate::scenario::{generate_scenario, ScenarioSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    PrimalDual,
    Random1,
    Random2,
    Greedy1,
    Greedy2,
    Alternating,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::PrimalDual,
        Algorithm::Random1,
        Algorithm::Random2,
        Algorithm::Greedy1,
        Algorithm::Greedy2,
        Algorithm::Alternating,
    ];

    pub fn name(self) -> &'static str {
        match self.baseline() {
            Some(kind) => kind.name(),
            None => "primaldual",
        }
    }

    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            Algorithm::PrimalDual => None,
            Algorithm::Random1 => Some(BaselineKind::Random1),
            Algorithm::Random2 => Some(BaselineKind::Random2),
            Algorithm::Greedy1 => Some(BaselineKind::Greedy1),
            Algorithm::Greedy2 => Some(BaselineKind::Greedy2),
            Algorithm::Alternating => Some(BaselineKind::Alternating),
        }
    }

    /// Whether runs produce a per-iteration trace.
    pub fn is_iterative(self) -> bool {
        matches!(self, Algorithm::PrimalDual | Algorithm::Alternating)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidScenario(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunSettings {
    pub pd: PdConfig,
    pub baseline: BaselineConfig,
    /// Record wall-clock time; off keeps outputs byte-reproducible.
    pub timing: bool,
}

pub fn run_algorithm(algorithm: Algorithm, problem: &Problem, settings: &RunSettings) -> Result<RunReport> {
    let mut report = match algorithm.baseline() {
        None => run_primal_dual(&problem.instance, &problem.demand, &settings.pd)?,
        Some(kind) => run_baseline(kind, &problem.instance, &problem.demand, &settings.baseline)?,
    };
    if !settings.timing {
        report.wall_seconds = 0.0;
    }
    Ok(report)
}

/// Metrics row for a finished run. `reference_gain` is the primal-dual gain
/// on the same instance; `None` marks the primal-dual run itself.
pub fn metrics_record(
    problem: &Problem,
    report: &RunReport,
    instance_id: &str,
    kappa: Option<f64>,
    reference_gain: Option<f64>,
) -> MetricsRecord {
    let ctx = ObjectiveContext::new(&problem.instance, &problem.demand);
    let m = run_metrics(&ctx, &report.strategy, report.failed_step.is_some());
    let normalized_gain = match (m.status, reference_gain) {
        (FeasibilityStatus::Infeasible, _) => 0.0,
        (_, None) => 1.0,
        (_, Some(f_pd)) if f_pd > 0.0 => m.gain / f_pd,
        _ => 0.0,
    };
    MetricsRecord {
        algorithm: report.algorithm.clone(),
        instance: instance_id.to_string(),
        kappa,
        gain: m.gain,
        normalized_gain,
        inf: m.inf,
        max_inf: m.max_inf,
        iterations: report.iterations,
        wall_seconds: report.wall_seconds,
        status: m.status,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub name: String,
    pub spec: ScenarioSpec,
    /// Looseness values applied to the same generated instance.
    pub kappas: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub master_seed: u64,
    pub entries: Vec<GridEntry>,
}

/// One run of one algorithm, with its trace when iterative.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub record: MetricsRecord,
    pub trace: Option<Vec<IterationRecord>>,
}

impl RunOutput {
    /// File stem identifying the run within an experiment.
    pub fn key(&self) -> String {
        match self.record.kappa {
            Some(k) => format!("{}_k{}_{}", self.record.instance, k, self.record.algorithm),
            None => format!("{}_{}", self.record.instance, self.record.algorithm),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentOutput {
    pub runs: Vec<RunOutput>,
    /// Cells that failed structurally, with their error messages.
    pub failures: Vec<(String, String)>,
}

impl ExperimentOutput {
    pub fn records(&self) -> Vec<MetricsRecord> {
        self.runs.iter().map(|r| r.record.clone()).collect()
    }
}

/// SplitMix64 finalizer; decorrelates seeds of neighbouring cells.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Cell<'a> {
    entry: &'a GridEntry,
    repetition: usize,
    kappa: f64,
    seed: u64,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidScenario("experiment grid has no entries".into()));
        }
        for e in &self.entries {
            if e.kappas.is_empty() || e.algorithms.is_empty() || e.repetitions == 0 {
                return Err(Error::InvalidScenario(format!(
                    "grid entry {:?} needs looseness values, algorithms and repetitions",
                    e.name
                )));
            }
            e.spec.validate()?;
        }
        Ok(())
    }
}

/// Runs every cell on the current rayon pool. Outputs are ordered by entry,
/// repetition, looseness and algorithm regardless of scheduling.
pub fn run_experiment(grid: &ExperimentGrid, settings: &RunSettings) -> Result<ExperimentOutput> {
    grid.validate()?;
    let mut cells = Vec::new();
    let mut index = 0u64;
    for entry in &grid.entries {
        for repetition in 0..entry.repetitions {
            // All looseness values of a repetition share one instance seed.
            let seed = derive_seed(grid.master_seed, index);
            index += 1;
            for &kappa in &entry.kappas {
                cells.push(Cell {
                    entry,
                    repetition,
                    kappa,
                    seed,
                });
            }
        }
    }
    let results: Vec<std::result::Result<Vec<RunOutput>, (String, String)>> = cells
        .par_iter()
        .map(|cell| {
            let id = format!("{}-r{}", cell.entry.name, cell.repetition);
            run_cell(cell, &id, settings).map_err(|e| {
                error!("cell {id} at looseness {}: {e}", cell.kappa);
                (format!("{id}_k{}", cell.kappa), e.to_string())
            })
        })
        .collect();
    let mut out = ExperimentOutput::default();
    for r in results {
        match r {
            Ok(runs) => out.runs.extend(runs),
            Err(f) => out.failures.push(f),
        }
    }
    Ok(out)
}

fn run_cell(cell: &Cell<'_>, id: &str, settings: &RunSettings) -> Result<Vec<RunOutput>> {
    let mut spec = cell.entry.spec.clone();
    spec.seed = cell.seed;
    spec.kappa = Some(cell.kappa);
    let problem = generate_scenario(&spec)?;
    let pd = run_algorithm(Algorithm::PrimalDual, &problem, settings)?;
    let f_pd = metrics_record(&problem, &pd, id, Some(cell.kappa), None);
    let mut algorithms = cell.entry.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();
    let mut out = Vec::with_capacity(algorithms.len());
    for alg in algorithms {
        let (report, record) = if alg == Algorithm::PrimalDual {
            (pd.clone(), f_pd.clone())
        } else {
            let report = run_algorithm(alg, &problem, settings)?;
            let record = metrics_record(&problem, &report, id, Some(cell.kappa), Some(f_pd.gain));
            (report, record)
        };
        out.push(RunOutput {
            record,
            trace: alg.is_iterative().then(|| report.records.clone()),
        });
    }
    Ok(out)
}
