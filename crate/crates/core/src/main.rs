use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;
use serde::Serialize;

use cachenet::fw::FwConfig;
use cachenet::harness::emit::{emit_experiment, write_records_csv, write_report_json, write_trace_json};
use cachenet::harness::experiment::{metrics_record, run_algorithm, run_experiment, Algorithm, ExperimentGrid, GridEntry, RunSettings};
use cachenet::harness::metrics::run_metrics;
use cachenet::io::{load_strategy, save_strategy, Problem};
use cachenet::model::{validate_strategy, SetKind};
use cachenet::primal_dual::PdConfig;
use cachenet::scenario::requests::{candidate_pairs, query_nodes};
use cachenet::scenario::trace::{load_trace, synthesize_trace, write_trace, TraceOptions};
use cachenet::scenario::{generate_scenario, stage_rng, PathOptions, ReferenceRouting, ScenarioSpec, Stage, Topology};
use cachenet::{Error, ObjectiveContext, Result};

#[derive(Parser)]
#[command(name = "cachenet", version, about = "Joint caching and routing under link capacities")]
struct Cli {
    /// Seed for scenario generation and experiment grids.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "CACHENET_THREADS", default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario and write it as an instance file.
    Generate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// File name inside the output directory; `.json` selects JSON.
        #[arg(long, default_value = "instance.txt")]
        file: String,
    },
    /// Run one algorithm on an instance file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        algorithm: AlgorithmArg,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Recompute metrics for a stored strategy.
    Evaluate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
    },
    /// Run a grid of scenarios, looseness values and algorithms.
    Sweep {
        /// Grid description in JSON; overrides the scenario flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.5, 2.0, 3.0])]
        kappas: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_enum)]
        algorithms: Vec<AlgorithmArg>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sample a synthetic request trace for an instance.
    TraceSynth {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long, default_value_t = 10)]
        query_nodes: usize,
        #[arg(long, default_value_t = 1.2)]
        zipf: f64,
        #[arg(long, default_value = "trace.csv")]
        file: String,
    },
    /// Build demand from a trace and write the resulting instance.
    TraceLoad {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        capacity_scale: f64,
        #[arg(long, default_value_t = 5)]
        max_paths: usize,
        #[arg(long, default_value_t = 4.0)]
        stretch: f64,
        #[arg(long, default_value = "instance.txt")]
        file: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Primaldual,
    Random1,
    Random2,
    Greedy1,
    Greedy2,
    Alternating,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Primaldual => Algorithm::PrimalDual,
            AlgorithmArg::Random1 => Algorithm::Random1,
            AlgorithmArg::Random2 => Algorithm::Random2,
            AlgorithmArg::Greedy1 => Algorithm::Greedy1,
            AlgorithmArg::Greedy2 => Algorithm::Greedy2,
            AlgorithmArg::Alternating => Algorithm::Alternating,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Er,
    Tree,
    Hypercube,
    Grid,
    Smallworld,
    Backbone,
    Counterexample,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceArg {
    Uniform,
    Complement,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum, default_value = "er")]
    topology: TopologyArg,
    #[arg(long, default_value_t = 100)]
    nodes: usize,
    #[arg(long, default_value_t = 0.1055)]
    probability: f64,
    #[arg(long, default_value_t = 3)]
    branching: usize,
    #[arg(long, default_value_t = 5)]
    depth: usize,
    #[arg(long, default_value_t = 7)]
    dimension: u32,
    #[arg(long, default_value_t = 10)]
    rows: usize,
    #[arg(long, default_value_t = 10)]
    cols: usize,
    #[arg(long, default_value_t = 1)]
    long_links: usize,
    #[arg(long, default_value_t = 2.0)]
    sw_exponent: f64,
    #[arg(long)]
    backbone_file: Option<PathBuf>,
    /// Looseness; omit for unconstrained links.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    catalog: usize,
    #[arg(long, default_value_t = 5000)]
    requests: usize,
    #[arg(long, default_value_t = 10)]
    query_nodes: usize,
    #[arg(long, default_value_t = 5)]
    max_paths: usize,
    #[arg(long, default_value_t = 4.0)]
    stretch: f64,
    #[arg(long, default_value_t = 1.2)]
    zipf: f64,
    #[arg(long, default_value_t = 10)]
    cache_min: u32,
    #[arg(long, default_value_t = 20)]
    cache_max: u32,
    #[arg(long, default_value_t = 1)]
    weight_min: u32,
    #[arg(long, default_value_t = 100)]
    weight_max: u32,
    #[arg(long, value_enum, default_value = "uniform")]
    reference: ReferenceArg,
}

impl ScenarioArgs {
    fn spec(&self, seed: u64) -> Result<ScenarioSpec> {
        let topology = match self.topology {
            TopologyArg::Er => Topology::ErdosRenyi {
                nodes: self.nodes,
                probability: self.probability,
            },
            TopologyArg::Tree => Topology::BalancedTree {
                branching: self.branching,
                depth: self.depth,
            },
            TopologyArg::Hypercube => Topology::Hypercube {
                dimension: self.dimension,
            },
            TopologyArg::Grid => Topology::Grid {
                rows: self.rows,
                cols: self.cols,
            },
            TopologyArg::Smallworld => Topology::SmallWorld {
                side: self.rows,
                long_links: self.long_links,
                exponent: self.sw_exponent,
            },
            TopologyArg::Backbone => Topology::Backbone {
                path: self
                    .backbone_file
                    .clone()
                    .ok_or_else(|| Error::InvalidScenario("--backbone-file is required".into()))?,
            },
            TopologyArg::Counterexample => Topology::Counterexample,
        };
        let spec = ScenarioSpec {
            topology,
            query_nodes: self.query_nodes,
            requests: self.requests,
            max_paths: self.max_paths,
            cache_range: (self.cache_min, self.cache_max),
            weight_range: (self.weight_min, self.weight_max),
            catalog: self.catalog,
            zipf_exponent: self.zipf,
            stretch: self.stretch,
            kappa: self.kappa,
            reference: match self.reference {
                ReferenceArg::Uniform => ReferenceRouting::Uniform,
                ReferenceArg::Complement => ReferenceRouting::Complement,
            },
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Maximum primal-dual iterations.
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Frank-Wolfe iterations per primal step.
    #[arg(long, default_value_t = 100)]
    fw_iterations: usize,
    /// Fixed dual step scale instead of the adaptive choice.
    #[arg(long)]
    step_scale: Option<f64>,
    #[arg(long)]
    no_momentum: bool,
    /// Run all iterations even after convergence.
    #[arg(long)]
    no_early_stop: bool,
    /// Record wall-clock time in the outputs.
    #[arg(long)]
    timing: bool,
}

impl RunArgs {
    fn settings(&self) -> Result<RunSettings> {
        let fw = FwConfig::new(self.fw_iterations)?;
        let mut pd = PdConfig {
            max_iterations: self.iterations,
            fw,
            momentum: !self.no_momentum,
            stop_on_convergence: !self.no_early_stop,
            ..PdConfig::default()
        };
        if let Some(c) = self.step_scale {
            pd.step_scale = cachenet::primal_dual::StepScale::Fixed(c);
        }
        pd.validate()?;
        let mut settings = RunSettings {
            pd,
            timing: self.timing,
            ..RunSettings::default()
        };
        settings.baseline.fw = fw;
        Ok(settings)
    }
}

#[derive(Serialize)]
struct Evaluation {
    gain: f64,
    inf: f64,
    max_inf: f64,
    in_exact_set: bool,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    create_dir(&cli.out)?;
    match cli.command {
        Command::Generate { scenario, file } => {
            let problem = generate_scenario(&scenario.spec(cli.seed)?)?;
            problem.save(cli.out.join(file))?;
        }
        Command::Solve { instance, algorithm, run } => {
            let problem = Problem::load(&instance)?;
            let algorithm = Algorithm::from(algorithm);
            let settings = run.settings()?;
            let report = run_algorithm(algorithm, &problem, &settings)?;
            let reference = if algorithm == Algorithm::PrimalDual {
                None
            } else {
                let pd = run_algorithm(Algorithm::PrimalDual, &problem, &settings)?;
                let ctx = ObjectiveContext::new(&problem.instance, &problem.demand);
                Some(ctx.cache_gain(&pd.strategy))
            };
            let id = instance.file_stem().map_or("instance".into(), |s| s.to_string_lossy().into_owned());
            let record = metrics_record(&problem, &report, &id, None, reference);
            let name = algorithm.name();
            write_records_csv(&[record], &cli.out.join(format!("{name}_metrics.csv")))?;
            save_strategy(&report.strategy, cli.out.join(format!("{name}_strategy.json")))?;
            write_report_json(&report, &cli.out.join(format!("{name}_report.json")))?;
            if algorithm.is_iterative() {
                write_trace_json(name, &report.records, &cli.out.join(format!("{name}_trace.json")))?;
            }
        }
        Command::Evaluate { instance, strategy } => {
            let problem = Problem::load(&instance)?;
            let y = load_strategy(&strategy)?;
            y.check_layout(&problem.instance, &problem.demand)?;
            let ctx = ObjectiveContext::new(&problem.instance, &problem.demand);
            let m = run_metrics(&ctx, &y, false);
            let feasible = validate_strategy(&problem.instance, &problem.demand, &y, SetKind::Exact)?.is_feasible();
            let eval = Evaluation {
                gain: m.gain,
                inf: m.inf,
                max_inf: m.max_inf,
                in_exact_set: feasible,
            };
            let text = serde_json::to_string_pretty(&eval)?;
            println!("{text}");
            write_text(&cli.out.join("evaluation.json"), &text)?;
        }
        Command::Sweep {
            config,
            scenario,
            kappas,
            algorithms,
            repetitions,
            run,
        } => {
            let grid = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?;
                    let mut grid: ExperimentGrid = serde_json::from_str(&text)?;
                    grid.master_seed = cli.seed;
                    grid
                }
                None => {
                    let algorithms = if algorithms.is_empty() {
                        Algorithm::ALL.to_vec()
                    } else {
                        algorithms.into_iter().map(Algorithm::from).collect()
                    };
                    ExperimentGrid {
                        master_seed: cli.seed,
                        entries: vec![GridEntry {
                            name: "sweep".into(),
                            spec: scenario.spec(cli.seed)?,
                            kappas,
                            algorithms,
                            repetitions,
                        }],
                    }
                }
            };
            let output = run_experiment(&grid, &run.settings()?)?;
            emit_experiment(&output, &cli.out)?;
            for (cell, msg) in &output.failures {
                error!("cell {cell} failed: {msg}");
            }
        }
        Command::TraceSynth {
            instance,
            draws,
            query_nodes: q,
            zipf,
            file,
        } => {
            let problem = Problem::load(&instance)?;
            let mut qrng = stage_rng(cli.seed, Stage::Queries);
            let queries = query_nodes(&problem.instance, q, &mut qrng)?;
            let mut pairs = candidate_pairs(&problem.instance, &queries);
            let mut rng = stage_rng(cli.seed, Stage::Trace);
            rand::seq::SliceRandom::shuffle(pairs.as_mut_slice(), &mut rng);
            let records = synthesize_trace(&pairs, draws, zipf, &mut rng)?;
            write_trace(&records, &cli.out.join(file))?;
        }
        Command::TraceLoad {
            instance,
            trace,
            top,
            capacity_scale,
            max_paths,
            stretch,
            file,
        } => {
            let problem = Problem::load(&instance)?;
            let options = TraceOptions {
                top,
                capacity_scale,
                paths: PathOptions { max_paths, stretch },
            };
            let (instance, demand) = load_trace(&trace, &problem.instance, &options)?;
            Problem::new(instance, demand).save(cli.out.join(file))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            error!("thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
