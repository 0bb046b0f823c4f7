//! Benchmark CLI: instance generation, solver runs with reports, batch
//! benchmarks and SVG drawings.
//!
//! Exit codes: 0 success, 2 usage or malformed input, 3 numerical failure,
//! 4 size-guard violation (plain I/O errors exit 1).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use gcs_tsp::bnb::{branch_and_bound, BnbConfig, BnbError, BnbMode};
use gcs_tsp::combinatorial::{greedy_tour, tour_matrix_cost, two_opt, AscentConfig, ComboError};
use gcs_tsp::convex::{bounded_cost_of, realize, ConvexError, Topology};
use gcs_tsp::exact::{lower_bound_suite, solve_enumeration, solve_lattice, ExactError};
use gcs_tsp::geometry::GeometryError;
use gcs_tsp::instance::{bounded_matrix, generate, parse, serialize, Instance, InstanceError};

mod bench;
mod render;
mod report;

use report::SolveReport;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Guard(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Guard(m) => write!(f, "guard violation: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Guard(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        match e {
            InstanceError::TooFewSets(_) | InstanceError::UnsupportedDim(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::TooLarge { .. } | ExactError::TooSmall(_) => CliError::Guard(e.to_string()),
            ExactError::CapBeforeIncumbent(_) => CliError::Numerical(e.to_string()),
            ExactError::Convex(c) => c.into(),
            ExactError::Combo(c) => c.into(),
        }
    }
}

impl From<ConvexError> for CliError {
    fn from(e: ConvexError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<ComboError> for CliError {
    fn from(e: ComboError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<BnbError> for CliError {
    fn from(e: BnbError) -> Self {
        match e {
            BnbError::TooFew(_) | BnbError::NeedSets => CliError::Guard(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "gcs-tsp", version, about = "Traveling salesman solvers over polytope targets")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Exhaustive tour enumeration (n <= 9).
    Enum,
    /// Best-first exact search over the visited-subset lattice.
    Lattice,
    /// Bounded branch and bound.
    Bbb,
    /// Convex branch and bound.
    Cbb,
    /// Nearest-neighbor tour.
    Greedy,
    /// Nearest-neighbor tour improved by 2-opt.
    #[value(name = "2opt")]
    TwoOpt,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Enum => "enum",
            Method::Lattice => "lattice",
            Method::Bbb => "bbb",
            Method::Cbb => "cbb",
            Method::Greedy => "greedy",
            Method::TwoOpt => "2opt",
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random instance file.
    Generate {
        /// Number of target sets (>= 3).
        #[arg(long, value_parser = clap::value_parser!(u64).range(3..))]
        n: u64,
        /// Workspace dimension.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..=3))]
        d: u64,
        /// Generator seed; defaults to GCS_TSP_SEED or 42.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path.
        #[arg(long)]
        out: PathBuf,
        /// Also export the bounded cost matrix as CSV.
        #[arg(long)]
        matrix_csv: Option<PathBuf>,
    },
    /// Solve an instance file and print a report.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Node budget for lattice/bbb/cbb.
        #[arg(long, default_value_t = 10_000)]
        max_nodes: usize,
        /// Root ascent iteration cap.
        #[arg(long, default_value_t = 1000)]
        ascent_iters: usize,
        /// Initial ascent step size.
        #[arg(long, default_value_t = 2.0)]
        step: f64,
        /// Multiplicative ascent step decay per iteration.
        #[arg(long, default_value_t = 0.95)]
        decay: f64,
        /// Convex-mode stall budget.
        #[arg(long, default_value_t = 15)]
        stall: usize,
        /// Greedy start vertex.
        #[arg(long, default_value_t = 0)]
        start: usize,
        /// Report JSON with a known optimum; enables the delta columns.
        #[arg(long)]
        oracle: Option<PathBuf>,
        /// Write the report JSON here (printed only as a table otherwise).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Generate and solve batches, writing CSV tables.
    Bench {
        /// Comma-separated instance sizes.
        #[arg(long, default_value = "5,8,10,15", value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Instances per size.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Base seed; defaults to GCS_TSP_SEED or 1.
        #[arg(long)]
        seed0: Option<u64>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_nodes: usize,
        #[arg(long, default_value_t = 1000)]
        ascent_iters: usize,
        #[arg(long, default_value_t = 2.0)]
        step: f64,
        #[arg(long, default_value_t = 0.95)]
        decay: f64,
        /// Output directory for results.csv, timings.csv, summary.txt.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Draw a solve report as SVG.
    Render {
        #[arg(long)]
        report: PathBuf,
        /// Instance path override (defaults to the path in the report).
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the augmented subset-lattice graph and export it.
    Agcs {
        /// Number of targets (2..=20).
        #[arg(long)]
        n: usize,
        /// Write DOT text here.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn env_seed(default: u64) -> u64 {
    std::env::var("GCS_TSP_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn read_instance(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path)?;
    parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("warning: worker pool not applied: {e}");
        }
    }
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Generate { n, d, seed, out, matrix_csv } => {
            let seed = seed.unwrap_or_else(|| env_seed(42));
            let inst = generate(n as usize, d as usize, seed)?;
            std::fs::write(&out, serialize(&inst))?;
            if let Some(csv_path) = matrix_csv {
                let m = bounded_matrix(&inst, 1e-7)?;
                std::fs::write(&csv_path, m.to_csv())?;
            }
            println!(
                "wrote {} ({} sets, d={}, seed {seed})",
                out.display(),
                inst.n_k(),
                inst.d
            );
            Ok(())
        }
        Cmd::Solve {
            instance,
            method,
            tol,
            max_nodes,
            ascent_iters,
            step,
            decay,
            stall,
            start,
            oracle,
            json,
        } => {
            let inst = read_instance(&instance)?;
            let mut rep = solve_instance(
                &inst,
                instance.display().to_string(),
                method,
                &SolveKnobs { tol, max_nodes, ascent_iters, step, decay, stall, start },
            )?;
            if let Some(oracle_path) = oracle {
                let text = std::fs::read_to_string(&oracle_path)?;
                let oracle_rep: SolveReport = serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", oracle_path.display())))?;
                rep.attach_oracle(oracle_rep.realized_cost);
            }
            print!("{}", rep.human_table());
            if let Some(json_path) = json {
                let text = serde_json::to_string_pretty(&rep)
                    .map_err(|e| CliError::Io(e.to_string()))?;
                std::fs::write(&json_path, text)?;
            }
            Ok(())
        }
        Cmd::Bench { sizes, count, seed0, tol, max_nodes, ascent_iters, step, decay, out_dir } => {
            let seed0 = seed0.unwrap_or_else(|| env_seed(1));
            let mut bnb = BnbConfig { max_nodes, tol, ..Default::default() };
            bnb.root_ascent = AscentConfig { max_iter: ascent_iters, t0: step, decay };
            bnb.node_ascent =
                AscentConfig { max_iter: (ascent_iters / 10).max(1), t0: step / 4.0, decay };
            let settings = bench::BenchSettings { sizes, count, seed0, tol, bnb };
            let out = bench::run(&settings)?;
            if out.failures > 0 {
                eprintln!("warning: {} instance runs failed; see the error column", out.failures);
            }
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(out_dir.join("results.csv"), &out.results_csv)?;
            std::fs::write(out_dir.join("timings.csv"), &out.timings_csv)?;
            std::fs::write(out_dir.join("summary.txt"), &out.summary)?;
            print!("{}", out.summary);
            println!("wrote {}", out_dir.display());
            Ok(())
        }
        Cmd::Render { report, instance, out } => {
            let text = std::fs::read_to_string(&report)?;
            let rep: SolveReport = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", report.display())))?;
            let inst_path = instance.unwrap_or_else(|| PathBuf::from(&rep.instance));
            let inst = read_instance(&inst_path)?;
            let svg = render::render_svg(&inst, &rep)?;
            std::fs::write(&out, svg)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Cmd::Agcs { n, dot, json } => {
            let g = gcs_tsp::agcs::build(n).map_err(|e| CliError::Guard(e.to_string()))?;
            let (s, v, e) = gcs_tsp::agcs::count_formulas(n);
            println!(
                "n={n}: {} subgraphs, {} vertices, {} edges (formulas: {s}, {v}, {e})",
                g.subgraph_count(),
                g.vertex_count(),
                g.edge_count()
            );
            if let Some(p) = dot {
                std::fs::write(&p, g.export_dot())?;
            }
            if let Some(p) = json {
                std::fs::write(&p, g.export_json())?;
            }
            Ok(())
        }
    }
}

struct SolveKnobs {
    tol: f64,
    max_nodes: usize,
    ascent_iters: usize,
    step: f64,
    decay: f64,
    stall: usize,
    start: usize,
}

fn solve_instance(
    inst: &Instance,
    instance_name: String,
    method: Method,
    knobs: &SolveKnobs,
) -> Result<SolveReport, CliError> {
    let started = Instant::now();
    let c = bounded_matrix(inst, knobs.tol)?;
    let mut lower_bounds = BTreeMap::new();
    let (order, waypoints, realized, bounded, nodes, proved): (
        Vec<usize>,
        Vec<Vec<f64>>,
        f64,
        f64,
        usize,
        Option<bool>,
    );
    match method {
        Method::Enum | Method::Lattice => {
            let r = if method == Method::Enum {
                solve_enumeration(inst, knobs.tol)?
            } else {
                solve_lattice(inst, &c, knobs.tol, knobs.max_nodes.max(1))?
            };
            let tour = Topology::tour(&r.order)?;
            bounded = bounded_cost_of(&tour, &c)?;
            order = r.order;
            waypoints = r.waypoints.iter().map(|p| p.coords.clone()).collect();
            realized = r.cost;
            nodes = r.nodes;
            proved = Some(r.proven);
        }
        Method::Bbb | Method::Cbb => {
            let cfg = BnbConfig {
                mode: if method == Method::Bbb { BnbMode::Bounded } else { BnbMode::Convex },
                max_nodes: knobs.max_nodes,
                root_ascent: AscentConfig {
                    max_iter: knobs.ascent_iters,
                    t0: knobs.step,
                    decay: knobs.decay,
                },
                node_ascent: AscentConfig {
                    max_iter: (knobs.ascent_iters / 10).max(1),
                    t0: knobs.step / 4.0,
                    decay: knobs.decay,
                },
                root_vertex: 0,
                greedy_start: knobs.start,
                stall_limit: knobs.stall,
                tol: knobs.tol,
            };
            let r = branch_and_bound(&c, Some(&inst.sets), &cfg)?;
            for (k, v) in lower_bound_suite(inst, &c)? {
                lower_bounds.insert(k, v);
            }
            let real = realize(&r.tour, &inst.sets, knobs.tol, None)?;
            order = r.tour.tour_order().expect("valid tour");
            waypoints = real.points.iter().map(|p| p.coords.clone()).collect();
            realized = r.realized_cost;
            bounded = r.bounded_cost;
            nodes = r.nodes_expanded;
            proved = Some(r.proved_optimal_on_matrix);
        }
        Method::Greedy | Method::TwoOpt => {
            let mut tour = greedy_tour(&c, knobs.start)?;
            if method == Method::TwoOpt {
                tour = two_opt(&tour, &c, None)?;
            }
            let real = realize(&tour, &inst.sets, knobs.tol, None)?;
            order = tour.tour_order().expect("valid tour");
            bounded = tour_matrix_cost(&c, &order);
            waypoints = real.points.iter().map(|p| p.coords.clone()).collect();
            realized = real.cost;
            nodes = 0;
            proved = None;
        }
    }
    if method != Method::Enum && method != Method::Lattice && lower_bounds.is_empty() {
        if let Ok(suite) = lower_bound_suite(inst, &c) {
            lower_bounds = suite;
        }
    }
    Ok(SolveReport {
        format_version: 1,
        instance: instance_name,
        method: method.name().to_string(),
        n: inst.n_k(),
        realized_cost: realized,
        bounded_cost: bounded,
        wall_time_s: started.elapsed().as_secs_f64(),
        nodes,
        proved_optimal_on_matrix: proved,
        lower_bounds,
        oracle_cost: None,
        delta_lower_pct: None,
        delta_upper_pct: None,
        order,
        waypoints,
    })
}
