use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use foldq::chimera::GraphSpec;
use foldq::dynamics::schedule::uniform_grid;
use foldq::dynamics::{
    evolve_closed, evolve_open, instantaneous_spectrum, AnnealSchedule, BathParams, ClosedOptions,
    OpenOptions,
};
use foldq::embedding::{
    apply_embedding, embed, unembed, verify_embedding, EmbedOptions, EmbeddedIsing, Embedding,
    FieldDistribution, GammaRule, UnembedPolicy,
};
use foldq::error::{Error, Result};
use foldq::fixtures::{self, Variant};
use foldq::io::{self, fixture_name, load_ising, load_json_or_fixture, load_polynomial, read_json};
use foldq::ising::{mask_from_spins, to_ising, IsingModel};
use foldq::lattice::{assignment_bits, Instance};
use foldq::pipeline::{parse_plan, run_pipeline, Bindings, PipelineConfig, Scheme, SolverChoice};
use foldq::poly::{fix_variables, MultilinearPolynomial};
use foldq::quadratize::{check_quadratization, quadratize, Quadratization};
use foldq::rational::Exact;
use foldq::solvers::{exhaustive_ground_states, landscape_report, simulated_anneal, SaSchedule, SampleSet};

/// `println!` that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "foldq", version, about = "Lattice folding to Ising models: compile, embed, solve, simulate")]
struct Cli {
    /// Directory for outputs written without an explicit path.
    #[arg(long, global = true, env = io::OUT_DIR_ENV, default_value = io::DEFAULT_OUT_DIR)]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy polynomial of a folding instance.
    Compile {
        /// Instance JSON or fixture:NAME.
        input: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Substitute constants for variables.
    Fix {
        input: String,
        /// Bindings such as q1=0,q3=1.
        #[arg(long)]
        bind: Bindings,
        /// Renumber the remaining variables from q1.
        #[arg(long)]
        relabel: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reduce to a quadratic polynomial with AND ancillas.
    Quadratize {
        input: String,
        /// Collapses such as q1q2=6,q3q4=4; a missing weight is chosen automatically.
        #[arg(long)]
        plan: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Normalized Ising model of a quadratic polynomial.
    Ising {
        /// Quadratic polynomial or the output of `quadratize`.
        input: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Find chains for a logical Ising model on a Chimera graph.
    Embed {
        input: String,
        #[command(flatten)]
        graph: GraphArg,
        /// Embedding whose chains are kept as given.
        #[arg(long)]
        hint: Option<String>,
        /// Chain strength: `auto` or a positive rational.
        #[arg(long, default_value = "auto")]
        gamma: GammaRule,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Physical model of a logical model under an embedding.
    ApplyEmbedding {
        input: String,
        #[arg(long)]
        embedding: String,
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_enum, default_value_t = FieldArg::Root)]
        field_distribution: FieldArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Map physical samples back to logical assignments.
    Unembed {
        /// Sample set of the embedded model (the JSON written by `solve`).
        samples: PathBuf,
        #[arg(long)]
        embedding: String,
        /// Embedded model the samples were drawn from.
        #[arg(long)]
        embedded: String,
        /// Logical model, for energies of the decoded assignments.
        #[arg(long)]
        ising: Option<String>,
        #[arg(long, value_enum, default_value_t = PolicyArg::MajorityVote)]
        policy: PolicyArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check chains, couplers and, for small models, minimizer preservation.
    VerifyEmbedding {
        input: String,
        #[arg(long)]
        embedding: String,
        #[command(flatten)]
        graph: GraphArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Ground states by enumeration or simulated annealing.
    Solve {
        input: String,
        #[arg(long, value_enum, default_value_t = Method::Exhaustive)]
        method: Method,
        #[command(flatten)]
        sa: SaArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the samples as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Lowest levels of the annealing Hamiltonian along the schedule.
    Spectrum {
        input: String,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// CSV of energies and gaps.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Closed or open-system annealing dynamics.
    AnnealSim {
        input: String,
        #[arg(long, value_enum, default_value_t = Mode::Closed)]
        mode: Mode,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Bath parameters (JSON); open mode only.
        #[arg(long)]
        bath: Option<PathBuf>,
        /// Instantaneous levels tracked.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Local error tolerance of the adaptive stepper.
        #[arg(long)]
        tol: Option<f64>,
        /// Trajectory CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Final-probability JSON.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every stage and write all artifacts with a manifest.
    Pipeline(PipelineArgs),
    /// Every assignment with its energy and, for instances, its fold.
    Landscape {
        /// Instance, polynomial, or fixture:NAME.
        input: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Bundled inputs.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
}

#[derive(Subcommand)]
enum FixturesAction {
    List,
    Dump {
        name: String,
        /// Text exactly as transcribed, without corrections.
        #[arg(long)]
        verbatim: bool,
    },
}

#[derive(Args)]
struct GraphArg {
    /// Graph JSON, fixture:NAME, or MxNxK (e.g. 4x4x4).
    #[arg(long, default_value = "4x4x4")]
    graph: String,
}

#[derive(Args)]
struct SaArgs {
    #[arg(long, default_value_t = 100)]
    reads: usize,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 0.1)]
    beta_min: f64,
    #[arg(long, default_value_t = 10.0)]
    beta_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ScheduleArgs {
    /// CSV with columns tau, A_GHz, B_GHz; the linear schedule otherwise.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_A0_GHZ)]
    a0: f64,
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_B0_GHZ)]
    b0: f64,
    /// Anneal time in microseconds.
    #[arg(long, default_value_t = AnnealSchedule::DEFAULT_T_RUN_US)]
    t_run: f64,
}

#[derive(Args)]
struct PipelineArgs {
    /// Config JSON; flags given here override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance, polynomial, or fixture:NAME.
    #[arg(long)]
    input: Option<String>,
    /// One subproblem per occurrence, e.g. --fix q1=0 --fix q1=1.
    #[arg(long = "fix")]
    fixings: Vec<Bindings>,
    /// Collapses such as q1q2=6,q3q4=4; greedy with automatic deltas when absent.
    #[arg(long)]
    plan: Option<String>,
    /// Graph JSON, fixture:NAME, or MxNxK.
    #[arg(long)]
    graph: Option<String>,
    /// Embedding whose chains are kept as given.
    #[arg(long)]
    hint: Option<String>,
    /// Chain strength, a rational or "auto".
    #[arg(long)]
    gamma: Option<GammaRule>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    reads: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use bundled fixtures exactly as printed.
    #[arg(long)]
    verbatim: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    Root,
    EqualSplit,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Discard,
    MajorityVote,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Exhaustive,
    Sa,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Closed,
    Open,
}

struct Out {
    dir: PathBuf,
}

impl Out {
    fn path(&self, explicit: Option<PathBuf>, default: &str) -> PathBuf {
        explicit.unwrap_or_else(|| self.dir.join(default))
    }

    fn json<T: Serialize + ?Sized>(&self, explicit: Option<PathBuf>, default: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(explicit, default);
        io::write_bytes(&path, &io::to_json_bytes(value)?)?;
        say!("wrote {}", path.display());
        Ok(path)
    }

    fn csv(&self, explicit: Option<PathBuf>, default: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        let path = self.path(explicit, default);
        let mut bytes = Vec::new();
        write(&mut bytes)?;
        io::write_bytes(&path, &bytes)?;
        say!("wrote {}", path.display());
        Ok(path)
    }
}

fn parse_graph(spec: &str) -> Result<GraphSpec> {
    if let Some(name) = fixture_name(spec) {
        return fixtures::graph(name);
    }
    let dims: Vec<&str> = spec.split('x').collect();
    if (2..=3).contains(&dims.len()) && dims.iter().all(|d| d.parse::<usize>().is_ok()) {
        let d: Vec<usize> = dims.iter().map(|d| d.parse().unwrap()).collect();
        return Ok(GraphSpec {
            m: d[0],
            n: d[1],
            k: d.get(2).copied().unwrap_or(4),
            masked: Vec::new(),
        });
    }
    read_json(Path::new(spec))
}

/// Polynomial, or the polynomial of a stored quadratization.
fn load_quadratic(spec: &str) -> Result<MultilinearPolynomial> {
    if fixture_name(spec).is_none() {
        let text = io::read_text(Path::new(spec))?;
        if let Ok(q) = serde_json::from_str::<Quadratization>(&text) {
            return Ok(q.polynomial);
        }
    }
    load_polynomial(spec)
}

fn load_instance(spec: &str) -> Result<Instance> {
    let inst: Instance = match fixture_name(spec) {
        Some(name) => fixtures::instance(name)?,
        None => read_json(Path::new(spec))?,
    };
    inst.validate()?;
    Ok(inst)
}

fn is_instance(spec: &str) -> bool {
    match fixture_name(spec) {
        Some(name) => fixtures::instance(name).is_ok(),
        None => io::read_text(Path::new(spec))
            .ok()
            .and_then(|t| serde_json::from_str::<Instance>(&t).ok())
            .is_some(),
    }
}

fn load_schedule(args: &ScheduleArgs) -> Result<AnnealSchedule> {
    match &args.schedule {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|source| Error::File {
                path: path.clone(),
                source,
            })?;
            AnnealSchedule::from_csv_reader(file, args.t_run)
        }
        None => AnnealSchedule::linear(args.a0, args.b0, args.t_run),
    }
}

fn solve(model: &IsingModel, method: Method, sa: &SaArgs) -> Result<SampleSet> {
    match method {
        Method::Exhaustive => exhaustive_ground_states(model),
        Method::Sa => {
            let schedule = SaSchedule::geometric(sa.beta_min, sa.beta_max, sa.sweeps)?;
            simulated_anneal(model, &schedule, sa.seed, sa.reads)
        }
    }
}

#[derive(Serialize)]
struct LogicalSample {
    assignment: Option<String>,
    chain_breaks: usize,
    count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    binary_energy: Option<Exact>,
}

#[derive(Serialize)]
struct LandscapeSummary {
    assignments: usize,
    self_avoiding: Option<usize>,
    min_energy: Exact,
    ground_assignments: Vec<String>,
    degeneracy: Vec<(Exact, usize)>,
}

fn landscape(input: &str, out: &Out, output: Option<PathBuf>) -> Result<()> {
    let (summary, write): (LandscapeSummary, Box<dyn FnOnce(&mut Vec<u8>) -> Result<()>>) = if is_instance(input) {
        let rows = load_instance(input)?.landscape()?;
        let valid: Vec<_> = rows.iter().filter(|r| r.valid).collect();
        let min = valid.first().map(|r| r.energy).unwrap_or_else(|| rows[0].energy);
        let mut degeneracy: Vec<(Exact, usize)> = Vec::new();
        for r in &valid {
            match degeneracy.last_mut() {
                Some((e, c)) if e.0 == r.energy => *c += 1,
                _ => degeneracy.push((Exact(r.energy), 1)),
            }
        }
        let summary = LandscapeSummary {
            assignments: rows.len(),
            self_avoiding: Some(valid.len()),
            min_energy: Exact(min),
            ground_assignments: valid
                .iter()
                .filter(|r| r.energy == min)
                .map(|r| r.assignment_bits())
                .collect(),
            degeneracy,
        };
        let write = move |buf: &mut Vec<u8>| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["assignment_bits", "turns", "valid", "energy", "points"])?;
            for r in &rows {
                w.write_record([
                    r.assignment_bits(),
                    r.turns.to_string(),
                    r.valid.to_string(),
                    r.energy.to_string(),
                    r.fold.format_points(),
                ])?;
            }
            w.flush()?;
            Ok(())
        };
        (summary, Box::new(write))
    } else {
        let p = load_polynomial(input)?;
        let table = landscape_report(&p, None)?;
        let min = table.degeneracy[0].0;
        let summary = LandscapeSummary {
            assignments: table.rows.len(),
            self_avoiding: None,
            min_energy: Exact(min),
            ground_assignments: table
                .rows
                .iter()
                .filter(|r| r.energy == min)
                .map(|r| assignment_bits(r.assignment, table.arity))
                .collect(),
            degeneracy: table.degeneracy.iter().map(|&(e, c)| (Exact(e), c)).collect(),
        };
        (summary, Box::new(move |buf: &mut Vec<u8>| table.write_csv(buf)))
    };
    let csv_path = out.csv(output, "landscape.csv", write)?;
    out.json(Some(csv_path.with_extension("json")), "", &summary)?;
    let valid = summary
        .self_avoiding
        .map(|v| format!(", {v} self-avoiding"))
        .unwrap_or_default();
    say!(
        "{} assignments{valid}, minimum {} at {}",
        summary.assignments,
        summary.min_energy.0,
        summary.ground_assignments.join(" ")
    );
    Ok(())
}

fn pipeline(args: PipelineArgs, out: &Out) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            let mut cfg: PipelineConfig = read_json(path)?;
            // A config without an explicit directory follows the command line.
            let text = io::read_text(path)?;
            if !text.contains("\"out_dir\"") {
                cfg.out_dir = out.dir.clone();
            }
            cfg
        }
        None => {
            let input = args
                .input
                .clone()
                .ok_or_else(|| Error::validation("pipeline needs --input or --config"))?;
            PipelineConfig::new(input, out.dir.clone())
        }
    };
    if let Some(input) = args.input {
        cfg.input = input;
    }
    if !args.fixings.is_empty() {
        cfg.scheme = Scheme::Fixings {
            subproblems: args.fixings,
        };
    }
    if let Some(plan) = &args.plan {
        cfg.plan = Some(parse_plan(plan)?);
    }
    if let Some(g) = &args.graph {
        cfg.graph = parse_graph(g)?;
    }
    if let Some(h) = &args.hint {
        cfg.hint = Some(load_json_or_fixture::<Embedding>(h)?);
    }
    if let Some(g) = args.gamma {
        cfg.gamma = g;
    }
    match args.method {
        Some(Method::Exhaustive) => cfg.solver = SolverChoice::Exhaustive,
        Some(Method::Sa) if !matches!(cfg.solver, SolverChoice::Sa { .. }) => {
            cfg.solver = SolverChoice::Sa {
                reads: 100,
                sweeps: 1000,
                beta_min: 0.1,
                beta_max: 10.0,
            }
        }
        _ => {}
    }
    if let SolverChoice::Sa { reads, sweeps, .. } = &mut cfg.solver {
        if let Some(r) = args.reads {
            *reads = r;
        }
        if let Some(s) = args.sweeps {
            *sweeps = s;
        }
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.verbatim_fixtures |= args.verbatim;
    let report = run_pipeline(&cfg)?;
    say!("wrote {}", cfg.out_dir.join(&report.manifest).display());
    if let Some(e) = &report.best_energy {
        say!("best energy {}", e.0);
    }
    for a in &report.best_assignments {
        say!("ground {a}");
    }
    for f in &report.folds {
        say!("fold {} turns {} {}", f.assignment, f.turns, f.points);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let out = Out { dir: cli.out_dir };
    match cli.command {
        Command::Compile { input, output } => {
            let inst = load_instance(&input)?;
            let p = inst.polynomial()?;
            out.json(output, "polynomial.json", &p)?;
            say!("{p}");
        }
        Command::Fix {
            input,
            bind,
            relabel,
            output,
        } => {
            let p = fix_variables(&load_polynomial(&input)?, &bind.0, relabel)?;
            out.json(output, "fixed.json", &p)?;
            say!("{p}");
        }
        Command::Quadratize { input, plan, output } => {
            let p = load_polynomial(&input)?;
            let plan = plan.as_deref().map(parse_plan).transpose()?;
            let q = quadratize(&p, plan.as_ref())?;
            out.json(output, "quadratized.json", &q)?;
            for c in &q.collapses {
                say!("q{}q{} -> q{} delta {}", c.i, c.j, c.ancilla, c.delta.0);
            }
            if q.polynomial.arity() <= foldq::poly::MAX_EXHAUSTIVE_ARITY {
                let check = check_quadratization(&p, &q)?;
                say!(
                    "checked {} assignments: {} mismatches, {} violations at or below zero",
                    check.assignments, check.consistent_mismatches, check.low_violations
                );
            }
            say!("{}", q.polynomial);
        }
        Command::Ising { input, output } => {
            let m = to_ising(&load_quadratic(&input)?)?;
            out.json(output, "ising.json", &m)?;
            say!("n {} scale {} offset {}", m.n(), m.scale(), m.offset());
        }
        Command::Embed {
            input,
            graph,
            hint,
            gamma,
            seed,
            restarts,
            output,
        } => {
            let m = load_ising(&input)?;
            let g = parse_graph(&graph.graph)?.build()?;
            let hint = hint.as_deref().map(load_json_or_fixture::<Embedding>).transpose()?;
            let opts = EmbedOptions {
                seed,
                restarts,
                gamma,
                ..Default::default()
            };
            let e = embed(&m, &g, hint.as_ref(), &opts)?;
            out.json(output, "embedding.json", &e)?;
            say!("qubits {} longest chain {}", e.num_qubits(), e.max_chain_len());
        }
        Command::ApplyEmbedding {
            input,
            embedding,
            graph,
            field_distribution,
            output,
        } => {
            let m = load_ising(&input)?;
            let e: Embedding = load_json_or_fixture(&embedding)?;
            let g = parse_graph(&graph.graph)?.build()?;
            let dist = match field_distribution {
                FieldArg::Root => FieldDistribution::Root,
                FieldArg::EqualSplit => FieldDistribution::EqualSplit,
            };
            let phys = apply_embedding(&m, &e, &g, dist)?;
            out.json(output, "embedded.json", &phys)?;
            say!("qubits {} scale {} offset {}", phys.qubits.len(), phys.model.scale(), phys.model.offset());
        }
        Command::Unembed {
            samples,
            embedding,
            embedded,
            ising,
            policy,
            output,
        } => {
            let set: SampleSet = read_json(&samples)?;
            let e: Embedding = load_json_or_fixture(&embedding)?;
            let phys: EmbeddedIsing = load_json_or_fixture(&embedded)?;
            let logical = ising.as_deref().map(load_ising).transpose()?;
            let n = e.chains.keys().next_back().map_or(0, |v| v + 1);
            let policy = match policy {
                PolicyArg::Discard => UnembedPolicy::Discard,
                PolicyArg::MajorityVote => UnembedPolicy::MajorityVote,
            };
            let mut rows = Vec::new();
            for s in &set.samples {
                let u = unembed(&phys.sample_map(&s.spins), &e, n, policy)?;
                let binary_energy = match (&logical, &u.spins) {
                    (Some(m), Some(spins)) => Some(Exact(m.binary_energy(spins))),
                    _ => None,
                };
                rows.push(LogicalSample {
                    assignment: u.spins.as_ref().map(|sp| assignment_bits(mask_from_spins(sp), n)),
                    chain_breaks: u.chain_breaks,
                    count: s.count,
                    binary_energy,
                });
            }
            out.json(output, "unembedded.json", &rows)?;
        }
        Command::VerifyEmbedding {
            input,
            embedding,
            graph,
            output,
        } => {
            let m = load_ising(&input)?;
            let e: Embedding = load_json_or_fixture(&embedding)?;
            let g = parse_graph(&graph.graph)?.build()?;
            let report = verify_embedding(&m, &e, &g);
            out.json(output, "verify.json", &report)?;
            if !report.is_valid() {
                for v in &report.violations {
                    eprintln!("{v}");
                }
                return Err(Error::validation(format!(
                    "embedding has {} violation(s)",
                    report.violations.len()
                )));
            }
            say!("valid");
        }
        Command::Solve {
            input,
            method,
            sa,
            output,
            csv,
        } => {
            let m = load_ising(&input)?;
            let set = solve(&m, method, &sa)?;
            out.json(output, "samples.json", &set)?;
            if let Some(path) = csv {
                out.csv(Some(path), "", |buf| set.write_csv(buf))?;
            }
            if let Some(best) = set.lowest() {
                say!("lowest energy {} (polynomial units {})", best.energy.0, best.binary_energy.0);
                for s in set.samples.iter().filter(|s| s.energy == best.energy) {
                    say!("{} x{}", s.assignment(), s.count);
                }
            }
        }
        Command::Spectrum {
            input,
            schedule,
            levels,
            points,
            output,
        } => {
            let m = load_ising(&input)?;
            let s = load_schedule(&schedule)?;
            let rep = instantaneous_spectrum(&m, &s, levels, &uniform_grid(points))?;
            out.csv(output, "spectrum.csv", |buf| rep.write_csv(buf))?;
            say!("min gap {} GHz at tau {}", rep.min_gap, rep.tau_star);
        }
        Command::AnnealSim {
            input,
            mode,
            schedule,
            bath,
            levels,
            points,
            tol,
            trajectory,
            output,
        } => {
            let m = load_ising(&input)?;
            let s = load_schedule(&schedule)?;
            let grid = uniform_grid(points);
            let result = match mode {
                Mode::Closed => {
                    let mut opts = ClosedOptions {
                        output: grid,
                        ..Default::default()
                    };
                    if let Some(k) = levels {
                        opts.levels = k;
                    }
                    if let Some(t) = tol {
                        opts.tol = t;
                    }
                    evolve_closed(&m, &s, &opts)?
                }
                Mode::Open => {
                    let bath: BathParams = match &bath {
                        Some(p) => read_json(p)?,
                        None => BathParams::default(),
                    };
                    let mut opts = OpenOptions {
                        output: grid,
                        ..Default::default()
                    };
                    if let Some(k) = levels {
                        opts.levels = k;
                    }
                    if let Some(t) = tol {
                        opts.tol = t;
                    }
                    evolve_open(&m, &s, &bath, &opts)?
                }
            };
            let ground: Vec<u64> = exhaustive_ground_states(&m)?
                .samples
                .iter()
                .map(|x| mask_from_spins(&x.spins))
                .collect();
            out.csv(trajectory, "trajectory.csv", |buf| result.write_trajectory_csv(buf))?;
            let summary = result.final_json(&ground, m.n());
            out.json(output, "final.json", &summary)?;
            say!("ground-state probability {}", summary["ground_probability"]);
        }
        Command::Pipeline(args) => pipeline(args, &out)?,
        Command::Landscape { input, output } => landscape(&input, &out, output)?,
        Command::Fixtures { action } => match action {
            FixturesAction::List => {
                for f in fixtures::list() {
                    let kind = serde_json::to_value(f.kind)?;
                    let kind = kind.as_str().unwrap_or_default();
                    let note = if f.sanitizations.is_empty() { "" } else { " (sanitized)" };
                    say!("{:<26} {:<15} {}{note}", f.name, kind, f.description);
                }
            }
            FixturesAction::Dump { name, verbatim } => {
                let variant = if verbatim { Variant::Verbatim } else { Variant::Sanitized };
                say!("{}", fixtures::info(&name)?.text(variant));
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
