//! Command-line front end: loads task systems, runs the analyses, and
//! prints reports as text or as versioned JSON (`"schema": 1`, rationals
//! as "p/q" strings).

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use suspan::exact::{exact_wcrt, ExactStatus, PruneFlags, SearchConfig};
use suspan::gap::{joint_bound, ratio_report, split_bound, BoundsReport, GapFamilyParams};
use suspan::hardness::{
    build_reduction, cross_check_reduction, plant_no, plant_yes, CrossCheckReport, HardnessError,
    PartitionInstance, ReductionVariant,
};
use suspan::milp::{
    build_model, check_assignment, export_lp, solve, MilpAssignment, MilpVariant, SolveStatus,
};
use suspan::rta::{wcrt_ordinary, OrdinaryRta, RtaError};
use suspan::sim::{simulate, ReleasePattern, SsOutcome};
use suspan::{load_task_system, save_task_system, TaskSystem, Time};

#[derive(Parser)]
#[command(
    name = "suspan",
    version,
    about = "Response-time analysis for a segmented self-suspending lowest-priority task"
)]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = OutputArg::Text)]
    output: OutputArg,
    /// Seed for the planted-instance generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for multi-instance verification.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputArg {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Full,
    NoBounds,
    NoRel,
    V1,
}

impl From<VariantArg> for MilpVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => MilpVariant::Full,
            VariantArg::NoBounds => MilpVariant::NoBounds,
            VariantArg::NoRel => MilpVariant::NoRel,
            VariantArg::V1 => MilpVariant::V1,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReductionArg {
    Constrained,
    Implicit,
    #[value(name = "footnote-2v")]
    Footnote2V,
}

impl From<ReductionArg> for ReductionVariant {
    fn from(v: ReductionArg) -> Self {
        match v {
            ReductionArg::Constrained => ReductionVariant::Constrained,
            ReductionArg::Implicit => ReductionVariant::Implicit,
            ReductionArg::Footnote2V => ReductionVariant::Footnote2V,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlantArg {
    Yes,
    No,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every analysis on a task file: per-task response times, exact
    /// search for the suspending task, and the split/joint upper bounds.
    Analyze {
        tasks: PathBuf,
        /// Budget on window evaluations for the exact search.
        #[arg(long, default_value_t = 5_000_000)]
        cap: u64,
    },
    /// Simulate an explicit release pattern; prints the event log as TSV.
    Sim {
        tasks: PathBuf,
        /// Release pattern JSON file.
        #[arg(long)]
        pattern: PathBuf,
        /// Simulation horizon (rational "p/q"); defaults to a safe cap.
        #[arg(long)]
        horizon: Option<String>,
    },
    /// Response-time analysis of the ordinary higher-priority tasks.
    Rta { tasks: PathBuf },
    /// Exact worst-case response time of the suspending task.
    Exact {
        tasks: PathBuf,
        /// Echoed discretization step (the search is exact either way).
        #[arg(long)]
        grid: Option<String>,
        /// Disable all search-space reductions.
        #[arg(long)]
        no_prune: bool,
        /// Budget on window evaluations; unlimited when absent.
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Build, check, solve, or export the per-window interference model.
    Milp {
        tasks: PathBuf,
        #[arg(long, value_enum, default_value_t = VariantArg::Full)]
        variant: VariantArg,
        /// Write the model as an LP-format file instead of solving.
        #[arg(long, conflicts_with = "check")]
        export_lp: Option<PathBuf>,
        /// Check a candidate assignment (JSON) instead of solving.
        #[arg(long)]
        check: Option<PathBuf>,
        /// Node budget for the enumerative solver.
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Emit the task system encoding a 3-partition instance.
    Reduce {
        #[arg(long = "M")]
        m: usize,
        #[arg(long = "V")]
        v: i128,
        /// Explicit item values, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "plant")]
        values: Option<Vec<i128>>,
        /// Plant a satisfiable (yes) or unsatisfiable (no) instance.
        #[arg(long, value_enum)]
        plant: Option<PlantArg>,
        #[arg(long, value_enum, default_value_t = ReductionArg::Constrained)]
        variant: ReductionArg,
        /// Write to a file (.json or .toml) instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check the reduction verdict along three independent routes.
    #[command(name = "verify-theorem1")]
    VerifyTheorem1 {
        #[arg(long = "M", default_value_t = 3)]
        m: usize,
        #[arg(long = "V", default_value_t = 7)]
        v: i128,
        /// Explicit item values, comma separated (overrides planting).
        #[arg(long, value_delimiter = ',', conflicts_with = "plant")]
        values: Option<Vec<i128>>,
        #[arg(long, value_enum)]
        plant: Option<PlantArg>,
        /// Number of planted instances to verify.
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Bounds-versus-truth report for the pessimism family.
    Gap {
        #[arg(long)]
        q: Option<i128>,
        #[arg(long)]
        m: Option<usize>,
        /// Segment shrinkage (rational "p/q"); defaults to 1/(2q).
        #[arg(long)]
        eps: Option<String>,
        /// Sweep the segment count, e.g. "m=2..6" (q defaults to m).
        #[arg(long, conflicts_with = "m")]
        sweep: Option<String>,
    },
}

fn main() {
    // die like grep/cat when the reader goes away instead of panicking
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            let falsified = e
                .chain()
                .any(|c| matches!(c.downcast_ref(), Some(HardnessError::Falsification(_))));
            std::process::exit(if falsified { 2 } else { 1 });
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Analyze { ref tasks, cap } => analyze(&cli, tasks, cap),
        Cmd::Sim { ref tasks, ref pattern, ref horizon } => {
            sim(&cli, tasks, pattern, horizon.as_deref())
        }
        Cmd::Rta { ref tasks } => rta(&cli, tasks),
        Cmd::Exact { ref tasks, ref grid, no_prune, cap } => {
            exact(&cli, tasks, grid.as_deref(), no_prune, cap)
        }
        Cmd::Milp { ref tasks, variant, ref export_lp, ref check, budget } => {
            milp(&cli, tasks, variant, export_lp.as_deref(), check.as_deref(), budget)
        }
        Cmd::Reduce { m, v, ref values, plant, variant, ref out } => {
            reduce(&cli, m, v, values.clone(), plant, variant, out.as_deref())
        }
        Cmd::VerifyTheorem1 { m, v, ref values, plant, count } => {
            verify_theorem1(&cli, m, v, values.clone(), plant, count)
        }
        Cmd::Gap { q, m, ref eps, ref sweep } => gap(&cli, q, m, eps.as_deref(), sweep.as_deref()),
    }
}

fn load(path: &std::path::Path) -> Result<TaskSystem> {
    load_task_system(path).with_context(|| format!("loading task system {}", path.display()))
}

fn parse_time(s: &str, what: &str) -> Result<Time> {
    Time::from_str(s).map_err(|e| anyhow::anyhow!("{what}: {e}"))
}

fn emit_json<T: Serialize>(body: T) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<T: Serialize> {
        schema: u32,
        #[serde(flatten)]
        body: T,
    }
    println!("{}", serde_json::to_string_pretty(&Doc { schema: 1, body })?);
    Ok(())
}

#[derive(Serialize)]
struct TaskRow {
    id: u32,
    priority: u32,
    wcet: Time,
    period: Time,
    deadline: Time,
    verdict: String,
    response: Option<Time>,
}

fn task_rows(ts: &TaskSystem) -> Vec<TaskRow> {
    ts.hp_tasks()
        .iter()
        .map(|t| {
            let (verdict, response) = match wcrt_ordinary(ts, t.id) {
                Ok(OrdinaryRta::Schedulable { wcrt }) => ("ok".to_string(), Some(wcrt)),
                Ok(OrdinaryRta::DeadlineMiss { job_index, response }) => {
                    (format!("miss at job {job_index}"), Some(response))
                }
                Err(RtaError::Divergence { utilization }) => {
                    (format!("divergent (utilization {utilization})"), None)
                }
                Err(e) => (format!("error: {e}"), None),
            };
            TaskRow {
                id: t.id,
                priority: t.priority.unwrap_or(0),
                wcet: t.wcet,
                period: t.period,
                deadline: t.deadline,
                verdict,
                response,
            }
        })
        .collect()
}

fn print_task_table(rows: &[TaskRow]) {
    println!(
        "{:<4} {:<4} {:>8} {:>8} {:>8} {:>10}  verdict",
        "id", "prio", "C", "T", "D", "response"
    );
    for r in rows {
        let resp = r.response.map_or("-".to_string(), |t| t.to_string());
        println!(
            "{:<4} {:<4} {:>8} {:>8} {:>8} {:>10}  {}",
            r.id,
            r.priority,
            r.wcet.to_string(),
            r.period.to_string(),
            r.deadline.to_string(),
            resp,
            r.verdict
        );
    }
}

#[derive(Serialize)]
struct ExactSummary {
    verdict: String,
    response: Option<Time>,
    /// Whether `response` is the exact worst case (misses may be truncated).
    exact: Option<bool>,
    evals: u64,
}

fn exact_summary(
    ts: &TaskSystem,
    cfg: &SearchConfig,
) -> Result<(ExactSummary, Option<ReleasePattern>)> {
    let res = exact_wcrt(ts, cfg)?;
    Ok(match res.status {
        ExactStatus::Schedulable { wcrt, witness } => (
            ExactSummary {
                verdict: "schedulable".into(),
                response: Some(wcrt),
                exact: Some(true),
                evals: res.evals,
            },
            Some(witness),
        ),
        ExactStatus::DeadlineMiss { response, exact, witness } => (
            ExactSummary {
                verdict: "deadline-miss".into(),
                response: Some(response),
                exact: Some(exact),
                evals: res.evals,
            },
            Some(witness),
        ),
        ExactStatus::Aborted { best } => (
            ExactSummary {
                verdict: "aborted".into(),
                response: best,
                exact: None,
                evals: res.evals,
            },
            None,
        ),
    })
}

fn analyze(cli: &Cli, tasks: &std::path::Path, cap: u64) -> Result<()> {
    let ts = load(tasks)?;
    let rows = task_rows(&ts);
    let cfg = SearchConfig { max_evals: Some(cap), ..SearchConfig::default() };
    let (suspending, _) = exact_summary(&ts, &cfg)?;
    let split = split_bound(&ts).ok();
    let joint = joint_bound(&ts).ok();

    #[derive(Serialize)]
    struct Report {
        tasks: Vec<TaskRow>,
        suspending: ExactSummary,
        split_bound: Option<Time>,
        joint_bound: Option<Time>,
    }
    let report = Report { tasks: rows, suspending, split_bound: split, joint_bound: joint };
    if cli.output == OutputArg::Json {
        return emit_json(report);
    }
    print_task_table(&report.tasks);
    let resp = report.suspending.response.map_or("-".to_string(), |t| t.to_string());
    println!(
        "suspending task: {} (response {resp}, {} window evaluations)",
        report.suspending.verdict, report.suspending.evals
    );
    let show = |name: &str, b: Option<Time>| match b {
        Some(t) => println!("{name} bound: {t}"),
        None => println!("{name} bound: divergent"),
    };
    show("split", report.split_bound);
    show("joint", report.joint_bound);
    Ok(())
}

fn sim(
    cli: &Cli,
    tasks: &std::path::Path,
    pattern: &std::path::Path,
    horizon: Option<&str>,
) -> Result<()> {
    let ts = load(tasks)?;
    let text = std::fs::read_to_string(pattern)
        .with_context(|| format!("reading pattern {}", pattern.display()))?;
    let rp: ReleasePattern = serde_json::from_str(&text)
        .with_context(|| format!("parsing pattern {}", pattern.display()))?;
    let horizon = horizon.map(|h| parse_time(h, "horizon")).transpose()?;
    let trace = simulate(&ts, &rp, horizon)?;
    if cli.output == OutputArg::Json {
        return emit_json(trace);
    }
    print!("{}", trace.to_tsv());
    match trace.outcome {
        SsOutcome::Finished { response } => println!("# response\t{response}"),
        SsOutcome::Unfinished { completed_segments } => {
            println!("# unfinished\t{completed_segments} segments completed")
        }
    }
    Ok(())
}

fn rta(cli: &Cli, tasks: &std::path::Path) -> Result<()> {
    let ts = load(tasks)?;
    let rows = task_rows(&ts);
    let all_ok = rows.iter().all(|r| r.verdict == "ok");

    #[derive(Serialize)]
    struct Report {
        tasks: Vec<TaskRow>,
        all_ordinary_schedulable: bool,
    }
    let report = Report { tasks: rows, all_ordinary_schedulable: all_ok };
    if cli.output == OutputArg::Json {
        return emit_json(report);
    }
    print_task_table(&report.tasks);
    println!(
        "ordinary tasks: {}",
        if report.all_ordinary_schedulable { "all schedulable" } else { "NOT all schedulable" }
    );
    Ok(())
}

fn exact(
    cli: &Cli,
    tasks: &std::path::Path,
    grid: Option<&str>,
    no_prune: bool,
    cap: Option<u64>,
) -> Result<()> {
    let ts = load(tasks)?;
    let cfg = SearchConfig {
        prune: if no_prune { PruneFlags::none() } else { PruneFlags::default() },
        max_evals: cap,
        grid: grid.map(|g| parse_time(g, "grid")).transpose()?,
    };
    let (summary, witness) = exact_summary(&ts, &cfg)?;

    #[derive(Serialize)]
    struct Report {
        #[serde(flatten)]
        summary: ExactSummary,
        witness: Option<ReleasePattern>,
    }
    let report = Report { summary, witness };
    if cli.output == OutputArg::Json {
        return emit_json(report);
    }
    let resp = report.summary.response.map_or("-".to_string(), |t| t.to_string());
    println!(
        "verdict: {} (response {resp}, {} window evaluations)",
        report.summary.verdict, report.summary.evals
    );
    if let Some(w) = &report.witness {
        println!("witness: {}", serde_json::to_string_pretty(w)?);
    }
    Ok(())
}

fn milp(
    cli: &Cli,
    tasks: &std::path::Path,
    variant: VariantArg,
    lp_out: Option<&std::path::Path>,
    check: Option<&std::path::Path>,
    budget: u64,
) -> Result<()> {
    let ts = load(tasks)?;
    let variant: MilpVariant = variant.into();
    let model = build_model(&ts, variant).context("building the model")?;

    if let Some(path) = lp_out {
        let lp = export_lp(&model)?;
        std::fs::write(path, &lp).with_context(|| format!("writing {}", path.display()))?;
        if cli.output == OutputArg::Json {
            #[derive(Serialize)]
            struct Report<'a> {
                variant: MilpVariant,
                written: &'a str,
            }
            return emit_json(Report { variant, written: &path.display().to_string() });
        }
        println!("wrote LP model to {}", path.display());
        return Ok(());
    }

    if let Some(path) = check {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading assignment {}", path.display()))?;
        let a: MilpAssignment = serde_json::from_str(&text)
            .with_context(|| format!("parsing assignment {}", path.display()))?;
        let report = check_assignment(&model, &a)?;
        if cli.output == OutputArg::Json {
            #[derive(Serialize)]
            struct Report {
                variant: MilpVariant,
                #[serde(flatten)]
                check: suspan::milp::CheckReport,
            }
            return emit_json(Report { variant, check: report });
        }
        println!(
            "assignment is {} (objective {})",
            if report.feasible { "FEASIBLE" } else { "infeasible" },
            report.objective
        );
        for f in report.failures() {
            let task = f.task.map_or("-".to_string(), |t| t.to_string());
            let window = f.window.map_or("-".to_string(), |w| (w + 1).to_string());
            println!(
                "violated: {:?} task {} window {} (residual {})",
                f.kind, task, window, f.residual
            );
        }
        return Ok(());
    }

    let sol = solve(&model, budget)?;
    #[derive(Serialize)]
    struct Report {
        variant: MilpVariant,
        objective: Time,
        status: SolveStatus,
        nodes: u64,
        best: MilpAssignment,
    }
    let report = Report {
        variant,
        objective: sol.objective,
        status: sol.status,
        nodes: sol.nodes,
        best: sol.best,
    };
    if cli.output == OutputArg::Json {
        return emit_json(report);
    }
    println!(
        "objective: {} ({}, {} nodes)",
        report.objective,
        match report.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::LowerBound => "lower bound",
        },
        report.nodes
    );
    println!("point: {}", serde_json::to_string_pretty(&report.best)?);
    Ok(())
}

fn make_instance(
    m: usize,
    v: i128,
    values: Option<Vec<i128>>,
    plant: Option<PlantArg>,
    seed: u64,
    index: u64,
) -> Result<PartitionInstance> {
    match (values, plant) {
        (Some(vals), _) => Ok(PartitionInstance::new(m, v, vals)?),
        (None, Some(p)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index));
            Ok(match p {
                PlantArg::Yes => plant_yes(m, v, &mut rng)?,
                PlantArg::No => plant_no(m, v, &mut rng)?,
            })
        }
        (None, None) => bail!("pass either --values or --plant yes|no"),
    }
}

fn reduce(
    cli: &Cli,
    m: usize,
    v: i128,
    values: Option<Vec<i128>>,
    plant: Option<PlantArg>,
    variant: ReductionArg,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let inst = make_instance(m, v, values, plant, cli.seed, 0)?;
    eprintln!(
        "# instance: m={} v={} values={:?} (sum promise {})",
        inst.m,
        inst.v,
        inst.values,
        if inst.sum_matches() { "holds" } else { "broken" }
    );
    let ts = build_reduction(&inst, variant.into());
    match out {
        Some(path) => {
            save_task_system(&ts, path).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("# wrote task system to {}", path.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&ts)?),
    }
    Ok(())
}

fn verify_theorem1(
    cli: &Cli,
    m: usize,
    v: i128,
    values: Option<Vec<i128>>,
    plant: Option<PlantArg>,
    count: usize,
) -> Result<()> {
    let explicit = values.is_some();
    let count = if explicit { 1 } else { count.max(1) };
    let mut instances = Vec::with_capacity(count);
    for i in 0..count {
        instances.push(make_instance(
            m,
            v,
            values.clone(),
            plant.or(Some(PlantArg::Yes)).filter(|_| !explicit),
            cli.seed,
            i as u64,
        )?);
    }

    // ordered assembly: chunks are joined in spawn order
    let threads = cli.threads.max(1).min(instances.len());
    let chunk = instances.len().div_ceil(threads);
    let reports: Vec<Result<CrossCheckReport, HardnessError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = instances
            .chunks(chunk)
            .map(|batch| {
                scope.spawn(move || batch.iter().map(cross_check_reduction).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("verifier thread panicked")).collect()
    });

    let mut items = Vec::with_capacity(instances.len());
    for (inst, report) in instances.into_iter().zip(reports) {
        let report = report.with_context(|| format!("instance with values {:?}", inst.values))?;
        items.push((inst, report));
    }

    if cli.output == OutputArg::Json {
        #[derive(Serialize)]
        struct Item {
            instance: PartitionInstance,
            #[serde(flatten)]
            report: CrossCheckReport,
        }
        #[derive(Serialize)]
        struct Report {
            instances: Vec<Item>,
            agree: bool,
        }
        let items: Vec<Item> =
            items.into_iter().map(|(instance, report)| Item { instance, report }).collect();
        return emit_json(Report { instances: items, agree: true });
    }
    for (i, (inst, r)) in items.iter().enumerate() {
        let verdict = |miss: bool| if miss { "miss" } else { "ok" };
        println!(
            "instance {i}: values {:?} -> partition {}, sweep {}, constrained {}, implicit {} (max sum {} vs threshold {})",
            inst.values,
            if r.has_partition { "yes" } else { "no" },
            verdict(r.exhaustive_miss),
            verdict(r.constrained_miss),
            verdict(r.implicit_miss),
            r.max_sum,
            r.threshold
        );
    }
    println!("all verdicts agree");
    Ok(())
}

fn gap(
    cli: &Cli,
    q: Option<i128>,
    m: Option<usize>,
    eps: Option<&str>,
    sweep: Option<&str>,
) -> Result<()> {
    let eps = eps.map(|e| parse_time(e, "eps")).transpose()?;
    let ms: Vec<usize> = match (sweep, m) {
        (Some(spec), _) => {
            let range = spec
                .strip_prefix("m=")
                .and_then(|r| r.split_once(".."))
                .with_context(|| format!("sweep spec {spec:?} is not of the form m=A..B"))?;
            let lo: usize = range.0.parse().context("sweep lower bound")?;
            let hi: usize = range.1.parse().context("sweep upper bound")?;
            if lo > hi {
                bail!("empty sweep range {spec:?}");
            }
            (lo..=hi).collect()
        }
        (None, Some(m)) => vec![m],
        (None, None) => bail!("pass --m or --sweep m=A..B"),
    };

    let mut reports: Vec<BoundsReport> = Vec::with_capacity(ms.len());
    for m in ms {
        let q = q.unwrap_or(m as i128);
        let p = match eps {
            Some(e) => GapFamilyParams::with_eps(q, m, e)?,
            None => GapFamilyParams::new(q, m)?,
        };
        reports.push(ratio_report(&p)?);
    }

    if cli.output == OutputArg::Json {
        #[derive(Serialize)]
        struct Report {
            reports: Vec<BoundsReport>,
        }
        return emit_json(Report { reports });
    }
    println!(
        "{:>3} {:>3} {:>6} {:>10} {:>10} {:>8} {:>10} {:>10} {:>9}  full-model",
        "q", "m", "eps", "split", "joint", "exact", "milp-lb", "ratio", "threshold"
    );
    for r in &reports {
        println!(
            "{:>3} {:>3} {:>6} {:>10} {:>10} {:>8} {:>10} {:>10} {:>9}  {}",
            r.q,
            r.m,
            r.eps.to_string(),
            r.ub_split.to_string(),
            r.ub_joint.to_string(),
            r.exact.to_string(),
            r.milp_lb.to_string(),
            r.ratio.to_string(),
            r.threshold.map_or("-".to_string(), |t| t.to_string()),
            r.full_model_feasible.map_or("-".to_string(), |b| b.to_string())
        );
    }
    Ok(())
}
