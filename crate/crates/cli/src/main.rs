use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use raildesign::bench::{bench_instance, deterministic_family, format_table, format_tsv, scenario_family};
use raildesign::milp::{build, export_lp, BuildError};
use raildesign::model::{validate_instance, Instance, Solution};
use raildesign::reduction::{gen_random_x3c, x3c_brute_force, x3c_to_instance, UnitLines, X3cSidecar};
use raildesign::solver::{SolveLimits, SolveStatus};
use raildesign::verify::verify;
use raildesign::{solve_instance, Mode, SolveInstanceError};

#[derive(Parser)]
#[command(name = "raildesign", version, about = "Railway network design: solve, verify, export, generate, benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct LimitArgs {
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Maximum number of branch-and-bound nodes.
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl LimitArgs {
    fn limits(&self) -> Result<SolveLimits> {
        let time_limit = match self.time_limit {
            Some(s) if !(s.is_finite() && s >= 0.0) => bail!("--time-limit must be a non-negative number of seconds"),
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        if self.threads == 0 {
            bail!("--threads must be at least 1");
        }
        Ok(SolveLimits { time_limit, node_limit: self.node_limit, threads: self.threads, ..SolveLimits::default() })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write the optimal solution.
    Solve {
        instance: PathBuf,
        /// auto, milp, arborescence or sp.
        #[arg(long, default_value = "auto")]
        mode: Mode,
        #[command(flatten)]
        limits: LimitArgs,
        /// Solution file; defaults to `<instance stem>.solution.json`.
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Check a solution against an instance.
    Verify { instance: PathBuf, solution: PathBuf },
    /// Write the 0-1 program in LP format.
    ExportLp {
        instance: PathBuf,
        /// Output file; standard output if omitted.
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Generate an instance from a random exact-cover-by-3-sets instance.
    GenX3c {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        subsets: usize,
        #[arg(long)]
        seed: u64,
        /// Plant an exact cover first.
        #[arg(long)]
        planted: bool,
        /// Model unit lines with capacity 1 instead of free expansion.
        #[arg(long)]
        fixed_lines: bool,
        /// Instance file; the ground truth goes to `<stem>.x3c.json` beside it.
        #[arg(short)]
        o: PathBuf,
    },
    /// Time build and solve over instance files or a built-in family.
    Bench {
        instances: Vec<PathBuf>,
        /// deterministic or scenarios; used when no instance files are given.
        #[arg(long, default_value = "deterministic")]
        family: String,
        #[arg(long, default_value_t = 4)]
        repetitions: usize,
        #[command(flatten)]
        limits: LimitArgs,
        /// Also write the rows as tab-separated values.
        #[arg(short)]
        o: Option<PathBuf>,
    },
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let instance = Instance::from_json(&text).with_context(|| format!("{} is not a valid instance file", path.display()))?;
    let report = validate_instance(&instance);
    if !report.is_ok() {
        bail!("{} failed validation:\n{report}", path.display());
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(instance)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let stem = stem.strip_suffix(".instance").unwrap_or(stem);
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_solve(instance: &Path, mode: Mode, limits: &LimitArgs, output: Option<PathBuf>) -> Result<ExitCode> {
    let inst = read_instance(instance)?;
    let limits = limits.limits()?;
    let outcome = match solve_instance(&inst, mode, &limits) {
        Ok(o) => o,
        Err(SolveInstanceError::Special(e)) => bail!("--mode {mode} cannot solve this instance: {e}"),
        Err(e) => return Err(e.into()),
    };
    for note in &outcome.notes {
        eprintln!("note: {note}");
    }
    println!("method: {}", outcome.method);
    if let Some(stats) = &outcome.stats {
        println!("nodes: {}", stats.nodes);
        println!("time: {:.3}s", stats.wall_time.as_secs_f64());
    }
    match outcome.status {
        SolveStatus::Optimal => {
            let sol = outcome.solution.expect("optimal outcome carries a solution");
            println!("status: optimal");
            print_costs(&sol);
            let path = output.unwrap_or_else(|| sibling(instance, ".solution.json"));
            write(&path, &sol.to_json())?;
            println!("solution: {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        SolveStatus::Infeasible => {
            println!("status: infeasible");
            Ok(ExitCode::from(2))
        }
        SolveStatus::LimitReached => {
            println!("status: limit reached");
            if let Some(sol) = &outcome.solution {
                println!("incumbent: {}", sol.objective_value);
            }
            if let Some(b) = &outcome.bound {
                println!("bound: {b}");
            }
            Ok(ExitCode::from(3))
        }
    }
}

fn print_costs(sol: &Solution) {
    println!("objective: {}", sol.objective_value);
    println!("expansion cost: {}", sol.cost_breakdown.expansion_cost_total);
    println!("penalties: {}", sol.cost_breakdown.penalty_total);
    let arcs: Vec<String> = sol.expanded_arcs.iter().map(|(f, t)| format!("{f}.{t}")).collect();
    println!("expanded: {}", if arcs.is_empty() { "-".to_string() } else { arcs.join(" ") });
}

fn cmd_verify(instance: &Path, solution: &Path) -> Result<ExitCode> {
    let inst = read_instance(instance)?;
    let text = fs::read_to_string(solution).with_context(|| format!("cannot read {}", solution.display()))?;
    let sol = Solution::from_json(&text).with_context(|| format!("{} is not a valid solution file", solution.display()))?;
    let violations = verify(&inst, &sol);
    for v in &violations {
        println!("{v}");
    }
    Ok(if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_export(instance: &Path, output: Option<PathBuf>) -> Result<ExitCode> {
    let inst = read_instance(instance)?;
    let sys = build(&inst).map_err(|e| match e {
        BuildError::Invalid(r) => anyhow::anyhow!("invalid instance:\n{r}"),
        e => e.into(),
    })?;
    let text = export_lp(&sys);
    match output {
        Some(path) => write(&path, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_x3c(q: usize, subsets: usize, seed: u64, planted: bool, fixed: bool, output: &Path) -> Result<ExitCode> {
    if q == 0 || subsets < q {
        bail!("need --q >= 1 and --subsets >= q");
    }
    let x3c = gen_random_x3c(q, subsets, seed, planted);
    let unit = if fixed { UnitLines::Fixed } else { UnitLines::Expandable };
    let (inst, threshold) = x3c_to_instance(&x3c, unit)?;
    let has_exact_cover = x3c_brute_force(&x3c).ok();
    write(output, &inst.to_json())?;
    let sidecar = sibling(output, ".x3c.json");
    let truth = X3cSidecar { x3c, threshold, has_exact_cover };
    write(&sidecar, &serde_json::to_string_pretty(&truth)?)?;
    println!("instance: {}", output.display());
    println!("ground truth: {}", sidecar.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(files: &[PathBuf], family: &str, reps: usize, limits: &LimitArgs, output: Option<PathBuf>) -> Result<ExitCode> {
    if reps == 0 {
        bail!("--repetitions must be at least 1");
    }
    let limits = limits.limits()?;
    let mut cases: Vec<(String, Instance)> = Vec::new();
    if files.is_empty() {
        match family {
            "deterministic" => {
                for n in [2, 4, 6, 8, 10] {
                    cases.push((format!("det-{n}"), deterministic_family(n)));
                }
            }
            "scenarios" => {
                for p in [[4, 4, 4, 4], [7, 3, 3, 3], [10, 2, 2, 2], [12, 2, 1, 1]] {
                    let label = format!("scen-{}", p.map(|x| x.to_string()).join("-"));
                    cases.push((label, scenario_family(&p)));
                }
            }
            other => bail!("unknown family `{other}`; expected deterministic or scenarios"),
        }
    } else {
        for f in files {
            let label = f.file_stem().and_then(|s| s.to_str()).unwrap_or("instance").to_string();
            cases.push((label, read_instance(f)?));
        }
    }
    let mut records = Vec::new();
    for (label, inst) in &cases {
        let r = bench_instance(label, inst, reps, &limits)?;
        if r.status == SolveStatus::LimitReached {
            eprintln!("skipped {label}: limit reached");
            continue;
        }
        records.push(r);
    }
    print!("{}", format_table(&records));
    if let Some(path) = output {
        write(&path, &format_tsv(&records))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { instance, mode, limits, o } => cmd_solve(&instance, mode, &limits, o),
        Command::Verify { instance, solution } => cmd_verify(&instance, &solution),
        Command::ExportLp { instance, o } => cmd_export(&instance, o),
        Command::GenX3c { q, subsets, seed, planted, fixed_lines, o } => {
            cmd_gen_x3c(q, subsets, seed, planted, fixed_lines, &o)
        }
        Command::Bench { instances, family, repetitions, limits, o } => {
            cmd_bench(&instances, &family, repetitions, &limits, o)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
