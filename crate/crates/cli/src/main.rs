use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use ballistic::bounds::{self, BoundCurve, BoundError, BoundLevel};
use ballistic::enumeration::{self, CountTables, TableError};
use ballistic::kinematics::{format_xi, run_ba, Configuration};
use ballistic::montecarlo::{mc_check_tables, mc_seed_survival};
use ballistic::renewal::{
    estimate_offspring_mean, extinction_probability, sample_renewal, simulate_generations,
    LazyConfiguration, DEFAULT_HORIZON, DEFAULT_POPULATION_CAP,
};
use ballistic::scalar::{parse_rational, rational_to_decimal};
use ballistic::{Rational, Real};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

/// Directory searched for table files when `--tables` is not given, and
/// where `enumerate` writes by default.
const TABLE_DIR_VAR: &str = "BALLISTIC_TABLE_DIR";

#[derive(Parser)]
#[command(name = "ballistic", version, about = "Three-speed ballistic annihilation on the integers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve a finite configuration and print its collisions.
    Simulate {
        /// Comma-separated speeds, e.g. 0,1,0,-1.
        #[arg(long, allow_hyphen_values = true)]
        speeds: String,
    },
    /// Build the count tables and write them to a JSON file.
    Enumerate {
        #[arg(long)]
        depth: usize,
        /// Worker threads (0 = one per logical core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Output file (default: tables-depth-N.json in the table directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Classify every configuration instead of pruning (small depths only).
        #[arg(long)]
        naive: bool,
    },
    /// Evaluate a lower bound on the mean offspring count.
    Bound {
        #[arg(long)]
        level: BoundLevel,
        #[arg(long, required_unless_present = "sweep", conflicts_with = "sweep")]
        p: Option<String>,
        /// Bound curve over p0:p1:steps, printed as CSV.
        #[arg(long)]
        sweep: Option<String>,
        #[command(flatten)]
        tables: TableArg,
        /// Evaluate exactly with p read as a rational.
        #[arg(long)]
        exact: bool,
    },
    /// Smallest p at which the bound exceeds 1.
    Threshold {
        #[arg(long)]
        level: BoundLevel,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[command(flatten)]
        tables: TableArg,
    },
    /// Probability that the first +1 particle is destroyed within the table depth.
    GammaTail {
        #[arg(long)]
        p: String,
        #[command(flatten)]
        tables: TableArg,
        #[arg(long)]
        exact: bool,
    },
    /// Critical density predicted by the one-time-unit density balance.
    Heuristic,
    /// Randomized checks and estimates.
    Mc {
        #[command(subcommand)]
        job: McJob,
        /// Worker threads (0 = one per logical core).
        #[arg(long, default_value_t = 0, global = true)]
        threads: usize,
    },
}

#[derive(Args)]
struct TableArg {
    /// Table file (default: deepest tables-depth-N.json in the table directory).
    #[arg(long)]
    tables: Option<PathBuf>,
}

#[derive(Subcommand)]
enum McJob {
    /// Compare sampled windows against the exact tables.
    Check {
        #[command(flatten)]
        tables: TableArg,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Fraction of runs in which the seed survives on a finite window.
    Survival {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        window: usize,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Estimate the mean offspring count from renewal samples.
    Offspring {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Run the branching process several times.
    Generations {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(long, default_value_t = 20)]
        max_generations: usize,
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long, default_value_t = DEFAULT_POPULATION_CAP)]
        cap: u64,
        #[arg(long)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl From<TableError> for Failure {
    fn from(e: TableError) -> Self {
        match e {
            TableError::Invalid(_) => Failure::Internal(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<BoundError> for Failure {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::UnknownLevel(_)
            | BoundError::OutOfRange(_)
            | BoundError::BadTolerance(_)
            | BoundError::BadRange(_)
            | BoundError::NeedsTables(_) => Failure::Usage(e.to_string()),
            BoundError::BNotBelowOne(_) => Failure::Internal(e.to_string()),
            BoundError::NoCrossing | BoundError::MultipleCrossings(_) => Failure::Data(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn table_dir() -> PathBuf {
    std::env::var_os(TABLE_DIR_VAR).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

fn default_table_file(dir: &Path) -> Option<PathBuf> {
    let entries = std::fs::read_dir(dir).ok()?;
    entries
        .filter_map(|e| {
            let path = e.ok()?.path();
            let name = path.file_name()?.to_str()?;
            let depth: usize = name.strip_prefix("tables-depth-")?.strip_suffix(".json")?.parse().ok()?;
            Some((depth, path))
        })
        .max()
        .map(|(_, p)| p)
}

fn load(arg: &TableArg) -> Result<CountTables, Failure> {
    let path = match &arg.tables {
        Some(p) => p.clone(),
        None => {
            let dir = table_dir();
            default_table_file(&dir).ok_or_else(|| {
                Failure::Data(format!(
                    "no --tables given and no tables-depth-N.json in {}",
                    dir.display()
                ))
            })?
        }
    };
    let tables = enumeration::load_tables(&path)
        .map_err(|e| Failure::from(e).prefixed(&path.display().to_string()))?;
    eprintln!("loaded depth-{} tables from {}", tables.depth(), path.display());
    Ok(tables)
}

fn load_if(needed: bool, arg: &TableArg) -> Result<Option<CountTables>, Failure> {
    if needed || arg.tables.is_some() {
        load(arg).map(Some)
    } else {
        Ok(None)
    }
}

impl Failure {
    fn prefixed(self, context: &str) -> Failure {
        match self {
            Failure::Usage(m) => Failure::Usage(format!("{context}: {m}")),
            Failure::Data(m) => Failure::Data(format!("{context}: {m}")),
            Failure::Internal(m) => Failure::Internal(format!("{context}: {m}")),
        }
    }
}

fn parse_p(text: &str) -> Result<Rational, Failure> {
    parse_rational(text).ok_or_else(|| Failure::Usage(format!("cannot read probability {text:?}")))
}

fn parse_float(text: &str) -> Result<Real, Failure> {
    text.trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("cannot read probability {text:?}")))
}

fn print(value: serde_json::Value) {
    println!("{value}");
}

fn simulate(speeds: &str) -> Outcome {
    let config = Configuration::parse(speeds).map_err(|e| Failure::Usage(e.to_string()))?;
    let out = run_ba(&config);
    for e in out.events() {
        println!("{e}");
    }
    println!("xi {}", format_xi(out.xi()));
    Ok(())
}

fn enumerate(depth: usize, threads: usize, out: Option<PathBuf>, naive: bool) -> Outcome {
    let start = Instant::now();
    let tables = if naive {
        enumeration::enumerate_naive(depth)
    } else {
        enumeration::enumerate_tables(depth, threads)
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    for level in tables.levels() {
        eprintln!(
            "n={:>2}  |A_n|={}  |A'_n|={}  gamma-minus={}",
            level.n,
            level.an_total(),
            level.aprime_total(),
            level.gamma_minus.values().sum::<num_bigint::BigUint>()
        );
    }
    if !naive {
        let listed: Vec<String> = tables.meta.nodes_by_length.iter().map(|(l, c)| format!("{l}:{c}")).collect();
        eprintln!("search nodes by prefix length: {}", listed.join(" "));
    }
    eprintln!(
        "{} search nodes, {:.2}s",
        tables.meta.nodes,
        start.elapsed().as_secs_f64()
    );
    let path = out.unwrap_or_else(|| table_dir().join(format!("tables-depth-{depth}.json")));
    enumeration::save_tables(&tables, &path).map_err(|e| Failure::from(e).prefixed(&path.display().to_string()))?;
    print(json!({
        "path": path.display().to_string(),
        "depth": depth,
        "checksum": tables.checksum(),
        "nodes": tables.meta.nodes,
    }));
    Ok(())
}

fn parse_sweep(text: &str) -> Result<(String, String, usize), Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [p0, p1, steps] = parts.as_slice() else {
        return Err(Failure::Usage(format!("--sweep expects p0:p1:steps, got {text:?}")));
    };
    let steps = steps
        .parse()
        .map_err(|_| Failure::Usage(format!("bad step count {steps:?}")))?;
    Ok((p0.to_string(), p1.to_string(), steps))
}

fn bound(level: BoundLevel, p: Option<String>, sweep: Option<String>, arg: &TableArg, exact: bool) -> Outcome {
    let tables = load_if(level.needs_tables(), arg)?;
    let t = tables.as_ref();
    let depth = if level.needs_tables() { t.map_or(0, |t| t.depth()) } else { 0 };
    if let Some(sweep) = sweep {
        let (p0, p1, steps) = parse_sweep(&sweep)?;
        let csv = if exact {
            BoundCurve::<Rational>::sweep(t, level, &parse_p(&p0)?, &parse_p(&p1)?, steps)?.to_csv()
        } else {
            BoundCurve::<Real>::sweep(t, level, &parse_float(&p0)?, &parse_float(&p1)?, steps)?.to_csv()
        };
        print!("{csv}");
        return Ok(());
    }
    let p = p.expect("clap requires --p without --sweep");
    let mut record = json!({ "level": level.index(), "depth": depth, "p": p });
    if exact {
        let pr = parse_p(&p)?;
        let v = bounds::bound(t, &pr, level)?;
        record["value"] = json!(rational_to_decimal(&v, 20));
        if let Some(t) = t {
            record["m"] = json!(rational_to_decimal(&bounds::eval_m(t, &pr), 20));
            record["b"] = json!(rational_to_decimal(&bounds::eval_b(t, &pr)?, 20));
        }
    } else {
        let pf = parse_float(&p)?;
        let v = bounds::bound(t, &pf, level)?;
        record["value"] = json!(v);
        if let Some(t) = t {
            record["m"] = json!(bounds::eval_m(t, &pf));
            record["b"] = json!(bounds::eval_b(t, &pf)?);
        }
    }
    eprintln!("level {level} bound at p = {p}: {}", record["value"]);
    print(record);
    Ok(())
}

fn threshold(level: BoundLevel, tol: f64, arg: &TableArg) -> Outcome {
    let tables = load_if(level.needs_tables(), arg)?;
    let t = if level.needs_tables() { tables.as_ref() } else { None };
    let start = Instant::now();
    let p_star = bounds::find_threshold(t, level, tol)?;
    eprintln!(
        "level {level}: bound exceeds 1 for p > {p_star:.6} ({:.3}s)",
        start.elapsed().as_secs_f64()
    );
    print(json!({
        "level": level.index(),
        "depth": t.map_or(0, |t| t.depth()),
        "p_star": p_star,
        "tol": tol,
    }));
    Ok(())
}

fn gamma_tail(p: &str, arg: &TableArg, exact: bool) -> Outcome {
    let tables = load(arg)?;
    let value = if exact {
        json!(rational_to_decimal(&enumeration::gamma_tail(&tables, &parse_p(p)?), 20))
    } else {
        let pf = parse_float(p)?;
        if !(0.0..=1.0).contains(&pf) {
            return Err(Failure::Usage(format!("p = {pf} is outside [0, 1]")));
        }
        json!(enumeration::gamma_tail(&tables, &pf))
    };
    eprintln!("P(gamma_1 <= {}) at p = {p}: {value}", tables.depth());
    print(json!({ "p": p, "depth": tables.depth(), "value": value }));
    Ok(())
}

fn heuristic() -> Outcome {
    let fraction = bounds::heuristic_pc();
    let literal = bounds::heuristic_pc_literal();
    eprintln!("inert fraction w/(w+z) = 1/4 at p = {fraction:.6}; literal w = z/4 at p = {literal:.6}");
    print(json!({ "p_c": fraction, "p_c_literal": literal }));
    Ok(())
}

fn check_probability(p: f64) -> Outcome {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Failure::Usage(format!("p = {p} is outside [0, 1]")))
    }
}

fn mc(job: McJob) -> Outcome {
    match job {
        McJob::Check { tables, p, n, reps, seed } => {
            check_probability(p)?;
            let tables = load(&tables)?;
            if !(2..=tables.depth()).contains(&n) {
                return Err(Failure::Usage(format!("n must lie in 2..={}", tables.depth())));
            }
            let c = mc_check_tables(&tables, p, n, reps, seed);
            eprintln!("n={n} p={p}: largest discrepancy {:.2} sigma", c.max_sigma());
            print(serde_json::to_value(&c).expect("serializable"));
        }
        McJob::Survival { p, window, reps, seed } => {
            check_probability(p)?;
            if window == 0 {
                return Err(Failure::Usage("window must be positive".into()));
            }
            let s = mc_seed_survival(p, window, reps, seed);
            eprintln!("seed survives window {window} in {:.4} of runs", s.fraction);
            print(serde_json::to_value(&s).expect("serializable"));
        }
        McJob::Offspring { p, horizon, reps, seed } => {
            check_probability(p)?;
            if reps == 0 || horizon < 2 {
                return Err(Failure::Usage("need reps >= 1 and horizon >= 2".into()));
            }
            let e = estimate_offspring_mean(p, horizon, reps, seed);
            eprintln!(
                "E Z >= {:.4} +/- {:.4} ({:.3}% censored)",
                e.mean_lower,
                e.ci_halfwidth,
                100.0 * e.censor_rate
            );
            print(serde_json::to_value(&e).expect("serializable"));
        }
        McJob::Generations { p, horizon, max_generations, runs, cap, seed } => {
            check_probability(p)?;
            if max_generations == 0 || horizon < 2 {
                return Err(Failure::Usage("need max-generations >= 1 and horizon >= 2".into()));
            }
            let mut extinct = 0;
            for run in 0..runs {
                let t = simulate_generations(p, horizon, max_generations, seed.wrapping_add(run), cap);
                extinct += t.extinct as u64;
                print(json!({ "run": run, "trace": t }));
            }
            // Fixed-point extinction probability of the empirical offspring law.
            let sample: Vec<u32> = (0..runs.max(1) * 100)
                .map(|r| sample_renewal(&mut LazyConfiguration::new(seed, u64::MAX - r, p), horizon).z)
                .collect();
            eprintln!(
                "{extinct}/{runs} runs died out; offspring-law extinction probability {:.4}",
                extinction_probability(&sample)
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Simulate { speeds } => simulate(&speeds),
        Command::Enumerate { depth, threads, out, naive } => enumerate(depth, threads, out, naive),
        Command::Bound { level, p, sweep, tables, exact } => bound(level, p, sweep, &tables, exact),
        Command::Threshold { level, tol, tables } => threshold(level, tol, &tables),
        Command::GammaTail { p, tables, exact } => gamma_tail(&p, &tables, exact),
        Command::Heuristic => heuristic(),
        Command::Mc { job, threads } => {
            if threads > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .map_err(|e| Failure::Internal(e.to_string()))?;
            }
            mc(job)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}
