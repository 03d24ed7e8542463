use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use gridgraph_core::bipr::partition_levels;
use gridgraph_core::cases;
use gridgraph_core::SolveError;
use gridgraph_core::contraction::{contract_zero_impedance, DEFAULT_Z_THRESHOLD};
use gridgraph_core::engine::ExecMode;
use gridgraph_core::network::{build_decoupled, build_ybus, parse_case, write_case, Coefficients, NetworkCase};
use gridgraph_core::pipeline::{
    compare_methods, nr_report, solve_method, CompareConfig, HybridConfig, Method, PipelineError, ProfileOverrides,
    SolveReport, DEFAULT_NR_MAX_ITERS, DEFAULT_NR_TOL,
};

#[derive(Parser)]
#[command(name = "gridgraph", version, about = "Graph-parallel power flow solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case with one method.
    Solve(SolveArgs),
    /// Run several methods on one case and tabulate them.
    Compare(CompareArgs),
    /// Repeat a solve and report per-stage timings and state checksums.
    Bench(BenchArgs),
    /// Write case, graph, admittance or contraction data as CSV.
    Dump(DumpArgs),
}

#[derive(Args)]
struct Common {
    /// Case file in MATPOWER format, or one of ieee14, ieee30, ieee118.
    #[arg(long, value_name = "PATH")]
    case: String,
    #[arg(long, value_parser = positive_real)]
    damping: Option<f64>,
    #[arg(long, value_parser = positive_real)]
    tol_vr: Option<f64>,
    #[arg(long, value_parser = positive_real)]
    tol_va: Option<f64>,
    #[arg(long, value_parser = positive_real)]
    tol_p: Option<f64>,
    #[arg(long, value_parser = positive_real)]
    tol_q: Option<f64>,
    #[arg(long, value_parser = non_negative_real)]
    z_threshold: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_iters: Option<u64>,
    /// Sequential execution and timing-free output files.
    #[arg(long)]
    deterministic: bool,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "hybrid", value_parser = parse_method)]
    method: Method,
    /// Iteration trace CSV.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Report file; JSON when the name ends in .json, key/value text otherwise.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Methods to run, comma separated. Defaults to all.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    method: Vec<Method>,
    /// Comparison table as CSV.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "hybrid", value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    repeat: u64,
    /// Bench summary as text.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpWhat {
    /// Canonical MATPOWER text of the parsed case.
    Case,
    /// Vertex and edge tables of the branch graph.
    Graph,
    /// Ybus triplets.
    Ybus,
    /// Dense B′ over all buses.
    Bprime,
    /// Dense B″ over all buses.
    Bdoubleprime,
    /// original_id,supernode_id.
    Contraction,
    /// Bi-level partition per bus.
    Partition,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long, value_name = "PATH")]
    case: String,
    #[arg(long, value_enum, default_value = "ybus")]
    what: DumpWhat,
    #[arg(long, value_parser = non_negative_real, default_value_t = DEFAULT_Z_THRESHOLD)]
    z_threshold: f64,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

fn positive_real(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("'{s}' is not a positive real number")),
    }
}

fn non_negative_real(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("'{s}' is not a non-negative real number")),
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

/// Exit status classes.
enum Failure {
    /// Non-convergence or a numerical failure.
    Numerical(String),
    /// Unreadable, malformed or inconsistent input.
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Numerical(_) => 1,
            Failure::Input(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Numerical(m) | Failure::Input(m) => m,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let input = matches!(e.source, SolveError::InvalidConfig(_))
            || matches!(e.stage, "validation" | "config" | "contraction" | "assembly" | "initial state");
        if input {
            Failure::Input(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn load_case(spec: &str) -> Result<NetworkCase, Failure> {
    let path = Path::new(spec);
    let text = if path.exists() {
        fs::read_to_string(path).map_err(|e| io_failure(path, e))?
    } else if let Some(text) = cases::source(spec) {
        text.to_string()
    } else {
        return Err(Failure::Input(format!(
            "{spec}: no such file, and not a built-in case ({})",
            cases::NAMES.join(", ")
        )));
    };
    parse_case(&text).map_err(|e| Failure::Input(format!("{spec}: {e}")))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

impl Common {
    fn exec(&self) -> ExecMode {
        if self.deterministic {
            ExecMode::Deterministic
        } else {
            ExecMode::Parallel
        }
    }

    fn overrides(&self) -> ProfileOverrides {
        ProfileOverrides {
            damping: self.damping,
            tol_vr: self.tol_vr,
            tol_va: self.tol_va,
            tol_p: self.tol_p,
            tol_q: self.tol_q,
            z_threshold: self.z_threshold,
            max_iters: self.max_iters.map(|n| n as usize),
        }
    }

    fn profile(&self, method: Method) -> HybridConfig {
        let mut config = HybridConfig::for_method(method).with_exec(self.exec());
        self.overrides().apply(&mut config);
        config
    }

    fn setup_threads(&self) -> Result<(), Failure> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build_global()
                .map_err(|e| Failure::Input(format!("--threads: {e}")))?;
        }
        Ok(())
    }
}

fn run_one(common: &Common, case: &NetworkCase, method: Method) -> Result<SolveReport, Failure> {
    let mut report = if method == Method::Nr {
        let max = common.max_iters.map_or(DEFAULT_NR_MAX_ITERS, |n| n as usize);
        nr_report(case, common.tol_p.unwrap_or(DEFAULT_NR_TOL), max)?
    } else {
        solve_method(case, method, &common.profile(method))?
    };
    if common.deterministic {
        report.strip_timings();
    }
    Ok(report)
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    args.common.setup_threads()?;
    let case = load_case(&args.common.case)?;
    let report = run_one(&args.common, &case, args.method)?;
    println!("{}", report.summary());
    for w in &report.contraction.warnings {
        println!("warning: {w}");
    }
    if let Some(path) = &args.trace {
        let mut buf = Vec::new();
        report
            .write_trace_csv(&mut buf, !args.common.deterministic)
            .map_err(|e| io_failure(path, e))?;
        write_file(path, &buf)?;
    }
    if let Some(path) = &args.report {
        let body = if path.extension().is_some_and(|e| e == "json") {
            report.to_json()
        } else {
            report.to_text()
        };
        write_file(path, body.as_bytes())?;
    }
    if report.converged {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "{}: did not converge ({}), mbpim {:.3e}",
            report.method,
            report.termination.as_str(),
            report.mbpim
        )))
    }
}

fn compare(args: &CompareArgs) -> Result<(), Failure> {
    args.common.setup_threads()?;
    let case = load_case(&args.common.case)?;
    let methods = if args.method.is_empty() {
        Method::ALL.to_vec()
    } else {
        args.method.clone()
    };
    let config = CompareConfig {
        exec: args.common.exec(),
        overrides: args.common.overrides(),
        ..CompareConfig::default()
    };
    let table = compare_methods(&case, &methods, &config);
    let timings = !args.common.deterministic;
    print!("{}", table.to_text(timings));
    if let Some(path) = &args.report {
        write_file(path, table.to_csv(timings).as_bytes())?;
    }
    Ok(())
}

fn checksum(report: &SolveReport) -> String {
    let mut hasher = Sha256::new();
    for (num, v) in report.bus_numbers.iter().zip(&report.state.v) {
        hasher.update(num.to_le_bytes());
        hasher.update(v.re.to_bits().to_le_bytes());
        hasher.update(v.im.to_bits().to_le_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    args.common.setup_threads()?;
    let case = load_case(&args.common.case)?;
    let mut names: Vec<String> = Vec::new();
    let mut samples: Vec<Vec<f64>> = Vec::new();
    let mut totals = Vec::new();
    let mut out = String::new();
    let mut all_converged = true;
    for run in 1..=args.repeat {
        let report = if args.method == Method::Nr {
            nr_report(&case, DEFAULT_NR_TOL, DEFAULT_NR_MAX_ITERS)?
        } else {
            solve_method(&case, args.method, &args.common.profile(args.method))?
        };
        all_converged &= report.converged;
        for st in &report.stages {
            let k = match names.iter().position(|n| *n == st.name) {
                Some(k) => k,
                None => {
                    names.push(st.name.clone());
                    samples.push(Vec::new());
                    names.len() - 1
                }
            };
            samples[k].push(st.millis);
        }
        totals.push(report.total_millis);
        out.push_str(&format!(
            "run {run}: converged={} mbpim={:.6e} checksum={}\n",
            report.converged,
            report.mbpim,
            checksum(&report)
        ));
    }
    names.push("total".into());
    samples.push(totals);
    out.push_str(&format!("{:<12} {:>12} {:>12}\n", "stage", "median_ms", "min_ms"));
    for (name, mut s) in names.into_iter().zip(samples) {
        s.sort_by(f64::total_cmp);
        out.push_str(&format!("{:<12} {:>12.3} {:>12.3}\n", name, median(&s), s[0]));
    }
    print!("{out}");
    if let Some(path) = &args.report {
        write_file(path, out.as_bytes())?;
    }
    if all_converged {
        Ok(())
    } else {
        Err(Failure::Numerical("at least one run did not converge".into()))
    }
}

fn dump(args: &DumpArgs) -> Result<(), Failure> {
    let case = load_case(&args.case)?;
    let mut buf: Vec<u8> = Vec::new();
    let input = |e: gridgraph_core::network::NetworkError| Failure::Input(format!("{}: {e}", args.case));
    let io_err = |e: io::Error| Failure::Input(e.to_string());
    match args.what {
        DumpWhat::Case => buf.extend_from_slice(write_case(&case).as_bytes()),
        DumpWhat::Graph => build_ybus(&case).map_err(input)?.graph().write_csv(&mut buf).map_err(io_err)?,
        DumpWhat::Ybus => build_ybus(&case)
            .map_err(input)?
            .write_triplets_csv(&case, &mut buf)
            .map_err(io_err)?,
        DumpWhat::Bprime | DumpWhat::Bdoubleprime => {
            let which = if matches!(args.what, DumpWhat::Bprime) {
                Coefficients::BPrime
            } else {
                Coefficients::BDoublePrime
            };
            let dg = build_decoupled(&case).map_err(input)?;
            let mask = dg.index_set(which);
            writeln!(buf, "row,col,value").map_err(io_err)?;
            for (i, row) in dg.to_dense(which).iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if v != 0.0 && mask[i] && mask[j] {
                        writeln!(buf, "{},{},{v:e}", case.buses[i].number, case.buses[j].number).map_err(io_err)?;
                    }
                }
            }
        }
        DumpWhat::Contraction => {
            let (_, map) = contract_zero_impedance(&case, args.z_threshold).map_err(|e| Failure::Input(e.to_string()))?;
            map.write_csv(&mut buf).map_err(io_err)?;
        }
        DumpWhat::Partition => {
            let ybus = build_ybus(&case).map_err(input)?;
            let p = partition_levels(&ybus);
            writeln!(buf, "bus,level").map_err(io_err)?;
            for (b, l) in case.buses.iter().zip(&p.level_of) {
                let level = match l {
                    Some(l) => format!("{l:?}"),
                    None => "slack".into(),
                };
                writeln!(buf, "{},{level}", b.number).map_err(io_err)?;
            }
            writeln!(
                buf,
                "# intra_level_edges={} fraction={:.6}",
                p.intra_level_edge_count, p.intra_level_edge_fraction
            )
            .map_err(io_err)?;
        }
    }
    match &args.report {
        Some(path) => write_file(path, &buf),
        None => io::stdout().write_all(&buf).map_err(io_err),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Compare(a) => compare(a),
        Command::Bench(a) => bench(a),
        Command::Dump(a) => dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
