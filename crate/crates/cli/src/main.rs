use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use relaxosc_core::criteria::{
    holling4_kappa_star_scaled, holling4_q_scaled, predict_dynamics, scan_chi_roots_in, AnalysisOptions,
    AnalysisReport, Verdict,
};
use relaxosc_core::full_sim::{find_cycles, simulate, SimOptions, DEFAULT_SIM_TOL};
use relaxosc_core::io::{
    csv_float, parse_config, write_chi_scan_csv, write_configuration_csv, write_json, write_trajectory_csv, Header,
    PartialParams,
};
use relaxosc_core::model::{classify_isocline, HumpClass, IsoclineShape, ModelParams, DEFAULT_CLASSIFY_GRID};
use relaxosc_core::verify::{acceptance_suite, model_checks, CheckOutcome, Fault, VerifyOptions};
use relaxosc_core::{Error, Family, ModelSpec};

const TOOL: &str = "relaxosc";
const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relaxation oscillations of Gause-type predator-prey systems with small
/// predator death rate.
#[derive(Parser, Debug)]
#[command(name = "relaxosc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the isocline, locate χ roots and predict the cycles (JSON).
    Analyze(AnalyzeArgs),
    /// Tabulate χ and λ on a uniform x0 grid (CSV).
    ChiScan(ChiScanArgs),
    /// Integrate the full system from one initial point (CSV).
    Simulate(SimulateArgs),
    /// Locate the predicted limit cycles of the full system (JSON).
    Cycles(CyclesArgs),
    /// The Holling IV enrichment threshold κ* (JSON).
    ThresholdK4(ThresholdArgs),
    /// Predictions over a one-parameter grid (CSV).
    Sweep(SweepArgs),
    /// Run the verification checks and report pass/fail.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct ModelArgs {
    /// flat `key = value` model file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args, Debug)]
struct Output {
    /// output file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    output: Output,
    /// fast-orbit tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// χ scan grid size
    #[arg(long, default_value_t = 200)]
    grid_n: usize,
    /// directory for one Γ(x0) polyline CSV per root
    #[arg(long)]
    gamma_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ChiScanArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    output: Output,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    grid_n: usize,
    /// lower end of the x0 range; default 10⁻³K
    #[arg(long)]
    from: Option<f64>,
    /// upper end of the x0 range; default (1 - 10⁻³)K
    #[arg(long)]
    to: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    output: Output,
    #[arg(long)]
    epsilon: f64,
    /// initial prey density; default K/2
    #[arg(long)]
    x0: Option<f64>,
    /// initial predator density; default ȳ
    #[arg(long)]
    y0: Option<f64>,
    /// end time; default 200/ε
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SIM_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct CyclesArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    output: Output,
    #[arg(long)]
    epsilon: f64,
    /// simulation tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    grid_n: usize,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[command(flatten)]
    output: Output,
    /// bisection tolerance on κ
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// growth rate; κ* does not depend on it
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// maximal consumption rate; κ* does not depend on it
    #[arg(long, default_value_t = 1.0)]
    m: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SweepParam {
    R,
    K,
    C,
    M,
    A,
    B,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    output: Output,
    /// parameter to vary
    #[arg(long, value_enum)]
    param: SweepParam,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    /// number of grid points, endpoints included
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    grid_n: usize,
    /// also locate cycles of the full system at this ε
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FaultArg {
    FlipLambdaSign,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// with a model: checks for that model; without: the acceptance suite
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    output: Output,
    /// comma separated substrings of check names
    #[arg(long)]
    filter: Option<String>,
    /// ε for the simulation check of a single model
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
    /// corrupt an input on purpose to confirm the checks can fail
    #[arg(long, value_enum)]
    inject_fault: Option<FaultArg>,
}

struct Failure {
    code: u8,
    msg: String,
    show_usage: bool,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Failure {
        Failure { code: 1, msg: msg.into(), show_usage: false }
    }

    fn numerical(msg: impl Into<String>) -> Failure {
        Failure { code: 3, msg: msg.into(), show_usage: false }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Config { .. } | Error::InvalidParameter(_) | Error::Domain { .. } => 1,
            _ => 3,
        };
        Failure { code, msg: e.to_string(), show_usage: false }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure::usage(format!("i/o: {e}"))
    }
}

type Res<T> = std::result::Result<T, Failure>;

impl ModelArgs {
    fn given(&self) -> bool {
        self.config.is_some()
            || self.family.is_some()
            || [self.r, self.k, self.c, self.m, self.a, self.b].iter().any(Option::is_some)
    }

    fn flags(&self) -> Res<PartialParams> {
        let family = match &self.family {
            None => None,
            Some(f) => Some(Family::from_key(f).ok_or_else(|| {
                Failure::usage(format!(
                    "unknown family `{f}`; expected holling2, gen-holling4, holling4, ivlev or log"
                ))
            })?),
        };
        Ok(PartialParams { family, r: self.r, k: self.k, c: self.c, m: self.m, a: self.a, b: self.b })
    }

    fn resolve(&self) -> Res<ModelSpec> {
        let base = match &self.config {
            None => PartialParams::default(),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
                parse_config(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
            }
        };
        let params = base.overridden_by(self.flags()?).resolve().map_err(|e| Failure {
            show_usage: true,
            ..Failure::usage(format!("{e}; set it in the --config file or with the matching flag"))
        })?;
        Ok(ModelSpec::new(params)?)
    }
}

fn with_sink(out: &Option<PathBuf>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Res<()> {
    match out {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            f(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn header(command: &str, spec: &ModelSpec) -> Header {
    Header::new(TOOL, VERSION, command, Some(*spec.params()))
}

fn shape_notes(mut h: Header, shape: &IsoclineShape) -> Header {
    h = h.note(format!("isocline shape: {:?}", shape.hump_class));
    if shape.hump_class == HumpClass::Monotone {
        h = h.note("monotone isocline: no interior extrema on (0, K)");
    }
    for n in &shape.notes {
        h = h.note(n.clone());
    }
    h
}

fn require_supported(shape: &IsoclineShape) -> Res<()> {
    if shape.hump_class == HumpClass::Unsupported {
        return Err(Failure {
            code: 2,
            msg: format!("unsupported isocline shape: {} interior extrema", shape.extrema.len()),
            show_usage: false,
        });
    }
    Ok(())
}

fn analysis_options(tol: f64, grid_n: usize) -> Res<AnalysisOptions> {
    if grid_n < 100 {
        return Err(Failure::usage(format!("--grid-n must be at least 100, got {grid_n}")));
    }
    Ok(AnalysisOptions { scan_grid: grid_n, tol, ..Default::default() })
}

fn analyze_model(spec: &ModelSpec, opts: &AnalysisOptions) -> Res<AnalysisReport> {
    let shape = classify_isocline(spec, opts.classify_grid, 1e-12)?;
    require_supported(&shape)?;
    Ok(predict_dynamics(spec, opts)?)
}

fn check_epsilon(eps: f64) -> Res<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "--epsilon must be positive, got {eps}; use `analyze` for the singular (ε = 0) system"
        )))
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> Res<()> {
    let spec = args.model.resolve()?;
    let opts = analysis_options(args.tol, args.grid_n)?;
    let report = analyze_model(&spec, &opts)?;
    let h = header("analyze", &spec).setting("tol", args.tol).setting("grid_n", args.grid_n);
    if let Some(dir) = &args.gamma_dir {
        fs::create_dir_all(dir)?;
        for (i, config) in report.configurations.iter().enumerate() {
            let gh = h.clone().setting("x0", config.x0);
            let path = dir.join(format!("gamma_{i}.csv"));
            with_sink(&Some(path), |w| write_configuration_csv(w, &gh, config))?;
        }
    }
    with_sink(&args.output.out, |w| write_json(w, &h, &report))?;
    if report.verdict == Verdict::Inconclusive {
        eprintln!("warning: verdict inconclusive");
    }
    Ok(())
}

fn cmd_chi_scan(args: ChiScanArgs) -> Res<()> {
    let spec = args.model.resolve()?;
    let k = spec.k();
    let lo = args.from.unwrap_or(1e-3 * k);
    let hi = args.to.unwrap_or((1.0 - 1e-3) * k);
    if !(lo > 0.0 && hi < k && lo < hi) {
        return Err(Failure::usage(format!("x0 range [{lo}, {hi}] must be non-empty and inside (0, K = {k})")));
    }
    if args.grid_n < 2 {
        return Err(Failure::usage(format!("--grid-n must be at least 2, got {}", args.grid_n)));
    }
    let shape = classify_isocline(&spec, DEFAULT_CLASSIFY_GRID, 1e-12)?;
    require_supported(&shape)?;
    let scan = scan_chi_roots_in(&spec, lo, hi, args.grid_n, args.tol)?;
    let mut h = header("chi-scan", &spec)
        .setting("tol", args.tol)
        .setting("grid_n", args.grid_n)
        .setting("from", lo)
        .setting("to", hi);
    h = shape_notes(h, &shape);
    for r in &scan.roots {
        h = h.note(format!("root x0 = {}", csv_float(*r)));
    }
    for t in &scan.tangencies {
        h = h.note(format!("suspected tangency near x0 = {}", csv_float(*t)));
    }
    with_sink(&args.output.out, |w| write_chi_scan_csv(w, &h, &scan))
}

fn cmd_simulate(args: SimulateArgs) -> Res<()> {
    let spec = args.model.resolve()?;
    check_epsilon(args.epsilon)?;
    let x0 = args.x0.unwrap_or(0.5 * spec.k());
    let y0 = args.y0.unwrap_or(spec.ybar());
    let t_max = args.t_max.unwrap_or(200.0 / args.epsilon);
    let traj = simulate(&spec, args.epsilon, x0, y0, t_max, args.tol)?;
    let mut h = header("simulate", &spec)
        .setting("epsilon", args.epsilon)
        .setting("x0", x0)
        .setting("y0", y0)
        .setting("t_max", t_max)
        .setting("tol", args.tol)
        .setting("termination", format!("{:?}", traj.termination));
    for n in &traj.notes {
        h = h.note(n.clone());
    }
    with_sink(&args.output.out, |w| write_trajectory_csv(w, &h, &traj))
}

fn cmd_cycles(args: CyclesArgs) -> Res<()> {
    let spec = args.model.resolve()?;
    check_epsilon(args.epsilon)?;
    let report = analyze_model(&spec, &analysis_options(1e-11, args.grid_n)?)?;
    let search = find_cycles(&spec, args.epsilon, &report, &SimOptions::with_tol(args.tol))?;
    let h = header("cycles", &spec)
        .setting("epsilon", args.epsilon)
        .setting("tol", args.tol)
        .setting("grid_n", args.grid_n)
        .setting("verdict", report.verdict);
    with_sink(&args.output.out, |w| write_json(w, &h, &search))?;
    if !search.failures.is_empty() {
        return Err(Failure::numerical(format!(
            "{} predicted cycle(s) not found: {}",
            search.failures.len(),
            search.failures.iter().map(|f| f.reason.as_str()).collect::<Vec<_>>().join("; ")
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct Threshold {
    kappa_star: f64,
    tol: f64,
    q_at_4: f64,
}

fn cmd_threshold(args: ThresholdArgs) -> Res<()> {
    if !(args.tol > 0.0) {
        return Err(Failure::usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let kappa_star = holling4_kappa_star_scaled(args.tol, args.r, args.m)?;
    let q_at_4 = holling4_q_scaled(4.0, args.r, args.m)?;
    let h = Header::new(TOOL, VERSION, "threshold-k4", None)
        .setting("tol", args.tol)
        .setting("r", args.r)
        .setting("m", args.m);
    with_sink(&args.output.out, |w| write_json(w, &h, &Threshold { kappa_star, tol: args.tol, q_at_4 }))
}

fn set_param(p: &mut ModelParams, which: SweepParam, v: f64) {
    match which {
        SweepParam::R => p.r = v,
        SweepParam::K => p.k = v,
        SweepParam::C => p.c = v,
        SweepParam::M => p.m = v,
        SweepParam::A => p.a = v,
        SweepParam::B => p.b = v,
    }
}

fn join(xs: impl Iterator<Item = String>) -> String {
    xs.collect::<Vec<_>>().join(";")
}

fn sweep_row(i: usize, v: f64, spec: &ModelSpec, opts: &AnalysisOptions, eps: Option<f64>) -> String {
    let p = spec.params();
    let kappa = if matches!(p.family, Family::HollingIV | Family::GeneralizedHollingIV) {
        csv_float(p.a * p.k * p.k)
    } else {
        String::new()
    };
    let mut cells = vec![i.to_string(), csv_float(v), kappa];
    let report = match classify_isocline(spec, opts.classify_grid, 1e-12) {
        Ok(s) if s.hump_class == HumpClass::Unsupported => Err("unsupported shape".to_string()),
        Ok(_) => predict_dynamics(spec, opts).map_err(|e| e.to_string()),
        Err(e) => Err(e.to_string()),
    };
    match &report {
        Ok(r) => {
            cells.push(format!("{:?}", r.shape.hump_class));
            cells.push(r.verdict.to_string());
            cells.push(r.roots.len().to_string());
            cells.push(join(r.roots.iter().map(|x| csv_float(x.x0))));
            cells.push(join(r.roots.iter().map(|x| csv_float(x.lambda))));
        }
        Err(e) => {
            let e = e.replace([',', '\n'], " ");
            cells.extend([String::new(), format!("error: {e}"), String::new(), String::new(), String::new()]);
        }
    }
    if let Some(eps) = eps {
        let found = report.as_ref().ok().map(|r| find_cycles(spec, eps, r, &SimOptions::with_tol(1e-9)));
        match found {
            Some(Ok(s)) => {
                cells.push(s.cycles.len().to_string());
                cells.push(join(s.cycles.iter().map(|c| csv_float(c.x_section))));
                cells.push(join(s.cycles.iter().map(|c| c.stability.label().to_string())));
            }
            _ => cells.extend([String::new(), String::new(), String::new()]),
        }
    }
    cells.join(",")
}

fn threads() -> Res<Option<usize>> {
    match std::env::var("RELAXOSC_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::usage(format!("RELAXOSC_THREADS must be a positive integer, got `{s}`"))),
        },
    }
}

fn cmd_sweep(args: SweepArgs) -> Res<()> {
    let spec = args.model.resolve()?;
    if args.steps == 0 || !(args.from.is_finite() && args.to.is_finite()) {
        return Err(Failure::usage("empty sweep grid: --steps must be at least 1"));
    }
    if args.steps > 1 && args.from == args.to {
        return Err(Failure::usage("empty sweep range: --from equals --to"));
    }
    if let Some(eps) = args.epsilon {
        check_epsilon(eps)?;
    }
    let opts = analysis_options(args.tol, args.grid_n)?;
    let values: Vec<f64> = if args.steps == 1 {
        vec![args.from]
    } else {
        (0..args.steps)
            .map(|i| args.from + (args.to - args.from) * i as f64 / (args.steps - 1) as f64)
            .collect()
    };
    let specs: Vec<ModelSpec> = values
        .iter()
        .map(|&v| {
            let mut p = *spec.params();
            set_param(&mut p, args.param, v);
            ModelSpec::new(p).map_err(|e| Failure::usage(format!("sweep point {v}: {e}")))
        })
        .collect::<Res<_>>()?;
    let rows: Vec<String> = specs
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(i, (s, &v))| sweep_row(i, v, s, &opts, args.epsilon))
        .collect();
    let name = format!("{:?}", args.param).to_lowercase();
    let mut h = header("sweep", &spec)
        .setting("param", &name)
        .setting("from", args.from)
        .setting("to", args.to)
        .setting("steps", args.steps)
        .setting("tol", args.tol)
        .setting("grid_n", args.grid_n);
    if let Some(eps) = args.epsilon {
        h = h.setting("epsilon", eps);
    }
    let mut columns = format!("index,{name},kappa,hump_class,verdict,n_roots,roots,lambdas");
    if args.epsilon.is_some() {
        columns.push_str(",n_cycles,cycle_x_sections,cycle_stabilities");
    }
    with_sink(&args.output.out, |w| {
        h.write_csv_comment(w)?;
        writeln!(w, "{columns}")?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })
}

fn write_report(w: &mut dyn Write, h: &Header, outcomes: &[CheckOutcome]) -> io::Result<()> {
    h.write_csv_comment(w)?;
    for c in outcomes {
        writeln!(w, "{}", c.summary_line())?;
        for a in &c.assertions {
            writeln!(w, "    [{}] {}: {}", if a.passed { "ok" } else { "FAIL" }, a.label, a.detail)?;
        }
    }
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    writeln!(w, "{} checks, {} passed, {failed} failed", outcomes.len(), outcomes.len() - failed)
}

fn cmd_verify(args: VerifyArgs) -> Res<()> {
    let opts = VerifyOptions {
        filter: args.filter.clone(),
        fault: args.inject_fault.map(|f| match f {
            FaultArg::FlipLambdaSign => Fault::FlipLambdaSign,
        }),
    };
    let (mut h, outcomes) = if args.model.given() {
        let spec = args.model.resolve()?;
        check_epsilon(args.epsilon)?;
        let shape = classify_isocline(&spec, DEFAULT_CLASSIFY_GRID, 1e-12)?;
        require_supported(&shape)?;
        let h = header("verify", &spec).setting("epsilon", args.epsilon);
        (h, model_checks(&spec, Some(args.epsilon), &opts))
    } else {
        (Header::new(TOOL, VERSION, "verify", None).setting("suite", "acceptance"), acceptance_suite(&opts))
    };
    if let Some(f) = &args.filter {
        h = h.setting("filter", f);
    }
    if let Some(f) = opts.fault {
        h = h.setting("fault", format!("{f:?}"));
    }
    if outcomes.is_empty() {
        return Err(Failure::usage("the filter selects no checks"));
    }
    with_sink(&args.output.out, |w| write_report(w, &h, &outcomes))?;
    let failed: Vec<&str> = outcomes.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical(format!("failed checks: {}", failed.join(", "))))
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::ChiScan(_) => "chi-scan",
            Command::Simulate(_) => "simulate",
            Command::Cycles(_) => "cycles",
            Command::ThresholdK4(_) => "threshold-k4",
            Command::Sweep(_) => "sweep",
            Command::Verify(_) => "verify",
        }
    }
}

fn run(cli: Cli) -> Res<()> {
    if let Some(n) = threads()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::ChiScan(a) => cmd_chi_scan(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Cycles(a) => cmd_cycles(a),
        Command::ThresholdK4(a) => cmd_threshold(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            if f.show_usage {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use relaxosc_core::model::{Extremum, ExtremumKind};

    #[test]
    fn three_extrema_exit_two() {
        let ext = |x, kind| Extremum { x, kind };
        let shape = IsoclineShape {
            hump_class: HumpClass::Unsupported,
            x_hat: None,
            x_check: None,
            x_bar: None,
            x_tilde: None,
            f_prime_at_zero: 1.0,
            extrema: vec![ext(0.5, ExtremumKind::Max), ext(1.0, ExtremumKind::Min), ext(1.5, ExtremumKind::Max)],
            notes: vec![],
        };
        let f = require_supported(&shape).unwrap_err();
        assert_eq!(f.code, 2);
        assert!(f.msg.contains("3 interior extrema"));
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(Failure::from(Error::InvalidParameter("x".into())).code, 1);
        assert_eq!(Failure::from(io::Error::other("x")).code, 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
