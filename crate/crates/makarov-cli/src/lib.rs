//! Command-line driver: parses distribution specs, runs bound sweeps,
//! samplers, oracle solves, and identity-verification suites, and emits
//! CSV/JSON that downstream tools can diff byte for byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use makarov::bounds::{self, BoundReport};
use makarov::copula::{self, CopulaKind, ExtremalCopula};
use makarov::dist::{CdfCurve, DistributionSpec};
use makarov::ite::{self, ArmPair};
use makarov::oracle::{self, CellRelation, CouplingLp, Sense};
use makarov::verify;

/// Exit code 1: input validation failed. Exit code 2: an internal
/// consistency check (analytic vs numeric achievability, or a verification
/// suite) failed.
const EXIT_VALIDATION: u8 = 1;
const EXIT_CONSISTENCY: u8 = 2;

#[derive(Parser)]
#[command(
    name = "makarov",
    about = "Bounds on the distribution of sums, differences, and treatment effects \
             of random variables with fixed marginals",
    long_about = "Computes, for marginal CDFs F and G given as JSON specs, the pointwise \
                  best-possible bounds on P(X+Y<=z) and P(X+Y<z) (or the X-Y analogues), \
                  decides whether each bound is attained, samples the extremal couplings, \
                  and cross-checks everything against a linear-programming oracle.\n\n\
                  The `ite` subcommand treats --f as the treated-arm outcome CDF and --g \
                  as the control-arm outcome CDF; mapping observed arms to potential-outcome \
                  marginals (randomization/ignorability) is an input assumption, not checked \
                  in code."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound sweep for the sum X + Y over a z grid.
    Sum(SweepArgs),
    /// Bound sweep for the difference X - Y over a delta grid.
    Diff(SweepArgs),
    /// Sharp and historical treatment-effect bounds over a delta grid.
    Ite(SweepArgs),
    /// Draw joint samples from an extremal coupling at a point.
    Sample(SampleArgs),
    /// Solve one coupling LP and emit the optimal coupling.
    Oracle(OracleArgs),
    /// Run the identity-verification suites and emit a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// JSON spec of the first marginal (treated arm for `ite`).
    #[arg(long)]
    f: PathBuf,
    /// JSON spec of the second marginal (control arm for `ite`).
    #[arg(long)]
    g: PathBuf,
    /// Explicit evaluation points, comma separated. Merged with the
    /// breakpoint grid derived from the marginals.
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    /// Evaluation range a:b:step (inclusive). Merged like --points.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Print the per-candidate scan tables to stderr.
    #[arg(long)]
    debug_scan: bool,
    /// Override the numeric achievability tolerance (testing knob; a
    /// negative value forces an internal consistency failure).
    #[arg(long, hide = true, allow_hyphen_values = true)]
    consistency_eps: Option<f64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    /// Evaluation point whose bound the coupling targets.
    #[arg(long, allow_hyphen_values = true)]
    z: f64,
    /// Which extremal family: `lower` couples for the lower bound at z,
    /// `upper` for the upper bound.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Operation the threshold refers to.
    #[arg(long, value_enum, default_value_t = OpArg::Sum)]
    op: OpArg,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// JSON spec of the first marginal; must be discrete.
    #[arg(long)]
    f: PathBuf,
    /// JSON spec of the second marginal; must be discrete.
    #[arg(long)]
    g: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    z: f64,
    #[arg(long, value_enum, default_value_t = RelArg::Leq)]
    rel: RelArg,
    #[arg(long, value_enum, default_value_t = SenseArg::Min)]
    sense: SenseArg,
    #[arg(long, value_enum, default_value_t = OpArg::Sum)]
    op: OpArg,
    /// JSON output (optimum value and metadata); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV output of the optimal coupling matrix.
    #[arg(long)]
    coupling_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Optional explicit pair to verify; random instances otherwise.
    #[arg(long)]
    f: Option<PathBuf>,
    #[arg(long)]
    g: Option<PathBuf>,
    /// Points for the explicit pair; breakpoint grid when omitted.
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of random discrete instances.
    #[arg(long, default_value_t = 50)]
    instances: usize,
    /// Largest atom count per random marginal.
    #[arg(long, default_value_t = 4)]
    max_atoms: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Lower,
    Upper,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OpArg {
    Sum,
    Diff,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RelArg {
    Leq,
    Lt,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SenseArg {
    Min,
    Max,
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(makarov::Error::ConsistencyFailure { .. }) = cause.downcast_ref() {
            return EXIT_CONSISTENCY;
        }
    }
    EXIT_VALIDATION
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Sum(args) => run_sweep(args, Op::Sum),
        Command::Diff(args) => run_sweep(args, Op::Diff),
        Command::Ite(args) => run_ite(args),
        Command::Sample(args) => run_sample(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Verify(args) => run_verify(args),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Sum,
    Diff,
}

fn load_curve(path: &Path) -> anyhow::Result<CdfCurve> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading spec file {}", path.display()))?;
    let spec = DistributionSpec::from_json(&text)
        .with_context(|| format!("parsing spec file {}", path.display()))?;
    let curve = spec
        .to_curve()
        .with_context(|| format!("validating spec file {}", path.display()))?;
    Ok(curve)
}

fn parse_points(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("bad point `{s}`: {e}"))
        })
        .collect()
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN steps must fail validation
fn parse_range(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(anyhow!("--grid expects a:b:step, got `{text}`"));
    }
    let a: f64 = parts[0].trim().parse().context("grid start")?;
    let b: f64 = parts[1].trim().parse().context("grid end")?;
    let step: f64 = parts[2].trim().parse().context("grid step")?;
    if !(step > 0.0) {
        return Err(anyhow!("grid step must be positive, got {step}"));
    }
    if b < a {
        return Err(anyhow!("grid end {b} below start {a}"));
    }
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let v = a + step * k as f64;
        if v > b + step * 1e-9 {
            break;
        }
        out.push(v.min(b));
        k += 1;
    }
    Ok(out)
}

/// Sweep grid: breakpoints implied by the marginals, merged with any
/// user-requested points, plus cell midpoints.
fn build_grid(args: &SweepArgs, f: &CdfCurve, g: &CdfCurve, op: Op) -> anyhow::Result<Vec<f64>> {
    let mut pts = match op {
        Op::Sum => bounds::knot_sums(f, g),
        Op::Diff => bounds::knot_diffs(f, g),
    };
    if let Some(text) = &args.points {
        pts.extend(parse_points(text)?);
    }
    if let Some(text) = &args.grid {
        pts.extend(parse_range(text)?);
    }
    let grid = bounds::grid_with_midpoints(pts);
    if grid.is_empty() {
        return Err(anyhow!("empty evaluation grid"));
    }
    Ok(grid)
}

/// Full-precision decimal rendering so regression diffs are exact.
fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_output(path: Option<&PathBuf>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let mut file = fs::File::create(p)
                .with_context(|| format!("creating output file {}", p.display()))?;
            file.write_all(content.as_bytes())
                .with_context(|| format!("writing output file {}", p.display()))?;
        }
        None => {
            print!("{content}");
        }
    }
    Ok(())
}

fn reports_csv(reports: &[BoundReport]) -> String {
    let mut out = String::from(
        "z,lower_lt,lower_leq,upper_lt,upper_leq,lower_leq_achievable,upper_lt_achievable\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f(r.z),
            fmt_f(r.lower_lt),
            fmt_f(r.lower_leq),
            fmt_f(r.upper_lt),
            fmt_f(r.upper_leq),
            r.lower_leq_achievable,
            r.upper_lt_achievable,
        ));
    }
    out
}

fn run_sweep(args: SweepArgs, op: Op) -> anyhow::Result<ExitCode> {
    let f = load_curve(&args.f)?;
    let g = load_curve(&args.g)?;
    let grid = build_grid(&args, &f, &g, op)?;
    let eps = args.consistency_eps.unwrap_or(makarov::EPS_PROB);
    let eval = |&z: &f64| -> makarov::Result<BoundReport> {
        match op {
            Op::Sum => bounds::sum_bounds_with_eps(&f, &g, z, eps),
            Op::Diff => bounds::diff_bounds_with_eps(&f, &g, z, eps),
        }
    };
    let mut reports = Vec::with_capacity(grid.len());
    for z in &grid {
        if args.debug_scan {
            print_scan_table(&f, &g, *z, op);
        }
        reports.push(eval(z)?);
    }
    let content = match args.format {
        OutputFormat::Csv => reports_csv(&reports),
        OutputFormat::Json => serde_json::to_string_pretty(&reports)? + "\n",
    };
    write_output(args.out.as_ref(), &content)?;
    Ok(ExitCode::SUCCESS)
}

fn print_scan_table(f: &CdfCurve, g: &CdfCurve, z: f64, op: Op) {
    let table = match op {
        Op::Sum => bounds::scan_table(f, g, z),
        Op::Diff => bounds::scan_table(f, &g.negate(), z),
    };
    eprintln!("# scan at z = {}", fmt_f(z));
    eprintln!("# x, y, F(x), F(x-), G(y), G(y-), F(x)+G(y)-1");
    for row in table {
        eprintln!(
            "# {}, {}, {}, {}, {}, {}, {}",
            fmt_f(row.x),
            fmt_f(row.y),
            fmt_f(row.f_right),
            fmt_f(row.f_left),
            fmt_f(row.g_right),
            fmt_f(row.g_left),
            fmt_f(row.objective_right),
        );
    }
}

fn run_ite(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let treated = load_curve(&args.f)?;
    let control = load_curve(&args.g)?;
    let grid = build_grid(&args, &treated, &control, Op::Diff)?;
    if args.debug_scan {
        for &delta in &grid {
            print_scan_table(&treated, &control, delta, Op::Diff);
        }
    }
    let arms = ArmPair::new(treated, control);
    let rows = ite::ite_table(&arms, &grid)?;
    let content = match args.format {
        OutputFormat::Csv => {
            let mut out = String::from("delta,sharp_lower,sharp_upper,historical_lower,gap\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_f(r.delta),
                    fmt_f(r.sharp_lower),
                    fmt_f(r.sharp_upper),
                    fmt_f(r.historical_lower),
                    fmt_f(r.gap),
                ));
            }
            out
        }
        OutputFormat::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    write_output(args.out.as_ref(), &content)?;
    Ok(ExitCode::SUCCESS)
}

fn run_sample(args: SampleArgs) -> anyhow::Result<ExitCode> {
    let f = load_curve(&args.f)?;
    let g_raw = load_curve(&args.g)?;
    // The difference problem is the sum problem against the negated second
    // marginal; samples are mapped back afterwards.
    let g = match args.op {
        OpArg::Sum => g_raw,
        OpArg::Diff => g_raw.negate(),
    };
    let copula = match args.kind {
        KindArg::Lower => ExtremalCopula::new(CopulaKind::Lower, bounds::tau_w(&f, &g, args.z)),
        KindArg::Upper => ExtremalCopula::new(CopulaKind::Upper, bounds::rho_w(&f, &g, args.z)),
    }?;
    let draws = copula::sample(&copula, &f, &g, args.samples, args.seed);
    let mut out = String::from("x,y\n");
    for (x, y) in draws {
        let y = match args.op {
            OpArg::Sum => y,
            OpArg::Diff => -y,
        };
        out.push_str(&format!("{},{}\n", fmt_f(x), fmt_f(y)));
    }
    write_output(args.out.as_ref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn run_oracle(args: OracleArgs) -> anyhow::Result<ExitCode> {
    let f = load_curve(&args.f)?;
    let g_raw = load_curve(&args.g)?;
    let g = match args.op {
        OpArg::Sum => g_raw,
        OpArg::Diff => g_raw.negate(),
    };
    let fa = f
        .atoms()
        .ok_or_else(|| anyhow!("oracle requires a discrete spec for --f"))?;
    let ga = g
        .atoms()
        .ok_or_else(|| anyhow!("oracle requires a discrete spec for --g"))?;
    let rel = match args.rel {
        RelArg::Leq => CellRelation::Leq,
        RelArg::Lt => CellRelation::Lt,
    };
    let sense = match args.sense {
        SenseArg::Min => Sense::Minimize,
        SenseArg::Max => Sense::Maximize,
    };
    let lp = CouplingLp::for_sum_event(&fa, &ga, args.z, rel, sense)?;
    let sol = oracle::solve_lp(&lp)?;

    let summary = serde_json::json!({
        "z": args.z,
        "relation": match args.rel { RelArg::Leq => "leq", RelArg::Lt => "lt" },
        "sense": match args.sense { SenseArg::Min => "min", SenseArg::Max => "max" },
        "op": match args.op { OpArg::Sum => "sum", OpArg::Diff => "diff" },
        "value": sol.value,
        "marginal_error": sol.marginal_error(&lp),
        "x_atoms": lp.xs,
        "y_atoms": lp.ys,
    });
    write_output(
        args.out.as_ref(),
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    if let Some(path) = &args.coupling_out {
        let mut csv = String::new();
        for row in &sol.coupling {
            let cells: Vec<String> = row.iter().map(|&v| fmt_f(v)).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        write_output(Some(path), &csv)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let report = match (&args.f, &args.g) {
        (Some(fp), Some(gp)) => {
            let f = load_curve(fp)?;
            let g = load_curve(gp)?;
            let zs = match &args.points {
                Some(text) => parse_points(text)?,
                None => {
                    // Cover the breakpoints of both the sum and the
                    // difference problems.
                    let mut zs = bounds::knot_sums(&f, &g);
                    zs.extend(bounds::knot_diffs(&f, &g));
                    bounds::grid_with_midpoints(zs)
                }
            };
            verify::verify_pair(&f, &g, &zs)?
        }
        (None, None) => verify::verify_random_discrete(args.seed, args.instances, args.max_atoms)?,
        _ => return Err(anyhow!("--f and --g must be given together")),
    };
    write_output(args.out.as_ref(), &(report.to_json() + "\n"))?;
    if report.all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification failed; see report");
        Ok(ExitCode::from(EXIT_CONSISTENCY))
    }
}
