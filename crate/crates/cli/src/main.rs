use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use sharp_hilbert::circle::{self, hilbert_multiplier, norm_p, superlevel_measure, CircleFunction, CircleGrid};
use sharp_hilbert::extremal::{
    self, build_at_radius, conjugacy_residual, norm_estimate, sampled_measure, ExtremalKind, RadialLimit,
    DEFAULT_DELTA, DEFAULT_EVAL_RADIUS, MAX_EVAL_RADIUS, MIN_EVAL_RADIUS,
};
use sharp_hilbert::montecarlo::{simulate_with_progress, verify_theorem, SimDomain, SimSpec};
use sharp_hilbert::special::{certify_special_function, CertificateGrid, SpecialFnConfig};
use sharp_hilbert::verify::{
    check_function, check_pair, constant_c1q, constant_c2q, r_functions, run_corpus, Inequality,
    VerificationReport,
};

const DEFAULT_N: usize = 1 << 14;
const DEFAULT_STEP: f64 = 1e-3;
const DEFAULT_PATHS: u64 = 100_000;
const DEFAULT_ABS_TOL: f64 = 1e-8;
const DEFAULT_MAX_TIME: f64 = 2000.0;

/// Sharp one-sided weak-type bounds for the conjugate function on the circle.
///
/// Defaults: n = 16384 grid nodes, step = 1e-3, paths = 100000,
/// abs_tol = 1e-8, max_time = 2000. Exit codes: 0 all checks pass,
/// 1 a verification check failed, 2 usage or I/O error.
#[derive(Debug, Parser)]
#[command(name = "sharp-hilbert", version)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "SHARP_HILBERT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conjugate function of a sampled circle function.
    Transform(TransformArgs),
    /// Build an extremal pair and compare it with the predicted values.
    Extremal(ExtremalArgs),
    /// Grid certificate for the special function U.
    Certify(CertifyArgs),
    /// Monte Carlo exit statistics of killed planar Brownian motion.
    Simulate(SimulateArgs),
    /// Weak-type constants c(p, q).
    Constants(ConstantsArgs),
    /// Check every inequality on an input function or a random corpus.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
struct TransformArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Expected grid size; the input must match it.
    #[arg(long)]
    n: Option<usize>,
    /// File format (default: from the input extension).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// CSV with columns x, lhs, rhs = t, f(t), Hf(t).
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum KindArg {
    P1,
    P2,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum RadialArg {
    Direct,
    Richardson,
}

#[derive(Debug, Args, Serialize)]
struct ExtremalArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    /// Evaluation radius in [1 - 1e-3, 1 - 1e-8].
    #[arg(long, default_value_t = DEFAULT_EVAL_RADIUS)]
    r: f64,
    #[arg(long, value_enum, default_value_t = RadialArg::Richardson)]
    radial: RadialArg,
    /// Superlevel threshold offset: the measure of {g >= 1 - delta}.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Directory for f.csv, g.csv, pair.json and report.json.
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// CSV with columns x, lhs, rhs = t, f(t), g(t).
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CertifyArgs {
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    y_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    y_max: f64,
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    #[arg(long, default_value_t = DEFAULT_ABS_TOL)]
    abs_tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_subdivisions: usize,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DomainArg {
    Slit,
    Strip,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    domain: DomainArg,
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = DEFAULT_PATHS)]
    paths: u64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_TIME)]
    max_time: f64,
    #[arg(long)]
    output: PathBuf,
    /// CSV with columns x, lhs, rhs = paths done, p_hat, p_se.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ConstantsArgs {
    #[arg(long)]
    p: u8,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    output: Option<PathBuf>,
    /// CSV with columns x, lhs, rhs = x, quotient at x, constant.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// Number of random functions (ignored with --input).
    #[arg(long, default_value_t = 200)]
    corpus: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid size of the random corpus.
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    /// Check a single function (CSV or JSON) instead of the corpus.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Weak-type parameter c used with --input.
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    /// Power q used with --input.
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long)]
    output: PathBuf,
    /// CSV with columns x, lhs, rhs = entry index, lhs, rhs.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

/// Outcome of a command: whether every check passed.
type Outcome = Result<bool>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Transform(a) => cmd_transform(&a),
        Command::Extremal(a) => cmd_extremal(&a),
        Command::Certify(a) => cmd_certify(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Constants(a) => cmd_constants(&a),
        Command::Verify(a) => cmd_verify(&a),
    }
}

fn provenance(command: &str, args: &impl Serialize) -> Result<serde_json::Value> {
    Ok(json!({
        "tool": "sharp-hilbert",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "args": serde_json::to_value(args)?,
        "defaults": {
            "n": DEFAULT_N,
            "step": DEFAULT_STEP,
            "paths": DEFAULT_PATHS,
            "abs_tol": DEFAULT_ABS_TOL,
            "max_time": DEFAULT_MAX_TIME,
        },
    }))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json_file(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_plot_data(path: &Path, rows: impl IntoIterator<Item = (f64, f64, f64)>) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x,lhs,rhs")?;
    for (x, l, r) in rows {
        writeln!(w, "{x},{l},{r}")?;
    }
    w.flush()?;
    Ok(())
}

fn grid(n: usize) -> Result<CircleGrid> {
    Ok(CircleGrid::new(n)?)
}

fn format_of(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Csv,
    })
}

fn read_function(path: &Path, format: Format) -> Result<CircleFunction> {
    let r = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let f = match format {
        Format::Csv => circle::read_csv(r),
        Format::Json => circle::read_json(r),
    };
    f.with_context(|| format!("reading {}", path.display()))
}

fn write_function(path: &Path, f: &CircleFunction, format: Format) -> Result<()> {
    let mut w = create(path)?;
    match format {
        Format::Csv => circle::write_csv(f, &mut w)?,
        Format::Json => circle::write_json(f, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn cmd_transform(a: &TransformArgs) -> Outcome {
    let format = format_of(&a.input, a.format);
    let f = read_function(&a.input, format)?;
    if let Some(n) = a.n {
        grid(n)?;
        if f.grid().len() != n {
            bail!("input has {} nodes, expected {n}", f.grid().len());
        }
    }
    let hf = hilbert_multiplier(&f);
    write_function(&a.output, &hf, format)?;
    println!("norm1 = {:.12e}", norm_p(&f, 1.0)?);
    println!("norm2 = {:.12e}", norm_p(&f, 2.0)?);
    println!("superlevel_measure(Hf, 1) = {:.12e}", superlevel_measure(&hf, 1.0));
    if let Some(p) = &a.plot_data {
        let g = f.grid();
        write_plot_data(
            p,
            (0..g.len()).map(|k| (g.node(k), f.values()[k], hf.values()[k])),
        )?;
    }
    Ok(true)
}

fn cmd_extremal(a: &ExtremalArgs) -> Outcome {
    let kind = match a.kind {
        KindArg::P1 => ExtremalKind::P1Slit,
        KindArg::P2 => ExtremalKind::P2Strip,
    };
    if !(a.c > 0.0 && a.c < 1.0) {
        bail!("--c must lie in (0, 1), got {}", a.c);
    }
    if !(MIN_EVAL_RADIUS..=MAX_EVAL_RADIUS).contains(&a.r) {
        bail!("--r must lie in [1 - 1e-3, 1 - 1e-8], got {}", a.r);
    }
    if !(a.delta >= 0.0 && a.delta < 1.0) {
        bail!("--delta must lie in [0, 1), got {}", a.delta);
    }
    let radial = match a.radial {
        RadialArg::Direct => RadialLimit::Direct,
        RadialArg::Richardson => RadialLimit::Richardson,
    };
    let pair = build_at_radius(kind, a.c, grid(a.n)?, a.r, radial)?;
    std::fs::create_dir_all(&a.output_dir)
        .with_context(|| format!("creating {}", a.output_dir.display()))?;
    write_function(&a.output_dir.join("f.csv"), pair.f(), Format::Csv)?;
    write_function(&a.output_dir.join("g.csv"), pair.g(), Format::Csv)?;
    let mut side = create(&a.output_dir.join("pair.json"))?;
    pair.write_sidecar(&mut side)?;
    side.flush()?;

    let measure = sampled_measure(&pair, a.delta);
    let arc = extremal::exact_arc_measure(kind, a.c)?;
    let norm = norm_estimate(&pair)?;
    let (res_max, res_median) = conjugacy_residual(&pair, extremal::SINGULAR_EXCLUSION_NODES);
    let entries = check_pair(&pair, a.delta)?;
    let report = VerificationReport::new(entries);

    println!("{:<18} {:>14} {:>14} {:>11}", "quantity", "measured", "predicted", "error");
    let row = |name: &str, m: f64, p: f64| println!("{name:<18} {m:>14.8} {p:>14.8} {:>11.3e}", m - p);
    row("measure", measure, pair.predicted_measure());
    row("arc_measure", arc, pair.predicted_measure());
    row("norm_plain", norm.plain, pair.predicted_norm());
    row("norm_refined", norm.refined, pair.predicted_norm());
    println!("conjugacy residual: max {res_max:.3e}, median {res_median:.3e}");
    print!("{}", report.to_text());

    let doc = json!({
        "provenance": provenance("extremal", a)?,
        "pair": pair.sidecar(),
        "measured": {
            "measure": measure,
            "arc_measure": arc,
            "norm_plain": norm.plain,
            "norm_refined": norm.refined,
            "conjugacy_residual_max": res_max,
            "conjugacy_residual_median": res_median,
        },
        "report": report,
        "pass": report.pass(),
    });
    write_json_file(&a.output_dir.join("report.json"), &doc)?;
    if let Some(p) = &a.plot_data {
        let g = pair.grid();
        write_plot_data(
            p,
            (0..g.len()).map(|k| (g.node(k), pair.f().values()[k], pair.g().values()[k])),
        )?;
    }
    Ok(report.pass())
}

fn cmd_certify(a: &CertifyArgs) -> Outcome {
    let cfg = SpecialFnConfig::new(a.abs_tol, a.max_subdivisions)?;
    let g = CertificateGrid::new(a.x_min, a.x_max, a.y_min, a.y_max, a.h)?;
    let report = certify_special_function(&cfg, &g)?;
    println!("{:<18} {:>6} {:>9} {:>12} {:>10}", "property", "pass", "checked", "worst_slack", "violations");
    for p in report.properties() {
        println!(
            "{:<18} {:>6} {:>9} {:>12.3e} {:>10}",
            p.name,
            if p.pass { "PASS" } else { "FAIL" },
            p.checked,
            p.worst_slack,
            p.violations.len()
        );
    }
    println!("bounded: max |U + |x|| = {:.6}", report.bounded_max);
    let pass = report.pass();
    write_json_file(
        &a.output,
        &json!({
            "provenance": provenance("certify", a)?,
            "certificate": report,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome {
    let domain = match a.domain {
        DomainArg::Slit => SimDomain::Slit(a.c),
        DomainArg::Strip => SimDomain::Strip(a.c),
    };
    let spec = SimSpec::new(domain, a.paths, a.step, a.seed, a.max_time)?;
    let mut trace = Vec::new();
    let result = simulate_with_progress(&spec, |done, p, se| {
        eprintln!("{done},{p},{se}");
        trace.push((done as f64, p, se));
    })?;
    let entries = verify_theorem(&result)?;
    let report = VerificationReport::new(entries);
    println!(
        "p_hat = {:.6} ± {:.2e}, m1_hat = {:.6} ± {:.2e}, m2_hat = {:.6} ± {:.2e}, censored = {:.3e}",
        result.p_hat, result.p_se, result.m1_hat, result.m1_se, result.m2_hat, result.m2_se, result.censored_fraction
    );
    print!("{}", report.to_text());
    let pass = report.pass();
    write_json_file(
        &a.output,
        &json!({
            "provenance": provenance("simulate", a)?,
            "result": result,
            "report": report,
            "pass": pass,
        }),
    )?;
    if let Some(p) = &a.plot_data {
        write_plot_data(p, trace)?;
    }
    Ok(pass)
}

fn cmd_constants(a: &ConstantsArgs) -> Outcome {
    let k = match a.p {
        1 => constant_c1q(a.q)?,
        2 => constant_c2q(a.q)?,
        p => bail!("--p must be 1 or 2, got {p}"),
    };
    println!(
        "c({}, {}) = {:.12} at x = {:.9} ({})",
        k.p,
        k.q,
        k.value,
        k.argmax_x,
        if k.attained { "attained" } else { "boundary supremum, not attained" }
    );
    if let Some(out) = &a.output {
        write_json_file(out, &json!({ "provenance": provenance("constants", a)?, "constant": k }))?;
    }
    if let Some(p) = &a.plot_data {
        let rows = (1..=400)
            .map(|i| 10f64.powf(-3.0 + 5.0 * i as f64 / 400.0))
            .map(|x| -> Result<(f64, f64, f64)> {
                let (r1, r2) = r_functions(if a.p == 1 { x } else { x * x })?;
                let quotient = if a.p == 1 { r1 } else { r2 }.powf(1.0 / a.q) / x;
                Ok((x, quotient, k.value))
            })
            .collect::<Result<Vec<_>>>()?;
        write_plot_data(p, rows)?;
    }
    Ok(true)
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let report = match &a.input {
        Some(path) => {
            let f = read_function(path, format_of(path, None))?;
            let checks = [
                Inequality::L1WeakType { c: a.c },
                Inequality::L1Optimized,
                Inequality::L2WeakType { c: a.c },
                Inequality::L2Optimized,
                Inequality::L1Power { q: a.q },
                Inequality::L2Power { q: a.q },
            ];
            VerificationReport::new(
                checks
                    .iter()
                    .map(|&w| check_function(&f, w))
                    .collect::<sharp_hilbert::Result<_>>()?,
            )
        }
        None => run_corpus(a.corpus, grid(a.n)?, a.seed)?,
    };
    let failures = report.failures().count();
    println!(
        "{} entries, {} failures, min slack {:.3e}",
        report.entries.len(),
        failures,
        report.min_slack()
    );
    for e in report.failures() {
        println!("FAIL {} lhs = {:.9e} rhs = {:.9e} slack = {:.3e}", e.name, e.lhs, e.rhs, e.slack);
    }
    let pass = report.pass();
    if let Some(p) = &a.plot_data {
        write_plot_data(
            p,
            report.entries.iter().enumerate().map(|(i, e)| (i as f64, e.lhs, e.rhs)),
        )?;
    }
    write_json_file(
        &a.output,
        &json!({ "provenance": provenance("verify", a)?, "report": report, "pass": pass }),
    )?;
    Ok(pass)
}
