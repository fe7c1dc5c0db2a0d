//! Command-line front end: single-point photon rates, excess-noise
//! factors, grid sweeps with figure presets, and the seeded self-check
//! suite.
//!
//! Exit codes: 0 success (including a physically divergent K factor),
//! 1 self-check failure, 2 invalid configuration, 3 threshold
//! singularity, 4 unwritable output path.
//!
//! Output files are deterministic: a fixed float format (12 significant
//! digits, scientific outside [1e-3, 1e6)), no timestamps, and a
//! `reproduce:` metadata line whose invocation regenerates the file
//! byte for byte.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use opa_cavity::analysis::{
    cross_moment, k_factor, locked_k_closed_form, orthogonal_mode_closed_form, photon_numbers,
    unlocked_k_closed_form, KFactor, Regime,
};
use opa_cavity::cavity::{CavityParams, InjectedFault};
use opa_cavity::checks::run_all;
use opa_cavity::sweep::{fig2_preset, fig3_preset, sweep, GridAxis, GridSpec, SweepAxis, SweepResult};
use opa_cavity::Error;

/// Environment variable naming the default output directory for sweep
/// files when `--out` is not given.
const OUTDIR_ENV: &str = "OPA_CAVITY_OUTDIR";

#[derive(Parser)]
#[command(
    name = "opa-cavity",
    version,
    about = "Type-II parametric amplifier in a two-mirror cavity with non-orthogonal polarization eigenmodes",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emitted photon numbers per mode at one working point
    Photons(PhotonsArgs),
    /// Petermann excess-noise factor of the cold cavity
    Kfactor(KfactorArgs),
    /// Evaluate a parameter grid and write a CSV or JSON dataset
    Sweep(SweepArgs),
    /// Run the seeded self-check suite
    Check(CheckArgs),
}

/// The five cavity parameters, shared by every physics subcommand.
#[derive(Args)]
struct ParamArgs {
    /// Crystal single-pass gain, G >= 1
    #[arg(long = "G", default_value_t = 1.01, value_name = "GAIN")]
    g: f64,

    /// Output-coupler intensity reflectivity, 0 <= R < 1
    #[arg(long = "R", default_value_t = 0.2, value_name = "REFL")]
    r: f64,

    /// Absorber amplitude transmission, 0 <= t <= 1
    #[arg(long, default_value_t = 1.0, value_name = "TRANS")]
    t: f64,

    /// Rotator angle (radians, or degrees with --deg)
    #[arg(long, default_value_t = 0.0, value_name = "ANGLE")]
    phi: f64,

    /// Propagation phase per half trip (radians, or degrees with --deg)
    #[arg(long, default_value_t = 0.0, value_name = "ANGLE")]
    theta: f64,

    /// Interpret --phi and --theta as degrees
    #[arg(long)]
    deg: bool,
}

impl ParamArgs {
    fn resolve(&self) -> Result<CavityParams, Failure> {
        let scale = if self.deg { std::f64::consts::PI / 180.0 } else { 1.0 };
        CavityParams::new(self.g, self.r, self.t, self.phi * scale, self.theta * scale)
            .map_err(invalid_config)
    }
}

#[derive(Args)]
struct PhotonsArgs {
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct KfactorArgs {
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamArgs,

    /// Figure preset: 2 (101x101 gain map over t and phi) or 3 (1001-point
    /// slice at phi = pi/8); fixes G = 1.01, R = 0.2, theta = 0
    #[arg(
        long,
        value_parser = clap::value_parser!(u8).range(2..=3),
        conflicts_with_all = ["axis", "g", "r", "t", "phi", "theta", "deg"]
    )]
    fig: Option<u8>,

    /// Grid axis, name=start:stop:count with name one of t, phi, theta,
    /// G, R; repeat for a second axis (first axis is the outer loop)
    #[arg(long, value_name = "SPEC")]
    axis: Vec<String>,

    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Output file (default: a named file in $OPA_CAVITY_OUTDIR or .)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Seed for the randomized samples
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Debug: assemble the round trip with the back-mirror sign flipped,
    /// which the structural check must catch
    #[arg(long)]
    inject_left_mirror_sign: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// A failed command: message for stderr plus the process exit code.
struct Failure {
    code: u8,
    message: String,
}

fn invalid_config(e: Error) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Photons(args) => cmd_photons(&args),
        Command::Kfactor(args) => cmd_kfactor(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Check(args) => cmd_check(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Fixed-width float formatting for reports and data files: 12
/// significant digits, scientific notation outside [1e-3, 1e6), and the
/// literal tokens inf/-inf/nan.
fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a != 0.0 && (1e-3..1e6).contains(&a) {
        let decimals = (11 - a.log10().floor() as i64).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

fn fmt_complex(z: Complex64) -> String {
    let (sign, im) = if z.im < 0.0 { ("-", -z.im) } else { ("+", z.im) };
    format!("{} {} {}i", fmt_f64(z.re), sign, fmt_f64(im))
}

fn cmd_photons(args: &PhotonsArgs) -> Result<(), Failure> {
    let p = args.params.resolve()?;
    let (n_a, n_b, n) = photon_numbers(&p).map_err(|e| {
        let code = if matches!(e, Error::SingularAtThreshold(_)) { 3 } else { 2 };
        Failure { code, message: e.to_string() }
    })?;
    let cross = cross_moment(&p).expect("same solve as the photon numbers");

    println!("n_a = {}", fmt_f64(n_a));
    println!("n_b = {}", fmt_f64(n_b));
    println!("N_total = {}", fmt_f64(n));
    println!("cross_ab = {}", fmt_complex(cross));

    if p.t == 1.0 && p.phi == 0.0 {
        // Orthogonal-eigenmode configuration: the closed form applies.
        match orthogonal_mode_closed_form(p.g, p.r, p.theta) {
            Ok(reference) => {
                println!("closed_form = {}", fmt_f64(reference));
                let dev = (n_a - reference).abs() / reference.abs().max(1e-12);
                println!("relative_deviation = {:.3e}", dev);
            }
            Err(_) => println!("closed_form = divergent at threshold"),
        }
    }
    Ok(())
}

fn cmd_kfactor(args: &KfactorArgs) -> Result<(), Failure> {
    let p = args.params.resolve()?;
    let res = k_factor(&p).map_err(|e| Failure { code: 1, message: e.to_string() })?;

    println!("t_c = {}", fmt_f64(res.t_c));
    println!("regime = {}", res.regime);
    match res.k {
        KFactor::Finite(k) => println!("K = {}", fmt_f64(k)),
        KFactor::Divergent => {
            println!("K = inf");
            println!("note = eigenmodes coalesce at the exceptional point");
        }
    }
    match res.regime {
        Regime::Locked | Regime::Unlocked => {
            let reference = if res.regime == Regime::Locked {
                locked_k_closed_form(p.t, p.phi)
            } else {
                unlocked_k_closed_form(p.t, p.phi)
            };
            println!("closed_form = {}", fmt_f64(reference));
            if let Some(k) = res.k.as_f64() {
                println!("relative_deviation = {:.3e}", (k - reference).abs() / reference);
            }
        }
        Regime::Critical => {
            println!("closed_form = skipped inside the critical band |t - t_c| <= 1e-3");
        }
    }
    Ok(())
}

fn parse_axis(spec: &str) -> Result<GridAxis, Failure> {
    let bad = |detail: &str| Failure {
        code: 2,
        message: format!("axis spec {spec:?}: {detail} (expected name=start:stop:count)"),
    };
    let (name, rest) = spec.split_once('=').ok_or_else(|| bad("missing '='"))?;
    let parts: Vec<&str> = rest.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("need start:stop:count"));
    }
    let param = SweepAxis::parse(name).map_err(invalid_config)?;
    let start: f64 = parts[0].parse().map_err(|_| bad("start is not a number"))?;
    let stop: f64 = parts[1].parse().map_err(|_| bad("stop is not a number"))?;
    let count: usize = parts[2].parse().map_err(|_| bad("count is not an integer"))?;
    GridAxis::linspace(param, start, stop, count).map_err(invalid_config)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let (fixed, grid, fig) = match args.fig {
        Some(2) => {
            let (fixed, grid) = fig2_preset();
            (fixed, grid, Some(2))
        }
        Some(3) => {
            let (fixed, grid) = fig3_preset();
            (fixed, grid, Some(3))
        }
        Some(_) => unreachable!("clap range guards --fig"),
        None => {
            if args.axis.is_empty() {
                return Err(Failure {
                    code: 2,
                    message: "sweep needs --fig or at least one --axis".into(),
                });
            }
            let axes = args.axis.iter().map(|s| parse_axis(s)).collect::<Result<Vec<_>, _>>()?;
            let grid = GridSpec::new(axes).map_err(invalid_config)?;
            (args.params.resolve()?, grid, None)
        }
    };

    let result = sweep(&fixed, &grid).map_err(invalid_config)?;

    let config = config_json(&fixed, &grid, fig, args.format);
    let reproduce = reproduce_command(&fixed, &grid, fig, args.format);
    let rendered = match args.format {
        OutputFormat::Csv => render_csv(&result, &config, &reproduce),
        OutputFormat::Json => render_json(&result, &config, &reproduce),
    };

    let path = output_path(args, &grid, fig);
    std::fs::write(&path, rendered).map_err(|e| Failure {
        code: 4,
        message: format!("cannot write {}: {e}", path.display()),
    })?;
    println!("wrote {} ({} records)", path.display(), result.records().len());
    Ok(())
}

fn output_path(args: &SweepArgs, grid: &GridSpec, fig: Option<u8>) -> PathBuf {
    if let Some(path) = &args.out {
        return path.clone();
    }
    let dir = std::env::var_os(OUTDIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
    let stem = match fig {
        Some(n) => format!("sweep-fig{n}"),
        None => {
            let names: Vec<&str> = grid.axes().iter().map(|a| a.param().name()).collect();
            format!("sweep-{}", names.join("-"))
        }
    };
    dir.join(format!("{stem}.{}", args.format.name()))
}

/// Resolved configuration as a single-line JSON object. Floats use the
/// shortest round-trip form so the echoed command reproduces them
/// exactly.
fn config_json(fixed: &CavityParams, grid: &GridSpec, fig: Option<u8>, format: OutputFormat) -> String {
    let mut axes = String::new();
    for (k, ax) in grid.axes().iter().enumerate() {
        if k > 0 {
            axes.push(',');
        }
        axes.push_str(&format!(
            "{{\"param\":\"{}\",\"start\":{},\"stop\":{},\"count\":{}}}",
            ax.param().name(),
            ax.values()[0],
            ax.values().last().expect("axes are non-empty"),
            ax.values().len()
        ));
    }
    let fig_part = match fig {
        Some(n) => format!(",\"fig\":{n}"),
        None => String::new(),
    };
    format!(
        "{{\"command\":\"sweep\"{fig_part},\"fixed\":{{\"G\":{},\"R\":{},\"t\":{},\"phi\":{},\"theta\":{}}},\"axes\":[{axes}],\"format\":\"{}\"}}",
        fixed.g,
        fixed.r,
        fixed.t,
        fixed.phi,
        fixed.theta,
        format.name()
    )
}

/// The exact invocation that regenerates this file's content (any --out
/// may be appended; the output path is deliberately not part of the
/// content).
fn reproduce_command(fixed: &CavityParams, grid: &GridSpec, fig: Option<u8>, format: OutputFormat) -> String {
    let mut cmd = String::from("opa-cavity sweep");
    match fig {
        Some(n) => cmd.push_str(&format!(" --fig {n}")),
        None => {
            for ax in grid.axes() {
                cmd.push_str(&format!(
                    " --axis {}={}:{}:{}",
                    ax.param().name(),
                    ax.values()[0],
                    ax.values().last().expect("axes are non-empty"),
                    ax.values().len()
                ));
            }
            cmd.push_str(&format!(
                " --G {} --R {} --t {} --phi {} --theta {}",
                fixed.g, fixed.r, fixed.t, fixed.phi, fixed.theta
            ));
        }
    }
    cmd.push_str(&format!(" --format {}", format.name()));
    cmd
}

fn record_fields(rec: &opa_cavity::sweep::SweepRecord) -> [String; 9] {
    let (n_a, n_b, n) = match rec.photons {
        Some((a, b, n)) => (fmt_f64(a), fmt_f64(b), fmt_f64(n)),
        None => ("inf".into(), "inf".into(), "inf".into()),
    };
    let k = match rec.k {
        KFactor::Finite(k) => fmt_f64(k),
        KFactor::Divergent => "inf".into(),
    };
    [
        fmt_f64(rec.params.t),
        fmt_f64(rec.params.phi),
        fmt_f64(rec.params.theta),
        fmt_f64(rec.params.g),
        fmt_f64(rec.params.r),
        n_a,
        n_b,
        n,
        k,
    ]
}

fn render_csv(result: &SweepResult, config: &str, reproduce: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("# opa-cavity sweep v{}\n", result.code_version()));
    out.push_str(&format!("# config: {config}\n"));
    out.push_str(&format!("# reproduce: {reproduce}\n"));
    out.push_str("t,phi,theta,G,R,n_a,n_b,N_total,K,regime\n");
    for rec in result.records() {
        let f = record_fields(rec);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8], rec.regime
        ));
    }
    out
}

fn render_json(result: &SweepResult, config: &str, reproduce: &str) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str("  \"tool\": \"opa-cavity sweep\",\n");
    out.push_str(&format!("  \"version\": \"{}\",\n", result.code_version()));
    out.push_str(&format!("  \"config\": {config},\n"));
    out.push_str(&format!("  \"reproduce\": \"{reproduce}\",\n"));
    out.push_str("  \"records\": [\n");
    let last = result.records().len().saturating_sub(1);
    for (i, rec) in result.records().iter().enumerate() {
        let f = record_fields(rec);
        let quote = |s: &str| {
            if s == "inf" {
                "\"inf\"".to_string()
            } else {
                s.to_string()
            }
        };
        out.push_str(&format!(
            "    {{\"t\":{},\"phi\":{},\"theta\":{},\"G\":{},\"R\":{},\"n_a\":{},\"n_b\":{},\"N_total\":{},\"K\":{},\"regime\":\"{}\"}}{}\n",
            f[0],
            f[1],
            f[2],
            f[3],
            f[4],
            quote(&f[5]),
            quote(&f[6]),
            quote(&f[7]),
            quote(&f[8]),
            rec.regime,
            if i == last { "" } else { "," }
        ));
    }
    out.push_str("  ]\n}\n");
    out
}

fn cmd_check(args: &CheckArgs) -> Result<(), Failure> {
    let fault = if args.inject_left_mirror_sign {
        InjectedFault::LeftMirrorSignFlip
    } else {
        InjectedFault::None
    };
    let report = run_all(args.seed, fault);

    println!("seed = {}", report.seed);
    for o in &report.outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {}: max deviation {:.3e} (tol {:e})",
            o.name, o.max_deviation, o.tolerance
        );
    }
    let passed = report.outcomes.iter().filter(|o| o.passed).count();
    println!("{passed} of {} checks passed", report.outcomes.len());

    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("{} of {} checks failed", report.outcomes.len() - passed, report.outcomes.len()),
        })
    }
}
