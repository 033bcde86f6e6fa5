//! Command-line front end: law-spec ingestion, orchestration of the
//! analytic and Monte Carlo routes, and emission of machine-readable
//! tables (CSV/JSON) plus a run manifest with output digests.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use branchkit::evolve;
use branchkit::law::{dual_law, fixed_points, OffspringLaw};
use branchkit::limits;
use branchkit::mc::{self, SimConfig};
use branchkit::{Error as CoreError, LawSpec, PiEvaluator, Regime};
use clap::{Args, Parser, Subcommand};

use manifest::RunManifest;

/// Exit code 2: malformed input; 3: numerical failure.
#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(_) | CoreError::Degenerate(_) | CoreError::InvalidLaw(_) => {
                CliError::input(e.to_string())
            }
            CoreError::Pole(_) | CoreError::Convergence(_) | CoreError::Underflow(_) => {
                CliError::numerical(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "branchkit", version, about = "Markov branching process toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LawArg {
    /// JSON law specification file.
    #[arg(long, value_name = "FILE")]
    law: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed points, regime, rates, and moment-condition flags of a law.
    Classify {
        #[command(flatten)]
        law: LawArg,
    },
    /// F_t(s) tables (scalar routes) or the distribution P(Z_t = k).
    Evolve {
        #[command(flatten)]
        law: LawArg,
        /// Time grid: "start:stop:count", "log:start:stop:count", or one value.
        #[arg(long, default_value = "0.5:2:4")]
        t: String,
        /// Evaluation-point grid (same syntax).
        #[arg(long, default_value = "0:0.8:5")]
        s: String,
        /// Emit P(Z_t = k) up to order N instead of the scalar table.
        #[arg(long, value_name = "N")]
        dist: Option<usize>,
        /// ODE/quadrature tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Output directory; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regime-appropriate limit laws.
    Limits {
        #[command(flatten)]
        law: LawArg,
        /// Series truncation order for limit pgfs.
        #[arg(long, default_value_t = 64)]
        order: usize,
        /// Time grid for critical survival asymptotics.
        #[arg(long, default_value = "log:10:1000:5")]
        t: String,
        /// Laplace argument grid for the supercritical transform.
        #[arg(long, default_value = "log:0.25:4:5")]
        rho: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo simulation; the statistical oracle.
    Simulate {
        #[command(flatten)]
        law: LawArg,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Censoring horizon for extinction conditioning.
        #[arg(long)]
        t_max: Option<f64>,
        /// Sample Z_t conditioned on eventual extinction.
        #[arg(long)]
        conditional: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named invariant suite; exit 0 iff all invariants pass.
    Verify {
        #[command(flatten)]
        law: LawArg,
        /// One of: semigroup, residuals, routes, mc, all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn load_law(path: &Path) -> CliResult<(LawSpec, OffspringLaw)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let spec: LawSpec =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("law spec: {e}")))?;
    let law = OffspringLaw::from_spec(&spec)?;
    Ok((spec, law))
}

/// Full round-trip precision (17 significant digits).
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::input(format!("grid '{text}': expected VALUE, start:stop:count, or log:start:stop:count"));
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [start, stop, count] => {
            let (a, b) = (num(start)?, num(stop)?);
            let n = count.parse::<usize>().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
        }
        ["log", start, stop, count] => {
            let (a, b) = (num(start)?, num(stop)?);
            let n = count.parse::<usize>().map_err(|_| bad())?;
            if n == 0 || !(a > 0.0) || !(b > 0.0) {
                return Err(bad());
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            let (la, lb) = (a.ln(), b.ln());
            Ok((0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect())
        }
        _ => Err(bad()),
    }
}

/// Write `content` under `out` (with digest tracking) or to stdout.
fn emit(
    out: &Option<PathBuf>,
    manifest: &mut Option<RunManifest>,
    name: &str,
    content: &str,
) -> CliResult<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, content)?;
            if let Some(m) = manifest {
                m.record_output(&path, content);
            }
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn finish_manifest(out: &Option<PathBuf>, manifest: Option<RunManifest>) -> CliResult<()> {
    if let (Some(dir), Some(m)) = (out, manifest) {
        std::fs::write(dir.join("manifest.json"), m.finish()?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Classify { law } => cmd_classify(&law.law),
        Command::Evolve { law, t, s, dist, tol, out } => {
            cmd_evolve(&law.law, &t, &s, dist, tol, &out)
        }
        Command::Limits { law, order, t, rho, tol, out } => {
            cmd_limits(&law.law, order, &t, &rho, tol, &out)
        }
        Command::Simulate { law, t, reps, seed, t_max, conditional, out } => {
            cmd_simulate(&law.law, t, reps, seed, t_max, conditional, &out)
        }
        Command::Verify { law, suite } => cmd_verify(&law.law, &suite),
    }
}

fn verdict_str(v: Option<branchkit::Verdict>) -> &'static str {
    match v {
        Some(branchkit::Verdict::Converging) => "converging",
        Some(branchkit::Verdict::Diverging) => "diverging",
        Some(branchkit::Verdict::Inconclusive) => "inconclusive",
        None => "unavailable",
    }
}

fn cmd_classify(law_path: &Path) -> CliResult<()> {
    let (_, law) = load_law(law_path)?;
    let pe = PiEvaluator::new(&law)?;
    let fp = pe.fixed_points();
    println!("q={}", fmt(fp.q));
    match fp.r {
        Some(r) => println!("r={}", fmt(r)),
        None => println!("r=none"),
    }
    println!("m={}", fmt(law.mean()));
    println!("regime={}", fp.regime);
    println!("gamma={}", fmt(fp.gamma()));
    match pe.beta() {
        Some(b) => println!("beta={}", fmt(b)),
        None => println!("beta=none"),
    }
    let reg = evolve::regularity(&law);
    println!("regular={}", reg.regular);
    println!("xlogx_q={}", verdict_str(pe.xlogx_at_q()));
    println!("xlogx_r={}", verdict_str(pe.xlogx_at_r()));
    Ok(())
}

fn cmd_evolve(
    law_path: &Path,
    t_grid: &str,
    s_grid: &str,
    dist: Option<usize>,
    tol: f64,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let (spec, law) = load_law(law_path)?;
    let ts = parse_grid(t_grid)?;
    let mut manifest = out.as_ref().map(|_| {
        RunManifest::new(spec.clone(), "evolve", vec![t_grid.into(), s_grid.into()], None)
    });
    let mut failures = 0usize;
    let csv = if let Some(n) = dist {
        let mut rows = String::from("t,k,prob,error_estimate\n");
        for &t in &ts {
            match evolve::series_f(t, n, &law, tol) {
                Ok(d) => {
                    for (k, &p) in d.probs.iter().enumerate() {
                        rows.push_str(&format!(
                            "{},{k},{},{}\n",
                            fmt(t),
                            fmt(p),
                            fmt(d.error_estimate)
                        ));
                    }
                }
                Err(e) => {
                    failures += 1;
                    rows.push_str(&format!("{},nan,FAILED:{e},nan\n", fmt(t)));
                }
            }
        }
        rows
    } else {
        let ss = parse_grid(s_grid)?;
        let mut rows = String::from("t,s,value,error_estimate,route_residual\n");
        for &t in &ts {
            for &s in &ss {
                let scalar = evolve::scalar_f(t, s, &law, tol);
                let integral = evolve::integral_inverse(t, s, &law, tol);
                match (scalar, integral) {
                    (Ok(a), Ok(b)) => rows.push_str(&format!(
                        "{},{},{},{},{}\n",
                        fmt(t),
                        fmt(s),
                        fmt(a.value),
                        fmt(a.error_estimate),
                        fmt((a.value - b.value).abs())
                    )),
                    (Ok(a), Err(e)) => {
                        failures += 1;
                        rows.push_str(&format!(
                            "{},{},{},{},FAILED:{e}\n",
                            fmt(t),
                            fmt(s),
                            fmt(a.value),
                            fmt(a.error_estimate)
                        ));
                    }
                    (Err(e), _) => {
                        failures += 1;
                        rows.push_str(&format!("{},{},FAILED:{e},nan,nan\n", fmt(t), fmt(s)));
                    }
                }
            }
        }
        rows
    };
    emit(out, &mut manifest, "evolve.csv", &csv)?;
    finish_manifest(out, manifest)?;
    if failures > 0 {
        return Err(CliError::numerical(format!("{failures} cells failed; partial table emitted")));
    }
    Ok(())
}

fn cmd_limits(
    law_path: &Path,
    order: usize,
    t_grid: &str,
    rho_grid: &str,
    tol: f64,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let (spec, law) = load_law(law_path)?;
    let pe = PiEvaluator::new(&law)?;
    let mut manifest = out.as_ref().map(|_| {
        RunManifest::new(spec.clone(), "limits", vec![t_grid.into(), rho_grid.into()], None)
    });
    match pe.fixed_points().regime {
        Regime::Subcritical | Regime::ExtendableSubcritical => {
            let lim = limits::subcritical_limit(&law, &pe, order)?;
            let doc = serde_json::json!({
                "regime": pe.fixed_points().regime.to_string(),
                "c": lim.c,
                "psi_coeffs": lim.psi_coeffs.coeffs(),
            });
            emit(out, &mut manifest, "limits.json", &format!("{doc:#}\n"))?;
        }
        Regime::Critical => {
            let ts = parse_grid(t_grid)?;
            let rep = limits::critical_asymptotics(&law, &pe, &ts)?;
            let mut csv = String::from("t,survival,predicted\n");
            for row in &rep.rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    fmt(row.t),
                    fmt(row.survival),
                    row.predicted.map(fmt).unwrap_or_else(|| "none".into())
                ));
            }
            emit(out, &mut manifest, "limits.csv", &csv)?;
        }
        Regime::Supercritical => {
            let rhos = parse_grid(rho_grid)?;
            let local = limits::supercritical_local_limit(&law, &pe, order)?;
            let mart = limits::martingale_limit_transform(&law, &pe, &rhos, tol)?;
            let doc = serde_json::json!({
                "regime": "supercritical",
                "gamma": local.gamma,
                "beta": local.beta,
                "a_coeffs": local.a_coeffs.coeffs(),
                "extinction_pgf": local.extinction_pgf.as_ref().map(|s| s.coeffs()),
                "w_degenerate": mart.w_degenerate,
                "phi": mart.phi_table,
            });
            emit(out, &mut manifest, "limits.json", &format!("{doc:#}\n"))?;
        }
    }
    finish_manifest(out, manifest)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    law_path: &Path,
    t: f64,
    reps: u64,
    seed: u64,
    t_max: Option<f64>,
    conditional: bool,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let (spec, _) = load_law(law_path)?;
    let mut config = SimConfig::new(spec.clone(), t, reps, seed);
    config.t_max = t_max;
    let stats =
        if conditional { mc::extinction_conditioned_sample(&config) } else { mc::simulate(&config) }?;
    let mut manifest = out
        .as_ref()
        .map(|_| RunManifest::new(spec, "simulate", vec![format!("t={t}")], Some(seed)));
    let body = serde_json::to_string_pretty(&stats)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    emit(out, &mut manifest, "simstats.json", &format!("{body}\n"))?;
    finish_manifest(out, manifest)?;
    Ok(())
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, worst: f64, bound: f64) -> Check {
    Check { name, pass: worst <= bound, detail: format!("worst {worst:.3e} bound {bound:.3e}") }
}

fn suite_semigroup(law: &OffspringLaw) -> CliResult<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for &(t, u) in &[(0.5, 0.5), (1.0, 0.7), (2.0, 0.25)] {
        for &s in &[0.0, 0.3, 0.8] {
            let inner = evolve::scalar_f(u, s, law, 1e-12)?.value;
            let two_step = evolve::scalar_f(t, inner, law, 1e-12)?.value;
            let direct = evolve::scalar_f(t + u, s, law, 1e-12)?.value;
            worst = worst.max((two_step - direct).abs());
        }
    }
    Ok(vec![check("semigroup F_{t+u} = F_t . F_u", worst, 1e-9)])
}

fn suite_residuals(law: &OffspringLaw) -> CliResult<Vec<Check>> {
    let pe = PiEvaluator::new(law)?;
    let mut worst: f64 = 0.0;
    for &t in &[0.5, 1.0, 2.0] {
        for &s in &[0.1, 0.4, 0.8] {
            worst = worst.max(pe.theorem_main_residual(t, s)?);
        }
    }
    Ok(vec![check("refined integral-equation residual", worst, 1e-6)])
}

fn suite_routes(law: &OffspringLaw) -> CliResult<Vec<Check>> {
    let mut worst_int: f64 = 0.0;
    let mut worst_series: f64 = 0.0;
    for &t in &[0.5, 1.0, 2.0] {
        let d = evolve::series_f(t, 64, law, 1e-12)?;
        for &s in &[0.0, 0.25, 0.5, 0.75] {
            let a = evolve::scalar_f(t, s, law, 1e-12)?.value;
            let b = evolve::integral_inverse(t, s, law, 1e-12)?.value;
            worst_int = worst_int.max((a - b).abs());
            worst_series = worst_series.max((a - d.eval(s)).abs());
        }
    }
    Ok(vec![
        check("scalar vs integral route", worst_int, 1e-7),
        check("scalar vs series route", worst_series, 1e-7),
    ])
}

fn suite_mc(spec: &LawSpec, law: &OffspringLaw) -> CliResult<Vec<Check>> {
    let n = 50_000u64;
    let cfg = SimConfig::new(spec.clone(), 1.0, n, 20_240_817);
    let stats = mc::simulate(&cfg)?;
    let p0 = evolve::scalar_f(1.0, 0.0, law, 1e-12)?.value;
    let sigma = (p0 * (1.0 - p0) / n as f64).sqrt();
    let se_w = (stats.w_proxy_variance / n as f64).sqrt();
    Ok(vec![
        check("MC extinction frequency vs F_t(0)", (stats.histogram[0] - p0).abs(), 4.0 * sigma),
        check("MC martingale proxy mean", (stats.w_proxy_mean - 1.0).abs(), 4.0 * se_w),
    ])
}

fn cmd_verify(law_path: &Path, suite: &str) -> CliResult<()> {
    let (spec, law) = load_law(law_path)?;
    let mut checks = Vec::new();
    match suite {
        "semigroup" => checks.extend(suite_semigroup(&law)?),
        "residuals" => checks.extend(suite_residuals(&law)?),
        "routes" => checks.extend(suite_routes(&law)?),
        "mc" => checks.extend(suite_mc(&spec, &law)?),
        "all" => {
            checks.extend(suite_semigroup(&law)?);
            checks.extend(suite_residuals(&law)?);
            checks.extend(suite_routes(&law)?);
            checks.extend(suite_mc(&spec, &law)?);
        }
        other => return Err(CliError::input(format!("unknown suite '{other}'"))),
    }
    let mut all_pass = true;
    for c in &checks {
        println!("{}: {} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        all_pass &= c.pass;
    }
    if !all_pass {
        return Err(CliError::numerical("one or more invariants failed"));
    }
    // Consistency spot check usable on supercritical laws: dual-law regime.
    if fixed_points(&law).regime == Regime::Supercritical && law.mean().is_finite() {
        let dual = dual_law(&law)?;
        if !(dual.mean() < 1.0) {
            return Err(CliError::numerical("dual law is not subcritical"));
        }
    }
    Ok(())
}
