//! Command-line front end: `rates`, `measure`, `scan`, `critical`, `natoms`
//! and the self-validation suite.
//!
//! Flag precedence is command line > config file > defaults. Config files are
//! plain `key = value` lines with `#` comments. Exit codes: 0 success,
//! 1 usage, 2 numerical failure, 3 validation failure.

use clap::{Args, Parser, Subcommand};
use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{CavityParams, Distance, RegOrder};
use crate::pipeline::{evaluate, rate_trajectory, write_measure_csv, RunSpec};
use crate::scan::{
    critical_distance, natom_scan, sweep_distance, write_natoms_csv, write_scan_csv,
};
use crate::volterra::Scheme;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cavitynm",
    about = "Exact two-atom cavity dynamics and non-Markovianity measures",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Decay rates and g-functions on a time grid (CSV).
    Rates(RatesArgs),
    /// Regularized weighted non-Markovianity measure for one configuration.
    Measure(MeasureArgs),
    /// Distance sweep of the measure (CSV).
    Scan(ScanArgs),
    /// Critical distance by bisection on the rate minimum.
    Critical(CriticalArgs),
    /// Atom-number thresholds at zero separation (CSV).
    Natoms(NatomsArgs),
    /// Self-validation against the closed-form oracles.
    Validate(ValidateArgs),
}

#[derive(Debug, Args, Default, Clone)]
struct CommonArgs {
    /// Coupling strength gamma0 (units of omega0).
    #[arg(long)]
    gamma0: Option<f64>,
    /// Cavity linewidth lambda (units of omega0).
    #[arg(long)]
    lambda: Option<f64>,
    /// Resonance frequency omega0 (sets the unit system; default 1).
    #[arg(long)]
    omega0: Option<f64>,
    /// Interatomic distance; `inf` selects the infinite-separation limit.
    #[arg(long)]
    d: Option<String>,
    /// Final time of the observation window.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Base time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Solver scheme: `direct` or `fast`.
    #[arg(long)]
    scheme: Option<String>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RatesArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct MeasureArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Evaluate the uncorrelated part instead of the full dynamics.
    #[arg(long)]
    uncorrelated: bool,
    /// Regularization order alpha (>= 1).
    #[arg(long, default_value_t = 1)]
    alpha: u32,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "d-min")]
    d_min: Option<f64>,
    #[arg(long = "d-max")]
    d_max: Option<f64>,
    /// Number of sweep points.
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Logarithmic spacing between d-min and d-max.
    #[arg(long = "log-spacing")]
    log_spacing: bool,
    /// Append the infinite-separation row.
    #[arg(long = "include-inf")]
    include_inf: bool,
}

#[derive(Debug, Args)]
struct CriticalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "d-lo", default_value_t = 1.5)]
    d_lo: f64,
    #[arg(long = "d-hi", default_value_t = 2.1)]
    d_hi: f64,
    /// Bisection tolerance in d.
    #[arg(long, default_value_t = 5e-3)]
    tol: f64,
    /// Locate the uncorrelated critical distance instead.
    #[arg(long)]
    uncorrelated: bool,
}

#[derive(Debug, Args)]
struct NatomsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scan N = 1..=n-max.
    #[arg(long = "n-max", default_value_t = 50)]
    n_max: u32,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Run the reduced suite (well under 30 s).
    #[arg(long)]
    quick: bool,
}

/// Values merged from defaults, config file and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: CavityParams,
    pub t_end: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub out: Option<PathBuf>,
}

fn parse_distance(s: &str) -> Result<Distance> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(Distance::Infinite);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Usage(format!("cannot parse distance `{s}`")))?;
    if v.is_infinite() {
        return Ok(Distance::Infinite);
    }
    Ok(Distance::Finite(v))
}

fn parse_scheme(s: &str) -> Result<Scheme> {
    match s.trim() {
        "direct" => Ok(Scheme::Direct),
        "fast" => Ok(Scheme::Fast),
        other => Err(Error::Usage(format!("unknown scheme `{other}` (use direct|fast)"))),
    }
}

/// Parse a `key = value` config file; `#` starts a comment.
pub fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
        map.insert(key.trim().replace('-', "_"), value.trim().to_string());
    }
    Ok(map)
}

struct Merged {
    cfg: HashMap<String, String>,
}

impl Merged {
    fn load(common: &CommonArgs) -> Result<Self> {
        let cfg = match &common.config {
            Some(path) => parse_config_file(path)?,
            None => HashMap::new(),
        };
        Ok(Self { cfg })
    }

    fn f64_opt(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>> {
        if let Some(v) = flag {
            return Ok(Some(v));
        }
        match self.cfg.get(key) {
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Usage(format!("config key `{key}`: bad number `{s}`"))),
            None => Ok(None),
        }
    }

    fn str_opt<'a>(&'a self, flag: &'a Option<String>, key: &str) -> Option<&'a str> {
        flag.as_deref().or_else(|| self.cfg.get(key).map(|s| s.as_str()))
    }
}

fn build_config(common: &CommonArgs, require_d: bool) -> Result<RunConfig> {
    let merged = Merged::load(common)?;
    let gamma0 = merged
        .f64_opt(common.gamma0, "gamma0")?
        .ok_or_else(|| Error::Usage("missing required parameter gamma0".into()))?;
    let lambda = merged
        .f64_opt(common.lambda, "lambda")?
        .ok_or_else(|| Error::Usage("missing required parameter lambda".into()))?;
    let omega0 = merged.f64_opt(common.omega0, "omega0")?.unwrap_or(1.0);
    let d = match merged.str_opt(&common.d, "d") {
        Some(s) => parse_distance(s)?,
        None if require_d => return Err(Error::Usage("missing required parameter d".into())),
        None => Distance::Finite(0.0),
    };
    let t_end = merged.f64_opt(common.t_end, "t_end")?.unwrap_or(350.0);
    let dt = merged.f64_opt(common.dt, "dt")?.unwrap_or(0.05);
    let scheme = match merged.str_opt(&common.scheme, "scheme") {
        Some(s) => parse_scheme(s)?,
        None => Scheme::Fast,
    };
    let params = CavityParams::new(gamma0, lambda, omega0, d);
    let report = crate::model::validate_params(&params);
    if let Some(err) = report.errors.first() {
        return Err(Error::Usage(err.to_string()));
    }
    for w in &report.warnings {
        eprintln!("warning: {w:?}");
    }
    Ok(RunConfig { params, t_end, dt, scheme, out: common.out.clone() })
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match out {
        Some(path) => Ok(Box::new(std::fs::File::create(path)?)),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Usage(_) | Error::NonPositiveParameter(_) | Error::InvalidGrid(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

fn cmd_rates(args: &RatesArgs) -> Result<()> {
    let cfg = build_config(&args.common, true)?;
    let spec = RunSpec::new(cfg.params, cfg.t_end, cfg.dt, cfg.scheme);
    let rates = rate_trajectory(&spec)?;
    let mut out = open_out(&cfg.out)?;
    rates.write_csv(&mut out)?;
    Ok(())
}

fn cmd_measure(args: &MeasureArgs) -> Result<()> {
    let cfg = build_config(&args.common, true)?;
    let reg = RegOrder::new(args.alpha)?;
    let spec = RunSpec::new(cfg.params, cfg.t_end, cfg.dt, cfg.scheme);
    let ev = evaluate(&spec, reg)?;
    let (m, f, w, g) = if args.uncorrelated {
        (&ev.uncorrelated, &ev.f_uncorrelated, &ev.w_uncorrelated, &ev.rates.g_uc)
    } else {
        (&ev.total, &ev.f_total, &ev.w_total, &ev.rates.g)
    };
    println!("variant={}", m.variant);
    println!("value={:.16e}", m.value);
    println!("t_end={:.16e}", m.t_end);
    println!("relaxation_estimate={:.16e}", m.relaxation_estimate);
    println!("pole_count={}", m.pole_count);
    println!("alpha={}", m.reg.alpha());
    if cfg.out.is_some() {
        let mut out = open_out(&cfg.out)?;
        write_measure_csv(&mut out, ev.rates.grid(), f, w, g)?;
    }
    Ok(())
}

fn cmd_scan(args: &ScanArgs) -> Result<i32> {
    let cfg = build_config(&args.common, false)?;
    let d_min = args.d_min.ok_or_else(|| Error::Usage("scan needs --d-min".into()))?;
    let d_max = args.d_max.ok_or_else(|| Error::Usage("scan needs --d-max".into()))?;
    if args.points < 1 || d_max < d_min || (args.log_spacing && d_min <= 0.0) {
        return Err(Error::Usage("bad scan range".into()));
    }
    let mut d_list: Vec<Distance> = (0..args.points)
        .map(|k| {
            let s = if args.points == 1 { 0.0 } else { k as f64 / (args.points - 1) as f64 };
            let d = if args.log_spacing {
                d_min * (d_max / d_min).powf(s)
            } else {
                d_min + s * (d_max - d_min)
            };
            Distance::Finite(d)
        })
        .collect();
    if args.include_inf {
        d_list.push(Distance::Infinite);
    }
    let rows = sweep_distance(&cfg.params, &d_list, cfg.t_end, cfg.dt, cfg.scheme, RegOrder::default());
    let ok = rows.iter().filter(|r| r.is_ok()).count();
    let mut out = open_out(&cfg.out)?;
    write_scan_csv(&mut out, &d_list, &rows, cfg.t_end)?;
    Ok(if ok > 0 { EXIT_OK } else { EXIT_NUMERICAL })
}

fn cmd_critical(args: &CriticalArgs) -> Result<()> {
    let cfg = build_config(&args.common, false)?;
    let result = critical_distance(
        &cfg.params,
        (args.d_lo, args.d_hi),
        args.tol,
        cfg.t_end,
        cfg.dt,
        cfg.scheme,
        args.uncorrelated,
    )?;
    let name = if args.uncorrelated { "d_uc" } else { "d_c" };
    println!("{name}={:.6}", result.d_star);
    println!("bracket=[{},{}]", result.bracket.0, result.bracket.1);
    println!("tolerance={:.3e}", result.tolerance);
    println!("iterations={}", result.iterations);
    Ok(())
}

fn cmd_natoms(args: &NatomsArgs) -> Result<()> {
    let cfg = build_config(&args.common, false)?;
    let n_list: Vec<u32> = (1..=args.n_max.max(1)).collect();
    let rows = natom_scan(&cfg.params, &n_list);
    let mut out = open_out(&cfg.out)?;
    write_natoms_csv(&mut out, &rows)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn run_validation(cfg: &RunConfig, quick: bool) -> Vec<Check> {
    use crate::validate;
    let dt = cfg.dt;
    let mut checks = Vec::new();
    let t_end = if quick { 150.0 } else { 300.0 };
    checks.push(wrap("single-atom-analytic", validate::single_atom_accuracy(dt, t_end)));
    checks.push(wrap("d0-analytic-and-dark-state", validate::d0_accuracy(dt, t_end)));
    checks.push(wrap("scheme-cross-check", validate::scheme_cross_check(dt)));
    checks.push(wrap("kernel-seam-continuity", validate::kernel_seam()));
    checks.push(wrap("sentinel-g-factor", validate::sentinel_g_factor(dt)));
    checks.push(wrap("d0-limit-identities", validate::d0_limit_identities()));
    checks.push(wrap("choi-multiplicativity", validate::choi_multiplicativity(if quick { 8 } else { 30 })));
    checks.push(wrap("weight-normalization", validate::weight_normalization(dt)));
    checks.push(wrap("convergence-order", validate::convergence_order(dt)));
    if !quick {
        checks.push(wrap("divisibility-cross-check", validate::divisibility_cross_check()));
        checks.push(wrap("copy-additivity", validate::copy_additivity(dt)));
    }
    checks
}

fn wrap(name: &'static str, result: std::result::Result<String, String>) -> Check {
    match result {
        Ok(detail) => Check { name, pass: true, detail },
        Err(detail) => Check { name, pass: false, detail },
    }
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    // validation has fixed physical parameters; only dt/scheme are taken
    // from the user so a deliberately broken step can be diagnosed
    let merged = Merged::load(&args.common)?;
    let dt = merged.f64_opt(args.common.dt, "dt")?.unwrap_or(0.05);
    let cfg = RunConfig {
        params: CavityParams::in_natural_units(0.01, 0.02, Distance::Infinite),
        t_end: 300.0,
        dt,
        scheme: Scheme::Direct,
        out: args.common.out.clone(),
    };
    let checks = run_validation(&cfg, args.quick);
    let mut all_pass = true;
    for c in &checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("check {:<28} {} ({})", c.name, status, c.detail);
        all_pass &= c.pass;
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_VALIDATION })
}

/// Run the CLI on explicit arguments; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let outcome: Result<i32> = match &cli.cmd {
        Cmd::Rates(a) => cmd_rates(a).map(|()| EXIT_OK),
        Cmd::Measure(a) => cmd_measure(a).map(|()| EXIT_OK),
        Cmd::Scan(a) => cmd_scan(a),
        Cmd::Critical(a) => cmd_critical(a).map(|()| EXIT_OK),
        Cmd::Natoms(a) => cmd_natoms(a).map(|()| EXIT_OK),
        Cmd::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(|x| x.to_string()).collect()
    }

    #[test]
    fn missing_gamma0_is_a_usage_error() {
        let code = run_from(argv("cavitynm rates --lambda 0.0165 --d 2.1 --t-end 5 --dt 0.5"));
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn distance_parsing() {
        assert_eq!(parse_distance("inf").unwrap(), Distance::Infinite);
        assert_eq!(parse_distance("2.5").unwrap(), Distance::Finite(2.5));
        assert!(parse_distance("two").is_err());
    }

    #[test]
    fn config_file_syntax() {
        let cfg = parse_config_text("gamma0 = 0.01\n# comment\nlambda=0.0165 # trailing\nd = inf\n")
            .unwrap();
        assert_eq!(cfg["gamma0"], "0.01");
        assert_eq!(cfg["lambda"], "0.0165");
        assert_eq!(cfg["d"], "inf");
        assert!(parse_config_text("gamma0 0.01").is_err());
    }

    #[test]
    fn flags_override_config_which_overrides_defaults() {
        let dir = std::env::temp_dir().join(format!("cavitynm-cli-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg_path = dir.join("run.cfg");
        std::fs::write(&cfg_path, "gamma0 = 0.02\nlambda = 0.03\ndt = 0.25\n").unwrap();

        let common = CommonArgs {
            gamma0: Some(0.01), // flag beats config
            lambda: None,       // from config
            omega0: None,       // default 1.0
            d: Some("1.0".into()),
            t_end: None, // default 350
            dt: None,    // from config
            scheme: None,
            out: None,
            config: Some(cfg_path),
        };
        let cfg = build_config(&common, true).unwrap();
        assert_eq!(cfg.params.gamma0, 0.01);
        assert_eq!(cfg.params.lambda, 0.03);
        assert_eq!(cfg.params.omega0, 1.0);
        assert_eq!(cfg.dt, 0.25);
        assert_eq!(cfg.t_end, 350.0);
        assert_eq!(cfg.scheme, Scheme::Fast);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rates_csv_to_file() {
        let dir = std::env::temp_dir().join(format!("cavitynm-rates-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let out = dir.join("rates.csv");
        let code = run_from(argv(&format!(
            "cavitynm rates --gamma0 0.01 --lambda 0.0165 --d 0 --t-end 5 --dt 0.25 --out {}",
            out.display()
        )));
        assert_eq!(code, EXIT_OK);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("t,gamma1,gamma2,S1,S2,g,g_uc\n"));
        // dark state: gamma2 column identically zero
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn natoms_runs() {
        let code = run_from(argv(
            "cavitynm natoms --gamma0 0.01 --lambda 0.0165 --n-max 3 --out /dev/null",
        ));
        assert_eq!(code, EXIT_OK);
    }

    #[test]
    fn scan_needs_range() {
        let code = run_from(argv("cavitynm scan --gamma0 0.01 --lambda 0.0165"));
        assert_eq!(code, EXIT_USAGE);
    }
}
