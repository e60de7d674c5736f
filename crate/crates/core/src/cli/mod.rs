//! The `ifmap` command-line front end.
//!
//! Settings come from an optional config file (see [`config`]) and are
//! overridden by command-line flags. Numbers are printed with 12 significant
//! digits. Exit codes: 0 on success, 1 for usage, parse and I/O errors, 2 when
//! a mathematical precondition fails.

pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::firing::{IFSystem, Regime};
use crate::isidist::{self, Regularity};
use crate::rotation::{self, LockingConfig, RotationMethod};
use crate::signal::SignalSpec;

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "ifmap",
    version,
    about = "Firing maps of periodically driven integrate-and-fire models"
)]
pub struct Cli {
    /// Config file with [section] headers and key = value lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Number of spikes or iterates.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    /// Leak rate; 0 is the perfect integrator.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Input current, e.g. `trig:2;1,0.8,0` or `pwc:0,1;0.5,0`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub signal: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Firing times and intervals as `index,time,isi` rows.
    Simulate,
    /// Rotation number and phase locking, as JSON.
    Rotation {
        #[arg(long)]
        no_locking: bool,
    },
    /// Rotation number along a one-parameter family, as CSV.
    Scan {
        /// Signal template; `{p}` and `{c*p}` are replaced by the parameter.
        #[arg(long, allow_hyphen_values = true)]
        family: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        locking: bool,
    },
    /// Interspike-interval histogram (CSV) and summary (JSON).
    Isi {
        /// Summary JSON path (default: standard error).
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        /// Period tested by the classifier (default: the locking period, or 1).
        #[arg(long)]
        period: Option<usize>,
        #[arg(long)]
        cluster_tol: Option<f64>,
        #[arg(long)]
        no_classify: bool,
    },
    /// Perfect-integrator interspike-interval density as `y,delta` rows.
    Density {
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        root_grid: Option<usize>,
        /// Skip the irrational-rotation check.
        #[arg(long)]
        unchecked: bool,
    },
    /// Distance between two systems: `{sup_phi_dev, sup_dphi_dev, d_F_isi}`.
    Compare {
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        signal2: Option<String>,
        #[arg(long)]
        grid: Option<usize>,
    },
}

/// Formats with 12 significant digits in the style of C's `%.12g`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    fmt_num(x).parse().unwrap_or(x)
}

fn num(x: f64) -> Value {
    json!(round12(x))
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Errors are reported on standard error.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_precondition() {
                2
            } else {
                1
            }
        }
    }
}

/// Config file settings overridden by flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
            .parse()?,
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = cli.tol {
        cfg.tol = Some(v);
    }
    if let Some(v) = cli.n {
        cfg.n = v;
    }
    if let Some(v) = cli.t0 {
        cfg.t0 = v;
    }
    if let Some(v) = cli.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = &cli.signal {
        cfg.signal = Some(v.parse()?);
    }
    match &cli.command {
        Command::Simulate => {}
        Command::Rotation { no_locking } => {
            if *no_locking {
                cfg.analyses.locking = false;
            }
        }
        Command::Scan {
            family,
            from,
            to,
            step,
            locking,
        } => {
            if let Some(v) = family {
                cfg.scan.family = Some(v.clone());
            }
            if let Some(v) = from {
                cfg.scan.from = *v;
            }
            if let Some(v) = to {
                cfg.scan.to = *v;
            }
            if let Some(v) = step {
                cfg.scan.step = *v;
            }
            if *locking {
                cfg.scan.locking = true;
            }
        }
        Command::Isi {
            summary,
            bins,
            burn_in,
            period,
            cluster_tol,
            no_classify,
        } => {
            if let Some(v) = summary {
                cfg.summary = Some(v.clone());
            }
            if let Some(v) = bins {
                cfg.isi.bins = *v;
            }
            if let Some(v) = burn_in {
                cfg.isi.burn_in = *v;
            }
            if let Some(v) = period {
                cfg.isi.period = Some(*v);
            }
            if let Some(v) = cluster_tol {
                cfg.isi.cluster_tol = *v;
            }
            if *no_classify {
                cfg.analyses.classify = false;
            }
        }
        Command::Density {
            summary,
            points,
            root_grid,
            unchecked,
        } => {
            if let Some(v) = summary {
                cfg.summary = Some(v.clone());
            }
            if let Some(v) = points {
                cfg.density.points = *v;
            }
            if let Some(v) = root_grid {
                cfg.density.root_grid = *v;
            }
            if *unchecked {
                cfg.density.unchecked = true;
            }
        }
        Command::Compare { sigma2, signal2, grid } => {
            if let Some(v) = sigma2 {
                cfg.compare.sigma = Some(*v);
            }
            if let Some(v) = signal2 {
                cfg.compare.signal = Some(v.parse()?);
            }
            if let Some(v) = grid {
                cfg.compare.grid = *v;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match cli.command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::Rotation { .. } => cmd_rotation(&cfg),
        Command::Scan { .. } => cmd_scan(&cfg),
        Command::Isi { .. } => cmd_isi(&cfg),
        Command::Density { .. } => cmd_density(&cfg),
        Command::Compare { .. } => cmd_compare(&cfg),
    }
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn write_json(path: Option<&Path>, value: &Value, fallback_stderr: bool) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    match (path, fallback_stderr) {
        (None, true) => eprintln!("{text}"),
        _ => {
            let mut w = open(path)?;
            writeln!(w, "{text}")?;
            w.flush()?;
        }
    }
    Ok(())
}

fn system_from(sigma: f64, spec: Option<&SignalSpec>) -> Result<IFSystem> {
    let spec = spec.ok_or_else(|| Error::InvalidArgument("no input signal given (use --signal)".into()))?;
    IFSystem::new(sigma, spec.build()?)
}

fn system(cfg: &RunConfig) -> Result<IFSystem> {
    system_from(cfg.sigma, cfg.signal.as_ref())
}

fn locking_config(cfg: &RunConfig) -> LockingConfig {
    let mut lc = LockingConfig::default();
    if let Some(t) = cfg.tol {
        lc.rotation_tol = t;
    }
    lc
}

/// Writes the orbit as `index,time,isi`, one row per spike.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let sys = system(cfg)?;
    let orbit = sys.iterate(cfg.t0, cfg.n)?;
    let mut w = open(cfg.out.as_deref())?;
    writeln!(w, "index,time,isi")?;
    for (i, (t, d)) in orbit.times.iter().zip(&orbit.isi).enumerate() {
        writeln!(w, "{},{},{}", i + 1, fmt_num(*t), fmt_num(*d))?;
    }
    w.flush()?;
    Ok(())
}

/// Rotation number as JSON. The perfect integrator uses the closed form
/// `1/∫f`; otherwise `n` iterates are used, raised to `1/tol` when a
/// tolerance is given.
pub fn cmd_rotation(cfg: &RunConfig) -> Result<()> {
    let sys = system(cfg)?;
    let est = match (sys.is_perfect_integrator(), rotation::pi_rotation(sys.signal())) {
        (true, Ok(e)) => e,
        _ => {
            let n = match cfg.tol {
                Some(t) => cfg.n.max((1.0 / t).ceil() as usize + 1),
                None => cfg.n,
            };
            rotation::rotation_number(&sys, cfg.t0, n)?
        }
    };
    let mut out = json!({
        "rho": num(est.value),
        "error_bound": num(est.error_bound),
        "n_iterates": est.n_iterates,
        "method": match est.method {
            RotationMethod::IterateBound => "iterate_bound",
            RotationMethod::PiClosedForm => "pi_closed_form",
        },
    });
    if cfg.analyses.locking {
        let lock = rotation::detect_locking_from(&sys, &est, &locking_config(cfg))?;
        out["locked"] = json!(lock.locked);
        out["p"] = json!(lock.p);
        out["q"] = json!(lock.q);
        out["residual"] = num(lock.residual);
    }
    write_json(cfg.out.as_deref(), &out, false)
}

/// Replaces `{p}`, `{c*p}` and `{p*c}` in `template` by the parameter value.
pub fn instantiate(template: &str, p: f64) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open_at) = rest.find('{') {
        out.push_str(&rest[..open_at]);
        let close = rest[open_at..]
            .find('}')
            .ok_or_else(|| Error::Parse(format!("unclosed '{{' in family {template:?}")))?;
        let expr = rest[open_at + 1..open_at + close].replace(' ', "");
        let value = if expr == "p" {
            p
        } else if let Some(c) = expr.strip_suffix("*p") {
            c.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad placeholder {{{expr}}}")))?
                * p
        } else if let Some(c) = expr.strip_prefix("p*") {
            p * c
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad placeholder {{{expr}}}")))?
        } else {
            return Err(Error::Parse(format!("bad placeholder {{{expr}}}")));
        };
        out.push_str(&value.to_string());
        rest = &rest[open_at + close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// `from, from + step, ...` up to `to` inclusive; empty when `to < from`.
pub fn param_range(from: f64, to: f64, step: f64) -> Vec<f64> {
    if !(to >= from) {
        return Vec::new();
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| round12(from + i as f64 * step)).collect()
}

/// Staircase CSV over the configured parameter range.
pub fn cmd_scan(cfg: &RunConfig) -> Result<()> {
    let family = cfg
        .scan
        .family
        .clone()
        .ok_or_else(|| Error::InvalidArgument("scan needs a family template (use --family)".into()))?;
    // catch template syntax errors before any work
    instantiate(&family, 0.0)?;
    let params = param_range(cfg.scan.from, cfg.scan.to, cfg.scan.step);
    let lc = locking_config(cfg);
    let sigma = cfg.sigma;
    let points = rotation::staircase_scan(
        |p| {
            let spec: SignalSpec = instantiate(&family, p)?.parse()?;
            IFSystem::new(sigma, spec.build()?)
        },
        &params,
        cfg.n,
        cfg.scan.locking.then_some(&lc),
    );
    let mut w = open(cfg.out.as_deref())?;
    rotation::write_scan_csv(&mut w, &points, fmt_num)?;
    w.flush()?;
    Ok(())
}

fn regularity_json(r: &Regularity) -> Value {
    match r {
        Regularity::Periodic { q } => json!({"kind": "periodic", "q": q}),
        Regularity::AsymptoticallyPeriodic { q } => json!({"kind": "asymptotically_periodic", "q": q}),
        Regularity::AlmostStronglyRecurrent { n_bound, window } => {
            json!({"kind": "almost_strongly_recurrent", "n_bound": n_bound, "window": window})
        }
        Regularity::Unclassified => json!({"kind": "unclassified"}),
    }
}

/// Histogram of the `n` intervals from `t0` plus a summary JSON.
pub fn cmd_isi(cfg: &RunConfig) -> Result<()> {
    let sys = system(cfg)?;
    let orbit = sys.iterate(cfg.t0, cfg.n)?;
    let isi = isidist::isi_sequence(&orbit)?;
    let dist = isidist::empirical_isi_dist(&isi)?;
    let range = if sys.regime() == Regime::StrictLif {
        Some(isidist::displacement_range(&sys, 1024)?)
    } else {
        None
    };
    let (lo, hi) = isidist::padded_range(range.unwrap_or((dist.min(), dist.max())));
    let hist = dist.histogram(lo, hi, cfg.isi.bins);
    let mut w = open(cfg.out.as_deref())?;
    hist.write_csv(&mut w, fmt_num)?;
    w.flush()?;

    let rho = (orbit.last() - orbit.t0) / orbit.len() as f64;
    let classification = if cfg.analyses.classify {
        let q = match cfg.isi.period {
            Some(q) => q,
            None => {
                let est = rotation::rotation_number(&sys, cfg.t0, cfg.n)?;
                let lock = rotation::detect_locking_from(&sys, &est, &LockingConfig::default())?;
                if lock.locked {
                    lock.q as usize
                } else {
                    1
                }
            }
        };
        let eps = cfg.tol.unwrap_or(1e-6);
        match isidist::classify_regularity(&isi, q, eps, cfg.isi.burn_in) {
            Ok(r) => regularity_json(&r),
            Err(e @ Error::InsufficientData { .. }) => json!({"kind": "insufficient_data", "message": e.to_string()}),
            Err(e) => return Err(e),
        }
    } else {
        Value::Null
    };
    let summary = json!({
        "n": isi.len(),
        "mean": num(dist.mean()),
        "std_dev": num(dist.std_dev()),
        "min": num(dist.min()),
        "max": num(dist.max()),
        "rotation_estimate": num(rho),
        "error_bound": num(1.0 / orbit.len() as f64),
        "displacement_range": range.map(|(a, b)| json!([num(a), num(b)])),
        "occupied_bins": hist.occupied(),
        "interior_empty_bins": hist.interior_gaps(),
        "clusters": dist.clusters(cfg.isi.cluster_tol).len(),
        "classification": classification,
    });
    write_json(cfg.summary.as_deref(), &summary, true)
}

/// Perfect-integrator density on a Chebyshev grid over the support.
pub fn cmd_density(cfg: &RunConfig) -> Result<()> {
    if cfg.sigma != 0.0 {
        return Err(Error::IllPosed(
            "the density formula is available for the perfect integrator (sigma = 0) only".into(),
        ));
    }
    let spec = cfg
        .signal
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("no input signal given (use --signal)".into()))?;
    let signal = spec.build()?;
    let roots = cfg.density.root_grid;
    let compute = |grid: &[f64]| {
        if cfg.density.unchecked {
            isidist::pi_isi_density(&IFSystem::perfect(signal.clone())?, grid, roots)
        } else {
            isidist::isi_density_pi(&signal, grid, roots)
        }
    };
    let (lo, hi) = compute(&[])?.support;
    let curve = compute(&isidist::chebyshev_grid(lo, hi, cfg.density.points))?;
    let mut w = open(cfg.out.as_deref())?;
    curve.write_csv(&mut w, fmt_num)?;
    w.flush()?;
    if cfg.summary.is_some() {
        let summary = json!({
            "support": [num(lo), num(hi)],
            "integral": num(curve.integral()),
            "critical_values": curve.critical_values.iter().map(|v| num(*v)).collect::<Vec<_>>(),
            "singular_points": curve.singular.iter().filter(|s| **s).count(),
        });
        write_json(cfg.summary.as_deref(), &summary, false)?;
    }
    Ok(())
}

/// Perturbation report between the base system and `[compare]`.
pub fn cmd_compare(cfg: &RunConfig) -> Result<()> {
    let base = system(cfg)?;
    let pert = system_from(
        cfg.compare.sigma.unwrap_or(cfg.sigma),
        cfg.compare.signal.as_ref().or(cfg.signal.as_ref()),
    )?;
    let report = isidist::perturbation_harness(&base, &pert, cfg.compare.grid, cfg.n)?;
    let out = json!({
        "sup_phi_dev": num(report.sup_phi_dev),
        "sup_dphi_dev": num(report.sup_dphi_dev),
        "d_F_isi": num(report.d_f_isi),
    });
    write_json(cfg.out.as_deref(), &out, false)
}
