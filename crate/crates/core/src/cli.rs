//! Command-line front end: sweeps, figure data and oracle comparison reports.
//!
//! Every command writes CSV (or the density-matrix text dump) to `--out` or
//! stdout. Parameters may also come from a flat `key = value` file given with
//! `--config`; its entries are applied before the command-line flags, so flags
//! win. Exit codes: 0 success, 1 tolerance or convergence failure, 2 usage error.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cat::{cat_to_csv, components_to_coupling, ideal_cat_state, noisy_cat_density};
use crate::compare::{
    compare_case, default_suite, oracle_expect_a, oracle_photon_number, report_csv, run_suite,
    CompareCase, OracleSettings,
};
use crate::error::{Error, Result};
use crate::fock::{required_coherent_levels, state_fidelity, FockDims, FrameConfig};
use crate::kernels::{CouplingProfile, KernelEval};
use crate::observables::{
    cat_fidelity, cat_fidelity_series, expect_a_trace, fidelity_bounds, fmt_f64, photon_number,
    FidelityTruncation, InitialState, SystemParams,
};
use crate::quad::QuadConfig;
use crate::wigner::{negativity_volume, wigner, Axis, GridSpec};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Parser)]
#[command(
    name = "optoloss",
    version,
    about = "Lossy optomechanical cat states: closed forms and Fock-space oracle"
)]
struct Cli {
    /// Worker threads for parameter sweeps.
    #[arg(long, global = true, env = "OPTOLOSS_JOBS")]
    jobs: Option<usize>,

    /// Flat `key = value` parameter file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (stdout when omitted).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// F_a, F_+, F_-, A and G on a τ grid.
    Fcoeffs(FcoeffsArgs),
    /// Photon number |α|² e^{-κτ}, optionally against the oracle.
    Photon(PhotonArgs),
    /// Quadrature trajectories X(τ), P(τ) for several loss rates.
    Quadratures(QuadraturesArgs),
    /// Cat fidelity and its bounds against κ.
    Fidelity(FidelityArgs),
    /// Wigner grids of noisy cat states.
    Wigner(WignerArgs),
    /// Analytic vs oracle deviations; exits 1 if any exceeds its tolerance.
    OracleCompare(CompareArgs),
    /// Ideal cat vector, or the noisy cat density matrix when --kappa is given.
    Cat(CatArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct CouplingArgs {
    /// Constant coupling g̃₀.
    #[arg(long, conflicts_with = "profile")]
    g0: Option<f64>,
    /// Tabulated coupling, CSV with header `tau,g`.
    #[arg(long)]
    profile: Option<PathBuf>,
}

impl CouplingArgs {
    fn profile(&self, default_g0: f64) -> Result<CouplingProfile> {
        match &self.profile {
            Some(path) => CouplingProfile::from_csv(path),
            None => Ok(CouplingProfile::Constant(self.g0.unwrap_or(default_g0))),
        }
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct GridArgs {
    #[arg(long, default_value_t = TWO_PI)]
    tau_max: f64,
    /// Number of τ intervals.
    #[arg(long, default_value_t = 64)]
    steps: usize,
}

impl GridArgs {
    fn taus(&self) -> Result<Vec<f64>> {
        if !(self.tau_max >= 0.0 && self.tau_max.is_finite()) {
            return Err(Error::Domain(format!(
                "tau-max must be finite and >= 0, got {}",
                self.tau_max
            )));
        }
        if self.tau_max == 0.0 {
            return Ok(vec![0.0]);
        }
        if self.steps == 0 {
            return Err(Error::Domain("steps must be positive".into()));
        }
        Ok((0..=self.steps)
            .map(|k| self.tau_max * k as f64 / self.steps as f64)
            .collect())
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct StateArgs {
    /// Optical amplitude (real part).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha_im: f64,
    /// Mechanical coherent amplitude (real part).
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    beta_im: f64,
    /// Thermal mechanics with this mean phonon number instead of a coherent state.
    #[arg(long)]
    nbar: Option<f64>,
}

impl StateArgs {
    fn init(&self) -> Result<InitialState> {
        let alpha = Complex64::new(self.alpha, self.alpha_im);
        let init = match self.nbar {
            Some(n) => {
                if self.beta != 0.0 || self.beta_im != 0.0 {
                    return Err(Error::Domain(
                        "--nbar and --beta are mutually exclusive".into(),
                    ));
                }
                InitialState::thermal(alpha, n)
            }
            None => InitialState::coherent(alpha, Complex64::new(self.beta, self.beta_im)),
        };
        init.validate()?;
        Ok(init)
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct FcoeffsArgs {
    #[command(flatten)]
    coupling: CouplingArgs,
    #[arg(long, default_value_t = TWO_PI)]
    tau_max: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct PhotonArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha_im: f64,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "0,0.1,0.5")]
    kappa: Vec<f64>,
    #[command(flatten)]
    grid: GridArgs,
    /// Append lab-frame oracle columns.
    #[arg(long)]
    oracle: bool,
    /// Coupling used by the oracle Hamiltonian.
    #[arg(long, default_value_t = 1.0)]
    g0: f64,
    #[arg(long, default_value_t = 12)]
    n_mech: usize,
    /// Largest allowed |analytic − oracle|.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct QuadraturesArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Loss rates; κ = 0 is always included.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "0.2,0.5")]
    kappa: Vec<f64>,
    #[command(flatten)]
    grid: GridArgs,
    /// Append co-moving frame oracle columns.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 90)]
    n_mech: usize,
    #[arg(long, default_value_t = 1e-4)]
    leak_tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct FidelityArgs {
    /// Mean photon numbers |α|² (real α).
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', conflicts_with = "alpha")]
    alpha2: Option<Vec<f64>>,
    /// Amplitudes |α| (alternative to --alpha2).
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    g0: f64,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "0,0.01,0.02,0.03,0.04,0.05,0.06,0.07,0.08,0.09,0.1")]
    kappa: Vec<f64>,
    /// Also evaluate the loss series truncated at this order (0..=3).
    #[arg(long)]
    series_order: Option<usize>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct WignerArgs {
    #[arg(long, default_value_t = 3f64.sqrt())]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha_im: f64,
    /// Cat component counts, mapped to couplings 1/2, 1/√6, 1/(2√2).
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "2,3,4")]
    components: Vec<u32>,
    /// Explicit couplings; replaces --components.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    g0: Option<Vec<f64>>,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "0,0.05,0.3")]
    kappa: Vec<f64>,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    grid_min: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    grid_max: f64,
    #[arg(long, default_value_t = 201)]
    grid_count: usize,
    /// Directory receiving one long CSV and one dense matrix per (g0, κ).
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 64)]
    n_mech: usize,
    #[arg(long, default_value_t = 1e-4)]
    leak_tol: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct CompareArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Compare a single case instead of the default suite.
    #[arg(long)]
    g0: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 12)]
    n_mech_lab: usize,
    #[arg(long, default_value_t = 90)]
    n_mech_frame: usize,
    #[arg(long, default_value_t = 90)]
    n_mech_fidelity: usize,
    #[arg(long, default_value_t = 1e-4)]
    leak_tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 16)]
    samples: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct CatArgs {
    #[arg(long, default_value_t = 3f64.sqrt())]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha_im: f64,
    #[arg(long, default_value_t = 2, conflicts_with = "g0")]
    components: u32,
    #[arg(long)]
    g0: Option<f64>,
    /// Fock levels kept (default: enough for a 1e-12 tail).
    #[arg(long)]
    levels: Option<usize>,
    /// Output the loss-degraded density matrix instead of the ideal vector.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 64)]
    n_mech: usize,
    #[arg(long, default_value_t = 1e-4)]
    leak_tol: f64,
}

/// Exit status for a library error: invalid input is a usage error.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Parse(_) => 2,
        _ => 1,
    }
}

const SUBCOMMANDS: [&str; 7] = [
    "fcoeffs",
    "photon",
    "quadratures",
    "fidelity",
    "wigner",
    "oracle-compare",
    "cat",
];

/// Turns a `key = value` file into flags. `true` becomes a bare switch and
/// `false` drops the key.
fn config_flags(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("config line {}: expected `key = value`", i + 1))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(Error::Parse(format!("config line {}: invalid key", i + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Inserts config-file flags right after the subcommand name so that later
/// command-line flags override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
    let extra = config_flags(&text)?;
    let Some(pos) = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(args);
    };
    let mut out = args[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let jobs = match cli.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be positive");
            return 2;
        }
        Some(n) => n,
        None => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_kappas(kappas: &[f64]) -> Result<()> {
    if kappas.is_empty() {
        return Err(Error::Domain("at least one kappa is required".into()));
    }
    for &k in kappas {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!(
                "kappa must be finite and >= 0, got {k}"
            )));
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Fcoeffs(a) => cmd_fcoeffs(a, out),
        Command::Photon(a) => cmd_photon(a, out),
        Command::Quadratures(a) => cmd_quadratures(a, out),
        Command::Fidelity(a) => cmd_fidelity(a, out),
        Command::Wigner(a) => cmd_wigner(a, out),
        Command::OracleCompare(a) => cmd_oracle_compare(a, out),
        Command::Cat(a) => cmd_cat(a, out),
    }
}

fn cmd_fcoeffs(a: &FcoeffsArgs, out: Option<&Path>) -> Result<i32> {
    let grid = GridArgs {
        tau_max: a.tau_max,
        steps: a.steps,
    };
    let taus = grid.taus()?;
    let profile = a.coupling.profile(1.0)?;
    let kernels = KernelEval::new(&profile, a.tau_max, &QuadConfig::default())?;
    let mut text = String::from("tau,F_a,F_plus,F_minus,A,ReG,ImG\n");
    for &t in &taus {
        let fc = kernels.at(t);
        let g = fc.displacement_g();
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(fc.f_a),
            fmt_f64(fc.f_plus),
            fmt_f64(fc.f_minus),
            fmt_f64(fc.phase_a()),
            fmt_f64(g.re),
            fmt_f64(g.im)
        );
    }
    emit(out, &text)?;
    Ok(0)
}

fn cmd_photon(a: &PhotonArgs, out: Option<&Path>) -> Result<i32> {
    check_kappas(&a.kappa)?;
    let taus = a.grid.taus()?;
    let alpha = Complex64::new(a.alpha, a.alpha_im);
    let init = InitialState::coherent(alpha, Complex64::new(0.0, 0.0));
    init.validate()?;
    let profile = CouplingProfile::Constant(a.g0);
    let oracle: Vec<Option<Vec<f64>>> = a
        .kappa
        .par_iter()
        .map(|&k| {
            if a.oracle {
                oracle_photon_number(&init, &profile, k, &taus, a.n_mech).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let mut text = String::from(if a.oracle {
        "kappa,tau,N,N_oracle\n"
    } else {
        "kappa,tau,N\n"
    });
    let mut worst = 0.0f64;
    for (&k, orc) in a.kappa.iter().zip(&oracle) {
        for (i, &t) in taus.iter().enumerate() {
            let n = photon_number(alpha, k, t)?;
            let _ = write!(text, "{},{},{}", fmt_f64(k), fmt_f64(t), fmt_f64(n));
            if let Some(o) = orc {
                worst = worst.max((o[i] - n).abs());
                let _ = write!(text, ",{}", fmt_f64(o[i]));
            }
            text.push('\n');
        }
    }
    emit(out, &text)?;
    Ok(tolerance_status(a.oracle, worst, a.tol))
}

fn tolerance_status(checked: bool, worst: f64, tol: f64) -> i32 {
    if checked && !(worst < tol) {
        eprintln!("oracle deviation {worst:.3e} exceeds tolerance {tol:.1e}");
        1
    } else {
        0
    }
}

fn cmd_quadratures(a: &QuadraturesArgs, out: Option<&Path>) -> Result<i32> {
    let mut kappas = a.kappa.clone();
    check_kappas(&kappas)?;
    if !kappas.contains(&0.0) {
        kappas.insert(0, 0.0);
    }
    let taus = a.grid.taus()?;
    let init = a.state.init()?;
    let profile = a.coupling.profile(1.0)?;
    let quad = QuadConfig::default();
    let rows: Vec<(Vec<Complex64>, Option<Vec<Complex64>>)> = kappas
        .par_iter()
        .map(|&k| {
            let sys = SystemParams {
                g_profile: profile.clone(),
                kappa: k,
                omega_ratio: 0.0,
            };
            let analytic = expect_a_trace(&init, &sys, &taus, &quad)?.values;
            let oracle = if a.oracle {
                Some(oracle_expect_a(
                    &init, &profile, k, &taus, a.n_mech, a.leak_tol,
                )?)
            } else {
                None
            };
            Ok((analytic, oracle))
        })
        .collect::<Result<_>>()?;
    let mut text = String::from(if a.oracle {
        "kappa,tau,X,P,X_oracle,P_oracle\n"
    } else {
        "kappa,tau,X,P\n"
    });
    let s2 = 2f64.sqrt();
    let mut worst = 0.0f64;
    for (&k, (analytic, oracle)) in kappas.iter().zip(&rows) {
        for (i, &t) in taus.iter().enumerate() {
            let v = analytic[i];
            let _ = write!(
                text,
                "{},{},{},{}",
                fmt_f64(k),
                fmt_f64(t),
                fmt_f64(s2 * v.re),
                fmt_f64(s2 * v.im)
            );
            if let Some(o) = oracle {
                worst = worst.max((o[i] - v).norm());
                let _ = write!(text, ",{},{}", fmt_f64(s2 * o[i].re), fmt_f64(s2 * o[i].im));
            }
            text.push('\n');
        }
    }
    emit(out, &text)?;
    Ok(tolerance_status(a.oracle, worst, a.tol))
}

fn cmd_fidelity(a: &FidelityArgs, out: Option<&Path>) -> Result<i32> {
    check_kappas(&a.kappa)?;
    let alpha2: Vec<f64> = match (&a.alpha2, &a.alpha) {
        (Some(v), _) => v.clone(),
        (None, Some(v)) => v.iter().map(|x| x * x).collect(),
        (None, None) => vec![1.0, 3.0],
    };
    if alpha2.is_empty() || alpha2.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::Domain(
            "alpha2 values must be finite and >= 0".into(),
        ));
    }
    if let Some(q) = a.series_order {
        if q > 3 {
            return Err(Error::Domain(format!(
                "series order must be at most 3, got {q}"
            )));
        }
    }
    let points: Vec<(f64, f64)> = alpha2
        .iter()
        .flat_map(|&x| a.kappa.iter().map(move |&k| (x, k)))
        .collect();
    let rows: Vec<(f64, f64, f64, Option<f64>)> = points
        .par_iter()
        .map(|&(x, k)| {
            let alpha = Complex64::new(x.sqrt(), 0.0);
            let f = cat_fidelity(alpha, a.g0, k, &FidelityTruncation::for_alpha(alpha))?;
            let (lo, hi) = fidelity_bounds(alpha, k)?;
            let series = match a.series_order {
                Some(q) => Some(cat_fidelity_series(
                    alpha,
                    a.g0,
                    k,
                    q,
                    &QuadConfig::default(),
                )?),
                None => None,
            };
            Ok((f, lo, hi, series))
        })
        .collect::<Result<_>>()?;
    let mut text = String::from(if a.series_order.is_some() {
        "alpha2,kappa,F,lower,upper,F_series\n"
    } else {
        "alpha2,kappa,F,lower,upper\n"
    });
    for (&(x, k), &(f, lo, hi, series)) in points.iter().zip(&rows) {
        let _ = write!(
            text,
            "{},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(k),
            fmt_f64(f),
            fmt_f64(lo),
            fmt_f64(hi)
        );
        if let Some(s) = series {
            let _ = write!(text, ",{}", fmt_f64(s));
        }
        text.push('\n');
    }
    emit(out, &text)?;
    Ok(0)
}

fn cmd_wigner(a: &WignerArgs, out: Option<&Path>) -> Result<i32> {
    check_kappas(&a.kappa)?;
    let couplings: Vec<f64> = match &a.g0 {
        Some(g) => g.clone(),
        None => a
            .components
            .iter()
            .map(|&k| components_to_coupling(k))
            .collect::<Result<_>>()?,
    };
    let axis = Axis::new(a.grid_min, a.grid_max, a.grid_count)?;
    let spec = GridSpec { x: axis, p: axis };
    let alpha = Complex64::new(a.alpha, a.alpha_im);
    let n_cav = required_coherent_levels(alpha, 1e-12).max(2);
    let dims = FockDims::new(n_cav, a.n_mech)?;
    let cfg = FrameConfig {
        leak_tol: a.leak_tol,
        ..FrameConfig::default()
    };
    fs::create_dir_all(&a.out_dir)?;
    let points: Vec<(usize, f64, usize, f64)> = couplings
        .iter()
        .enumerate()
        .flat_map(|(i, &g)| a.kappa.iter().enumerate().map(move |(j, &k)| (i, g, j, k)))
        .collect();
    let rows: Vec<String> = points
        .par_iter()
        .map(|&(i, g, j, k)| {
            let rho = noisy_cat_density(alpha, g, k, dims, &cfg)?;
            let w = wigner(&rho, &spec)?;
            let stem = format!("wigner_g{i}_k{j}");
            fs::write(a.out_dir.join(format!("{stem}.csv")), w.to_long_csv())?;
            fs::write(
                a.out_dir.join(format!("{stem}_matrix.txt")),
                w.to_matrix_text(),
            )?;
            Ok(format!(
                "{},{},{},{},{},{stem}.csv",
                fmt_f64(g),
                fmt_f64(k),
                fmt_f64(negativity_volume(&w)),
                fmt_f64(w.min()),
                fmt_f64(w.integral())
            ))
        })
        .collect::<Result<_>>()?;
    let mut text = String::from("g0,kappa,negativity_volume,min_w,integral,file\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    emit(out, &text)?;
    Ok(0)
}

fn cmd_oracle_compare(a: &CompareArgs, out: Option<&Path>) -> Result<i32> {
    let settings = OracleSettings {
        n_mech_lab: a.n_mech_lab,
        n_mech_frame: a.n_mech_frame,
        n_mech_fidelity: a.n_mech_fidelity,
        leak_tol: a.leak_tol,
        tolerance: a.tol,
        samples: a.samples,
    };
    let rows = if a.g0.is_none() && a.kappa.is_none() {
        run_suite(&default_suite(), &settings)?
    } else {
        let init = a.state.init()?;
        let kappa = a.kappa.unwrap_or(0.0);
        check_kappas(&[kappa])?;
        compare_case(
            &CompareCase::new(init, a.g0.unwrap_or(1.0), kappa),
            &settings,
        )?
    };
    emit(out, &report_csv(&rows))?;
    let failed = rows.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        eprintln!("{failed} comparison(s) exceed tolerance");
        return Ok(1);
    }
    Ok(0)
}

fn cmd_cat(a: &CatArgs, out: Option<&Path>) -> Result<i32> {
    let alpha = Complex64::new(a.alpha, a.alpha_im);
    let g0 = match a.g0 {
        Some(g) => g,
        None => components_to_coupling(a.components)?,
    };
    let n = a
        .levels
        .unwrap_or_else(|| required_coherent_levels(alpha, 1e-12).max(2));
    let ideal = ideal_cat_state(alpha, g0, n)?;
    match a.kappa {
        None => emit(out, &cat_to_csv(&ideal))?,
        Some(k) => {
            check_kappas(&[k])?;
            let cfg = FrameConfig {
                leak_tol: a.leak_tol,
                ..FrameConfig::default()
            };
            let rho = noisy_cat_density(alpha, g0, k, FockDims::new(n, a.n_mech)?, &cfg)?;
            let fidelity = state_fidelity(&ideal, &rho)?;
            let mut params = serde_json::Map::new();
            params.insert("alpha_re".into(), alpha.re.into());
            params.insert("alpha_im".into(), alpha.im.into());
            params.insert("g0".into(), g0.into());
            params.insert("kappa".into(), k.into());
            params.insert("tau".into(), TWO_PI.into());
            params.insert("fidelity".into(), fidelity.into());
            emit(out, &rho.to_text(params))?;
            eprintln!("fidelity against the ideal cat: {}", fmt_f64(fidelity));
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_become_flags() {
        let flags =
            config_flags("# sweep\ng0 = 0.5\ntau_max=3\noracle = true\nquiet = false\n").unwrap();
        let flags: Vec<String> = flags
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(flags, ["--g0", "0.5", "--tau-max", "3", "--oracle"]);
        assert!(config_flags("novalue\n").is_err());
    }

    #[test]
    fn config_is_inserted_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "g0 = 0.25\n").unwrap();
        let args: Vec<OsString> = [
            "optoloss",
            "--config",
            path.to_str().unwrap(),
            "fcoeffs",
            "--g0",
            "1",
        ]
        .iter()
        .map(OsString::from)
        .collect();
        let expanded = expand_config(args).unwrap();
        let s: Vec<String> = expanded
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(&s[3..], ["fcoeffs", "--g0", "0.25", "--g0", "1"]);
        let cli = Cli::try_parse_from(s).unwrap();
        match cli.command {
            Command::Fcoeffs(f) => assert_eq!(f.coupling.g0, Some(1.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lists_are_replaced_by_later_flags() {
        let cli = Cli::try_parse_from([
            "optoloss", "fidelity", "--kappa", "0.1,0.2", "--kappa", "0.3",
        ])
        .unwrap();
        match cli.command {
            Command::Fidelity(f) => assert_eq!(f.kappa, vec![0.3]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_edge_cases() {
        let g = GridArgs {
            tau_max: 0.0,
            steps: 10,
        };
        assert_eq!(g.taus().unwrap(), vec![0.0]);
        let g = GridArgs {
            tau_max: 1.0,
            steps: 4,
        };
        assert_eq!(g.taus().unwrap().len(), 5);
        assert!(GridArgs {
            tau_max: -1.0,
            steps: 4
        }
        .taus()
        .is_err());
    }
}
