//! Command-line front end for the `warpmesh` library.
//!
//! Every subcommand emits machine-readable CSV (to stdout, or to `--output`)
//! and keeps human-oriented summaries on stderr, so redirected output is
//! always clean data. Identical invocations produce byte-identical CSV.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors, 3 when a
//! computation is asked to leave its numerical domain, 1 for I/O failures.

mod config;
mod wav;

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use warpmesh::analysis::{
    dc_realignment, dispersion_curve, find_peaks, match_modes, nominal_band_edge,
    predicted_modes, spectrum, theoretical_modes, warped_dispersion_curve, write_mode_table_csv,
    MatchPolicy,
};
use warpmesh::cost::{cost_report, reference_report, CostBasis};
use warpmesh::lattice::build_square_lattice;
use warpmesh::sim::{run_impulse_response, Scheme};
use warpmesh::warp::{warp_frequency, AllpassSpec};

use config::Settings;

const DEFAULT_SIDE: usize = 24;
const DEFAULT_STEPS: usize = 16_384;
const DEFAULT_FFT: usize = 65_536;
const DEFAULT_ALPHA: f64 = -0.45;
const DEFAULT_POINTS: usize = 512;
const DEFAULT_PROMINENCE_DB: f64 = 20.0;
const DEFAULT_SAMPLE_RATE: u32 = 44_100;
/// Reference rate multiplier the warped mesh is conventionally compared
/// against (a 9x-denser unwarped mesh run at 1.75x the sampling rate).
const REFERENCE_RATE_MULTIPLIER: f64 = 1.75;

/// Errors mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file, or parameter domain (exit 2).
    Config(String),
    /// A computation left its numerical domain (exit 3).
    Numerical(String),
    /// Filesystem or stream failure (exit 1).
    Io(io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Numerical(msg) => f.write_str(msg),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<warpmesh::Error> for CliError {
    fn from(e: warpmesh::Error) -> Self {
        match e {
            warpmesh::Error::NumericalDomain(_) => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn report(&self) -> ExitCode {
        eprintln!("error: {self}");
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        })
    }
}

/// Triangular waveguide-mesh simulation, dispersion analysis, and cost
/// reporting with allpass frequency warping.
#[derive(Parser)]
#[command(name = "warpmesh", version, about, max_term_width = 80)]
struct Cli {
    /// Key=value defaults file; command-line options win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export lattice geometry and adjacency as CSV.
    Lattice(LatticeArgs),
    /// Run an impulse response and export the probe signal.
    Simulate(SimulateArgs),
    /// Export a phase-speed accuracy curve for one propagation direction.
    Dispersion(DispersionArgs),
    /// Measure modal frequencies and tabulate them against predictions.
    Modes(ModesArgs),
    /// Export the frequency-warping map for one or more coefficients.
    WarpMap(WarpMapArgs),
    /// Print per-junction operation and memory cost tables.
    Cost(CostArgs),
}

/// Peak-assignment policy (see `modes --help`).
#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    /// Assign the candidate peak closest in frequency.
    Nearest,
    /// Assign the strongest candidate peak in the window.
    Strongest,
}

impl PolicyArg {
    fn into_policy(self) -> MatchPolicy {
        match self {
            PolicyArg::Nearest => MatchPolicy::Nearest,
            PolicyArg::Strongest => MatchPolicy::StrongestInWindow,
        }
    }
}

impl std::str::FromStr for PolicyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "nearest" => Ok(PolicyArg::Nearest),
            "strongest" => Ok(PolicyArg::Strongest),
            other => Err(format!(
                "unknown policy '{other}' (expected nearest or strongest)"
            )),
        }
    }
}

#[derive(Args)]
struct LatticeArgs {
    /// Square side length in waveguide sections [default: 24].
    #[arg(long)]
    side: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Update scheme: twm, wtwm, fds, or wfds [default: twm].
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Allpass coefficient in (-1, 0]; warped schemes only [default: -0.45].
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Square side length in waveguide sections [default: 24].
    #[arg(long)]
    side: Option<usize>,
    /// Number of time steps to record [default: 16384].
    #[arg(long)]
    steps: Option<usize>,
    /// Junction id receiving the unit impulse [default: center].
    #[arg(long)]
    input: Option<usize>,
    /// Junction id to record [default: center].
    #[arg(long)]
    probe: Option<usize>,
    /// Probe CSV destination; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Also export the probe as a mono 16-bit PCM WAV file.
    #[arg(long, value_name = "FILE")]
    audio: Option<PathBuf>,
    /// Sample rate stored in the WAV header [default: 44100].
    #[arg(long, value_name = "HZ")]
    sample_rate: Option<u32>,
}

#[derive(Args)]
struct DispersionArgs {
    /// Update scheme: twm, wtwm, fds, or wfds [default: twm].
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Allpass coefficient in (-1, 0]; warped schemes only [default: -0.45].
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Propagation direction in degrees from +x [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    direction: Option<f64>,
    /// Number of spatial-frequency samples [default: 512].
    #[arg(long)]
    points: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ModesArgs {
    /// Update scheme: twm, wtwm, fds, or wfds [default: twm].
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Allpass coefficient in (-1, 0]; warped schemes only [default: -0.45].
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Square side length in waveguide sections [default: 24].
    #[arg(long)]
    side: Option<usize>,
    /// Number of time steps to record [default: 16384].
    #[arg(long)]
    steps: Option<usize>,
    /// Zero-padded FFT length [default: 65536].
    #[arg(long)]
    fft: Option<usize>,
    /// Peak threshold in dB below the strongest bin [default: 20].
    #[arg(long)]
    prominence: Option<f64>,
    /// Peak-assignment policy [default: strongest].
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Highest ideal mode frequency to predict, in rad/sample
    /// [default: the nominal band edge].
    #[arg(long)]
    max_omega: Option<f64>,
    /// Mode table CSV destination; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Also export the probe magnitude spectrum as CSV.
    #[arg(long, value_name = "FILE")]
    spectrum: Option<PathBuf>,
}

#[derive(Args)]
struct WarpMapArgs {
    /// Comma-separated allpass coefficients [default: -0.45].
    #[arg(long, allow_negative_numbers = true, value_name = "LIST")]
    alphas: Option<String>,
    /// Number of frequency samples [default: 512].
    #[arg(long)]
    points: Option<usize>,
    /// Top of the evaluated frequency grid in rad/sample [default: pi].
    #[arg(long, value_name = "OMEGA")]
    max_omega: Option<f64>,
    /// CSV destination; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// Allpass coefficient used for the realignment summary [default: -0.45].
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Also print the one-multiplier allpass variant table.
    #[arg(long)]
    one_multiplier: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match &cli.config {
        Some(path) => match Settings::load(path) {
            Ok(s) => s,
            Err(e) => return e.report(),
        },
        None => Settings::default(),
    };
    let result = match cli.command {
        Command::Lattice(args) => cmd_lattice(args, &settings),
        Command::Simulate(args) => cmd_simulate(args, &settings),
        Command::Dispersion(args) => cmd_dispersion(args, &settings),
        Command::Modes(args) => cmd_modes(args, &settings),
        Command::WarpMap(args) => cmd_warp_map(args, &settings),
        Command::Cost(args) => cmd_cost(args, &settings),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

/// Streams CSV to `path`, or to stdout when no path is given.
fn with_output<F>(path: Option<&PathBuf>, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Resolves the allpass coefficient against the scheme.
///
/// Warped schemes default to -0.45; unwarped schemes reject an explicit
/// `--alpha` but tolerate one set in a shared config file (which may also
/// serve warped runs).
fn resolve_alpha(
    scheme: Scheme,
    flag: Option<f64>,
    settings: &Settings,
) -> Result<Option<f64>, CliError> {
    if scheme.is_warped() {
        let alpha = settings.resolve(flag, "alpha", DEFAULT_ALPHA)?;
        Ok(Some(alpha))
    } else if flag.is_some() {
        Err(CliError::Config(format!(
            "scheme {scheme} does not take an allpass coefficient"
        )))
    } else {
        Ok(None)
    }
}

fn cmd_lattice(args: LatticeArgs, settings: &Settings) -> Result<(), CliError> {
    let side = settings.resolve(args.side, "side", DEFAULT_SIDE)?;
    let lat = build_square_lattice(side)?;
    eprintln!(
        "lattice: side {side}, {} junctions ({} interior, {} rim), center junction {}",
        lat.num_junctions(),
        lat.num_interior(),
        lat.num_rim(),
        lat.center()
    );
    with_output(args.output.as_ref(), |w| lat.write_csv(w))
}

fn cmd_simulate(args: SimulateArgs, settings: &Settings) -> Result<(), CliError> {
    let scheme = settings.resolve(args.scheme, "scheme", Scheme::Twm)?;
    let alpha = resolve_alpha(scheme, args.alpha, settings)?;
    let side = settings.resolve(args.side, "side", DEFAULT_SIDE)?;
    let steps = settings.resolve(args.steps, "steps", DEFAULT_STEPS)?;

    let lat = build_square_lattice(side)?;
    let input = match settings.resolve_opt(args.input, "input")? {
        Some(idx) => lat.junction(idx)?,
        None => lat.center(),
    };
    let probe = match settings.resolve_opt(args.probe, "probe")? {
        Some(idx) => lat.junction(idx)?,
        None => lat.center(),
    };

    let record = run_impulse_response(&lat, scheme, alpha, steps, input, probe)?;
    eprintln!(
        "simulate: {scheme}{} on side {side}, {steps} steps, impulse at {input}, probe at {probe}",
        match alpha {
            Some(a) => format!(" (alpha {a})"),
            None => String::new(),
        }
    );

    if let Some(path) = &args.audio {
        let rate = settings.resolve(args.sample_rate, "sample-rate", DEFAULT_SAMPLE_RATE)?;
        let mut w = BufWriter::new(File::create(path)?);
        wav::write_wav(&mut w, &record.samples, rate)?;
        w.flush()?;
        eprintln!("audio: wrote {} at {rate} Hz", path.display());
    }

    with_output(args.output.as_ref(), |w| record.write_csv(w))
}

fn cmd_dispersion(args: DispersionArgs, settings: &Settings) -> Result<(), CliError> {
    let scheme = settings.resolve(args.scheme, "scheme", Scheme::Twm)?;
    let alpha = resolve_alpha(scheme, args.alpha, settings)?;
    let direction_deg = settings.resolve(args.direction, "direction", 0.0)?;
    let points = settings.resolve(args.points, "points", DEFAULT_POINTS)?;
    let direction = direction_deg.to_radians();

    let curve = match alpha {
        Some(a) => warped_dispersion_curve(AllpassSpec::new(a)?, direction, points)?,
        None => dispersion_curve(scheme, direction, points)?,
    };

    let (_, edge_ratio) = *curve.points.last().expect("curve is never empty");
    match alpha {
        Some(a) => {
            let spec = AllpassSpec::new(a)?;
            let rho = dc_realignment(spec);
            let within = band_fraction_within(&curve, 0.02);
            eprintln!(
                "dispersion: {scheme} alpha {a}, direction {direction_deg} deg, \
                 ratio within 2% of unity over the lowest {:.2}% of the band, \
                 {:.6} at the band edge",
                within * 100.0,
                edge_ratio
            );
            eprintln!("dc realignment rho = {rho}");
            eprintln!(
                "equivalent rate multiplier rho/2 = {} (reference {REFERENCE_RATE_MULTIPLIER})",
                rho / 2.0
            );
        }
        None => {
            eprintln!(
                "dispersion: {scheme}, direction {direction_deg} deg, \
                 ratio falls to {edge_ratio:.6} at the band edge"
            );
        }
    }

    with_output(args.output.as_ref(), |w| curve.write_csv(w))
}

/// Fraction of the nominal band (by frequency) over which the speed ratio
/// stays within `tolerance` of unity, scanning from dc upward.
fn band_fraction_within(curve: &warpmesh::analysis::DispersionCurve, tolerance: f64) -> f64 {
    let top = curve.points.last().expect("curve is never empty").0;
    for &(omega, ratio) in &curve.points {
        if (ratio - 1.0).abs() >= tolerance {
            return omega / top;
        }
    }
    1.0
}

fn cmd_modes(args: ModesArgs, settings: &Settings) -> Result<(), CliError> {
    let scheme = settings.resolve(args.scheme, "scheme", Scheme::Twm)?;
    let alpha = resolve_alpha(scheme, args.alpha, settings)?;
    let side = settings.resolve(args.side, "side", DEFAULT_SIDE)?;
    let steps = settings.resolve(args.steps, "steps", DEFAULT_STEPS)?;
    let fft = settings.resolve(args.fft, "fft", DEFAULT_FFT)?;
    let prominence = settings.resolve(args.prominence, "prominence", DEFAULT_PROMINENCE_DB)?;
    let policy = settings
        .resolve(args.policy, "policy", PolicyArg::Strongest)?
        .into_policy();
    let max_omega = settings.resolve(args.max_omega, "max-omega", nominal_band_edge())?;

    let lat = build_square_lattice(side)?;
    let record = run_impulse_response(&lat, scheme, alpha, steps, lat.center(), lat.center())?;
    let spec = spectrum(&record, fft)?;
    let peaks = find_peaks(&spec, prominence, 4096);
    let modes = theoretical_modes(side, max_omega)?;
    let predictions = predicted_modes(&modes, scheme, alpha)?;
    let matches = match_modes(&predictions, &peaks, policy);

    let matched = matches.iter().filter(|m| m.omega_measured.is_some()).count();
    let worst = matches
        .iter()
        .filter_map(|m| m.relative_deviation)
        .fold(0.0f64, |w, d| w.max(d.abs()));
    eprintln!(
        "modes: {scheme} side {side}, {} predicted, {matched} matched, \
         worst |deviation from prediction| {:.3}%",
        matches.len(),
        worst * 100.0
    );

    if let Some(path) = &args.spectrum {
        let mut w = BufWriter::new(File::create(path)?);
        spec.write_csv(&mut w)?;
        w.flush()?;
    }

    with_output(args.output.as_ref(), |w| write_mode_table_csv(&matches, w))
}

fn cmd_warp_map(args: WarpMapArgs, settings: &Settings) -> Result<(), CliError> {
    let raw = settings.resolve(args.alphas, "alphas", DEFAULT_ALPHA.to_string())?;
    let alphas = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad coefficient `{}`: {e}", s.trim())))
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    if alphas.is_empty() {
        return Err(CliError::Config("need at least one coefficient".into()));
    }
    let points = settings.resolve(args.points, "points", DEFAULT_POINTS)?;
    if points < 2 {
        return Err(CliError::Config(format!(
            "warp map needs at least 2 points, got {points}"
        )));
    }
    let max_omega = settings.resolve(args.max_omega, "max-omega", std::f64::consts::PI)?;

    let specs = alphas
        .iter()
        .map(|&a| AllpassSpec::new(a).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;

    // Evaluate into a buffer first: a domain error anywhere on the grid
    // must leave no partially written output behind.
    let mut buf = Vec::new();
    write_warp_map(&mut buf, &specs, points, max_omega)?;
    with_output(args.output.as_ref(), |w| w.write_all(&buf))
}

fn write_warp_map(
    w: &mut dyn Write,
    specs: &[AllpassSpec],
    points: usize,
    max_omega: f64,
) -> Result<(), CliError> {
    let grid = |i: usize| max_omega * i as f64 / (points - 1) as f64;
    if let [spec] = specs {
        writeln!(w, "omega,omega_tilde")?;
        for i in 0..points {
            let omega = grid(i);
            let warped = warp_frequency(omega, *spec)?;
            writeln!(w, "{omega:.8e},{warped:.8e}")?;
        }
    } else {
        writeln!(w, "alpha,omega,omega_tilde")?;
        for spec in specs {
            for i in 0..points {
                let omega = grid(i);
                let warped = warp_frequency(omega, *spec)?;
                writeln!(w, "{},{omega:.8e},{warped:.8e}", spec.alpha())?;
            }
        }
    }
    Ok(())
}

fn cmd_cost(args: CostArgs, settings: &Settings) -> Result<(), CliError> {
    let alpha = settings.resolve(args.alpha, "alpha", DEFAULT_ALPHA)?;
    let spec = AllpassSpec::new(alpha)?;
    let report = reference_report();

    let stdout = io::stdout();
    let mut w = stdout.lock();
    w.write_all(report.render_text().as_bytes())?;
    writeln!(w)?;
    report.write_csv(&mut w)?;

    if args.one_multiplier {
        let variant = cost_report(&[
            CostBasis::one_multiplier_allpass(Scheme::Wtwm)?,
            CostBasis::one_multiplier_allpass(Scheme::Wfds)?,
        ]);
        writeln!(w)?;
        writeln!(w, "one-multiplier allpass variant:")?;
        w.write_all(variant.render_text().as_bytes())?;
    }

    let rho = dc_realignment(spec);
    writeln!(w)?;
    writeln!(w, "dc realignment rho = {rho} (alpha {alpha})")?;
    writeln!(
        w,
        "equivalent rate multiplier rho/2 = {} (reference {REFERENCE_RATE_MULTIPLIER})",
        rho / 2.0
    )?;
    w.flush()?;
    Ok(())
}
