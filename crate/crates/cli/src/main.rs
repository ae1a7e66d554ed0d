use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ionpair::correlations::{
    apply_error_model, dark_resonances, default_spectrum_grid, excitation_spectrum, pair_probability, purity,
    purity_curve, raman_conditions,
};
use ionpair::correlator::{correlate, CorrelogramConfig, NormalizationMode, TagFilter};
use ionpair::dynamics::{propagate, uniform_grid, DensityMatrix};
use ionpair::fitting::{DataKind, DataSet, FitConfig, FitProblem, ModelState};
use ionpair::stream::{ClickEvent, ClickStream};
use ionpair::trajectory::{detect, simulate_emissions, DetectionConfig, DetectorPath};
use ionpair::units::{angular_to_mhz, mhz_to_angular, parse_frequency, parse_time, parse_time_ps};
use ionpair::{ErrorModel, ExperimentParams, IonModel, Polarization, Wavelength, VERSION};

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Selftest(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Selftest(_) => 4,
        }
    }
}

impl From<ionpair::Error> for Failure {
    fn from(e: ionpair::Error) -> Self {
        use ionpair::Error::*;
        match e {
            DegenerateSteadyState { .. } | NonPositive { .. } | ZeroDenominator { .. } => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "ionpair", version, about = "Polarization-correlated photon pairs from a driven Ca+ ion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Conditioned and total g²(τ) curves.
    G2(G2Args),
    /// Fluorescence against the 866 nm detuning.
    Spectrum(SpectrumArgs),
    /// Purity p(τ) and pair probability p/(1+p).
    Purity(PurityArgs),
    /// Quantum-jump emission record and two detector streams.
    Simulate(SimulateArgs),
    /// Cross-correlation histogram of two click streams.
    Correlate(CorrelateArgs),
    /// Fit model parameters to a spectrum or to σ⁻-conditioned g² data.
    Fit(FitArgs),
    /// Runs the built-in invariant checks.
    Selftest,
}

fn time(s: &str) -> Result<f64, String> {
    parse_time(s).map_err(|e| e.to_string())
}

fn time_ps(s: &str) -> Result<u64, String> {
    parse_time_ps(s).map_err(|e| e.to_string())
}

fn frequency(s: &str) -> Result<f64, String> {
    parse_frequency(s).map_err(|e| e.to_string())
}

fn polarization(s: &str) -> Result<Polarization, String> {
    s.parse::<Polarization>().map_err(|e| e.to_string())
}

fn probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} outside [0, 1]"))
    }
}

#[derive(Args, Debug)]
struct ParamsArg {
    /// Parameter file (JSON, MHz / gauss / suffixed angles).
    #[arg(long)]
    params: PathBuf,
}

impl ParamsArg {
    fn load(&self) -> Outcome<ExperimentParams> {
        ExperimentParams::load(&self.params)
            .map_err(|e| Failure::Input(format!("{}: {e}", self.params.display())))
    }
}

#[derive(Args, Debug)]
struct G2Args {
    #[command(flatten)]
    params: ParamsArg,
    /// Polarization of the conditioning photon.
    #[arg(long, default_value = "sigma-", value_parser = polarization)]
    first: Polarization,
    #[arg(long, default_value = "1000ns", value_parser = time)]
    tmax: f64,
    #[arg(long, default_value = "1ns", value_parser = time)]
    dt: f64,
    /// Polarization errors ε_init, ε_σ⁻, ε_σ⁺ (σ⁻ conditioning only).
    #[arg(long, num_args = 3, value_names = ["INIT", "MINUS", "PLUS"], value_parser = probability)]
    eps: Option<Vec<f64>>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long, default_value = "-40MHz", value_parser = frequency, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value = "40MHz", value_parser = frequency, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 400)]
    points: usize,
    /// Counts per second at full excited-state population.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.0)]
    background: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct PurityArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Integration time reported on stdout.
    #[arg(long, default_value = "24ns", value_parser = time)]
    tau: f64,
    #[arg(long, default_value = "100ns", value_parser = time)]
    tmax: f64,
    #[arg(long, default_value = "0.1ns", value_parser = time)]
    dt: f64,
    #[arg(long, num_args = 3, value_names = ["INIT", "MINUS", "PLUS"], value_parser = probability)]
    eps: Option<Vec<f64>>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long, value_parser = time)]
    duration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Collection efficiency of each detection path.
    #[arg(long, default_value_t = 0.04, value_parser = probability)]
    efficiency: f64,
    /// Filter leakage of the orthogonal polarization.
    #[arg(long, default_value_t = 0.0, value_parser = probability)]
    crosstalk: f64,
    /// Dark counts per second on each path.
    #[arg(long, default_value_t = 0.0)]
    dark_rate: f64,
    /// Output prefix; writes PREFIX.emissions.ionclk, PREFIX.ch1.ionclk,
    /// PREFIX.ch2.ionclk and PREFIX.json.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    /// Start stream (IONCLK1 or CSV).
    a: PathBuf,
    /// Stop stream; autocorrelation of A when omitted.
    b: Option<PathBuf>,
    #[arg(long, default_value = "1ns", value_parser = time_ps)]
    bin: u64,
    #[arg(long, default_value = "1000ns", value_parser = time_ps)]
    window: u64,
    #[arg(long, value_parser = polarization)]
    first: Option<Polarization>,
    #[arg(long, value_parser = polarization)]
    second: Option<Polarization>,
    /// Raw counts instead of rate-normalized values.
    #[arg(long)]
    raw: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Free parameters, bounds and optimizer options (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Spectrum data: Δ866 in MHz, counts[, sigma].
    #[arg(long, conflicts_with_all = ["g2_minus", "g2_plus"])]
    spectrum: Option<PathBuf>,
    /// σ⁻σ⁻ data: τ in ns, g²[, sigma].
    #[arg(long, requires = "g2_plus")]
    g2_minus: Option<PathBuf>,
    /// σ⁻σ⁺ data: τ in ns, g²[, sigma].
    #[arg(long, requires = "g2_minus")]
    g2_plus: Option<PathBuf>,
    /// Histogram bin width of the g² data; the model is averaged over each bin.
    #[arg(long, value_parser = time, requires = "g2_minus")]
    bin: Option<f64>,
    #[arg(short, long)]
    output: PathBuf,
}

fn header(command: &str, fingerprint: Option<&str>) -> String {
    let mut h = format!("# ionpair {VERSION}\n# command={command}\n");
    if let Some(fp) = fingerprint {
        let _ = writeln!(h, "# params={fp}");
    }
    h
}

fn write_all(files: &[(PathBuf, Vec<u8>)]) -> Outcome<()> {
    let mut written: Vec<&Path> = Vec::new();
    for (path, bytes) in files {
        if let Err(e) = fs::write(path, bytes) {
            for p in written {
                let _ = fs::remove_file(p);
            }
            return Err(Failure::Input(format!("{}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(())
}

fn check_grid_options(tmax: f64, dt: f64) -> Outcome<()> {
    if dt <= 0.0 || tmax < dt {
        return Err(Failure::Usage(format!("need 0 < dt <= tmax (dt = {dt:e} s, tmax = {tmax:e} s)")));
    }
    Ok(())
}

fn error_model(eps: &Option<Vec<f64>>) -> Outcome<Option<ErrorModel>> {
    eps.as_ref().map(|e| ErrorModel::new(e[0], e[1], e[2]).map_err(|e| Failure::Usage(e.to_string()))).transpose()
}

fn run_g2(args: &G2Args) -> Outcome<()> {
    let params = args.params.load()?;
    check_grid_options(args.tmax, args.dt)?;
    let em = error_model(&args.eps)?;
    if em.is_some() && args.first != Polarization::SigmaMinus {
        return Err(Failure::Usage("--eps applies to σ⁻ conditioning only".into()));
    }
    if args.first == Polarization::Pi {
        return Err(Failure::Usage("conditioning on a π photon is not supported".into()));
    }
    let grid = uniform_grid(args.tmax, args.dt)?;
    let model = IonModel::new(&params)?;
    let total = model.g2_total(&grid)?;
    let all = model.conditioned_all(&grid)?;
    let (minus, plus) = match em {
        Some(em) => apply_error_model(&all, &em)?,
        None => (
            all.get(args.first, Polarization::SigmaMinus)?.clone(),
            all.get(args.first, Polarization::SigmaPlus)?.clone(),
        ),
    };
    let mut out = header("g2", Some(&params.fingerprint()));
    let _ = writeln!(out, "# first={}", args.first.label());
    if let Some(em) = em {
        let _ = writeln!(out, "# eps_init={} eps_minus={} eps_plus={}", em.eps_init, em.eps_minus, em.eps_plus);
    }
    let (t_peak, v_peak) = minus.peak();
    let _ = writeln!(out, "# peak_sigma_minus={v_peak} at_ns={}", t_peak * 1e9);
    out.push_str("tau_ns,g2_sigma_minus,g2_sigma_plus,g2_total\n");
    for k in 0..grid.len() {
        let _ = writeln!(out, "{},{},{},{}", grid[k] * 1e9, minus.values[k], plus.values[k], total.values[k]);
    }
    write_all(&[(args.output.clone(), out.into_bytes())])?;
    println!("peak g2 sigma- = {v_peak:.4} at {:.2} ns", t_peak * 1e9);
    Ok(())
}

fn run_spectrum(args: &SpectrumArgs) -> Outcome<()> {
    let params = args.params.load()?;
    if args.points < 2 || !(args.to > args.from) {
        return Err(Failure::Usage("need --points >= 2 and --to > --from".into()));
    }
    let grid: Vec<f64> = if args.points == 400
        && args.from == mhz_to_angular(-40.0)
        && args.to == mhz_to_angular(40.0)
    {
        default_spectrum_grid()
    } else {
        (0..args.points)
            .map(|k| args.from + (args.to - args.from) * k as f64 / (args.points - 1) as f64)
            .collect()
    };
    let spectrum = excitation_spectrum(&params, &grid)?
        .scaled(args.scale, args.background)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let minima = dark_resonances(&spectrum);
    let mut out = header("spectrum", Some(&params.fingerprint()));
    let _ = writeln!(out, "# scale={} background={}", args.scale, args.background);
    let list = |v: Vec<f64>| v.iter().map(|d| format!("{:.3}", angular_to_mhz(*d))).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "# dark_resonances_mhz={}", list(minima.clone()));
    let mut raman: Vec<f64> = raman_conditions(&params).iter().map(|r| r.delta_866).collect();
    raman.sort_by(f64::total_cmp);
    let _ = writeln!(out, "# raman_conditions_mhz={}", list(raman));
    out.push_str("delta_866_mhz,fluorescence,flagged\n");
    for k in 0..grid.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            angular_to_mhz(spectrum.detunings[k]),
            spectrum.values[k],
            u8::from(spectrum.flagged[k])
        );
    }
    write_all(&[(args.output.clone(), out.into_bytes())])?;
    println!("{} dark resonances", minima.len());
    Ok(())
}

fn run_purity(args: &PurityArgs) -> Outcome<()> {
    let params = args.params.load()?;
    check_grid_options(args.tmax, args.dt)?;
    if !(args.tau > 0.0 && args.tau <= args.tmax) {
        return Err(Failure::Usage("--tau must lie in (0, tmax]".into()));
    }
    let em = error_model(&args.eps)?.unwrap_or_else(ErrorModel::ideal);
    let grid = uniform_grid(args.tmax, args.dt)?;
    let model = IonModel::new(&params)?;
    let (minus, plus) = apply_error_model(&model.conditioned_all(&grid)?, &em)?;
    let curve = purity_curve(&minus, &plus)?;
    let p_tau = purity(&minus, &plus, args.tau)
        .map_err(|e| Failure::Usage(format!("--tau: {e} (choose a multiple of --dt)")))?;

    let mut out = header("purity", Some(&params.fingerprint()));
    let _ = writeln!(out, "# eps_init={} eps_minus={} eps_plus={}", em.eps_init, em.eps_minus, em.eps_plus);
    let _ = writeln!(out, "# tau_ns={} purity={} probability={}", args.tau * 1e9, p_tau, pair_probability(p_tau));
    out.push_str("tau_ns,purity,probability\n");
    for (t, p) in curve {
        let _ = writeln!(out, "{},{},{}", t * 1e9, p, pair_probability(p));
    }
    write_all(&[(args.output.clone(), out.into_bytes())])?;
    println!(
        "p({} ns) = {:.4}, probability = {:.5}",
        args.tau * 1e9,
        p_tau,
        pair_probability(p_tau)
    );
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run_simulate(args: &SimulateArgs) -> Outcome<()> {
    let params = args.params.load()?;
    if !(args.duration > 0.0) {
        return Err(Failure::Usage("--duration must be positive".into()));
    }
    let emissions = simulate_emissions(&params, args.duration, args.seed)?;
    let path = |accept| DetectorPath {
        efficiency: args.efficiency,
        crosstalk: args.crosstalk,
        dark_rate: args.dark_rate,
        ..DetectorPath::ideal(Some(accept))
    };
    let config = DetectionConfig { paths: [path(Polarization::SigmaMinus), path(Polarization::SigmaPlus)] };
    let (ch1, ch2) = detect(&emissions, &config, args.seed.wrapping_add(1))
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let manifest = serde_json::json!({
        "tool": "ionpair",
        "version": VERSION,
        "command": "simulate",
        "params": params.fingerprint(),
        "seed": args.seed,
        "duration_ps": emissions.duration_ps,
        "detection": config,
        "events": { "emissions": emissions.len(), "ch1": ch1.len(), "ch2": ch2.len() },
    });
    let files = vec![
        (with_suffix(&args.output, ".emissions.ionclk"), emissions.to_binary()),
        (with_suffix(&args.output, ".ch1.ionclk"), ch1.to_binary()),
        (with_suffix(&args.output, ".ch2.ionclk"), ch2.to_binary()),
        (with_suffix(&args.output, ".json"), (serde_json::to_string_pretty(&manifest).expect("json") + "\n").into_bytes()),
    ];
    write_all(&files)?;
    println!("{} emissions, {} + {} clicks", emissions.len(), ch1.len(), ch2.len());
    Ok(())
}

fn load_stream(path: &Path) -> Outcome<ClickStream> {
    ClickStream::load(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn run_correlate(args: &CorrelateArgs) -> Outcome<()> {
    let a = load_stream(&args.a)?;
    let b = args.b.as_deref().map(load_stream).transpose()?;
    let mut cfg = CorrelogramConfig::new(args.bin, args.window).map_err(|e| Failure::Usage(e.to_string()))?;
    cfg.mode = if args.raw { NormalizationMode::RawCounts } else { NormalizationMode::RateNormalized };
    cfg.filter_a = TagFilter { polarization: args.first, wavelength: None };
    cfg.filter_b = TagFilter { polarization: args.second, wavelength: None };
    let c = match &b {
        Some(b) => correlate(&a, b, &cfg)?,
        None => correlate(&a, &a, &cfg)?,
    };
    let mut out = header("correlate", a.metadata.params_fingerprint.as_deref());
    let _ = writeln!(
        out,
        "# bin_ps={} window_ps={} mode={} pairs={} overlap_ps={} rate_a={} rate_b={}",
        c.bin_width_ps,
        c.window_ps,
        if args.raw { "raw" } else { "rate-normalized" },
        c.total_pairs,
        c.overlap_ps,
        c.rate_a,
        c.rate_b
    );
    out.push_str("delay_ns,counts,value\n");
    for k in 0..c.counts.len() {
        let _ = writeln!(out, "{},{},{}", c.centers_ps[k] as f64 * 1e-3, c.counts[k], c.normalized[k]);
    }
    write_all(&[(args.output.clone(), out.into_bytes())])?;
    println!("{} pairs in window", c.total_pairs);
    Ok(())
}

/// Reads `x,y[,sigma]` rows; `#` lines and a non-numeric header are skipped.
fn read_table(path: &Path) -> Outcome<(Vec<f64>, Vec<f64>, Option<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let bad = |n: usize, what: &str| Failure::Input(format!("{}:{}: {what}", path.display(), n + 1));
    let (mut x, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
    let mut width = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let values: Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
        let Ok(values) = values else {
            if x.is_empty() && width.is_none() {
                width = Some(0);
                continue;
            }
            return Err(bad(n, "non-numeric value"));
        };
        if !(2..=3).contains(&values.len()) || width.is_some_and(|w| w != 0 && w != values.len()) {
            return Err(bad(n, "expected 2 or 3 columns, consistently"));
        }
        width = Some(values.len());
        x.push(values[0]);
        y.push(values[1]);
        if let Some(v) = values.get(2) {
            s.push(*v);
        }
    }
    if x.is_empty() {
        return Err(Failure::Input(format!("{}: no data rows", path.display())));
    }
    Ok((x, y, (!s.is_empty()).then_some(s)))
}

fn data_set(kind: DataKind, path: &Path, x_scale: f64) -> Outcome<DataSet> {
    let (x, y, s) = read_table(path)?;
    let x = x.into_iter().map(|v| v * x_scale).collect();
    let d = match s {
        Some(s) => DataSet::new(kind, x, y, s),
        None => DataSet::poisson(kind, x, y),
    };
    d.map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn run_fit(args: &FitArgs) -> Outcome<()> {
    let params = args.params.load()?;
    let text = fs::read_to_string(&args.config).map_err(|e| Failure::Input(format!("{}: {e}", args.config.display())))?;
    let config = FitConfig::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", args.config.display())))?;
    let data = match (&args.spectrum, &args.g2_minus, &args.g2_plus) {
        (Some(p), None, None) => vec![data_set(DataKind::Spectrum, p, mhz_to_angular(1.0))?],
        (None, Some(m), Some(p)) => {
            let width = args.bin.unwrap_or(0.0);
            let bin = |d: DataSet| d.binned(width).map_err(|e| Failure::Input(e.to_string()));
            vec![bin(data_set(DataKind::G2Minus, m, 1e-9)?)?, bin(data_set(DataKind::G2Plus, p, 1e-9)?)?]
        }
        _ => return Err(Failure::Usage("give --spectrum or both --g2-minus and --g2-plus".into())),
    };
    let mut state = ModelState::new(params);
    let free = config.apply(&mut state).map_err(|e| Failure::Input(format!("{}: {e}", args.config.display())))?;
    let result = FitProblem::new(data, state, free, config.options)
        .map_err(|e| Failure::Input(e.to_string()))?
        .solve()?;
    let doc = serde_json::json!({
        "tool": "ionpair",
        "version": VERSION,
        "command": "fit",
        "params": params.fingerprint(),
        "result": result,
    });
    write_all(&[(args.output.clone(), (serde_json::to_string_pretty(&doc).expect("json") + "\n").into_bytes())])?;
    println!("chi2/dof = {:.4} ({} evaluations)", result.reduced_chi2(), result.evaluations);
    Ok(())
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check { name, passed: value < limit, detail: format!("{value:.3e} < {limit:.0e}") }
}

fn selftest_checks() -> ionpair::Result<Vec<Check>> {
    let mut checks = Vec::new();
    let weak = ExperimentParams::weak_excitation();
    let model = IonModel::new(&weak)?;
    checks.push(check("liouvillian trace preservation", model.liouvillian.trace_residual(), 1e-10));
    checks.push(check("steady-state residual", model.residual(), 1e-10));

    let grid = uniform_grid(200e-9, 1e-9)?;
    let tr = propagate(&model.liouvillian, &DensityMatrix::pure(0), &grid)?;
    let drift = tr.states.iter().map(|s| (s.trace().re - 1.0).abs()).fold(0.0, f64::max);
    checks.push(check("propagated trace drift", drift, 1e-10));

    let curves = model.conditioned_all(&grid)?;
    let g0 = [&curves.minus_minus, &curves.minus_plus, &curves.plus_plus, &curves.plus_minus]
        .iter()
        .map(|c| c.values[0].abs())
        .fold(0.0, f64::max);
    checks.push(check("conditioned g2(0)", g0, 1e-10));

    let p10 = pair_probability(10.0);
    checks.push(Check {
        name: "pair probability p/(1+p)",
        passed: (p10 - 10.0 / 11.0).abs() < 1e-15,
        detail: format!("{p10}"),
    });

    let emissions = simulate_emissions(&ExperimentParams::strong_excitation(), 2e-4, 7)?;
    let clicks: Vec<ClickEvent> = emissions.events.iter().step_by(3).copied().collect();
    let other: Vec<ClickEvent> = emissions.events.iter().skip(1).step_by(5).copied().collect();
    let a = ClickStream::new(1, clicks, emissions.duration_ps)?;
    let b = ClickStream::new(2, other, emissions.duration_ps)?;
    let cfg = CorrelogramConfig { mode: NormalizationMode::RawCounts, ..CorrelogramConfig::new(700, 70_000)? };
    let fast = correlate(&a, &b, &cfg)?;
    let mut slow = vec![0u64; cfg.n_bins()];
    for x in &a.events {
        for y in &b.events {
            if let Some(k) = cfg.bin_of(y.timestamp_ps as i128 - x.timestamp_ps as i128) {
                slow[k] += 1;
            }
        }
    }
    checks.push(Check {
        name: "correlator against brute force",
        passed: fast.counts == slow,
        detail: format!("{} pairs, {} + {} events", fast.total_pairs, a.len(), b.len()),
    });

    let tagged = emissions.filtered(Some(Polarization::SigmaMinus), Some(Wavelength::Nm397));
    checks.push(Check {
        name: "emission record has σ⁻ photons",
        passed: !tagged.is_empty(),
        detail: format!("{} of {}", tagged.len(), emissions.len()),
    });
    Ok(checks)
}

fn run_selftest() -> Outcome<()> {
    let checks = selftest_checks().map_err(|e| Failure::Selftest(format!("selftest aborted: {e}")))?;
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Failure::Selftest(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::G2(a) => run_g2(a),
        Command::Spectrum(a) => run_spectrum(a),
        Command::Purity(a) => run_purity(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Correlate(a) => run_correlate(a),
        Command::Fit(a) => run_fit(a),
        Command::Selftest => run_selftest(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
