//! Command-line surface: scenario ingestion, SER / floor / metric / outage
//! computation, Monte Carlo validation and reproduction of the built-in
//! benchmark tables as CSV data.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 coincident powers without
//! --perturb, 4 validation failure, 5 undefined quantity.

use clap::{Args, Parser, Subcommand};
use macromrc::config::FileConfig;
use macromrc::error::Error;
use macromrc::gamma_dist::outage_probability;
use macromrc::mcsim::simulate_ser;
use macromrc::metrics::mean_sinr_metric;
use macromrc::powermodel::SystemConfig;
use macromrc::ser_analytic::{
    enumerate_profiles, error_floor, ser, ser_with_perturbation, Modulation,
    DEFAULT_EPSILON_REL, DEFAULT_PROFILE_CAP,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_DEGENERATE: u8 = 3;
const EXIT_VALIDATION: u8 = 4;
const EXIT_UNDEFINED: u8 = 5;

#[derive(Parser)]
#[command(name = "macromrc", version, about = "SER, outage and error-floor analysis for macrodiversity MRC under co-channel interference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic SER across an SNR grid, written as CSV.
    Ser(SerArgs),
    /// Analytic SER against the Monte Carlo link simulator.
    Validate(ValidateArgs),
    /// Error floor (SER at zero noise).
    Floor(ConfigArgs),
    /// Mean-SINR power metric.
    Metric(ConfigArgs),
    /// Outage probability at a threshold.
    Outage(OutageArgs),
    /// Reproduce the built-in benchmark tables/figures as CSV files.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file.
    config: PathBuf,
    /// bpsk | qpsk | 16qam | 64qam | 256qam (overrides the config).
    #[arg(long)]
    modulation: Option<String>,
    /// Perturb coincident desired powers instead of failing.
    #[arg(long)]
    perturb: bool,
}

#[derive(Args)]
struct SerArgs {
    #[command(flatten)]
    base: ConfigArgs,
    /// SNR grid in dB: "start:step:end" or a comma list.
    #[arg(long, default_value = "0:5:40")]
    rho_grid: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    base: ConfigArgs,
    #[arg(long, default_value = "0:10:30")]
    rho_grid: String,
    /// Monte Carlo symbols per grid point.
    #[arg(long, default_value_t = 1_000_000)]
    symbols: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OutageArgs {
    #[command(flatten)]
    base: ConfigArgs,
    /// Outage threshold in dB (linear threshold = 10^(dB/10)).
    #[arg(long, allow_hyphen_values = true)]
    threshold_db: f64,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Reproduce one table (1, 2 or 3).
    #[arg(long)]
    table: Option<u8>,
    /// Reproduce one figure's curves (2, 3, 4 or 5).
    #[arg(long)]
    figure: Option<u8>,
    /// Output directory.
    #[arg(long, default_value = "reproduction")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("MACROMRC_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &Error) -> u8 {
    match e {
        Error::CoincidentPowers { .. } | Error::NearSingular { .. } => EXIT_DEGENERATE,
        Error::UndefinedMetric => EXIT_UNDEFINED,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Ser(args) => cmd_ser(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Floor(args) => cmd_floor(args),
        Command::Metric(args) => cmd_metric(args),
        Command::Outage(args) => cmd_outage(args),
        Command::Reproduce(args) => cmd_reproduce(args),
    }
}

struct Loaded {
    file: FileConfig,
    modulation: Modulation,
    epsilon: f64,
    perturb: bool,
}

fn load(base: &ConfigArgs) -> Result<Loaded, Error> {
    let text = std::fs::read_to_string(&base.config)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", base.config.display())))?;
    let file = FileConfig::from_toml(&text)?;
    let modulation = match &base.modulation {
        Some(name) => Modulation::parse(name)?,
        None => file
            .modulation()?
            .ok_or_else(|| Error::InvalidParameter("no modulation given".into()))?,
    };
    let epsilon = file.perturb_epsilon_rel.unwrap_or(DEFAULT_EPSILON_REL);
    Ok(Loaded {
        perturb: base.perturb || file.perturb_epsilon_rel.is_some(),
        file,
        modulation,
        epsilon,
    })
}

/// SER under the perturbation policy: without --perturb, coincident powers
/// are an error (exit 3) naming the antennas.
fn ser_checked(loaded: &Loaded, config: &SystemConfig) -> Result<f64, Error> {
    if loaded.perturb {
        Ok(ser_with_perturbation(&loaded.modulation, config, loaded.epsilon)?.value)
    } else {
        Ok(ser(&loaded.modulation, config)?.value)
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Error> {
    let bad = |m: &str| Error::InvalidParameter(format!("SNR grid '{text}': {m}"));
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:step:end"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse().map_err(|_| bad("not a number")))
            .collect::<Result<_, _>>()?;
        let (start, step, end) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || end < start {
            return Err(bad("need step > 0 and end >= start"));
        }
        let mut grid = Vec::new();
        let mut idx = 0u32;
        loop {
            let v = start + step * f64::from(idx);
            if v > end + 1e-9 {
                break;
            }
            grid.push(v);
            idx += 1;
        }
        Ok(grid)
    } else {
        text.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad("not a number")))
            .collect()
    }
}

/// 17-significant-digit decimal so emitted CSVs re-parse bit-exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_with_manifest(
    path: &Path,
    contents: &str,
    command: &str,
    config: Option<&SystemConfig>,
    seed: Option<u64>,
) -> Result<(), Error> {
    let io = |e: std::io::Error| Error::InvalidParameter(format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
    }
    std::fs::write(path, contents).map_err(io)?;
    let mut manifest = String::new();
    let _ = writeln!(manifest, "command = {command:?}");
    let _ = writeln!(manifest, "tool_version = {:?}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "rng_algorithm = {:?}", macromrc::mcsim::RNG_ALGORITHM);
    if let Some(seed) = seed {
        let _ = writeln!(manifest, "seed = {seed}");
    }
    let _ = writeln!(
        manifest,
        "timestamp_unix = {}",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    );
    let _ = writeln!(manifest, "output = {:?}", path.display().to_string());
    if let Some(cfg) = config {
        let _ = writeln!(manifest, "\n[resolved_config]");
        let _ = writeln!(
            manifest,
            "desired = [{}]",
            cfg.desired
                .entries
                .iter()
                .map(|p| fmt_f64(*p))
                .collect::<Vec<_>>()
                .join(", ")
        );
        for m in &cfg.interferers {
            let _ = writeln!(
                manifest,
                "interferer = [{}]",
                m.entries
                    .iter()
                    .map(|p| fmt_f64(*p))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
        let _ = writeln!(manifest, "sigma2 = {}", fmt_f64(cfg.noise_power));
    }
    let sidecar = path.with_extension(format!(
        "{}.manifest.toml",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(sidecar, manifest).map_err(io)?;
    Ok(())
}

fn cmd_ser(args: SerArgs) -> Result<ExitCode, Error> {
    let loaded = load(&args.base)?;
    let grid = parse_grid(&args.rho_grid)?;
    let mut csv = String::from("rho_db,ser_analytic\n");
    let mut last_config = None;
    for &rho_db in &grid {
        let config = loaded.file.resolve(Some(rho_db))?;
        let value = ser_checked(&loaded, &config)?;
        let _ = writeln!(csv, "{},{}", fmt_f64(rho_db), fmt_f64(value));
        last_config = Some(config);
    }
    write_with_manifest(&args.out, &csv, "ser", last_config.as_ref(), None)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, Error> {
    if args.symbols == 0 {
        return Err(Error::InvalidParameter("--symbols must be positive".into()));
    }
    let loaded = load(&args.base)?;
    let grid = parse_grid(&args.rho_grid)?;
    // test hook: scale the analytic value to exercise the failure path
    let corrupt: f64 = std::env::var("MACROMRC_CORRUPT_ANALYTIC")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1.0);
    let mut csv = String::from("rho_db,ser_analytic,ser_mc,mc_stderr,z_score\n");
    let mut worst_z = 0.0f64;
    let mut last_config = None;
    for &rho_db in &grid {
        let config = loaded.file.resolve(Some(rho_db))?;
        let analytic = ser_checked(&loaded, &config)? * corrupt;
        let mc = simulate_ser(&config, &loaded.modulation, args.symbols, args.seed)?;
        let z = if mc.std_err > 0.0 {
            (analytic - mc.ser) / mc.std_err
        } else if analytic == mc.ser {
            0.0
        } else {
            f64::INFINITY
        };
        worst_z = worst_z.max(z.abs());
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(rho_db),
            fmt_f64(analytic),
            fmt_f64(mc.ser),
            fmt_f64(mc.std_err),
            fmt_f64(z)
        );
        last_config = Some(config);
    }
    write_with_manifest(
        &args.out,
        &csv,
        "validate",
        last_config.as_ref(),
        Some(args.seed),
    )?;
    if worst_z > 3.0 {
        eprintln!("validation failed: worst |z| = {worst_z:.2}");
        return Ok(ExitCode::from(EXIT_VALIDATION));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_floor(args: ConfigArgs) -> Result<ExitCode, Error> {
    let loaded = load(&args)?;
    let config = loaded
        .file
        .resolve(None)
        .or_else(|_| loaded.file.resolve(Some(0.0)))?;
    let value = if loaded.perturb {
        error_floor(&loaded.modulation, &config)?
    } else {
        let mut floor_config = config.clone();
        floor_config.noise_power = 0.0;
        let no_cci = floor_config.interferers.iter().all(|m| m.trace() == 0.0);
        if no_cci {
            0.0
        } else {
            ser(&loaded.modulation, &floor_config)?.value
        }
    };
    println!("error_floor = {}", fmt_f64(value));
    if value > 0.0 {
        println!("error_floor_log10 = {:.6}", value.log10());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_metric(args: ConfigArgs) -> Result<ExitCode, Error> {
    let loaded = load(&args)?;
    let config = loaded.file.resolve(None)?;
    let report = mean_sinr_metric(&config)?;
    println!("m_p_linear = {}", fmt_f64(report.m_p_linear));
    println!("m_p_db = {:.6}", report.m_p_db);
    Ok(ExitCode::SUCCESS)
}

fn cmd_outage(args: OutageArgs) -> Result<ExitCode, Error> {
    let loaded = load(&args.base)?;
    let config = loaded.file.resolve(None)?;
    let threshold = if args.threshold_db == f64::NEG_INFINITY {
        0.0
    } else {
        10f64.powf(args.threshold_db / 10.0)
    };
    let profiles = enumerate_profiles(&loaded.modulation, &config, DEFAULT_PROFILE_CAP)?;
    let value = outage_probability(&config, &profiles, threshold)?;
    println!("outage_probability = {}", fmt_f64(value));
    println!("threshold_linear = {}", fmt_f64(threshold));
    Ok(ExitCode::SUCCESS)
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<ExitCode, Error> {
    let scenarios = macromrc::scenarios::all();
    let selected: Vec<_> = match (args.table, args.figure) {
        (Some(t), None) => {
            if !(1..=3).contains(&t) {
                return Err(Error::InvalidParameter(format!("no table {t}")));
            }
            scenarios.into_iter().filter(|s| s.table == t).collect()
        }
        (None, Some(f)) => {
            if !(2..=5).contains(&f) {
                return Err(Error::InvalidParameter(format!("no figure {f}")));
            }
            scenarios.into_iter().filter(|s| s.figure == f).collect()
        }
        _ => {
            return Err(Error::InvalidParameter(
                "pass exactly one of --table or --figure".into(),
            ))
        }
    };
    let grid: Vec<f64> = (0..=8).map(|i| 5.0 * f64::from(i)).collect();
    let mut summary = String::from(
        "scenario,modulation,m_p_db,printed_m_p_db,m_p_dev_db,floor,printed_floor,floor_rel_dev,disputed\n",
    );
    for s in &selected {
        let floor_cfg = macromrc::powermodel::scenario_to_config(&s.params(f64::INFINITY))?;
        let floor = error_floor(&s.modulation, &floor_cfg)?;
        let metric_cfg = macromrc::powermodel::scenario_to_config(&s.params(20.0))?;
        let metric = mean_sinr_metric(&metric_cfg)?;
        let _ = writeln!(
            summary,
            "{},{},{:.4},{:.2},{:+.4},{},{},{},{}",
            s.name,
            s.modulation.name(),
            metric.m_p_db,
            s.printed_m_p_db,
            metric.m_p_db - s.printed_m_p_db,
            fmt_f64(floor),
            fmt_f64(s.printed_floor),
            fmt_f64(floor / s.printed_floor - 1.0),
            if s.disputed { "yes" } else { "no" }
        );
        let mut csv = String::from("rho_db,ser_analytic\n");
        for &rho_db in &grid {
            let config = macromrc::powermodel::scenario_to_config(&s.params(rho_db))?;
            let value =
                ser_with_perturbation(&s.modulation, &config, DEFAULT_EPSILON_REL)?.value;
            let _ = writeln!(csv, "{},{}", fmt_f64(rho_db), fmt_f64(value));
        }
        let path = args.out_dir.join(format!("{}.csv", s.name.to_lowercase()));
        write_with_manifest(&path, &csv, "reproduce", None, None)?;
    }
    let name = match (args.table, args.figure) {
        (Some(t), _) => format!("table{t}_summary.csv"),
        (_, Some(f)) => format!("figure{f}_summary.csv"),
        _ => unreachable!(),
    };
    let path = args.out_dir.join(name);
    write_with_manifest(&path, &summary, "reproduce", None, None)?;
    println!("{summary}");
    println!(
        "note: rows marked disputed carry printed values that failed independent \
         Monte Carlo verification; deviations there reflect the print."
    );
    Ok(ExitCode::SUCCESS)
}
