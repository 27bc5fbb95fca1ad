use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bbbc::harness::{
    bench_compare_detailed, bench_rows, parse_csi, parse_snr_grid, run_ber_sweep, run_outage_sweep, run_pdf_histogram,
    selftest, with_workers, EqualizerChoice, OrderingVerdict, RegimeChoice, SweepResult, SystemConfig,
};
use bbbc::receiver::CsiMode;
use clap::{Args, Parser, Subcommand};

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_CHECK: u8 = 4;

/// Link-level simulator for multi-antenna broadband backscatter.
#[derive(Parser, Debug)]
#[command(name = "bbbc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo BER against average SNR for every configured receiver path.
    Ber(RunArgs),
    /// Outage probability against average SNR, simulated and closed form.
    Outage(RunArgs),
    /// Histogram of the equivalent channel gain next to its density.
    Pdf(RunArgs),
    /// Proposed scheme against the CSI-free benchmarks over a flat backward link.
    BenchCompare(RunArgs),
    /// Fast closed-form and noiseless consistency checks.
    Selftest,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Average SNR grid in dB, `start:step:stop` or a single value.
    #[arg(long, value_parser = |s: &str| parse_snr_grid(s).map(SnrGrid))]
    snr: Option<SnrGrid>,
    /// Number of backscatter antennas.
    #[arg(long = "M")]
    antennas: Option<usize>,
    /// Number of backward-link taps.
    #[arg(long = "Lg")]
    taps: Option<usize>,
    /// Comma-separated equalizers: ZF, MMSE, BIGDFE, MFB.
    #[arg(long, value_delimiter = ',')]
    equalizer: Option<Vec<EqualizerChoice>>,
    /// Comma-separated CSI modes: perfect, estimated.
    #[arg(long, value_delimiter = ',', value_parser = parse_csi)]
    csi: Option<Vec<CsiMode>>,
    /// Forward-link regime: general or los.
    #[arg(long)]
    regime: Option<RegimeChoice>,
    /// Channel realizations per SNR point (draws for `pdf`).
    #[arg(long)]
    realizations: Option<usize>,
    /// Master seed; falls back to the config file, then to BBBC_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Clone)]
struct SnrGrid(Vec<f64>);

enum Failure {
    Config(String),
    Io(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Config(m) => (EXIT_CONFIG, m),
            Failure::Io(m) => (EXIT_IO, m),
        };
        eprintln!("bbbc: {msg}");
        ExitCode::from(code)
    }
}

fn build_config(args: &RunArgs) -> Result<SystemConfig, Failure> {
    let mut cfg = SystemConfig::default();
    if let Ok(raw) = std::env::var("BBBC_SEED") {
        cfg.master_seed =
            raw.trim().parse().map_err(|_| Failure::Config(format!("BBBC_SEED `{raw}` is not an unsigned integer")))?;
    }
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_kv_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    if let Some(m) = args.antennas {
        cfg.antennas = m;
    }
    if let Some(l) = args.taps {
        cfg.taps = l;
    }
    if let Some(eq) = &args.equalizer {
        cfg.equalizers = eq.clone();
    }
    if let Some(csi) = &args.csi {
        cfg.csi = csi.clone();
    }
    if let Some(r) = args.regime {
        cfg.regime = r;
    }
    if let Some(n) = args.realizations {
        cfg.realizations = n;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn open_output(args: &RunArgs) -> Result<Option<BufWriter<File>>, Failure> {
    args.out
        .as_ref()
        .map(|p| {
            File::create(p).map(BufWriter::new).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display())))
        })
        .transpose()
}

fn summary(result: &SweepResult) {
    println!(
        "{:<8} {:<9} {:<7} {:<9} {:>8} {:<18} {:>12} {:>10}",
        "exp", "scheme", "eq", "csi", "x", "metric", "value", "ci"
    );
    for r in result.rows.iter().filter(|r| !r.metric.starts_with("meta.")) {
        let x = r.snr_db.map_or(String::new(), |v| format!("{v:.2}"));
        let ci = r.ci_halfwidth.map_or(String::new(), |v| format!("{v:.2e}"));
        println!(
            "{:<8} {:<9} {:<7} {:<9} {:>8} {:<18} {:>12.4e} {:>10}",
            r.experiment_id, r.scheme, r.equalizer, r.csi, x, r.metric, r.value, ci
        );
    }
}

fn emit(result: &SweepResult, out: Option<BufWriter<File>>, args: &RunArgs) -> Result<(), Failure> {
    match out {
        Some(mut w) => {
            let path = args.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
            result
                .write_csv(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Failure::Io(format!("cannot write {path}: {e}")))?;
            summary(result);
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            result.write_csv(stdout.lock()).map_err(|e| Failure::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    let (args, default_grid) = match &command {
        Command::Selftest => {
            let checks = selftest();
            for c in &checks {
                println!(
                    "{} {}{}",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    if c.detail.is_empty() { String::new() } else { format!(": {}", c.detail) }
                );
            }
            return Ok(if checks.iter().all(|c| c.passed) { 0 } else { EXIT_CHECK });
        }
        Command::Ber(a) => (a, "-10:2:6"),
        Command::Outage(a) => (a, "0:5:40"),
        Command::Pdf(a) => (a, "0"),
        Command::BenchCompare(a) => (a, "0:5:30"),
    };
    let cfg = build_config(args)?;
    let grid = args.snr.clone().map_or_else(|| parse_snr_grid(default_grid).unwrap_or_default(), |g| g.0);
    let out = open_output(args)?;
    let config_err = |e: bbbc::Error| Failure::Config(e.to_string());
    let mut code = 0;
    let result = with_workers(args.workers, || -> Result<SweepResult, Failure> {
        match &command {
            Command::Ber(_) => run_ber_sweep(&cfg, &grid).map_err(config_err),
            Command::Outage(_) => run_outage_sweep(&cfg, &grid).map_err(config_err),
            Command::Pdf(_) => run_pdf_histogram(&cfg, cfg.realizations).map_err(config_err),
            Command::BenchCompare(_) => {
                let points = bench_compare_detailed(&cfg, &grid).map_err(config_err)?;
                for p in &points {
                    let v = OrderingVerdict::from_point(p);
                    let others: Vec<String> =
                        v.benchmarks.iter().map(|(t, b)| format!("{} {b:.3e}", t.name())).collect();
                    eprintln!(
                        "{:>6.2} dB: proposed {:.3e} vs {}: {}",
                        v.snr_db,
                        v.proposed,
                        others.join(", "),
                        if v.passed { "PASS" } else { "FAIL" }
                    );
                    if !v.passed {
                        code = EXIT_CHECK;
                    }
                }
                Ok(bench_rows(&cfg, &grid, &points))
            }
            Command::Selftest => unreachable!(),
        }
    })
    .map_err(|e| Failure::Config(e.to_string()))??;
    emit(&result, out, args)?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => f.report(),
    }
}
