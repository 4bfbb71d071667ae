use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qngc_core::criteria::{
    multimode_test, nonclassicality_test, qng_pnrd_test, qng_pnrd_threshold, qng_spad_test, qng_spad_threshold,
    single_mode_qng_test, tms_curve, Detection, PairCount, Verdict,
};
use qngc_core::model::{sweep, write_sweep_csv, Criterion, HeraldParams, SweepKind};
use qngc_core::montecarlo::{run_campaign, write_best_csv, CampaignConfig, DEFAULT_DISPLACEMENT_MAX, DEFAULT_XI1_GRID};
use qngc_core::pnrd::PnrdStats;
use qngc_core::spad::ClickStats;

/// Environment variable naming the directory for output files without an explicit path.
const OUTPUT_DIR_VAR: &str = "QNGC_OUTPUT_DIR";

const EXIT_USAGE: u8 = 1;
const EXIT_VIOLATION: u8 = 2;

/// Campaign totals of the full-scale runs, split over the ξ₁ grid.
const FULL_SCALE_SPAD: u64 = 10_000_000;
const FULL_SCALE_PNRD: u64 = 1_000_000;

#[derive(Parser)]
#[command(name = "qngc", version, about = "Coincidence statistics and non-Gaussianity witnesses for photon pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Threshold curves, the classical boundary and the two-mode squeezed curve.
    Thresholds(ThresholdArgs),
    /// Random search over pure two-mode Gaussian states against the threshold.
    Montecarlo(MonteCarloArgs),
    /// Critical emission probability or transmission of the noisy pair source over noise.
    Sweep(SweepArgs),
    /// Evaluates measured statistics against one criterion and prints JSON.
    Verdict(VerdictArgs),
    /// Re-runs the command recorded in the first line of an output file.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum DetectionArg {
    Spad,
    Pnrd,
}

impl From<DetectionArg> for Detection {
    fn from(d: DetectionArg) -> Self {
        match d {
            DetectionArg::Spad => Detection::Spad,
            DetectionArg::Pnrd => Detection::Pnrd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CriterionArg {
    Ncl,
    QngSpad,
    QngPnrd,
    SmQng,
    SmQngHeralded,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Ncl => Criterion::Ncl,
            CriterionArg::QngSpad => Criterion::QngSpad,
            CriterionArg::QngPnrd => Criterion::QngPnrd,
            CriterionArg::SmQng => Criterion::SmQng,
            CriterionArg::SmQngHeralded => Criterion::SmQngHeralded,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SweepKindArg {
    /// Critical emission probability at fixed transmission.
    EtaOverNoise,
    /// Critical transmission at fixed emission probability.
    TransmissionOverNoise,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct ThresholdArgs {
    #[arg(long, value_enum, default_value = "spad")]
    detection: DetectionArg,
    /// Smallest nonzero error probability of the grid.
    #[arg(long, default_value_t = 1e-6)]
    pe_min: f64,
    /// Largest error probability; capped at 1/4 for number resolution.
    #[arg(long, default_value_t = 0.25)]
    pe_max: f64,
    /// Log-spaced grid points between the two ends.
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Points of the two-mode squeezed curve, `r` evenly spaced in (0, 1).
    #[arg(long, default_value_t = 99)]
    r_points: usize,
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct MonteCarloArgs {
    #[arg(long, value_enum, default_value = "spad")]
    detection: DetectionArg,
    /// Draws per ξ₁ value; accepts forms like `1e5`.
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    samples: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    keep_best: usize,
    /// Comma-separated values of e^{-|ξ₁|}.
    #[arg(long, value_delimiter = ',')]
    xi1_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_DISPLACEMENT_MAX)]
    displacement_max: f64,
    /// Overrides --samples with 10⁷ (spad) or 10⁶ (pnrd) draws in total.
    #[arg(long)]
    full_scale: bool,
    /// Destination of the best draws; defaults to `montecarlo-<detection>.csv`.
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
    /// Destination of the JSON summary; defaults to the CSV path with a `.json` extension.
    #[arg(long)]
    #[serde(skip)]
    summary: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct SweepArgs {
    #[arg(long, value_enum)]
    criterion: CriterionArg,
    #[arg(long, value_enum, default_value = "eta-over-noise")]
    kind: SweepKindArg,
    /// Transmission (eta-over-noise) or emission probability (transmission-over-noise).
    #[arg(long)]
    fixed: f64,
    #[arg(long, default_value_t = 1e-6)]
    nbar_min: f64,
    #[arg(long, default_value_t = 1e-1)]
    nbar_max: f64,
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Herald transmission; defaults to 1.
    #[arg(long)]
    herald_t: Option<f64>,
    /// Herald noise; defaults to the swept noise.
    #[arg(long)]
    herald_nbar: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct VerdictArgs {
    #[arg(long, value_enum)]
    criterion: CriterionArg,
    /// Success probability (`P_11` for number resolution, one-detector clicks for single-mode).
    #[arg(long)]
    ps: f64,
    #[arg(long)]
    pe1: f64,
    /// Defaults to --pe1.
    #[arg(long)]
    pe2: Option<f64>,
    /// Guard against this many independent pairs (`inf` for unbounded); click detection only.
    #[arg(long, value_parser = parse_pairs)]
    #[serde(skip)]
    pairs: Option<PairCount>,
}

#[derive(Args, Clone, Debug)]
struct ReplayArgs {
    /// File whose first line holds the manifest.
    from: PathBuf,
    /// Where to write the reproduced output.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct RunManifest {
    tool: String,
    version: String,
    command: Command,
}

impl RunManifest {
    fn new(command: &Command) -> Self {
        Self { tool: "qngc".into(), version: env!("CARGO_PKG_VERSION").into(), command: command.clone() }
    }

    fn line(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

enum Failure {
    /// Bad arguments or input files.
    Usage(String),
    /// IO or numerical failure while running.
    Run(String),
    Violation(String),
}

fn run_err(e: impl std::fmt::Display) -> Failure {
    Failure::Run(e.to_string())
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a whole number")),
    }
}

fn parse_pairs(s: &str) -> Result<PairCount, String> {
    if s == "inf" {
        return Ok(PairCount::Infinite);
    }
    match s.parse::<u32>() {
        Ok(n) if n > 0 => Ok(PairCount::Finite(n)),
        _ => Err(format!("`{s}` is neither a positive integer nor `inf`")),
    }
}

fn output_path(explicit: &Option<PathBuf>, default_name: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let dir = std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
        dir.join(default_name)
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(run_err)?;
    }
    fs::write(path, bytes).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![min];
    }
    let ratio = max / min;
    (0..points).map(|k| min * ratio.powf(k as f64 / (points - 1) as f64)).collect()
}

fn thresholds(a: &ThresholdArgs, manifest: &RunManifest) -> Result<Vec<u8>, Failure> {
    let detection: Detection = a.detection.into();
    let cap = if detection == Detection::Pnrd { 0.25 } else { 1.0 };
    if !(a.pe_min > 0.0 && a.pe_min < a.pe_max && a.pe_max <= cap) || a.points < 2 {
        return Err(Failure::Usage(format!("need 0 < pe-min < pe-max <= {cap} and at least two points")));
    }
    if a.r_points == 0 {
        return Err(Failure::Usage("r-points must be positive".into()));
    }
    let grid = log_grid(a.pe_min, a.pe_max, a.points);
    let mut out = Vec::new();
    let w = &mut out;
    let io = run_err;
    writeln!(w, "# {}", manifest.line()).map_err(io)?;
    writeln!(w, "curve,p_e,p_s").map_err(io)?;
    let threshold_id = match detection {
        Detection::Spad => "qng-spad",
        Detection::Pnrd => "qng-pnrd",
    };
    writeln!(w, "{threshold_id},{:.15},{:.15}", 0.0, 0.0).map_err(io)?;
    for &pe in &grid {
        let ps = match detection {
            Detection::Spad => qng_spad_threshold(pe),
            Detection::Pnrd => qng_pnrd_threshold(pe),
        };
        writeln!(w, "{threshold_id},{pe:.15},{ps:.15}").map_err(io)?;
    }
    if detection == Detection::Spad {
        writeln!(w, "ncl,{:.15},{:.15}", 0.0, 0.0).map_err(io)?;
        for &pe in &grid {
            writeln!(w, "ncl,{pe:.15},{pe:.15}").map_err(io)?;
        }
    }
    let r: Vec<f64> = (1..=a.r_points).map(|k| k as f64 / (a.r_points + 1) as f64).collect();
    writeln!(w, "tms,{:.15},{:.15}", 0.0, 0.0).map_err(io)?;
    for p in tms_curve(&r).map_err(run_err)? {
        let (pe, ps) = match detection {
            Detection::Spad => (p.spad.p_e(), p.spad.p_s),
            Detection::Pnrd => (p.pnrd.p_e(), p.pnrd.p11),
        };
        writeln!(w, "tms,{pe:.15},{ps:.15}").map_err(io)?;
    }
    Ok(out)
}

fn montecarlo(a: &MonteCarloArgs, manifest: &RunManifest) -> Result<(), Failure> {
    let detection: Detection = a.detection.into();
    let xi1_values = a.xi1_grid.clone().unwrap_or_else(|| DEFAULT_XI1_GRID.to_vec());
    if xi1_values.is_empty() {
        return Err(Failure::Usage("xi1-grid is empty".into()));
    }
    let samples = if a.full_scale {
        let total = if detection == Detection::Spad { FULL_SCALE_SPAD } else { FULL_SCALE_PNRD };
        total.div_ceil(xi1_values.len() as u64)
    } else {
        a.samples
    };
    let cfg = CampaignConfig {
        xi1_values,
        samples_per_value: samples,
        seed: a.seed,
        detection,
        keep_best: a.keep_best,
        displacement_max: a.displacement_max,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let start = Instant::now();
    let result = run_campaign(&cfg).map_err(run_err)?;
    let wall = start.elapsed().as_secs_f64();

    let csv_path = output_path(&a.output, &format!("montecarlo-{}.csv", detection.id()));
    let mut csv = Vec::new();
    write_best_csv(&result, Some(&manifest.line()), &mut csv).map_err(run_err)?;
    write_file(&csv_path, &csv)?;

    let summary_path = a.summary.clone().unwrap_or_else(|| csv_path.with_extension("json"));
    let mut summary: serde_json::Value = serde_json::from_str(&result.summary_json().map_err(run_err)?).map_err(run_err)?;
    summary["manifest"] = serde_json::to_value(manifest).map_err(run_err)?;
    summary["wall_time_s"] = serde_json::json!(wall);
    write_file(&summary_path, format!("{summary}\n").as_bytes())?;

    if result.certified() {
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "{} draws above the threshold, {} draws failed to evaluate",
            result.violations.len(),
            result.failures.len()
        )))
    }
}

fn sweep_cmd(a: &SweepArgs, manifest: &RunManifest) -> Result<Vec<u8>, Failure> {
    if !(a.nbar_min > 0.0 && a.nbar_min <= a.nbar_max) || a.points == 0 {
        return Err(Failure::Usage("need 0 < nbar-min <= nbar-max and at least one point".into()));
    }
    if !(0.0..=1.0).contains(&a.fixed) {
        return Err(Failure::Usage(format!("fixed value {} outside [0, 1]", a.fixed)));
    }
    let kind = match a.kind {
        SweepKindArg::EtaOverNoise => SweepKind::EtaOverNoise { t: a.fixed },
        SweepKindArg::TransmissionOverNoise => SweepKind::TransmissionOverNoise { eta: a.fixed },
    };
    let grid = log_grid(a.nbar_min, a.nbar_max, a.points);
    let criterion: Criterion = a.criterion.into();
    let records = match (a.herald_t, a.herald_nbar) {
        (None, None) => sweep(kind, &grid, criterion, None),
        (t, n) => {
            let t_h = t.unwrap_or(1.0);
            // A per-point herald noise needs one sweep per grid value.
            let mut all = Vec::new();
            for &nbar in &grid {
                let h = HeraldParams { t_h, nbar_h: n.unwrap_or(nbar) };
                h.validate().map_err(|e| Failure::Usage(e.to_string()))?;
                all.extend(sweep(kind, &[nbar], criterion, Some(h)).map_err(run_err)?);
            }
            Ok(all)
        }
    }
    .map_err(run_err)?;
    let mut out = Vec::new();
    write_sweep_csv(&records, Some(&manifest.line()), &mut out).map_err(run_err)?;
    Ok(out)
}

#[derive(Serialize)]
struct VerdictReport {
    criterion: &'static str,
    ps: f64,
    pe1: f64,
    pe2: f64,
    #[serde(flatten)]
    verdict: Verdict<f64>,
}

fn verdict(a: &VerdictArgs) -> Result<String, Failure> {
    let pe2 = a.pe2.unwrap_or(a.pe1);
    for (name, v) in [("ps", a.ps), ("pe1", a.pe1), ("pe2", pe2)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Failure::Usage(format!("--{name} = {v} is not a probability")));
        }
    }
    let criterion: Criterion = a.criterion.into();
    if a.pairs.is_some() && criterion != Criterion::QngSpad {
        return Err(Failure::Usage("--pairs applies to qng-spad only".into()));
    }
    let clicks = ClickStats { p_s: a.ps, p_e1: a.pe1, p_e2: pe2 };
    let v = match criterion {
        Criterion::Ncl => nonclassicality_test(&clicks),
        Criterion::QngSpad => match a.pairs {
            Some(n) => multimode_test(&clicks, n).map_err(|e| Failure::Usage(e.to_string()))?,
            None => qng_spad_test(&clicks),
        },
        Criterion::QngPnrd => {
            let s = PnrdStats { p11: a.ps, pe1: a.pe1, pe2 };
            if s.p_e() > 0.25 {
                return Err(Failure::Usage(format!("mean error {} above 1/4", s.p_e())));
            }
            qng_pnrd_test(&s)
        }
        Criterion::SmQng | Criterion::SmQngHeralded => {
            single_mode_qng_test(a.ps, clicks.p_e()).map_err(|e| Failure::Usage(e.to_string()))?
        }
    };
    let report = VerdictReport { criterion: criterion.id(), ps: a.ps, pe1: a.pe1, pe2, verdict: v };
    serde_json::to_string(&report).map_err(run_err)
}

fn read_manifest(path: &Path) -> Result<RunManifest, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(run_err)?;
    let json = first
        .trim_end()
        .strip_prefix("# ")
        .ok_or_else(|| Failure::Usage(format!("{} has no manifest line", path.display())))?;
    serde_json::from_str(json).map_err(|e| Failure::Usage(format!("unreadable manifest: {e}")))
}

fn execute(command: Command) -> Result<(), Failure> {
    let manifest = RunManifest::new(&command);
    match command {
        Command::Thresholds(a) => {
            let bytes = thresholds(&a, &manifest)?;
            write_file(&output_path(&a.output, &format!("thresholds-{}.csv", Detection::from(a.detection).id())), &bytes)
        }
        Command::Montecarlo(a) => montecarlo(&a, &manifest),
        Command::Sweep(a) => {
            let bytes = sweep_cmd(&a, &manifest)?;
            let name = format!("sweep-{}.csv", Criterion::from(a.criterion).id());
            write_file(&output_path(&a.output, &name), &bytes)
        }
        Command::Verdict(a) => {
            println!("{}", verdict(&a)?);
            Ok(())
        }
        Command::Replay(r) => {
            let recorded = read_manifest(&r.from)?;
            let out = Some(r.output);
            let command = match recorded.command {
                Command::Thresholds(a) => Command::Thresholds(ThresholdArgs { output: out, ..a }),
                Command::Montecarlo(a) => Command::Montecarlo(MonteCarloArgs { output: out, summary: None, ..a }),
                Command::Sweep(a) => Command::Sweep(SweepArgs { output: out, ..a }),
                Command::Verdict(_) | Command::Replay(_) => {
                    return Err(Failure::Usage("manifest does not describe a file-producing command".into()))
                }
            };
            execute(command)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) | Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Violation(m)) => {
            eprintln!("certification failed: {m}");
            ExitCode::from(EXIT_VIOLATION)
        }
    }
}
