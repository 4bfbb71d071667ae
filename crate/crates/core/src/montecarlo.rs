//! Monte-Carlo certification of the Gaussian thresholds.
//!
//! Pure two-mode Gaussian states are drawn uniformly in their Bloch-Messiah
//! parameters, with the first squeezer held at each value of a fixed grid,
//! and every draw is checked against the threshold of the chosen detection.
//! Mixtures need no sampling: the witnessed functional is linear in the state,
//! so no mixture can beat its best pure component.
//!
//! Draw `i` of grid value `v` reads words `16·i ..` of ChaCha stream `v`, so
//! results do not depend on how the work is split across threads and a
//! smaller campaign is always a prefix of a larger one with the same seed.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{qng_pnrd_test, qng_spad_test, Detection};
use crate::error::{Error, Result};
use crate::gaussian::BlochMessiahParams;
use crate::pnrd::pnrd_stats_from_params;
use crate::spad::spad_stats_from_params;

/// Values of `e^{−|ξ₁|}` held fixed in turn.
pub const DEFAULT_XI1_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
/// Margins above this count as violations.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_DISPLACEMENT_MAX: f64 = 1.5;
pub const DEFAULT_KEEP_BEST: usize = 500;
/// ChaCha words consumed per draw (eight `f64`s).
const WORDS_PER_DRAW: u128 = 16;
const CHUNK: u64 = 2048;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Fixed values of `e^{−|ξ₁|}`.
    pub xi1_values: Vec<f64>,
    pub samples_per_value: u64,
    pub seed: u64,
    pub detection: Detection,
    pub keep_best: usize,
    /// Upper end of the `|α₁|, |α₂|` range.
    pub displacement_max: f64,
}

impl CampaignConfig {
    pub fn new(detection: Detection, samples_per_value: u64, seed: u64) -> Self {
        Self {
            xi1_values: DEFAULT_XI1_GRID.to_vec(),
            samples_per_value,
            seed,
            detection,
            keep_best: DEFAULT_KEEP_BEST,
            displacement_max: DEFAULT_DISPLACEMENT_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(&v) = self.xi1_values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::InvalidParameter { name: "xi1_values", value: v });
        }
        if !(self.displacement_max > 0.0 && self.displacement_max.is_finite()) {
            return Err(Error::InvalidParameter { name: "displacement_max", value: self.displacement_max });
        }
        Ok(())
    }
}

/// One evaluated draw.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub value_idx: usize,
    pub sample_idx: u64,
    pub params: BlochMessiahParams<f64>,
    /// `P_s` (click) or `P_{1,1}` (number resolving).
    pub p_s: f64,
    pub p_e1: f64,
    pub p_e2: f64,
    /// Success probability minus the threshold at the mean error.
    pub margin: f64,
}

impl SampleRecord {
    pub fn p_e(&self) -> f64 {
        0.5 * (self.p_e1 + self.p_e2)
    }

    fn order_key(&self) -> (f64, usize, u64) {
        (self.margin.abs(), self.value_idx, self.sample_idx)
    }
}

/// A draw the Gaussian pipeline could not evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub value_idx: usize,
    pub sample_idx: u64,
    pub params: BlochMessiahParams<f64>,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignTotals {
    pub samples: u64,
    pub evaluated: u64,
    pub failed: u64,
    pub per_value: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub detection: Detection,
    pub violations: Vec<SampleRecord>,
    pub failures: Vec<SampleFailure>,
    /// Closest draws to the threshold, ascending in `|margin|` over the whole campaign.
    pub best: Vec<SampleRecord>,
    pub totals: CampaignTotals,
    /// Smallest `threshold − success` seen (negative if some draw lies above the threshold).
    pub min_gap: Option<f64>,
}

impl CampaignResult {
    /// True when no draw exceeds the threshold by more than the tolerance and every draw was evaluated.
    pub fn certified(&self) -> bool {
        self.violations.is_empty() && self.failures.is_empty()
    }

    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            detection: Detection,
            certified: bool,
            totals: &'a CampaignTotals,
            min_gap: Option<f64>,
            violations: &'a [SampleRecord],
            failures: &'a [SampleFailure],
        }
        Ok(serde_json::to_string_pretty(&Summary {
            detection: self.detection,
            certified: self.certified(),
            totals: &self.totals,
            min_gap: self.min_gap,
            violations: &self.violations,
            failures: &self.failures,
        })?)
    }
}

/// Stream positioned at the start of draw `sample_idx` for grid value `value_idx`.
pub fn draw_stream(seed: u64, value_idx: usize, sample_idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(value_idx as u64);
    rng.set_word_pos(WORDS_PER_DRAW * sample_idx as u128);
    rng
}

/// Uniform draw on the open sampling box with `e^{−|ξ₁|} = xi1_fixed`:
/// `e^{−|ξ₂|}, τ ∈ (0, 1)`, `φ, ψ₁, ψ₂ ∈ (0, 2π)`, `|α₁|, |α₂| ∈ (0, displacement_max)`.
pub fn sample_params<R: Rng + ?Sized>(rng: &mut R, xi1_fixed: f64, displacement_max: f64) -> BlochMessiahParams<f64> {
    let mut u = || -> f64 { rng.sample(Open01) };
    let xi2_mag = -u().ln();
    let phi = TAU * u();
    let tau = u();
    let alpha1_mag = displacement_max * u();
    let alpha2_mag = displacement_max * u();
    let psi1 = TAU * u();
    let psi2 = TAU * u();
    // Eighth word pair keeps the per-draw stride at a round sixteen words.
    let _ = u();
    BlochMessiahParams { xi1_mag: -xi1_fixed.ln(), xi2_mag, phi, tau, alpha1_mag, alpha2_mag, psi1, psi2 }
}

/// Success probability, error probabilities and margin of one draw.
pub fn evaluate(params: &BlochMessiahParams<f64>, detection: Detection) -> Result<(f64, f64, f64, f64)> {
    match detection {
        Detection::Spad => {
            let c = spad_stats_from_params(params)?;
            Ok((c.p_s, c.p_e1, c.p_e2, qng_spad_test(&c).margin))
        }
        Detection::Pnrd => {
            let c = pnrd_stats_from_params(params)?;
            Ok((c.p11, c.pe1, c.pe2, qng_pnrd_test(&c).margin))
        }
    }
}

#[derive(Default)]
struct Partial {
    violations: Vec<SampleRecord>,
    failures: Vec<SampleFailure>,
    best: Vec<SampleRecord>,
    evaluated: u64,
    max_margin: Option<f64>,
}

impl Partial {
    fn merge(mut self, other: Self, keep: usize) -> Self {
        self.violations.extend(other.violations);
        self.failures.extend(other.failures);
        self.best.extend(other.best);
        trim_best(&mut self.best, keep);
        self.evaluated += other.evaluated;
        self.max_margin = match (self.max_margin, other.max_margin) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self
    }
}

fn trim_best(best: &mut Vec<SampleRecord>, keep: usize) {
    best.sort_by(|a, b| {
        let (ka, kb) = (a.order_key(), b.order_key());
        ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1)).then(ka.2.cmp(&kb.2))
    });
    best.truncate(keep);
}

fn run_chunk(cfg: &CampaignConfig, value_idx: usize, start: u64, end: u64) -> Partial {
    let mut out = Partial::default();
    let mut rng = draw_stream(cfg.seed, value_idx, start);
    let xi1 = cfg.xi1_values[value_idx];
    for sample_idx in start..end {
        let params = sample_params(&mut rng, xi1, cfg.displacement_max);
        match evaluate(&params, cfg.detection) {
            Ok((p_s, p_e1, p_e2, margin)) => {
                let rec = SampleRecord { value_idx, sample_idx, params, p_s, p_e1, p_e2, margin };
                out.evaluated += 1;
                out.max_margin = Some(out.max_margin.map_or(margin, |m| m.max(margin)));
                if margin > VIOLATION_TOLERANCE {
                    out.violations.push(rec);
                }
                if cfg.keep_best > 0 {
                    out.best.push(rec);
                    if out.best.len() >= 2 * cfg.keep_best.max(64) {
                        trim_best(&mut out.best, cfg.keep_best);
                    }
                }
            }
            Err(e) => out.failures.push(SampleFailure { value_idx, sample_idx, params, error: e.to_string() }),
        }
    }
    trim_best(&mut out.best, cfg.keep_best);
    out
}

/// Evaluates every draw of the campaign; deterministic for a given configuration.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let n = cfg.samples_per_value;
    let jobs: Vec<(usize, u64, u64)> = (0..cfg.xi1_values.len())
        .flat_map(|v| (0..n.div_ceil(CHUNK)).map(move |c| (v, c * CHUNK, ((c + 1) * CHUNK).min(n))))
        .collect();
    let keep = cfg.keep_best;
    let merged = jobs
        .par_iter()
        .map(|&(v, start, end)| run_chunk(cfg, v, start, end))
        .reduce(Partial::default, |a, b| a.merge(b, keep));
    let mut violations = merged.violations;
    violations.sort_by_key(|r| (r.value_idx, r.sample_idx));
    let mut failures = merged.failures;
    failures.sort_by_key(|f| (f.value_idx, f.sample_idx));
    let samples = n * cfg.xi1_values.len() as u64;
    Ok(CampaignResult {
        detection: cfg.detection,
        violations,
        totals: CampaignTotals {
            samples,
            evaluated: merged.evaluated,
            failed: failures.len() as u64,
            per_value: vec![n; cfg.xi1_values.len()],
        },
        failures,
        best: merged.best,
        min_gap: merged.max_margin.map(|m| -m),
    })
}

pub const BEST_CSV_HEADER: &str =
    "p_e,p_s,margin,p_e1,p_e2,xi1_fixed_idx,sample_idx,xi1_mag,xi2_mag,phi,tau,alpha1_mag,alpha2_mag,psi1,psi2";

/// Writes the kept records, optionally preceded by a `#` manifest line.
pub fn write_best_csv<W: Write>(result: &CampaignResult, manifest: Option<&str>, mut out: W) -> Result<()> {
    if let Some(m) = manifest {
        writeln!(out, "# {m}")?;
    }
    writeln!(out, "{BEST_CSV_HEADER}")?;
    for r in &result.best {
        let p = &r.params;
        writeln!(
            out,
            "{:.15},{:.15},{:.15},{:.15},{:.15},{},{},{:.15},{:.15},{:.15},{:.15},{:.15},{:.15},{:.15},{:.15}",
            r.p_e(),
            r.p_s,
            r.margin,
            r.p_e1,
            r.p_e2,
            r.value_idx,
            r.sample_idx,
            p.xi1_mag,
            p.xi2_mag,
            p.phi,
            p.tau,
            p.alpha1_mag,
            p.alpha2_mag,
            p.psi1,
            p.psi2
        )?;
    }
    Ok(())
}

pub fn export_best(result: &CampaignResult, manifest: Option<&str>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_best_csv(result, manifest, &mut w)?;
    w.flush()?;
    Ok(())
}
