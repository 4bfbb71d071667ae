//! Lossy, noisy photon-pair source.
//!
//! The emitted state is `η|1,1⟩⟨1,1| + (1−η)|0,0⟩⟨0,0|`; each arm then receives
//! a uniformly phase-averaged displacement of mean photon number `n̄ᵢ` and
//! afterwards a loss of transmission `Tᵢ`. Closed forms cover the symmetric
//! case; everything else goes through the Fock-space channels. Because the
//! emitted state is a mixture of products and the channels act locally, the
//! photon statistics are `η·P₁(n)P₁(m) + (1−η)·P₀(n)P₀(m)` with `P_k` the
//! single-mode distribution of `|k⟩` after noise and loss.

use serde::{Deserialize, Serialize};

use crate::criteria::{
    nonclassicality_test, qng_pnrd_test, qng_spad_test, single_mode_qng_test, Detection, Verdict,
};
use crate::error::{Error, Result};
use crate::fock::{noisy_lossy_distribution, single_mode_two_spad, PhotonStatistics, DEFAULT_TAIL_CEILING};
use crate::pnrd::PnrdStats;
use crate::spad::ClickStats;

/// Bracket width at which boundary searches stop.
pub const BISECTION_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Pair-emission probability.
    pub eta: f64,
    pub t1: f64,
    pub t2: f64,
    pub nbar1: f64,
    pub nbar2: f64,
}

impl SourceParams {
    pub fn symmetric(eta: f64, t: f64, nbar: f64) -> Self {
        Self { eta, t1: t, t2: t, nbar1: nbar, nbar2: nbar }
    }

    pub fn validate(&self) -> Result<()> {
        unit("eta", self.eta)?;
        unit("t1", self.t1)?;
        unit("t2", self.t2)?;
        non_negative("nbar1", self.nbar1)?;
        non_negative("nbar2", self.nbar2)
    }
}

/// Loss and noise on the heralding arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldParams {
    pub t_h: f64,
    pub nbar_h: f64,
}

impl HeraldParams {
    pub fn validate(&self) -> Result<()> {
        unit("t_h", self.t_h)?;
        non_negative("nbar_h", self.nbar_h)
    }
}

fn unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelStats {
    Spad(ClickStats<f64>),
    Pnrd(PnrdStats<f64>),
}

/// No-click probabilities of the symmetric source in the split-mode scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoClick {
    /// One detector on each side dark.
    pub joint: f64,
    /// One detector on one side dark.
    pub single: f64,
    /// Both detectors of one side dark.
    pub side: f64,
}

/// Symmetric no-click probabilities:
/// `joint = [1 − η + η(1 − T/2 + n̄T²/4)²] e^{−T n̄}`,
/// `single = ¼[4 + ηT(−2 + n̄T)] e^{−T n̄/2}`,
/// `side = [1 − ηT(1 − n̄T)] e^{−T n̄}`.
pub fn spad_no_click_symmetric(eta: f64, t: f64, nbar: f64) -> NoClick {
    let q = 1.0 - t / 2.0 + nbar * t * t / 4.0;
    NoClick {
        joint: (1.0 - eta + eta * q * q) * (-t * nbar).exp(),
        single: 0.25 * (4.0 + eta * t * (-2.0 + nbar * t)) * (-t * nbar / 2.0).exp(),
        side: (1.0 - eta * t * (1.0 - nbar * t)) * (-t * nbar).exp(),
    }
}

pub fn spad_stats_symmetric(eta: f64, t: f64, nbar: f64) -> ClickStats<f64> {
    let p = spad_no_click_symmetric(eta, t, nbar);
    let p_e = 1.0 - 2.0 * p.single + p.side;
    ClickStats { p_s: 1.0 - 2.0 * p.single + p.joint, p_e1: p_e, p_e2: p_e }
}

pub fn pnrd_stats_symmetric(eta: f64, t: f64, nbar: f64) -> PnrdStats<f64> {
    let inner = 1.0 + nbar - 3.0 * nbar * t + nbar * nbar * t * t;
    let p11 = (eta * t * t * inner * inner + (1.0 - eta) * t * t * nbar * nbar) * (-2.0 * t * nbar).exp();
    let pe = 1.0 - (1.0 + eta * nbar * nbar * t.powi(3) + nbar * (t - 2.0 * eta * t * t)) * (-t * nbar).exp();
    PnrdStats { p11, pe1: pe, pe2: pe }
}

/// Low-noise approximations `(P_s, P_{e,1}, P_{e,2})`:
/// `P_s ≈ T₁T₂η[1 + n̄₁(1−T₁) + n̄₂(1−T₂)]/4 + T₁T₂n̄₁n̄₂/4`, `P_{e,i} ≈ ηTᵢ²n̄ᵢ + Tᵢ²n̄ᵢ²/4`.
pub fn spad_stats_approx(p: &SourceParams) -> ClickStats<f64> {
    let tt = p.t1 * p.t2;
    let p_s = tt * p.eta * (1.0 + p.nbar1 * (1.0 - p.t1) + p.nbar2 * (1.0 - p.t2)) / 4.0 + tt * p.nbar1 * p.nbar2 / 4.0;
    let pe = |t: f64, n: f64| p.eta * t * t * n + t * t * n * n / 4.0;
    ClickStats { p_s, p_e1: pe(p.t1, p.nbar1), p_e2: pe(p.t2, p.nbar2) }
}

/// Statistics of the two mixture components, which fix the source at any `η`.
#[derive(Clone, Debug)]
pub struct PairComponents {
    pair: PhotonStatistics,
    vacuum: PhotonStatistics,
}

impl PairComponents {
    pub fn new(t1: f64, t2: f64, nbar1: f64, nbar2: f64) -> Result<Self> {
        SourceParams { eta: 0.0, t1, t2, nbar1, nbar2 }.validate()?;
        let (one_a, ta1) = noisy_lossy_distribution(1, nbar1, t1, DEFAULT_TAIL_CEILING)?;
        let (one_b, tb1) = noisy_lossy_distribution(1, nbar2, t2, DEFAULT_TAIL_CEILING)?;
        let (zero_a, ta0) = noisy_lossy_distribution(0, nbar1, t1, DEFAULT_TAIL_CEILING)?;
        let (zero_b, tb0) = noisy_lossy_distribution(0, nbar2, t2, DEFAULT_TAIL_CEILING)?;
        let len = [&one_a, &one_b, &zero_a, &zero_b].iter().map(|v| v.len()).max().unwrap_or(1);
        let pad = |v: Vec<f64>| {
            let mut v = v;
            v.resize(len, 0.0);
            v
        };
        Ok(Self {
            pair: PhotonStatistics::product(&pad(one_a), &pad(one_b), ta1 + tb1)?,
            vacuum: PhotonStatistics::product(&pad(zero_a), &pad(zero_b), ta0 + tb0)?,
        })
    }

    pub fn statistics(&self, eta: f64) -> Result<PhotonStatistics> {
        PhotonStatistics::mix(&self.pair, &self.vacuum, eta)
    }

    pub fn stats(&self, eta: f64, detection: Detection) -> Result<ModelStats> {
        let s = self.statistics(eta)?;
        Ok(match detection {
            Detection::Spad => ModelStats::Spad(s.spad()),
            Detection::Pnrd => ModelStats::Pnrd(s.pnrd()),
        })
    }
}

/// Statistics for arbitrary arm parameters through the Fock-space channels.
pub fn stats_general(p: &SourceParams, detection: Detection) -> Result<ModelStats> {
    p.validate()?;
    PairComponents::new(p.t1, p.t2, p.nbar1, p.nbar2)?.stats(p.eta, detection)
}

/// Outcome of a boundary search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Smallest passing value found and the largest failing value below it.
    Critical { value: f64, below: f64 },
    /// Passes on the whole bracket, including its lower end.
    Always,
    /// Fails on the whole bracket.
    Never,
}

impl Boundary {
    pub fn value(&self) -> Option<f64> {
        match self {
            Boundary::Critical { value, .. } => Some(*value),
            Boundary::Always => Some(0.0),
            Boundary::Never => None,
        }
    }
}

/// Bisection for the smallest `x ∈ [0, 1]` with `passes(x)`, assuming one crossing.
fn search(mut passes: impl FnMut(f64) -> Result<bool>) -> Result<Boundary> {
    if !passes(1.0)? {
        return Ok(Boundary::Never);
    }
    if passes(0.0)? {
        return Ok(Boundary::Always);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Boundary::Critical { value: hi, below: lo })
}

/// Pair-source criteria.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Nonclassical coincidences, click detection.
    Ncl,
    QngSpad,
    QngPnrd,
    /// Single-mode test on one arm, partner ignored.
    SmQng,
    /// Single-mode test on one arm, heralded by the partner.
    SmQngHeralded,
}

impl Criterion {
    pub const ALL: [Criterion; 5] =
        [Criterion::Ncl, Criterion::QngSpad, Criterion::QngPnrd, Criterion::SmQng, Criterion::SmQngHeralded];

    pub fn id(self) -> &'static str {
        match self {
            Criterion::Ncl => "ncl",
            Criterion::QngSpad => "qng-spad",
            Criterion::QngPnrd => "qng-pnrd",
            Criterion::SmQng => "sm-qng",
            Criterion::SmQngHeralded => "sm-qng-heralded",
        }
    }

    pub fn detection(self) -> Detection {
        match self {
            Criterion::QngPnrd => Detection::Pnrd,
            _ => Detection::Spad,
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL.into_iter().find(|c| c.id() == s).ok_or(Error::Undefined("unknown criterion"))
    }
}

fn pair_verdict(c: &PairComponents, eta: f64, criterion: Criterion) -> Result<Verdict<f64>> {
    Ok(match (criterion, c.stats(eta, criterion.detection())?) {
        (Criterion::Ncl, ModelStats::Spad(s)) => nonclassicality_test(&s),
        (Criterion::QngSpad, ModelStats::Spad(s)) => qng_spad_test(&s),
        (Criterion::QngPnrd, ModelStats::Pnrd(s)) => qng_pnrd_test(&s),
        _ => return Err(Error::Undefined("not a pair criterion")),
    })
}

/// Smallest `η` at which the pair statistics pass the quantum non-Gaussianity test.
pub fn qng_boundary_eta(t1: f64, t2: f64, nbar1: f64, nbar2: f64, detection: Detection) -> Result<Boundary> {
    let c = PairComponents::new(t1, t2, nbar1, nbar2)?;
    let criterion = match detection {
        Detection::Spad => Criterion::QngSpad,
        Detection::Pnrd => Criterion::QngPnrd,
    };
    search(|eta| Ok(pair_verdict(&c, eta, criterion)?.passes))
}

/// Low-noise estimate
/// `η ≈ [n̄₁T₁² + n̄₂T₂² + 4√((n̄₁T₁² − n̄₂T₂²)² − T₁²T₂²(n̄₁²T₁² − n̄₂²T₂²))] / (2T₁²T₂²)`.
pub fn qng_boundary_eta_approx(t1: f64, t2: f64, nbar1: f64, nbar2: f64) -> Result<f64> {
    let (a, b) = (nbar1 * t1 * t1, nbar2 * t2 * t2);
    let disc = (a - b).powi(2) - t1 * t1 * t2 * t2 * (nbar1 * a - nbar2 * b);
    if disc < 0.0 {
        return Err(Error::Undefined("negative discriminant"));
    }
    Ok((a + b + 4.0 * disc.sqrt()) / (2.0 * t1 * t1 * t2 * t2))
}

/// Smallest common transmission `T` at which the symmetric-loss source passes at fixed `η`.
pub fn qng_boundary_t(eta: f64, nbar1: f64, nbar2: f64, detection: Detection) -> Result<Boundary> {
    unit("eta", eta)?;
    let criterion = match detection {
        Detection::Spad => Criterion::QngSpad,
        Detection::Pnrd => Criterion::QngPnrd,
    };
    search(|t| {
        let c = PairComponents::new(t, t, nbar1, nbar2)?;
        Ok(pair_verdict(&c, eta, criterion)?.passes)
    })
}

/// Depth estimate `T ≈ √((n̄₁ + n̄₂)/η)`.
pub fn qng_depth_approx(eta: f64, nbar1: f64, nbar2: f64) -> f64 {
    ((nbar1 + nbar2) / eta).sqrt()
}

/// Smallest `η` at which the coincidences are nonclassical.
pub fn nonclassicality_boundary_eta(t1: f64, t2: f64, nbar1: f64, nbar2: f64) -> Result<Boundary> {
    let c = PairComponents::new(t1, t2, nbar1, nbar2)?;
    search(|eta| Ok(pair_verdict(&c, eta, Criterion::Ncl)?.passes))
}

/// Estimate `η ≈ (T₁n̄₁ − T₂n̄₂)² / (2T₁T₂)`.
pub fn nonclassicality_boundary_eta_approx(t1: f64, t2: f64, nbar1: f64, nbar2: f64) -> f64 {
    (t1 * nbar1 - t2 * nbar2).powi(2) / (2.0 * t1 * t2)
}

/// Effective single-photon weight after heralding,
/// `η_s = η T_h [1 − e^{−n̄_h T_h}(1 − T_h + n̄_h T_h²)] / [1 − e^{−n̄_h T_h}(1 − η T_h + η n̄_h T_h²)]`.
pub fn heralded_eta(eta: f64, h: &HeraldParams) -> Result<f64> {
    unit("eta", eta)?;
    h.validate()?;
    let (t, n) = (h.t_h, h.nbar_h);
    let e = (-n * t).exp();
    let num = eta * t * (1.0 - e * (1.0 - t + n * t * t));
    let den = 1.0 - e * (1.0 - eta * t + eta * n * t * t);
    if den <= 0.0 {
        return Err(Error::Undefined("herald click probability vanishes"));
    }
    Ok(num / den)
}

/// Probability that a herald click came with a photon pair: [`heralded_eta`] without the leading `T_h`.
pub fn herald_posterior(eta: f64, h: &HeraldParams) -> Result<f64> {
    if h.t_h == 0.0 {
        return Err(Error::Undefined("herald click probability vanishes"));
    }
    Ok(heralded_eta(eta, h)? / h.t_h)
}

/// Statistics of `η_s|1⟩ + (1−η_s)|0⟩` after noise and loss, split onto two click detectors.
#[derive(Clone, Debug)]
pub struct SingleModeComponents {
    photon: (f64, f64),
    vacuum: (f64, f64),
}

impl SingleModeComponents {
    pub fn new(t: f64, nbar: f64) -> Result<Self> {
        unit("t", t)?;
        non_negative("nbar", nbar)?;
        let (one, _) = noisy_lossy_distribution(1, nbar, t, DEFAULT_TAIL_CEILING)?;
        let (zero, _) = noisy_lossy_distribution(0, nbar, t, DEFAULT_TAIL_CEILING)?;
        Ok(Self { photon: single_mode_two_spad(&one), vacuum: single_mode_two_spad(&zero) })
    }

    /// `p_s` = one detector clicks, `p_e1 = p_e2` = both click.
    pub fn stats(&self, eta_s: f64) -> ClickStats<f64> {
        let p_s = eta_s * self.photon.0 + (1.0 - eta_s) * self.vacuum.0;
        // `1 − 2P_a + P_A` can round just below zero when nothing reaches the detectors.
        let p_e = (eta_s * self.photon.1 + (1.0 - eta_s) * self.vacuum.1).max(0.0);
        ClickStats { p_s, p_e1: p_e, p_e2: p_e }
    }
}

pub fn single_mode_stats(eta_s: f64, t: f64, nbar: f64) -> Result<ClickStats<f64>> {
    unit("eta_s", eta_s)?;
    Ok(SingleModeComponents::new(t, nbar)?.stats(eta_s))
}

/// Closed forms of [`single_mode_stats`]: with `P_a = (1 − η_sT/2 + η_s n̄T²/4) e^{−T n̄/2}` and
/// `P_A = [1 − η_sT(1 − n̄T)] e^{−T n̄}`, `p_s = 1 − P_a` and `p_e = 1 − 2P_a + P_A`.
pub fn single_mode_stats_closed(eta_s: f64, t: f64, nbar: f64) -> ClickStats<f64> {
    let pa = (1.0 - eta_s * t / 2.0 + eta_s * nbar * t * t / 4.0) * (-t * nbar / 2.0).exp();
    let pb = (1.0 - eta_s * t * (1.0 - nbar * t)) * (-t * nbar).exp();
    let p_e = 1.0 - 2.0 * pa + pb;
    ClickStats { p_s: 1.0 - pa, p_e1: p_e, p_e2: p_e }
}

fn single_mode_passes(c: &SingleModeComponents, eta_s: f64) -> Result<bool> {
    let s = c.stats(eta_s);
    Ok(single_mode_qng_test(s.p_s, s.p_e1)?.passes)
}

fn effective_eta(eta: f64, herald: Option<&HeraldParams>) -> Result<f64> {
    match herald {
        None => Ok(eta),
        Some(h) => heralded_eta(eta, h),
    }
}

/// Smallest `η` at which the single-mode test passes; `herald` selects the heralded scheme.
pub fn single_mode_boundary_eta(t: f64, nbar: f64, herald: Option<&HeraldParams>) -> Result<Boundary> {
    let c = SingleModeComponents::new(t, nbar)?;
    search(|eta| single_mode_passes(&c, effective_eta(eta, herald)?))
}

/// Smallest transmission at which the single-mode test passes at fixed `η`.
pub fn single_mode_boundary_t(eta: f64, nbar: f64, herald: Option<&HeraldParams>) -> Result<Boundary> {
    let eta_s = effective_eta(eta, herald)?;
    search(|t| single_mode_passes(&SingleModeComponents::new(t, nbar)?, eta_s))
}

/// Unheralded low-noise condition `η > √(2n̄/T)`.
pub fn single_mode_boundary_eta_approx(t: f64, nbar: f64) -> f64 {
    (2.0 * nbar / t).sqrt()
}

/// What a sweep holds fixed and what it solves for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Critical `η` over `n̄` at fixed transmission.
    EtaOverNoise { t: f64 },
    /// Critical transmission over `n̄` at fixed `η`.
    TransmissionOverNoise { eta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub swept: f64,
    pub critical: f64,
    pub criterion: Criterion,
    pub detection: Detection,
    pub kind: SweepKind,
}

/// Herald arm used by heralded sweeps at noise `n̄`: lossless, with the same noise as the signal.
pub fn default_herald(nbar: f64) -> HeraldParams {
    HeraldParams { t_h: 1.0, nbar_h: nbar }
}

/// Critical value for one symmetric grid point.
pub fn critical_point(kind: SweepKind, nbar: f64, criterion: Criterion, herald: Option<HeraldParams>) -> Result<Boundary> {
    let herald = herald.unwrap_or_else(|| default_herald(nbar));
    match (kind, criterion) {
        (SweepKind::EtaOverNoise { t }, Criterion::Ncl) => nonclassicality_boundary_eta(t, t, nbar, nbar),
        (SweepKind::EtaOverNoise { t }, Criterion::QngSpad) => qng_boundary_eta(t, t, nbar, nbar, Detection::Spad),
        (SweepKind::EtaOverNoise { t }, Criterion::QngPnrd) => qng_boundary_eta(t, t, nbar, nbar, Detection::Pnrd),
        (SweepKind::EtaOverNoise { t }, Criterion::SmQng) => single_mode_boundary_eta(t, nbar, None),
        (SweepKind::EtaOverNoise { t }, Criterion::SmQngHeralded) => single_mode_boundary_eta(t, nbar, Some(&herald)),
        (SweepKind::TransmissionOverNoise { eta }, Criterion::Ncl) => {
            search(|t| Ok(pair_verdict(&PairComponents::new(t, t, nbar, nbar)?, eta, Criterion::Ncl)?.passes))
        }
        (SweepKind::TransmissionOverNoise { eta }, Criterion::QngSpad) => qng_boundary_t(eta, nbar, nbar, Detection::Spad),
        (SweepKind::TransmissionOverNoise { eta }, Criterion::QngPnrd) => qng_boundary_t(eta, nbar, nbar, Detection::Pnrd),
        (SweepKind::TransmissionOverNoise { eta }, Criterion::SmQng) => single_mode_boundary_t(eta, nbar, None),
        (SweepKind::TransmissionOverNoise { eta }, Criterion::SmQngHeralded) => {
            single_mode_boundary_t(eta, nbar, Some(&herald))
        }
    }
}

/// Critical values over a noise grid; points that never pass are left out.
pub fn sweep(kind: SweepKind, nbar_grid: &[f64], criterion: Criterion, herald: Option<HeraldParams>) -> Result<Vec<SweepRecord>> {
    use rayon::prelude::*;
    let points: Vec<Result<Option<SweepRecord>>> = nbar_grid
        .par_iter()
        .map(|&nbar| {
            Ok(critical_point(kind, nbar, criterion, herald)?.value().map(|critical| SweepRecord {
                swept: nbar,
                critical,
                criterion,
                detection: criterion.detection(),
                kind,
            }))
        })
        .collect();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        if let Some(r) = p? {
            out.push(r);
        }
    }
    Ok(out)
}

pub const SWEEP_CSV_HEADER: &str = "swept,critical,criterion,detection,kind,fixed";

pub fn write_sweep_csv<W: std::io::Write>(records: &[SweepRecord], manifest: Option<&str>, mut out: W) -> Result<()> {
    if let Some(m) = manifest {
        writeln!(out, "# {m}")?;
    }
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        let (kind, fixed) = match r.kind {
            SweepKind::EtaOverNoise { t } => ("eta-over-noise", t),
            SweepKind::TransmissionOverNoise { eta } => ("transmission-over-noise", eta),
        };
        writeln!(out, "{:.15},{:.15},{},{},{},{:.15}", r.swept, r.critical, r.criterion.id(), r.detection.id(), kind, fixed)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_pair_and_vacuum() {
        let s = spad_stats_symmetric(1.0, 1.0, 0.0);
        assert!((s.p_s - 0.25).abs() < 1e-15 && s.p_e1.abs() < 1e-15);
        let s = spad_stats_symmetric(0.0, 0.4, 0.0);
        assert!(s.p_s.abs() < 1e-15 && s.p_e1.abs() < 1e-15);
        let n = pnrd_stats_symmetric(1.0, 1.0, 0.0);
        assert!((n.p11 - 1.0).abs() < 1e-15 && n.pe1.abs() < 1e-15);
        let n = pnrd_stats_symmetric(0.0, 0.7, 0.0);
        assert!(n.p11.abs() < 1e-15 && n.pe1.abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_channels() {
        let (eta, t, nbar) = (0.5, 0.3, 0.01);
        let p = SourceParams::symmetric(eta, t, nbar);
        match stats_general(&p, Detection::Spad).unwrap() {
            ModelStats::Spad(s) => {
                let c = spad_stats_symmetric(eta, t, nbar);
                assert!((s.p_s - c.p_s).abs() < 1e-12 && (s.p_e1 - c.p_e1).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        match stats_general(&p, Detection::Pnrd).unwrap() {
            ModelStats::Pnrd(s) => {
                let c = pnrd_stats_symmetric(eta, t, nbar);
                assert!((s.p11 - c.p11).abs() < 1e-12 && (s.pe1 - c.pe1).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dark_arm_has_no_coincidences() {
        let p = SourceParams { eta: 1.0, t1: 1.0, t2: 0.0, nbar1: 0.0, nbar2: 0.0 };
        match stats_general(&p, Detection::Spad).unwrap() {
            ModelStats::Spad(s) => assert!(s.p_s.abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn noiseless_source_passes_at_any_emission() {
        let b = qng_boundary_eta(0.5, 0.5, 0.0, 0.0, Detection::Spad).unwrap();
        assert!(b.value().unwrap() <= 2.0 * BISECTION_TOLERANCE, "{b:?}");
        assert!(nonclassicality_boundary_eta(0.5, 0.7, 0.0, 0.0).unwrap().value().unwrap() <= 2.0 * BISECTION_TOLERANCE);
    }

    #[test]
    fn boundary_point_passes_and_the_one_below_fails() {
        let c = PairComponents::new(0.5, 0.5, 1e-3, 1e-3).unwrap();
        let Boundary::Critical { value, below } = qng_boundary_eta(0.5, 0.5, 1e-3, 1e-3, Detection::Spad).unwrap() else {
            panic!()
        };
        assert!(value - below <= BISECTION_TOLERANCE);
        assert!(pair_verdict(&c, value, Criterion::QngSpad).unwrap().passes);
        assert!(!pair_verdict(&c, below, Criterion::QngSpad).unwrap().passes);
        assert_eq!(qng_boundary_eta(0.5, 0.5, 0.5, 0.5, Detection::Spad).unwrap(), Boundary::Never);
    }

    #[test]
    fn heralding_limits() {
        let h = HeraldParams { t_h: 0.8, nbar_h: 1e-9 };
        assert!((heralded_eta(0.3, &h).unwrap() - 0.8).abs() < 1e-6);
        assert!(heralded_eta(0.5, &HeraldParams { t_h: 0.0, nbar_h: 0.1 }).is_err());
        let v = heralded_eta(0.5, &HeraldParams { t_h: 0.8, nbar_h: 0.01 }).unwrap();
        assert!((0.0..=1.0).contains(&v));
        assert!((heralded_eta(1.0, &default_herald(0.05)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_mode_cases() {
        let s = single_mode_stats(1.0, 1.0, 0.0).unwrap();
        assert!((s.p_s - 0.5).abs() < 1e-15 && s.p_e1.abs() < 1e-15);
        let s = single_mode_stats(0.0, 0.6, 0.0).unwrap();
        assert!(s.p_s.abs() < 1e-15 && s.p_e1.abs() < 1e-15);
        let (a, b) = (single_mode_stats(0.4, 0.6, 0.02).unwrap(), single_mode_stats_closed(0.4, 0.6, 0.02));
        assert!((a.p_s - b.p_s).abs() < 1e-12 && (a.p_e1 - b.p_e1).abs() < 1e-12);
    }

    #[test]
    fn criterion_ids_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(c.id().parse::<Criterion>().unwrap(), c);
        }
        assert!("nope".parse::<Criterion>().is_err());
    }
}
