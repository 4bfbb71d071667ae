//! Coincidence witnesses and their threshold curves.
//!
//! Every test compares a success probability against a threshold evaluated at
//! the mean error probability. All comparisons are strict: a state sitting on
//! a threshold fails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::BlochMessiahParams;
use crate::linalg::{least_squares, Matrix};
use crate::pnrd::{pnrd_stats_from_params, PnrdStats};
use crate::real::Real;
use crate::spad::{spad_stats_from_params, ClickStats};

/// Detector family behind a coincidence measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detection {
    /// Click/no-click detectors on both outputs of each split mode.
    Spad,
    /// Number-resolving detectors on each mode.
    Pnrd,
}

impl Detection {
    pub fn id(self) -> &'static str {
        match self {
            Detection::Spad => "spad",
            Detection::Pnrd => "pnrd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Caveat {
    /// The threshold only rejects products of independent pair states; passing it is necessary,
    /// not sufficient, for the full claim.
    NecessaryOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Verdict<T> {
    pub passes: bool,
    pub margin: T,
    pub threshold_value: T,
    pub caveat: Option<Caveat>,
}

impl<T: Real> Verdict<T> {
    fn compare(p_s: T, threshold_value: T) -> Self {
        let margin = p_s - threshold_value;
        Self { passes: margin > T::zero(), margin, threshold_value, caveat: None }
    }
}

/// Passes when `2 P_s > P_e1 + P_e2`.
pub fn nonclassicality_test<T: Real>(c: &ClickStats<T>) -> Verdict<T> {
    Verdict::compare(c.p_s, c.p_e())
}

/// Largest success probability reachable by mixtures of Gaussian states at error `p_e`:
/// `½ √(p_e/(8+p_e)) · (2 + p_e + √(p_e(8+p_e)))`.
pub fn qng_spad_threshold<T: Real>(p_e: T) -> T {
    let eight = T::lit(8.0);
    let half = T::lit(0.5);
    half * (p_e / (eight + p_e)).sqrt() * (T::lit(2.0) + p_e + (p_e * (eight + p_e)).sqrt())
}

pub fn qng_spad_test<T: Real>(c: &ClickStats<T>) -> Verdict<T> {
    Verdict::compare(c.p_s, qng_spad_threshold(c.p_e()))
}

/// `√p_e − p_e`.
pub fn qng_pnrd_threshold<T: Real>(p_e: T) -> T {
    p_e.sqrt() - p_e
}

pub fn qng_pnrd_test<T: Real>(c: &PnrdStats<T>) -> Verdict<T> {
    Verdict::compare(c.p11, qng_pnrd_threshold(c.p_e()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TmsPoint<T> {
    pub r: T,
    pub spad: ClickStats<T>,
    pub pnrd: PnrdStats<T>,
}

/// Both detection statistics of `√(1−r²) Σ rⁿ|n,n⟩`, built through the covariance pipeline.
pub fn tms_curve<T: Real>(r_grid: &[T]) -> Result<Vec<TmsPoint<T>>> {
    r_grid
        .iter()
        .map(|&r| {
            if !(r > T::zero() && r < T::one()) {
                return Err(Error::InvalidParameter { name: "r", value: r.as_f64() });
            }
            let p = BlochMessiahParams::two_mode_squeezed(r);
            Ok(TmsPoint { r, spad: spad_stats_from_params(&p)?, pnrd: pnrd_stats_from_params(&p)? })
        })
        .collect()
}

/// `P_s + a·P_e` of the two-mode squeezed state with parameter `r`.
pub fn tms_functional<T: Real>(r: T, a: T) -> T {
    let r2 = r * r;
    let four = T::lit(4.0);
    let two = T::lit(2.0);
    r2 * (two + r2 + two * a * r2 * (four - r2)) / ((four - r2) * (two - r2))
}

/// Weight `a` for which the two-mode squeezed state with parameter `r` maximizes `P_s + a·P_e`.
pub fn tms_optimal_a<T: Real>(r: T) -> T {
    let r2 = r * r;
    let four = T::lit(4.0);
    -(T::lit(8.0) - four * (r2 - T::lit(2.0)) * r2) / (r * (four - r2).powi(3))
}

fn single_mode_gauss<T: Real>(v: T) -> T {
    let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
    (-(one - v * v) / (two * v * (one + three * v))).exp() * (v / (three + T::lit(10.0) * v + three * v * v)).sqrt()
}

/// Point `(P_s, P_e)` of the single-mode threshold curve at squeezing variance `V ∈ (0, 1]`.
///
/// `P_s` is the click probability of one detector behind a balanced splitter,
/// `P_e` the probability of both clicking.
pub fn single_mode_curve<T: Real>(v: T) -> (T, T) {
    let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
    let g = single_mode_gauss(v);
    let p_s = one - T::lit(4.0) * g;
    let h = (-(three - two * v - v * v) / (two * v * (one + three * v))).exp() * v.sqrt() / (one + v);
    let p_e = one - T::lit(8.0) * g + two * h;
    (p_s.max(T::zero()), p_e.max(T::zero()))
}

/// Grid used to confirm that `P_e(V)` decreases before inverting it.
const MONOTONE_GRID: usize = 400;
/// Smallest variance the inversion brackets.
const V_MIN: f64 = 1e-4;

fn check_single_mode_monotone<T: Real>() -> Result<()> {
    let mut prev = single_mode_curve(T::lit(V_MIN)).1;
    for k in 1..=MONOTONE_GRID {
        let v = T::lit(V_MIN + (1.0 - V_MIN) * k as f64 / MONOTONE_GRID as f64);
        let pe = single_mode_curve(v).1;
        if pe > prev + T::slack() {
            return Err(Error::NotMonotone { at: v.as_f64() });
        }
        prev = pe;
    }
    Ok(())
}

/// Single-mode threshold: inverts `P_e(V)` by bisection and returns `P_s(V*)`.
pub fn single_mode_qng_threshold<T: Real>(p_e: T) -> Result<T> {
    check_single_mode_monotone::<T>()?;
    let (mut lo, mut hi) = (T::lit(V_MIN), T::one());
    let pe_max = single_mode_curve(lo).1;
    if !(p_e >= T::zero() && p_e <= pe_max) {
        return Err(Error::Unattainable { value: p_e.as_f64(), min: 0.0, max: pe_max.as_f64() });
    }
    if p_e == T::zero() {
        return Ok(T::zero());
    }
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(4.0));
    while hi - lo > tol {
        let mid = T::lit(0.5) * (lo + hi);
        if single_mode_curve(mid).1 > p_e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(single_mode_curve(T::lit(0.5) * (lo + hi)).0)
}

/// Low-noise approximation `P_s³ = P_e/4`.
pub fn single_mode_qng_threshold_approx<T: Real>(p_e: T) -> T {
    (p_e / T::lit(4.0)).cbrt()
}

pub fn single_mode_qng_test<T: Real>(p_s: T, p_e: T) -> Result<Verdict<T>> {
    Ok(Verdict::compare(p_s, single_mode_qng_threshold(p_e)?))
}

/// Number of independent mode pairs the multimode threshold guards against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairCount {
    Finite(u32),
    Infinite,
}

/// `T₁ P_e^{1/2} + T₂ P_e + T₃ P_e^{3/2}` for `N` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SeriesThreshold<T> {
    pub n_pairs: PairCount,
    pub t1: T,
    pub t2: T,
    pub t3: T,
}

impl<T: Real> SeriesThreshold<T> {
    pub fn new(n_pairs: PairCount) -> Result<Self> {
        let (t1, t2, t3) = match n_pairs {
            PairCount::Finite(0) => return Err(Error::InvalidParameter { name: "n_pairs", value: 0.0 }),
            PairCount::Finite(n) => {
                let n = T::lit(n as f64);
                let one = T::one();
                let root = (n * (n + one)).sqrt();
                (
                    n / (T::lit(2.0) * root),
                    (T::lit(5.0) + T::lit(3.0) * n) / (T::lit(8.0) * (n + one)),
                    (T::lit(2.0) + n) * (T::lit(4.0) + T::lit(3.0) * n) / (T::lit(48.0) * (n + one) * root),
                )
            }
            PairCount::Infinite => (T::lit(0.5), T::lit(0.375), T::lit(0.0625)),
        };
        Ok(Self { n_pairs, t1, t2, t3 })
    }

    pub fn evaluate(&self, p_e: T) -> T {
        let s = p_e.sqrt();
        self.t1 * s + self.t2 * p_e + self.t3 * p_e * s
    }

    /// Series truncation leaves `O(P_e²)` terms out; only the small-`P_e` regime is meaningful.
    pub fn caveat(&self) -> Option<Caveat> {
        match self.n_pairs {
            PairCount::Finite(1) => None,
            _ => Some(Caveat::NecessaryOnly),
        }
    }
}

pub fn multimode_threshold<T: Real>(n_pairs: PairCount, p_e: T) -> Result<T> {
    Ok(SeriesThreshold::new(n_pairs)?.evaluate(p_e))
}

pub fn multimode_test<T: Real>(c: &ClickStats<T>, n_pairs: PairCount) -> Result<Verdict<T>> {
    let series = SeriesThreshold::new(n_pairs)?;
    let mut v = Verdict::compare(c.p_s, series.evaluate(c.p_e()));
    v.caveat = series.caveat();
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesBasis {
    /// Powers `P_e^{k/2}`, `k = 1..=order`.
    HalfPower,
    /// Powers `P_e^{k/4}`, `k = 1..=order`.
    QuarterPower,
}

impl SeriesBasis {
    fn step(self) -> f64 {
        match self {
            SeriesBasis::HalfPower => 0.5,
            SeriesBasis::QuarterPower => 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SeriesFit<T> {
    pub basis: SeriesBasis,
    /// `coefficients[k-1]` multiplies `P_e^{k·step}`.
    pub coefficients: Vec<T>,
    /// Exponents of the coefficients that are negligible relative to the largest one.
    pub vanishing: Vec<f64>,
    pub condition: T,
    pub residual_rms: T,
}

impl<T: Real> SeriesFit<T> {
    pub fn coefficient(&self, exponent: f64) -> Option<T> {
        let k = (exponent / self.basis.step()).round() as usize;
        if k == 0 || ((k as f64) * self.basis.step() - exponent).abs() > 1e-12 {
            return None;
        }
        self.coefficients.get(k - 1).copied()
    }
}

/// Relative size below which a fitted coefficient counts as vanishing.
pub const VANISHING_RELATIVE: f64 = 1e-6;

/// Least-squares fit of `p_s = Σ_k c_k p_e^{k·step}` on a sorted curve of small `p_e`.
pub fn fit_threshold_series<T: Real>(curve: &[(T, T)], max_order: usize, basis: SeriesBasis) -> Result<SeriesFit<T>> {
    if max_order == 0 || curve.len() < max_order {
        return Err(Error::DimensionMismatch { expected: max_order.max(1), found: curve.len() });
    }
    if curve.windows(2).any(|w| !(w[0].0 < w[1].0)) || !(curve[0].0 > T::zero()) {
        return Err(Error::InvalidParameter { name: "curve", value: curve[0].0.as_f64() });
    }
    let decades = (curve[curve.len() - 1].0 / curve[0].0).log10().as_f64();
    if decades < 2.0 - 1e-9 {
        return Err(Error::NarrowFitRange { decades });
    }
    let step = T::lit(basis.step());
    let a = Matrix::from_fn(curve.len(), max_order, |i, k| curve[i].0.powf(step * T::lit((k + 1) as f64)));
    let b: Vec<T> = curve.iter().map(|p| p.1).collect();
    let (coefficients, condition) = least_squares(&a, &b)?;
    let fitted = a.mul_vec(&coefficients);
    let ss = fitted.iter().zip(&b).fold(T::zero(), |s, (&f, &y)| s + (f - y) * (f - y));
    let residual_rms = (ss / T::lit(curve.len() as f64)).sqrt();
    let largest = coefficients.iter().fold(T::zero(), |m, c| m.max(c.abs()));
    let vanishing = coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() <= T::lit(VANISHING_RELATIVE) * largest)
        .map(|(k, _)| (k + 1) as f64 * basis.step())
        .collect();
    Ok(SeriesFit { basis, coefficients, vanishing, condition, residual_rms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(p_s: f64, p_e1: f64, p_e2: f64) -> ClickStats<f64> {
        ClickStats { p_s, p_e1, p_e2 }
    }

    #[test]
    fn nonclassicality_examples() {
        assert!(nonclassicality_test(&stats(0.25, 0.0, 0.0)).passes);
        assert!(!nonclassicality_test(&stats(0.0, 0.0, 0.0)).passes);
        let v = nonclassicality_test(&stats(1.0, 1.0, 1.0));
        assert!(!v.passes && v.margin == 0.0);
    }

    #[test]
    fn spad_threshold_examples() {
        assert_eq!(qng_spad_threshold(0.0f64), 0.0);
        assert!((qng_spad_threshold(1.0f64) - 1.0).abs() < 1e-15);
        assert!((qng_spad_threshold(0.25f64 / 7.0) - 0.6f64 / 7.0).abs() < 1e-15);
        let v = qng_spad_test(&stats(0.05, 0.04, 0.04));
        assert!(!v.passes && (v.threshold_value - 0.091945252817577).abs() < 1e-14);
        assert!(qng_spad_test(&stats(0.25, 0.0, 0.0)).passes);
    }

    #[test]
    fn pnrd_examples() {
        assert!(qng_pnrd_test(&PnrdStats { p11: 1.0, pe1: 0.0, pe2: 0.0 }).passes);
        assert!(!qng_pnrd_test(&PnrdStats { p11: 0.0, pe1: 0.0, pe2: 0.0 }).passes);
        assert!((qng_pnrd_threshold(0.0625f64) - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn optimal_a_endpoint() {
        assert!((tms_optimal_a(1.0f64) + 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn tms_curve_rejects_out_of_range() {
        assert!(tms_curve(&[0.0f64]).is_err());
        assert!(tms_curve(&[1.0f64]).is_err());
        let p = tms_curve(&[1e-4f64]).unwrap()[0];
        assert!(p.spad.p_s < 1e-7 && p.pnrd.p11 < 1e-7);
    }

    #[test]
    fn single_mode_curve_endpoints() {
        let (ps, pe) = single_mode_curve(1.0f64);
        assert!(ps.abs() < 1e-15 && pe.abs() < 1e-15);
        let (ps, pe) = single_mode_curve(0.5f64);
        assert!((ps - 0.29164229).abs() < 1e-8 && (pe - 0.05146970).abs() < 1e-8);
    }

    #[test]
    fn single_mode_inversion_round_trip() {
        let (ps, pe) = single_mode_curve(0.5f64);
        assert!((single_mode_qng_threshold(pe).unwrap() - ps).abs() < 1e-10);
        assert!(single_mode_qng_threshold(1.5f64).is_err());
        assert_eq!(single_mode_qng_threshold(0.0f64).unwrap(), 0.0);
    }

    #[test]
    fn series_coefficients_single_pair() {
        let s = SeriesThreshold::<f64>::new(PairCount::Finite(1)).unwrap();
        let r2 = 2f64.sqrt();
        assert!((s.t1 - 1.0 / (2.0 * r2)).abs() < 1e-15);
        assert!((s.t2 - 0.5).abs() < 1e-15);
        assert!((s.t3 - 7.0 / (32.0 * r2)).abs() < 1e-15);
        assert!(SeriesThreshold::<f64>::new(PairCount::Finite(0)).is_err());
        let inf = multimode_threshold(PairCount::Infinite, 0.01f64).unwrap();
        assert!((inf - 0.0538125).abs() < 1e-15);
    }

    #[test]
    fn multimode_caveat() {
        let c = stats(0.1, 0.01, 0.01);
        assert_eq!(multimode_test(&c, PairCount::Finite(1)).unwrap().caveat, None);
        assert_eq!(multimode_test(&c, PairCount::Finite(3)).unwrap().caveat, Some(Caveat::NecessaryOnly));
        assert_eq!(multimode_test(&c, PairCount::Infinite).unwrap().caveat, Some(Caveat::NecessaryOnly));
    }

    #[test]
    fn fit_synthetic_basis_member() {
        let curve: Vec<(f64, f64)> = (0..30)
            .map(|k| {
                let pe = 1e-6 * 10f64.powf(k as f64 * 3.0 / 29.0);
                (pe, 0.3 * pe.sqrt())
            })
            .collect();
        let fit = fit_threshold_series(&curve, 3, SeriesBasis::HalfPower).unwrap();
        assert!((fit.coefficients[0] - 0.3).abs() < 1e-12);
        assert!(fit.coefficients[1].abs() < 1e-9 && fit.coefficients[2].abs() < 1e-6);
    }

    #[test]
    fn fit_rejects_narrow_or_unsorted() {
        let narrow: Vec<(f64, f64)> = (1..10).map(|k| (k as f64 * 1e-4, 0.0)).collect();
        assert!(matches!(fit_threshold_series(&narrow, 2, SeriesBasis::HalfPower), Err(Error::NarrowFitRange { .. })));
        let unsorted = vec![(1e-2, 0.0), (1e-6, 0.0), (1e-4, 0.0)];
        assert!(fit_threshold_series(&unsorted, 2, SeriesBasis::HalfPower).is_err());
    }
}
