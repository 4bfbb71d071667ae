//! Photon-number-resolved probabilities of two-mode Gaussian states.
//!
//! The vacuum probability `f = P_M(Γ)` of the masked modes, seen as a function
//! of `Γ̄ = Γ` restricted to the mask, generates the one-photon terms:
//! `(1 + 2∂_{Γ̄ xx} + 2∂_{Γ̄ pp}) f` on one mode's diagonal entries is the
//! probability of exactly one photon there. Derivatives of `ln f` are
//! closed-form in `B = (Γ̄ + I)⁻¹` and `ν = Bμ`:
//!
//! * `∂_k ln f = −½ B_kk + ½ ν_k²`
//! * `∂_k ∂_l ln f = ½ B_kl² − ν_k B_kl ν_l`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{build_source_state, clamp_probability, vacuum_projection, BlochMessiahParams, GaussianState, MeasurementMask};
use crate::linalg::Matrix;
use crate::real::Real;

/// Slack allowed for negative probabilities before flagging a derivative bug.
pub const NEGATIVE_SLACK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PnrdStats<T> {
    pub p11: T,
    pub pe1: T,
    pub pe2: T,
}

impl<T: Real> PnrdStats<T> {
    pub fn p_e(&self) -> T {
        T::lit(0.5) * (self.pe1 + self.pe2)
    }

    pub fn to_f64(&self) -> PnrdStats<f64> {
        PnrdStats { p11: self.p11.as_f64(), pe1: self.pe1.as_f64(), pe2: self.pe2.as_f64() }
    }
}

/// Vacuum probability and log-derivatives on the masked quadratures.
struct Generating<T> {
    f: T,
    idx: Vec<usize>,
    grad: Vec<T>,
    b: Matrix<T>,
    nu: Vec<T>,
}

impl<T: Real> Generating<T> {
    fn new(state: &GaussianState<T>, mask: &MeasurementMask) -> Result<Self> {
        let f = vacuum_projection(state, mask)?;
        let idx: Vec<usize> = mask.0.iter().enumerate().filter(|(_, &m)| m).flat_map(|(i, _)| [2 * i, 2 * i + 1]).collect();
        let a = state.cov.matrix().select(&idx).add(&Matrix::identity(idx.len()));
        let b = a.cholesky()?.inverse();
        let mu: Vec<T> = idx.iter().map(|&i| state.means.as_slice()[i]).collect();
        let nu = b.mul_vec(&mu);
        let half = T::lit(0.5);
        let grad = (0..idx.len()).map(|k| -half * b[(k, k)] + half * nu[k] * nu[k]).collect();
        Ok(Self { f, idx, grad, b, nu })
    }

    /// Local positions (within the masked block) of the X and P entries of `mode`.
    fn local(&self, mode: usize) -> [usize; 2] {
        let k = self.idx.iter().position(|&q| q == 2 * mode).expect("mode is masked");
        [k, k + 1]
    }

    fn mode_grad(&self, mode: usize) -> T {
        self.local(mode).iter().fold(T::zero(), |s, &k| s + self.grad[k])
    }

    fn cross(&self, m1: usize, m2: usize) -> T {
        let mut s = T::zero();
        for &k in &self.local(m1) {
            for &l in &self.local(m2) {
                let bkl = self.b[(k, l)];
                s = s + T::lit(0.5) * bkl * bkl - self.nu[k] * bkl * self.nu[l];
            }
        }
        s
    }
}

/// `Π_{i ∈ modes} (1 + 2∂_{Γ̄ xᵢxᵢ} + 2∂_{Γ̄ pᵢpᵢ})` applied to the masked vacuum probability.
///
/// One mode gives `P₁` of that mode jointly with vacuum on the other masked
/// modes; two modes give `P₁,₁`.
pub fn l_operator<T: Real>(state: &GaussianState<T>, mask: &MeasurementMask, modes: &[usize]) -> Result<T> {
    for &m in modes {
        if m >= mask.0.len() || !mask.0[m] {
            return Err(Error::ModeOutOfRange { mode: m, modes: mask.0.len() });
        }
    }
    let g = Generating::new(state, mask)?;
    let two = T::lit(2.0);
    let value = match modes {
        [] => g.f,
        [i] => g.f * (T::one() + two * g.mode_grad(*i)),
        [i, j] if i != j => {
            let (gi, gj) = (g.mode_grad(*i), g.mode_grad(*j));
            g.f * (T::one() + two * gi + two * gj + T::lit(4.0) * (gi * gj + g.cross(*i, *j)))
        }
        _ => return Err(Error::Undefined("l_operator supports at most two distinct modes")),
    };
    if value < -T::lit(NEGATIVE_SLACK) {
        return Err(Error::ProbabilityOutOfRange { value: value.as_f64() });
    }
    clamp_probability(value)
}

/// `(P₀, P₁)` of one mode of a multimode state.
pub fn single_mode_counts<T: Real>(state: &GaussianState<T>, mode: usize) -> Result<(T, T)> {
    let mask = MeasurementMask::modes(state.modes(), &[mode]);
    Ok((vacuum_projection(state, &mask)?, l_operator(state, &mask, &[mode])?))
}

pub fn pnrd_stats<T: Real>(state: &GaussianState<T>) -> Result<PnrdStats<T>> {
    if state.modes() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: state.modes() });
    }
    let p11 = l_operator(state, &MeasurementMask(vec![true, true]), &[0, 1])?;
    let pe = |mode| -> Result<T> {
        let (p0, p1) = single_mode_counts(state, mode)?;
        let slack = T::slack();
        if p0 + p1 > T::one() + slack {
            return Err(Error::ProbabilityOutOfRange { value: (p0 + p1).as_f64() });
        }
        Ok((T::one() - p0 - p1).max(T::zero()))
    };
    Ok(PnrdStats { p11, pe1: pe(0)?, pe2: pe(1)? })
}

pub fn pnrd_stats_from_params<T: Real>(p: &BlochMessiahParams<T>) -> Result<PnrdStats<T>> {
    pnrd_stats(&build_source_state(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum() {
        let s = pnrd_stats(&GaussianState::<f64>::vacuum(2)).unwrap();
        assert_eq!((s.p11, s.pe1, s.pe2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn two_mode_squeezed_point() {
        let s = pnrd_stats_from_params(&BlochMessiahParams::two_mode_squeezed(0.5f64)).unwrap();
        assert!((s.p11 - 0.1875).abs() < 1e-12);
        assert!((s.pe1 - 0.0625).abs() < 1e-12 && (s.pe2 - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn coherent_times_vacuum() {
        let p = BlochMessiahParams { alpha1_mag: 1.0, psi1: -0.8, ..BlochMessiahParams::<f64>::vacuum() };
        let s = pnrd_stats_from_params(&p).unwrap();
        assert!(s.p11.abs() < 1e-14 && s.pe2.abs() < 1e-14);
        assert!((s.pe1 - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn thermal_single_mode_counts() {
        let nbar = 0.7f64;
        let v = 1.0 + 2.0 * nbar;
        let st = GaussianState {
            cov: crate::gaussian::CovarianceMatrix::new(Matrix::from_row_slice(2, 2, &[v, 0.0, 0.0, v])).unwrap(),
            means: crate::gaussian::FirstMoments::zeros(1),
        };
        let (p0, p1) = single_mode_counts(&st, 0).unwrap();
        assert!((p0 - 1.0 / (1.0 + nbar)).abs() < 1e-14);
        assert!((p1 - nbar / (1.0 + nbar).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn rejects_unmasked_mode() {
        let st = GaussianState::<f64>::vacuum(2);
        assert!(l_operator(&st, &MeasurementMask(vec![true, false]), &[1]).is_err());
    }
}
