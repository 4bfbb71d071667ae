//! Click/no-click coincidences behind the split-mode scheme.
//!
//! Each source mode is split on a 50:50 splitter and both outputs carry an
//! ideal click detector. A success is a click on A together with a click on
//! B; an error on side i is a click on both outputs of that side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{build_scheme_state, clamp_probability, vacuum_projection, BlochMessiahParams, GaussianState, MeasurementMask};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ClickStats<T> {
    pub p_s: T,
    pub p_e1: T,
    pub p_e2: T,
}

impl<T: Real> ClickStats<T> {
    pub fn new(p_s: T, p_e1: T, p_e2: T) -> Result<Self> {
        Ok(Self { p_s: clamp_probability(p_s)?, p_e1: clamp_probability(p_e1)?, p_e2: clamp_probability(p_e2)? })
    }

    /// Mean error probability `(p_e1 + p_e2) / 2`.
    pub fn p_e(&self) -> T {
        T::lit(0.5) * (self.p_e1 + self.p_e2)
    }

    pub fn to_f64(&self) -> ClickStats<f64> {
        ClickStats { p_s: self.p_s.as_f64(), p_e1: self.p_e1.as_f64(), p_e2: self.p_e2.as_f64() }
    }
}

/// Success and error probabilities of a four-mode state in the layout of
/// [`crate::gaussian::build_scheme_state`]: outputs 0,1 belong to source A and 2,3 to B.
pub fn spad_stats<T: Real>(state: &GaussianState<T>) -> Result<ClickStats<T>> {
    if state.modes() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: state.modes() });
    }
    let p = |modes: &[usize]| vacuum_projection(state, &MeasurementMask::modes(4, modes));
    let a = p(&[1])?;
    let b = p(&[2])?;
    let ab = p(&[1, 2])?;
    let aa = p(&[0, 1])?;
    let bb = p(&[2, 3])?;
    let one = T::one();
    let two = T::lit(2.0);
    ClickStats::new(one - a - b + ab, one - two * a + aa, one - two * b + bb)
}

pub fn spad_stats_from_params<T: Real>(p: &BlochMessiahParams<T>) -> Result<ClickStats<T>> {
    spad_stats(&build_scheme_state(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_gives_zeros() {
        let s = spad_stats(&GaussianState::<f64>::vacuum(4)).unwrap();
        assert_eq!((s.p_s, s.p_e1, s.p_e2), (0.0, 0.0, 0.0));
        assert!(spad_stats(&GaussianState::<f64>::vacuum(2)).is_err());
        let z = spad_stats_from_params(&BlochMessiahParams::<f64>::vacuum()).unwrap();
        assert!(z.p_s.abs() < 1e-15 && z.p_e().abs() < 1e-15);
    }

    #[test]
    fn two_mode_squeezed_point() {
        let r = 0.5f64;
        let s = spad_stats_from_params(&BlochMessiahParams::two_mode_squeezed(r)).unwrap();
        let r2 = r * r;
        let ps = r2 * (2.0 + r2) / ((4.0 - r2) * (2.0 - r2));
        let pe = r2 * r2 / (2.0 - r2);
        assert!((s.p_s - ps).abs() < 1e-12, "{} vs {}", s.p_s, ps);
        assert!((s.p_e1 - pe).abs() < 1e-12 && (s.p_e2 - pe).abs() < 1e-12);
        assert!((s.p_s - 0.0857142857142857).abs() < 1e-12);
        assert!((s.p_e() - 0.0357142857142857).abs() < 1e-12);
    }

    #[test]
    fn single_coherent_mode_leaves_partner_dark() {
        let p = BlochMessiahParams { alpha1_mag: 1.0, psi1: 1.1, ..BlochMessiahParams::<f64>::vacuum() };
        let s = spad_stats_from_params(&p).unwrap();
        let click = 1.0 - (-0.5f64).exp();
        assert!(s.p_s.abs() < 1e-14 && s.p_e2.abs() < 1e-14);
        assert!((s.p_e1 - click * click).abs() < 1e-14);
    }

    #[test]
    fn bright_coherent_pair_saturates() {
        let p = BlochMessiahParams {
            alpha1_mag: 6.0,
            alpha2_mag: 6.0,
            psi2: std::f64::consts::FRAC_PI_2,
            ..BlochMessiahParams::<f64>::vacuum()
        };
        let s = spad_stats_from_params(&p).unwrap();
        assert!(s.p_s > 1.0 - 1e-6 && s.p_e1 + s.p_e2 > 2.0 - 1e-6);
    }
}
