//! Truncated Fock-space oracle.
//!
//! An independent route to every click statistic in the crate: states are
//! built photon by photon, channels act on explicit density matrices, and
//! detection probabilities are direct sums over the truncated basis.

pub mod density;
pub mod gaussian;
pub mod ket;
pub mod special;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pnrd::PnrdStats;
use crate::spad::ClickStats;

pub use density::{FockState, QuadratureOrder};
pub use gaussian::{gaussian_oracle, OracleOptions, OracleStats};
pub use ket::TwoModeKet;

/// Default ceiling on discarded probability mass.
pub const DEFAULT_TAIL_CEILING: f64 = 1e-12;
/// Largest per-mode cutoff the density-matrix routes will try.
pub const MAX_DENSITY_CUTOFF: usize = 60;

/// Photon-number statistics of a two-mode state, resolved up to `dim − 1` photons per mode.
#[derive(Clone, Debug, Serialize)]
pub struct PhotonStatistics {
    dim: usize,
    joint: Vec<f64>,
    marg_a: Vec<f64>,
    marg_b: Vec<f64>,
    tail_bound: f64,
}

impl PhotonStatistics {
    pub fn new(dim: usize, joint: Vec<f64>, marg_a: Vec<f64>, marg_b: Vec<f64>, tail_bound: f64) -> Self {
        Self { dim, joint, marg_a, marg_b, tail_bound }
    }

    /// Statistics of a two-mode density matrix.
    pub fn from_state(state: &FockState) -> Result<Self> {
        if state.modes() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: state.modes() });
        }
        let dim = state.cutoff() + 1;
        Ok(Self {
            dim,
            joint: state.photon_number_distribution(),
            marg_a: state.marginal(0)?,
            marg_b: state.marginal(1)?,
            tail_bound: state.tail_bound(),
        })
    }

    /// Statistics of `w·a + (1−w)·b`.
    pub fn mix(a: &Self, b: &Self, w: f64) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch { expected: a.dim, found: b.dim });
        }
        let lin = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| w * p + (1.0 - w) * q).collect() };
        Ok(Self {
            dim: a.dim,
            joint: lin(&a.joint, &b.joint),
            marg_a: lin(&a.marg_a, &b.marg_a),
            marg_b: lin(&a.marg_b, &b.marg_b),
            tail_bound: a.tail_bound.max(b.tail_bound),
        })
    }

    /// Independent modes with the given single-mode distributions.
    pub fn product(pa: &[f64], pb: &[f64], tail_bound: f64) -> Result<Self> {
        if pa.len() != pb.len() {
            return Err(Error::DimensionMismatch { expected: pa.len(), found: pb.len() });
        }
        let dim = pa.len();
        let joint = pa.iter().flat_map(|x| pb.iter().map(move |y| x * y)).collect();
        Ok(Self { dim, joint, marg_a: pa.to_vec(), marg_b: pb.to_vec(), tail_bound })
    }

    pub fn joint(&self, n: usize, m: usize) -> f64 {
        self.joint[n * self.dim + m]
    }

    pub fn marginal_a(&self) -> &[f64] {
        &self.marg_a
    }

    pub fn marginal_b(&self) -> &[f64] {
        &self.marg_b
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Each mode split on a balanced splitter with a click detector on each output.
    pub fn spad(&self) -> ClickStats<f64> {
        let half_pow = |n: usize| 0.5f64.powi(n as i32);
        let pa: f64 = self.marg_a.iter().enumerate().map(|(n, p)| p * half_pow(n)).sum();
        let pb: f64 = self.marg_b.iter().enumerate().map(|(n, p)| p * half_pow(n)).sum();
        let mut pab = 0.0;
        for n in 0..self.dim {
            for m in 0..self.dim {
                pab += self.joint(n, m) * half_pow(n + m);
            }
        }
        ClickStats {
            p_s: 1.0 - pa - pb + pab,
            p_e1: 1.0 - 2.0 * pa + self.marg_a[0],
            p_e2: 1.0 - 2.0 * pb + self.marg_b[0],
        }
    }

    pub fn pnrd(&self) -> PnrdStats<f64> {
        PnrdStats {
            p11: self.joint(1, 1),
            pe1: 1.0 - self.marg_a[0] - self.marg_a[1],
            pe2: 1.0 - self.marg_b[0] - self.marg_b[1],
        }
    }
}

/// Single-mode photon distribution through a balanced splitter with a click
/// detector on each output: `(P(one given detector clicks), P(both click))`.
pub fn single_mode_two_spad(p: &[f64]) -> (f64, f64) {
    let no_click_one: f64 = p.iter().enumerate().map(|(n, q)| q * 0.5f64.powi(n as i32)).sum();
    (1.0 - no_click_one, 1.0 - 2.0 * no_click_one + p[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Both modes split 50:50 onto four click detectors.
    Spad4Mode,
    /// Number-resolving detectors directly on both modes.
    Pnrd2Mode,
    /// One mode split 50:50 onto two click detectors.
    SingleMode2Spad,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchemeStats {
    Spad(ClickStats<f64>),
    Pnrd(PnrdStats<f64>),
    /// `p_s` = one detector clicks, `p_e1 = p_e2` = both click.
    SingleMode(ClickStats<f64>),
}

/// Detection probabilities by direct summation over the truncated basis.
///
/// A two-mode state under [`Scheme::Spad4Mode`] is split analytically; a
/// four-mode state is taken to be already split (layout 0 = partner of A,
/// 1 = A, 2 = B, 3 = partner of B). Likewise a two-mode state under
/// [`Scheme::SingleMode2Spad`] is read as the two splitter outputs.
pub fn click_probabilities(state: &FockState, scheme: Scheme) -> Result<SchemeStats> {
    if state.tail_bound() > DEFAULT_TAIL_CEILING {
        return Err(Error::TruncationTail { tail: state.tail_bound(), ceiling: DEFAULT_TAIL_CEILING });
    }
    match (scheme, state.modes()) {
        (Scheme::Spad4Mode, 2) => Ok(SchemeStats::Spad(PhotonStatistics::from_state(state)?.spad())),
        (Scheme::Spad4Mode, 4) => {
            let p = state.photon_number_distribution();
            let d = state.cutoff() + 1;
            let vac = |modes: &[usize]| -> f64 {
                p.iter()
                    .enumerate()
                    .filter(|(i, _)| modes.iter().all(|&m| (i / d.pow(3 - m as u32)) % d == 0))
                    .map(|(_, q)| q)
                    .sum()
            };
            let (a, b, ab) = (vac(&[1]), vac(&[2]), vac(&[1, 2]));
            Ok(SchemeStats::Spad(ClickStats {
                p_s: 1.0 - a - b + ab,
                p_e1: 1.0 - 2.0 * a + vac(&[0, 1]),
                p_e2: 1.0 - 2.0 * b + vac(&[2, 3]),
            }))
        }
        (Scheme::Pnrd2Mode, 2) => Ok(SchemeStats::Pnrd(PhotonStatistics::from_state(state)?.pnrd())),
        (Scheme::SingleMode2Spad, 1) => {
            let (p_s, p_e) = single_mode_two_spad(&state.marginal(0)?);
            Ok(SchemeStats::SingleMode(ClickStats { p_s, p_e1: p_e, p_e2: p_e }))
        }
        (Scheme::SingleMode2Spad, 2) => {
            let p = state.photon_number_distribution();
            let (a, b) = (state.marginal(0)?[0], state.marginal(1)?[0]);
            let p_e = 1.0 - a - b + p[0];
            Ok(SchemeStats::SingleMode(ClickStats { p_s: 1.0 - a, p_e1: p_e, p_e2: p_e }))
        }
        (_, modes) => Err(Error::DimensionMismatch { expected: 2, found: modes }),
    }
}

/// Photon distribution of `|photons⟩` after phase-averaged displacement noise `nbar`
/// followed by loss `t`, with the cutoff raised until the discarded weight is below `ceiling`.
pub fn noisy_lossy_distribution(photons: usize, nbar: f64, t: f64, ceiling: f64) -> Result<(Vec<f64>, f64)> {
    let mut cutoff = initial_noise_cutoff(photons, nbar, ceiling);
    loop {
        let attempt = FockState::make_fock(&[photons], cutoff)
            .map(|s| s.with_ceiling(f64::INFINITY))
            .and_then(|s| s.apply_phase_averaged_displacement(0, nbar, QuadratureOrder::Adaptive))
            .and_then(|s| s.apply_loss(0, t));
        let state = attempt?;
        if state.tail_bound() < ceiling {
            return Ok((state.marginal(0)?, state.tail_bound()));
        }
        if cutoff >= MAX_DENSITY_CUTOFF {
            return Err(Error::TruncationTail { tail: state.tail_bound(), ceiling });
        }
        cutoff = (cutoff + cutoff / 2).min(MAX_DENSITY_CUTOFF);
    }
}

fn initial_noise_cutoff(photons: usize, nbar: f64, ceiling: f64) -> usize {
    let mut c = photons + 4;
    while c < MAX_DENSITY_CUTOFF && density::poisson_tail(nbar * 4.0 + 1e-300, c.saturating_sub(photons + 2)) > ceiling * 1e-3 {
        c += 2;
    }
    c.min(MAX_DENSITY_CUTOFF)
}
