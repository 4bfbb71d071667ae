//! Two-mode Gaussian source evaluated in the photon-number basis.
//!
//! Two routes are provided. [`brute_force_statistics`] builds the squeezed
//! inputs as explicit kets, mixes them block by block and displaces the result
//! with Fock-space displacement matrices; it is exact up to the input cutoff
//! and therefore limited to moderate squeezing. [`gaussian_oracle`] handles
//! the whole sampling range: joint counts come from displaced squeezed kets
//! built by recurrence and mixed exactly up to the resolved photon number,
//! and single-mode counts from the thermal ladder of each reduced state.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::fock::ket::{moments_to_covariance, squeezed_cutoff, squeezed_vacuum, TwoModeKet};
use crate::fock::special::{displaced_squeezed_amplitudes, thermal_frame_low_counts};
use crate::fock::PhotonStatistics;
use crate::gaussian::{BlochMessiahParams, DISPLACEMENT_CALIBRATION};
use crate::pnrd::PnrdStats;
use crate::spad::ClickStats;

type Moments = [[Complex64; 2]; 2];

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    /// Largest weight any truncated series may drop.
    pub tail_ceiling: f64,
    /// Photon numbers resolved per mode in the joint distribution.
    pub output_photons: usize,
    /// Cap on explicit input kets (brute-force route).
    pub max_input_cutoff: usize,
    /// Cap on thermal-ladder terms.
    pub max_thermal_terms: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { tail_ceiling: 1e-20, output_photons: 70, max_input_cutoff: 600, max_thermal_terms: 200_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleStats {
    pub spad: ClickStats<f64>,
    pub pnrd: PnrdStats<f64>,
    pub tail_bound: f64,
}

/// `(⟨a_i† a_j⟩, ⟨a_i a_j⟩)` of the undisplaced source after the `τ` splitter.
///
/// Input moments of `S(r e^{iθ})|0⟩` are `⟨a†a⟩ = sinh² r`, `⟨a²⟩ = −e^{iθ} sinh r cosh r`;
/// the splitter sends the output operators to `a → √τ a + √(1−τ) b`, `b → −√(1−τ) a + √τ b`.
pub fn source_moments(p: &BlochMessiahParams<f64>) -> (Moments, Moments) {
    let single = |r: f64, theta: f64| {
        (Complex64::new(r.sinh().powi(2), 0.0), -Complex64::from_polar(r.sinh() * r.cosh(), theta))
    };
    let (na, ma) = single(p.xi1_mag, 0.0);
    let (nb, mb) = single(p.xi2_mag, 2.0 * p.phi);
    let (t, r) = (p.tau.sqrt(), (1.0 - p.tau).sqrt());
    // Output mode i is Σ_k c[i][k] · input_k.
    let c = [[t, r], [-r, t]];
    let mut n = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut aa = n;
    for i in 0..2 {
        for j in 0..2 {
            n[i][j] = c[i][0] * c[j][0] * na + c[i][1] * c[j][1] * nb;
            aa[i][j] = c[i][0] * c[j][0] * ma + c[i][1] * c[j][1] * mb;
        }
    }
    (n, aa)
}

/// Complex displacements `β_A, β_B` applied after mixing: the quadrature means shift by
/// `Γ̃·(c·D)`, and a mean `(x, p)` corresponds to `β = (x + i p)/2`.
pub fn source_displacements(cov: &[[f64; 4]; 4], p: &BlochMessiahParams<f64>) -> [Complex64; 2] {
    let d = p.displacement_vector().map(|x| DISPLACEMENT_CALIBRATION * x);
    let mu: Vec<f64> = (0..4).map(|i| (0..4).map(|j| cov[i][j] * d[j]).sum()).collect();
    [Complex64::new(mu[0], mu[1]) / 2.0, Complex64::new(mu[2], mu[3]) / 2.0]
}

/// Thermal occupation and squeezing `(n̄, s, θ)` with `S(s e^{iθ}) ρ_th(n̄) S†` having
/// central moments `⟨a†a⟩ = n` and `⟨a²⟩ = m`.
fn thermal_frame(n: f64, m: Complex64) -> (f64, f64, f64) {
    let sum = 2.0 * n + 1.0;
    let gap = 2.0 * m.norm();
    let nu = ((sum - gap) * (sum + gap)).max(1.0).sqrt();
    let s = 0.5 * (gap / nu).asinh();
    let theta = if m.norm() == 0.0 { 0.0 } else { (-m).arg() };
    ((nu - 1.0) / 2.0, s, theta)
}

/// `[P(0), P(1)]` of one output mode after transmission `t`, and the discarded weight.
fn mode_low_counts(
    n: f64,
    m: Complex64,
    beta: Complex64,
    t: f64,
    opts: &OracleOptions,
) -> Result<([f64; 2], f64)> {
    let (nbar, s, theta) = thermal_frame(t * n, t * m);
    thermal_frame_low_counts(beta * t.sqrt(), s, theta, nbar, opts.tail_ceiling, opts.max_thermal_terms)
}

/// Click and number-resolving statistics of the source.
pub fn gaussian_oracle(p: &BlochMessiahParams<f64>, opts: OracleOptions) -> Result<OracleStats> {
    p.validate()?;
    let (n, aa) = source_moments(p);
    let beta = source_displacements(&moments_to_covariance(&n, &aa), p);
    let (t, r) = (p.tau.sqrt(), (1.0 - p.tau).sqrt());
    // Displacing after the splitter equals displacing the inputs by the pulled-back amplitudes.
    let pulled = [t * beta[0] - r * beta[1], r * beta[0] + t * beta[1]];
    let rows = opts.output_photons + 1;
    let len = 2 * opts.output_photons + 1;
    let a = displaced_squeezed_amplitudes(pulled[0], p.xi1_mag, 0.0, len);
    let b = displaced_squeezed_amplitudes(pulled[1], p.xi2_mag, 2.0 * p.phi, len);
    let mixed = TwoModeKet::product(&a, &b, 0.0).apply_beamsplitter_below(p.tau, 2 * opts.output_photons)?;
    let mut both_dark = 0.0;
    for q in 0..rows {
        for s in 0..rows {
            both_dark += mixed.amp(q, s).norm_sqr() * 0.5f64.powi((q + s) as i32);
        }
    }
    let (full_a, tail_a) = mode_low_counts(n[0][0].re, aa[0][0], beta[0], 1.0, &opts)?;
    let (full_b, tail_b) = mode_low_counts(n[1][1].re, aa[1][1], beta[1], 1.0, &opts)?;
    let (half_a, tail_ha) = mode_low_counts(n[0][0].re, aa[0][0], beta[0], 0.5, &opts)?;
    let (half_b, tail_hb) = mode_low_counts(n[1][1].re, aa[1][1], beta[1], 0.5, &opts)?;
    let spad = ClickStats {
        p_s: 1.0 - half_a[0] - half_b[0] + both_dark,
        p_e1: 1.0 - 2.0 * half_a[0] + full_a[0],
        p_e2: 1.0 - 2.0 * half_b[0] + full_b[0],
    };
    let pnrd = PnrdStats {
        p11: mixed.amp(1, 1).norm_sqr(),
        pe1: 1.0 - full_a[0] - full_a[1],
        pe2: 1.0 - full_b[0] - full_b[1],
    };
    let tail_bound = 2.0 * 0.5f64.powi(rows as i32) + tail_a + tail_b + tail_ha + tail_hb;
    Ok(OracleStats { spad, pnrd, tail_bound })
}

/// Undisplaced source ket: squeezed vacua on both modes mixed on the `τ` splitter.
pub fn source_ket(p: &BlochMessiahParams<f64>, opts: &OracleOptions) -> Result<TwoModeKet> {
    p.validate()?;
    let ca = squeezed_cutoff(p.xi1_mag, opts.tail_ceiling, opts.max_input_cutoff)?;
    let cb = squeezed_cutoff(p.xi2_mag, opts.tail_ceiling, opts.max_input_cutoff)?;
    let (a, ta) = squeezed_vacuum(p.xi1_mag, 0.0, ca);
    let (b, tb) = squeezed_vacuum(p.xi2_mag, 2.0 * p.phi, cb);
    TwoModeKet::product(&a, &b, ta + tb).apply_beamsplitter(p.tau)
}

/// Joint and marginal photon distributions from explicit kets; moments and displacement
/// are read off the ket itself.
pub fn brute_force_statistics(p: &BlochMessiahParams<f64>, opts: &OracleOptions) -> Result<PhotonStatistics> {
    let ket = source_ket(p, opts)?;
    let beta = source_displacements(&ket.covariance(), p);
    Ok(ket.displaced_statistics(beta, opts.output_photons))
}
