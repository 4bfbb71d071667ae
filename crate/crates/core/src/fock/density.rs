//! Truncated density operators on one to four modes.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::ket::TwoModeKet;
use crate::fock::special::{binomial_row, displacement_matrix, gauss_legendre, ln_factorials};
use crate::fock::DEFAULT_TAIL_CEILING;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Smallest and largest Gauss-Legendre orders tried when phase averaging.
pub const QUADRATURE_START: usize = 8;
pub const QUADRATURE_MAX: usize = 512;
/// Convergence target for phase averaging, on photon-number probabilities.
pub const QUADRATURE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureOrder {
    /// Double the order from [`QUADRATURE_START`] until probabilities move by less than
    /// [`QUADRATURE_TOLERANCE`].
    Adaptive,
    Fixed(usize),
}

/// Density matrix over `modes` modes, each truncated at `cutoff` photons.
///
/// Basis index: mode 0 is the most significant digit in base `cutoff + 1`.
#[derive(Clone, Debug)]
pub struct FockState {
    modes: usize,
    cutoff: usize,
    rho: Vec<Complex64>,
    tail_bound: f64,
    ceiling: f64,
}

impl FockState {
    fn dim_of(modes: usize, cutoff: usize) -> usize {
        (cutoff + 1).pow(modes as u32)
    }

    pub fn vacuum(modes: usize, cutoff: usize) -> Self {
        let dim = Self::dim_of(modes, cutoff);
        let mut rho = vec![ZERO; dim * dim];
        rho[0] = Complex64::new(1.0, 0.0);
        Self { modes, cutoff, rho, tail_bound: 0.0, ceiling: DEFAULT_TAIL_CEILING }
    }

    /// Product Fock state `|n₀, n₁, …⟩`.
    pub fn make_fock(photons: &[usize], cutoff: usize) -> Result<Self> {
        if let Some(&n) = photons.iter().find(|&&n| n > cutoff) {
            return Err(Error::InvalidParameter { name: "photons", value: n as f64 });
        }
        let mut s = Self::vacuum(photons.len(), cutoff);
        let idx = s.index_of(photons);
        s.rho[0] = ZERO;
        let dim = s.dim();
        s.rho[idx * dim + idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Single-mode coherent state; the Poisson weight above `cutoff` is the tail bound.
    pub fn make_coherent(alpha: Complex64, cutoff: usize) -> Result<Self> {
        let d = displacement_matrix(alpha, cutoff + 1, 1);
        let amps: Vec<Complex64> = (0..=cutoff).map(|m| d[m]).collect();
        let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        let tail = poisson_tail(alpha.norm_sqr(), cutoff).max(0.0).min(1.0 - kept + 1e-16);
        Self::from_amplitudes(1, cutoff, &amps, tail)
    }

    /// `√(1−r²) Σ rⁿ |n, n⟩` truncated at `cutoff`.
    pub fn make_two_mode_squeezed(r: f64, cutoff: usize) -> Result<Self> {
        let ket = TwoModeKet::two_mode_squeezed(r, cutoff)?;
        if ket.tail_bound() > DEFAULT_TAIL_CEILING {
            return Err(Error::TruncationTail { tail: ket.tail_bound(), ceiling: DEFAULT_TAIL_CEILING });
        }
        Self::from_ket(&ket, cutoff)
    }

    /// Density matrix of a two-mode ket, keeping photon numbers up to `cutoff`.
    pub fn from_ket(ket: &TwoModeKet, cutoff: usize) -> Result<Self> {
        let d = cutoff + 1;
        let mut amps = vec![ZERO; d * d];
        let mut dropped = 0.0;
        let (da, db) = ket.dims();
        for n in 0..da {
            for m in 0..db {
                let c = ket.amp(n, m);
                if n < d && m < d {
                    amps[n * d + m] = c;
                } else {
                    dropped += c.norm_sqr();
                }
            }
        }
        Self::from_amplitudes(2, cutoff, &amps, ket.tail_bound() + dropped)
    }

    pub fn from_amplitudes(modes: usize, cutoff: usize, amps: &[Complex64], tail_bound: f64) -> Result<Self> {
        let dim = Self::dim_of(modes, cutoff);
        if amps.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: amps.len() });
        }
        let mut rho = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                rho[i * dim + j] = amps[i] * amps[j].conj();
            }
        }
        let s = Self { modes, cutoff, rho, tail_bound, ceiling: DEFAULT_TAIL_CEILING };
        s.check_tail()?;
        Ok(s)
    }

    /// Tail ceiling enforced after every channel.
    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        Self::dim_of(self.modes, self.cutoff)
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.rho[i * self.dim() + j]
    }

    pub fn index_of(&self, photons: &[usize]) -> usize {
        photons.iter().fold(0, |acc, &n| acc * (self.cutoff + 1) + n)
    }

    fn digits(&self, mut idx: usize) -> Vec<usize> {
        let d = self.cutoff + 1;
        let mut out = vec![0; self.modes];
        for k in (0..self.modes).rev() {
            out[k] = idx % d;
            idx /= d;
        }
        out
    }

    fn stride(&self, mode: usize) -> usize {
        (self.cutoff + 1).pow((self.modes - 1 - mode) as u32)
    }

    fn digit(&self, idx: usize, mode: usize) -> usize {
        (idx / self.stride(mode)) % (self.cutoff + 1)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.modes {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange { mode, modes: self.modes })
        }
    }

    fn check_tail(&self) -> Result<()> {
        if self.tail_bound > self.ceiling {
            Err(Error::TruncationTail { tail: self.tail_bound, ceiling: self.ceiling })
        } else {
            Ok(())
        }
    }

    pub fn trace(&self) -> f64 {
        let dim = self.dim();
        (0..dim).map(|i| self.rho[i * dim + i].re).sum()
    }

    /// Diagonal of ρ in the product Fock basis.
    pub fn photon_number_distribution(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|i| self.rho[i * dim + i].re).collect()
    }

    /// Photon-number distribution of one mode with the others traced out.
    pub fn marginal(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let mut out = vec![0.0; self.cutoff + 1];
        for (i, p) in self.photon_number_distribution().into_iter().enumerate() {
            out[self.digit(i, mode)] += p;
        }
        Ok(out)
    }

    /// Tensor product (modes of `self` first).
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::DimensionMismatch { expected: self.cutoff, found: other.cutoff });
        }
        let (da, db) = (self.dim(), other.dim());
        let dim = da * db;
        let mut rho = vec![ZERO; dim * dim];
        for i1 in 0..da {
            for j1 in 0..da {
                let a = self.rho[i1 * da + j1];
                if a == ZERO {
                    continue;
                }
                for i2 in 0..db {
                    for j2 in 0..db {
                        rho[(i1 * db + i2) * dim + (j1 * db + j2)] = a * other.rho[i2 * db + j2];
                    }
                }
            }
        }
        Ok(Self {
            modes: self.modes + other.modes,
            cutoff: self.cutoff,
            rho,
            tail_bound: self.tail_bound + other.tail_bound,
            ceiling: self.ceiling.max(other.ceiling),
        })
    }

    /// `w·self + (1−w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.modes != other.modes || self.cutoff != other.cutoff {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let rho = self.rho.iter().zip(&other.rho).map(|(a, b)| a * w + b * (1.0 - w)).collect();
        Ok(Self { rho, tail_bound: w * self.tail_bound + (1.0 - w) * other.tail_bound, ..self.clone() })
    }

    /// Loss on one mode: beam splitter of transmissivity `t` to a vacuum ancilla, ancilla traced out.
    pub fn apply_loss(&self, mode: usize, t: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter { name: "t", value: t });
        }
        let rows: Vec<Vec<f64>> = (0..=self.cutoff).map(|n| binomial_row(n, t)).collect();
        let dim = self.dim();
        let stride = self.stride(mode);
        let mut out = vec![ZERO; dim * dim];
        for i in 0..dim {
            let n = self.digit(i, mode);
            for j in 0..dim {
                let c = self.rho[i * dim + j];
                if c == ZERO {
                    continue;
                }
                let n2 = self.digit(j, mode);
                for k in 0..=n.min(n2) {
                    // A_k|n⟩ = √(C(n,k) tⁿ⁻ᵏ (1−t)ᵏ) |n−k⟩
                    let w = (rows[n][k] * rows[n2][k]).sqrt();
                    out[(i - k * stride) * dim + (j - k * stride)] += c * w;
                }
            }
        }
        Ok(Self { rho: out, ..self.clone() })
    }

    /// Uniform phase average of `D(√n̄ e^{iφ})` on one mode, `φ ∈ [0, 2π)`, by Gauss-Legendre quadrature.
    pub fn apply_phase_averaged_displacement(&self, mode: usize, nbar: f64, order: QuadratureOrder) -> Result<Self> {
        self.check_mode(mode)?;
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::InvalidParameter { name: "nbar", value: nbar });
        }
        if nbar == 0.0 {
            return Ok(self.clone());
        }
        let d = self.cutoff + 1;
        let base = displacement_matrix(Complex64::new(nbar.sqrt(), 0.0), d, d);
        let averaged = |q: usize| -> Vec<Complex64> {
            let rule = gauss_legendre(q);
            let mut acc = vec![ZERO; self.rho.len()];
            for (&x, &w) in rule.0.iter().zip(&rule.1) {
                let phi = std::f64::consts::PI * (x + 1.0);
                // ⟨m|D(√n̄ e^{iφ})|n⟩ = e^{i(m−n)φ} ⟨m|D(√n̄)|n⟩
                let u: Vec<Complex64> = (0..d * d)
                    .map(|k| base[k] * Complex64::from_polar(1.0, ((k / d) as f64 - (k % d) as f64) * phi))
                    .collect();
                let transformed = self.conjugate_by(mode, &u);
                for (a, b) in acc.iter_mut().zip(transformed) {
                    *a += b * (0.5 * w);
                }
            }
            acc
        };
        let dim = self.dim();
        let rho = match order {
            QuadratureOrder::Fixed(q) => averaged(q),
            QuadratureOrder::Adaptive => {
                let mut q = QUADRATURE_START;
                let mut prev = averaged(q);
                loop {
                    q *= 2;
                    if q > QUADRATURE_MAX {
                        return Err(Error::QuadratureNotConverged { order: q / 2 });
                    }
                    let next = averaged(q);
                    let change = (0..dim).map(|i| (next[i * dim + i] - prev[i * dim + i]).norm()).fold(0.0, f64::max);
                    prev = next;
                    if change < QUADRATURE_TOLERANCE {
                        break prev;
                    }
                }
            }
        };
        let mut out = Self { rho, ..self.clone() };
        let lost = (self.trace() - out.trace()).max(0.0);
        out.tail_bound += lost;
        out.check_tail()?;
        Ok(out)
    }

    /// `(U ⊗ I) ρ (U ⊗ I)†` with `U` a `(cutoff+1)²` row-major single-mode matrix on `mode`.
    fn conjugate_by(&self, mode: usize, u: &[Complex64]) -> Vec<Complex64> {
        let d = self.cutoff + 1;
        let dim = self.dim();
        let stride = self.stride(mode);
        let mut left = vec![ZERO; dim * dim];
        for i in 0..dim {
            let n = self.digit(i, mode);
            let base_i = i - n * stride;
            for m in 0..d {
                let c = u[m * d + n];
                if c == ZERO {
                    continue;
                }
                let dst = (base_i + m * stride) * dim;
                let src = i * dim;
                for j in 0..dim {
                    left[dst + j] += c * self.rho[src + j];
                }
            }
        }
        let mut out = vec![ZERO; dim * dim];
        for j in 0..dim {
            let n = self.digit(j, mode);
            let base_j = j - n * stride;
            for m in 0..d {
                let c = u[m * d + n].conj();
                if c == ZERO {
                    continue;
                }
                let col = base_j + m * stride;
                for i in 0..dim {
                    out[i * dim + col] += left[i * dim + j] * c;
                }
            }
        }
        out
    }

    /// Splitter between modes `i` and `j` with the convention of
    /// [`TwoModeKet::apply_beamsplitter`]; weight pushed above the cutoff is added to the tail bound.
    pub fn apply_beamsplitter(&self, i: usize, j: usize, tau: f64) -> Result<Self> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(Error::SameMode(i));
        }
        let d = self.cutoff + 1;
        // Pair unitary restricted to the truncated pair space: column (n, m) → image over (n', m').
        let mut columns: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); d * d];
        for n in 0..d {
            for m in 0..d {
                let ket = pair_ket(n, m).apply_beamsplitter(tau)?;
                let (da, db) = ket.dims();
                for p in 0..da.min(d) {
                    for q in 0..db.min(d) {
                        let c = ket.amp(p, q).re;
                        if c != 0.0 {
                            columns[n * d + m].push((p, q, c));
                        }
                    }
                }
            }
        }
        let dim = self.dim();
        let (si, sj) = (self.stride(i), self.stride(j));
        let image = |idx: usize| -> Vec<(usize, f64)> {
            let (n, m) = (self.digit(idx, i), self.digit(idx, j));
            let base = idx - n * si - m * sj;
            columns[n * d + m].iter().map(|&(p, q, c)| (base + p * si + q * sj, c)).collect()
        };
        let images: Vec<Vec<(usize, f64)>> = (0..dim).map(image).collect();
        let mut left = vec![ZERO; dim * dim];
        for (a, img) in images.iter().enumerate() {
            for &(b, c) in img {
                for k in 0..dim {
                    left[b * dim + k] += self.rho[a * dim + k] * c;
                }
            }
        }
        let mut out = vec![ZERO; dim * dim];
        for (a, img) in images.iter().enumerate() {
            for &(b, c) in img {
                for k in 0..dim {
                    out[k * dim + b] += left[k * dim + a] * c;
                }
            }
        }
        let mut res = Self { rho: out, ..self.clone() };
        res.tail_bound += (self.trace() - res.trace()).max(0.0);
        res.check_tail()?;
        Ok(res)
    }

    /// Smallest eigenvalue of the Hermitian part of ρ.
    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.dim();
        let m = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (self.rho[i * dim + j] + self.rho[j * dim + i].conj()));
        SymmetricEigen::new(m).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// JSON dump of the photon-number distribution (test diagnostics).
    pub fn distribution_json(&self) -> String {
        #[derive(Serialize)]
        struct Entry {
            photons: Vec<usize>,
            p: f64,
        }
        let entries: Vec<Entry> = self
            .photon_number_distribution()
            .into_iter()
            .enumerate()
            .map(|(i, p)| Entry { photons: self.digits(i), p })
            .collect();
        serde_json::json!({ "cutoff": self.cutoff, "tail_bound": self.tail_bound, "entries": entries }).to_string()
    }
}

fn pair_ket(n: usize, m: usize) -> TwoModeKet {
    let mut a = vec![ZERO; n + 1];
    a[n] = Complex64::new(1.0, 0.0);
    let mut b = vec![ZERO; m + 1];
    b[m] = Complex64::new(1.0, 0.0);
    TwoModeKet::product(&a, &b, 0.0)
}

/// `P(N > cutoff)` for `N ~ Poisson(mean)`, summed directly from the first omitted term.
pub fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let lf = ln_factorials(cutoff + 2);
    let mut term = ((cutoff + 1) as f64 * mean.ln() - mean - lf[cutoff + 1]).exp();
    let mut sum = 0.0;
    let mut k = cutoff + 1;
    while term > sum * 1e-18 && term > 0.0 && k < cutoff + 100_000 {
        sum += term;
        k += 1;
        term *= mean / k as f64;
    }
    sum
}
