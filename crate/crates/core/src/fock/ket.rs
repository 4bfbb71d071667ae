//! Pure two-mode states on a truncated Fock basis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::special::displacement_matrix;
use crate::fock::PhotonStatistics;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Amplitudes `ψ(n, m)` for `n < dim_a`, `m < dim_b`.
#[derive(Clone, Debug)]
pub struct TwoModeKet {
    dim_a: usize,
    dim_b: usize,
    amps: Vec<Complex64>,
    tail_bound: f64,
}

/// Amplitudes of `S(r e^{iχ})|0⟩` up to photon number `cutoff` plus the exact discarded weight.
///
/// `c_{2k} = (−e^{iχ} tanh r)^k √((2k)!) / (2^k k! √cosh r)`.
pub fn squeezed_vacuum(r: f64, chi: f64, cutoff: usize) -> (Vec<Complex64>, f64) {
    let mut amps = vec![ZERO; cutoff + 1];
    let ratio = -Complex64::from_polar(r.tanh(), chi);
    let mut c = Complex64::new(1.0 / r.cosh().sqrt(), 0.0);
    let mut k = 0usize;
    let mut tail = 0.0;
    loop {
        let n = 2 * k;
        if n <= cutoff {
            amps[n] = c;
        } else {
            let w = c.norm_sqr();
            tail += w;
            if w < 1e-40 * tail.max(1e-300) || w == 0.0 {
                break;
            }
        }
        k += 1;
        c = c * ratio * (((2 * k - 1) as f64) / ((2 * k) as f64)).sqrt();
        if n > cutoff + 20_000 {
            break;
        }
    }
    (amps, tail)
}

/// Smallest cutoff for which the squeezed vacuum leaves less than `ceiling` behind.
pub fn squeezed_cutoff(r: f64, ceiling: f64, max_cutoff: usize) -> Result<usize> {
    if r == 0.0 {
        return Ok(0);
    }
    let mut cutoff = 2;
    loop {
        let (_, tail) = squeezed_vacuum(r, 0.0, cutoff);
        if tail < ceiling {
            return Ok(cutoff);
        }
        if cutoff >= max_cutoff {
            return Err(Error::TruncationTail { tail, ceiling });
        }
        cutoff = (cutoff + 2 + cutoff / 8).min(max_cutoff);
    }
}

impl TwoModeKet {
    pub fn vacuum() -> Self {
        Self { dim_a: 1, dim_b: 1, amps: vec![Complex64::new(1.0, 0.0)], tail_bound: 0.0 }
    }

    pub fn product(a: &[Complex64], b: &[Complex64], tail_bound: f64) -> Self {
        let mut amps = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                amps.push(x * y);
            }
        }
        Self { dim_a: a.len(), dim_b: b.len(), amps, tail_bound }
    }

    /// `√(1−r²) Σ_{n ≤ cutoff} rⁿ |n, n⟩`; the discarded weight is `r^{2(cutoff+1)}`.
    pub fn two_mode_squeezed(r: f64, cutoff: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::InvalidParameter { name: "r", value: r });
        }
        let d = cutoff + 1;
        let mut amps = vec![ZERO; d * d];
        let norm = (1.0 - r * r).sqrt();
        let mut rn = 1.0;
        for n in 0..d {
            amps[n * d + n] = Complex64::new(norm * rn, 0.0);
            rn *= r;
        }
        Ok(Self { dim_a: d, dim_b: d, amps, tail_bound: r.powi(2 * d as i32) })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    #[inline]
    pub fn amp(&self, n: usize, m: usize) -> Complex64 {
        if n < self.dim_a && m < self.dim_b {
            self.amps[n * self.dim_b + m]
        } else {
            ZERO
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies the splitter with `U a† U† = √τ a† − √(1−τ) b†`, `U b† U† = √(1−τ) a† + √τ b†`.
    ///
    /// Each total-photon block is mapped exactly, so no weight is lost; the
    /// output dimension grows to the largest occupied total photon number.
    pub fn apply_beamsplitter(&self, tau: f64) -> Result<Self> {
        self.mix_blocks(tau, self.dim_a + self.dim_b - 2)
    }

    /// As [`apply_beamsplitter`](Self::apply_beamsplitter), but only the blocks with at most
    /// `max_total` photons are kept; amplitudes there are exact, everything above is dropped.
    pub fn apply_beamsplitter_below(&self, tau: f64, max_total: usize) -> Result<Self> {
        self.mix_blocks(tau, max_total.min(self.dim_a + self.dim_b - 2))
    }

    fn mix_blocks(&self, tau: f64, kmax: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter { name: "tau", value: tau });
        }
        let t = tau.sqrt();
        let r = (1.0 - tau).sqrt();
        let d = kmax + 1;
        let mut out = vec![ZERO; d * d];
        // images[n] = U|n, K−n⟩ written over |j, K−j⟩, j = 0..=K.
        let mut images: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 0..=kmax {
            if k > 0 {
                images = next_block(&images, k, t, r);
            }
            for (n, image) in images.iter().enumerate() {
                let c = self.amp(n, k - n);
                if c == ZERO {
                    continue;
                }
                for (j, &u) in image.iter().enumerate() {
                    if u != 0.0 {
                        out[j * d + (k - j)] += c * u;
                    }
                }
            }
        }
        Ok(Self { dim_a: d, dim_b: d, amps: out, tail_bound: self.tail_bound })
    }

    /// `(⟨a_i† a_j⟩, ⟨a_i a_j⟩)` for `i, j ∈ {A, B}`.
    pub fn second_moments(&self) -> ([[Complex64; 2]; 2], [[Complex64; 2]; 2]) {
        let mut n = [[ZERO; 2]; 2];
        let mut aa = [[ZERO; 2]; 2];
        for p in 0..self.dim_a {
            for q in 0..self.dim_b {
                let c = self.amp(p, q);
                if c == ZERO {
                    continue;
                }
                let (pf, qf) = (p as f64, q as f64);
                n[0][0] += c.norm_sqr() * pf;
                n[1][1] += c.norm_sqr() * qf;
                // ⟨a† b⟩: b|p,q⟩ = √q|p,q−1⟩, a† → √(p+1)|p+1,q−1⟩.
                if q > 0 {
                    n[0][1] += self.amp(p + 1, q - 1).conj() * c * ((pf + 1.0) * qf).sqrt();
                }
                aa[0][0] += c.conj() * self.amp(p + 2, q) * ((pf + 1.0) * (pf + 2.0)).sqrt();
                aa[1][1] += c.conj() * self.amp(p, q + 2) * ((qf + 1.0) * (qf + 2.0)).sqrt();
                aa[0][1] += c.conj() * self.amp(p + 1, q + 1) * ((pf + 1.0) * (qf + 1.0)).sqrt();
            }
        }
        n[1][0] = n[0][1].conj();
        aa[1][0] = aa[0][1];
        (n, aa)
    }

    /// Symmetrized quadrature covariance in the `(X_A, P_A, X_B, P_B)` ordering, assuming zero means.
    pub fn covariance(&self) -> [[f64; 4]; 4] {
        let (n, aa) = self.second_moments();
        moments_to_covariance(&n, &aa)
    }

    /// Photon statistics after displacing mode A by `beta[0]` and mode B by `beta[1]`,
    /// resolved up to `max_photons` in each mode.
    pub fn displaced_statistics(&self, beta: [Complex64; 2], max_photons: usize) -> PhotonStatistics {
        let rows = max_photons + 1;
        let (da, db) = (self.dim_a, self.dim_b);
        let dmat_a = displacement_matrix(beta[0], rows, da);
        let dmat_b = displacement_matrix(beta[1], rows, db);
        // ψ_A(p, m) = Σ_n D_A(p, n) ψ(n, m)
        let mut psi_a = vec![ZERO; rows * db];
        for p in 0..rows {
            for n in 0..da {
                let d = dmat_a[p * da + n];
                if d == ZERO {
                    continue;
                }
                let src = &self.amps[n * db..(n + 1) * db];
                let dst = &mut psi_a[p * db..(p + 1) * db];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += d * s;
                }
            }
        }
        let marg_a: Vec<f64> = (0..rows).map(|p| psi_a[p * db..(p + 1) * db].iter().map(|c| c.norm_sqr()).sum()).collect();
        let mut joint = vec![0.0; rows * rows];
        for p in 0..rows {
            let row = &psi_a[p * db..(p + 1) * db];
            for q in 0..rows {
                let drow = &dmat_b[q * db..(q + 1) * db];
                let s: Complex64 = drow.iter().zip(row).map(|(d, c)| d * c).sum();
                joint[p * rows + q] = s.norm_sqr();
            }
        }
        let mut marg_b = vec![0.0; rows];
        for n in 0..da {
            let row = &self.amps[n * db..(n + 1) * db];
            for q in 0..rows {
                let drow = &dmat_b[q * db..(q + 1) * db];
                let s: Complex64 = drow.iter().zip(row).map(|(d, c)| d * c).sum();
                marg_b[q] += s.norm_sqr();
            }
        }
        PhotonStatistics::new(rows, joint, marg_a, marg_b, self.tail_bound + 2f64.powi(-(rows as i32)))
    }
}

/// Quadrature covariance (`X = a + a†`, `P = −i(a − a†)`) from the central
/// moments `n[i][j] = ⟨a_i† a_j⟩` and `aa[i][j] = ⟨a_i a_j⟩`.
pub fn moments_to_covariance(n: &[[Complex64; 2]; 2], aa: &[[Complex64; 2]; 2]) -> [[f64; 4]; 4] {
    let mut g = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            let d = if i == j { 1.0 } else { 0.0 };
            let nre = (n[i][j] + n[j][i]).re;
            g[2 * i][2 * j] = 2.0 * aa[i][j].re + nre + d;
            g[2 * i + 1][2 * j + 1] = -2.0 * aa[i][j].re + nre + d;
            let x_p = 2.0 * aa[i][j].im + 2.0 * n[i][j].im;
            g[2 * i][2 * j + 1] = x_p;
            g[2 * j + 1][2 * i] = x_p;
        }
    }
    g
}

/// Images of block `k` from those of block `k − 1`.
fn next_block(prev: &[Vec<f64>], k: usize, t: f64, r: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(k + 1);
    // U|n, k−n⟩ = (t a† − r b†) U|n−1, k−n⟩ / √n for n ≥ 1.
    let raise_a = |v: &[f64], scale: f64| -> Vec<f64> {
        let mut w = vec![0.0; k + 1];
        for (j, &c) in v.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            // basis |j, k−1−j⟩
            w[j + 1] += scale * t * c * ((j + 1) as f64).sqrt();
            w[j] -= scale * r * c * ((k - j) as f64).sqrt();
        }
        w
    };
    // U|0, k⟩ = (r a† + t b†) U|0, k−1⟩ / √k.
    let mut w0 = vec![0.0; k + 1];
    for (j, &c) in prev[0].iter().enumerate() {
        w0[j + 1] += r * c * ((j + 1) as f64).sqrt();
        w0[j] += t * c * ((k - j) as f64).sqrt();
    }
    let s = 1.0 / (k as f64).sqrt();
    out.push(w0.into_iter().map(|x| x * s).collect());
    for n in 1..=k {
        out.push(raise_a(&prev[n - 1], 1.0 / (n as f64).sqrt()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squeezed_vacuum_normalized_and_variance() {
        let (r, chi) = (0.8, 0.6);
        let (amps, tail) = squeezed_vacuum(r, chi, 200);
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        assert!((norm + tail - 1.0).abs() < 1e-14);
        let nbar: f64 = amps.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum();
        assert!((nbar - r.sinh().powi(2)).abs() < 1e-12);
        let ket = TwoModeKet::product(&amps, &[Complex64::new(1.0, 0.0)], tail);
        let g = ket.covariance();
        assert!((g[0][0] - ((2.0 * r).cosh() - (2.0 * r).sinh() * chi.cos())).abs() < 1e-12);
        assert!((g[0][1] + (2.0 * r).sinh() * chi.sin()).abs() < 1e-12);
    }

    #[test]
    fn beamsplitter_single_photon() {
        let one = [ZERO, Complex64::new(1.0, 0.0)];
        let vac = [Complex64::new(1.0, 0.0)];
        let out = TwoModeKet::product(&one, &vac, 0.0).apply_beamsplitter(0.5).unwrap();
        assert!((out.amp(1, 0).norm_sqr() - 0.5).abs() < 1e-15);
        assert!((out.amp(0, 1).norm_sqr() - 0.5).abs() < 1e-15);
        assert!((out.amp(0, 1).re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn beamsplitter_hong_ou_mandel() {
        let one = [ZERO, Complex64::new(1.0, 0.0)];
        let out = TwoModeKet::product(&one, &one, 0.0).apply_beamsplitter(0.5).unwrap();
        assert!(out.amp(1, 1).norm() < 1e-15);
        assert!((out.amp(2, 0).norm_sqr() - 0.5).abs() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn beamsplitter_preserves_norm_and_total_number() {
        let (a, ta) = squeezed_vacuum(0.7, 0.0, 60);
        let (b, tb) = squeezed_vacuum(0.5, 1.9, 60);
        let ket = TwoModeKet::product(&a, &b, ta + tb);
        let out = ket.apply_beamsplitter(0.3).unwrap();
        assert!((out.norm_sqr() - ket.norm_sqr()).abs() < 1e-13);
        let (n_in, _) = ket.second_moments();
        let (n_out, _) = out.second_moments();
        assert!(((n_in[0][0] + n_in[1][1]) - (n_out[0][0] + n_out[1][1])).norm() < 1e-11);
    }

    #[test]
    fn two_mode_squeezed_tail() {
        let k = TwoModeKet::two_mode_squeezed(0.5, 30).unwrap();
        assert!((k.tail_bound() - 0.25f64.powi(31)).abs() < 1e-30);
        assert!((k.norm_sqr() + k.tail_bound() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cutoff_search() {
        let c = squeezed_cutoff(1.2, 1e-20, 2000).unwrap();
        let (_, tail) = squeezed_vacuum(1.2, 0.0, c);
        assert!(tail < 1e-20);
        assert!(squeezed_cutoff(3.0, 1e-20, 50).is_err());
    }
}
