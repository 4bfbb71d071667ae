//! Matrix elements and quadrature rules used by the Fock-space oracle.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `ln n!` for `n = 0..len`.
pub fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    for n in 0..len {
        if n > 1 {
            acc += (n as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// `C(n, k) · t^{n−k} · (1−t)^k` for `k = 0..=n`.
pub fn binomial_row(n: usize, t: f64) -> Vec<f64> {
    let lf = ln_factorials(n + 1);
    (0..=n)
        .map(|k| {
            let ln_c = lf[n] - lf[k] - lf[n - k];
            let a = pow_or_one(t, n - k);
            let b = pow_or_one(1.0 - t, k);
            ln_c.exp() * a * b
        })
        .collect()
}

fn pow_or_one(x: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k as i32)
    }
}

/// `⟨m|D(β)|n⟩` for `m < rows`, `n < cols`, row-major.
///
/// Uses the associated-Laguerre form
/// `⟨m|D(β)|n⟩ = √(n!/m!) β^{m−n} e^{−|β|²/2} L_n^{(m−n)}(|β|²)` for `m ≥ n`
/// (and the conjugate-symmetric form for `m < n`), with the Laguerre
/// polynomials run forward in degree along each diagonal and the prefactor
/// kept in log space.
pub fn displacement_matrix(beta: Complex64, rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    let x = beta.norm_sqr();
    let lf = ln_factorials(rows.max(cols) + 1);
    if x == 0.0 {
        for k in 0..rows.min(cols) {
            out[k * cols + k] = Complex64::new(1.0, 0.0);
        }
        return out;
    }
    let ln_abs = beta.norm().ln();
    let phase = beta / beta.norm();
    // m ≥ n: diagonal offset a = m − n, degree n.
    for a in 0..rows {
        let len = (rows - a).min(cols);
        fill_diagonal(len, a, x, |deg, lag, ln_scale| {
            let (m, n) = (deg + a, deg);
            let ln_pre = 0.5 * (lf[n] - lf[m]) + a as f64 * ln_abs - 0.5 * x + ln_scale;
            out[m * cols + n] = phase.powu(a as u32) * scaled(lag, ln_pre);
        });
    }
    // m < n: offset a = n − m, degree m, factor (−β*)^{a}.
    let neg_conj = -phase.conj();
    for a in 1..cols {
        let len = (cols - a).min(rows);
        fill_diagonal(len, a, x, |deg, lag, ln_scale| {
            let (m, n) = (deg, deg + a);
            let ln_pre = 0.5 * (lf[m] - lf[n]) + a as f64 * ln_abs - 0.5 * x + ln_scale;
            out[m * cols + n] = neg_conj.powu(a as u32) * scaled(lag, ln_pre);
        });
    }
    out
}

fn scaled(value: f64, ln_factor: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        value.signum() * (value.abs().ln() + ln_factor).exp()
    }
}

/// Runs `L_k^{(a)}(x)` for `k < len`, handing `(k, value, ln_scale)` to `emit`
/// where the true polynomial is `value · e^{ln_scale}`.
fn fill_diagonal(len: usize, a: usize, x: f64, mut emit: impl FnMut(usize, f64, f64)) {
    if len == 0 {
        return;
    }
    let a = a as f64;
    let mut ln_scale = 0.0;
    let mut prev = 0.0;
    let mut cur = 1.0;
    emit(0, cur, ln_scale);
    for k in 1..len {
        let j = (k - 1) as f64;
        let next = if k == 1 { 1.0 + a - x } else { ((2.0 * j + 1.0 + a - x) * cur - (j + a) * prev) / (j + 1.0) };
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e200 {
            cur /= mag;
            prev /= mag;
            ln_scale += mag.ln();
        }
        emit(k, cur, ln_scale);
    }
}

/// `ln ⟨0|D(β)S(s e^{iθ})|0⟩` (complex: real part is the log-magnitude).
fn ln_vacuum_amplitude(beta: Complex64, s: f64, theta: f64) -> Complex64 {
    let e = Complex64::from_polar(1.0, theta);
    -0.5 * beta.norm_sqr() - 0.5 * beta.conj().powu(2) * e * s.tanh() - 0.5 * ln_cosh(s)
}

fn ln_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `⟨p|D(β)S(s e^{iθ})|0⟩` for `p < len`.
///
/// Runs the three-term recurrence that follows from the state being annihilated by
/// `(a − β) cosh s + (a† − β*) e^{iθ} sinh s`, keeping a running log-scale so that
/// large displacements neither overflow nor lose the leading amplitude.
pub fn displaced_squeezed_amplitudes(beta: Complex64, s: f64, theta: f64, len: usize) -> Vec<Complex64> {
    let (ch, sh) = (s.cosh(), s.sinh());
    let e = Complex64::from_polar(1.0, theta);
    let lead = beta * ch + beta.conj() * e * sh;
    let ln0 = ln_vacuum_amplitude(beta, s, theta);
    let phase0 = Complex64::from_polar(1.0, ln0.im);
    let mut out = Vec::with_capacity(len);
    let (mut prev, mut cur) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    let mut ln_scale = ln0.re;
    for p in 0..len {
        out.push(phase0 * scaled_complex(cur, ln_scale));
        let next = (lead * cur - e * sh * (p as f64).sqrt() * prev) / (ch * ((p + 1) as f64).sqrt());
        prev = cur;
        cur = next;
        let mag = cur.norm().max(prev.norm());
        if mag > 1e150 || (mag > 0.0 && mag < 1e-150) {
            cur /= mag;
            prev /= mag;
            ln_scale += mag.ln();
        }
    }
    out
}

fn scaled_complex(value: Complex64, ln_factor: f64) -> Complex64 {
    let n = value.norm();
    if n == 0.0 {
        value
    } else {
        value / n * (n.ln() + ln_factor).exp()
    }
}

/// Probabilities of finding 0 and 1 photons in `D(β)S(s e^{iθ}) ρ_th S† D†`, with `ρ_th`
/// thermal of mean `nbar`, together with the discarded thermal weight.
///
/// Sums `λ_k |⟨p|D(β)S|k⟩|²` over the thermal ladder; the matrix elements follow
/// from `a† D S = D S (a† cosh s − a e^{−iθ} sinh s + β*)` run forward in `k`.
pub fn thermal_frame_low_counts(
    beta: Complex64,
    s: f64,
    theta: f64,
    nbar: f64,
    ceiling: f64,
    max_terms: usize,
) -> Result<([f64; 2], f64)> {
    let nbar = nbar.max(0.0);
    let x = nbar / (nbar + 1.0);
    let terms = if x == 0.0 { 1 } else { (ceiling.ln() / x.ln()).ceil().max(1.0) as usize };
    if terms > max_terms {
        return Err(Error::TruncationTail { tail: x.powf(max_terms as f64), ceiling });
    }
    let tail = if x == 0.0 { 0.0 } else { x.powf(terms as f64) };
    let (ch, sh) = (s.cosh(), s.sinh());
    let ec = Complex64::from_polar(1.0, -theta);
    let ln0 = ln_vacuum_amplitude(beta, s, theta);
    let ln_one_minus_x = (-x).ln_1p();
    let ln_x = x.ln();
    // Column k holds (G(0,k), G(1,k)) times e^{−ln_scale}; G(1,0) = ⟨1|D S|0⟩.
    let first = (beta * ch + beta.conj() * Complex64::from_polar(1.0, theta) * sh) / ch;
    let mut cur = [Complex64::new(1.0, 0.0), first];
    let mut prev = [Complex64::new(0.0, 0.0); 2];
    let mut ln_scale = ln0.re;
    let mut acc = [0.0; 2];
    for k in 0..terms {
        let ln_w = ln_one_minus_x + if k == 0 { 0.0 } else { k as f64 * ln_x } + 2.0 * ln_scale;
        for p in 0..2 {
            let n = cur[p].norm_sqr();
            if n > 0.0 {
                acc[p] += (n.ln() + ln_w).exp();
            }
        }
        let kf = k as f64;
        let step = |p: usize, lower: Complex64| {
            (lower - beta.conj() * cur[p] + ec * sh * kf.sqrt() * prev[p]) / (ch * (kf + 1.0).sqrt())
        };
        let next = [step(0, Complex64::new(0.0, 0.0)), step(1, cur[0])];
        prev = cur;
        cur = next;
        let mag = cur.iter().chain(prev.iter()).map(|c| c.norm()).fold(0.0, f64::max);
        if mag > 1e150 || (mag > 0.0 && mag < 1e-150) {
            for c in cur.iter_mut().chain(prev.iter_mut()) {
                *c /= mag;
            }
            ln_scale += mag.ln();
        }
    }
    Ok((acc, tail))
}

/// Gauss-Legendre nodes and weights on `[−1, 1]` (Golub-Welsch).
pub fn gauss_legendre(order: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("quadrature cache").get(&order) {
        return rule.clone();
    }
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rule = Arc::new(pairs.into_iter().unzip());
    cache.lock().expect("quadrature cache").insert(order, rule.clone());
    rule
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_displaced_squeeze(beta: Complex64, s: f64, theta: f64, n: usize) -> Vec<Complex64> {
        // ⟨p|D S|k⟩ = Σ_j ⟨p|D|j⟩⟨j|S|k⟩ with ⟨j|S|k⟩ from the squeezed column kets.
        let d = displacement_matrix(beta, n, n);
        let (sq, _) = crate::fock::ket::squeezed_vacuum(s, theta, n - 1);
        (0..n).map(|p| (0..n).map(|j| d[p * n + j] * sq[j]).sum()).collect()
    }

    #[test]
    fn displaced_squeezed_vacuum_matches_matrix_product() {
        let (beta, s, theta) = (Complex64::new(0.7, -0.3), 0.6, 1.1);
        let rec = displaced_squeezed_amplitudes(beta, s, theta, 12);
        let brute = brute_displaced_squeeze(beta, s, theta, 160);
        for p in 0..12 {
            assert!((rec[p] - brute[p]).norm() < 1e-13, "{p}: {} vs {}", rec[p], brute[p]);
        }
    }

    #[test]
    fn displaced_squeezed_vacuum_is_normalized_when_bright() {
        let amps = displaced_squeezed_amplitudes(Complex64::new(6.0, 2.0), 1.2, 0.4, 1200);
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-10, "{norm}");
    }

    #[test]
    fn thermal_frame_reduces_to_known_cases() {
        // Pure displaced squeezed vacuum.
        let (beta, s, theta) = (Complex64::new(0.4, 0.9), 0.8, -0.7);
        let amps = displaced_squeezed_amplitudes(beta, s, theta, 2);
        let (p, tail) = thermal_frame_low_counts(beta, s, theta, 0.0, 1e-20, 10).unwrap();
        assert_eq!(tail, 0.0);
        assert!((p[0] - amps[0].norm_sqr()).abs() < 1e-15 && (p[1] - amps[1].norm_sqr()).abs() < 1e-15);
        // Thermal state.
        let (p, tail) = thermal_frame_low_counts(Complex64::new(0.0, 0.0), 0.0, 0.0, 2.0, 1e-20, 1_000_000).unwrap();
        assert!(tail <= 1e-20);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-14 && (p[1] - 2.0 / 9.0).abs() < 1e-14);
        // Displaced thermal: Σ_k λ_k |⟨0|D|k⟩|² = e^{−|β|²/(n+1)}/(n+1).
        let beta = Complex64::new(1.3, -0.4);
        let (p, _) = thermal_frame_low_counts(beta, 0.0, 0.0, 0.7, 1e-20, 1_000_000).unwrap();
        let expect = (-beta.norm_sqr() / 1.7).exp() / 1.7;
        assert!((p[0] - expect).abs() < 1e-14, "{} vs {expect}", p[0]);
    }

    #[test]
    fn coherent_column() {
        let beta = Complex64::new(0.7, -0.4);
        let d = displacement_matrix(beta, 12, 3);
        let lf = ln_factorials(12);
        for m in 0..12 {
            let expect = beta.powu(m as u32) * ((-0.5 * beta.norm_sqr() - 0.5 * lf[m]).exp());
            assert!((d[m * 3] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn unitarity_on_large_space() {
        let beta = Complex64::new(2.5, 1.5);
        let n = 120;
        let d = displacement_matrix(beta, n, n);
        for (i, j) in [(0, 0), (3, 5), (10, 10), (20, 7)] {
            let s: Complex64 = (0..n).map(|k| d[k * n + i].conj() * d[k * n + j]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((s - expect).norm() < 1e-12, "({i},{j}) {s}");
        }
    }

    #[test]
    fn inverse_is_adjoint() {
        let beta = Complex64::new(-1.2, 0.3);
        let n = 40;
        let d = displacement_matrix(beta, n, n);
        let dm = displacement_matrix(-beta, n, n);
        for m in 0..10 {
            for k in 0..10 {
                assert!((dm[m * n + k] - d[k * n + m].conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        let rule = gauss_legendre(12);
        let (x, w) = (&rule.0, &rule.1);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((i - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn binomial_row_sums_to_one() {
        let r = binomial_row(9, 0.3);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((r[0] - 0.3f64.powi(9)).abs() < 1e-18);
    }
}
