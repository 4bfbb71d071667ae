//! Gaussian states as (covariance matrix, first moments).
//!
//! Quadratures are ordered `(X₁, P₁, X₂, P₂, …)` with `X = a + a†` and
//! `P = −i(a − a†)`, so the vacuum covariance is the identity and a coherent
//! state `|β⟩` has means `(2 Re β, 2 Im β)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::real::Real;

/// Scale between the displacement vector `D = (|α| cos ψ, |α| sin ψ, …)` and
/// the vector added through `means += Γ·d`. With `d = 2·D`, a displaced vacuum
/// carries mean photon number `|α|²` (checked against the Fock oracle).
pub const DISPLACEMENT_CALIBRATION: f64 = 2.0;

/// Tolerance for the `Γ + iΩ ⪰ 0` check.
pub const UNCERTAINTY_TOLERANCE: f64 = 1e-10;

/// Symmetric covariance matrix satisfying the uncertainty relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CovarianceMatrix<T>(Matrix<T>);

impl<T: Real> CovarianceMatrix<T> {
    /// Validates symmetry and `Γ + iΩ ⪰ 0`.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() || m.rows() % 2 != 0 {
            return Err(Error::DimensionMismatch { expected: m.rows(), found: m.cols() });
        }
        let tol = T::slack() * T::one().max(m.max_abs());
        let asym = m.max_asymmetry();
        if !(asym <= tol) {
            return Err(Error::NotSymmetric { asymmetry: asym.as_f64() });
        }
        let cov = Self(m);
        if !cov.satisfies_uncertainty(T::lit(UNCERTAINTY_TOLERANCE)) {
            return Err(Error::Unphysical { min_eigenvalue: f64::NAN });
        }
        Ok(cov)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self(Matrix::identity(2 * modes))
    }

    pub fn modes(&self) -> usize {
        self.0.rows() / 2
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    /// `Γ + iΩ ⪰ 0` via the real embedding `[[Γ, −Ω], [Ω, Γ]]`.
    pub fn satisfies_uncertainty(&self, tol: T) -> bool {
        let n = self.0.rows();
        let omega = symplectic_form::<T>(n / 2);
        let big = Matrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => self.0[(i, j)],
            (true, false) => -omega[(i, j - n)],
            (false, true) => omega[(i - n, j)],
            (false, false) => self.0[(i - n, j - n)],
        });
        big.is_positive_definite_shifted(tol)
    }

    pub fn determinant(&self) -> Result<T> {
        self.0.determinant()
    }
}

/// First moments `(⟨X₁⟩, ⟨P₁⟩, …)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FirstMoments<T>(pub Vec<T>);

impl<T: Real> FirstMoments<T> {
    pub fn zeros(modes: usize) -> Self {
        Self(vec![T::zero(); 2 * modes])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GaussianState<T> {
    pub cov: CovarianceMatrix<T>,
    pub means: FirstMoments<T>,
}

impl<T: Real> GaussianState<T> {
    pub fn new(cov: CovarianceMatrix<T>, means: FirstMoments<T>) -> Result<Self> {
        if means.0.len() != cov.0.rows() {
            return Err(Error::DimensionMismatch { expected: cov.0.rows(), found: means.0.len() });
        }
        if means.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter { name: "means", value: f64::NAN });
        }
        Ok(Self { cov, means })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self { cov: CovarianceMatrix::vacuum(modes), means: FirstMoments::zeros(modes) }
    }

    pub fn modes(&self) -> usize {
        self.cov.modes()
    }

    /// `Γ → SΓSᵀ`, `μ → Sμ`.
    pub fn transform(&self, s: &Matrix<T>) -> Result<Self> {
        let n = self.cov.0.rows();
        if s.rows() != n || s.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: s.rows() });
        }
        let cov = &(s * &self.cov.0) * &s.transpose();
        Ok(Self { cov: CovarianceMatrix(cov), means: FirstMoments(s.mul_vec(&self.means.0)) })
    }

    /// Tensor product with `other` (modes of `self` first).
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (a, b) = (self.cov.0.rows(), other.cov.0.rows());
        let cov = Matrix::zeros(a + b, a + b).with_block(0, &self.cov.0).with_block(a, &other.cov.0);
        let mut means = self.means.0.clone();
        means.extend_from_slice(&other.means.0);
        Self { cov: CovarianceMatrix(cov), means: FirstMoments(means) }
    }

    /// Row-major JSON dump of Γ and the means.
    pub fn to_json(&self) -> String {
        let n = self.cov.0.rows();
        let rows: Vec<Vec<f64>> =
            (0..n).map(|i| self.cov.0.row(i).iter().map(|x| x.as_f64()).collect()).collect();
        let means: Vec<f64> = self.means.0.iter().map(|x| x.as_f64()).collect();
        serde_json::json!({ "modes": n / 2, "cov": rows, "means": means }).to_string()
    }
}

/// Eight-parameter description of a pure two-mode Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BlochMessiahParams<T> {
    pub xi1_mag: T,
    pub xi2_mag: T,
    pub phi: T,
    pub tau: T,
    pub alpha1_mag: T,
    pub alpha2_mag: T,
    pub psi1: T,
    pub psi2: T,
}

impl<T: Real> BlochMessiahParams<T> {
    /// Vacuum parameters (balanced splitter).
    pub fn vacuum() -> Self {
        let z = T::zero();
        Self { xi1_mag: z, xi2_mag: z, phi: z, tau: T::lit(0.5), alpha1_mag: z, alpha2_mag: z, psi1: z, psi2: z }
    }

    /// Parameters of `√(1−r²) Σ rⁿ|n,n⟩`: equal squeezing `atanh r` in orthogonal quadratures
    /// combined on a balanced splitter.
    pub fn two_mode_squeezed(r: T) -> Self {
        let s = T::lit(0.5) * ((T::one() + r) / (T::one() - r)).ln();
        Self { xi1_mag: s, xi2_mag: s, phi: T::FRAC_PI_2(), ..Self::vacuum() }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: T, ok: bool| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, value: v.as_f64() })
            }
        };
        let z = T::zero();
        check("xi1_mag", self.xi1_mag, self.xi1_mag >= z)?;
        check("xi2_mag", self.xi2_mag, self.xi2_mag >= z)?;
        check("alpha1_mag", self.alpha1_mag, self.alpha1_mag >= z)?;
        check("alpha2_mag", self.alpha2_mag, self.alpha2_mag >= z)?;
        check("tau", self.tau, self.tau > z && self.tau < T::one())?;
        check("phi", self.phi, true)?;
        check("psi1", self.psi1, true)?;
        check("psi2", self.psi2, true)
    }

    /// `D = (|α₁| cos ψ₁, |α₁| sin ψ₁, |α₂| cos ψ₂, |α₂| sin ψ₂)`.
    pub fn displacement_vector(&self) -> [T; 4] {
        [
            self.alpha1_mag * self.psi1.cos(),
            self.alpha1_mag * self.psi1.sin(),
            self.alpha2_mag * self.psi2.cos(),
            self.alpha2_mag * self.psi2.sin(),
        ]
    }
}

/// Boolean mask of modes projected on the vacuum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementMask(pub Vec<bool>);

impl MeasurementMask {
    pub fn modes(n: usize, selected: &[usize]) -> Self {
        let mut m = vec![false; n];
        for &i in selected {
            m[i] = true;
        }
        Self(m)
    }

    fn quadrature_indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .flat_map(|(i, _)| [2 * i, 2 * i + 1])
            .collect()
    }
}

/// `Ω = ⊕ [[0, 1], [−1, 0]]`.
pub fn symplectic_form<T: Real>(modes: usize) -> Matrix<T> {
    let mut m = Matrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        m[(2 * k, 2 * k + 1)] = T::one();
        m[(2 * k + 1, 2 * k)] = -T::one();
    }
    m
}

fn check_mode(mode: usize, n: usize) -> Result<()> {
    if mode < n {
        Ok(())
    } else {
        Err(Error::ModeOutOfRange { mode, modes: n })
    }
}

fn rotation_block<T: Real>(phi: T) -> Matrix<T> {
    let (s, c) = phi.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, s, -s, c])
}

/// Rotation by `phi` on one mode, block `[[cos φ, sin φ], [−sin φ, cos φ]]`.
pub fn rotation_matrix<T: Real>(mode: usize, phi: T, n: usize) -> Result<Matrix<T>> {
    check_mode(mode, n)?;
    Ok(Matrix::identity(2 * n).with_block(2 * mode, &rotation_block(phi)))
}

/// Single-mode squeezer for `ξ = |ξ| e^{iχ}`: `R(−χ/2) · diag(e^{−|ξ|}, e^{|ξ|}) · R(χ/2)`.
///
/// Real `ξ > 0` squeezes X; the squeezed axis turns by `χ/2`.
pub fn squeeze_matrix<T: Real>(mode: usize, xi: Complex<T>, n: usize) -> Result<Matrix<T>> {
    check_mode(mode, n)?;
    let r = xi.norm();
    let half = T::lit(0.5) * xi.arg();
    let diag = Matrix::from_row_slice(2, 2, &[(-r).exp(), T::zero(), T::zero(), r.exp()]);
    let block = &(&rotation_block(-half) * &diag) * &rotation_block(half);
    Ok(Matrix::identity(2 * n).with_block(2 * mode, &block))
}

/// Beam splitter between modes `i` and `j`: `√τ` on the diagonal blocks,
/// `+√(1−τ)` in block (i, j) and `−√(1−τ)` in block (j, i).
pub fn beamsplitter_matrix<T: Real>(i: usize, j: usize, tau: T, n: usize) -> Result<Matrix<T>> {
    check_mode(i, n)?;
    check_mode(j, n)?;
    if i == j {
        return Err(Error::SameMode(i));
    }
    if !(tau >= T::zero() && tau <= T::one()) {
        return Err(Error::InvalidParameter { name: "tau", value: tau.as_f64() });
    }
    let t = tau.sqrt();
    let r = (T::one() - tau).sqrt();
    let mut m = Matrix::identity(2 * n);
    for q in 0..2 {
        m[(2 * i + q, 2 * i + q)] = t;
        m[(2 * j + q, 2 * j + q)] = t;
        m[(2 * i + q, 2 * j + q)] = r;
        m[(2 * j + q, 2 * i + q)] = -r;
    }
    Ok(m)
}

/// `means ← means + Γ·d`; the covariance is untouched.
pub fn apply_displacement<T: Real>(state: &GaussianState<T>, d: &[T]) -> Result<GaussianState<T>> {
    let n = state.cov.0.rows();
    if d.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: d.len() });
    }
    let shift = state.cov.0.mul_vec(d);
    let means = state.means.0.iter().zip(shift).map(|(&m, s)| m + s).collect();
    Ok(GaussianState { cov: state.cov.clone(), means: FirstMoments(means) })
}

/// Undisplaced two-mode state: squeezers on both modes, then the `τ` splitter.
fn squeezed_and_mixed<T: Real>(p: &BlochMessiahParams<T>) -> Result<GaussianState<T>> {
    let s1 = squeeze_matrix(0, Complex::new(p.xi1_mag, T::zero()), 2)?;
    let s2 = squeeze_matrix(1, Complex::from_polar(p.xi2_mag, T::lit(2.0) * p.phi), 2)?;
    let bs = beamsplitter_matrix(0, 1, p.tau, 2)?;
    let s = &bs * &(&s2 * &s1);
    let cov = &s * &s.transpose();
    Ok(GaussianState { cov: CovarianceMatrix(cov), means: FirstMoments::zeros(2) })
}

/// The two-mode source state before the detection splitters.
pub fn build_source_state<T: Real>(p: &BlochMessiahParams<T>) -> Result<GaussianState<T>> {
    p.validate()?;
    let mixed = squeezed_and_mixed(p)?;
    let c = T::lit(DISPLACEMENT_CALIBRATION);
    let d: Vec<T> = p.displacement_vector().iter().map(|&x| c * x).collect();
    apply_displacement(&mixed, &d)
}

/// Four-mode state after each source mode is split on a balanced splitter.
///
/// Mode layout: 0 = partner of source mode A, 1 = A, 2 = B, 3 = partner of B.
pub fn build_scheme_state<T: Real>(p: &BlochMessiahParams<T>) -> Result<GaussianState<T>> {
    let source = build_source_state(p)?;
    Ok(split_source(&source))
}

/// Embeds a two-mode state into the four-mode detection layout and applies both 50:50 splitters.
pub fn split_source<T: Real>(source: &GaussianState<T>) -> GaussianState<T> {
    let embedded = GaussianState::vacuum(1).direct_sum(source).direct_sum(&GaussianState::vacuum(1));
    let half = T::lit(0.5);
    let u = &beamsplitter_matrix(0, 1, half, 4).expect("valid modes")
        * &beamsplitter_matrix(2, 3, half, 4).expect("valid modes");
    embedded.transform(&u).expect("matching dimension")
}

/// Probability that every masked mode is found in the vacuum:
/// `2^k / √det(Γ_K + I) · exp(−½ μ_Kᵀ (Γ_K + I)⁻¹ μ_K)` on the masked block `K`.
pub fn vacuum_projection<T: Real>(state: &GaussianState<T>, mask: &MeasurementMask) -> Result<T> {
    let n = state.modes();
    if mask.0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: mask.0.len() });
    }
    let idx = mask.quadrature_indices();
    if idx.is_empty() {
        return Err(Error::EmptyMask);
    }
    let a = state.cov.0.select(&idx).add(&Matrix::identity(idx.len()));
    let mu: Vec<T> = idx.iter().map(|&i| state.means.0[i]).collect();
    let chol = a.cholesky()?;
    let det = chol.determinant();
    let nu = chol.solve(&mu);
    let quad = mu.iter().zip(&nu).fold(T::zero(), |s, (&m, &v)| s + m * v);
    let k = idx.len() / 2;
    let p = T::lit(2.0).powi(k as i32) / det.sqrt() * (-T::lit(0.5) * quad).exp();
    clamp_probability(p)
}

pub(crate) fn clamp_probability<T: Real>(p: T) -> Result<T> {
    let slack = T::slack();
    if !(p >= -slack && p <= T::one() + slack) {
        return Err(Error::ProbabilityOutOfRange { value: p.as_f64() });
    }
    Ok(p.max(T::zero()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) -> bool {
        a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| (x - y).abs() < tol)
    }

    fn is_symplectic(m: &Matrix<f64>) -> bool {
        let om = symplectic_form::<f64>(m.rows() / 2);
        close(&(&(m * &om) * &m.transpose()), &om, 1e-10)
    }

    #[test]
    fn squeeze_examples() {
        let id = squeeze_matrix(0, Complex::new(0.0, 0.0), 1).unwrap();
        assert!(close(&id, &Matrix::identity(2), 1e-15));
        let s = squeeze_matrix(0, Complex::new(2f64.ln(), 0.0), 1).unwrap();
        assert!(close(&s, &Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 2.0]), 1e-14));
        let m = squeeze_matrix(0, Complex::from_polar(0.3, std::f64::consts::FRAC_PI_4), 2).unwrap();
        assert!((m.determinant().unwrap() - 1.0).abs() < 1e-12);
        assert!(is_symplectic(&m));
        assert!(squeeze_matrix::<f64>(2, Complex::new(0.1, 0.0), 2).is_err());
    }

    #[test]
    fn rotation_examples() {
        assert!(close(&rotation_matrix(0, 0.0, 1).unwrap(), &Matrix::identity(2), 1e-15));
        let q = rotation_matrix(0, std::f64::consts::FRAC_PI_2, 1).unwrap();
        assert!(close(&q, &Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]), 1e-15));
        let r = rotation_matrix(1, 0.7, 2).unwrap();
        assert!(close(&(&r * &r.transpose()), &Matrix::identity(4), 1e-14));
        assert!((r.determinant().unwrap() - 1.0).abs() < 1e-14);
        assert!(is_symplectic(&r));
    }

    #[test]
    fn beamsplitter_examples() {
        assert!(close(&beamsplitter_matrix(0, 1, 1.0, 2).unwrap(), &Matrix::identity(4), 1e-15));
        let h = beamsplitter_matrix(0, 1, 0.5, 2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h[(0, 0)] - s).abs() < 1e-15 && (h[(0, 2)] - s).abs() < 1e-15);
        assert!((h[(2, 0)] + s).abs() < 1e-15);
        let b = beamsplitter_matrix(0, 1, 0.3, 2).unwrap();
        assert!(close(&(&b * &b.transpose()), &Matrix::identity(4), 1e-14));
        assert!(is_symplectic(&b));
        assert!(matches!(beamsplitter_matrix::<f64>(1, 1, 0.5, 2), Err(Error::SameMode(1))));
    }

    #[test]
    fn displacement_keeps_covariance() {
        let vac = GaussianState::<f64>::vacuum(1);
        assert_eq!(apply_displacement(&vac, &[0.0, 0.0]).unwrap(), vac);
        let sq = vac.transform(&squeeze_matrix(0, Complex::new(0.4, 0.0), 1).unwrap()).unwrap();
        let d = apply_displacement(&sq, &[0.3, -0.2]).unwrap();
        assert_eq!(d.cov, sq.cov);
        assert!(apply_displacement(&sq, &[0.3]).is_err());
    }

    #[test]
    fn coherent_state_means_and_vacuum_weight() {
        let (a, psi) = (1.3f64, 0.4f64);
        let c = DISPLACEMENT_CALIBRATION;
        let st = apply_displacement(&GaussianState::vacuum(1), &[c * a * psi.cos(), c * a * psi.sin()]).unwrap();
        let beta_sq = (st.means.0[0].powi(2) + st.means.0[1].powi(2)) / 4.0;
        assert!((beta_sq - a * a).abs() < 1e-14);
        let p0 = vacuum_projection(&st, &MeasurementMask(vec![true])).unwrap();
        assert!((p0 - (-a * a).exp()).abs() < 1e-14);
    }

    #[test]
    fn scheme_vacuum_and_source_shapes() {
        let st = build_scheme_state(&BlochMessiahParams::<f64>::vacuum()).unwrap();
        assert!(close(st.cov.matrix(), &Matrix::identity(8), 1e-15));
        assert!(st.means.0.iter().all(|&x| x == 0.0));
        let src = build_source_state(&BlochMessiahParams::<f64>::vacuum()).unwrap();
        assert_eq!(src.modes(), 2);
    }

    #[test]
    fn two_mode_squeezed_covariance() {
        let r = 0.5f64;
        let st = build_source_state(&BlochMessiahParams::two_mode_squeezed(r)).unwrap();
        let c = (1.0 + r * r) / (1.0 - r * r);
        let s = 2.0 * r / (1.0 - r * r);
        let g = st.cov.matrix();
        for k in 0..4 {
            assert!((g[(k, k)] - c).abs() < 1e-12);
        }
        assert!((g[(0, 2)].abs() - s).abs() < 1e-12 && (g[(1, 3)].abs() - s).abs() < 1e-12);
        assert!((g[(0, 2)] + g[(1, 3)]).abs() < 1e-12);
        let p0 = vacuum_projection(&st, &MeasurementMask(vec![true, false])).unwrap();
        assert!((p0 - (1.0 - r * r)).abs() < 1e-12);
    }

    #[test]
    fn coherent_times_vacuum_from_params() {
        let p = BlochMessiahParams { alpha1_mag: 1.0, psi1: 0.3, ..BlochMessiahParams::<f64>::vacuum() };
        let st = build_source_state(&p).unwrap();
        assert!(close(st.cov.matrix(), &Matrix::identity(4), 1e-15));
        assert!(st.means.0[2] == 0.0 && st.means.0[3] == 0.0);
        let pa = vacuum_projection(&st, &MeasurementMask(vec![true, false])).unwrap();
        assert!((pa - (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn vacuum_projection_errors() {
        let vac = GaussianState::<f64>::vacuum(2);
        assert!(matches!(vacuum_projection(&vac, &MeasurementMask(vec![false, false])), Err(Error::EmptyMask)));
        assert!(vacuum_projection(&vac, &MeasurementMask(vec![true])).is_err());
        let bad = GaussianState {
            cov: CovarianceMatrix(Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0])),
            means: FirstMoments::zeros(1),
        };
        assert!(vacuum_projection(&bad, &MeasurementMask(vec![true])).is_err());
    }

    #[test]
    fn covariance_validation() {
        assert!(CovarianceMatrix::new(Matrix::<f64>::identity(4)).is_ok());
        let squeezed_too_much = Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        assert!(matches!(CovarianceMatrix::new(squeezed_too_much), Err(Error::Unphysical { .. })));
        let asym = Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(CovarianceMatrix::new(asym), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let st = build_scheme_state(&BlochMessiahParams::<f32>::two_mode_squeezed(0.5)).unwrap();
        assert!((st.cov.determinant().unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn json_dump_is_row_major() {
        let v: serde_json::Value = serde_json::from_str(&GaussianState::<f64>::vacuum(1).to_json()).unwrap();
        assert_eq!(v["cov"][0][0], 1.0);
        assert_eq!(v["cov"][0][1], 0.0);
    }
}
