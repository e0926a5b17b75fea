//! Eigenstructure of the flat Gram matrix `L_n = tridiag(1, 4, 1)` with last
//! diagonal entry 2, its Cholesky factor, and the constants `tau_P`, `tau_G`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gram::BlockTridiagonal;
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

const MAX_BISECTION: usize = 400;

/// Continuous branch of `arg((1 + 2e^{i theta}) / (1 + 2e^{-i theta}))` on
/// `[0, pi]`, rising from 0 to `2 pi`.
pub fn phi_angle<T: Real>(theta: T) -> Result<T> {
    if !(theta >= T::zero() && theta <= T::pi()) {
        return Err(Error::InvalidArgument("theta must lie in [0, pi]".into()));
    }
    Ok(phi_unchecked(theta))
}

fn phi_unchecked<T: Real>(theta: T) -> T {
    // 1 + 2e^{i theta} stays in the closed upper half plane, so atan2 needs no
    // unwrapping; the ratio's argument is twice that of the numerator.
    let two = T::lit(2.0);
    let y = two * theta.sin();
    let x = T::one() + two * theta.cos();
    let mut a = y.atan2(x);
    if a < T::zero() {
        a += T::two_pi();
    }
    two * a
}

/// `phi'(theta) = 4 (cos theta + 2) / (5 + 4 cos theta)`.
pub fn phi_prime<T: Real>(theta: T) -> T {
    let c = theta.cos();
    T::lit(4.0) * (c + T::lit(2.0)) / (T::lit(5.0) + T::lit(4.0) * c)
}

fn theta_residual<T: Real>(n: usize, k: usize, theta: T) -> T {
    let np1 = T::from_usize_lossy(n + 1);
    theta - phi_unchecked(theta) / (T::lit(2.0) * np1) - T::pi() * T::from_usize_lossy(k) / np1
}

/// Root of `theta - phi(theta) / (2(n+1)) = pi k / (n+1)` inside
/// `(pi k / (n+1), pi (k+1) / (n+1))`.
pub fn theta_k<T: Real>(n: usize, k: usize) -> Result<T> {
    if n < 2 || k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("theta_k needs 1 <= k <= n-1, got n={n}, k={k}")));
    }
    let np1 = T::from_usize_lossy(n + 1);
    let mut lo = T::pi() * T::from_usize_lossy(k) / np1;
    let mut hi = T::pi() * T::from_usize_lossy(k + 1) / np1;
    let (lo0, hi0) = (lo, hi);
    let tol = T::lit(1e-13).max(T::lit(4.0) * T::eps());
    for _ in 0..MAX_BISECTION {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi || hi - lo <= tol * hi {
            break;
        }
        if theta_residual(n, k, mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut theta = (lo + hi) * T::lit(0.5);
    for _ in 0..2 {
        let g = theta_residual(n, k, theta);
        let dg = T::one() - phi_prime(theta) / (T::lit(2.0) * np1);
        let next = theta - g / dg;
        if next > lo0 && next < hi0 && next.is_finite() {
            theta = next;
        }
    }
    if !(theta > lo0 && theta < hi0) {
        return Err(Error::NonConvergence(format!("theta_{k} for n={n} left its bracket")));
    }
    Ok(theta)
}

/// `a_n(z) = z^{2(n+1)} + 2 z^{2n+1} - 2z - 1`, evaluated directly.
pub fn a_n<T: Real>(n: usize, z: T) -> T {
    z.powi(2 * n as i32) * (z * z + T::lit(2.0) * z) - (T::lit(2.0) * z + T::one())
}

/// Log-magnitude form of `a_n` on `(-2, -3/2)` written in `t = z + 2`:
/// `a_n = (3 - 2t) (1 - exp(h))` with `h = (2n+1) ln(2-t) + ln t - ln(3-2t)`.
fn a_n_log_gap<T: Real>(n: usize, u: T) -> T {
    let t = u.exp();
    T::from_usize_lossy(2 * n + 1) * (T::lit(2.0) - t).ln() + u - (T::lit(3.0) - T::lit(2.0) * t).ln()
}

fn a_n_log_gap_prime<T: Real>(n: usize, u: T) -> T {
    let t = u.exp();
    -T::from_usize_lossy(2 * n + 1) * t / (T::lit(2.0) - t) + T::one() + T::lit(2.0) * t / (T::lit(3.0) - T::lit(2.0) * t)
}

/// The real root of `a_n` in `(-2, -3/2)`, returned as `(gamma, ln(gamma + 2))`.
pub fn gamma_n_with_offset<T: Real>(n: usize) -> Result<(T, T)> {
    if n < 2 {
        return Err(Error::InvalidArgument("gamma_n needs n >= 2".into()));
    }
    let ln2 = T::lit(2.0).ln();
    let mut lo = T::lit(3.0).ln() - T::from_usize_lossy(2 * n + 1) * ln2 - T::lit(5.0);
    let mut hi = T::lit(0.5).ln();
    if !(a_n_log_gap(n, lo) < T::zero() && a_n_log_gap(n, hi) > T::zero()) {
        return Err(Error::NonConvergence(format!("gamma_n bracket failed for n={n}")));
    }
    let (lo0, hi0) = (lo, hi);
    let tol = T::lit(1e-13).max(T::lit(4.0) * T::eps());
    for _ in 0..MAX_BISECTION {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi || (hi - lo) <= tol * (T::one() + mid.abs()) {
            break;
        }
        if a_n_log_gap(n, mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = (lo + hi) * T::lit(0.5);
    for _ in 0..2 {
        let next = u - a_n_log_gap(n, u) / a_n_log_gap_prime(n, u);
        if next > lo0 && next < hi0 && next.is_finite() {
            u = next;
        }
    }
    Ok((u.exp() - T::lit(2.0), u))
}

pub fn gamma_n<T: Real>(n: usize) -> Result<T> {
    Ok(gamma_n_with_offset::<T>(n)?.0)
}

/// `|a_n(gamma)|` in the overflow-free factored form.
pub fn a_n_residual<T: Real>(n: usize, ln_offset: T) -> T {
    let t = ln_offset.exp();
    (T::lit(3.0) - T::lit(2.0) * t) * a_n_log_gap(n, ln_offset).exp_m1().abs()
}

#[derive(Debug, Clone)]
pub struct SpectralData<T: Real> {
    pub n: usize,
    pub delta: T,
    /// `theta_k`, `k = 1..n-1`.
    pub thetas: Vec<T>,
    pub gamma: T,
    /// `ln(gamma + 2)`.
    pub gamma_ln_offset: T,
    /// `beta_k^2`, `k = 1..n-1`.
    pub betas_sq: Vec<T>,
    /// `ln beta_n^2`.
    pub ln_beta_n_sq: T,
    /// Eigenvalues of `L_P`, `k = 1..n`.
    pub lambdas: Vec<T>,
    /// Normalized eigenvector of the outlier eigenvalue.
    outlier: Vec<T>,
}

impl<T: Real> SpectralData<T> {
    pub fn phi_at(&self, theta: T) -> Result<T> {
        phi_angle(theta)
    }

    pub fn theta(&self, k: usize) -> T {
        self.thetas[k - 1]
    }

    /// `r_k = phi(theta_k) / (2 pi)`.
    pub fn r(&self, k: usize) -> T {
        phi_unchecked(self.theta(k)) / T::two_pi()
    }

    pub fn beta_sq(&self, k: usize) -> T {
        if k < self.n {
            self.betas_sq[k - 1]
        } else {
            self.ln_beta_n_sq.exp()
        }
    }

    pub fn lambda(&self, k: usize) -> T {
        self.lambdas[k - 1]
    }

    /// Unnormalized component `alpha_k^m`, zero for `m = 0` and `m = n + 1`.
    pub fn alpha(&self, k: usize, m: usize) -> T {
        if m == 0 || m > self.n {
            return T::zero();
        }
        if k < self.n {
            (T::from_usize_lossy(m) * self.theta(k)).sin()
        } else {
            let mi = m as i32;
            self.gamma.powi(mi) - self.gamma.powi(-mi)
        }
    }

    /// Normalized component `beta_k alpha_k^m`.
    pub fn component(&self, k: usize, m: usize) -> T {
        if m == 0 || m > self.n {
            return T::zero();
        }
        if k < self.n {
            self.betas_sq[k - 1].sqrt() * self.alpha(k, m)
        } else {
            self.outlier[m - 1]
        }
    }

    pub fn eigenvector(&self, k: usize) -> DVector<T> {
        DVector::from_iterator(self.n, (1..=self.n).map(|m| self.component(k, m)))
    }

    /// Columns are the normalized eigenvectors, `k = 1..n`.
    pub fn eigenvector_matrix(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.n, self.n, |m, k| self.component(k + 1, m + 1))
    }

    /// Eigenvalues of `L_n = (6 / delta^3) L_P`.
    pub fn ln_eigenvalues(&self) -> Vec<T> {
        let s = T::lit(6.0) / self.delta.powi(3);
        self.lambdas.iter().map(|&l| l * s).collect()
    }
}

fn outlier_vector<T: Real>(n: usize, gamma: T) -> (Vec<T>, T) {
    // alpha_n^m / gamma^n = (-1)^{m-n} (|g|^{m-n} - |g|^{-m-n}).
    let lg = gamma.abs().ln();
    let nf = T::from_usize_lossy(n);
    let raw: Vec<T> = (1..=n)
        .map(|m| {
            let mf = T::from_usize_lossy(m);
            let v = ((mf - nf) * lg).exp() - ((-mf - nf) * lg).exp();
            if m % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect();
    let norm2 = raw.iter().fold(T::zero(), |a, &x| a + x * x);
    let norm = norm2.sqrt();
    let ln_beta_sq = -T::lit(2.0) * nf * lg - norm2.ln();
    (raw.into_iter().map(|x| x / norm).collect(), ln_beta_sq)
}

/// Angles and normalizers of the bulk eigenvectors.
fn bulk<T: Real>(n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let mut thetas = Vec::with_capacity(n.saturating_sub(1));
    let mut betas = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        let th = theta_k::<T>(n, k)?;
        let s = (1..=n).fold(T::zero(), |acc, m| acc + (T::from_usize_lossy(m) * th).sin().powi(2));
        thetas.push(th);
        betas.push(T::one() / s);
    }
    Ok((thetas, betas))
}

/// Full eigenstructure of `L_P` for mesh `delta`.
pub fn assemble_spectrum<T: Real>(n: usize, delta: T) -> Result<SpectralData<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument("spectrum needs n >= 2".into()));
    }
    let (thetas, betas_sq) = bulk::<T>(n)?;
    let (gamma, gamma_ln_offset) = gamma_n_with_offset::<T>(n)?;
    let (outlier, ln_beta_n_sq) = outlier_vector(n, gamma);
    let c3 = delta.powi(3);
    let mut lambdas: Vec<T> = thetas.iter().map(|&t| c3 / T::lit(3.0) * (T::lit(2.0) + t.cos())).collect();
    lambdas.push(c3 / T::lit(6.0) * (T::lit(4.0) + gamma + T::one() / gamma));
    Ok(SpectralData { n, delta, thetas, gamma, gamma_ln_offset, betas_sq, ln_beta_n_sq, lambdas, outlier })
}

/// Dense `L_n`.
pub fn l_n_dense<T: Real>(n: usize) -> DMatrix<T> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = T::lit(4.0);
        if i + 1 < n {
            m[(i, i + 1)] = T::one();
            m[(i + 1, i)] = T::one();
        }
    }
    m[(n - 1, n - 1)] = T::lit(2.0);
    m
}

/// `d_0 = 1`, `d_1 = 2`, `d_{m+2} = 4 d_{m+1} - d_m`. Beyond `m = 300` the
/// values come from the closed form through the log sequence.
pub fn det_sequence<T: Real>(n: usize) -> Vec<T> {
    let mut d = vec![T::one(); n + 1];
    if n >= 1 {
        d[1] = T::lit(2.0);
    }
    for m in 2..=n.min(300) {
        d[m] = T::lit(4.0) * d[m - 1] - d[m - 2];
    }
    if n > 300 {
        let ld = log_det_sequence::<T>(n);
        for m in 301..=n {
            d[m] = ld[m].exp();
        }
    }
    d
}

/// `ln d_m` for `m = 0..=n`, finite for every `n`.
pub fn log_det_sequence<T: Real>(n: usize) -> Vec<T> {
    let s3 = T::lit(3.0).sqrt();
    let big = T::lit(2.0) + s3;
    let r = (T::lit(2.0) - s3) / big;
    let lb = big.ln();
    (0..=n)
        .map(|m| {
            let mi = T::from_usize_lossy(m);
            mi * lb + r.powi(m.min(i32::MAX as usize) as i32).ln_1p() - T::lit(2.0).ln()
        })
        .collect()
}

/// `((2 + sqrt 3)^m + (2 - sqrt 3)^m) / 2`.
pub fn det_closed_form<T: Real>(m: usize) -> T {
    let s3 = T::lit(3.0).sqrt();
    let mi = m as i32;
    ((T::lit(2.0) + s3).powi(mi) + (T::lit(2.0) - s3).powi(mi)) / T::lit(2.0)
}

/// Upper bidiagonal `A_n` with `A_n A_n^T = L_n`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor<T: Real> {
    pub n: usize,
    /// `[A]_{ii} = sqrt(d_{n-i+1} / d_{n-i})`.
    pub diag: Vec<T>,
    /// `[A]_{i,i+1} = sqrt(d_{n-i-1} / d_{n-i})`.
    pub superdiag: Vec<T>,
    /// `ln d_m`, `m = 0..=n`.
    pub ln_d: Vec<T>,
}

pub fn cholesky<T: Real>(n: usize) -> Result<CholeskyFactor<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("cholesky needs n >= 1".into()));
    }
    let ln_d = if n > 300 {
        log_det_sequence::<T>(n)
    } else {
        det_sequence::<T>(n).into_iter().map(|x| x.ln()).collect()
    };
    // Ratios d_{m+1}/d_m from the recursion q_{m+1} = 4 - 1/q_m.
    let mut q = vec![T::lit(2.0); n];
    for m in 1..n {
        q[m] = T::lit(4.0) - T::one() / q[m - 1];
    }
    let diag = (1..=n).map(|i| q[n - i].sqrt()).collect();
    let superdiag = (1..n).map(|i| (T::one() / q[n - i - 1]).sqrt()).collect();
    Ok(CholeskyFactor { n, diag, superdiag, ln_d })
}

impl<T: Real> CholeskyFactor<T> {
    pub fn to_dense(&self) -> DMatrix<T> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            a[(i, i)] = self.diag[i];
            if i + 1 < self.n {
                a[(i, i + 1)] = self.superdiag[i];
            }
        }
        a
    }

    /// `[A_n^{-1}]_{ij}` with one-based indices.
    pub fn inverse_entry(&self, i: usize, j: usize) -> T {
        let n = self.n;
        if j < i {
            return T::zero();
        }
        if i == j {
            return T::one() / self.diag[i - 1];
        }
        let mag = (self.ln_d[n - j] - (self.ln_d[n - i] + self.ln_d[n - i + 1]) * T::lit(0.5)).exp();
        if (j - i) % 2 == 1 {
            -mag
        } else {
            mag
        }
    }

    pub fn inverse_dense(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.inverse_entry(i + 1, j + 1))
    }

    /// `ln det L_n = ln d_n`.
    pub fn logdet(&self) -> T {
        self.diag.iter().fold(T::zero(), |a, &x| a + x.ln()) * T::lit(2.0)
    }
}

/// `ln det L_P = n d ln(delta^3 / 6) + d ln d_n`.
pub fn logdet_lp<T: Real>(n: usize, delta: T, d: usize) -> T {
    let ld = log_det_sequence::<T>(n)[n];
    T::from_usize_lossy(n * d) * (delta.powi(3) / T::lit(6.0)).ln() + T::from_usize_lossy(d) * ld
}

/// `tr(L_P^{-1} U)` through the eigenbasis of `L_P`.
pub fn trace_sandwich<T: Real>(spec: &SpectralData<T>, u: &BlockTridiagonal<T>) -> Result<T> {
    if u.n() != spec.n {
        return Err(Error::DimensionMismatch { expected: spec.n, found: u.n() });
    }
    let n = spec.n;
    let td: Vec<T> = u.diag().iter().map(|b| b.trace()).collect();
    let tu: Vec<T> = u.upper().iter().map(|b| b.trace()).collect();
    let mut total = T::zero();
    for k in 1..=n {
        let mut acc = T::zero();
        for m in 1..=n {
            let e = spec.component(k, m);
            acc += e * e * td[m - 1];
            if m < n {
                acc += T::lit(2.0) * e * spec.component(k, m + 1) * tu[m - 1];
            }
        }
        total += acc / spec.lambda(k);
    }
    Ok(total)
}

/// `xi_{k,m} = (2/45)[4 (a^m)^2 - (a^{m-1})^2] + (1/180) a^m [13 a^{m+1} - 7 a^{m-1}]`.
pub fn xi<T: Real>(spec: &SpectralData<T>, k: usize, m: usize) -> Result<T> {
    if k == 0 || k > spec.n || m == 0 || m > spec.n {
        return Err(Error::InvalidArgument(format!("xi index out of range: k={k}, m={m}")));
    }
    let a = |j: usize| spec.alpha(k, j);
    let (am, ap, an) = (a(m - 1), a(m + 1), a(m));
    Ok(T::lit(2.0) / T::lit(45.0) * (T::lit(4.0) * an * an - am * am)
        + an * (T::lit(13.0) * ap - T::lit(7.0) * am) / T::lit(180.0))
}

/// Oscillating part of `xi_{k,m}` for bulk `k` and interior `m`.
pub fn xi_remainder<T: Real>(theta: T, m: usize) -> T {
    let two_m = T::from_usize_lossy(2 * m) * theta;
    let c45 = T::lit(45.0);
    two_m.cos() * (((T::lit(2.0) * theta).cos() - T::lit(4.0)) / c45 - theta.cos() / T::lit(60.0))
        + two_m.sin() * ((T::lit(2.0) * theta).sin() / c45 + theta.sin() / T::lit(18.0))
}

/// `tau_P = (1/40) sum_{k<n} beta_k^2 (4 + cos theta_k) / (2 + cos theta_k)`.
pub fn tau_p<T: Real>(n: usize) -> Result<T> {
    if n < 2 {
        return Err(Error::InvalidArgument("tau_p needs n >= 2".into()));
    }
    let (thetas, betas) = bulk::<T>(n)?;
    Ok(tau_from_parts(&thetas, &betas))
}

fn tau_from_parts<T: Real>(thetas: &[T], betas_sq: &[T]) -> T {
    thetas.iter().zip(betas_sq).fold(T::zero(), |acc, (&t, &b)| {
        let c = t.cos();
        acc + b * (T::lit(4.0) + c) / (T::lit(2.0) + c)
    }) / T::lit(40.0)
}

impl<T: Real> SpectralData<T> {
    pub fn tau_p(&self) -> T {
        tau_from_parts(&self.thetas, &self.betas_sq)
    }
}

/// `tau_G = (2 + sqrt 3) / (20 sqrt 3)`.
pub fn tau_g<T: Real>() -> T {
    let s3 = T::lit(3.0).sqrt();
    (T::lit(2.0) + s3) / (T::lit(20.0) * s3)
}

/// `(1/20) int_0^1 (4 + cos(pi x)) / (2 + cos(pi x)) dx` by Gauss-Legendre.
pub fn tau_g_quadrature<T: Real>(order: usize) -> Result<T> {
    let q = GaussLegendre::on_interval(order, T::zero(), T::one())?;
    Ok(q.integrate(|x| {
        let c = (T::pi() * x).cos();
        (T::lit(4.0) + c) / (T::lit(2.0) + c)
    }) / T::lit(20.0))
}

/// `int_0^pi dx / (2 + cos x)`, whose exact value is `pi / sqrt 3`.
pub fn residue_integral_quadrature<T: Real>(order: usize) -> Result<T> {
    let q = GaussLegendre::on_interval(order, T::zero(), T::pi())?;
    Ok(q.integrate(|x| T::one() / (T::lit(2.0) + x.cos())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram::flat_gram;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    #[test]
    fn phi_endpoints_and_slope() {
        assert_eq!(phi_angle(0.0f64).unwrap(), 0.0);
        assert!((phi_angle(std::f64::consts::PI).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        let h = 1e-6;
        let m = std::f64::consts::FRAC_PI_2;
        let fd = (phi_angle(m + h).unwrap() - phi_angle(m - h).unwrap()) / (2.0 * h);
        assert!((fd - 1.6).abs() < 1e-8);
        assert!((phi_prime(m) - 1.6).abs() < 1e-15);
        assert!(phi_angle(-0.1f64).is_err() && phi_angle(3.2f64).is_err());
    }

    #[test]
    fn theta_brackets_and_residuals() {
        let n = 50;
        let mut prev = 0.0;
        for k in 1..n {
            let t = theta_k::<f64>(n, k).unwrap();
            let np1 = (n + 1) as f64;
            assert!(t > std::f64::consts::PI * k as f64 / np1 && t < std::f64::consts::PI * (k + 1) as f64 / np1);
            assert!(theta_residual(n, k, t).abs() <= 1e-12);
            assert!(t > prev);
            prev = t;
        }
        assert!(theta_k::<f64>(5, 0).is_err() && theta_k::<f64>(5, 5).is_err());
    }

    #[test]
    fn theta_two_by_bisection() {
        let f = |t: f64| t - phi_angle(t).unwrap() / 6.0 - std::f64::consts::PI / 3.0;
        let (mut lo, mut hi) = (std::f64::consts::PI / 3.0, 2.0 * std::f64::consts::PI / 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = theta_k::<f64>(2, 1).unwrap();
        assert!((t - lo).abs() < 1e-12);
        assert!(f(t).abs() <= 1e-12);
    }

    #[test]
    fn thetas_are_boundary_roots() {
        let n = 20;
        for k in 1..n {
            let t = theta_k::<f64>(n, k).unwrap();
            let z = nalgebra::Complex::new(t.cos(), t.sin());
            let p = z.powi(2 * (n as i32 + 1)) + z.powi(2 * n as i32 + 1) * 2.0 - z * 2.0 - 1.0;
            assert!(p.norm() <= 1e-9);
        }
    }

    #[test]
    fn gamma_root() {
        for &n in &[2usize, 5, 10] {
            assert_eq!(a_n(n, -2.0f64), 3.0);
        }
        let (g, off) = gamma_n_with_offset::<f64>(2).unwrap();
        let f = |z: f64| z.powi(6) + 2.0 * z.powi(5) - 2.0 * z - 1.0;
        let (mut lo, mut hi) = (-2.0f64, -1.5f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((g - lo).abs() < 1e-12);
        assert!(a_n_residual(2, off) <= 1e-9 && f(g).abs() <= 1e-9);
        let mut prev = 0.5f64.ln();
        for n in [2usize, 4, 8, 16, 32, 64, 128, 1024] {
            let (g, off) = gamma_n_with_offset::<f64>(n).unwrap();
            assert!(g >= -2.0 && g < -1.5);
            assert!(off.is_finite() && off < prev);
            assert!(a_n_residual(n, off) <= 1e-9);
            prev = off;
        }
        assert!((gamma_n::<f64>(50).unwrap() + 2.0).abs() < 1e-6);
        assert!(gamma_n::<f64>(1).is_err());
    }

    #[test]
    fn two_by_two_spectrum() {
        let spec = assemble_spectrum::<f64>(2, 0.5).unwrap();
        let mut got = spec.ln_eigenvalues();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let s2 = 2f64.sqrt();
        assert!((got[0] - (3.0 - s2)).abs() < 1e-9 && (got[1] - (3.0 + s2)).abs() < 1e-9);
        let t = spec.theta(1);
        assert!((spec.ln_eigenvalues()[0] - (4.0 + 2.0 * t.cos())).abs() < 1e-12);
        let dense = SymmetricEigen::new(l_n_dense::<f64>(2)).eigenvalues;
        assert!(dense.iter().all(|e| got.iter().any(|g| (g - e).abs() < 1e-9)));
    }

    #[test]
    fn eigenpairs_and_orthonormality() {
        for &n in &[2usize, 16, 64, 256] {
            let spec = assemble_spectrum::<f64>(n, 1.0 / n as f64).unwrap();
            let l = l_n_dense::<f64>(n);
            let phi = spec.eigenvector_matrix();
            let ev = spec.ln_eigenvalues();
            for k in 0..n {
                let f = phi.column(k);
                assert!((&l * f - f * ev[k]).norm() <= 1e-9, "n={n} k={k}");
            }
            let gram = phi.transpose() * &phi - DMatrix::identity(n, n);
            assert!(gram.amax() <= 1e-9, "n={n}");
            assert!(spec.lambdas.iter().all(|&x| x > 0.0));
            let c = spec.delta.powi(3);
            let top = spec.lambdas.iter().cloned().fold(0.0, f64::max);
            assert!(top >= c / 4.0 && top <= c);
            assert!((1..n).all(|k| spec.r(k) > 0.0 && spec.r(k) < 1.0));
        }
    }

    #[test]
    fn normalizers_match_closed_forms() {
        for &n in &[3usize, 8, 17, 40] {
            let spec = assemble_spectrum::<f64>(n, 1.0).unwrap();
            let m = (2 * n + 1) as f64;
            for k in 1..n {
                let t = spec.theta(k);
                let inv = (m - (m * t).sin() / t.sin()) / 4.0;
                assert!((spec.beta_sq(k) * inv - 1.0).abs() < 1e-10, "n={n} k={k}");
            }
            if n <= 17 {
                let g = spec.gamma;
                let p = 2 * n as i32 + 1;
                let inv = -m + (g.powi(p) - g.powi(-p)) / (g - 1.0 / g);
                assert!((spec.beta_sq(n) * inv - 1.0).abs() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn normalizers_approach_two_over_n() {
        let c: Vec<f64> = [16usize, 32, 64, 128]
            .iter()
            .map(|&n| {
                let spec = assemble_spectrum::<f64>(n, 1.0).unwrap();
                let dev = (1..n).map(|k| (spec.beta_sq(k) - 2.0 / n as f64).abs()).fold(0.0, f64::max);
                dev * (n * n) as f64
            })
            .collect();
        let (lo, hi) = c.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 1.5, "{c:?}");
    }

    #[test]
    fn outlier_normalizer_scale() {
        let vals: Vec<f64> = [8usize, 16, 32, 64, 128]
            .iter()
            .map(|&n| {
                let spec = assemble_spectrum::<f64>(n, 1.0).unwrap();
                spec.ln_beta_n_sq + 2.0 * n as f64 * spec.gamma.abs().ln()
            })
            .collect();
        assert!(vals.iter().all(|v| v.abs() < 5.0), "{vals:?}");
    }

    #[test]
    fn determinant_sequence() {
        let d = det_sequence::<f64>(10);
        assert_eq!((d[0], d[1], d[2], d[3]), (1.0, 2.0, 7.0, 26.0));
        assert!((d[10] / det_closed_form::<f64>(10) - 1.0).abs() < 4.0 * f64::EPSILON);
        let big = det_sequence::<f64>(400);
        let ld = log_det_sequence::<f64>(400);
        assert!((big[300].ln() - ld[300]).abs() < 1e-10);
        assert!((big[400].ln() - ld[400]).abs() < 1e-12 * ld[400]);
        assert!(log_det_sequence::<f64>(5000)[5000].is_finite());
    }

    #[test]
    fn cholesky_two() {
        let a = cholesky::<f64>(2).unwrap().to_dense();
        let expect = DMatrix::from_row_slice(2, 2, &[3.5f64.sqrt(), 0.5f64.sqrt(), 0.0, 2f64.sqrt()]);
        assert!((&a - expect).amax() < 1e-15);
        assert!((&a * a.transpose() - l_n_dense::<f64>(2)).amax() < 1e-14);
    }

    #[test]
    fn cholesky_identities() {
        for &n in &[1usize, 7, 64, 512] {
            let f = cholesky::<f64>(n).unwrap();
            let a = f.to_dense();
            assert!((&a * a.transpose() - l_n_dense::<f64>(n)).amax() <= 1e-12, "n={n}");
            let ld = log_det_sequence::<f64>(n)[n];
            assert!(((f.logdet() - ld) / ld.max(1.0)).abs() <= 1e-10);
        }
        let f = cholesky::<f64>(64).unwrap();
        let inv = f.inverse_dense();
        assert!((f.to_dense() * &inv - DMatrix::identity(64, 64)).amax() <= 1e-12);
        for i in 1..=64 {
            for j in i..=64 {
                let e = f.inverse_entry(i, j);
                assert!(e * e <= 0.5f64.powi((j - i + 1) as i32) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn flat_logdet_closed_form() {
        for &(n, d) in &[(8usize, 2usize), (100, 1), (1000, 3)] {
            let delta = 1.0 / n as f64;
            let direct = flat_gram(n, delta, d).unwrap().logdet().unwrap();
            let closed = logdet_lp(n, delta, d);
            assert!(((direct - closed) / closed).abs() <= 1e-10);
        }
    }

    #[test]
    fn trace_sandwich_cases() {
        let (n, d) = (8, 2);
        let delta = 1.0 / n as f64;
        let spec = assemble_spectrum::<f64>(n, delta).unwrap();
        let l = flat_gram(n, delta, d).unwrap();
        assert!((trace_sandwich(&spec, &l).unwrap() - (n * d) as f64).abs() < 1e-10);
        assert_eq!(trace_sandwich(&spec, &BlockTridiagonal::zeros(n, d)).unwrap(), 0.0);
        assert!(trace_sandwich(&spec, &BlockTridiagonal::zeros(n + 1, d)).is_err());
    }

    #[test]
    fn xi_boundary_and_trig_forms() {
        let n = 12;
        let spec = assemble_spectrum::<f64>(n, 1.0).unwrap();
        for k in 1..n {
            let a1 = spec.alpha(k, 1);
            let a2 = spec.alpha(k, 2);
            assert!((xi(&spec, k, 1).unwrap() - (8.0 / 45.0 * a1 * a1 + 13.0 / 180.0 * a1 * a2)).abs() < 1e-15);
            let t = spec.theta(k);
            for m in 2..=n - 2 {
                let trig = 1.0 / 15.0 + t.cos() / 60.0 + xi_remainder(t, m);
                assert!((xi(&spec, k, m).unwrap() - trig).abs() <= 1e-12, "k={k} m={m}");
            }
        }
        assert!(xi(&spec, 0, 1).is_err() && xi(&spec, 1, n + 1).is_err());
    }

    #[test]
    fn tau_regrouping() {
        for &n in &[2usize, 9, 40] {
            let delta = 1.0 / n as f64;
            let spec = assemble_spectrum::<f64>(n, delta).unwrap();
            let regrouped: f64 = (1..n)
                .map(|k| {
                    let t = spec.theta(k);
                    0.5 * spec.beta_sq(k) / spec.lambda(k) * delta.powi(3) * (1.0 / 15.0 + t.cos() / 60.0)
                })
                .sum();
            assert!((regrouped - spec.tau_p()).abs() <= 1e-12);
            assert!((spec.tau_p() - tau_p::<f64>(n).unwrap()).abs() < 1e-15);
        }
        let spec = assemble_spectrum::<f64>(2, 0.5).unwrap();
        let c = spec.theta(1).cos();
        assert!((tau_p::<f64>(2).unwrap() - spec.beta_sq(1) * (4.0 + c) / (2.0 + c) / 40.0).abs() < 1e-16);
    }

    #[test]
    fn tau_constants() {
        let g = tau_g::<f64>();
        assert!((g - 0.10773502691896258).abs() <= 1e-15);
        assert!((20.0 * 3f64.sqrt() * g - 3f64.sqrt() - 2.0).abs() <= 1e-12);
        assert!((tau_g_quadrature::<f64>(40).unwrap() - g).abs() <= 1e-12);
        let pi_s3 = std::f64::consts::PI / 3f64.sqrt();
        assert!((residue_integral_quadrature::<f64>(40).unwrap() - pi_s3).abs() <= 1e-12);
    }

    #[test]
    fn tau_p_converges() {
        let errs: Vec<f64> = [64usize, 256, 1024, 4096]
            .iter()
            .map(|&n| (tau_p::<f64>(n).unwrap() - tau_g::<f64>()).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] <= 5e-4);
    }

    fn weight(x: f64) -> f64 {
        (4.0 + x.cos()) / (2.0 + x.cos())
    }

    #[test]
    fn riemann_sum_limit() {
        let limit = 2.0 * crate::quadrature::GaussLegendre::<f64>::on_interval(40, 0.0, 1.0)
            .unwrap()
            .integrate(|t| weight(std::f64::consts::PI * t));
        let scaled: Vec<f64> = [32usize, 64, 128, 256]
            .iter()
            .map(|&n| {
                let spec = assemble_spectrum::<f64>(n, 1.0).unwrap();
                let s: f64 = (1..n).map(|k| spec.beta_sq(k) * weight(spec.theta(k))).sum();
                (s - limit).abs() * n as f64
            })
            .collect();
        assert!(scaled.iter().all(|&x| x < 10.0), "{scaled:?}");
    }

    #[test]
    fn oscillatory_sums_are_small() {
        let delta = 0.3f64;
        let mut worst = Vec::new();
        for &n in &[64usize, 256] {
            let spec = assemble_spectrum::<f64>(n, 1.0).unwrap();
            let lo = (delta * (n + 1) as f64 / std::f64::consts::PI).ceil() as usize;
            let hi = n - lo;
            let mut w = 0.0f64;
            for j in lo..=hi {
                let (mut re, mut im) = (0.0, 0.0);
                for k in 1..n {
                    let t = spec.theta(k);
                    let a = spec.beta_sq(k) * weight(t);
                    re += a * (2.0 * j as f64 * t).cos();
                    im += a * (2.0 * j as f64 * t).sin();
                }
                w = w.max((re * re + im * im).sqrt() * n as f64 * delta.sin());
            }
            worst.push(w);
        }
        assert!(worst[1] <= 2.0 * worst[0] && worst[0] < 50.0, "{worst:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn trace_sandwich_matches_dense(entries in proptest::collection::vec(-1.0f64..1.0, 8 * 4 + 7 * 4)) {
            let (n, d) = (8usize, 2usize);
            let delta = 1.0 / n as f64;
            let spec = assemble_spectrum::<f64>(n, delta).unwrap();
            let mut it = entries.chunks(4);
            let diag = (0..n).map(|_| {
                let b = DMatrix::from_row_slice(2, 2, it.next().unwrap());
                (&b + b.transpose()) * 0.5
            }).collect();
            let upper = (0..n - 1).map(|_| DMatrix::from_row_slice(2, 2, it.next().unwrap())).collect();
            let u = BlockTridiagonal::new(diag, upper).unwrap();
            let l = flat_gram(n, delta, d).unwrap().to_dense();
            let dense = l.lu().solve(&u.to_dense()).unwrap().trace();
            prop_assert!((trace_sandwich(&spec, &u).unwrap() - dense).abs() <= 1e-10 * (1.0 + dense.abs()));
        }
    }
}
