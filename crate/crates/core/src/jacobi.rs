//! Solution operators of the segment Jacobi equation `Z'' = A Z`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{op_norm, Real};

pub const DEFAULT_ODE_STEPS: usize = 64;

/// Threshold on `lambda * s^2` below which the series branch is used.
const SERIES_CUTOFF: f64 = 1e-8;

pub type OperatorFn<T> = Arc<dyn Fn(T) -> DMatrix<T> + Send + Sync>;

/// `sinh(sqrt(lambda) s) / sqrt(lambda)`, equal to `s` when `lambda = 0`.
pub fn sinhc<T: Real>(lambda: T, s: T) -> T {
    let x = lambda * s * s;
    if x < T::lit(SERIES_CUTOFF) {
        s * (T::one() + x / T::lit(6.0) + x * x / T::lit(120.0))
    } else {
        let r = lambda.sqrt();
        (r * s).sinh() / r
    }
}

/// `cosh(sqrt(lambda) s)`.
pub fn coshc<T: Real>(lambda: T, s: T) -> T {
    let x = lambda * s * s;
    if x < T::lit(SERIES_CUTOFF) {
        T::one() + x / T::lit(2.0) + x * x / T::lit(24.0)
    } else {
        (lambda.sqrt() * s).cosh()
    }
}

#[derive(Clone)]
pub enum SegmentKind<T: Real> {
    /// Constant operator with its symmetric eigendecomposition.
    Spectral { eigenvalues: DVector<T>, eigenvectors: DMatrix<T> },
    /// Operator depending on `s`, integrated with a fixed-step RK4 scheme.
    Numeric { operator: OperatorFn<T>, steps: usize, derivative_bound: Option<T> },
}

impl<T: Real> fmt::Debug for SegmentKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentKind::Spectral { eigenvalues, .. } => {
                f.debug_struct("Spectral").field("eigenvalues", eigenvalues).finish()
            }
            SegmentKind::Numeric { steps, .. } => f.debug_struct("Numeric").field("steps", steps).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JacobiSegment<T: Real> {
    pub a0: DMatrix<T>,
    pub delta: T,
    /// `sup |A(s)|` over the segment.
    pub k_bound: T,
    pub s_end: DMatrix<T>,
    pub c_end: DMatrix<T>,
    pub s_end_inv: DMatrix<T>,
    pub kind: SegmentKind<T>,
}

impl<T: Real> JacobiSegment<T> {
    pub fn d(&self) -> usize {
        self.a0.nrows()
    }

    /// Operator at `s`.
    pub fn operator_at(&self, s: T) -> DMatrix<T> {
        match &self.kind {
            SegmentKind::Spectral { .. } => self.a0.clone(),
            SegmentKind::Numeric { operator, .. } => operator(s),
        }
    }

    /// Bound on `|A'(s)|`: zero for constant operators, user supplied otherwise.
    pub fn derivative_bound(&self) -> Option<T> {
        match &self.kind {
            SegmentKind::Spectral { .. } => Some(T::zero()),
            SegmentKind::Numeric { derivative_bound, .. } => *derivative_bound,
        }
    }

    /// Records a bound on `|A'|` for an `s`-dependent operator.
    pub fn with_derivative_bound(mut self, k1: T) -> Self {
        if let SegmentKind::Numeric { derivative_bound, .. } = &mut self.kind {
            *derivative_bound = Some(k1);
        }
        self
    }

    fn spectral_apply<F: Fn(T, T) -> T>(&self, s: T, f: F) -> Option<DMatrix<T>> {
        match &self.kind {
            SegmentKind::Spectral { eigenvalues, eigenvectors } => {
                let diag = DVector::from_iterator(eigenvalues.len(), eigenvalues.iter().map(|&l| f(l, s)));
                Some(eigenvectors * DMatrix::from_diagonal(&diag) * eigenvectors.transpose())
            }
            SegmentKind::Numeric { .. } => None,
        }
    }

    /// `(S(s), S'(s), C(s), C'(s))` from the integrator.
    fn numeric_state(&self, s: T) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>) {
        let SegmentKind::Numeric { operator, steps, .. } = &self.kind else {
            unreachable!("numeric_state on a spectral segment")
        };
        let h_nominal = self.delta / T::from_usize_lossy(*steps);
        let m = (s / h_nominal).ceil().to_f64_lossy().max(1.0) as usize;
        integrate_rk4(operator.as_ref(), self.d(), s, m)
    }

    pub fn s_at(&self, s: T) -> DMatrix<T> {
        self.spectral_apply(s, sinhc).unwrap_or_else(|| self.numeric_state(s).0)
    }

    pub fn s_prime_at(&self, s: T) -> DMatrix<T> {
        self.spectral_apply(s, coshc).unwrap_or_else(|| self.numeric_state(s).1)
    }

    pub fn c_at(&self, s: T) -> DMatrix<T> {
        self.spectral_apply(s, coshc).unwrap_or_else(|| self.numeric_state(s).2)
    }

    pub fn c_prime_at(&self, s: T) -> DMatrix<T> {
        self.spectral_apply(s, |l, s| l * sinhc(l, s)).unwrap_or_else(|| self.numeric_state(s).3)
    }

    /// Smallest singular value of `S(s)`.
    pub fn s_min_singular(&self, s: T) -> T {
        self.s_at(s)
            .singular_values()
            .iter()
            .fold(T::max_value().unwrap_or(T::one() / T::eps()), |m, &x| if x < m { x } else { m })
    }
}

/// RK4 on the first-order system for the sine and cosine solutions at once.
fn integrate_rk4<T: Real>(
    a: &(dyn Fn(T) -> DMatrix<T> + Send + Sync),
    d: usize,
    s_end: T,
    steps: usize,
) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>) {
    // Columns 0..d: sine solution, d..2d: cosine solution.
    let mut z = DMatrix::<T>::zeros(d, 2 * d);
    let mut zp = DMatrix::<T>::zeros(d, 2 * d);
    for i in 0..d {
        zp[(i, i)] = T::one();
        z[(i, d + i)] = T::one();
    }
    if steps == 0 || s_end == T::zero() {
        return split(&z, &zp, d);
    }
    let h = s_end / T::from_usize_lossy(steps);
    let half = h * T::lit(0.5);
    let sixth = h / T::lit(6.0);
    for k in 0..steps {
        let s = h * T::from_usize_lossy(k);
        let a0 = a(s);
        let am = a(s + half);
        let a1 = a(s + h);
        let k1z = zp.clone();
        let k1p = &a0 * &z;
        let k2z = &zp + &k1p * half;
        let k2p = &am * (&z + &k1z * half);
        let k3z = &zp + &k2p * half;
        let k3p = &am * (&z + &k2z * half);
        let k4z = &zp + &k3p * h;
        let k4p = &a1 * (&z + &k3z * h);
        z += (k1z + (k2z + k3z) * T::lit(2.0) + k4z) * sixth;
        zp += (k1p + (k2p + k3p) * T::lit(2.0) + k4p) * sixth;
    }
    split(&z, &zp, d)
}

fn split<T: Real>(z: &DMatrix<T>, zp: &DMatrix<T>, d: usize) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>) {
    (
        z.columns(0, d).into_owned(),
        zp.columns(0, d).into_owned(),
        z.columns(d, d).into_owned(),
        zp.columns(d, d).into_owned(),
    )
}

fn check_square<T: Real>(a: &DMatrix<T>) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    Ok(())
}

fn invert<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("S(delta) is not invertible".into()))
}

/// Closed-form segment for a constant symmetric PSD operator.
pub fn solve_segment_const<T: Real>(a0: &DMatrix<T>, delta: T) -> Result<JacobiSegment<T>> {
    check_square(a0)?;
    if !(delta > T::zero()) {
        return Err(Error::InvalidArgument("segment length must be positive".into()));
    }
    let scale = crate::scalar::max_abs(a0);
    let asym = crate::scalar::max_abs(&(a0 - a0.transpose()));
    if asym > T::lit(1e-10) * (T::one() + scale) {
        return Err(Error::NotSymmetric(asym.to_f64_lossy()));
    }
    let sym = (a0 + a0.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym.clone());
    let norm = eig.eigenvalues.iter().fold(T::zero(), |m, &l| if l.abs() > m { l.abs() } else { m });
    let mut eigenvalues = eig.eigenvalues.clone();
    for l in eigenvalues.iter_mut() {
        if *l < -T::lit(1e-10) * norm {
            return Err(Error::NotPositiveSemiDefinite(l.to_f64_lossy()));
        }
        if *l < T::zero() {
            *l = T::zero();
        }
    }
    let q = eig.eigenvectors;
    let diag_s = DVector::from_iterator(eigenvalues.len(), eigenvalues.iter().map(|&l| sinhc(l, delta)));
    let diag_c = DVector::from_iterator(eigenvalues.len(), eigenvalues.iter().map(|&l| coshc(l, delta)));
    let diag_si = diag_s.map(|x| T::one() / x);
    let s_end = &q * DMatrix::from_diagonal(&diag_s) * q.transpose();
    let c_end = &q * DMatrix::from_diagonal(&diag_c) * q.transpose();
    let s_end_inv = &q * DMatrix::from_diagonal(&diag_si) * q.transpose();
    Ok(JacobiSegment {
        a0: sym,
        delta,
        k_bound: norm,
        s_end,
        c_end,
        s_end_inv,
        kind: SegmentKind::Spectral { eigenvalues, eigenvectors: q },
    })
}

/// Segment for an `s`-dependent operator, integrated with `steps` RK4 steps.
pub fn solve_segment_numeric<T: Real>(operator: OperatorFn<T>, delta: T, steps: usize) -> Result<JacobiSegment<T>> {
    if steps < 4 {
        return Err(Error::InvalidArgument("at least 4 integration steps are required".into()));
    }
    if !(delta > T::zero()) {
        return Err(Error::InvalidArgument("segment length must be positive".into()));
    }
    let a0 = operator(T::zero());
    check_square(&a0)?;
    let d = a0.nrows();
    let h = delta / T::from_usize_lossy(steps);
    let mut k_bound = T::zero();
    for k in 0..=2 * steps {
        let ak = operator(h * T::from_usize_lossy(k) * T::lit(0.5));
        if ak.nrows() != d || ak.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: ak.nrows() });
        }
        let nk = op_norm(&ak);
        if nk > k_bound {
            k_bound = nk;
        }
    }
    let (s_end, _, c_end, _) = integrate_rk4(operator.as_ref(), d, delta, steps);
    let s_end_inv = invert(&s_end)?;
    Ok(JacobiSegment {
        a0,
        delta,
        k_bound,
        s_end,
        c_end,
        s_end_inv,
        kind: SegmentKind::Numeric { operator, steps, derivative_bound: None },
    })
}

/// Bridge data joining segment `i` to segment `i + 1`.
#[derive(Debug, Clone)]
pub struct TransferData<T: Real> {
    /// `F_i = S_{i+1}(delta)^{-1} C_{i+1}(delta) S_i(delta)`.
    pub f: DMatrix<T>,
    /// `S_i(delta)`, the starting value of `V_{i+1}`.
    pub v0: DMatrix<T>,
    right: JacobiSegment<T>,
}

impl<T: Real> TransferData<T> {
    /// `V_{i+1}(s) = C_{i+1}(s) S_i(delta) - S_{i+1}(s) F_i`.
    pub fn v_at(&self, s: T) -> DMatrix<T> {
        self.right.c_at(s) * &self.v0 - self.right.s_at(s) * &self.f
    }

    pub fn v_prime_at(&self, s: T) -> DMatrix<T> {
        self.right.c_prime_at(s) * &self.v0 - self.right.s_prime_at(s) * &self.f
    }

    pub fn right(&self) -> &JacobiSegment<T> {
        &self.right
    }
}

pub fn transfer<T: Real>(left: &JacobiSegment<T>, right: &JacobiSegment<T>) -> Result<TransferData<T>> {
    if left.d() != right.d() {
        return Err(Error::DimensionMismatch { expected: left.d(), found: right.d() });
    }
    let rhs = &right.c_end * &left.s_end;
    let f = right
        .s_end
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("S_{i+1}(delta) is not invertible".into()))?;
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular("transfer operator is not finite".into()));
    }
    Ok(TransferData { f, v0: left.s_end.clone(), right: right.clone() })
}

/// Low-order expansions of the segment operators with their error bounds.
#[derive(Debug, Clone)]
pub struct TaylorSegment<T: Real> {
    pub a0: DMatrix<T>,
    pub delta: T,
    /// `|A|`.
    pub k0: T,
    /// `|A'|`; zero for constant operators.
    pub k1: T,
}

pub fn taylor_segment<T: Real>(a0: &DMatrix<T>, delta: T) -> Result<TaylorSegment<T>> {
    check_square(a0)?;
    Ok(TaylorSegment { a0: a0.clone(), delta, k0: op_norm(a0), k1: T::zero() })
}

impl<T: Real> TaylorSegment<T> {
    pub fn with_derivative_bound(mut self, k1: T) -> Self {
        self.k1 = k1;
        self
    }

    fn identity(&self) -> DMatrix<T> {
        DMatrix::identity(self.a0.nrows(), self.a0.nrows())
    }

    /// `s I + s^3 A / 6`.
    pub fn s_approx(&self, s: T) -> DMatrix<T> {
        self.identity() * s + &self.a0 * (s * s * s / T::lit(6.0))
    }

    /// `I + s^2 A / 2`.
    pub fn c_approx(&self, s: T) -> DMatrix<T> {
        self.identity() + &self.a0 * (s * s / T::lit(2.0))
    }

    /// Bridge expansion with `next` the operator of the following segment.
    pub fn v_approx(&self, next: &DMatrix<T>, s: T) -> DMatrix<T> {
        let d = self.delta;
        let six = T::lit(6.0);
        self.identity() * (d - s)
            + &self.a0 * ((d * d * d - s * d * d) / six)
            + next * ((T::lit(3.0) * d * s * s - T::lit(2.0) * d * d * s - s * s * s) / six)
    }

    /// Bound on `|S(s) - s_approx(s)|`.
    pub fn s_bound(&self, s: T) -> T {
        let r = self.k0.sqrt() * s;
        let tail = if r * r < T::lit(1e-3) {
            // sinh(r)/r - 1 - r^2/6 = r^4/120 + r^6/5040 + ...
            let r2 = r * r;
            r2 * r2 / T::lit(120.0) * (T::one() + r2 / T::lit(42.0) + r2 * r2 / T::lit(3024.0))
        } else {
            r.sinh() / r - T::one() - r * r / T::lit(6.0)
        };
        s.powi(4) * self.k1 / T::lit(12.0) + s * tail
    }

    /// Bound on `|C(s) - c_approx(s)|`.
    pub fn c_bound(&self, s: T) -> T {
        let r = self.k0.sqrt() * s;
        let tail = if r * r < T::lit(1e-3) {
            let r2 = r * r;
            r2 * r2 / T::lit(24.0) * (T::one() + r2 / T::lit(30.0) + r2 * r2 / T::lit(1680.0))
        } else {
            r.cosh() - T::one() - r * r / T::lit(2.0)
        };
        s.powi(3) * self.k1 / T::lit(6.0) + tail
    }
}

/// Right-hand side of the Green's-function bound on `|z(s) - linear interpolant|`.
pub fn green_bound<T: Real>(k: T, delta: T, s: T, z0_norm: T, zp0_norm: T) -> T {
    let r = k.sqrt() * delta;
    s * (T::one() - s / delta) * (z0_norm * k * delta * r.cosh() + zp0_norm * (r.cosh() - T::one()))
}

/// Right-hand side of `|S(s) - s I| <= s (cosh(sqrt(K) delta) - 1)`.
pub fn s_linear_bound<T: Real>(k: T, delta: T, s: T) -> T {
    s * ((k.sqrt() * delta).cosh() - T::one())
}

/// `C(s)^T S'(s) - C'(s)^T S(s)`, the identity for constant symmetric operators.
pub fn wronskian<T: Real>(seg: &JacobiSegment<T>, s: T) -> DMatrix<T> {
    seg.c_at(s).transpose() * seg.s_prime_at(s) - seg.c_prime_at(s).transpose() * seg.s_at(s)
}

/// Outcome of one solver self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverCheck {
    pub name: &'static str,
    pub instances: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl SolverCheck {
    pub fn pass(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

/// Random PSD operator `B B^T` from the counter-based sampler, rescaled so
/// that `|A| <= max_norm`.
fn random_psd(sampler: &crate::paths::IncrementSampler, j: u64, slot: u64, d: usize, max_norm: f64) -> DMatrix<f64> {
    let z = sampler.standard_normal(j, slot, d * d);
    let b = DMatrix::from_row_slice(d, d, &z);
    let a = &b * b.transpose();
    let n = op_norm(&a);
    let u = sampler.standard_normal(j, slot + 1, 1)[0].abs().min(3.0) / 3.0;
    if n > 0.0 {
        a * (max_norm * u / n)
    } else {
        a
    }
}

/// Numeric-versus-closed-form agreement, the lower bound on `S`, the bridge
/// end condition and the Wronskian identity on `instances` random operators.
pub fn solver_checks(instances: usize, seed: u64) -> Result<Vec<SolverCheck>> {
    let sampler = crate::paths::IncrementSampler::new(seed);
    let d = 3;
    let mut numeric = 0.0f64;
    let mut smin = 0.0f64;
    let mut bridge = 0.0f64;
    let mut wron = 0.0f64;
    let rank_one = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]));
    let mut numeric_cases = vec![(rank_one, 1.0)];
    for j in 0..instances as u64 {
        let delta = 0.05 + 0.95 * sampler.standard_normal(j, 0, 1)[0].abs().min(3.0) / 3.0;
        let a = random_psd(&sampler, j, 1, d, 16.0);
        let seg = solve_segment_const(&a, delta)?;
        for k in 1..=4 {
            let s = delta * k as f64 / 4.0;
            smin = smin.max((s - seg.s_min_singular(s)) / s);
            wron = wron.max(op_norm(&(wronskian(&seg, s) - DMatrix::identity(d, d))));
        }
        let right = solve_segment_const(&random_psd(&sampler, j, 3, d, 16.0), delta)?;
        bridge = bridge.max(op_norm(&transfer(&seg, &right)?.v_at(delta)));
        if j < 50 {
            let delta = 0.5;
            numeric_cases.push((random_psd(&sampler, j, 5, d, 1.0 / (delta * delta)), delta));
        }
    }
    for (a, delta) in &numeric_cases {
        let exact = solve_segment_const(a, *delta)?;
        let op = a.clone();
        let num = solve_segment_numeric(Arc::new(move |_| op.clone()), *delta, DEFAULT_ODE_STEPS)?;
        numeric = numeric.max(op_norm(&(&num.s_end - &exact.s_end))).max(op_norm(&(&num.c_end - &exact.c_end)));
    }
    Ok(vec![
        SolverCheck { name: "numeric-vs-closed-form", instances: numeric_cases.len(), max_error: numeric, tolerance: 1e-8 },
        SolverCheck { name: "s-min-singular", instances, max_error: smin.max(0.0), tolerance: 1e-9 },
        SolverCheck { name: "bridge-end-value", instances, max_error: bridge, tolerance: 1e-9 },
        SolverCheck { name: "wronskian", instances, max_error: wron, tolerance: 1e-9 },
    ])
}
