//! The density `rho = sqrt(det G / det L)`, its exponential decomposition and
//! the path functionals that enter the limit.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::development::ManifoldPath;
use crate::error::{Error, Result};
use crate::gram::{self, BlockTridiagonal};
use crate::manifold::CurvatureModel;
use crate::paths::IncrementVector;
use crate::scalar::Real;
use crate::spectral::{self, SpectralData};

/// `(rho, ln rho)` with `ln rho = (ln det G - ln det L) / 2`.
pub fn rho_logdet<T: Real>(g: &BlockTridiagonal<T>, l: &BlockTridiagonal<T>) -> Result<(T, T)> {
    if g.n() != l.n() || g.d() != l.d() {
        return Err(Error::DimensionMismatch { expected: l.n() * l.d(), found: g.n() * g.d() });
    }
    let log_rho = (g.logdet()? - l.logdet()?) * T::lit(0.5);
    Ok((log_rho.exp(), log_rho))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    /// `tr(L^{-1/2} U L^{-1/2}) / 2`.
    pub x_p: T,
    /// `tr(L^{-1/2} U L^{-1/2})`.
    pub trace_u: T,
    /// `tr(L^{-1/2} E L^{-1/2})`.
    pub trace_e: T,
    /// `ln det(I + W) - tr W` with `W = L^{-1/2} R L^{-1/2}`.
    pub psi2: T,
    /// `|W|_F^2 / (1 - |W|)`.
    pub psi2_bound: T,
    /// Spectral norm of `W`.
    pub sandwich_norm: T,
    /// `exp((trace_u + trace_e + psi2) / 2)`.
    pub reconstruction: T,
}

/// Orthonormal eigenbasis of `L_n` (columns) and the eigenvalues of `L_P`.
fn flat_eigenbasis<T: Real>(spec: Option<&SpectralData<T>>, n: usize, delta: T) -> Result<(DMatrix<T>, Vec<T>)> {
    match spec {
        Some(s) => {
            if s.n != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.n });
            }
            Ok((s.eigenvector_matrix(), s.lambdas.clone()))
        }
        None if n == 1 => Ok((DMatrix::identity(1, 1), vec![delta.powi(3) / T::lit(3.0)])),
        None => Err(Error::InvalidArgument("spectral data required for n >= 2".into())),
    }
}

/// `W = L^{-1/2} R L^{-1/2}` built with the spectral square root of `L_P`.
pub fn sandwich<T: Real>(phi: &DMatrix<T>, lambdas: &[T], r: &BlockTridiagonal<T>) -> DMatrix<T> {
    let (n, d) = (r.n(), r.d());
    let rd = r.to_dense();
    let p = phi.kronecker(&DMatrix::<T>::identity(d, d));
    let mut w = p.transpose() * rd * &p;
    for a in 0..n * d {
        for b in 0..n * d {
            w[(a, b)] /= (lambdas[a / d] * lambdas[b / d]).sqrt();
        }
    }
    (&w + w.transpose()) * T::lit(0.5)
}

fn trace_against_flat<T: Real>(spec: Option<&SpectralData<T>>, m: &BlockTridiagonal<T>, delta: T) -> Result<T> {
    match spec {
        Some(s) => spectral::trace_sandwich(s, m),
        None => Ok(m.trace() * T::lit(3.0) / delta.powi(3)),
    }
}

/// Exponential decomposition of `rho` in the eigenbasis of `L_P`. Fails with
/// [`Error::DecompositionUnavailable`] when `|W| >= 1`.
pub fn rho_exp_decomposition<T: Real>(
    spec: Option<&SpectralData<T>>,
    u: &BlockTridiagonal<T>,
    e: &BlockTridiagonal<T>,
    r: &BlockTridiagonal<T>,
    l: &BlockTridiagonal<T>,
) -> Result<Decomposition<T>> {
    let (n, d) = (l.n(), l.d());
    for m in [u, e, r] {
        if m.n() != n || m.d() != d {
            return Err(Error::DimensionMismatch { expected: n * d, found: m.n() * m.d() });
        }
    }
    let delta = (l.diag()[n - 1][(0, 0)] * T::lit(3.0)).cbrt();
    let (phi, lambdas) = flat_eigenbasis(spec, n, delta)?;
    let w = sandwich(&phi, &lambdas, r);
    let mu = SymmetricEigen::new(w).eigenvalues;
    let norm = mu.iter().fold(T::zero(), |m, &x| if x.abs() > m { x.abs() } else { m });
    if !(norm < T::one()) {
        return Err(Error::DecompositionUnavailable(norm.to_f64_lossy()));
    }
    let fro2 = mu.iter().fold(T::zero(), |a, &x| a + x * x);
    let psi2 = mu.iter().fold(T::zero(), |a, &x| a + (x.ln_1p() - x));
    let trace_u = trace_against_flat(spec, u, delta)?;
    let trace_e = trace_against_flat(spec, e, delta)?;
    Ok(Decomposition {
        x_p: trace_u * T::lit(0.5),
        trace_u,
        trace_e,
        psi2,
        psi2_bound: fro2 / (T::one() - norm),
        sandwich_norm: norm,
        reconstruction: ((trace_u + trace_e + psi2) * T::lit(0.5)).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YFunctional<T> {
    /// `-tau_P sum_{m=2}^{n-2} <Ric db_m, db_m>`.
    pub value: T,
    /// The same expression over the indices left out of the interior sum.
    pub boundary: T,
    /// False when `n < 4` and the interior sum is empty.
    pub interior: bool,
}

pub fn y_functional<T: Real>(tau_p: T, model: &CurvatureModel<T>, inc: &IncrementVector<T>) -> Result<YFunctional<T>> {
    let n = inc.n();
    let mut inner = T::zero();
    let mut outer = T::zero();
    for m in 1..=n {
        let q = model.ricci_form(inc.delta(m))?;
        if m >= 2 && m + 2 <= n {
            inner += q;
        } else {
            outer += q;
        }
    }
    Ok(YFunctional { value: -tau_p * inner, boundary: -tau_p * outer, interior: n >= 4 })
}

/// `(sum <Ric db_i, db_i>, sum Scal ds_i)`; the knots of `path`, when given,
/// supply the scalar curvature.
pub fn fancy_statistics<T: Real>(
    model: &CurvatureModel<T>,
    inc: &IncrementVector<T>,
    path: Option<&ManifoldPath<T>>,
) -> Result<(T, T)> {
    let mut r = T::zero();
    for db in inc.deltas() {
        r += model.ricci_form(db)?;
    }
    let scal: Vec<T> = match path {
        Some(p) => crate::development::scal_along(p),
        None => vec![model.scal(); inc.n()],
    };
    let s = (1..=inc.n()).fold(T::zero(), |acc, i| acc + scal[i - 1] * inc.partition().step(i));
    Ok((r, s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySample<T> {
    pub rho: T,
    pub log_rho: T,
    pub x_p: T,
    pub y_p: T,
    pub y_boundary: T,
    pub y_interior: bool,
    pub fancy_r: T,
    pub fancy_s: T,
    /// Present when the decomposition was requested and `|W| < 1`.
    pub psi2_bound: Option<T>,
    pub decomposition: Option<Decomposition<T>>,
    /// `None` when the decomposition was not requested.
    pub decomposition_ok: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Compute `X_P` via the trace formula.
    pub x_p: bool,
    /// Build the dense sandwich and its spectrum.
    pub decomposition: bool,
}

/// Everything that depends only on `(model, n)`.
#[derive(Debug, Clone)]
pub struct DensityContext<T: Real> {
    pub model: CurvatureModel<T>,
    pub n: usize,
    pub delta: T,
    pub flat: BlockTridiagonal<T>,
    pub flat_logdet: T,
    pub spectrum: Option<SpectralData<T>>,
    pub tau_p: T,
}

impl<T: Real> DensityContext<T> {
    pub fn new(model: &CurvatureModel<T>, n: usize) -> Result<Self> {
        let delta = T::one() / T::from_usize_lossy(n);
        let flat = gram::flat_gram(n, delta, model.d())?;
        let flat_logdet = flat.logdet()?;
        let spectrum = if n >= 2 { Some(spectral::assemble_spectrum(n, delta)?) } else { None };
        let tau_p = spectrum.as_ref().map(|s| s.tau_p()).unwrap_or_else(T::zero);
        Ok(Self { model: model.clone(), n, delta, flat, flat_logdet, spectrum, tau_p })
    }

    pub fn evaluate(&self, inc: &IncrementVector<T>, opts: EvalOptions) -> Result<DensitySample<T>> {
        if inc.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: inc.n() });
        }
        let (segs, g) = gram::gram_for_increments(&self.model, inc)?;
        let log_rho = (g.logdet()? - self.flat_logdet) * T::lit(0.5);
        let (fancy_r, fancy_s) = fancy_statistics(&self.model, inc, None)?;
        let y = y_functional(self.tau_p, &self.model, inc)?;
        let mut sample = DensitySample {
            rho: log_rho.exp(),
            log_rho,
            x_p: T::zero(),
            y_p: y.value,
            y_boundary: y.boundary,
            y_interior: y.interior,
            fancy_r,
            fancy_s,
            psi2_bound: None,
            decomposition: None,
            decomposition_ok: None,
        };
        if opts.x_p || opts.decomposition {
            let ops: Vec<DMatrix<T>> = segs.iter().map(|s| s.a0.clone()).collect();
            let u = gram::u_matrix(&ops, self.delta)?;
            if opts.decomposition {
                let r = gram::remainder(&g, &self.flat)?;
                let e = r.sub(&u)?;
                match rho_exp_decomposition(self.spectrum.as_ref(), &u, &e, &r, &self.flat) {
                    Ok(dec) => {
                        sample.x_p = dec.x_p;
                        sample.psi2_bound = Some(dec.psi2_bound);
                        sample.decomposition = Some(dec);
                        sample.decomposition_ok = Some(true);
                    }
                    Err(Error::DecompositionUnavailable(_)) => {
                        sample.x_p = trace_against_flat(self.spectrum.as_ref(), &u, self.delta)? * T::lit(0.5);
                        sample.decomposition_ok = Some(false);
                    }
                    Err(e) => return Err(e),
                }
            } else {
                sample.x_p = trace_against_flat(self.spectrum.as_ref(), &u, self.delta)? * T::lit(0.5);
            }
        }
        Ok(sample)
    }
}
