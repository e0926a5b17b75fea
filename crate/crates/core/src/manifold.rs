//! Curvature data of the supported locally symmetric models.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One constant-curvature factor of dimension `dim`; `k == 0` is flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor<T> {
    pub dim: usize,
    pub k: T,
}

pub type OmegaFn<T> = Arc<dyn Fn(&DVector<T>, &DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync>;

/// User-supplied frame-invariant curvature operator.
#[derive(Clone)]
pub struct CustomCurvature<T> {
    pub omega: OmegaFn<T>,
}

impl<T> fmt::Debug for CustomCurvature<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomCurvature")
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind<T> {
    Euclidean,
    ConstantCurvature { k: T },
    Product(Vec<Factor<T>>),
    Custom(CustomCurvature<T>),
}

#[derive(Debug, Clone)]
pub struct CurvatureModel<T> {
    d: usize,
    kind: ModelKind<T>,
    kappa: T,
}

impl<T: Real> CurvatureModel<T> {
    pub fn euclidean(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { d, kind: ModelKind::Euclidean, kappa: T::zero() })
    }

    pub fn constant_curvature(d: usize, k: T) -> Result<Self> {
        check_dim(d)?;
        check_k(k)?;
        Ok(Self { d, kind: ModelKind::ConstantCurvature { k }, kappa: k.abs() })
    }

    /// Hyperbolic space of curvature `k < 0`.
    pub fn hyperbolic(d: usize, k: T) -> Result<Self> {
        if !(k < T::zero()) {
            return Err(Error::InvalidArgument("hyperbolic model needs K < 0".into()));
        }
        Self::constant_curvature(d, k)
    }

    pub fn product(factors: Vec<Factor<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("product needs at least one factor".into()));
        }
        let mut kappa = T::zero();
        for f in &factors {
            check_dim(f.dim)?;
            check_k(f.k)?;
            if f.k.abs() > kappa {
                kappa = f.k.abs();
            }
        }
        let d = factors.iter().map(|f| f.dim).sum();
        Ok(Self { d, kind: ModelKind::Product(factors), kappa })
    }

    /// Custom operator `omega(a, b, c)`; `kappa` must bound `|A(w)| / |w|^2`.
    /// Non-positivity of the resulting Jacobi operator is the caller's duty.
    pub fn custom(d: usize, omega: OmegaFn<T>, kappa: T) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { d, kind: ModelKind::Custom(CustomCurvature { omega }), kappa })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &ModelKind<T> {
        &self.kind
    }

    /// Bound on the curvature operator: `|A(w)| <= kappa |w|^2`.
    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn is_flat(&self) -> bool {
        match &self.kind {
            ModelKind::Euclidean => true,
            ModelKind::ConstantCurvature { k } => *k == T::zero(),
            ModelKind::Product(fs) => fs.iter().all(|f| f.k == T::zero()),
            ModelKind::Custom(_) => false,
        }
    }

    /// Constant-curvature blocks, or `None` for a custom model.
    pub fn factors(&self) -> Option<Vec<Factor<T>>> {
        match &self.kind {
            ModelKind::Euclidean => Some(vec![Factor { dim: self.d, k: T::zero() }]),
            ModelKind::ConstantCurvature { k } => Some(vec![Factor { dim: self.d, k: *k }]),
            ModelKind::Product(fs) => Some(fs.clone()),
            ModelKind::Custom(_) => None,
        }
    }

    fn check(&self, v: &DVector<T>) -> Result<()> {
        if v.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: v.len() });
        }
        Ok(())
    }

    /// Curvature operator `Omega(a, b) c`.
    pub fn omega(&self, a: &DVector<T>, b: &DVector<T>, c: &DVector<T>) -> Result<DVector<T>> {
        self.check(a)?;
        self.check(b)?;
        self.check(c)?;
        if let ModelKind::Custom(cc) = &self.kind {
            return Ok((cc.omega)(a, b, c));
        }
        let mut out = DVector::zeros(self.d);
        let mut off = 0;
        for f in self.factors().unwrap_or_default() {
            if f.k != T::zero() {
                let ra = a.rows(off, f.dim);
                let rb = b.rows(off, f.dim);
                let rc = c.rows(off, f.dim);
                let v = (ra * rb.dot(&rc) - rb * ra.dot(&rc)) * f.k;
                out.rows_mut(off, f.dim).copy_from(&v);
            }
            off += f.dim;
        }
        Ok(out)
    }

    /// Ricci map `sum_i Omega(v, e_i) e_i`.
    pub fn ricci(&self, v: &DVector<T>) -> Result<DVector<T>> {
        self.check(v)?;
        match &self.kind {
            ModelKind::Custom(_) => {
                let mut acc = DVector::zeros(self.d);
                for i in 0..self.d {
                    let e = DVector::from_fn(self.d, |r, _| if r == i { T::one() } else { T::zero() });
                    acc += self.omega(v, &e, &e)?;
                }
                Ok(acc)
            }
            _ => {
                let mut out = DVector::zeros(self.d);
                let mut off = 0;
                for f in self.factors().unwrap_or_default() {
                    let scale = f.k * T::from_usize_lossy(f.dim - 1);
                    out.rows_mut(off, f.dim).copy_from(&(v.rows(off, f.dim) * scale));
                    off += f.dim;
                }
                Ok(out)
            }
        }
    }

    /// `<Ric v, v>`.
    pub fn ricci_form(&self, v: &DVector<T>) -> Result<T> {
        Ok(self.ricci(v)?.dot(v))
    }

    /// Matrix of the Ricci map in the standard frame.
    pub fn ricci_matrix(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.d, self.d);
        for i in 0..self.d {
            let e = DVector::from_fn(self.d, |r, _| if r == i { T::one() } else { T::zero() });
            let col = self.ricci(&e).expect("dimension matches");
            m.set_column(i, &col);
        }
        m
    }

    /// Operator norm of the Ricci map.
    pub fn ricci_bound(&self) -> T {
        crate::scalar::op_norm(&self.ricci_matrix())
    }

    /// Scalar curvature, constant over every supported model.
    pub fn scal(&self) -> T {
        match &self.kind {
            ModelKind::Custom(_) => self.ricci_matrix().trace(),
            _ => self.factors().unwrap_or_default().iter().fold(T::zero(), |acc, f| {
                acc + f.k * T::from_usize_lossy(f.dim * (f.dim - 1))
            }),
        }
    }

    /// Jacobi operator `A(w) h = Omega(w, h) w`.
    pub fn jacobi_operator(&self, w: &DVector<T>) -> Result<DMatrix<T>> {
        self.check(w)?;
        let mut a = DMatrix::zeros(self.d, self.d);
        match &self.kind {
            ModelKind::Custom(_) => {
                for j in 0..self.d {
                    let e = DVector::from_fn(self.d, |r, _| if r == j { T::one() } else { T::zero() });
                    let col = self.omega(w, &e, w)?;
                    a.set_column(j, &col);
                }
                a = (&a + a.transpose()) * T::lit(0.5);
            }
            _ => {
                let mut off = 0;
                for f in self.factors().unwrap_or_default() {
                    if f.k != T::zero() {
                        let k0 = -f.k;
                        let wb = w.rows(off, f.dim);
                        let mut blk = -(&wb * wb.transpose());
                        let nn = wb.norm_squared();
                        for i in 0..f.dim {
                            blk[(i, i)] += nn;
                        }
                        a.view_mut((off, off), (f.dim, f.dim)).copy_from(&(blk * k0));
                    }
                    off += f.dim;
                }
            }
        }
        Ok(a)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    Ok(())
}

fn check_k<T: Real>(k: T) -> Result<()> {
    if !k.is_finite() {
        return Err(Error::InvalidArgument("curvature must be finite".into()));
    }
    if k > T::zero() {
        return Err(Error::PositiveCurvature(k.to_f64_lossy()));
    }
    Ok(())
}
