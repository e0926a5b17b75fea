//! Block-tridiagonal Gram matrices and their pieces.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jacobi::{JacobiSegment, SegmentKind, TransferData};
use crate::paths::IncrementVector;
use crate::quadrature::{GaussLegendre, DEFAULT_ORDER};
use crate::scalar::{op_norm, Real};

/// Symmetric block-tridiagonal matrix with `n` diagonal blocks of size `d`.
/// `upper[i]` is the block in block-row `i`, block-column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal<T: Real> {
    n: usize,
    d: usize,
    diag: Vec<DMatrix<T>>,
    upper: Vec<DMatrix<T>>,
}

impl<T: Real> BlockTridiagonal<T> {
    pub fn new(diag: Vec<DMatrix<T>>, upper: Vec<DMatrix<T>>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one block".into()));
        }
        if upper.len() + 1 != n {
            return Err(Error::DimensionMismatch { expected: n - 1, found: upper.len() });
        }
        let d = diag[0].nrows();
        for b in diag.iter().chain(upper.iter()) {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: b.nrows().max(b.ncols()) });
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("blocks must be finite".into()));
            }
        }
        Ok(Self { n, d, diag, upper })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            diag: vec![DMatrix::zeros(d, d); n],
            upper: vec![DMatrix::zeros(d, d); n.saturating_sub(1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn diag(&self) -> &[DMatrix<T>] {
        &self.diag
    }

    pub fn upper(&self) -> &[DMatrix<T>] {
        &self.upper
    }

    /// Block `(i, j)` with zero-based indices; `None` outside the band.
    pub fn block(&self, i: usize, j: usize) -> Option<DMatrix<T>> {
        if i == j {
            Some(self.diag[i].clone())
        } else if j == i + 1 {
            Some(self.upper[i].clone())
        } else if i == j + 1 {
            Some(self.upper[j].transpose())
        } else {
            None
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let (n, d) = (self.n, self.d);
        let mut m = DMatrix::zeros(n * d, n * d);
        for i in 0..n {
            m.view_mut((i * d, i * d), (d, d)).copy_from(&self.diag[i]);
            if i + 1 < n {
                m.view_mut((i * d, (i + 1) * d), (d, d)).copy_from(&self.upper[i]);
                m.view_mut(((i + 1) * d, i * d), (d, d)).copy_from(&self.upper[i].transpose());
            }
        }
        m
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: other.d });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&DMatrix<T>, &DMatrix<T>) -> DMatrix<T>) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            n: self.n,
            d: self.d,
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| f(a, b)).collect(),
            upper: self.upper.iter().zip(&other.upper).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            n: self.n,
            d: self.d,
            diag: self.diag.iter().map(|a| a * c).collect(),
            upper: self.upper.iter().map(|a| a * c).collect(),
        }
    }

    /// Largest asymmetry of the diagonal blocks (off-diagonal blocks are
    /// mirrored by construction).
    pub fn asymmetry(&self) -> T {
        self.diag
            .iter()
            .map(|b| crate::scalar::max_abs(&(b - b.transpose())))
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    pub fn trace(&self) -> T {
        self.diag.iter().fold(T::zero(), |acc, b| acc + b.trace())
    }

    pub fn max_abs(&self) -> T {
        self.diag
            .iter()
            .chain(&self.upper)
            .map(crate::scalar::max_abs)
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    /// Operator norms of the diagonal and upper blocks.
    pub fn block_norms(&self) -> (Vec<T>, Vec<T>) {
        (self.diag.iter().map(op_norm).collect(), self.upper.iter().map(op_norm).collect())
    }

    /// Log-determinant from the block Cholesky recursion
    /// `S_1 = D_1`, `S_{k+1} = D_{k+1} - M_k^T S_k^{-1} M_k`.
    pub fn logdet(&self) -> Result<T> {
        let mut total = T::zero();
        let mut schur = self.diag[0].clone();
        for k in 0..self.n {
            if k > 0 {
                schur = &self.diag[k] - schur;
            }
            let sym = (&schur + schur.transpose()) * T::lit(0.5);
            let chol = sym.cholesky().ok_or(Error::NotPositiveDefinite)?;
            let l = chol.l();
            for i in 0..self.d {
                total += l[(i, i)].ln();
            }
            if k + 1 < self.n {
                let x = chol.solve(&self.upper[k]);
                schur = self.upper[k].transpose() * x;
            }
        }
        Ok(total * T::lit(2.0))
    }

    /// Whether the full matrix admits a Cholesky factorization.
    pub fn is_positive_definite(&self) -> bool {
        self.logdet().is_ok()
    }

    /// Blocks as CSV rows `i,j,row,col,value` with one-based block indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,row,col,value\n");
        let mut emit = |i: usize, j: usize, b: &DMatrix<T>| {
            for r in 0..self.d {
                for c in 0..self.d {
                    let _ = writeln!(out, "{},{},{},{},{:.16e}", i + 1, j + 1, r, c, b[(r, c)].to_f64_lossy());
                }
            }
        };
        for i in 0..self.n {
            if i > 0 {
                emit(i, i - 1, &self.upper[i - 1].transpose());
            }
            emit(i, i, &self.diag[i]);
            if i + 1 < self.n {
                emit(i, i + 1, &self.upper[i]);
            }
        }
        out
    }
}

/// Segments on the uniform mesh of an increment vector, `A_i = A(db_i / delta)`.
pub fn segments_for_increments<T: Real>(
    model: &crate::manifold::CurvatureModel<T>,
    inc: &IncrementVector<T>,
) -> Result<Vec<JacobiSegment<T>>> {
    if model.d() != inc.d() {
        return Err(Error::DimensionMismatch { expected: model.d(), found: inc.d() });
    }
    (1..=inc.n())
        .map(|i| {
            let ds = inc.partition().step(i);
            let w = inc.delta(i) / ds;
            let a = model.jacobi_operator(&w)?;
            crate::jacobi::solve_segment_const(&a, ds)
        })
        .collect()
}

/// Transfers between consecutive segments.
pub fn transfers_for_segments<T: Real>(segments: &[JacobiSegment<T>]) -> Result<Vec<TransferData<T>>> {
    segments.windows(2).map(|w| crate::jacobi::transfer(&w[0], &w[1])).collect()
}

pub fn gram_blocks<T: Real>(segments: &[JacobiSegment<T>], transfers: &[TransferData<T>]) -> Result<BlockTridiagonal<T>> {
    gram_blocks_with_order(segments, transfers, DEFAULT_ORDER)
}

/// Gram matrix with `D_i = int S_i^T S_i + int V_{i+1}^T V_{i+1}` (the last
/// block without the bridge term) and `M_{i+1} = int V_{i+1}^T S_{i+1}`.
pub fn gram_blocks_with_order<T: Real>(
    segments: &[JacobiSegment<T>],
    transfers: &[TransferData<T>],
    order: usize,
) -> Result<BlockTridiagonal<T>> {
    let n = segments.len();
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one segment".into()));
    }
    if transfers.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, found: transfers.len() });
    }
    let d = segments[0].d();
    let delta = segments[0].delta;
    for s in segments {
        if s.d() != d {
            return Err(Error::DimensionMismatch { expected: d, found: s.d() });
        }
        if (s.delta - delta).abs() > T::lit(64.0) * T::eps() * delta {
            return Err(Error::InvalidArgument("segments must share one length".into()));
        }
    }
    let q = GaussLegendre::on_interval(order, T::zero(), delta)?;
    let mut diag = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n.saturating_sub(1));
    for (i, seg) in segments.iter().enumerate() {
        let mut block = integrate_sts(&q, seg);
        if i + 1 < n {
            let (vtv, vts) = integrate_bridge(&q, &transfers[i], &segments[i + 1]);
            block += vtv;
            upper.push(vts);
        }
        diag.push((&block + block.transpose()) * T::lit(0.5));
    }
    BlockTridiagonal::new(diag, upper)
}

fn integrate_sts<T: Real>(q: &GaussLegendre<T>, seg: &JacobiSegment<T>) -> DMatrix<T> {
    match &seg.kind {
        SegmentKind::Spectral { eigenvalues, eigenvectors } => {
            let w = eigenvalues.map(|l| q.integrate(|s| crate::jacobi::sinhc(l, s).powi(2)));
            eigenvectors * DMatrix::from_diagonal(&w) * eigenvectors.transpose()
        }
        SegmentKind::Numeric { .. } => q.integrate_matrix(seg.d(), seg.d(), |s| {
            let m = seg.s_at(s);
            m.transpose() * m
        }),
    }
}

/// `(int V^T V, int V^T S_{i+1})` over segment `i + 1`.
fn integrate_bridge<T: Real>(q: &GaussLegendre<T>, tr: &TransferData<T>, right: &JacobiSegment<T>) -> (DMatrix<T>, DMatrix<T>) {
    let d = right.d();
    match &right.kind {
        SegmentKind::Spectral { eigenvalues, eigenvectors } => {
            // In the eigenbasis of segment i+1: Q^T V(s) = diag(c(s)) X - diag(sigma(s)) Y.
            let qt = eigenvectors.transpose();
            let x = &qt * &tr.v0;
            let y = &qt * &tr.f;
            let cc = eigenvalues.map(|l| q.integrate(|s| crate::jacobi::coshc(l, s).powi(2)));
            let cs = eigenvalues.map(|l| q.integrate(|s| crate::jacobi::coshc(l, s) * crate::jacobi::sinhc(l, s)));
            let ss = eigenvalues.map(|l| q.integrate(|s| crate::jacobi::sinhc(l, s).powi(2)));
            let dcc = DMatrix::from_diagonal(&cc);
            let dcs = DMatrix::from_diagonal(&cs);
            let dss = DMatrix::from_diagonal(&ss);
            let xt = x.transpose();
            let yt = y.transpose();
            let cross = &xt * &dcs * &y;
            let vtv = &xt * &dcc * &x - &cross - cross.transpose() + &yt * &dss * &y;
            let vts = (&xt * &dcs - &yt * &dss) * qt;
            (vtv, vts)
        }
        SegmentKind::Numeric { .. } => {
            let vtv = q.integrate_matrix(d, d, |s| {
                let v = tr.v_at(s);
                v.transpose() * v
            });
            let vts = q.integrate_matrix(d, d, |s| tr.v_at(s).transpose() * right.s_at(s));
            (vtv, vts)
        }
    }
}

/// Flat Gram matrix: `(2 delta^3 / 3) I` on the diagonal, `(delta^3 / 3) I`
/// in the last block, `(delta^3 / 6) I` off the diagonal.
pub fn flat_gram<T: Real>(n: usize, delta: T, d: usize) -> Result<BlockTridiagonal<T>> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("n and d must be positive".into()));
    }
    let c = delta * delta * delta;
    let eye = DMatrix::<T>::identity(d, d);
    let mut diag = vec![&eye * (T::lit(2.0) * c / T::lit(3.0)); n];
    diag[n - 1] = &eye * (c / T::lit(3.0));
    let upper = vec![&eye * (c / T::lit(6.0)); n - 1];
    BlockTridiagonal::new(diag, upper)
}

/// `R = G - L`.
pub fn remainder<T: Real>(g: &BlockTridiagonal<T>, l: &BlockTridiagonal<T>) -> Result<BlockTridiagonal<T>> {
    g.sub(l)
}

/// Leading Taylor part of the remainder built from the operators `A_i(0)`,
/// with `A_{n+1} = 0`: diagonal `(delta^5/360) 16 (4 A_i - A_{i+1})`,
/// off-diagonal `(delta^5/360) (13 A_i - 7 A_{i+1})`.
pub fn u_matrix<T: Real>(ops: &[DMatrix<T>], delta: T) -> Result<BlockTridiagonal<T>> {
    let n = ops.len();
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one operator".into()));
    }
    let d = ops[0].nrows();
    let c = delta.powi(5) / T::lit(360.0);
    let zero = DMatrix::<T>::zeros(d, d);
    let next = |i: usize| if i + 1 < n { &ops[i + 1] } else { &zero };
    let diag = (0..n)
        .map(|i| (&ops[i] * T::lit(4.0) - next(i)) * (T::lit(16.0) * c))
        .collect();
    let upper = (0..n.saturating_sub(1))
        .map(|i| (&ops[i] * T::lit(13.0) - next(i) * T::lit(7.0)) * c)
        .collect();
    BlockTridiagonal::new(diag, upper)
}

/// `E = R - U` together with `max |E_block| / (delta^3 (|db_i|^3 + |db_{i+1}|^3))`.
pub fn epsilon_matrix<T: Real>(
    r: &BlockTridiagonal<T>,
    u: &BlockTridiagonal<T>,
    inc: &IncrementVector<T>,
) -> Result<(BlockTridiagonal<T>, T)> {
    let e = r.sub(u)?;
    if inc.n() != e.n() {
        return Err(Error::DimensionMismatch { expected: e.n(), found: inc.n() });
    }
    let delta = inc.partition().mesh();
    let n = e.n();
    let cube = |i: usize| if i < n { inc.deltas()[i].norm().powi(3) } else { T::zero() };
    let (dn, un) = e.block_norms();
    let mut ratio = T::zero();
    for i in 0..n {
        let den = delta.powi(3) * (cube(i) + cube(i + 1));
        let mut num = dn[i];
        if i + 1 < n && un[i] > num {
            num = un[i];
        }
        if den > T::zero() {
            let q = num / den;
            if q > ratio {
                ratio = q;
            }
        }
    }
    Ok((e, ratio))
}

/// Block bounds on the remainder from `K_i = sup |A_i|` (with `K_{n+1} = 0`):
/// diagonal `2 delta^3 (cosh(2 sqrt(K_i) delta) cosh(8 sqrt(K_{i+1}) delta) - 1)`,
/// off-diagonal `(delta^3/2) (cosh(sqrt(K_i) delta) cosh(5 sqrt(K_{i+1}) delta) - 1)`.
pub fn remainder_bounds<T: Real>(k: &[T], delta: T) -> (Vec<T>, Vec<T>) {
    let n = k.len();
    let kk = |i: usize| if i < n { k[i] } else { T::zero() };
    let c = delta.powi(3);
    let diag = (0..n)
        .map(|i| {
            T::lit(2.0) * c
                * ((T::lit(2.0) * kk(i).sqrt() * delta).cosh() * (T::lit(8.0) * kk(i + 1).sqrt() * delta).cosh() - T::one())
        })
        .collect();
    let upper = (0..n.saturating_sub(1))
        .map(|i| {
            c * T::lit(0.5)
                * ((kk(i).sqrt() * delta).cosh() * (T::lit(5.0) * kk(i + 1).sqrt() * delta).cosh() - T::one())
        })
        .collect();
    (diag, upper)
}

/// Gram matrix of a path in one call.
pub fn gram_for_increments<T: Real>(
    model: &crate::manifold::CurvatureModel<T>,
    inc: &IncrementVector<T>,
) -> Result<(Vec<JacobiSegment<T>>, BlockTridiagonal<T>)> {
    if !inc.partition().is_uniform() {
        return Err(Error::Unsupported("Gram assembly requires a uniform partition".into()));
    }
    let segs = segments_for_increments(model, inc)?;
    let trs = transfers_for_segments(&segs)?;
    let g = gram_blocks(&segs, &trs)?;
    Ok((segs, g))
}
