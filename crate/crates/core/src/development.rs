//! Cartan development of piecewise-linear paths onto piecewise geodesics in
//! the hyperboloid model, factor by factor.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::manifold::{CurvatureModel, Factor};
use crate::paths::IncrementVector;
use crate::scalar::Real;

const FRAME_TOL: f64 = 1e-8;

/// Knots in ambient coordinates and parallel frames (ambient x d) at each knot.
/// A hyperbolic factor of dimension `m` occupies `m + 1` ambient coordinates
/// with Minkowski signature `(-, +, ..., +)`; a flat factor occupies `m`.
#[derive(Debug, Clone)]
pub struct ManifoldPath<T: Real> {
    pub model: CurvatureModel<T>,
    pub knots: Vec<DVector<T>>,
    pub frames: Vec<DMatrix<T>>,
    pub increments: IncrementVector<T>,
    factors: Vec<Factor<T>>,
}

#[derive(Debug, Clone, Copy)]
struct Layout<T> {
    k: T,
    dim: usize,
    amb_off: usize,
    tan_off: usize,
}

impl<T: Real> Layout<T> {
    fn hyperbolic(&self) -> bool {
        self.k != T::zero()
    }

    fn amb_dim(&self) -> usize {
        if self.hyperbolic() {
            self.dim + 1
        } else {
            self.dim
        }
    }
}

fn layouts<T: Real>(factors: &[Factor<T>]) -> Vec<Layout<T>> {
    let mut out = Vec::with_capacity(factors.len());
    let (mut a, mut t) = (0, 0);
    for f in factors {
        let l = Layout { k: f.k, dim: f.dim, amb_off: a, tan_off: t };
        a += l.amb_dim();
        t += f.dim;
        out.push(l);
    }
    out
}

fn minkowski<T: Real>(x: &DVector<T>, y: &DVector<T>) -> T {
    let mut s = -x[0] * y[0];
    for i in 1..x.len() {
        s += x[i] * y[i];
    }
    s
}

fn supported_factors<T: Real>(model: &CurvatureModel<T>) -> Result<Vec<Factor<T>>> {
    model
        .factors()
        .ok_or_else(|| Error::Unsupported("development needs a constant-curvature or product model".into()))
}

/// Ambient dimension of the model's embedding.
pub fn ambient_dim<T: Real>(model: &CurvatureModel<T>) -> Result<usize> {
    Ok(layouts(&supported_factors(model)?).iter().map(|l| l.amb_dim()).sum())
}

/// Base point `o`: `(1/sqrt|K|, 0, ...)` on every hyperbolic factor, the origin on flat ones.
pub fn base_point<T: Real>(model: &CurvatureModel<T>) -> Result<DVector<T>> {
    let ls = layouts(&supported_factors(model)?);
    let mut x = DVector::zeros(ls.iter().map(|l| l.amb_dim()).sum());
    for l in &ls {
        if l.hyperbolic() {
            x[l.amb_off] = T::one() / l.k.abs().sqrt();
        }
    }
    Ok(x)
}

fn base_frame<T: Real>(ls: &[Layout<T>], amb: usize, d: usize) -> DMatrix<T> {
    let mut u = DMatrix::zeros(amb, d);
    for l in ls {
        let shift = usize::from(l.hyperbolic());
        for j in 0..l.dim {
            u[(l.amb_off + shift + j, l.tan_off + j)] = T::one();
        }
    }
    u
}

/// Geodesic step on one hyperbolic factor: returns the end point and the
/// transported frame block.
fn hyperbolic_step<T: Real>(k: T, x: &DVector<T>, frame: &DMatrix<T>, v: &DVector<T>) -> (DVector<T>, DMatrix<T>) {
    let kappa = -k;
    let radius = T::one() / kappa.sqrt();
    let u = frame * v;
    let len = v.norm();
    if len == T::zero() {
        return (x.clone(), frame.clone());
    }
    let e = &u / len;
    let phase = len / radius;
    let (ch, sh) = (phase.cosh(), phase.sinh());
    let y = x * ch + &e * (radius * sh);
    // Tangent at the end point of the unit-speed geodesic.
    let t_end = x * (sh / radius) + &e * ch;
    let mut out = frame.clone();
    for j in 0..frame.ncols() {
        let col = frame.column(j).into_owned();
        let a = minkowski(&col, &e);
        let moved = &col + (&t_end - &e) * a;
        out.set_column(j, &moved);
    }
    (y, out)
}

/// Pulls `x` back onto the hyperboloid and re-orthonormalizes the frame in
/// the induced metric.
fn renormalize<T: Real>(k: T, x: &mut DVector<T>, frame: &mut DMatrix<T>) {
    let kappa = -k;
    let q = -minkowski(x, x) * kappa;
    if q > T::zero() {
        *x /= q.sqrt();
    }
    for j in 0..frame.ncols() {
        let mut c = frame.column(j).into_owned();
        let proj = minkowski(&c, x) * kappa;
        c += &*x * proj;
        for i in 0..j {
            let prev = frame.column(i).into_owned();
            let p = minkowski(&c, &prev);
            c -= prev * p;
        }
        let nrm = minkowski(&c, &c).max(T::zero()).sqrt();
        if nrm > T::zero() {
            c /= nrm;
        }
        frame.set_column(j, &c);
    }
}

/// Develops the increments into a piecewise-geodesic path.
pub fn develop<T: Real>(inc: &IncrementVector<T>, model: &CurvatureModel<T>) -> Result<ManifoldPath<T>> {
    develop_with(inc, model, true)
}

/// As [`develop`], optionally skipping per-step renormalization.
pub fn develop_with<T: Real>(inc: &IncrementVector<T>, model: &CurvatureModel<T>, renorm: bool) -> Result<ManifoldPath<T>> {
    if inc.d() != model.d() {
        return Err(Error::DimensionMismatch { expected: model.d(), found: inc.d() });
    }
    let factors = supported_factors(model)?;
    let ls = layouts(&factors);
    let amb: usize = ls.iter().map(|l| l.amb_dim()).sum();
    let mut x = base_point(model)?;
    let mut u = base_frame(&ls, amb, model.d());
    let mut knots = vec![x.clone()];
    let mut frames = vec![u.clone()];
    for db in inc.deltas() {
        let mut nx = x.clone();
        let mut nu = u.clone();
        for l in &ls {
            let amb_d = l.amb_dim();
            let xs = x.rows(l.amb_off, amb_d).into_owned();
            let fs = u.view((l.amb_off, l.tan_off), (amb_d, l.dim)).into_owned();
            let vs = db.rows(l.tan_off, l.dim).into_owned();
            if l.hyperbolic() {
                let (mut y, mut f) = hyperbolic_step(l.k, &xs, &fs, &vs);
                if renorm {
                    renormalize(l.k, &mut y, &mut f);
                }
                nx.rows_mut(l.amb_off, amb_d).copy_from(&y);
                nu.view_mut((l.amb_off, l.tan_off), (amb_d, l.dim)).copy_from(&f);
            } else {
                let y = xs + fs * vs;
                nx.rows_mut(l.amb_off, amb_d).copy_from(&y);
            }
        }
        x = nx;
        u = nu;
        knots.push(x.clone());
        frames.push(u.clone());
    }
    Ok(ManifoldPath { model: model.clone(), knots, frames, increments: inc.clone(), factors })
}

impl<T: Real> ManifoldPath<T> {
    pub fn n(&self) -> usize {
        self.knots.len() - 1
    }

    /// Largest violation of the hyperboloid constraints over all knots.
    pub fn constraint_error(&self) -> T {
        let ls = layouts(&self.factors);
        let mut worst = T::zero();
        for x in &self.knots {
            for l in ls.iter().filter(|l| l.hyperbolic()) {
                let xs = x.rows(l.amb_off, l.amb_dim()).into_owned();
                let err = (minkowski(&xs, &xs) - T::one() / l.k).abs();
                if err > worst {
                    worst = err;
                }
            }
        }
        worst
    }

    /// Largest deviation of any frame from orthonormality in the induced metric.
    pub fn frame_error(&self) -> T {
        (0..self.knots.len()).fold(T::zero(), |m, i| {
            let e = self.frame_error_at(i);
            if e > m {
                e
            } else {
                m
            }
        })
    }

    fn frame_error_at(&self, i: usize) -> T {
        let ls = layouts(&self.factors);
        let u = &self.frames[i];
        let x = &self.knots[i];
        let mut worst = T::zero();
        for l in &ls {
            let amb_d = l.amb_dim();
            let f = u.view((l.amb_off, l.tan_off), (amb_d, l.dim)).into_owned();
            let xs = x.rows(l.amb_off, amb_d).into_owned();
            for a in 0..l.dim {
                let ca = f.column(a).into_owned();
                for b in 0..l.dim {
                    let cb = f.column(b).into_owned();
                    let g = if l.hyperbolic() { minkowski(&ca, &cb) } else { ca.dot(&cb) };
                    let target = if a == b { T::one() } else { T::zero() };
                    let err = (g - target).abs();
                    if err > worst {
                        worst = err;
                    }
                }
                if l.hyperbolic() {
                    let tang = minkowski(&ca, &xs).abs();
                    if tang > worst {
                        worst = tang;
                    }
                }
            }
        }
        worst
    }

    /// Geodesic distance between consecutive knots.
    pub fn segment_length(&self, i: usize) -> T {
        let ls = layouts(&self.factors);
        let (x, y) = (&self.knots[i - 1], &self.knots[i]);
        let mut sq = T::zero();
        for l in &ls {
            let xs = x.rows(l.amb_off, l.amb_dim()).into_owned();
            let ys = y.rows(l.amb_off, l.amb_dim()).into_owned();
            let d = if l.hyperbolic() {
                log_map(l.k, &xs, &ys).1
            } else {
                (ys - xs).norm()
            };
            sq += d * d;
        }
        sq.sqrt()
    }

    /// Distance from the base point to the end point.
    pub fn endpoint_radius(&self) -> Result<T> {
        let o = base_point(&self.model)?;
        let ls = layouts(&self.factors);
        let y = &self.knots[self.n()];
        let mut sq = T::zero();
        for l in &ls {
            let os = o.rows(l.amb_off, l.amb_dim()).into_owned();
            let ys = y.rows(l.amb_off, l.amb_dim()).into_owned();
            let d = if l.hyperbolic() {
                log_map(l.k, &os, &ys).1
            } else {
                (ys - os).norm()
            };
            sq += d * d;
        }
        Ok(sq.sqrt())
    }

    /// Knots and frames as CSV: `i, s_i, x_0..x_{D-1}, u_00, u_10, ...` with the
    /// frame written column-major.
    pub fn to_csv(&self) -> String {
        let amb = self.knots[0].len();
        let d = self.model.d();
        let mut out = String::from("i,s_i");
        for j in 0..amb {
            let _ = write!(out, ",x_{j}");
        }
        for c in 0..d {
            for r in 0..amb {
                let _ = write!(out, ",u_{r}_{c}");
            }
        }
        out.push('\n');
        let pts = self.increments.partition().points();
        for (i, (x, u)) in self.knots.iter().zip(&self.frames).enumerate() {
            let _ = write!(out, "{},{:.16e}", i, pts[i].to_f64_lossy());
            for v in x.iter() {
                let _ = write!(out, ",{:.16e}", v.to_f64_lossy());
            }
            for v in u.iter() {
                let _ = write!(out, ",{:.16e}", v.to_f64_lossy());
            }
            out.push('\n');
        }
        out
    }
}

/// Tangent vector at `x` pointing to `y` (ambient coordinates) and its length.
fn log_map<T: Real>(k: T, x: &DVector<T>, y: &DVector<T>) -> (DVector<T>, T) {
    let kappa = -k;
    let radius = T::one() / kappa.sqrt();
    // Tangential part of y at x has Minkowski norm R sinh(L/R).
    let w = y + x * (kappa * minkowski(x, y));
    let wn = minkowski(&w, &w).max(T::zero()).sqrt();
    if wn == T::zero() {
        return (DVector::zeros(x.len()), T::zero());
    }
    let len = radius * (wn / radius).asinh();
    (w * (len / wn), len)
}

/// Recovers the flat increments from a developed path.
pub fn antidevelop<T: Real>(path: &ManifoldPath<T>) -> Result<IncrementVector<T>> {
    let err = path.frame_error();
    if err > T::lit(FRAME_TOL) {
        return Err(Error::FrameNotOrthonormal(err.to_f64_lossy()));
    }
    let ls = layouts(&path.factors);
    let d = path.model.d();
    let mut deltas = Vec::with_capacity(path.n());
    for i in 0..path.n() {
        let (x, y, u) = (&path.knots[i], &path.knots[i + 1], &path.frames[i]);
        let mut db = DVector::zeros(d);
        for l in &ls {
            let amb_d = l.amb_dim();
            let xs = x.rows(l.amb_off, amb_d).into_owned();
            let ys = y.rows(l.amb_off, amb_d).into_owned();
            let f = u.view((l.amb_off, l.tan_off), (amb_d, l.dim)).into_owned();
            for j in 0..l.dim {
                let col = f.column(j).into_owned();
                db[l.tan_off + j] = if l.hyperbolic() {
                    minkowski(&col, &log_map(l.k, &xs, &ys).0)
                } else {
                    col.dot(&(&ys - &xs))
                };
            }
        }
        deltas.push(db);
    }
    IncrementVector::new(path.increments.partition().clone(), deltas)
}

/// Scalar curvature at knots `0..n-1`.
pub fn scal_along<T: Real>(path: &ManifoldPath<T>) -> Vec<T> {
    vec![path.model.scal(); path.n()]
}
