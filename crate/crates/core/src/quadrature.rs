//! Gauss-Legendre rules.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_ORDER: usize = 20;

/// Nodes and weights of an `order`-point Gauss-Legendre rule on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

/// Nodes and weights on [-1, 1], computed in `f64` by Newton iteration on the
/// Legendre recurrence.
fn reference_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    let nf = order as f64;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if order == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = order as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl<T: Real> GaussLegendre<T> {
    /// Rule on [a, b].
    pub fn on_interval(order: usize, a: T, b: T) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("quadrature order must be positive".into()));
        }
        let (x, w) = reference_rule(order);
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        Ok(Self {
            nodes: x.iter().map(|&xi| mid + half * T::lit(xi)).collect(),
            weights: w.iter().map(|&wi| half * T::lit(wi)).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    pub fn integrate_matrix<F>(&self, rows: usize, cols: usize, mut f: F) -> nalgebra::DMatrix<T>
    where
        F: FnMut(T) -> nalgebra::DMatrix<T>,
    {
        let mut acc = nalgebra::DMatrix::zeros(rows, cols);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += f(x) * w;
        }
        acc
    }
}
