//! Partitions of [0, 1], Gaussian increments and the piecewise-linear path
//! they define.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Name of the Gaussian generator, recorded in run metadata.
pub const RNG_KIND: &str = "chacha8-stream(sample)-wordpos(increment<<32)+ziggurat-standard-normal";

#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T> {
    points: Vec<T>,
}

impl<T: Real> Partition<T> {
    /// Equally spaced partition with `n` subintervals.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("partition needs n >= 1".into()));
        }
        let nf = T::from_usize_lossy(n);
        let mut points: Vec<T> = (0..=n).map(|i| T::from_usize_lossy(i) / nf).collect();
        points[n] = T::one();
        Ok(Self { points })
    }

    /// Arbitrary partition; the points must run strictly upward from 0 to 1.
    pub fn from_points(points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("partition needs at least two points".into()));
        }
        if points[0] != T::zero() || points[points.len() - 1] != T::one() {
            return Err(Error::InvalidArgument("partition must start at 0 and end at 1".into()));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("partition points must increase strictly".into()));
        }
        Ok(Self { points })
    }

    pub fn n(&self) -> usize {
        self.points.len() - 1
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Length of the `i`-th subinterval, `i` in `1..=n`.
    pub fn step(&self, i: usize) -> T {
        self.points[i] - self.points[i - 1]
    }

    /// Largest subinterval length.
    pub fn mesh(&self) -> T {
        (1..=self.n()).fold(T::zero(), |m, i| {
            let s = self.step(i);
            if s > m {
                s
            } else {
                m
            }
        })
    }

    /// True when every step equals `1/n` up to rounding.
    pub fn is_uniform(&self) -> bool {
        let h = T::one() / T::from_usize_lossy(self.n());
        (1..=self.n()).all(|i| (self.step(i) - h).abs() <= T::lit(8.0) * T::eps())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementVector<T: Real> {
    d: usize,
    deltas: Vec<DVector<T>>,
    partition: Partition<T>,
}

impl<T: Real> IncrementVector<T> {
    pub fn new(partition: Partition<T>, deltas: Vec<DVector<T>>) -> Result<Self> {
        if deltas.len() != partition.n() {
            return Err(Error::DimensionMismatch { expected: partition.n(), found: deltas.len() });
        }
        let d = deltas[0].len();
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for v in &deltas {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("increments must be finite".into()));
            }
        }
        Ok(Self { d, deltas, partition })
    }

    /// Convenience constructor on the uniform partition from plain rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let p = Partition::uniform(rows.len())?;
        Self::new(p, rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.deltas.len()
    }

    pub fn partition(&self) -> &Partition<T> {
        &self.partition
    }

    pub fn deltas(&self) -> &[DVector<T>] {
        &self.deltas
    }

    /// Increment `i` in `1..=n`.
    pub fn delta(&self, i: usize) -> &DVector<T> {
        &self.deltas[i - 1]
    }

    pub fn max_norm(&self) -> T {
        self.deltas.iter().fold(T::zero(), |m, v| {
            let x = v.norm();
            if x > m {
                x
            } else {
                m
            }
        })
    }

    /// Applies the same linear map to every increment.
    pub fn map_all(&self, m: &nalgebra::DMatrix<T>) -> Result<Self> {
        if m.ncols() != self.d || m.nrows() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: m.ncols() });
        }
        Self::new(self.partition.clone(), self.deltas.iter().map(|v| m * v).collect())
    }
}

/// Counter-based Gaussian source: increment `i` of sample `j` depends only on
/// `(seed, j, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IncrementSampler {
    seed: u64,
}

impl IncrementSampler {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Standard normal vector keyed by `(seed, sample, index)`.
    pub fn standard_normal(&self, sample: u64, index: u64, d: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample);
        rng.set_word_pos(u128::from(index) << 32);
        (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    /// Increments of sample `sample` on `partition`.
    pub fn sample<T: Real>(&self, partition: &Partition<T>, d: usize, sample: u64) -> Result<IncrementVector<T>> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let deltas = (1..=partition.n())
            .map(|i| {
                let sd = partition.step(i).sqrt();
                let z = self.standard_normal(sample, i as u64, d);
                DVector::from_iterator(d, z.into_iter().map(|x| T::lit(x) * sd))
            })
            .collect();
        IncrementVector::new(partition.clone(), deltas)
    }
}

pub fn uniform_partition<T: Real>(n: usize) -> Result<Partition<T>> {
    Partition::uniform(n)
}

/// Independent `N(0, step * I)` increments; a pure function of the arguments.
pub fn sample_increments<T: Real>(partition: &Partition<T>, d: usize, seed: u64) -> Result<IncrementVector<T>> {
    IncrementSampler::new(seed).sample(partition, d, 0)
}

/// Value of the piecewise-linear path at time `s`.
pub fn path_eval<T: Real>(inc: &IncrementVector<T>, s: T) -> Result<DVector<T>> {
    if !(s >= T::zero() && s <= T::one()) {
        return Err(Error::InvalidArgument("time must lie in [0, 1]".into()));
    }
    let pts = inc.partition.points();
    let mut acc = DVector::zeros(inc.d);
    for i in 1..=inc.n() {
        if s >= pts[i] {
            acc += inc.delta(i);
            if s == pts[i] {
                return Ok(acc);
            }
        } else {
            let frac = (s - pts[i - 1]) / inc.partition.step(i);
            acc += inc.delta(i) * frac;
            return Ok(acc);
        }
    }
    Ok(acc)
}

/// `1/2 * sum |db_i|^2 / ds_i`.
pub fn energy<T: Real>(inc: &IncrementVector<T>) -> T {
    (1..=inc.n()).fold(T::zero(), |e, i| e + inc.delta(i).norm_squared() / inc.partition.step(i)) * T::lit(0.5)
}

/// Closed condition `max_i |db_i| <= eps`.
pub fn in_h_epsilon<T: Real>(inc: &IncrementVector<T>, eps: T) -> Result<bool> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    Ok(inc.deltas.iter().all(|v| v.norm() <= eps))
}
