//! The cone P = ℝ₊^d, its lattice discretization, order and interior.
//!
//! Lattice points are d-tuples of integers n, embedded as x = δ·n. All index
//! arithmetic is exact; the spacing δ enters only through measure weights in
//! inner products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice cell, i.e. an integer d-tuple. Cells may have negative
/// coordinates; membership in P or in a module is a separate question.
pub type Cell = Vec<i64>;

/// The orthant cone P = ℝ₊^d together with its lattice spacing δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    d: usize,
    delta: f64,
}

impl ConeSpec {
    /// A d-dimensional orthant with lattice spacing `delta`.
    pub fn new(d: usize, delta: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("cone dimension must be >= 1".into()));
        }
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::InvalidConfig("lattice spacing must be > 0".into()));
        }
        Ok(ConeSpec { d, delta })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Measure weight δ^d of a single cell.
    pub fn cell_weight(&self) -> f64 {
        self.delta.powi(self.d as i32)
    }

    /// The physical point δ·n of a cell.
    pub fn embed(&self, n: &[i64]) -> Vec<f64> {
        n.iter().map(|&c| c as f64 * self.delta).collect()
    }

    fn check_dim(&self, x: &[i64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// The cone order: x ≤ y iff y − x has all coordinates ≥ 0.
    pub fn leq(&self, x: &[i64], y: &[i64]) -> Result<bool> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(x.iter().zip(y).all(|(a, b)| b - a >= 0))
    }

    /// Interior membership: all coordinates strictly positive.
    pub fn in_interior(&self, x: &[i64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(x.iter().all(|&c| c > 0))
    }

    /// Lattice membership in P itself: all coordinates ≥ 0.
    pub fn in_cone(&self, x: &[i64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(x.iter().all(|&c| c >= 0))
    }

    /// The least n ≥ 1 with n·a − x strictly positive in every coordinate.
    ///
    /// Requires `a` interior; the scan terminates because each coordinate of
    /// n·a grows without bound.
    pub fn archimedean_n(&self, a: &[i64], x: &[i64]) -> Result<u64> {
        self.check_dim(a)?;
        self.check_dim(x)?;
        if !self.in_interior(a)? {
            return Err(Error::NotInterior);
        }
        let mut n: u64 = 1;
        loop {
            if a.iter().zip(x).all(|(&ai, &xi)| (n as i64) * ai - xi > 0) {
                return Ok(n);
            }
            n += 1;
        }
    }

    /// The i-th unit step e_i.
    pub fn unit_step(&self, i: usize) -> Cell {
        let mut e = vec![0i64; self.d];
        e[i] = 1;
        e
    }
}

/// Componentwise sum of two cells.
pub fn cell_add(x: &[i64], y: &[i64]) -> Cell {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

/// Componentwise difference x − y.
pub fn cell_sub(x: &[i64], y: &[i64]) -> Cell {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Scalar multiple t·x.
pub fn cell_scale(t: i64, x: &[i64]) -> Cell {
    x.iter().map(|&a| t * a).collect()
}
