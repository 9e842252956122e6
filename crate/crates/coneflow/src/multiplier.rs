//! Bilinear multipliers ω_M(x,y) = e^{i⟨Mx|y⟩}, their cohomology classes,
//! coboundary witnesses, twisted shifts and phase translations.
//!
//! Every multiplier class has a unique strictly upper triangular
//! representative; the class map sends M to the strict upper part of M − Mᵀ,
//! and the symmetric remainder is witnessed by the quadratic phase
//! ψ(x) = e^{(i/2)⟨Qx|x⟩} with ω_ψ(x,y) = e^{−i⟨Qx|y⟩}.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cone::{cell_add, cell_sub, Cell};
use crate::error::{Error, Result};
use crate::isorep::{GridRep, ModuleDescriptor, SparseState, ENTRY_DROP_TOL};

/// A multiplier with bilinear exponent, stored as the real d×d matrix M.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearMultiplier {
    m: DMatrix<f64>,
}

/// The quadratic-form matrix Q of a coboundary witness ψ(x) = e^{(i/2)⟨Qx|x⟩}.
#[derive(Debug, Clone, PartialEq)]
pub struct CoboundaryWitness {
    q: DMatrix<f64>,
}

impl BilinearMultiplier {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        Ok(BilinearMultiplier { m })
    }

    /// The zero multiplier ω ≡ 1 in dimension d.
    pub fn trivial(d: usize) -> Self {
        BilinearMultiplier {
            m: DMatrix::zeros(d, d),
        }
    }

    /// The elementary matrix E with a single 1 at (row, col), 0-indexed.
    pub fn elementary(d: usize, row: usize, col: usize) -> Self {
        let mut m = DMatrix::zeros(d, d);
        m[(row, col)] = 1.0;
        BilinearMultiplier { m }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn d(&self) -> usize {
        self.m.nrows()
    }
}

impl CoboundaryWitness {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::DimensionMismatch {
                expected: q.nrows(),
                got: q.ncols(),
            });
        }
        Ok(CoboundaryWitness { q })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// ψ(x) = e^{(i/2)⟨Qx|x⟩}.
    pub fn psi(&self, x: &[f64]) -> Result<Complex64> {
        let qx = apply_real(&self.q, x)?;
        let phase: f64 = 0.5 * dot(&qx, x);
        Ok(Complex64::new(0.0, phase).exp())
    }
}

fn apply_real(m: &DMatrix<f64>, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.ncols(),
            got: x.len(),
        });
    }
    Ok((0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ω_M(x,y) = e^{i⟨Mx|y⟩}.
pub fn omega_eval(m: &BilinearMultiplier, x: &[f64], y: &[f64]) -> Result<Complex64> {
    let mx = apply_real(&m.m, x)?;
    if y.len() != m.d() {
        return Err(Error::DimensionMismatch {
            expected: m.d(),
            got: y.len(),
        });
    }
    Ok(Complex64::new(0.0, dot(&mx, y)).exp())
}

/// |ω(x,y)ω(x+y,z) − ω(x,y+z)ω(y,z)|, the multiplier-identity residual.
pub fn cocycle_residual(m: &BilinearMultiplier, x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let yz: Vec<f64> = y.iter().zip(z).map(|(a, b)| a + b).collect();
    let lhs = omega_eval(m, x, y)? * omega_eval(m, &xy, z)?;
    let rhs = omega_eval(m, x, &yz)? * omega_eval(m, y, z)?;
    Ok((lhs - rhs).norm())
}

/// The cohomology-class representative of ω_M: the strictly upper triangular
/// T with T_ij = (M − Mᵀ)_ij for i < j, together with the symmetric witness
/// Q = T − M, so that ω_M(x,y) = ω_T(x,y)·e^{−i⟨Qx|y⟩} identically.
pub fn class_rep(m: &BilinearMultiplier) -> (DMatrix<f64>, CoboundaryWitness) {
    let d = m.d();
    let mut t = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            t[(i, j)] = m.m[(i, j)] - m.m[(j, i)];
        }
    }
    let q = &t - &m.m;
    (t, CoboundaryWitness { q })
}

/// |ω_M(x,y) − ω_T(x,y)·e^{−i⟨Qx|y⟩}|, the residual of the equivalence
/// ω_M ~ ω_T via the witness ψ(x) = e^{(i/2)⟨Qx|x⟩}.
pub fn coboundary_residual(
    m: &BilinearMultiplier,
    t: &DMatrix<f64>,
    q: &CoboundaryWitness,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let omega_m = omega_eval(m, x, y)?;
    let omega_t = omega_eval(&BilinearMultiplier::new(t.clone())?, x, y)?;
    let qx = apply_real(&q.q, x)?;
    let cob = Complex64::new(0.0, -dot(&qx, y)).exp();
    Ok((omega_m - omega_t * cob).norm())
}

/// The twisted shift (V_x f)(y) = ω_M(xδ, (y−x)δ)·f(y−x) on the full orthant
/// module; satisfies V_x V_y = ω_M(xδ, yδ) V_{x+y}.
pub fn twisted_shift_apply(
    m: &BilinearMultiplier,
    x: &[i64],
    f: &SparseState,
) -> Result<SparseState> {
    if !matches!(f.rep().module(), ModuleDescriptor::Orthant(_)) {
        return Err(Error::UnsupportedModule);
    }
    twisted_translate(m, x, f.rep(), f)
}

fn twisted_translate(
    m: &BilinearMultiplier,
    x: &[i64],
    rep: &GridRep,
    f: &SparseState,
) -> Result<SparseState> {
    let delta = rep.cone().delta();
    let xd: Vec<f64> = x.iter().map(|&c| c as f64 * delta).collect();
    let mut out = Vec::new();
    for ((cell, fiber), z) in f.entries() {
        let cd: Vec<f64> = cell.iter().map(|&c| c as f64 * delta).collect();
        let phase = omega_eval(m, &xd, &cd)?;
        out.push(((cell_add(cell, x), *fiber), z * phase));
    }
    SparseState::from_entries(rep, out)
}

/// A finitely supported scalar state on the full lattice ℤ^d, the carrier of
/// the phase-translation unitaries U^M_x.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    d: usize,
    delta: f64,
    entries: BTreeMap<Cell, Complex64>,
}

impl LatticeState {
    pub fn zero(d: usize, delta: f64) -> Self {
        LatticeState {
            d,
            delta,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries<I>(d: usize, delta: f64, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Cell, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (cell, z) in entries {
            if cell.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: cell.len(),
                });
            }
            if z.norm() >= ENTRY_DROP_TOL {
                *map.entry(cell).or_insert(Complex64::ZERO) += z;
            }
        }
        map.retain(|_, z| z.norm() >= ENTRY_DROP_TOL);
        Ok(LatticeState {
            d,
            delta,
            entries: map,
        })
    }

    pub fn basis(d: usize, delta: f64, cell: &[i64]) -> Result<Self> {
        LatticeState::from_entries(d, delta, [(cell.to_vec(), Complex64::new(1.0, 0.0))])
    }

    pub fn entries(&self) -> &BTreeMap<Cell, Complex64> {
        &self.entries
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn inner(&self, other: &LatticeState) -> Result<Complex64> {
        if self.d != other.d || self.delta != other.delta {
            return Err(Error::SpaceMismatch);
        }
        let w = self.delta.powi(self.d as i32);
        let mut acc = Complex64::ZERO;
        for (cell, a) in &self.entries {
            if let Some(b) = other.entries.get(cell) {
                acc += a.conj() * b;
            }
        }
        Ok(acc * w)
    }

    pub fn norm_sq(&self) -> f64 {
        let w = self.delta.powi(self.d as i32);
        self.entries.values().map(|z| z.norm_sqr()).sum::<f64>() * w
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn sub(&self, other: &LatticeState) -> Result<LatticeState> {
        if self.d != other.d || self.delta != other.delta {
            return Err(Error::SpaceMismatch);
        }
        let mut entries = self.entries.clone();
        for (cell, z) in &other.entries {
            *entries.entry(cell.clone()).or_insert(Complex64::ZERO) -= z;
        }
        entries.retain(|_, z| z.norm() >= ENTRY_DROP_TOL);
        Ok(LatticeState {
            d: self.d,
            delta: self.delta,
            entries,
        })
    }

    pub fn scale(&self, z: Complex64) -> LatticeState {
        let mut out = self.clone();
        out.entries.retain(|_, _| z != Complex64::ZERO);
        for v in out.entries.values_mut() {
            *v *= z;
        }
        out
    }
}

/// The full-lattice unitary (U^M_x f)(y) = ω_M(xδ, (y−x)δ)·f(y−x), with
/// U^M_x U^M_y = ω_M(xδ, yδ) U^M_{x+y} exactly at the exponent level.
pub fn phase_translate_apply(
    m: &BilinearMultiplier,
    x: &[i64],
    f: &LatticeState,
) -> Result<LatticeState> {
    if x.len() != f.d {
        return Err(Error::DimensionMismatch {
            expected: f.d,
            got: x.len(),
        });
    }
    let xd: Vec<f64> = x.iter().map(|&c| c as f64 * f.delta).collect();
    let mut out = BTreeMap::new();
    for (cell, z) in &f.entries {
        let cd: Vec<f64> = cell.iter().map(|&c| c as f64 * f.delta).collect();
        let phase = omega_eval(m, &xd, &cd)?;
        out.insert(cell_add(cell, x), z * phase);
    }
    Ok(LatticeState {
        d: f.d,
        delta: f.delta,
        entries: out,
    })
}

/// The adjoint (U^M_x)* f, inverse of `phase_translate_apply`.
pub fn phase_translate_adjoint(
    m: &BilinearMultiplier,
    x: &[i64],
    f: &LatticeState,
) -> Result<LatticeState> {
    if x.len() != f.d {
        return Err(Error::DimensionMismatch {
            expected: f.d,
            got: x.len(),
        });
    }
    let xd: Vec<f64> = x.iter().map(|&c| c as f64 * f.delta).collect();
    let mut out = BTreeMap::new();
    for (cell, z) in &f.entries {
        let target = cell_sub(cell, x);
        let td: Vec<f64> = target.iter().map(|&c| c as f64 * f.delta).collect();
        let phase = omega_eval(m, &xd, &td)?.conj();
        out.insert(target, z * phase);
    }
    Ok(LatticeState {
        d: f.d,
        delta: f.delta,
        entries: out,
    })
}
