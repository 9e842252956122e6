//! Finite compressed models of shift representations and the numerical
//! computation of intertwiner spaces L(V⁽²⁾, V⁽¹⁾) and commutants 𝔐_V.
//!
//! A compressed step V_i moves a window site one cell along axis i and drops
//! it when the target leaves the window. The intertwiner constraints
//!
//!   T V_i⁽²⁾ = V_i⁽¹⁾ T   and   T (V_i⁽²⁾)* = (V_i⁽¹⁾)* T
//!
//! then couple at most two entries of T per scalar equation, so the stacked
//! system is eliminated exactly: entries fall into transport orbits that are
//! either forced to zero or free, and the free orbits give an orthonormal
//! basis with disjoint supports. The dimensions this produces are checked
//! against a dense SVD of the stacked system on small windows in the tests,
//! and window-growth stability guards the compression itself.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::cocycle::{solve_cocycles, SolveRegion};
use crate::cone::{cell_add, Cell};
use crate::error::{Error, Result};
use crate::isorep::{module_cells_in_box, CellBox, GridRep};

/// A finite compression of a shift representation onto a window of sites.
#[derive(Debug, Clone)]
pub struct CompressedRep {
    cone_d: usize,
    sites: Vec<(Cell, usize)>,
    /// steps[axis][site] = image site of the compressed step, if any.
    steps: Vec<Vec<Option<usize>>>,
    label: String,
}

impl CompressedRep {
    /// Compresses `rep` to the window module ∩ box.
    pub fn compress(rep: &GridRep, bx: &CellBox) -> Result<Self> {
        let cells = module_cells_in_box(rep.module(), bx)?;
        if cells.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let k = rep.multiplicity();
        let sites: Vec<(Cell, usize)> = cells
            .iter()
            .flat_map(|c| (0..k).map(move |f| (c.clone(), f)))
            .collect();
        let index: std::collections::BTreeMap<(Cell, usize), usize> = sites
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let d = rep.d();
        let mut steps = Vec::with_capacity(d);
        for axis in 0..d {
            let e = rep.cone().unit_step(axis);
            let map = sites
                .iter()
                .map(|(c, f)| index.get(&(cell_add(c, &e), *f)).copied())
                .collect();
            steps.push(map);
        }
        Ok(CompressedRep {
            cone_d: d,
            sites,
            steps,
            label: format!("{}[k={k}]", rep.module()),
        })
    }

    /// Block-diagonal direct sum of two compressed representations.
    pub fn direct_sum(a: &CompressedRep, b: &CompressedRep) -> Result<CompressedRep> {
        if a.cone_d != b.cone_d {
            return Err(Error::ConeMismatch);
        }
        let offset = a.sites.len();
        let mut sites = a.sites.clone();
        sites.extend(b.sites.iter().cloned());
        let steps = (0..a.cone_d)
            .map(|axis| {
                let mut col = a.steps[axis].clone();
                col.extend(b.steps[axis].iter().map(|t| t.map(|i| i + offset)));
                col
            })
            .collect();
        Ok(CompressedRep {
            cone_d: a.cone_d,
            sites,
            steps,
            label: format!("{} (+) {}", a.label, b.label),
        })
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn cone_d(&self) -> usize {
        self.cone_d
    }

    pub fn sites(&self) -> &[(Cell, usize)] {
        &self.sites
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The compressed step along one axis as an explicit matrix.
    pub fn step_matrix(&self, axis: usize) -> DMatrix<Complex64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (src, target) in self.steps[axis].iter().enumerate() {
            if let Some(t) = *target {
                m[(t, src)] = Complex64::new(1.0, 0.0);
            }
        }
        m
    }

    /// Inverse step maps: src[axis][site] = preimage under the step, if any.
    fn sources(&self) -> Vec<Vec<Option<usize>>> {
        let n = self.n();
        (0..self.cone_d)
            .map(|axis| {
                let mut src = vec![None; n];
                for (p, target) in self.steps[axis].iter().enumerate() {
                    if let Some(t) = *target {
                        src[t] = Some(p);
                    }
                }
                src
            })
            .collect()
    }
}

/// A numerically orthonormal basis of an intertwiner space.
#[derive(Debug, Clone)]
pub struct IntertwinerSpace {
    pub basis: Vec<DMatrix<Complex64>>,
    pub dimension: usize,
    /// Largest constraint violation over the basis.
    pub residual: f64,
}

struct UnionFind {
    parent: Vec<usize>,
    zero: Vec<bool>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            zero: vec![false; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let z = self.zero[ra] || self.zero[rb];
            self.parent[ra] = rb;
            self.zero[rb] = z;
        }
    }

    fn mark_zero(&mut self, i: usize) {
        let r = self.find(i);
        self.zero[r] = true;
    }
}

/// Solves { T : T V_i⁽²⁾ = V_i⁽¹⁾ T, T (V_i⁽²⁾)* = (V_i⁽¹⁾)* T } for
/// T : H₂ → H₁ between two compressed models.
#[allow(clippy::needless_range_loop)] // (p, q) indexing mirrors the entry algebra
pub fn solve_intertwiners(c1: &CompressedRep, c2: &CompressedRep) -> Result<IntertwinerSpace> {
    if c1.cone_d != c2.cone_d {
        return Err(Error::ConeMismatch);
    }
    let n1 = c1.n();
    let n2 = c2.n();
    let src1 = c1.sources();
    let src2 = c2.sources();
    let idx = |p: usize, q: usize| p * n2 + q;

    let mut uf = UnionFind::new(n1 * n2);
    for axis in 0..c1.cone_d {
        for p in 0..n1 {
            for q in 0..n2 {
                // (V₁T)[p,q] = (TV₂)[p,q]: T[p−e, q] ≐ T[p, q+e].
                match (src1[axis][p], c2.steps[axis][q]) {
                    (Some(a), Some(b)) => uf.union(idx(a, q), idx(p, b)),
                    (Some(a), None) => uf.mark_zero(idx(a, q)),
                    (None, Some(b)) => uf.mark_zero(idx(p, b)),
                    (None, None) => {}
                }
                // (V₁*T)[p,q] = (TV₂*)[p,q]: T[p+e, q] ≐ T[p, q−e].
                match (c1.steps[axis][p], src2[axis][q]) {
                    (Some(a), Some(b)) => uf.union(idx(a, q), idx(p, b)),
                    (Some(a), None) => uf.mark_zero(idx(a, q)),
                    (None, Some(b)) => uf.mark_zero(idx(p, b)),
                    (None, None) => {}
                }
            }
        }
    }

    // Collect free orbits in deterministic order of their smallest member.
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    for i in 0..n1 * n2 {
        let r = uf.find(i);
        if !uf.zero[r] {
            members.entry(r).or_default().push(i);
        }
    }
    let mut orbits: Vec<Vec<usize>> = members.into_values().collect();
    orbits.sort_by_key(|orbit| orbit[0]);

    let basis: Vec<DMatrix<Complex64>> = orbits
        .iter()
        .map(|orbit| {
            let w = Complex64::new(1.0 / (orbit.len() as f64).sqrt(), 0.0);
            let mut t = DMatrix::zeros(n1, n2);
            for &i in orbit {
                t[(i / n2, i % n2)] = w;
            }
            t
        })
        .collect();

    let mut residual: f64 = 0.0;
    for t in &basis {
        residual = residual.max(constraint_residual(c1, c2, &src1, &src2, t));
    }
    Ok(IntertwinerSpace {
        dimension: basis.len(),
        basis,
        residual,
    })
}

/// Largest Frobenius defect of the intertwiner constraints for one matrix.
#[allow(clippy::needless_range_loop)]
fn constraint_residual(
    c1: &CompressedRep,
    c2: &CompressedRep,
    src1: &[Vec<Option<usize>>],
    src2: &[Vec<Option<usize>>],
    t: &DMatrix<Complex64>,
) -> f64 {
    let n1 = c1.n();
    let n2 = c2.n();
    let at = |opt: Option<usize>, other: usize, row_side: bool| -> Complex64 {
        match opt {
            Some(i) => {
                if row_side {
                    t[(i, other)]
                } else {
                    t[(other, i)]
                }
            }
            None => Complex64::ZERO,
        }
    };
    let mut worst: f64 = 0.0;
    for axis in 0..c1.cone_d {
        let mut fwd = 0.0;
        let mut adj = 0.0;
        for p in 0..n1 {
            for q in 0..n2 {
                let v1t = at(src1[axis][p], q, true);
                let tv2 = at(c2.steps[axis][q], p, false);
                fwd += (v1t - tv2).norm_sqr();
                let v1s_t = at(c1.steps[axis][p], q, true);
                let t_v2s = at(src2[axis][q], p, false);
                adj += (v1s_t - t_v2s).norm_sqr();
            }
        }
        worst = worst.max(fwd.sqrt()).max(adj.sqrt());
    }
    worst
}

/// A commutant computation: the self-intertwiner space plus the residual of
/// projecting the identity onto its span (the identity must lie in it).
#[derive(Debug, Clone)]
pub struct CommutantSpace {
    pub space: IntertwinerSpace,
    pub identity_residual: f64,
}

/// 𝔐 of a compressed model: solve_intertwiners(c, c) with the identity-in-
/// span check.
pub fn commutant_dim(c: &CompressedRep) -> Result<CommutantSpace> {
    let space = solve_intertwiners(c, c)?;
    let n = c.n();
    let identity = DMatrix::<Complex64>::identity(n, n);
    let identity_residual = projection_defect(&space.basis, &identity);
    Ok(CommutantSpace {
        space,
        identity_residual,
    })
}

/// ‖X − proj_span(X)‖_F for an orthonormal basis (Frobenius inner product).
pub fn projection_defect(basis: &[DMatrix<Complex64>], x: &DMatrix<Complex64>) -> f64 {
    let mut proj = DMatrix::<Complex64>::zeros(x.nrows(), x.ncols());
    for b in basis {
        let coeff: Complex64 = b.iter().zip(x.iter()).map(|(bi, xi)| bi.conj() * xi).sum();
        proj += b.map(|v| v * coeff);
    }
    (x - proj).norm()
}

/// The computable fingerprint (d, dim 𝒜, dim 𝔐) of the gauge group of the
/// flow attached to `rep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GaugeProfile {
    pub cone_dim: usize,
    pub cocycle_dim: usize,
    pub commutant_dim: usize,
}

pub fn gauge_profile(rep: &GridRep, bx: &CellBox, region: &SolveRegion) -> Result<GaugeProfile> {
    let cocycles = solve_cocycles(rep, region)?;
    let commutant = commutant_dim(&CompressedRep::compress(rep, bx)?)?;
    Ok(GaugeProfile {
        cone_dim: rep.d(),
        cocycle_dim: cocycles.dimension,
        commutant_dim: commutant.space.dimension,
    })
}
