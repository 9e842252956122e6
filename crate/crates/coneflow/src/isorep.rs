//! Discretized isometric shift representations of P over P-modules.
//!
//! A P-module is a set A of cells with A + P ⊆ A. The associated
//! representation acts on finitely supported states by exact translation,
//!
//!   (V_x f)(y) = f(y − x) if y − x ∈ A, else 0,
//!
//! so the semigroup and isometry identities hold exactly; all numerical
//! approximation is confined to the solver modules.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cone::{cell_add, cell_scale, cell_sub, Cell, ConeSpec};
use crate::error::{Error, Result};

/// Which cells a module descriptor keeps along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// The whole line ℝ.
    Full,
    /// The half line ℝ₊.
    Half,
}

/// A P-module given by one of the closed sets used in the worked examples.
///
/// Half-open bounds are resolved at the cell points c·δ, so membership is a
/// pure integer predicate on cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModuleDescriptor {
    /// The orthant ℝ₊^d itself.
    Orthant(usize),
    /// A product of full and half lines; at least one axis must be Half.
    AxisProduct(Vec<Axis>),
    /// The two-piece staircase [a,∞)×[b,∞) ⊔ [0,∞)×[0,b) with a < 0 < b.
    Staircase { a: i64, b: i64 },
    /// The section module [1,∞)×[a,0) ∪ [0,∞)×[0,∞) with a < 0.
    Section { a: i64 },
    /// A translate A + v of another module.
    Translate {
        inner: Box<ModuleDescriptor>,
        v: Cell,
    },
}

impl ModuleDescriptor {
    /// Ambient dimension of the module.
    pub fn dim(&self) -> usize {
        match self {
            ModuleDescriptor::Orthant(d) => *d,
            ModuleDescriptor::AxisProduct(axes) => axes.len(),
            ModuleDescriptor::Staircase { .. } | ModuleDescriptor::Section { .. } => 2,
            ModuleDescriptor::Translate { inner, .. } => inner.dim(),
        }
    }

    /// Validates the descriptor's structural constraints.
    pub fn validate(&self) -> Result<()> {
        match self {
            ModuleDescriptor::Orthant(d) => {
                if *d == 0 {
                    return Err(Error::InvalidConfig(
                        "orthant dimension must be >= 1".into(),
                    ));
                }
            }
            ModuleDescriptor::AxisProduct(axes) => {
                if axes.is_empty() {
                    return Err(Error::InvalidConfig("axis product needs >= 1 axis".into()));
                }
                if !axes.contains(&Axis::Half) {
                    return Err(Error::InvalidConfig(
                        "axis product needs at least one half line".into(),
                    ));
                }
            }
            ModuleDescriptor::Staircase { a, b } => {
                if !(*a < 0 && *b > 0) {
                    return Err(Error::InvalidConfig(
                        "staircase requires a < 0 and b > 0".into(),
                    ));
                }
            }
            ModuleDescriptor::Section { a } => {
                if *a >= 0 {
                    return Err(Error::InvalidConfig("section requires a < 0".into()));
                }
            }
            ModuleDescriptor::Translate { inner, v } => {
                inner.validate()?;
                if v.len() != inner.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: inner.dim(),
                        got: v.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Exact membership of a cell in the module.
    pub fn contains(&self, c: &[i64]) -> Result<bool> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: c.len(),
            });
        }
        Ok(match self {
            ModuleDescriptor::Orthant(_) => c.iter().all(|&x| x >= 0),
            ModuleDescriptor::AxisProduct(axes) => axes
                .iter()
                .zip(c)
                .all(|(axis, &x)| matches!(axis, Axis::Full) || x >= 0),
            ModuleDescriptor::Staircase { a, b } => {
                (c[0] >= *a && c[1] >= *b) || (c[0] >= 0 && c[1] >= 0 && c[1] < *b)
            }
            ModuleDescriptor::Section { a } => {
                (c[0] >= 1 && c[1] >= *a && c[1] < 0) || (c[0] >= 0 && c[1] >= 0)
            }
            ModuleDescriptor::Translate { inner, v } => inner.contains(&cell_sub(c, v))?,
        })
    }

    /// The coordinatewise minimum of the module, axis by axis; `None` for an
    /// axis that is unbounded below. Used to anchor search boxes.
    pub fn lower_corner(&self) -> Vec<Option<i64>> {
        match self {
            ModuleDescriptor::Orthant(d) => vec![Some(0); *d],
            ModuleDescriptor::AxisProduct(axes) => axes
                .iter()
                .map(|a| match a {
                    Axis::Full => None,
                    Axis::Half => Some(0),
                })
                .collect(),
            ModuleDescriptor::Staircase { a, .. } => vec![Some(*a), Some(0)],
            ModuleDescriptor::Section { a } => vec![Some(0), Some(*a)],
            ModuleDescriptor::Translate { inner, v } => inner
                .lower_corner()
                .iter()
                .zip(v)
                .map(|(lo, &vi)| lo.map(|x| x + vi))
                .collect(),
        }
    }

    /// Parses the canonical textual form, e.g. `orthant:2`, `axis:-,+`,
    /// `staircase:-1,1`, `section:-1`, `translate(staircase:-1,1;1,1)`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |msg: &str| Error::InvalidConfig(format!("module `{text}`: {msg}"));
        let desc = if let Some(rest) = text.strip_prefix("translate(") {
            let body = rest
                .strip_suffix(')')
                .ok_or_else(|| bad("missing closing parenthesis"))?;
            let sep = body.rfind(';').ok_or_else(|| bad("missing `;`"))?;
            let inner = ModuleDescriptor::parse(&body[..sep])?;
            let v = body[sep + 1..]
                .split(',')
                .map(|s| s.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("bad translate vector"))?;
            ModuleDescriptor::Translate {
                inner: Box::new(inner),
                v,
            }
        } else {
            let (kind, args) = text
                .split_once(':')
                .ok_or_else(|| bad("expected `kind:args`"))?;
            match kind {
                "orthant" => ModuleDescriptor::Orthant(
                    args.parse().map_err(|_| bad("bad orthant dimension"))?,
                ),
                "axis" => ModuleDescriptor::AxisProduct(
                    args.split(',')
                        .map(|s| match s.trim() {
                            "+" => Ok(Axis::Half),
                            "-" => Ok(Axis::Full),
                            _ => Err(bad("axis entries must be `+` or `-`")),
                        })
                        .collect::<Result<Vec<_>>>()?,
                ),
                "staircase" => {
                    let (a, b) = args.split_once(',').ok_or_else(|| bad("expected a,b"))?;
                    ModuleDescriptor::Staircase {
                        a: a.trim().parse().map_err(|_| bad("bad a"))?,
                        b: b.trim().parse().map_err(|_| bad("bad b"))?,
                    }
                }
                "section" => ModuleDescriptor::Section {
                    a: args.trim().parse().map_err(|_| bad("bad a"))?,
                },
                _ => return Err(bad("unknown module kind")),
            }
        };
        desc.validate()?;
        Ok(desc)
    }
}

impl fmt::Display for ModuleDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModuleDescriptor::Orthant(d) => write!(f, "orthant:{d}"),
            ModuleDescriptor::AxisProduct(axes) => {
                write!(f, "axis:")?;
                for (i, a) in axes.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", if *a == Axis::Half { "+" } else { "-" })?;
                }
                Ok(())
            }
            ModuleDescriptor::Staircase { a, b } => write!(f, "staircase:{a},{b}"),
            ModuleDescriptor::Section { a } => write!(f, "section:{a}"),
            ModuleDescriptor::Translate { inner, v } => {
                write!(f, "translate({inner};")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A box of cells, half-open: lo ≤ c < hi coordinatewise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellBox {
    pub lo: Cell,
    pub hi: Cell,
}

impl CellBox {
    pub fn new(lo: Cell, hi: Cell) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        Ok(CellBox { lo, hi })
    }

    /// A box of the given extents anchored at the module's lower corner,
    /// falling back to −extent/2 on axes unbounded below.
    pub fn anchored(desc: &ModuleDescriptor, extents: &[usize]) -> Result<Self> {
        if extents.len() != desc.dim() {
            return Err(Error::DimensionMismatch {
                expected: desc.dim(),
                got: extents.len(),
            });
        }
        let lo: Cell = desc
            .lower_corner()
            .iter()
            .zip(extents)
            .map(|(corner, &e)| corner.unwrap_or(-((e / 2) as i64)))
            .collect();
        let hi = lo
            .iter()
            .zip(extents)
            .map(|(&l, &e)| l + e as i64)
            .collect();
        CellBox::new(lo, hi)
    }

    pub fn contains(&self, c: &[i64]) -> bool {
        c.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&x, (&l, &h))| l <= x && x < h)
    }

    /// Grows the box by `m` cells in every direction.
    pub fn grow(&self, m: i64) -> CellBox {
        CellBox {
            lo: self.lo.iter().map(|&l| l - m).collect(),
            hi: self.hi.iter().map(|&h| h + m).collect(),
        }
    }

    /// All cells of the box in lexicographic order.
    pub fn cells(&self) -> Vec<Cell> {
        let d = self.lo.len();
        let mut out = Vec::new();
        let mut cur = self.lo.clone();
        if self.lo.iter().zip(&self.hi).any(|(l, h)| l >= h) {
            return out;
        }
        loop {
            out.push(cur.clone());
            let mut axis = d;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                cur[axis] += 1;
                if cur[axis] < self.hi[axis] {
                    break;
                }
                cur[axis] = self.lo[axis];
            }
        }
    }
}

/// Exact membership of a cell in a module.
pub fn cell_in_module(desc: &ModuleDescriptor, c: &[i64]) -> Result<bool> {
    desc.contains(c)
}

/// All module cells inside a box, in lexicographic order.
pub fn module_cells_in_box(desc: &ModuleDescriptor, bx: &CellBox) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for c in bx.cells() {
        if desc.contains(&c)? {
            out.push(c);
        }
    }
    Ok(out)
}

/// A discretized isometric representation: module, cone and multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRep {
    cone: ConeSpec,
    module: ModuleDescriptor,
    multiplicity: usize,
}

impl GridRep {
    pub fn new(cone: ConeSpec, module: ModuleDescriptor, multiplicity: usize) -> Result<Self> {
        module.validate()?;
        if module.dim() != cone.d() {
            return Err(Error::DimensionMismatch {
                expected: cone.d(),
                got: module.dim(),
            });
        }
        if multiplicity == 0 {
            return Err(Error::InvalidConfig("multiplicity must be >= 1".into()));
        }
        Ok(GridRep {
            cone,
            module,
            multiplicity,
        })
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn module(&self) -> &ModuleDescriptor {
        &self.module
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn d(&self) -> usize {
        self.cone.d()
    }
}

/// A grid site: a cell together with a fiber index below the multiplicity.
pub type Site = (Cell, usize);

/// A finitely supported vector-valued function on the module's cells.
///
/// The inner product is ⟨u|v⟩ = δ^d Σ conj(u(s)) v(s), antilinear in the
/// first argument. Entries with modulus below 1e−14 are dropped on
/// construction so that exact equality of stored entries defines identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    rep: GridRep,
    entries: BTreeMap<Site, Complex64>,
}

/// Modulus below which a stored entry is treated as exact zero.
pub const ENTRY_DROP_TOL: f64 = 1e-14;

impl SparseState {
    /// The zero state.
    pub fn zero(rep: &GridRep) -> Self {
        SparseState {
            rep: rep.clone(),
            entries: BTreeMap::new(),
        }
    }

    /// The basis state δ at one site, with entry 1.
    pub fn basis(rep: &GridRep, cell: &[i64], fiber: usize) -> Result<Self> {
        SparseState::from_entries(rep, [((cell.to_vec(), fiber), Complex64::new(1.0, 0.0))])
    }

    /// Builds a state, validating module membership and dropping negligible
    /// entries.
    pub fn from_entries<I>(rep: &GridRep, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Site, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for ((cell, fiber), z) in entries {
            if !rep.module().contains(&cell)? {
                return Err(Error::CellOutsideModule);
            }
            if fiber >= rep.multiplicity() {
                return Err(Error::InvalidConfig(format!(
                    "fiber {fiber} exceeds multiplicity {}",
                    rep.multiplicity()
                )));
            }
            if z.norm() >= ENTRY_DROP_TOL {
                let slot = map.entry((cell, fiber)).or_insert(Complex64::ZERO);
                *slot += z;
            }
        }
        map.retain(|_, z| z.norm() >= ENTRY_DROP_TOL);
        Ok(SparseState {
            rep: rep.clone(),
            entries: map,
        })
    }

    pub fn rep(&self) -> &GridRep {
        &self.rep
    }

    pub fn entries(&self) -> &BTreeMap<Site, Complex64> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn same_space(&self, other: &SparseState) -> bool {
        self.rep == other.rep
    }

    /// ⟨self|other⟩, antilinear in the first slot, with measure weight δ^d.
    pub fn inner(&self, other: &SparseState) -> Result<Complex64> {
        if !self.same_space(other) {
            return Err(Error::SpaceMismatch);
        }
        let mut acc = Complex64::ZERO;
        for (site, a) in &self.entries {
            if let Some(b) = other.entries.get(site) {
                acc += a.conj() * b;
            }
        }
        Ok(acc * self.rep.cone().cell_weight())
    }

    pub fn norm_sq(&self) -> f64 {
        let w = self.rep.cone().cell_weight();
        self.entries.values().map(|z| z.norm_sqr()).sum::<f64>() * w
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &SparseState) -> Result<SparseState> {
        if !self.same_space(other) {
            return Err(Error::SpaceMismatch);
        }
        let mut entries = self.entries.clone();
        for (site, z) in &other.entries {
            *entries.entry(site.clone()).or_insert(Complex64::ZERO) += z;
        }
        entries.retain(|_, z| z.norm() >= ENTRY_DROP_TOL);
        Ok(SparseState {
            rep: self.rep.clone(),
            entries,
        })
    }

    pub fn sub(&self, other: &SparseState) -> Result<SparseState> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: Complex64) -> SparseState {
        let mut entries = BTreeMap::new();
        if z != Complex64::ZERO {
            for (site, a) in &self.entries {
                let v = a * z;
                if v.norm() >= ENTRY_DROP_TOL {
                    entries.insert(site.clone(), v);
                }
            }
        }
        SparseState {
            rep: self.rep.clone(),
            entries,
        }
    }

    /// Applies a fiberwise k×k matrix at the given cells (used by gauge
    /// elements); cells not listed keep their fiber vector.
    pub(crate) fn map_fibers_at<F>(
        &self,
        mut select: F,
        u: &nalgebra::DMatrix<Complex64>,
    ) -> SparseState
    where
        F: FnMut(&[i64]) -> bool,
    {
        let k = self.rep.multiplicity();
        let mut by_cell: BTreeMap<Cell, Vec<Complex64>> = BTreeMap::new();
        for ((cell, fiber), z) in &self.entries {
            by_cell
                .entry(cell.clone())
                .or_insert_with(|| vec![Complex64::ZERO; k])[*fiber] = *z;
        }
        let mut entries = BTreeMap::new();
        for (cell, fibers) in by_cell {
            let out: Vec<Complex64> = if select(&cell) {
                (0..k)
                    .map(|i| (0..k).map(|j| u[(i, j)] * fibers[j]).sum())
                    .collect()
            } else {
                fibers
            };
            for (fiber, z) in out.into_iter().enumerate() {
                if z.norm() >= ENTRY_DROP_TOL {
                    entries.insert((cell.clone(), fiber), z);
                }
            }
        }
        SparseState {
            rep: self.rep.clone(),
            entries,
        }
    }
}

/// (V_x f)(y) = f(y − x): exact translation. Membership of targets is
/// guaranteed by the module property, so the norm is preserved exactly.
pub fn shift_apply(rep: &GridRep, x: &[i64], f: &SparseState) -> Result<SparseState> {
    check_shift_args(rep, x, f)?;
    let entries = f
        .entries
        .iter()
        .map(|((cell, fiber), z)| ((cell_add(cell, x), *fiber), *z))
        .collect();
    Ok(SparseState {
        rep: rep.clone(),
        entries,
    })
}

/// (V_x* f)(y) = f(y + x) for y ∈ A; entries whose target leaves the module
/// are dropped. Satisfies ⟨V_x* f, g⟩ = ⟨f, V_x g⟩ exactly.
pub fn shift_adjoint_apply(rep: &GridRep, x: &[i64], f: &SparseState) -> Result<SparseState> {
    check_shift_args(rep, x, f)?;
    let mut entries = BTreeMap::new();
    for ((cell, fiber), z) in &f.entries {
        let target = cell_sub(cell, x);
        if rep.module().contains(&target)? {
            entries.insert((target, *fiber), *z);
        }
    }
    Ok(SparseState {
        rep: rep.clone(),
        entries,
    })
}

/// The range-complement projection E_x f = f − V_x V_x* f, i.e. the part of f
/// supported on cells y with y − x ∉ A.
pub fn range_complement(rep: &GridRep, x: &[i64], f: &SparseState) -> Result<SparseState> {
    check_shift_args(rep, x, f)?;
    let mut entries = BTreeMap::new();
    for ((cell, fiber), z) in &f.entries {
        if !rep.module().contains(&cell_sub(cell, x))? {
            entries.insert((cell.clone(), *fiber), *z);
        }
    }
    Ok(SparseState {
        rep: rep.clone(),
        entries,
    })
}

fn check_shift_args(rep: &GridRep, x: &[i64], f: &SparseState) -> Result<()> {
    if x.len() != rep.d() {
        return Err(Error::DimensionMismatch {
            expected: rep.d(),
            got: x.len(),
        });
    }
    if f.rep != *rep {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// ‖(V_t* V_s − V_s V_t*) f‖ for s = (m,0), t = (0,n); zero identically on
/// the full orthant, positive for suitable staircase inputs.
pub fn commutation_defect(rep: &GridRep, s: &[i64], t: &[i64], f: &SparseState) -> Result<f64> {
    let lhs = shift_adjoint_apply(rep, t, &shift_apply(rep, s, f)?)?;
    let rhs = shift_apply(rep, s, &shift_adjoint_apply(rep, t, f)?)?;
    Ok(lhs.sub(&rhs)?.norm())
}

/// Result of a witness search for the commutation defect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectWitness {
    pub s: Cell,
    pub t: Cell,
    pub cell: Cell,
    pub defect: f64,
}

/// Brute-force search over basis states in the window and axis steps
/// s = (m,0), t = (0,n) with 1 ≤ m,n ≤ window extent. Returns the first
/// triple with defect > 1e−9, or `None`.
pub fn defect_witness_search(rep: &GridRep, window: &CellBox) -> Result<Option<DefectWitness>> {
    if rep.d() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: rep.d(),
        });
    }
    let cells = module_cells_in_box(rep.module(), window)?;
    let max_m = (window.hi[0] - window.lo[0]).max(1);
    let max_n = (window.hi[1] - window.lo[1]).max(1);
    for c in &cells {
        let f = SparseState::basis(rep, c, 0)?;
        for m in 1..=max_m {
            for n in 1..=max_n {
                let s = vec![m, 0];
                let t = vec![0, n];
                let defect = commutation_defect(rep, &s, &t, &f)?;
                if defect > 1e-9 {
                    return Ok(Some(DefectWitness {
                        s,
                        t,
                        cell: c.clone(),
                        defect,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Outcome of the purity scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PurityScan {
    /// The least t with V_{ta}* f = 0 exactly.
    VanishesAt(u64),
    /// No vanishing time up to tmax.
    Exceeded,
}

/// The least t ≤ tmax with V_{ta}* f = 0 exactly; exact vanishing occurs
/// because f has finite support.
pub fn purity_t0(rep: &GridRep, f: &SparseState, a: &[i64], tmax: u64) -> Result<PurityScan> {
    if !rep.cone().in_interior(a)? {
        return Err(Error::NotInterior);
    }
    if f.is_zero() {
        return Err(Error::ZeroState);
    }
    for t in 1..=tmax {
        let ta = cell_scale(t as i64, a);
        if shift_adjoint_apply(rep, &ta, f)?.is_zero() {
            return Ok(PurityScan::VanishesAt(t));
        }
    }
    Ok(PurityScan::Exceeded)
}
