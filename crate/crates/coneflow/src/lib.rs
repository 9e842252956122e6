//! A desk-scale numerical toolkit for CCR flows over convex cones.
//!
//! The crate implements exact Fock-space calculus on exponential vectors,
//! discretized isometric shift representations over P-modules, multiplier
//! cohomology, additive-cocycle and unit solvers, intertwiner/commutant
//! computation, and gauge-cocycle verification. The `coneflow` binary drives
//! reproducible experiment suites over these pieces; see the book under
//! `book/` for a guided tour.
//!
//! Everything is pure and immutable: all operations are safe for
//! unrestricted concurrent use.

pub mod cocycle;
pub mod cone;
pub mod error;
pub mod fock;
pub mod gauge;
pub mod intertwiner;
pub mod isorep;
pub mod linalg;
pub mod multiplier;
pub mod sampling;

pub mod cli;

pub use cocycle::{
    cocycle_value, invariant_state_residual, omega_unit_residual, pairing_c, slope, solve_cocycles,
    unit_apply, unit_residuals, AdditiveCocycle, CocycleSolution, SolveRegion, Unit,
};
pub use cone::{Cell, ConeSpec};
pub use error::{Error, Result};
pub use fock::{
    ccr_residual, exp_inner, fock_inner, gamma_apply, tensor_split, weyl_apply, FockVector,
};
pub use gauge::{
    apply_u_x, cocycle_relation_residual, gauge_apply, gauge_inverse, gauge_product, GaugeElement,
};
pub use intertwiner::{
    commutant_dim, gauge_profile, solve_intertwiners, CompressedRep, GaugeProfile, IntertwinerSpace,
};
pub use isorep::{
    cell_in_module, commutation_defect, defect_witness_search, module_cells_in_box, purity_t0,
    shift_adjoint_apply, shift_apply, CellBox, GridRep, ModuleDescriptor, PurityScan, SparseState,
};
pub use multiplier::{
    class_rep, coboundary_residual, cocycle_residual, omega_eval, phase_translate_apply,
    twisted_shift_apply, BilinearMultiplier, CoboundaryWitness, LatticeState,
};
