//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with
//!   cargo test --test acceptance -- --nocapture
//! Every tolerance is pinned here; nothing is deferred to calibration.

// `ensure!` negates raw comparisons so that NaN residuals fail criteria.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use num_complex::Complex64;

use coneflow::cli::{run, ExperimentConfig};
use coneflow::cocycle::{
    canonical_unit_residual, omega_unit_residual, omega_unit_residual_phase_dropped,
    solve_cocycles, solve_cocycles_direct_sum, unit_residuals, AdditiveCocycle, SolveRegion, Unit,
};
use coneflow::cone::{Cell, ConeSpec};
use coneflow::fock::{ccr_residual, gamma_apply, residual_norm, weyl_apply};
use coneflow::gauge::{
    cocycle_relation_residual, gauge_product, gauge_product_uncorrected, group_law_residual,
    GaugeElement,
};
use coneflow::intertwiner::{commutant_dim, solve_intertwiners, CompressedRep};
use coneflow::isorep::{
    cell_in_module, defect_witness_search, module_cells_in_box, purity_t0, shift_apply, CellBox,
    GridRep, ModuleDescriptor, PurityScan, SparseState,
};
use coneflow::multiplier::{
    class_rep, coboundary_residual, cocycle_residual, omega_eval, twisted_shift_apply,
    BilinearMultiplier,
};
use coneflow::sampling::Sampler;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !($cond) {
            return Err(format!($($arg)*));
        }
    };
}

fn verdict(number: usize, name: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("criterion {number:02} ({name}): PASS"),
        Err(reason) => {
            println!("criterion {number:02} ({name}): FAIL — {reason}");
            panic!("criterion {number:02} ({name}) failed: {reason}");
        }
    }
}

fn rep(module: &str, k: usize) -> GridRep {
    let m = ModuleDescriptor::parse(module).expect("module parses");
    GridRep::new(ConeSpec::new(m.dim(), 1.0).unwrap(), m, k).unwrap()
}

#[test]
fn criterion_01_ccr_suite() {
    verdict(
        1,
        "CCR suite",
        (|| {
            let tol = 1e-9;
            let r = rep("orthant:2", 1);
            let mut s = Sampler::new(101);
            let testset = s.fock_testset(&r, 10, 2.0).unwrap();
            for i in 0..50 {
                let u = s.sparse_state(&r, 2.0).unwrap();
                let v = s.sparse_state(&r, 2.0).unwrap();
                let res = ccr_residual(&u, &v, &testset).unwrap();
                ensure!(res <= tol, "ccr residual {res:.3e} at pair {i}");
            }
            for _ in 0..10 {
                let u = s.sparse_state(&r, 2.0).unwrap();
                let x = s.cone_point(2, 2);
                for psi in &testset {
                    let norm = psi.norm().unwrap();
                    let moved = weyl_apply(&u, psi).unwrap().norm().unwrap();
                    let unitarity = (moved - norm).abs() / norm.max(1.0);
                    ensure!(unitarity <= tol, "unitarity residual {unitarity:.3e}");

                    let a = gamma_apply(
                        |st| shift_apply(&r, &x, st).unwrap(),
                        &weyl_apply(&u, psi).unwrap(),
                    )
                    .unwrap();
                    let b = weyl_apply(
                        &shift_apply(&r, &x, &u).unwrap(),
                        &gamma_apply(|st| shift_apply(&r, &x, st).unwrap(), psi).unwrap(),
                    )
                    .unwrap();
                    let conj = residual_norm(&a, &b).unwrap();
                    ensure!(conj <= tol, "conjugation residual {conj:.3e}");
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_02_cocycle_dimensions() {
    verdict(
        2,
        "cocycle dimensions",
        (|| {
            let cases: &[(&str, usize, usize)] = &[
                ("orthant:1", 1, 1),
                ("orthant:1", 2, 2),
                ("orthant:1", 3, 3),
                ("orthant:2", 1, 0),
                ("axis:-,+", 1, 0),
                ("staircase:-1,1", 1, 0),
                ("staircase:-2,1", 1, 0),
            ];
            for &(module, k, expected) in cases {
                let r = rep(module, k);
                let mut dims = Vec::new();
                for extent in [8usize, 10] {
                    let region = SolveRegion::with_margin(&r, &vec![extent; r.d()], 2).unwrap();
                    let sol = solve_cocycles(&r, &region).unwrap();
                    for (b, res) in sol.basis.iter().zip(&sol.residuals) {
                        ensure!(*res <= 1e-10, "{module} k={k}: basis residual {res:.3e}");
                        ensure!(!b.is_zero(), "{module} k={k}: zero basis element");
                    }
                    dims.push(sol.dimension);
                }
                ensure!(
                    dims[0] == expected,
                    "{module} k={k}: dimension {} != {expected}",
                    dims[0]
                );
                ensure!(
                    dims[0] == dims[1],
                    "{module} k={k}: window instability {} vs {}",
                    dims[0],
                    dims[1]
                );
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_03_intertwiner_dimensions() {
    verdict(
        3,
        "intertwiner dimensions",
        (|| {
            let compress = |module: &str, k: usize, extent: usize| {
                let r = rep(module, k);
                let bx = CellBox::anchored(r.module(), &vec![extent; r.d()]).unwrap();
                CompressedRep::compress(&r, &bx).unwrap()
            };
            let self_cases: &[(&str, usize, [usize; 2], usize)] = &[
                ("orthant:1", 1, [8, 10], 1),
                ("orthant:1", 2, [8, 10], 4),
                ("section:-1", 1, [10, 12], 1),
                ("orthant:2", 3, [5, 7], 9),
            ];
            for &(module, k, extents, expected) in self_cases {
                let mut dims = Vec::new();
                for extent in extents {
                    let out = commutant_dim(&compress(module, k, extent)).unwrap();
                    ensure!(
                        out.space.residual <= 1e-8,
                        "{module} k={k}: residual {:.3e}",
                        out.space.residual
                    );
                    ensure!(
                        out.identity_residual <= 1e-8,
                        "{module} k={k}: identity residual {:.3e}",
                        out.identity_residual
                    );
                    dims.push(out.space.dimension);
                }
                ensure!(
                    dims[0] == expected && dims[1] == expected,
                    "{module} k={k}: dims {dims:?} != {expected}"
                );
            }
            // Cross intertwiners of distinct section modules vanish.
            let mut cross = Vec::new();
            for extent in [10usize, 12] {
                let a = compress("section:-1", 1, extent);
                let b = compress("section:-2", 1, extent);
                let space = solve_intertwiners(&a, &b).unwrap();
                ensure!(
                    space.residual <= 1e-8,
                    "cross residual {:.3e}",
                    space.residual
                );
                cross.push(space.dimension);
            }
            ensure!(cross == vec![0, 0], "cross dims {cross:?} != 0");
            Ok(())
        })(),
    );
}

#[test]
fn criterion_04_unit_axioms() {
    verdict(
        4,
        "unit axioms",
        (|| {
            let tol = 1e-9;
            let r = rep("orthant:1", 1);
            let mut s = Sampler::new(104);
            let region = SolveRegion::with_margin(&r, &[8], 2).unwrap();
            let h = solve_cocycles(&r, &region).unwrap().basis[0].clone();

            let canonical = Unit::canonical(&r);
            let tmu = Unit::new(vec![Complex64::new(0.4, -0.6)], h).unwrap();
            let mut testset = Vec::new();
            for _ in 0..10 {
                testset.push((
                    s.sparse_state(&r, 1.5).unwrap(),
                    s.exponential_vector(&r, 1.5).unwrap(),
                ));
            }
            for _ in 0..10 {
                let x = s.cone_point(1, 3);
                let y = s.cone_point(1, 3);
                for unit in [&canonical, &tmu] {
                    let (semi, inter) = unit_residuals(unit, &x, &y, &testset).unwrap();
                    ensure!(semi <= tol, "semigroup residual {semi:.3e}");
                    ensure!(inter <= tol, "intertwine residual {inter:.3e}");
                }
            }

            // Twisted units of the two-parameter flow, with the negative control.
            let r2 = rep("orthant:2", 1);
            let m = BilinearMultiplier::elementary(2, 0, 1);
            let mut tensor_tests = Vec::new();
            for _ in 0..6 {
                tensor_tests.push((
                    s.exponential_vector(&r2, 1.5).unwrap(),
                    s.lattice_state(2, 1.0).unwrap(),
                ));
            }
            for _ in 0..6 {
                let x = s.cone_point(2, 3);
                let y = s.cone_point(2, 3);
                let res = omega_unit_residual(&r2, &m, &x, &y, &tensor_tests).unwrap();
                ensure!(res <= 1e-12, "omega-unit residual {res:.3e}");
            }
            let control =
                omega_unit_residual_phase_dropped(&r2, &m, &[0, 1], &[1, 0], &tensor_tests)
                    .unwrap();
            ensure!(control > 1e-3, "phase control too small: {control:.3e}");

            // Canonical unit from the vacuum: T_x XΩ = α_x(X)Ω over Weyl words.
            let mut words = vec![vec![]];
            for len in 1..=3usize {
                words.push(
                    (0..len)
                        .map(|_| s.sparse_state(&r2, 1.0).unwrap())
                        .collect(),
                );
            }
            let xs: Vec<Cell> = (0..4).map(|_| s.cone_point(2, 3)).collect();
            let vacuum_res = canonical_unit_residual(&r2, &words, &xs).unwrap();
            ensure!(
                vacuum_res <= tol,
                "canonical-unit vacuum residual {vacuum_res:.3e}"
            );
            Ok(())
        })(),
    );
}

#[test]
fn criterion_05_gauge_suite() {
    verdict(
        5,
        "gauge suite",
        (|| {
            let tol = 1e-9;
            let mut s = Sampler::new(105);

            // One-parameter orthant with a nonzero additive-cocycle part.
            let r1 = rep("orthant:1", 1);
            let region = SolveRegion::with_margin(&r1, &[8], 2).unwrap();
            let base_h = solve_cocycles(&r1, &region).unwrap().basis[0].clone();
            let tests1 = s.fock_testset(&r1, 10, 1.5).unwrap();
            let xs1: Vec<Cell> = vec![vec![1], vec![2], vec![3]];
            for _ in 0..3 {
                let mk = |s: &mut Sampler| {
                    let phase = Complex64::new(0.0, s.real_vector(1)[0]).exp();
                    GaugeElement::new(
                        s.real_vector(1),
                        base_h.scale(s.complex()),
                        nalgebra::DMatrix::from_element(1, 1, phase),
                    )
                    .unwrap()
                };
                let g1 = mk(&mut s);
                let g2 = mk(&mut s);
                let x = s.cone_point(1, 3);
                let y = s.cone_point(1, 3);
                let rel = cocycle_relation_residual(&g1, &x, &y, &tests1).unwrap();
                ensure!(rel <= tol, "orthant relation residual {rel:.3e}");
                let prod = gauge_product(&g1, &g2).unwrap();
                let law = group_law_residual(&prod, &g1, &g2, &xs1, &tests1).unwrap();
                ensure!(law <= tol, "orthant group-law residual {law:.3e}");
            }

            // Two-parameter staircase: fiber-unitary part only.
            let r2 = rep("staircase:-1,1", 2);
            let tests2 = s.fock_testset(&r2, 8, 1.2).unwrap();
            let xs2: Vec<Cell> = vec![vec![1, 0], vec![0, 1], vec![1, 1]];
            for _ in 0..3 {
                let g1 =
                    GaugeElement::new(s.real_vector(2), AdditiveCocycle::zero(&r2), s.unitary(2))
                        .unwrap();
                let g2 =
                    GaugeElement::new(s.real_vector(2), AdditiveCocycle::zero(&r2), s.unitary(2))
                        .unwrap();
                let x = s.cone_point(2, 2);
                let y = s.cone_point(2, 2);
                let rel = cocycle_relation_residual(&g1, &x, &y, &tests2).unwrap();
                ensure!(rel <= tol, "staircase relation residual {rel:.3e}");
                let prod = gauge_product(&g1, &g2).unwrap();
                let law = group_law_residual(&prod, &g1, &g2, &xs2, &tests2).unwrap();
                ensure!(law <= tol, "staircase group-law residual {law:.3e}");
            }

            // Negative control: omit the Im(c) correction on crafted cocycles.
            let one = nalgebra::DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
            let g1 = GaugeElement::new(vec![0.0], base_h.clone(), one.clone()).unwrap();
            let g2 =
                GaugeElement::new(vec![0.0], base_h.scale(Complex64::new(0.0, 1.0)), one).unwrap();
            let bad = gauge_product_uncorrected(&g1, &g2).unwrap();
            let control = group_law_residual(&bad, &g1, &g2, &xs1, &tests1).unwrap();
            ensure!(control > 1e-3, "pairing control too small: {control:.3e}");
            Ok(())
        })(),
    );
}

#[test]
fn criterion_06_nonconjugacy_witness() {
    verdict(
        6,
        "non-conjugacy witness",
        (|| {
            let st = rep("staircase:-1,1", 1);
            let window = CellBox::anchored(st.module(), &[8, 8]).unwrap();
            let witness = defect_witness_search(&st, &window).unwrap();
            let w = witness.ok_or_else(|| "no witness found on the staircase".to_string())?;
            ensure!(w.defect > 0.0, "witness defect is zero");

            let or = rep("orthant:2", 1);
            let window = CellBox::anchored(or.module(), &[8, 8]).unwrap();
            let control = defect_witness_search(&or, &window).unwrap();
            ensure!(control.is_none(), "orthant control found a witness");
            Ok(())
        })(),
    );
}

/// Membership-only recomputation of the vanishing time, independent of the
/// adjoint-shift implementation.
fn purity_oracle(desc: &ModuleDescriptor, f: &SparseState, a: &[i64], tmax: u64) -> Option<u64> {
    (1..=tmax).find(|&t| {
        f.entries().keys().all(|(cell, _)| {
            let shifted: Cell = cell
                .iter()
                .zip(a)
                .map(|(&c, &ai)| c - (t as i64) * ai)
                .collect();
            !cell_in_module(desc, &shifted).unwrap()
        })
    })
}

#[test]
fn criterion_07_purity() {
    verdict(
        7,
        "purity",
        (|| {
            let modules = [
                "orthant:2",
                "axis:-,+",
                "staircase:-1,1",
                "staircase:-2,1",
                "section:-1",
                "translate(staircase:-1,1;1,1)",
            ];
            let tmax = 20;
            for module in modules {
                let r = rep(module, 1);
                let a = vec![1i64, 1];
                let bx = CellBox::anchored(r.module(), &[4, 4]).unwrap();
                let cells = module_cells_in_box(r.module(), &bx).unwrap();
                let states = vec![
                    SparseState::basis(&r, &cells[0], 0).unwrap(),
                    SparseState::basis(&r, &cells[cells.len() - 1], 0).unwrap(),
                    SparseState::basis(&r, &cells[0], 0)
                        .unwrap()
                        .add(&SparseState::basis(&r, &cells[cells.len() / 2], 0).unwrap())
                        .unwrap(),
                ];
                for f in states {
                    let scan = purity_t0(&r, &f, &a, tmax).unwrap();
                    let t0 = match scan {
                        PurityScan::VanishesAt(t) => t,
                        PurityScan::Exceeded => {
                            return Err(format!("{module}: no vanishing time up to {tmax}"))
                        }
                    };
                    let oracle = purity_oracle(r.module(), &f, &a, tmax);
                    ensure!(oracle == Some(t0), "{module}: t0 {t0} != oracle {oracle:?}");
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_08_distinguish() {
    verdict(
        8,
        "distinguish experiment",
        (|| {
            let a_values = [-1i64, -2, -3];
            let build = |a: i64| {
                let desc = ModuleDescriptor::Section { a };
                let r = GridRep::new(ConeSpec::new(2, 1.0).unwrap(), desc.clone(), 1).unwrap();
                let bx = CellBox::anchored(&desc, &[10, 10]).unwrap();
                let c = CompressedRep::compress(&r, &bx).unwrap();
                let region = SolveRegion::with_margin(&r, &[8, 8], 2).unwrap();
                (r, c, region)
            };
            for &a1 in &a_values {
                let (r1, c1, region1) = build(a1);
                // Single-module profile pieces.
                let cocycle_dim = solve_cocycles(&r1, &region1).unwrap().dimension;
                let comm = commutant_dim(&c1).unwrap().space.dimension;
                ensure!(
                    cocycle_dim == 0 && comm == 1,
                    "section:{a1}: profile ({cocycle_dim}, {comm}) != (0, 1)"
                );
                for &a2 in &a_values {
                    if a2 < a1 {
                        continue;
                    }
                    let (r2, c2, region2) = build(a2);
                    let sum = CompressedRep::direct_sum(&c1, &c2).unwrap();
                    let dim = commutant_dim(&sum).unwrap().space.dimension;
                    let expected = if a1 == a2 { 4 } else { 2 };
                    ensure!(
                        dim == expected,
                        "sum {a1},{a2}: commutant dim {dim} != {expected}"
                    );
                    let cocycles = solve_cocycles_direct_sum(&r1, &region1, &r2, &region2).unwrap();
                    ensure!(cocycles == 0, "sum {a1},{a2}: cocycle dim {cocycles} != 0");
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_09_multiplier_suite() {
    verdict(
        9,
        "multiplier suite",
        (|| {
            let tol = 1e-12;
            let mut s = Sampler::new(109);
            let d = 3;
            for _ in 0..100 {
                let m = BilinearMultiplier::new(s.real_matrix(d)).unwrap();
                let res =
                    cocycle_residual(&m, &s.real_vector(d), &s.real_vector(d), &s.real_vector(d))
                        .unwrap();
                ensure!(res <= tol, "multiplier identity residual {res:.3e}");
            }
            for i in 0..20 {
                let m = if i % 2 == 0 {
                    BilinearMultiplier::new(s.symmetric_matrix(d)).unwrap()
                } else {
                    BilinearMultiplier::new(s.real_matrix(d)).unwrap()
                };
                let (t, q) = class_rep(&m);
                for _ in 0..5 {
                    let res = coboundary_residual(&m, &t, &q, &s.real_vector(d), &s.real_vector(d))
                        .unwrap();
                    ensure!(res <= tol, "class round-trip residual {res:.3e}");
                }
                let symmetric = {
                    let mm = m.matrix();
                    (mm - mm.transpose()).norm() < 1e-12
                };
                ensure!(
                    symmetric == (t.norm() < 1e-12),
                    "class kernel mismatch at sample {i}"
                );
            }
            let r2 = rep("orthant:2", 1);
            for _ in 0..10 {
                let m = BilinearMultiplier::new(s.real_matrix(2)).unwrap();
                let f = s.sparse_state(&r2, 2.0).unwrap();
                let x = s.cone_point(2, 3);
                let y = s.cone_point(2, 3);
                let lhs =
                    twisted_shift_apply(&m, &x, &twisted_shift_apply(&m, &y, &f).unwrap()).unwrap();
                let xd: Vec<f64> = x.iter().map(|&c| c as f64).collect();
                let yd: Vec<f64> = y.iter().map(|&c| c as f64).collect();
                let xy: Cell = x.iter().zip(&y).map(|(a, b)| a + b).collect();
                let rhs = twisted_shift_apply(&m, &xy, &f)
                    .unwrap()
                    .scale(omega_eval(&m, &xd, &yd).unwrap());
                let res = lhs.sub(&rhs).unwrap().norm();
                ensure!(res <= tol, "twisted-shift residual {res:.3e}");
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_10_determinism() {
    verdict(
        10,
        "determinism",
        (|| {
            let configs = ["multiplier", "cocycles", "nonconjugacy"];
            for name in configs {
                let cfg = ExperimentConfig::minimal(name);
                let first = run(&cfg).map_err(|e| e.to_string())?;
                let second = run(&cfg).map_err(|e| e.to_string())?;
                ensure!(first.pass, "{name} experiment failed its own verdicts");
                ensure!(
                    first.deterministic_json() == second.deterministic_json(),
                    "{name}: reports differ between runs"
                );
            }
            Ok(())
        })(),
    );
}
