//! Property tests for the structural invariants: order axioms, exact shift
//! identities, module invariance, Gram positivity, Weyl/second-quantization
//! relations, and the multiplier group law.

use num_complex::Complex64;
use proptest::prelude::*;

use coneflow::cone::{cell_add, Cell, ConeSpec};
use coneflow::fock::{fock_inner, gamma_apply, weyl_apply, FockVector};
use coneflow::isorep::{
    commutation_defect, defect_witness_search, module_cells_in_box, purity_t0, shift_adjoint_apply,
    shift_apply, CellBox, GridRep, ModuleDescriptor, SparseState,
};
use coneflow::multiplier::{omega_eval, BilinearMultiplier};
use coneflow::sampling::Sampler;

fn rep(module: &str, k: usize) -> GridRep {
    let m = ModuleDescriptor::parse(module).unwrap();
    GridRep::new(ConeSpec::new(m.dim(), 1.0).unwrap(), m, k).unwrap()
}

fn lattice_point(d: usize) -> impl Strategy<Value = Cell> {
    prop::collection::vec(-6i64..=6, d)
}

fn cone_point(d: usize) -> impl Strategy<Value = Cell> {
    prop::collection::vec(0i64..=4, d)
}

/// A random state over the near corner of the module.
fn state_strategy(module: &'static str, k: usize) -> impl Strategy<Value = SparseState> {
    let r = rep(module, k);
    let bx = CellBox::anchored(r.module(), &vec![3; r.d()]).unwrap();
    let cells = module_cells_in_box(r.module(), &bx).unwrap();
    let n = cells.len();
    prop::collection::vec(((0..n), (0..k), -1.0f64..1.0, -1.0f64..1.0), 1..6).prop_map(
        move |picks| {
            let entries = picks
                .into_iter()
                .map(|(i, f, re, im)| ((cells[i].clone(), f), Complex64::new(re, im)));
            SparseState::from_entries(&r, entries).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn leq_is_a_partial_order(
        x in lattice_point(3),
        y in lattice_point(3),
        z in lattice_point(3),
    ) {
        let p = ConeSpec::new(3, 1.0).unwrap();
        prop_assert!(p.leq(&x, &x).unwrap());
        if p.leq(&x, &y).unwrap() && p.leq(&y, &x).unwrap() {
            prop_assert_eq!(&x, &y);
        }
        if p.leq(&x, &y).unwrap() && p.leq(&y, &z).unwrap() {
            prop_assert!(p.leq(&x, &z).unwrap());
        }
    }

    #[test]
    fn interior_points_dominate_zero(x in prop::collection::vec(-3i64..=5, 2)) {
        let p = ConeSpec::new(2, 1.0).unwrap();
        if p.in_interior(&x).unwrap() {
            prop_assert!(p.leq(&[0, 0], &x).unwrap());
            prop_assert!(x.iter().all(|&c| c > 0));
        }
    }

    #[test]
    fn archimedean_bounds(
        a in prop::collection::vec(1i64..=3, 2),
        x in lattice_point(2),
    ) {
        let p = ConeSpec::new(2, 1.0).unwrap();
        let n = p.archimedean_n(&a, &x).unwrap() as i64;
        let above: Cell = a.iter().zip(&x).map(|(&ai, &xi)| n * ai - xi).collect();
        prop_assert!(p.in_interior(&above).unwrap());
        if n > 1 {
            let below: Cell = a.iter().zip(&x).map(|(&ai, &xi)| (n - 1) * ai - xi).collect();
            prop_assert!(!p.in_interior(&below).unwrap());
        }
    }

    #[test]
    fn shift_semigroup_and_isometry(
        f in state_strategy("staircase:-1,1", 2),
        x in cone_point(2),
        y in cone_point(2),
    ) {
        let r = rep("staircase:-1,1", 2);
        let ab = shift_apply(&r, &x, &shift_apply(&r, &y, &f).unwrap()).unwrap();
        let joint = shift_apply(&r, &cell_add(&x, &y), &f).unwrap();
        prop_assert_eq!(&ab, &joint);
        prop_assert_eq!(ab.norm_sq(), f.norm_sq());
    }

    #[test]
    fn shift_adjointness_exact(
        f in state_strategy("section:-1", 1),
        g in state_strategy("section:-1", 1),
        x in cone_point(2),
    ) {
        let r = rep("section:-1", 1);
        let lhs = shift_adjoint_apply(&r, &x, &f).unwrap().inner(&g).unwrap();
        let rhs = f.inner(&shift_apply(&r, &x, &g).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn gram_positive_semidefinite(
        u in state_strategy("orthant:2", 1),
        v in state_strategy("orthant:2", 1),
        a_re in -1.0f64..1.0,
        b_im in -1.0f64..1.0,
    ) {
        let r = rep("orthant:2", 1);
        let psi = FockVector::from_terms(&r, vec![
            (Complex64::new(a_re, 0.25), u),
            (Complex64::new(0.5, b_im), v),
        ]).unwrap();
        let g = fock_inner(&psi, &psi).unwrap();
        prop_assert!(g.re >= -1e-9, "Re = {}", g.re);
        prop_assert!(g.im.abs() <= 1e-9, "Im = {}", g.im);
    }

    #[test]
    fn weyl_unitarity_and_adjoint(
        u in state_strategy("orthant:2", 1),
        v in state_strategy("orthant:2", 1),
        w in state_strategy("orthant:2", 1),
    ) {
        let psi = FockVector::exponential(v);
        let phi = FockVector::exponential(w);
        let norm = psi.norm().unwrap();
        let moved = weyl_apply(&u, &psi).unwrap().norm().unwrap();
        prop_assert!((moved - norm).abs() <= 1e-9 * norm.max(1.0));

        // ⟨W(u)ψ, φ⟩ = ⟨ψ, W(−u)φ⟩ since W(u)* = W(−u).
        let lhs = fock_inner(&weyl_apply(&u, &psi).unwrap(), &phi).unwrap();
        let neg = u.scale(Complex64::new(-1.0, 0.0));
        let rhs = fock_inner(&psi, &weyl_apply(&neg, &phi).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-9);
    }

    #[test]
    fn gamma_multiplicative_on_shifts(
        v in state_strategy("orthant:2", 1),
        x in cone_point(2),
        y in cone_point(2),
    ) {
        let r = rep("orthant:2", 1);
        let psi = FockVector::exponential(v);
        let one_then_other = gamma_apply(
            |s| shift_apply(&r, &x, s).unwrap(),
            &gamma_apply(|s| shift_apply(&r, &y, s).unwrap(), &psi).unwrap(),
        ).unwrap();
        let joint = gamma_apply(
            |s| shift_apply(&r, &cell_add(&x, &y), s).unwrap(),
            &psi,
        ).unwrap();
        prop_assert_eq!(one_then_other, joint);
    }

    #[test]
    fn multiplier_group_law(
        x in prop::collection::vec(-2.0f64..2.0, 2),
        y in prop::collection::vec(-2.0f64..2.0, 2),
        seed in 0u64..1000,
    ) {
        let mut s = Sampler::new(seed);
        let m1 = BilinearMultiplier::new(s.real_matrix(2)).unwrap();
        let m2 = BilinearMultiplier::new(s.real_matrix(2)).unwrap();
        let sum = BilinearMultiplier::new(m1.matrix() + m2.matrix()).unwrap();
        let lhs = omega_eval(&sum, &x, &y).unwrap();
        let rhs = omega_eval(&m1, &x, &y).unwrap() * omega_eval(&m2, &x, &y).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }
}

/// Module invariance: membership survives adding a cone point, sampled over
/// 1000 random pairs per module.
#[test]
fn module_invariance_sampling() {
    let mut s = Sampler::new(42);
    for module in [
        "orthant:2",
        "axis:-,+",
        "staircase:-1,1",
        "staircase:-2,1",
        "section:-1",
        "section:-2",
        "translate(staircase:-1,1;1,1)",
    ] {
        let desc = ModuleDescriptor::parse(module).unwrap();
        let bx = CellBox::anchored(&desc, &[12, 12]).unwrap();
        let cells = module_cells_in_box(&desc, &bx).unwrap();
        for i in 0..1000usize {
            let member = &cells[i % cells.len()];
            let p = s.cone_point(2, 5);
            let moved = cell_add(member, &p);
            assert!(
                desc.contains(&moved).unwrap(),
                "{module}: {member:?} + {p:?} left the module"
            );
        }
    }
}

/// Defect and purity values are invariant under the Translate descriptor.
#[test]
fn translate_invariance() {
    let v = vec![2i64, 1];
    let base = rep("staircase:-1,1", 1);
    let moved = {
        let inner = ModuleDescriptor::parse("staircase:-1,1").unwrap();
        let desc = ModuleDescriptor::Translate {
            inner: Box::new(inner),
            v: v.clone(),
        };
        GridRep::new(ConeSpec::new(2, 1.0).unwrap(), desc, 1).unwrap()
    };

    // Witness searches agree up to translation of the witness cell.
    let w_base = defect_witness_search(&base, &CellBox::anchored(base.module(), &[8, 8]).unwrap())
        .unwrap()
        .expect("base witness");
    let w_moved =
        defect_witness_search(&moved, &CellBox::anchored(moved.module(), &[8, 8]).unwrap())
            .unwrap()
            .expect("translated witness");
    assert_eq!(w_base.defect, w_moved.defect);
    assert_eq!(w_base.s, w_moved.s);
    assert_eq!(w_base.t, w_moved.t);
    assert_eq!(cell_add(&w_base.cell, &v), w_moved.cell);

    // Pointwise defects and purity times transport along the translation.
    let mut s = Sampler::new(5);
    for _ in 0..20 {
        let bx = CellBox::anchored(base.module(), &[5, 5]).unwrap();
        let cells = module_cells_in_box(base.module(), &bx).unwrap();
        let c = &cells[s.cone_point(1, cells.len() as i64 - 1)[0] as usize];
        let f_base = SparseState::basis(&base, c, 0).unwrap();
        let f_moved = SparseState::basis(&moved, &cell_add(c, &v), 0).unwrap();
        let st = s.cone_point(1, 3)[0] + 1;
        let tt = s.cone_point(1, 3)[0] + 1;
        let d_base = commutation_defect(&base, &[st, 0], &[0, tt], &f_base).unwrap();
        let d_moved = commutation_defect(&moved, &[st, 0], &[0, tt], &f_moved).unwrap();
        assert_eq!(d_base, d_moved);

        let p_base = purity_t0(&base, &f_base, &[1, 1], 30).unwrap();
        let p_moved = purity_t0(&moved, &f_moved, &[1, 1], 30).unwrap();
        assert_eq!(p_base, p_moved);
    }
}
