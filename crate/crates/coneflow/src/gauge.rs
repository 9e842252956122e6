//! Gauge cocycles of a CCR flow: U_x = e^{i⟨λ|xδ⟩} W(h_x) Γ(u_x) with
//! u_x = u E_x + (1 − E_x) for a fiberwise commutant unitary u = 1 ⊗ u0.
//!
//! The group law on parameter triples is
//!
//!   (λ, h, u)(μ, g, v) = (λ + μ − Im c(h, ug), h + ug, uv),
//!
//! where ⟨h_x|(ug)_x⟩ = ⟨xδ|c(h, ug)⟩; the operator-level product test is the
//! arbiter that the Im(c) correction is exactly right.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cocycle::{cocycle_value, pairing_c, AdditiveCocycle, COCYCLE_TOL};
use crate::cone::{cell_add, cell_sub, Cell};
use crate::error::{Error, Result};
use crate::fock::{gamma_apply, residual_norm, weyl_apply, FockVector};
use crate::isorep::{shift_adjoint_apply, shift_apply, GridRep, SparseState};

/// A gauge-cocycle parameter triple (λ, h, u0).
#[derive(Debug, Clone)]
pub struct GaugeElement {
    pub lambda: Vec<f64>,
    pub h: AdditiveCocycle,
    pub u0: DMatrix<Complex64>,
}

impl GaugeElement {
    pub fn new(lambda: Vec<f64>, h: AdditiveCocycle, u0: DMatrix<Complex64>) -> Result<Self> {
        let rep = h.rep();
        if lambda.len() != rep.d() {
            return Err(Error::DimensionMismatch {
                expected: rep.d(),
                got: lambda.len(),
            });
        }
        let k = rep.multiplicity();
        if u0.nrows() != k || u0.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: u0.nrows(),
            });
        }
        Ok(GaugeElement { lambda, h, u0 })
    }

    /// The identity element (0, 0, 1).
    pub fn identity(rep: &GridRep) -> Self {
        GaugeElement {
            lambda: vec![0.0; rep.d()],
            h: AdditiveCocycle::zero(rep),
            u0: DMatrix::identity(rep.multiplicity(), rep.multiplicity()),
        }
    }

    pub fn rep(&self) -> &GridRep {
        self.h.rep()
    }

    /// Wire form {lambda, h: inline generators, u0}: generator states as
    /// cell→[re,im] maps keyed "c1,..,cd@fiber", u0 as a nested [re,im] grid.
    pub fn to_json(&self) -> serde_json::Value {
        let generators: Vec<serde_json::Value> = self
            .h
            .generators()
            .iter()
            .map(|g| {
                let map: std::collections::BTreeMap<String, Vec<f64>> = g
                    .entries()
                    .iter()
                    .map(|((cell, fiber), z)| {
                        let key = format!(
                            "{}@{}",
                            cell.iter()
                                .map(|c| c.to_string())
                                .collect::<Vec<_>>()
                                .join(","),
                            fiber
                        );
                        (key, vec![z.re, z.im])
                    })
                    .collect();
                serde_json::json!(map)
            })
            .collect();
        let k = self.u0.nrows();
        let u0: Vec<Vec<Vec<f64>>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| vec![self.u0[(i, j)].re, self.u0[(i, j)].im])
                    .collect()
            })
            .collect();
        serde_json::json!({
            "lambda": self.lambda,
            "h": { "generators": generators },
            "u0": u0,
        })
    }

    fn phase(&self, x: &[i64]) -> Complex64 {
        let delta = self.rep().cone().delta();
        let angle: f64 = self
            .lambda
            .iter()
            .zip(x)
            .map(|(l, &xi)| l * xi as f64 * delta)
            .sum();
        Complex64::new(0.0, angle).exp()
    }
}

/// u_x v = u0·v on ker(V_x*) (cells c with c − x ∉ A), v elsewhere.
pub fn apply_u_x(g: &GaugeElement, x: &[i64], v: &SparseState) -> Result<SparseState> {
    let rep = g.rep();
    if v.rep() != rep {
        return Err(Error::SpaceMismatch);
    }
    if x.len() != rep.d() {
        return Err(Error::DimensionMismatch {
            expected: rep.d(),
            got: x.len(),
        });
    }
    let module = rep.module().clone();
    Ok(v.map_fibers_at(
        |cell| !module.contains(&cell_sub(cell, x)).unwrap_or(false),
        &g.u0,
    ))
}

/// U_x ψ = e^{i⟨λ|xδ⟩} W(h_x) Γ(u_x) ψ.
///
/// The Γ(u_x) factor goes through the second-quantization isometry check, so
/// a non-unitary u0 surfaces as `NotIsometricOnSupport`; an invalid h is
/// rejected as `NotACocycle`.
pub fn gauge_apply(g: &GaugeElement, x: &[i64], psi: &FockVector) -> Result<FockVector> {
    if g.h.defining_residual()? > COCYCLE_TOL {
        return Err(Error::NotACocycle);
    }
    gauge_apply_unchecked(g, x, psi)
}

fn gauge_apply_unchecked(g: &GaugeElement, x: &[i64], psi: &FockVector) -> Result<FockVector> {
    let h_x = cocycle_value(&g.h, x)?;
    let rotated = gamma_apply(
        |s| apply_u_x(g, x, s).expect("u_x is total on the grid"),
        psi,
    )?;
    Ok(weyl_apply(&h_x, &rotated)?.scale(g.phase(x)))
}

/// α_x(U_y)ψ in closed form: each argument w splits as E_x w ⊕ V_x V_x* w,
/// U_y acts behind V_x, and the kernel part is reattached through the
/// tensor-split identity.
fn conjugated_gauge_apply(
    g: &GaugeElement,
    y: &[i64],
    x: &[i64],
    psi: &FockVector,
) -> Result<FockVector> {
    let rep = g.rep();
    let mut terms = Vec::new();
    for (c, w) in psi.terms() {
        let compressed = shift_adjoint_apply(rep, x, w)?;
        let reembedded = shift_apply(rep, x, &compressed)?;
        let kernel_part = w.sub(&reembedded)?;
        let inner = gauge_apply_unchecked(g, y, &FockVector::exponential(compressed))?;
        for (cm, arg) in inner.terms() {
            terms.push((c * cm, kernel_part.add(&shift_apply(rep, x, arg)?)?));
        }
    }
    FockVector::from_terms(psi.rep(), terms)
}

/// max over the test set of ‖U_{x+y}ψ − U_x α_x(U_y)ψ‖, the gauge-cocycle
/// relation for the CCR flow.
pub fn cocycle_relation_residual(
    g: &GaugeElement,
    x: &[i64],
    y: &[i64],
    testset: &[FockVector],
) -> Result<f64> {
    let xy = cell_add(x, y);
    let mut worst: f64 = 0.0;
    for psi in testset {
        let direct = gauge_apply(g, &xy, psi)?;
        let threaded = gauge_apply(g, x, &conjugated_gauge_apply(g, y, x, psi)?)?;
        worst = worst.max(residual_norm(&direct, &threaded)?);
    }
    Ok(worst)
}

/// Sample points 1 and 1 + e_i, interior and spanning, for the pairing fit.
fn pairing_sample(rep: &GridRep) -> Vec<Cell> {
    let d = rep.d();
    let ones = vec![1i64; d];
    let mut xs = vec![ones.clone()];
    for i in 0..d {
        xs.push(cell_add(&ones, &rep.cone().unit_step(i)));
    }
    xs
}

/// (λ, h, u)(μ, g, v) = (λ + μ − Im c(h, ug), h + ug, uv).
pub fn gauge_product(g1: &GaugeElement, g2: &GaugeElement) -> Result<GaugeElement> {
    if g1.rep() != g2.rep() {
        return Err(Error::SpaceMismatch);
    }
    let ug = g2.h.apply_fiber_matrix(&g1.u0);
    let (c, _) = pairing_c(&g1.h, &ug, &pairing_sample(g1.rep()))?;
    let lambda = g1
        .lambda
        .iter()
        .zip(&g2.lambda)
        .zip(&c)
        .map(|((a, b), ci)| a + b - ci.im)
        .collect();
    GaugeElement::new(lambda, g1.h.add(&ug)?, &g1.u0 * &g2.u0)
}

/// The same composition with the Im(c) correction omitted; negative control
/// for the operator-level group law.
pub fn gauge_product_uncorrected(g1: &GaugeElement, g2: &GaugeElement) -> Result<GaugeElement> {
    if g1.rep() != g2.rep() {
        return Err(Error::SpaceMismatch);
    }
    let ug = g2.h.apply_fiber_matrix(&g1.u0);
    let lambda = g1
        .lambda
        .iter()
        .zip(&g2.lambda)
        .map(|(a, b)| a + b)
        .collect();
    GaugeElement::new(lambda, g1.h.add(&ug)?, &g1.u0 * &g2.u0)
}

/// g⁻¹ = (−λ, −u0* h, u0*).
pub fn gauge_inverse(g: &GaugeElement) -> Result<GaugeElement> {
    let u_adj = g.u0.adjoint();
    let h_inv =
        g.h.apply_fiber_matrix(&u_adj)
            .scale(Complex64::new(-1.0, 0.0));
    GaugeElement::new(g.lambda.iter().map(|l| -l).collect(), h_inv, u_adj)
}

/// max over sampled x and the test set of
/// ‖(g1·g2)_x ψ − g1_x (g2_x ψ)‖, using the supplied composition.
pub fn group_law_residual(
    product: &GaugeElement,
    g1: &GaugeElement,
    g2: &GaugeElement,
    xs: &[Cell],
    testset: &[FockVector],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in xs {
        for psi in testset {
            let composed = gauge_apply(g1, x, &gauge_apply(g2, x, psi)?)?;
            let direct = gauge_apply(product, x, psi)?;
            worst = worst.max(residual_norm(&direct, &composed)?);
        }
    }
    Ok(worst)
}

/// max over the test set of ‖U_x α_x(W(w)) ψ − α_x(W(w)) U_x ψ‖ with
/// α_x(W(w)) = W(V_x w): gauge operators commute with the range of α_x.
pub fn range_commutation_residual(
    g: &GaugeElement,
    x: &[i64],
    w: &SparseState,
    testset: &[FockVector],
) -> Result<f64> {
    let rep = g.rep();
    let moved = shift_apply(rep, x, w)?;
    let mut worst: f64 = 0.0;
    for psi in testset {
        let a = gauge_apply(g, x, &weyl_apply(&moved, psi)?)?;
        let b = weyl_apply(&moved, &gauge_apply(g, x, psi)?)?;
        worst = worst.max(residual_norm(&a, &b)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ConeSpec;
    use crate::isorep::ModuleDescriptor;

    fn rep(module: &str, k: usize) -> GridRep {
        let m = ModuleDescriptor::parse(module).unwrap();
        GridRep::new(ConeSpec::new(m.dim(), 1.0).unwrap(), m, k).unwrap()
    }

    fn canonical_1d(r: &GridRep) -> AdditiveCocycle {
        AdditiveCocycle::new(r, vec![SparseState::basis(r, &[0], 0).unwrap()]).unwrap()
    }

    fn scalar_u(z: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_element(1, 1, z)
    }

    #[test]
    fn u_x_examples() {
        let r = rep("orthant:1", 2);
        let mut swap = DMatrix::<Complex64>::zeros(2, 2);
        swap[(0, 1)] = Complex64::new(1.0, 0.0);
        swap[(1, 0)] = Complex64::new(1.0, 0.0);
        let g = GaugeElement::new(vec![0.0], AdditiveCocycle::zero(&r), swap).unwrap();

        let v = SparseState::basis(&r, &[0], 0).unwrap();
        // x = 0: E_0 = 0, so v is unchanged.
        assert_eq!(apply_u_x(&g, &[0], &v).unwrap(), v);
        // Cell 0 is in ker V_1*, so the fiber swaps.
        let swapped = apply_u_x(&g, &[1], &v).unwrap();
        assert_eq!(swapped, SparseState::basis(&r, &[0], 1).unwrap());
        // Cell 3 is in the range of V_1: untouched.
        let deep = SparseState::basis(&r, &[3], 0).unwrap();
        assert_eq!(apply_u_x(&g, &[1], &deep).unwrap(), deep);

        let id = GaugeElement::identity(&r);
        assert_eq!(apply_u_x(&id, &[2], &v).unwrap(), v);
    }

    #[test]
    fn gauge_apply_examples() {
        let r = rep("orthant:1", 1);
        let psi = FockVector::exponential(SparseState::basis(&r, &[1], 0).unwrap());

        let id = GaugeElement::identity(&r);
        assert_eq!(gauge_apply(&id, &[2], &psi).unwrap(), psi);

        let scalar = GaugeElement::new(
            vec![0.7],
            AdditiveCocycle::zero(&r),
            scalar_u(Complex64::new(1.0, 0.0)),
        )
        .unwrap();
        let out = gauge_apply(&scalar, &[3], &psi).unwrap();
        let expected = psi.scale(Complex64::new(0.0, 0.7 * 3.0).exp());
        assert!(out.sub(&expected).unwrap().norm().unwrap() < 1e-12);

        // Canonical cocycle on the vacuum: Weyl vector at the boundary cell.
        let g = GaugeElement::new(
            vec![0.0],
            canonical_1d(&r),
            scalar_u(Complex64::new(1.0, 0.0)),
        )
        .unwrap();
        let out = gauge_apply(&g, &[1], &FockVector::vacuum(&r)).unwrap();
        assert_eq!(out.terms().len(), 1);
        let (c, arg) = &out.terms()[0];
        assert!((c.re - (-0.5f64).exp()).abs() < 1e-12);
        assert_eq!(arg, &SparseState::basis(&r, &[0], 0).unwrap());
    }

    #[test]
    fn gauge_apply_rejects_non_unitary() {
        let r = rep("orthant:1", 1);
        let g = GaugeElement::new(
            vec![0.0],
            AdditiveCocycle::zero(&r),
            scalar_u(Complex64::new(2.0, 0.0)),
        )
        .unwrap();
        // Support on cell 0 = ker V_1*, which u_x scales by 2.
        let psi = FockVector::exponential(SparseState::basis(&r, &[0], 0).unwrap());
        assert_eq!(
            gauge_apply(&g, &[1], &psi),
            Err(Error::NotIsometricOnSupport)
        );
    }

    fn testset_1d(r: &GridRep) -> Vec<FockVector> {
        vec![
            FockVector::vacuum(r),
            FockVector::exponential(
                SparseState::from_entries(
                    r,
                    [
                        ((vec![0], 0), Complex64::new(0.5, -0.25)),
                        ((vec![2], 0), Complex64::new(-0.3, 0.4)),
                    ],
                )
                .unwrap(),
            ),
            FockVector::exponential(SparseState::basis(r, &[1], 0).unwrap())
                .scale(Complex64::new(0.0, 1.0)),
        ]
    }

    #[test]
    fn cocycle_relation_holds() {
        let r = rep("orthant:1", 1);
        let g = GaugeElement::new(
            vec![0.4],
            canonical_1d(&r).scale(Complex64::new(0.8, 0.3)),
            scalar_u(Complex64::new(0.0, 1.0)),
        )
        .unwrap();
        let res = cocycle_relation_residual(&g, &[1], &[2], &testset_1d(&r)).unwrap();
        assert!(res <= 1e-9, "residual {res}");

        let id = GaugeElement::identity(&r);
        let res = cocycle_relation_residual(&id, &[2], &[1], &testset_1d(&r)).unwrap();
        assert!(res <= 1e-12);
    }

    #[test]
    fn cocycle_relation_staircase_fiber_part() {
        let r = rep("staircase:-1,1", 2);
        let mut u0 = DMatrix::<Complex64>::zeros(2, 2);
        u0[(0, 1)] = Complex64::new(0.0, 1.0);
        u0[(1, 0)] = Complex64::new(1.0, 0.0);
        let g = GaugeElement::new(vec![0.2, -0.5], AdditiveCocycle::zero(&r), u0).unwrap();
        let testset = vec![
            FockVector::vacuum(&r),
            FockVector::exponential(
                SparseState::from_entries(
                    &r,
                    [
                        ((vec![0, 0], 0), Complex64::new(0.6, 0.1)),
                        ((vec![-1, 1], 1), Complex64::new(-0.2, 0.5)),
                    ],
                )
                .unwrap(),
            ),
        ];
        let res = cocycle_relation_residual(&g, &[1, 0], &[0, 1], &testset).unwrap();
        assert!(res <= 1e-9, "residual {res}");
    }

    #[test]
    fn group_law_and_inverse() {
        let r = rep("orthant:1", 1);
        let g1 = GaugeElement::new(
            vec![0.3],
            canonical_1d(&r).scale(Complex64::new(1.0, 0.5)),
            scalar_u(Complex64::new(0.0, 1.0)),
        )
        .unwrap();
        let g2 = GaugeElement::new(
            vec![-0.2],
            canonical_1d(&r).scale(Complex64::new(0.0, -0.7)),
            scalar_u(Complex64::new(1.0, 0.0)),
        )
        .unwrap();

        // Identity behaves neutrally.
        let id = GaugeElement::identity(&r);
        let same = gauge_product(&g1, &id).unwrap();
        assert!(
            same.h.generators()[0]
                .sub(&g1.h.generators()[0])
                .unwrap()
                .norm()
                < 1e-12
        );
        assert!((same.lambda[0] - g1.lambda[0]).abs() < 1e-12);

        // g · g⁻¹ is the identity.
        let inv = gauge_inverse(&g1).unwrap();
        let prod = gauge_product(&g1, &inv).unwrap();
        assert!(prod.lambda[0].abs() < 1e-12);
        assert!(prod.h.is_zero());
        assert!((prod.u0[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);

        // Operator-level fidelity of the corrected product.
        let xs = vec![vec![1i64], vec![2], vec![3]];
        let prod = gauge_product(&g1, &g2).unwrap();
        let res = group_law_residual(&prod, &g1, &g2, &xs, &testset_1d(&r)).unwrap();
        assert!(res <= 1e-9, "group law residual {res}");

        // Dropping the Im(c) correction breaks the law.
        let bad = gauge_product_uncorrected(&g1, &g2).unwrap();
        let res = group_law_residual(&bad, &g1, &g2, &xs, &testset_1d(&r)).unwrap();
        assert!(res > 1e-3, "negative control {res}");
    }

    #[test]
    fn associativity() {
        let r = rep("orthant:1", 1);
        let gs: Vec<GaugeElement> = [
            (0.3, Complex64::new(1.0, 0.5), Complex64::new(0.0, 1.0)),
            (-0.6, Complex64::new(0.0, -0.7), Complex64::new(1.0, 0.0)),
            (0.1, Complex64::new(0.4, 0.0), Complex64::new(0.0, -1.0)),
        ]
        .iter()
        .map(|&(l, hz, uz)| {
            GaugeElement::new(vec![l], canonical_1d(&r).scale(hz), scalar_u(uz)).unwrap()
        })
        .collect();
        let left = gauge_product(&gauge_product(&gs[0], &gs[1]).unwrap(), &gs[2]).unwrap();
        let right = gauge_product(&gs[0], &gauge_product(&gs[1], &gs[2]).unwrap()).unwrap();
        assert!((left.lambda[0] - right.lambda[0]).abs() <= 1e-12);
        assert!(
            left.h.generators()[0]
                .sub(&right.h.generators()[0])
                .unwrap()
                .norm()
                <= 1e-12
        );
        assert!((&left.u0 - &right.u0).norm() <= 1e-12);
    }

    #[test]
    fn commutes_with_range() {
        let r = rep("orthant:1", 1);
        let g = GaugeElement::new(
            vec![0.9],
            canonical_1d(&r).scale(Complex64::new(0.5, -0.5)),
            scalar_u(Complex64::new(0.0, 1.0)),
        )
        .unwrap();
        let w = SparseState::from_entries(&r, [((vec![0], 0), Complex64::new(0.4, 0.6))]).unwrap();
        let res = range_commutation_residual(&g, &[2], &w, &testset_1d(&r)).unwrap();
        assert!(res <= 1e-9, "residual {res}");
    }
}
