//! Exact calculus on the symmetric Fock space Γ(K) via finite linear
//! combinations of exponential vectors.
//!
//! Every operator used here has a closed-form action on exponential vectors:
//!
//!   ⟨e(u), e(v)⟩ = e^{⟨u|v⟩}
//!   W(u) e(v)    = e^{−‖u‖²/2 − ⟨u|v⟩} e(u+v)
//!   Γ(L) e(v)    = e(L v)
//!
//! so identities are verified without particle-number truncation. Arguments
//! are canonicalized (entries sorted by site, negligible entries dropped) and
//! deduplicated by exact equality of stored entries.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::cone::Cell;
use crate::error::{Error, Result};
use crate::isorep::{GridRep, SparseState};

/// Exponent magnitudes above this guard would overflow e^z in f64.
pub const EXPONENT_GUARD: f64 = 300.0;

/// A finite linear combination Σᵢ cᵢ e(uᵢ) of exponential vectors.
///
/// The zero vector is the empty combination; arguments within one vector are
/// pairwise distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    rep: GridRep,
    terms: Vec<(Complex64, SparseState)>,
}

/// Total order on canonicalized states, used only for term deduplication.
fn cmp_states(a: &SparseState, b: &SparseState) -> Ordering {
    let mut ita = a.entries().iter();
    let mut itb = b.entries().iter();
    loop {
        match (ita.next(), itb.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some((sa, za)), Some((sb, zb))) => {
                let ord = sa
                    .cmp(sb)
                    .then_with(|| za.re.total_cmp(&zb.re))
                    .then_with(|| za.im.total_cmp(&zb.im));
                if ord != Ordering::Equal {
                    return ord;
                }
            }
        }
    }
}

impl FockVector {
    /// The zero vector of Γ(K).
    pub fn zero(rep: &GridRep) -> Self {
        FockVector {
            rep: rep.clone(),
            terms: Vec::new(),
        }
    }

    /// The vacuum e(0).
    pub fn vacuum(rep: &GridRep) -> Self {
        FockVector::exponential(SparseState::zero(rep))
    }

    /// A single exponential vector e(u).
    pub fn exponential(argument: SparseState) -> Self {
        FockVector {
            rep: argument.rep().clone(),
            terms: vec![(Complex64::new(1.0, 0.0), argument)],
        }
    }

    /// Builds a combination, merging duplicate arguments and dropping terms
    /// whose coefficients cancel exactly.
    pub fn from_terms(rep: &GridRep, terms: Vec<(Complex64, SparseState)>) -> Result<Self> {
        for (_, arg) in &terms {
            if arg.rep() != rep {
                return Err(Error::SpaceMismatch);
            }
        }
        let mut v = FockVector {
            rep: rep.clone(),
            terms,
        };
        v.canonicalize();
        Ok(v)
    }

    fn canonicalize(&mut self) {
        self.terms.sort_by(|(_, a), (_, b)| cmp_states(a, b));
        let mut merged: Vec<(Complex64, SparseState)> = Vec::with_capacity(self.terms.len());
        for (c, arg) in self.terms.drain(..) {
            match merged.last_mut() {
                Some((c0, arg0)) if cmp_states(arg0, &arg) == Ordering::Equal => *c0 += c,
                _ => merged.push((c, arg)),
            }
        }
        merged.retain(|(c, _)| *c != Complex64::ZERO);
        self.terms = merged;
    }

    pub fn rep(&self) -> &GridRep {
        &self.rep
    }

    pub fn terms(&self) -> &[(Complex64, SparseState)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, z: Complex64) -> FockVector {
        let mut out = self.clone();
        for (c, _) in &mut out.terms {
            *c *= z;
        }
        out.terms.retain(|(c, _)| *c != Complex64::ZERO);
        out
    }

    pub fn add(&self, other: &FockVector) -> Result<FockVector> {
        if self.rep != other.rep {
            return Err(Error::SpaceMismatch);
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FockVector::from_terms(&self.rep, terms)
    }

    pub fn sub(&self, other: &FockVector) -> Result<FockVector> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// ‖ψ‖² via the Gram formula, clamped at zero against rounding.
    pub fn norm_sq(&self) -> Result<f64> {
        Ok(fock_inner(self, self)?.re.max(0.0))
    }

    pub fn norm(&self) -> Result<f64> {
        Ok(self.norm_sq()?.sqrt())
    }
}

/// ⟨e(u), e(v)⟩ = e^{⟨u|v⟩}, antilinear in the first slot.
pub fn exp_inner(u: &SparseState, v: &SparseState) -> Result<Complex64> {
    let z = u.inner(v)?;
    if z.norm() > EXPONENT_GUARD {
        return Err(Error::ExponentOverflow {
            magnitude: z.norm(),
        });
    }
    Ok(z.exp())
}

/// Bilinear extension of `exp_inner` over term lists.
pub fn fock_inner(psi: &FockVector, phi: &FockVector) -> Result<Complex64> {
    if psi.rep != phi.rep {
        return Err(Error::SpaceMismatch);
    }
    let mut acc = Complex64::ZERO;
    for (a, u) in &psi.terms {
        for (b, v) in &phi.terms {
            acc += a.conj() * b * exp_inner(u, v)?;
        }
    }
    Ok(acc)
}

/// W(u)ψ, applied termwise: e(v) ↦ e^{−‖u‖²/2 − ⟨u|v⟩} e(u+v).
pub fn weyl_apply(u: &SparseState, psi: &FockVector) -> Result<FockVector> {
    if u.rep() != &psi.rep {
        return Err(Error::SpaceMismatch);
    }
    let half_norm_sq = Complex64::new(0.5 * u.norm_sq(), 0.0);
    let mut terms = Vec::with_capacity(psi.terms.len());
    for (c, v) in &psi.terms {
        let exponent = -half_norm_sq - u.inner(v)?;
        if exponent.norm() > EXPONENT_GUARD {
            return Err(Error::ExponentOverflow {
                magnitude: exponent.norm(),
            });
        }
        terms.push((c * exponent.exp(), u.add(v)?));
    }
    FockVector::from_terms(&psi.rep, terms)
}

/// Γ(L)ψ for a map L preserving inner products on the active arguments:
/// e(v) ↦ e(L v), coefficients unchanged.
///
/// The isometry requirement is checked pairwise on the arguments of ψ to
/// 1e−12; failures return `NotIsometricOnSupport`.
pub fn gamma_apply<F>(map: F, psi: &FockVector) -> Result<FockVector>
where
    F: Fn(&SparseState) -> SparseState,
{
    let images: Vec<SparseState> = psi.terms.iter().map(|(_, v)| map(v)).collect();
    for i in 0..images.len() {
        for j in i..images.len() {
            let before = psi.terms[i].1.inner(&psi.terms[j].1)?;
            let after = images[i].inner(&images[j])?;
            if (before - after).norm() > 1e-12 {
                return Err(Error::NotIsometricOnSupport);
            }
        }
    }
    let rep = images
        .first()
        .map(|s| s.rep().clone())
        .unwrap_or_else(|| psi.rep.clone());
    let terms = psi
        .terms
        .iter()
        .zip(images)
        .map(|((c, _), img)| (*c, img))
        .collect();
    FockVector::from_terms(&rep, terms)
}

/// A vector of Γ(K₁ ⊕ K₂) written in the split form Σᵢ cᵢ e(aᵢ) ⊗ e(bᵢ).
#[derive(Debug, Clone)]
pub struct SplitFockVector {
    pub terms: Vec<(Complex64, SparseState, SparseState)>,
}

impl SplitFockVector {
    /// Product-form inner product Σᵢⱼ c̄ᵢdⱼ ⟨e(aᵢ),e(aⱼ)⟩⟨e(bᵢ),e(bⱼ)⟩.
    pub fn inner(&self, other: &SplitFockVector) -> Result<Complex64> {
        let mut acc = Complex64::ZERO;
        for (c, a1, b1) in &self.terms {
            for (d, a2, b2) in &other.terms {
                acc += c.conj() * d * exp_inner(a1, a2)? * exp_inner(b1, b2)?;
            }
        }
        Ok(acc)
    }
}

/// Identifies Γ(K₁ ⊕ K₂) with Γ(K₁) ⊗ Γ(K₂): e(w) ↦ e(w|₁) ⊗ e(w|₂).
///
/// `first` and `second` declare the partition of cells; a support cell that
/// belongs to neither (or both) is a `BadPartition`.
pub fn tensor_split(
    psi: &FockVector,
    first: &BTreeSet<Cell>,
    second: &BTreeSet<Cell>,
) -> Result<SplitFockVector> {
    let mut terms = Vec::with_capacity(psi.terms.len());
    for (c, w) in &psi.terms {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (site, z) in w.entries() {
            let in_first = first.contains(&site.0);
            let in_second = second.contains(&site.0);
            match (in_first, in_second) {
                (true, false) => left.push((site.clone(), *z)),
                (false, true) => right.push((site.clone(), *z)),
                _ => return Err(Error::BadPartition),
            }
        }
        terms.push((
            *c,
            SparseState::from_entries(&psi.rep, left)?,
            SparseState::from_entries(&psi.rep, right)?,
        ));
    }
    Ok(SplitFockVector { terms })
}

/// max over the test set of ‖(W(u)W(v) − e^{−i Im⟨u|v⟩} W(u+v))ψ‖ / max(‖ψ‖, 1).
pub fn ccr_residual(u: &SparseState, v: &SparseState, testset: &[FockVector]) -> Result<f64> {
    let phase = Complex64::new(0.0, -u.inner(v)?.im).exp();
    let uv = u.add(v)?;
    let mut worst: f64 = 0.0;
    for psi in testset {
        let lhs = weyl_apply(u, &weyl_apply(v, psi)?)?;
        let rhs = weyl_apply(&uv, psi)?.scale(phase);
        let defect = residual_norm(&lhs, &rhs)?;
        worst = worst.max(defect / psi.norm()?.max(1.0));
    }
    Ok(worst)
}

/// e^z − 1, accurate for small |z|.
fn cexpm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        z + z * z * 0.5 + z * z * z / 6.0
    } else {
        z.exp() - Complex64::new(1.0, 0.0)
    }
}

/// ‖a − b‖, evaluated without the catastrophic cancellation of the plain
/// Gram formula when a and b agree to rounding error.
///
/// When the two vectors have equally many terms and the paired arguments are
/// close, each pairwise difference cᵢe(Aᵢ) − c′ᵢe(A′ᵢ) contributes through
/// the expansion in δᵢ = A′ᵢ − Aᵢ and δcᵢ = c′ᵢ − cᵢ,
///
///   ⟨dᵢ|dⱼ⟩ = c̄ᵢcⱼ e^{⟨Aᵢ|Aⱼ⟩} ((1−P)(1−Q) + PQ(e^{⟨δᵢ|δⱼ⟩}−1)),
///   P = (1+ᾱᵢ)e^{⟨δᵢ|Aⱼ⟩},  Q = (1+βⱼ)e^{⟨Aᵢ|δⱼ⟩},
///   αᵢ = δcᵢ/cᵢ,  βⱼ = δcⱼ/cⱼ,
///
/// with 1−P and 1−Q expanded through expm1 so the ~1e−16-level defects
/// survive. For vectors that do not pair up (genuinely different supports or
/// term counts) the plain difference norm is used; there the defect is large
/// and Gram noise is irrelevant.
pub fn residual_norm(a: &FockVector, b: &FockVector) -> Result<f64> {
    if a.rep != b.rep {
        return Err(Error::SpaceMismatch);
    }
    if a.terms.len() != b.terms.len() || a.terms.is_empty() {
        return a.sub(b)?.norm();
    }
    let one = Complex64::new(1.0, 0.0);
    let mut pairs = Vec::with_capacity(a.terms.len());
    for ((c1, a1), (c2, a2)) in a.terms.iter().zip(&b.terms) {
        let delta = a2.sub(a1)?;
        if delta.norm() > 1e-3 * (1.0 + a1.norm()) {
            return a.sub(b)?.norm();
        }
        // Canonicalized terms have nonzero coefficients.
        let alpha = (c2 - c1) / c1;
        pairs.push((*c1, a1, alpha, delta));
    }
    let mut acc = Complex64::ZERO;
    for (ci, ai, alpha_i, delta_i) in &pairs {
        for (cj, aj, beta_j, delta_j) in &pairs {
            let s = ai.inner(aj)?;
            if s.norm() > EXPONENT_GUARD {
                return Err(Error::ExponentOverflow {
                    magnitude: s.norm(),
                });
            }
            let v = delta_i.inner(aj)?;
            let u = ai.inner(delta_j)?;
            let w = delta_i.inner(delta_j)?;
            let alpha_bar = alpha_i.conj();
            let one_minus_p = -cexpm1(v) - alpha_bar * (one + v);
            let one_minus_q = -cexpm1(u) - beta_j * (one + u);
            let p = (one + alpha_bar) * v.exp();
            let q = (one + beta_j) * u.exp();
            let bracket = one_minus_p * one_minus_q + p * q * cexpm1(w);
            acc += ci.conj() * cj * s.exp() * bracket;
        }
    }
    Ok(acc.re.max(0.0).sqrt())
}
