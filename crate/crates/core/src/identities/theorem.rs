//! Both sides of the almost Hermitian `[Λ, d]` identity, term by term, and the
//! intermediate displays of its derivation.
//!
//! For `α ∈ P^k` (primitive as a germ) and `η = L^j α`:
//!
//! ```text
//! [Λ,d]η − ⋆𝕀⁻¹d𝕀⋆η = 1/(j+1) 𝕀⁻¹[d*,Λ]𝕀 L^{j+1}α + jΛ[d,L]L^{j−1}α
//!                    + j(j−1)(k−n+j−1)[d,L]L^{j−2}α + Σ_{r≥2} f_{n,k,j}(r) L^{j+r−1}α_r
//! ```
//!
//! with `dα = Σ_r L^r α_r` the Lefschetz decomposition of `dα` at the point.

use serde::{Deserialize, Serialize};

use crate::calculus::{adjoint_op, commutator_dl, exterior_d, Differential};
use crate::error::{Error, Result};
use crate::exterior::{FiberOps, PrimitiveDecomposition};
use crate::form::{Form, FormAtPoint, JetForm};
use crate::geometry::Fiber;
use crate::ring::C64;

use super::coefficients::{f_coeff_f64, factorial_ratio, sign};
use super::residual::{Check, Comparison, Indices};

/// Bound on `|Λα| / max(1, |α|)` for a germ to count as primitive.
pub const PRIMITIVE_RTOL: f64 = 1e-10;

/// Deliberate defects used to show that the harness notices a wrong sign.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    #[default]
    None,
    /// Flip the sign of the `[d*, Λ]` term on the right-hand side.
    FlipDStarLambda,
}

/// Every term of the identity, evaluated at the base point.
#[derive(Clone, Debug)]
pub struct TheoremTerms {
    pub n: usize,
    pub k: usize,
    pub j: usize,
    /// `Λ d η`
    pub lambda_d: FormAtPoint,
    /// `d Λ η`
    pub d_lambda: FormAtPoint,
    /// `⋆𝕀⁻¹d𝕀⋆η`
    pub conjugated_star: FormAtPoint,
    /// `1/(j+1) 𝕀⁻¹[d*,Λ]𝕀 L^{j+1}α`
    pub dstar_lambda_term: FormAtPoint,
    /// `j Λ[d,L]L^{j−1}α`
    pub lambda_dl_term: FormAtPoint,
    /// `j(j−1)(k−n+j−1) [d,L]L^{j−2}α`
    pub dl_term: FormAtPoint,
    /// `Σ_{r≥2} f_{n,k,j}(r) L^{j+r−1}α_r`
    pub f_sum: FormAtPoint,
    /// Lefschetz decomposition of `dα` at the point.
    pub d_alpha: PrimitiveDecomposition<C64>,
    pub mutation: Mutation,
}

impl TheoremTerms {
    /// `[Λ, d]η = Λdη − dΛη`.
    pub fn commutator(&self) -> FormAtPoint {
        self.lambda_d.sub(&self.d_lambda)
    }

    /// `[Λ,d]η − ⋆𝕀⁻¹d𝕀⋆η`.
    pub fn lhs(&self) -> FormAtPoint {
        self.commutator().sub(&self.conjugated_star)
    }

    /// The four right-hand terms (with the mutation applied, if any).
    pub fn rhs(&self) -> FormAtPoint {
        let dstar = match self.mutation {
            Mutation::None => self.dstar_lambda_term.clone(),
            Mutation::FlipDStarLambda => self.dstar_lambda_term.scale_real(-1.0),
        };
        dstar
            .add(&self.lambda_dl_term)
            .add(&self.dl_term)
            .add(&self.f_sum)
    }

    /// The identity in balanced form `[Λ,d]η = ⋆𝕀⁻¹d𝕀⋆η + rhs`, so that the
    /// relative residual stays meaningful when both sides of the difference
    /// form vanish (the Kähler case).
    pub fn check(&self, ops: &FiberOps<C64>) -> Check {
        let rhs = self.conjugated_star.add(&self.rhs());
        Check::holds(
            "theorem",
            Indices::kj(self.k, self.j),
            Comparison::of(ops, &self.commutator(), &rhs),
        )
    }

    /// `α_r` of `dα` (zero when absent).
    pub fn alpha_r(&self, r: usize) -> FormAtPoint {
        self.d_alpha.component(r, 2 * self.n, ())
    }

    /// Largest `r` with a possibly nonzero `α_r`.
    pub fn r_max(&self) -> usize {
        self.k.div_ceil(2)
    }
}

/// `L^e a`, zero for negative `e`.
pub fn l_pow_signed(ops: &FiberOps<C64>, a: &FormAtPoint, e: i64) -> FormAtPoint {
    if e < 0 {
        Form::zero(ops.dim(), ())
    } else {
        ops.l_pow(a, e as usize)
    }
}

/// Fails unless `alpha` is homogeneous of degree `k` and `Λα = 0` in every jet
/// slot.
pub fn check_primitive_germ(fiber: &Fiber, alpha: &JetForm, k: usize) -> Result<()> {
    let ops = fiber.jet_for(alpha)?;
    let scale = alpha.max_abs().max(1.0);
    if alpha.sub(&alpha.degree_part(k)).max_abs() > PRIMITIVE_RTOL * scale {
        return Err(Error::NotHomogeneous);
    }
    let residual = ops.lambda(alpha).max_abs();
    if residual > PRIMITIVE_RTOL * scale {
        return Err(Error::NotPrimitive { residual });
    }
    Ok(())
}

/// `[d*, Λ] b = d*Λb − Λd*b` at the point (`|d*||Λ|` is even).
pub fn dstar_lambda_commutator(fiber: &Fiber, b: &JetForm) -> Result<FormAtPoint> {
    let ops = fiber.jet_for(b)?;
    let first = adjoint_op(fiber, Differential::D, &ops.lambda(b))?;
    let second = fiber
        .point()
        .lambda(&adjoint_op(fiber, Differential::D, b)?);
    Ok(first.sub(&second))
}

/// `⋆𝕀⁻¹ d 𝕀⋆ b` at the point.
pub fn conjugated_star(fiber: &Fiber, b: &JetForm) -> Result<FormAtPoint> {
    let ops = fiber.jet_for(b)?;
    let pt = fiber.point();
    let inner = exterior_d(&ops.apply_i(&ops.hodge_star(b)))?.values();
    Ok(pt.hodge_star(&pt.apply_i_inv(&inner)))
}

/// `[Λ, d] b` at the point, with its two halves.
pub fn lambda_d_parts(fiber: &Fiber, b: &JetForm) -> Result<(FormAtPoint, FormAtPoint)> {
    let ops = fiber.jet_for(b)?;
    let lambda_d = fiber.point().lambda(&exterior_d(b)?.values());
    let d_lambda = exterior_d(&ops.lambda(b))?.values();
    Ok((lambda_d, d_lambda))
}

/// Evaluates every term of the identity for the primitive germ `alpha ∈ P^k`
/// and `0 ≤ j ≤ n − k`.
pub fn theorem_sides(
    fiber: &Fiber,
    alpha: &JetForm,
    k: usize,
    j: usize,
    mutation: Mutation,
) -> Result<TheoremTerms> {
    let n = fiber.n();
    if k > n || j > n - k {
        return Err(Error::InvalidParameter(format!(
            "need k ≤ n and j ≤ n − k (n={n}, k={k}, j={j})"
        )));
    }
    check_primitive_germ(fiber, alpha, k)?;
    let ops = fiber.jet_for(alpha)?;
    let pt = fiber.point();
    let eta = ops.l_pow(alpha, j);

    let (lambda_d, d_lambda) = lambda_d_parts(fiber, &eta)?;
    let conjugated = conjugated_star(fiber, &eta)?;

    let lifted = ops.apply_i(&ops.l_pow(alpha, j + 1));
    let dstar_lambda_term = pt
        .apply_i_inv(&dstar_lambda_commutator(fiber, &lifted)?)
        .scale_real(1.0 / (j as f64 + 1.0));

    let a0 = alpha.values();
    let (ji, ki, ni) = (j as i64, k as i64, n as i64);
    let lambda_dl_term = pt
        .lambda(&commutator_dl(fiber, &l_pow_signed(pt, &a0, ji - 1)))
        .scale_real(j as f64);
    let dl_coeff = (ji * (ji - 1) * (ki - ni + ji - 1)) as f64;
    let dl_term = commutator_dl(fiber, &l_pow_signed(pt, &a0, ji - 2)).scale_real(dl_coeff);

    let d_alpha = pt.lefschetz_decompose(&exterior_d(alpha)?.values(), k + 1)?;
    let mut terms = TheoremTerms {
        n,
        k,
        j,
        lambda_d,
        d_lambda,
        conjugated_star: conjugated,
        dstar_lambda_term,
        lambda_dl_term,
        dl_term,
        f_sum: Form::zero(fiber.dim(), ()),
        d_alpha,
        mutation,
    };
    let mut f_sum = Form::zero(fiber.dim(), ());
    for r in 2..=terms.r_max() {
        let f = f_coeff_f64(n, k, j, r)?;
        f_sum = f_sum.add(&pt.l_pow(&terms.alpha_r(r), j + r - 1).scale_real(f));
    }
    terms.f_sum = f_sum;
    Ok(terms)
}

/// `Σ_r c(r) L^{j+r−1} α_r` over every `r` of the decomposition of `dα`.
fn alpha_sum(pt: &FiberOps<C64>, terms: &TheoremTerms, c: impl Fn(i64) -> f64) -> FormAtPoint {
    let mut out = Form::zero(pt.dim(), ());
    for r in 0..=terms.r_max() {
        let coeff = c(r as i64);
        if coeff == 0.0 {
            continue;
        }
        out = out.add(
            &l_pow_signed(pt, &terms.alpha_r(r), terms.j as i64 + r as i64 - 1).scale_real(coeff),
        );
    }
    out
}

/// Residuals of the intermediate displays of the derivation, for the same
/// `alpha` and `j` as `terms`:
///
/// - `display.star_conj`: `⋆𝕀⁻¹d𝕀⋆η = c ⋆𝕀⁻¹ d L^{n−k−j}α`
/// - `eq2`: the split of the above through `[d, L^m] = m[d,L]L^{m−1}`
/// - `eq2.first_summand`, `eq2.second_summand`: their simplifications
/// - `eq3`: `⋆𝕀⁻¹d𝕀⋆η = Σ_r (−1)^{r+1}(…)L^{j+r−1}α_r − 1/(j+1) 𝕀⁻¹[d*,Λ]𝕀L^{j+1}α`
/// - `lambda_d_expansion`, `d_lambda_expansion`, `commutator_expansion`
/// - `r_sum_from_zero`: the right-hand side with the `r = 0, 1` terms included
pub fn verify_proof_displays(
    fiber: &Fiber,
    alpha: &JetForm,
    terms: &TheoremTerms,
) -> Result<Vec<Check>> {
    let ops = fiber.jet_for(alpha)?;
    let pt = fiber.point();
    let (n, k, j) = (terms.n as i64, terms.k as i64, terms.j as i64);
    let m = n - k - j;
    let idx = Indices::kj(terms.k, terms.j);
    let a0 = alpha.values();
    let mut out = Vec::new();
    let mut push = |name: &str, lhs: &FormAtPoint, rhs: &FormAtPoint| {
        out.push(Check::holds(
            format!("theorem.{name}"),
            idx,
            Comparison::of(pt, lhs, rhs),
        ));
    };

    let s = sign(k * (k + 1) / 2 + k);
    let c1 = s * factorial_ratio(j, m);
    let c2 = s * factorial_ratio(j, m - 1);
    let star_i_inv = |a: &FormAtPoint| pt.hodge_star(&pt.apply_i_inv(a));

    // ⋆𝕀⁻¹ d L^m α with d applied to the germ L^m α
    let d_lm = exterior_d(&ops.l_pow(alpha, m as usize))?.values();
    push(
        "display.star_conj",
        &terms.conjugated_star,
        &star_i_inv(&d_lm).scale_real(c1),
    );

    let d_alpha = exterior_d(alpha)?.values();
    let first = star_i_inv(&pt.l_pow(&d_alpha, m as usize)).scale_real(c1);
    let second = star_i_inv(&commutator_dl(fiber, &l_pow_signed(pt, &a0, m - 1))).scale_real(c2);
    push("eq2", &terms.conjugated_star, &first.add(&second));

    let first_expanded = alpha_sum(pt, terms, |r| {
        sign(r + 1) * factorial_ratio(j, j + r - 1) * factorial_ratio(m + r, m)
    });
    push("eq2.first_summand", &first, &first_expanded);

    let dstar = terms.dstar_lambda_term.scale_real(-1.0);
    push("eq2.second_summand", &second, &dstar);
    push("eq3", &terms.conjugated_star, &first_expanded.add(&dstar));

    let jf = j as f64;
    let lambda_dl = &terms.lambda_dl_term;
    let lambda_d_expanded = alpha_sum(pt, terms, |r| {
        -((j + r) * (k + 1 - 2 * r - n + j + r - 1)) as f64
    })
    .add(lambda_dl);
    push("lambda_d_expansion", &terms.lambda_d, &lambda_d_expanded);

    let sl2 = (j * (k - n + j - 1)) as f64;
    let dl_raw = commutator_dl(fiber, &l_pow_signed(pt, &a0, j - 2));
    let d_lambda_expanded =
        alpha_sum(pt, terms, |_| -sl2).sub(&dl_raw.scale_real(sl2 * (jf - 1.0)));
    push("d_lambda_expansion", &terms.d_lambda, &d_lambda_expanded);

    let commutator_expanded = alpha_sum(pt, terms, |r| (r * (n - k + r) - j) as f64)
        .add(lambda_dl)
        .add(&terms.dl_term);
    push(
        "commutator_expansion",
        &terms.commutator(),
        &commutator_expanded,
    );

    // the r = 0, 1 coefficients computed from their two parts separately
    let low = alpha_sum(pt, terms, |r| {
        if r > 1 {
            return 0.0;
        }
        (r * (n - k + r) - j) as f64
            + sign(r) * factorial_ratio(j, j + r - 1) * factorial_ratio(m + r, m)
    });
    let rhs = terms.rhs();
    push("r_sum_from_zero", &rhs, &rhs.add(&low));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{preset, random_structure};
    use crate::identities::coefficients::admissible;
    use crate::identities::residual::Tolerance;
    use crate::sampling::{random_jet_form, random_primitive_germ, trial_rng};

    #[test]
    fn kahler_extras_vanish() {
        let mut rng = trial_rng(1, 0);
        for n in 1..=3 {
            let fiber = preset("flat_kahler", n).unwrap().fiber().unwrap();
            for (k, j) in admissible(n) {
                let alpha = random_primitive_germ(&fiber, &mut rng, k, 1).unwrap();
                let t = theorem_sides(&fiber, &alpha, k, j, Mutation::None).unwrap();
                for extra in [
                    &t.dstar_lambda_term,
                    &t.lambda_dl_term,
                    &t.dl_term,
                    &t.f_sum,
                ] {
                    assert!(extra.max_abs() < 1e-12);
                }
                let c = t.check(fiber.point());
                assert!(
                    c.comparison.residual_rel() < 1e-11,
                    "n {n} k {k} j {j}: {c:?}"
                );
            }
        }
    }

    #[test]
    fn generic_structures_satisfy_identity_and_displays() {
        let tol = Tolerance::default();
        let mut rng = trial_rng(2, 0);
        for seed in 0..4 {
            for n in 1..=3 {
                let fiber = random_structure(seed, n, 0.35).unwrap().fiber().unwrap();
                for (k, j) in admissible(n) {
                    let alpha = random_primitive_germ(&fiber, &mut rng, k, 1).unwrap();
                    let t = theorem_sides(&fiber, &alpha, k, j, Mutation::None).unwrap();
                    let c = t.check(fiber.point());
                    assert!(tol.accepts(&c.comparison), "n {n} k {k} j {j}: {c:?}");
                    for d in verify_proof_displays(&fiber, &alpha, &t).unwrap() {
                        assert!(tol.accepts(&d.comparison), "n {n} k {k} j {j}: {d:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn mutation_breaks_the_identity() {
        let mut rng = trial_rng(3, 0);
        let fiber = preset("generic", 3).unwrap().fiber().unwrap();
        let alpha = random_primitive_germ(&fiber, &mut rng, 1, 1).unwrap();
        let t = theorem_sides(&fiber, &alpha, 1, 1, Mutation::FlipDStarLambda).unwrap();
        assert!(t.check(fiber.point()).comparison.residual_rel() > 1e-3);
    }

    #[test]
    fn non_primitive_input_is_rejected() {
        let mut rng = trial_rng(4, 0);
        let fiber = preset("generic", 2).unwrap().fiber().unwrap();
        let a = random_jet_form(&mut rng, 2, fiber.shape(1));
        assert!(matches!(
            theorem_sides(&fiber, &a, 2, 0, Mutation::None),
            Err(Error::NotPrimitive { .. })
        ));
        assert!(theorem_sides(&fiber, &a, 2, 1, Mutation::None).is_err());
    }
}
