//! The `(0, q)` identity `Λ∂α = i∂̄*α + i[Λ, ∂̄*]Lα`, the companion identity
//! `Λμα = −iμ̄*α − i[Λ, μ̄*]Lα` on `(0, 2)`-forms, and the zeroth-order
//! character of the commutators that appear in them.

use rand::Rng;

use crate::calculus::{adjoint_op, delta, torsion_taubar, DPart, Differential, PURITY_RTOL};
use crate::error::{Error, Result};
use crate::form::{FormAtPoint, JetForm};
use crate::geometry::Fiber;
use crate::ring::{Coeff, C64};
use crate::sampling::{random_form, scaled_constant_germ};

use super::residual::{Check, Comparison, Indices};
use super::theorem::{
    conjugated_star, dstar_lambda_commutator, lambda_d_parts, theorem_sides, Mutation,
};

/// The uncorrected identity must miss by at least this relative amount on the
/// instance used to refute it.
pub const REFUTATION_MIN_REL: f64 = 1e-3;

const I: C64 = C64::new(0.0, 1.0);

fn require_0q(fiber: &Fiber, alpha: &JetForm, q: usize) -> Result<()> {
    let ops = fiber.jet_for(alpha)?;
    let residual = alpha.sub(&ops.bigrade_project(alpha, 0, q)).max_abs();
    if residual > PURITY_RTOL * alpha.max_abs() {
        return Err(Error::NotPureBidegree { p: 0, q, residual });
    }
    Ok(())
}

/// `δ̄*` for the component `part` (so `part = DelBar` gives `∂̄* = −⋆∂⋆`).
fn adjoint(fiber: &Fiber, part: DPart, a: &JetForm) -> Result<FormAtPoint> {
    adjoint_op(fiber, Differential::Part(part), a)
}

/// `[Λ, δ̄*] b = Λδ̄*b − δ̄*Λb` at the point.
pub fn lambda_adjoint_commutator(fiber: &Fiber, part: DPart, b: &JetForm) -> Result<FormAtPoint> {
    let ops = fiber.jet_for(b)?;
    let first = fiber.point().lambda(&adjoint(fiber, part, b)?);
    let second = adjoint(fiber, part, &ops.lambda(b))?;
    Ok(first.sub(&second))
}

/// `X − Π^{0,q−1}X − Π^{1,q−2}X`: the part of `X` outside the two bidegrees the
/// `(0, q)` bookkeeping allows.
fn outside_allowed(fiber: &Fiber, x: &FormAtPoint, q: usize) -> FormAtPoint {
    let pt = fiber.point();
    let mut rest = x.sub(&pt.bigrade_project(x, 0, q - 1));
    if q >= 2 {
        rest = rest.sub(&pt.bigrade_project(x, 1, q - 2));
    }
    rest
}

/// Residuals of the `(0, q)` identity and of the three expansions its proof
/// goes through, for a germ `alpha` of pure bidegree `(0, q)`, `1 ≤ q ≤ n`.
pub fn verify_prop_0q(fiber: &Fiber, alpha: &JetForm, q: usize) -> Result<Vec<Check>> {
    let n = fiber.n();
    if q == 0 || q > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ q ≤ n (q={q}, n={n})"
        )));
    }
    require_0q(fiber, alpha, q)?;
    let ops = fiber.jet_for(alpha)?;
    let pt = fiber.point();
    let idx = Indices::pq(0, q);
    let mut out = Vec::new();
    let mut push = |name: &str, c: Comparison| {
        let id = if name.is_empty() {
            "prop_0q".to_string()
        } else {
            format!("prop_0q.{name}")
        };
        out.push(Check::holds(id, idx, c));
    };

    let la = ops.lefschetz_l(alpha);
    let lhs = pt.lambda(&delta(fiber, alpha, DPart::Del)?);
    let dbar_star = adjoint(fiber, DPart::DelBar, alpha)?;
    let comm_dbar = lambda_adjoint_commutator(fiber, DPart::DelBar, &la)?;
    let rhs = dbar_star.add(&comm_dbar).scale(I);
    push("", Comparison::of(pt, &lhs, &rhs));

    // [Λ,d]α = Λdα = Λ(∂ + μ)α
    let (lambda_d, d_lambda) = lambda_d_parts(fiber, alpha)?;
    let del_mu = delta(fiber, alpha, DPart::Del)?.add(&delta(fiber, alpha, DPart::Mu)?);
    push(
        "lambda_d",
        Comparison::of(pt, &lambda_d.sub(&d_lambda), &pt.lambda(&del_mu)),
    );

    // ⋆𝕀⁻¹d𝕀⋆α = i(∂̄* − μ̄*)α
    let mubar_star = adjoint(fiber, DPart::MuBar, alpha)?;
    let star_conj = conjugated_star(fiber, alpha)?;
    push(
        "conjugated_star",
        Comparison::of(pt, &star_conj, &dbar_star.sub(&mubar_star).scale(I)),
    );

    // 𝕀⁻¹[d*,Λ]𝕀Lα = i[Λ, ∂̄* − μ̄*]Lα
    let dstar_term = pt.apply_i_inv(&dstar_lambda_commutator(fiber, &ops.apply_i(&la))?);
    let comm_mubar = lambda_adjoint_commutator(fiber, DPart::MuBar, &la)?;
    push(
        "dstar_lambda",
        Comparison::of(pt, &dstar_term, &comm_dbar.sub(&comm_mubar).scale(I)),
    );

    // the identity at j = 0, split by bidegree
    let t = theorem_sides(fiber, alpha, q, 0, Mutation::None)?;
    let commutator = t.commutator();
    let balanced_rhs = t.conjugated_star.add(&t.rhs());
    let part = |x: &FormAtPoint, p: usize, qq: usize| pt.bigrade_project(x, p, qq);
    push(
        "theorem_part_0_q-1",
        Comparison::of(
            pt,
            &part(&commutator, 0, q - 1),
            &part(&balanced_rhs, 0, q - 1),
        ),
    );
    if q >= 2 {
        push(
            "theorem_part_1_q-2",
            Comparison::of(
                pt,
                &part(&commutator, 1, q - 2),
                &part(&balanced_rhs, 1, q - 2),
            ),
        );
    }
    let mut worst: Option<Comparison> = None;
    for x in [
        &commutator,
        &t.conjugated_star,
        &t.dstar_lambda_term,
        &t.f_sum,
    ] {
        let c = Comparison::vanishing(pt.norm(x), pt.norm(&outside_allowed(fiber, x, q)));
        worst = Some(worst.map_or(c, |w| w.worst(c)));
    }
    if let Some(w) = worst {
        push("term_bidegrees", w);
    }
    if q >= 2 {
        let f2 = &t.f_sum;
        push("f2_bidegree", Comparison::of(pt, f2, &part(f2, 1, q - 2)));
    }
    Ok(out)
}

/// `Λμα = −iμ̄*α − i[Λ, μ̄*]Lα` for a germ `alpha` of pure bidegree `(0, 2)`.
pub fn verify_mu_identity(fiber: &Fiber, alpha: &JetForm) -> Result<Check> {
    if fiber.n() < 2 {
        return Err(Error::InvalidParameter("(0,2)-forms need n ≥ 2".into()));
    }
    require_0q(fiber, alpha, 2)?;
    let ops = fiber.jet_for(alpha)?;
    let pt = fiber.point();
    let lhs = pt.lambda(&delta(fiber, alpha, DPart::Mu)?);
    let mubar_star = adjoint(fiber, DPart::MuBar, alpha)?;
    let comm = lambda_adjoint_commutator(fiber, DPart::MuBar, &ops.lefschetz_l(alpha))?;
    let rhs = mubar_star.add(&comm).scale(-I);
    Ok(Check::holds(
        "mu_identity",
        Indices::pq(0, 2),
        Comparison::of(pt, &lhs, &rhs),
    ))
}

/// The identity `[Λ, μ]α = −iμ̄*α` without the `[Λ, μ̄*]L` correction, as a
/// check that passes when the two sides differ by at least
/// [`REFUTATION_MIN_REL`].
pub fn uncorrected_mu_gap(fiber: &Fiber, alpha: &JetForm) -> Result<Check> {
    require_0q(fiber, alpha, 2)?;
    let ops = fiber.jet_for(alpha)?;
    let pt = fiber.point();
    let lambda_mu = pt.lambda(&delta(fiber, alpha, DPart::Mu)?);
    let mu_lambda = delta(fiber, &ops.lambda(alpha), DPart::Mu)?;
    let rhs = adjoint(fiber, DPart::MuBar, alpha)?.scale(-I);
    let c = Comparison::of(pt, &lambda_mu.sub(&mu_lambda), &rhs);
    Ok(Check::refuted(
        "mu_identity.uncorrected_refuted",
        Indices::pq(0, 2),
        c,
        REFUTATION_MIN_REL,
    ))
}

/// `T(f·a) = f(0)·T(a)` at the point for constant forms `a` and a random
/// function germ `f`, for the zeroth-order operators `T = [Λ, ∂̄*]` and
/// `τ̄ = [Λ, [∂̄, L]]`; one check per degree.
pub fn zeroth_order_checks(fiber: &Fiber, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let pt = fiber.point();
    let dim = fiber.dim();
    let shape = fiber.shape(fiber.structure().order());
    let mut out = Vec::new();
    for k in 0..=dim {
        let a = random_form(rng, dim, k);
        let (f, fa) = scaled_constant_germ(rng, &a, shape);
        let constant = JetForm::constant_from(&a, shape);
        let f0 = f.value();
        let t_fa = lambda_adjoint_commutator(fiber, DPart::DelBar, &fa)?;
        let t_a = lambda_adjoint_commutator(fiber, DPart::DelBar, &constant)?.scale(f0);
        out.push(Check::holds(
            "zeroth_order.lambda_dbar_star",
            Indices::k(k),
            Comparison::of(pt, &t_fa, &t_a),
        ));
        let tau_fa = torsion_taubar(fiber, &fa)?;
        let tau_a = torsion_taubar(fiber, &constant)?.scale(f0);
        out.push(Check::holds(
            "zeroth_order.torsion",
            Indices::k(k),
            Comparison::of(pt, &tau_fa, &tau_a),
        ));
    }
    Ok(out)
}
