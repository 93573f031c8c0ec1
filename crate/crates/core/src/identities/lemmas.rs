//! The supporting identities of the exterior algebra and calculus, checked on
//! random forms for one structure.

use rand::Rng;

use crate::calculus::{
    adjoint_op, commutator_dl, conjugated_d, conjugated_d_expected, conjugation_factor, delta,
    exterior_d, DPart, Differential,
};
use crate::error::Result;
use crate::exterior::i_pow;
use crate::form::{Form, FormAtPoint};
use crate::geometry::Fiber;
use crate::sampling::{random_form, random_jet_form, random_primitive_form, random_pure_germ};

use super::coefficients::{factorial_ratio, sign};
use super::residual::{Check, Comparison, Indices};
use super::theorem::{dstar_lambda_commutator, l_pow_signed};

/// Runs every lemma check once per degree (or bidegree) on the structure of
/// `fiber`, drawing forms from `rng`.
pub fn lemma_checks(fiber: &Fiber, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    algebraic_checks(fiber, rng, &mut out)?;
    lefschetz_checks(fiber, rng, &mut out)?;
    differential_checks(fiber, rng, &mut out)?;
    bidegree_checks(fiber, rng, &mut out)?;
    Ok(out)
}

fn algebraic_checks(fiber: &Fiber, rng: &mut impl Rng, out: &mut Vec<Check>) -> Result<()> {
    let pt = fiber.point();
    let (n, dim) = (fiber.n(), fiber.dim());
    for k in 0..=dim {
        let idx = Indices::k(k);
        let a = random_form(rng, dim, k);
        let b = random_form(rng, dim, k);
        let cmp = |l: &FormAtPoint, r: &FormAtPoint| Comparison::of(pt, l, r);

        let ss = pt.hodge_star(&pt.hodge_star(&a));
        out.push(Check::holds(
            "lemma.star_squared",
            idx,
            cmp(&ss, &a.scale_real(sign(k as i64))),
        ));

        let lhs = a.wedge(&pt.hodge_star(&b.conj()))?;
        let rhs = pt.vol().scale(pt.inner_product(&a, &b));
        out.push(Check::holds(
            "lemma.star_pairing",
            idx,
            Comparison::of(pt, &lhs, &rhs),
        ));

        let sl = pt.hodge_star(&pt.lambda(&a));
        out.push(Check::holds(
            "lemma.star_lambda",
            idx,
            cmp(&sl, &pt.lefschetz_l(&pt.hodge_star(&a))),
        ));
        let sl = pt.hodge_star(&pt.lefschetz_l(&a));
        out.push(Check::holds(
            "lemma.star_l",
            idx,
            cmp(&sl, &pt.lambda(&pt.hodge_star(&a))),
        ));

        for j in 0..=n {
            let lhs = pt
                .l_pow(&pt.lambda(&a), j)
                .sub(&pt.lambda(&pt.l_pow(&a, j)));
            let (ji, ki, ni) = (j as i64, k as i64, n as i64);
            let rhs = l_pow_signed(pt, &a, ji - 1).scale_real((ji * (ki - ni + ji - 1)) as f64);
            out.push(Check::holds(
                "lemma.sl2_commutator",
                Indices::kj(k, j),
                cmp(&lhs, &rhs),
            ));
        }

        let is = pt.apply_i(&pt.hodge_star(&a));
        out.push(Check::holds(
            "lemma.i_commutes_star",
            idx,
            cmp(&is, &pt.hodge_star(&pt.apply_i(&a))),
        ));
        let il = pt.apply_i(&pt.lefschetz_l(&a));
        out.push(Check::holds(
            "lemma.i_commutes_l",
            idx,
            cmp(&il, &pt.lefschetz_l(&pt.apply_i(&a))),
        ));
    }
    // ⋆L^jα = (−1)^{k(k+1)/2} j!/(n−k−j)! L^{n−k−j}𝕀α on P^k
    for k in 0..=n {
        let alpha = random_primitive_form(pt, rng, k)?;
        for j in 0..=n - k {
            let lhs = pt.hodge_star(&pt.l_pow(&alpha, j));
            let c = sign((k * (k + 1) / 2) as i64) * factorial_ratio(j as i64, (n - k - j) as i64);
            let rhs = pt.l_pow(&pt.apply_i(&alpha), n - k - j).scale_real(c);
            out.push(Check::holds(
                "lemma.primitive_star",
                Indices::kj(k, j),
                Comparison::of(pt, &lhs, &rhs),
            ));
        }
    }
    Ok(())
}

fn lefschetz_checks(fiber: &Fiber, rng: &mut impl Rng, out: &mut Vec<Check>) -> Result<()> {
    let pt = fiber.point();
    let (n, dim) = (fiber.n(), fiber.dim());
    for k in 0..=dim {
        let a = random_form(rng, dim, k);
        let dec = pt.lefschetz_decompose(&a, k)?;
        let idx = Indices::k(k);
        out.push(Check::holds(
            "lemma.lefschetz_reconstruct",
            idx,
            Comparison::of(pt, &a, &dec.reconstruct(pt)),
        ));
        let scale = dec
            .components
            .iter()
            .map(|(_, c)| pt.norm(c))
            .fold(0.0, f64::max);
        let defect = dec
            .components
            .iter()
            .map(|(_, c)| pt.norm(&pt.lambda(c)))
            .fold(0.0, f64::max);
        out.push(Check::holds(
            "lemma.lefschetz_primitive",
            idx,
            Comparison::vanishing(scale, defect),
        ));
    }
    for p in 0..=n {
        for q in 0..=n {
            let a = pt.bigrade_project(&random_form(rng, dim, p + q), p, q);
            let dec = pt.lefschetz_decompose(&a, p + q)?;
            let mut scale: f64 = 0.0;
            let mut defect: f64 = 0.0;
            for (r, c) in &dec.components {
                scale = scale.max(pt.norm(c));
                let pure = if *r <= p.min(q) {
                    pt.bigrade_project(c, p - r, q - r)
                } else {
                    Form::zero(dim, ())
                };
                defect = defect.max(pt.norm(&c.sub(&pure)));
            }
            out.push(Check::holds(
                "lemma.lefschetz_bidegree",
                Indices::pq(p, q),
                Comparison::vanishing(scale, defect),
            ));
        }
    }
    Ok(())
}

fn differential_checks(fiber: &Fiber, rng: &mut impl Rng, out: &mut Vec<Check>) -> Result<()> {
    let pt = fiber.point();
    let (n, dim) = (fiber.n(), fiber.dim());
    let order = fiber.structure().order();
    let shape = fiber.shape(order);
    let ops = fiber.jet(order)?;
    for k in 0..=dim {
        let idx = Indices::k(k);
        let a = random_jet_form(rng, k, shape);
        let a0 = a.values();
        let da = exterior_d(&a)?.values();

        // [d, L^m] = m[d,L]L^{m−1}
        for m in 1..=n {
            let lhs = exterior_d(&ops.l_pow(&a, m))?
                .values()
                .sub(&pt.l_pow(&da, m));
            let rhs = commutator_dl(fiber, &pt.l_pow(&a0, m - 1)).scale_real(m as f64);
            out.push(Check::holds(
                "lemma.dl_power",
                Indices::kj(k, m),
                Comparison::of(pt, &lhs, &rhs),
            ));
        }

        // ⋆[d,L]a = (−1)^{k+1}[d*,Λ]⋆a
        let lhs = pt.hodge_star(&commutator_dl(fiber, &a0));
        let rhs =
            dstar_lambda_commutator(fiber, &ops.hodge_star(&a))?.scale_real(sign(k as i64 + 1));
        out.push(Check::holds(
            "lemma.star_dl",
            idx,
            Comparison::of(pt, &lhs, &rhs),
        ));

        // d*⋆ = (−1)^{k+1}⋆d
        let lhs = adjoint_op(fiber, Differential::D, &ops.hodge_star(&a))?;
        let rhs = pt.hodge_star(&da).scale_real(sign(k as i64 + 1));
        out.push(Check::holds(
            "lemma.dstar_star",
            idx,
            Comparison::of(pt, &lhs, &rhs),
        ));

        // d = μ̄ + ∂̄ + ∂ + μ
        let mut sum = Form::zero(dim, ());
        for part in DPart::ALL {
            sum = sum.add(&delta(fiber, &a, part)?);
        }
        out.push(Check::holds(
            "lemma.d_components",
            idx,
            Comparison::of(pt, &da, &sum),
        ));

        // [d, L] through the differential equals dω ∧ ·
        let direct = exterior_d(&ops.lefschetz_l(&a))?
            .values()
            .sub(&pt.lefschetz_l(&da));
        out.push(Check::holds(
            "lemma.dl_zeroth_order",
            idx,
            Comparison::of(pt, &direct, &commutator_dl(fiber, &a0)),
        ));

        // Leibniz
        let l = rng.random_range(0..=dim - k);
        let b = random_jet_form(rng, l, shape);
        let lhs = exterior_d(&a.wedge(&b)?)?.values();
        let db = exterior_d(&b)?.values();
        let rhs = da
            .wedge(&b.values())?
            .add(&a0.wedge(&db)?.scale_real(sign(k as i64)));
        out.push(Check::holds(
            "lemma.leibniz",
            idx.with_j(l),
            Comparison::of(pt, &lhs, &rhs),
        ));

        if order >= 2 {
            let d1 = exterior_d(&a)?;
            let dd = exterior_d(&d1)?.values();
            out.push(Check::holds(
                "lemma.d_squared",
                idx,
                Comparison::vanishing(pt.norm(&d1.values()), pt.norm(&dd)),
            ));
        }
    }
    Ok(())
}

fn bidegree_checks(fiber: &Fiber, rng: &mut impl Rng, out: &mut Vec<Check>) -> Result<()> {
    let pt = fiber.point();
    let n = fiber.n();
    let order = fiber.structure().order();
    let ops = fiber.jet(order)?;
    for p in 0..=n {
        for q in 0..=n {
            let idx = Indices::pq(p, q);
            let a = random_pure_germ(fiber, rng, p, q, order)?;
            let a0 = a.values();

            let ii = pt.apply_i(&pt.apply_i(&a0));
            out.push(Check::holds(
                "lemma.i_squared",
                idx,
                Comparison::of(pt, &ii, &a0.scale_real(sign((p + q) as i64))),
            ));
            let expect = a0.scale(i_pow(p as i64 - q as i64));
            out.push(Check::holds(
                "lemma.i_weight",
                idx,
                Comparison::of(pt, &pt.apply_i(&a0), &expect),
            ));

            // 𝕀⁻¹ δ 𝕀 = (−i)^{r−s} δ for each component of bidegree (r, s)
            let lifted = ops.apply_i(&a);
            for part in DPart::ALL {
                let lhs = pt.apply_i_inv(&delta(fiber, &lifted, part)?);
                let rhs = delta(fiber, &a, part)?.scale(conjugation_factor(part));
                let id = format!("lemma.i_conjugation.{}", part.name());
                out.push(Check::holds(id, idx, Comparison::of(pt, &lhs, &rhs)));
            }
            let lhs = conjugated_d(fiber, &a)?;
            let rhs = conjugated_d_expected(fiber, &a)?;
            out.push(Check::holds(
                "lemma.conjugated_d",
                idx,
                Comparison::of(pt, &lhs, &rhs),
            ));
        }
    }
    Ok(())
}
