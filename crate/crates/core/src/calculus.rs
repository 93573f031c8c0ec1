//! The exterior differential on germs, its four bidegree components, their
//! adjoints and the zeroth-order commutators built from them.
//!
//! Every operator here consumes one jet order: inputs are germs, outputs are
//! values at the base point. Operators that act after `d` are therefore the
//! point-level ones, operators acting before `d` are the jet-level ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::i_pow;
use crate::form::{Form, FormAtPoint, JetForm};
use crate::geometry::Fiber;
use crate::jet::JetShape;
use crate::ring::{Coeff, C64};

/// Relative tolerance for pure-bidegree preconditions.
pub const PURITY_RTOL: f64 = 1e-10;

/// The components `d = μ̄ + ∂̄ + ∂ + μ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DPart {
    MuBar,
    DelBar,
    Del,
    Mu,
}

impl DPart {
    pub const ALL: [DPart; 4] = [DPart::MuBar, DPart::DelBar, DPart::Del, DPart::Mu];

    /// Bidegree `(r, s)`.
    pub fn bidegree(self) -> (i64, i64) {
        match self {
            DPart::MuBar => (-1, 2),
            DPart::DelBar => (0, 1),
            DPart::Del => (1, 0),
            DPart::Mu => (2, -1),
        }
    }

    /// Complex conjugate component (`∂ ↔ ∂̄`, `μ ↔ μ̄`).
    pub fn conjugate(self) -> DPart {
        match self {
            DPart::MuBar => DPart::Mu,
            DPart::DelBar => DPart::Del,
            DPart::Del => DPart::DelBar,
            DPart::Mu => DPart::MuBar,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DPart::MuBar => "mubar",
            DPart::DelBar => "delbar",
            DPart::Del => "del",
            DPart::Mu => "mu",
        }
    }
}

/// `d` itself or one of its components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Differential {
    D,
    Part(DPart),
}

/// `d(Σ f_S dx^S) = Σ_S Σ_i ∂_i f_S dx^i ∧ dx^S`; the output has one jet order
/// less than the input.
pub fn exterior_d(a: &JetForm) -> Result<JetForm> {
    let shape = a.jet_shape();
    if shape.order == 0 {
        return Err(Error::OrderTooLow { order: 0 });
    }
    let out_shape = JetShape {
        order: shape.order - 1,
        dim: shape.dim,
    };
    let mut out: JetForm = Form::zero(shape.dim, out_shape);
    for (s, coeff) in a.coeffs().iter().enumerate() {
        if coeff.is_zero() {
            continue;
        }
        let s = s as u32;
        for i in 0..shape.dim {
            let bit = 1u32 << i;
            if s & bit != 0 {
                continue;
            }
            let partial = coeff.partial(i)?;
            // dx^i ∧ dx^S: sign is the parity of indices in S below i
            let below = (s & (bit - 1)).count_ones();
            let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
            out.coeff_mut(s | bit)
                .scaled_acc(C64::new(sign, 0.0), &partial);
        }
    }
    Ok(out)
}

/// The pure bidegree of a germ, checked in every jet slot.
pub fn pure_bidegree(fiber: &Fiber, a: &JetForm) -> Result<Option<(usize, usize)>> {
    let ops = fiber.jet_for(a)?;
    let scale = a.max_abs();
    if scale == 0.0 {
        return Ok(None);
    }
    let pieces = ops.bigrade_split(a);
    let mut best: Option<((usize, usize), f64)> = None;
    for ((p, q), piece) in &pieces {
        let residual = a.sub(piece).max_abs();
        if best.is_none_or(|(_, r)| residual < r) {
            best = Some(((*p, *q), residual));
        }
    }
    match best {
        Some((pq, r)) if r <= PURITY_RTOL * scale => Ok(Some(pq)),
        Some(((p, q), residual)) => Err(Error::NotPureBidegree { p, q, residual }),
        None => Ok(None),
    }
}

fn shifted(p: usize, q: usize, part: DPart) -> Option<(usize, usize)> {
    let (r, s) = part.bidegree();
    let (pp, qq) = (p as i64 + r, q as i64 + s);
    (pp >= 0 && qq >= 0).then_some((pp as usize, qq as usize))
}

/// A component of `d` on a pure `(p, q)` germ: the `(p + r, q + s)` part of `d a`.
pub fn d_component(fiber: &Fiber, a: &JetForm, part: DPart) -> Result<FormAtPoint> {
    let Some((p, q)) = pure_bidegree(fiber, a)? else {
        return Ok(Form::zero(fiber.dim(), ()));
    };
    let da = exterior_d(a)?.values();
    Ok(match shifted(p, q, part) {
        Some((pp, qq)) => fiber.point().bigrade_project(&da, pp, qq),
        None => Form::zero(fiber.dim(), ()),
    })
}

/// A component of `d` on an arbitrary germ, by linearity over the jet-level
/// bidegree splitting.
pub fn delta(fiber: &Fiber, a: &JetForm, part: DPart) -> Result<FormAtPoint> {
    let ops = fiber.jet_for(a)?;
    let mut out = Form::zero(fiber.dim(), ());
    for ((p, q), piece) in ops.bigrade_split(a) {
        if let Some((pp, qq)) = shifted(p, q, part) {
            let dpiece = exterior_d(&piece)?.values();
            out = out.add(&fiber.point().bigrade_project(&dpiece, pp, qq));
        }
    }
    Ok(out)
}

/// `d a` or `δ a` at the base point.
pub fn apply_differential(fiber: &Fiber, a: &JetForm, which: Differential) -> Result<FormAtPoint> {
    match which {
        Differential::D => Ok(exterior_d(a)?.values()),
        Differential::Part(p) => delta(fiber, a, p),
    }
}

/// Adjoints `d* = -⋆d⋆` and `δ̄* = -⋆δ⋆`: the adjoint of a component is built
/// from its conjugate, so `∂̄* = -⋆∂⋆` has bidegree `(0, -1)`.
pub fn adjoint_op(fiber: &Fiber, which: Differential, a: &JetForm) -> Result<FormAtPoint> {
    let inner = fiber.jet_for(a)?.hodge_star(a);
    let mid = match which {
        Differential::D => exterior_d(&inner)?.values(),
        Differential::Part(p) => delta(fiber, &inner, p.conjugate())?,
    };
    Ok(fiber.point().hodge_star(&mid).scale_real(-1.0))
}

/// `[d, L] a = dω ∧ a` at the base point.
pub fn commutator_dl(fiber: &Fiber, a: &FormAtPoint) -> FormAtPoint {
    fiber.d_omega().wedge(a).expect("dimensions agree")
}

/// `[d, L] a = d(ω ∧ a) - ω ∧ d a` computed through the differential.
pub fn commutator_dl_direct(fiber: &Fiber, a: &JetForm) -> Result<FormAtPoint> {
    let ops = fiber.jet_for(a)?;
    let d_la = exterior_d(&ops.lefschetz_l(a))?.values();
    let l_da = fiber.point().lefschetz_l(&exterior_d(a)?.values());
    Ok(d_la.sub(&l_da))
}

/// `[∂̄, L] b = ∂̄(L b) - L ∂̄ b`.
fn delbar_l(fiber: &Fiber, b: &JetForm) -> Result<FormAtPoint> {
    let ops = fiber.jet_for(b)?;
    let first = delta(fiber, &ops.lefschetz_l(b), DPart::DelBar)?;
    let second = fiber.point().lefschetz_l(&delta(fiber, b, DPart::DelBar)?);
    Ok(first.sub(&second))
}

/// The torsion operator `τ̄ = [Λ, [∂̄, L]]` (both commutators even, so plain
/// differences).
pub fn torsion_taubar(fiber: &Fiber, a: &JetForm) -> Result<FormAtPoint> {
    let ops = fiber.jet_for(a)?;
    let outer = fiber.point().lambda(&delbar_l(fiber, a)?);
    let inner = delbar_l(fiber, &ops.lambda(a))?;
    Ok(outer.sub(&inner))
}

/// `-i(μ̄ - ∂̄ + ∂ - μ) a`, the expected value of `𝕀⁻¹ d 𝕀 a`.
pub fn conjugated_d_expected(fiber: &Fiber, a: &JetForm) -> Result<FormAtPoint> {
    let mut out = Form::zero(fiber.dim(), ());
    for part in DPart::ALL {
        let (r, s) = part.bidegree();
        out = out.add(&delta(fiber, a, part)?.scale(i_pow(s - r)));
    }
    Ok(out)
}

/// `𝕀⁻¹ d 𝕀 a`.
pub fn conjugated_d(fiber: &Fiber, a: &JetForm) -> Result<FormAtPoint> {
    let ops = fiber.jet_for(a)?;
    let d = exterior_d(&ops.apply_i(a))?.values();
    Ok(fiber.point().apply_i_inv(&d))
}

/// `(-i)^{r-s}`, the factor by which `𝕀` conjugates a bidegree `(r, s)` operator.
pub fn conjugation_factor(part: DPart) -> C64 {
    let (r, s) = part.bidegree();
    i_pow(s - r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{preset, random_structure, random_structure_of_order};
    use crate::sampling::{random_jet_form, random_pure_germ, trial_rng};

    fn e(dim: usize, idx: &[usize]) -> FormAtPoint {
        Form::monomial(dim, (), idx).unwrap()
    }

    #[test]
    fn d_of_constant_form_vanishes() {
        let shape = JetShape { order: 1, dim: 4 };
        let a = JetForm::constant_from(&e(4, &[0, 2]).add(&e(4, &[1])), shape);
        assert_eq!(exterior_d(&a).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn d_of_coordinate_monomial() {
        let shape = JetShape { order: 1, dim: 4 };
        let x1 = crate::jet::Jet::coordinate(shape, 0);
        let a = JetForm::constant_from(&e(4, &[1]), shape).mul_coeff(&x1);
        let da = exterior_d(&a).unwrap().values();
        assert!(da.max_abs_diff(&e(4, &[0, 1])) == 0.0);
        // order 0 input cannot be differentiated
        assert!(exterior_d(&exterior_d(&a).unwrap()).is_err());
    }

    #[test]
    fn d_squared_vanishes_with_second_order_jets() {
        let mut rng = trial_rng(11, 0);
        for k in 0..=3 {
            let a = random_jet_form(&mut rng, k, JetShape { order: 2, dim: 6 });
            let dda = exterior_d(&exterior_d(&a).unwrap()).unwrap();
            assert!(dda.max_abs() < 1e-12);
        }
    }

    #[test]
    fn components_vanish_off_integrable_and_sum_to_d() {
        let flat = preset("flat_kahler", 2).unwrap().fiber().unwrap();
        let mut rng = trial_rng(3, 0);
        let a = random_pure_germ(&flat, &mut rng, 0, 1, 1).unwrap();
        assert!(d_component(&flat, &a, DPart::Mu).unwrap().max_abs() < 1e-14);
        assert!(d_component(&flat, &a, DPart::MuBar).unwrap().max_abs() < 1e-14);

        for seed in 0..5 {
            let f = random_structure(seed, 3, 0.35).unwrap().fiber().unwrap();
            for (p, q) in [(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (2, 1)] {
                let a = random_pure_germ(&f, &mut rng, p, q, 1).unwrap();
                let da = exterior_d(&a).unwrap().values();
                let mut sum = Form::zero(6, ());
                for part in DPart::ALL {
                    sum = sum.add(&d_component(&f, &a, part).unwrap());
                }
                assert!(da.max_abs_diff(&sum) < 1e-11, "seed {seed} ({p},{q})");
            }
        }
    }

    #[test]
    fn impure_input_is_rejected() {
        let f = preset("generic", 2).unwrap().fiber().unwrap();
        let mut rng = trial_rng(5, 0);
        let a = random_jet_form(&mut rng, 1, f.shape(1));
        assert!(matches!(
            d_component(&f, &a, DPart::Del),
            Err(Error::NotPureBidegree { .. })
        ));
    }

    #[test]
    fn mubar_detects_nonintegrability() {
        let f = preset("generic", 2).unwrap().fiber().unwrap();
        let mut worst: f64 = 0.0;
        for c in 0..4 {
            let dxc = JetForm::constant_from(&e(4, &[c]), f.shape(1));
            let a = f.jet(1).unwrap().bigrade_project(&dxc, 1, 0);
            worst = worst.max(f.point().norm(&d_component(&f, &a, DPart::MuBar).unwrap()));
        }
        assert!(worst > 1e-3);
    }

    #[test]
    fn adjoint_examples() {
        let flat = preset("flat_kahler", 1).unwrap().fiber().unwrap();
        let shape = flat.shape(1);
        let x1 = crate::jet::Jet::coordinate(shape, 0);
        let f = JetForm::one(2, shape).mul_coeff(&x1);
        assert_eq!(
            adjoint_op(&flat, Differential::D, &f).unwrap().max_abs(),
            0.0
        );
        // d*(x¹ dx¹) = -div = -1
        let a = JetForm::constant_from(&e(2, &[0]), shape).mul_coeff(&x1);
        let v = adjoint_op(&flat, Differential::D, &a).unwrap();
        assert!((v.coeff(0) - C64::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn adjoint_components_have_expected_bidegrees() {
        let f = random_structure(8, 3, 0.3).unwrap().fiber().unwrap();
        let mut rng = trial_rng(8, 1);
        let a = random_pure_germ(&f, &mut rng, 1, 2, 1).unwrap();
        let expect = [
            (DPart::MuBar, (2, 0)),
            (DPart::DelBar, (1, 1)),
            (DPart::Del, (0, 2)),
            (DPart::Mu, (-1, 3)),
        ];
        let mut sum = Form::zero(6, ());
        for (part, (p, q)) in expect {
            let v = adjoint_op(&f, Differential::Part(part), &a).unwrap();
            sum = sum.add(&v);
            if p >= 0 {
                let pure = f.point().bigrade_project(&v, p as usize, q as usize);
                assert!(v.max_abs_diff(&pure) < 1e-12, "{part:?}");
            } else {
                assert!(v.max_abs() < 1e-12);
            }
        }
        let full = adjoint_op(&f, Differential::D, &a).unwrap();
        assert!(full.max_abs_diff(&sum) < 1e-11);
    }

    #[test]
    fn commutator_dl_two_routes_agree() {
        let mut rng = trial_rng(21, 0);
        let flat = preset("flat_kahler", 2).unwrap().fiber().unwrap();
        let a = random_jet_form(&mut rng, 1, flat.shape(1));
        assert!(commutator_dl(&flat, &a.values()).max_abs() == 0.0);
        for seed in 0..4 {
            let f = random_structure(seed, 3, 0.4).unwrap().fiber().unwrap();
            for k in 0..=4 {
                let a = random_jet_form(&mut rng, k, f.shape(1));
                let direct = commutator_dl_direct(&f, &a).unwrap();
                assert!(direct.max_abs_diff(&commutator_dl(&f, &a.values())) < 1e-11);
            }
        }
    }

    #[test]
    fn torsion_vanishes_on_kahler_and_is_zeroth_order() {
        let mut rng = trial_rng(31, 0);
        let flat = preset("flat_kahler", 2).unwrap().fiber().unwrap();
        let a = random_pure_germ(&flat, &mut rng, 1, 1, 1).unwrap();
        assert!(torsion_taubar(&flat, &a).unwrap().max_abs() < 1e-13);

        let herm = preset("hermitian_nonkahler", 3).unwrap().fiber().unwrap();
        let b = random_pure_germ(&herm, &mut rng, 1, 1, 1).unwrap();
        assert!(herm.point().norm(&torsion_taubar(&herm, &b).unwrap()) > 1e-3);
    }

    #[test]
    fn leibniz_rule() {
        let mut rng = trial_rng(41, 0);
        let f = random_structure_of_order(2, 2, 0.3, 1)
            .unwrap()
            .fiber()
            .unwrap();
        for (k, l) in [(0, 1), (1, 1), (1, 2), (2, 2)] {
            let a = random_jet_form(&mut rng, k, f.shape(1));
            let b = random_jet_form(&mut rng, l, f.shape(1));
            let lhs = exterior_d(&a.wedge(&b).unwrap()).unwrap().values();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = exterior_d(&a)
                .unwrap()
                .values()
                .wedge(&b.values())
                .unwrap()
                .add(
                    &a.values()
                        .wedge(&exterior_d(&b).unwrap().values())
                        .unwrap()
                        .scale_real(sign),
                );
            assert!(lhs.max_abs_diff(&rhs) < 1e-13);
        }
    }
}
