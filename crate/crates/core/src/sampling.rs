//! Seeded random forms and germs used by the verification suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exterior::FiberOps;
use crate::form::{Form, FormAtPoint, JetForm};
use crate::geometry::Fiber;
use crate::jet::{Jet, JetShape};
use crate::linalg::Basis;
use crate::ring::{Coeff, C64};

/// Counter-based generator for `(seed, stream)`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn random_c64(rng: &mut impl Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_jet(rng: &mut impl Rng, shape: JetShape) -> Jet {
    let value = random_c64(rng);
    let gradient = (0..shape.dim)
        .take(if shape.order >= 1 { shape.dim } else { 0 })
        .map(|_| random_c64(rng))
        .collect();
    let hessian = (shape.order >= 2).then(|| {
        (0..shape.dim * shape.dim)
            .map(|_| random_c64(rng))
            .collect()
    });
    Jet::from_parts(value, gradient, hessian)
}

/// Random homogeneous degree-`k` form with coefficients in the unit box.
pub fn random_form(rng: &mut impl Rng, dim: usize, k: usize) -> FormAtPoint {
    let basis = Basis::new(dim);
    let mut f = Form::zero(dim, ());
    let vals = basis.masks(k).iter().map(|_| random_c64(rng)).collect();
    f.set_block(&basis, k, vals);
    f
}

/// Random homogeneous degree-`k` germ: every jet slot random.
pub fn random_jet_form(rng: &mut impl Rng, k: usize, shape: JetShape) -> JetForm {
    let basis = Basis::new(shape.dim);
    let mut f = Form::zero(shape.dim, shape);
    let vals = basis
        .masks(k)
        .iter()
        .map(|_| random_jet(rng, shape))
        .collect();
    f.set_block(&basis, k, vals);
    f
}

/// A point form that is primitive for `ops` (the `α_0` of a random form).
pub fn random_primitive_form(
    ops: &FiberOps<C64>,
    rng: &mut impl Rng,
    k: usize,
) -> Result<FormAtPoint> {
    ops.primitive_part(&random_form(rng, ops.dim(), k), k)
}

/// A germ that is primitive through every jet slot: the jet-level `α_0` of a
/// random germ.
pub fn random_primitive_germ(
    fiber: &Fiber,
    rng: &mut impl Rng,
    k: usize,
    order: u8,
) -> Result<JetForm> {
    let ops = fiber.jet(order)?;
    ops.primitive_part(&random_jet_form(rng, k, fiber.shape(order)), k)
}

/// A germ of pure bidegree `(p, q)` through every jet slot.
pub fn random_pure_germ(
    fiber: &Fiber,
    rng: &mut impl Rng,
    p: usize,
    q: usize,
    order: u8,
) -> Result<JetForm> {
    let ops = fiber.jet(order)?;
    Ok(ops.bigrade_project(&random_jet_form(rng, p + q, fiber.shape(order)), p, q))
}

/// Germ `f · a` for a random function germ `f` and constant form `a`.
pub fn scaled_constant_germ(
    rng: &mut impl Rng,
    a: &FormAtPoint,
    shape: JetShape,
) -> (Jet, JetForm) {
    let f = random_jet(rng, shape);
    let germ = JetForm::constant_from(a, shape).mul_coeff(&f);
    (f, germ)
}

/// Point norm helper that falls back to the sup norm for jets.
pub fn sup_norm<C: Coeff>(a: &Form<C>) -> f64 {
    a.max_abs()
}
