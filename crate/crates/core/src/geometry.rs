//! Almost Hermitian structure germs at the origin of R^{2n}.
//!
//! Coordinates are ordered `(x¹, y¹, …, xⁿ, yⁿ)` and the standard structure
//! is `J₀ ∂_{x^a} = ∂_{y^a}`, `J₀ ∂_{y^a} = -∂_{x^a}`, so that `ω₀ = Σ dx^a ∧ dy^a`
//! and `vol = dx¹ ∧ dy¹ ∧ … ∧ dxⁿ ∧ dyⁿ`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::exterior_d;
use crate::error::{Error, Result};
use crate::exterior::{FiberOps, MAX_REAL_DIM};
use crate::form::{FormAtPoint, JetForm};
use crate::jet::{jet_linear_solve, Jet, JetShape};
use crate::linalg::Mat;
use crate::ring::{Coeff, C64};

/// Tolerance for the structural invariants `J² = -I` and `JᵀgJ = g`.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Seed of the `generic` preset.
pub const GENERIC_PRESET_SEED: u64 = 0x5eed_0001;
/// Perturbation scale of the `generic` preset and of default random trials.
pub const GENERIC_SCALE: f64 = 0.35;
/// Seed used to pick a point in the constraint space of `almost_kahler_nonintegrable`.
pub const ALMOST_KAHLER_SEED: u64 = 0x5eed_0002;
/// Largest entry of the linear part of `A` for `almost_kahler_nonintegrable`.
const ALMOST_KAHLER_AMPLITUDE: f64 = 0.5;
const MAX_GENERATION_ATTEMPTS: u32 = 8;

/// Jets of `J` and of a compatible metric `g` at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostHermitianStructure {
    /// Complex dimension.
    pub n: usize,
    /// Human-readable provenance (preset name or seed).
    pub descr: String,
    /// `J` row-major, `2n x 2n`, acting on tangent vectors.
    pub j: Vec<Jet>,
    /// `g` row-major, `2n x 2n`.
    pub g: Vec<Jet>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    FlatKahler,
    HermitianNonkahler,
    AlmostKahlerNonintegrable,
    Generic,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::FlatKahler,
        Preset::HermitianNonkahler,
        Preset::AlmostKahlerNonintegrable,
        Preset::Generic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::FlatKahler => "flat_kahler",
            Preset::HermitianNonkahler => "hermitian_nonkahler",
            Preset::AlmostKahlerNonintegrable => "almost_kahler_nonintegrable",
            Preset::Generic => "generic",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// `(J₀, I)` as scalar matrices.
pub fn standard_pair(n: usize) -> (Mat<C64>, Mat<C64>) {
    let dim = 2 * n;
    let mut j = Mat::zeros(dim, dim, ());
    for a in 0..n {
        j.set(2 * a + 1, 2 * a, C64::new(1.0, 0.0));
        j.set(2 * a, 2 * a + 1, C64::new(-1.0, 0.0));
    }
    (j, Mat::identity(dim, ()))
}

fn lift(m: &Mat<C64>, shape: JetShape) -> Mat<Jet> {
    m.map(|c| Jet::constant(shape, *c))
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || 2 * n > MAX_REAL_DIM {
        return Err(Error::InvalidParameter(format!(
            "complex dimension {n} outside 1..=4"
        )));
    }
    Ok(())
}

impl AlmostHermitianStructure {
    pub fn from_matrices(
        n: usize,
        descr: impl Into<String>,
        j: &Mat<Jet>,
        g: &Mat<Jet>,
    ) -> Result<Self> {
        check_n(n)?;
        let dim = 2 * n;
        for m in [j, g] {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.rows(),
                });
            }
        }
        Ok(Self {
            n,
            descr: descr.into(),
            j: j.data().to_vec(),
            g: g.data().to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn order(&self) -> u8 {
        self.j.first().map_or(0, Jet::order)
    }

    pub fn shape(&self) -> JetShape {
        JetShape {
            order: self.order(),
            dim: self.dim(),
        }
    }

    pub fn j_mat(&self) -> Mat<Jet> {
        Mat::from_rows(self.dim(), self.dim(), self.j.clone())
    }

    pub fn g_mat(&self) -> Mat<Jet> {
        Mat::from_rows(self.dim(), self.dim(), self.g.clone())
    }

    /// Same germ with every jet truncated to `order`.
    pub fn truncated(&self, order: u8) -> Self {
        Self {
            n: self.n,
            descr: self.descr.clone(),
            j: self.j.iter().map(|x| x.truncate(order)).collect(),
            g: self.g.iter().map(|x| x.truncate(order)).collect(),
        }
    }

    /// Worst slot of `J² + I`, `JᵀgJ - g` and `g - gᵀ`.
    pub fn invariant_residuals(&self) -> StructureResiduals {
        let dim = self.dim();
        let shape = self.shape();
        let j = self.j_mat();
        let g = self.g_mat();
        let j_squared = j.matmul(&j).add(&Mat::identity(dim, shape)).max_abs();
        let compatibility = j.transpose().matmul(&g).matmul(&j).sub(&g).max_abs();
        let g_symmetry = g.sub(&g.transpose()).max_abs();
        StructureResiduals {
            j_squared,
            compatibility,
            g_symmetry,
        }
    }

    /// Operator tables at the point and as jets.
    pub fn fiber(&self) -> Result<Fiber> {
        Fiber::new(self)
    }

    /// The Nijenhuis tensor at the origin on coordinate fields.
    pub fn nijenhuis(&self) -> Result<NijenhuisTensor> {
        let order = self.order();
        if order < 1 {
            return Err(Error::OrderTooLow { order });
        }
        let dim = self.dim();
        let jv = |r: usize, c: usize| self.j[r * dim + c].value().re;
        let dj = |i: usize, r: usize, c: usize| self.j[r * dim + c].gradient()[i].re;
        let mut data = vec![0.0; dim * dim * dim];
        for c in 0..dim {
            for a in 0..dim {
                for b in 0..dim {
                    let mut s = 0.0;
                    for d in 0..dim {
                        s += jv(d, a) * dj(d, c, b) - jv(d, b) * dj(d, c, a)
                            + jv(c, d) * dj(b, d, a)
                            - jv(c, d) * dj(a, d, b);
                    }
                    data[(c * dim + a) * dim + b] = s;
                }
            }
        }
        Ok(NijenhuisTensor { dim, data })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StructureResiduals {
    pub j_squared: f64,
    pub compatibility: f64,
    pub g_symmetry: f64,
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        self.j_squared.max(self.compatibility).max(self.g_symmetry)
    }
}

/// `N^c_{ab}` for coordinate fields `∂_a`, `∂_b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NijenhuisTensor {
    pub dim: usize,
    /// Index `(c * dim + a) * dim + b`.
    pub data: Vec<f64>,
}

impl NijenhuisTensor {
    pub fn get(&self, c: usize, a: usize, b: usize) -> f64 {
        self.data[(c * self.dim + a) * self.dim + b]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest `|N(a,b) + N(b,a)|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for c in 0..d {
            for a in 0..d {
                for b in 0..d {
                    worst = worst.max((self.get(c, a, b) + self.get(c, b, a)).abs());
                }
            }
        }
        worst
    }
}

/// Operator tables for one structure: at the base point and, for each jet
/// order `1..=K`, over the jet ring.
#[derive(Clone, Debug)]
pub struct Fiber {
    structure: AlmostHermitianStructure,
    point: FiberOps<C64>,
    jets: Vec<FiberOps<Jet>>,
}

impl Fiber {
    pub fn new(s: &AlmostHermitianStructure) -> Result<Self> {
        let order = s.order();
        if order < 1 {
            return Err(Error::OrderTooLow { order });
        }
        let residual = s.invariant_residuals();
        if residual.j_squared > STRUCTURE_TOL {
            return Err(Error::NotAlmostComplex {
                residual: residual.j_squared,
            });
        }
        let point = FiberOps::new(s.n, &s.j_mat().values(), &s.g_mat().values(), ())?;
        let jets = (1..=order)
            .map(|k| {
                let t = s.truncated(k);
                FiberOps::new(s.n, &t.j_mat(), &t.g_mat(), t.shape())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Fiber {
            structure: s.clone(),
            point,
            jets,
        })
    }

    pub fn structure(&self) -> &AlmostHermitianStructure {
        &self.structure
    }
    pub fn n(&self) -> usize {
        self.structure.n
    }
    pub fn dim(&self) -> usize {
        self.structure.dim()
    }
    pub fn point(&self) -> &FiberOps<C64> {
        &self.point
    }
    /// Jet-level operators of the given order (1 up to the structure's order).
    pub fn jet(&self, order: u8) -> Result<&FiberOps<Jet>> {
        self.jets
            .get((order as usize).wrapping_sub(1))
            .ok_or(Error::OrderTooLow { order })
    }
    /// Jet operators matching the ring of `a`.
    pub fn jet_for(&self, a: &JetForm) -> Result<&FiberOps<Jet>> {
        self.jet(a.jet_shape().order)
    }
    pub fn shape(&self, order: u8) -> JetShape {
        JetShape {
            order,
            dim: self.dim(),
        }
    }

    /// `dω` at the base point.
    pub fn d_omega(&self) -> FormAtPoint {
        let omega = self.jets[0].omega();
        exterior_d(omega)
            .expect("order 1 jets can be differentiated")
            .values()
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..1.0)
}

fn random_real(rng: &mut ChaCha8Rng, dim: usize) -> Mat<C64> {
    Mat::from_fn(dim, dim, |_, _| C64::new(uniform(rng), 0.0))
}

fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize) -> Mat<C64> {
    let m = random_real(rng, dim);
    m.add(&m.transpose()).scale(C64::new(0.5, 0.0))
}

/// `M₀ + Σ_i x^i M_i` as a jet matrix.
fn affine_jet(constant: &Mat<C64>, linear: &[Mat<C64>], shape: JetShape) -> Mat<Jet> {
    Mat::from_fn(constant.rows(), constant.cols(), |r, c| {
        let mut j = Jet::constant(shape, *constant.get(r, c));
        if shape.order >= 1 {
            for (i, m) in linear.iter().enumerate() {
                j.gradient_mut()[i] = *m.get(r, c);
            }
        }
        j
    })
}

/// `J = A J₀ A⁻¹`, `g = (h + JᵀhJ)/2`: both invariants hold by construction.
fn conjugated_structure(
    n: usize,
    a: &Mat<Jet>,
    h: &Mat<Jet>,
    shape: JetShape,
) -> Result<(Mat<Jet>, Mat<Jet>)> {
    let dim = 2 * n;
    let (j0, _) = standard_pair(n);
    let a_inv = jet_linear_solve(a, &Mat::identity(dim, shape))?;
    let j = a.matmul(&lift(&j0, shape)).matmul(&a_inv);
    let g = h
        .add(&j.transpose().matmul(h).matmul(&j))
        .scale(C64::new(0.5, 0.0));
    Ok((j, g))
}

/// Seeded random structure of jet order 1.
pub fn random_structure(
    seed: u64,
    n: usize,
    perturbation_scale: f64,
) -> Result<AlmostHermitianStructure> {
    random_structure_of_order(seed, n, perturbation_scale, 1)
}

/// Seeded random structure: `A = I + s(B₀ + Σ x^i B_i)`, `J = A J₀ A⁻¹`,
/// `h = I + s(C Cᵀ + Σ x^i H_i)` and `g = (h + JᵀhJ)/2`.
pub fn random_structure_of_order(
    seed: u64,
    n: usize,
    perturbation_scale: f64,
    order: u8,
) -> Result<AlmostHermitianStructure> {
    check_n(n)?;
    if !(perturbation_scale >= 0.0 && perturbation_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "perturbation scale {perturbation_scale}"
        )));
    }
    if order == 0 {
        return Err(Error::OrderTooLow { order });
    }
    let dim = 2 * n;
    let shape = JetShape::new(order, dim)?;
    let s = C64::new(perturbation_scale, 0.0);
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let b0 = random_real(&mut rng, dim).scale(s);
        let b: Vec<Mat<C64>> = (0..dim)
            .map(|_| random_real(&mut rng, dim).scale(s))
            .collect();
        let c = random_real(&mut rng, dim);
        let h0 = Mat::identity(dim, ()).add(&c.matmul(&c.transpose()).scale(s));
        let hs: Vec<Mat<C64>> = (0..dim)
            .map(|_| random_symmetric(&mut rng, dim).scale(s))
            .collect();

        let a = affine_jet(&Mat::identity(dim, ()).add(&b0), &b, shape);
        let h = affine_jet(&h0, &hs, shape);
        match conjugated_structure(n, &a, &h, shape) {
            Ok((j, g)) => {
                let out =
                    AlmostHermitianStructure::from_matrices(n, format!("seed{seed}"), &j, &g)?;
                // ill-conditioned draws lose the invariants to rounding; redraw
                let clean = out.invariant_residuals().max() < STRUCTURE_TOL;
                if clean && FiberOps::new(n, &j.values(), &g.values(), ()).is_ok() {
                    return Ok(out);
                }
            }
            Err(Error::SingularSystem { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed {
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

/// Named structure of jet order 1.
pub fn preset(name: &str, n: usize) -> Result<AlmostHermitianStructure> {
    preset_of_order(name.parse()?, n, 1)
}

/// Named structures:
/// - `flat_kahler`: `J₀`, `g = I`.
/// - `hermitian_nonkahler`: `J₀`, `g = e^{x¹} I` (`dω ≠ 0` needs `n ≥ 2`).
/// - `almost_kahler_nonintegrable`: `J = A J₀ A⁻¹` with `A = I + Σ x^i B_i`,
///   `B` chosen in the kernel of `B ↦ dω|₀`; `N_J ≠ 0` needs `n ≥ 2`.
///   Only the value of `dω` at the origin vanishes.
/// - `generic`: [`random_structure`] with [`GENERIC_PRESET_SEED`].
pub fn preset_of_order(p: Preset, n: usize, order: u8) -> Result<AlmostHermitianStructure> {
    check_n(n)?;
    let dim = 2 * n;
    let shape = JetShape::new(order, dim)?;
    let (j0, id) = standard_pair(n);
    match p {
        Preset::FlatKahler => AlmostHermitianStructure::from_matrices(
            n,
            p.as_str(),
            &lift(&j0, shape),
            &lift(&id, shape),
        ),
        Preset::HermitianNonkahler => {
            // e^{x¹}
            let mut conformal = Jet::one(shape);
            if order >= 1 {
                conformal.gradient_mut()[0] = C64::new(1.0, 0.0);
            }
            if let Some(h) = conformal.hessian_mut() {
                h[0] = C64::new(1.0, 0.0);
            }
            let g = lift(&id, shape).map(|x| x.mul(&conformal));
            AlmostHermitianStructure::from_matrices(n, p.as_str(), &lift(&j0, shape), &g)
        }
        Preset::AlmostKahlerNonintegrable => almost_kahler(n, shape),
        Preset::Generic => {
            let mut s = random_structure_of_order(GENERIC_PRESET_SEED, n, GENERIC_SCALE, order)?;
            s.descr = p.as_str().to_string();
            Ok(s)
        }
    }
}

fn almost_kahler_from(
    n: usize,
    linear: &[Mat<C64>],
    shape: JetShape,
) -> Result<(Mat<Jet>, Mat<Jet>)> {
    let dim = 2 * n;
    let a = affine_jet(&Mat::identity(dim, ()), linear, shape);
    conjugated_structure(n, &a, &Mat::identity(dim, shape), shape)
}

/// `dω|₀` of the structure built from the linear part `B`, as a flat vector of
/// degree-3 coefficients.
fn d_omega_at_origin(n: usize, linear: &[Mat<C64>]) -> Result<Vec<f64>> {
    let dim = 2 * n;
    let shape = JetShape { order: 1, dim };
    let (j, g) = almost_kahler_from(n, linear, shape)?;
    let jtg = j.transpose().matmul(&g);
    let mut omega = JetForm::zero(dim, shape);
    for a in 0..dim {
        for b in a + 1..dim {
            omega.set((1 << a) | (1 << b), jtg.get(a, b).clone());
        }
    }
    let d = exterior_d(&omega)?.values();
    Ok(d.coeffs()
        .iter()
        .enumerate()
        .filter(|(m, _)| (*m as u32).count_ones() == 3)
        .map(|(_, c)| c.re)
        .collect())
}

fn almost_kahler(n: usize, shape: JetShape) -> Result<AlmostHermitianStructure> {
    let dim = 2 * n;
    let nparams = dim * dim * dim;
    let unpack = |v: &[f64]| -> Vec<Mat<C64>> {
        (0..dim)
            .map(|i| Mat::from_fn(dim, dim, |r, c| C64::new(v[(i * dim + r) * dim + c], 0.0)))
            .collect()
    };

    // B ↦ dω|₀ is linear in the first-order data; assemble it column by column.
    let rows = d_omega_at_origin(n, &unpack(&vec![0.0; nparams]))?.len();
    let mut constraint = nalgebra::DMatrix::<f64>::zeros(rows, nparams);
    for p in 0..nparams {
        let mut v = vec![0.0; nparams];
        v[p] = 1.0;
        for (r, x) in d_omega_at_origin(n, &unpack(&v))?.into_iter().enumerate() {
            constraint[(r, p)] = x;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ALMOST_KAHLER_SEED);
    let b = nalgebra::DVector::from_fn(nparams, |_, _| uniform(&mut rng));
    let mut kernel_point = b.clone();
    if rows > 0 {
        let svd = constraint.clone().svd(true, true);
        let correction = svd
            .solve(&(&constraint * &b), 1e-12)
            .map_err(|e| Error::InvalidParameter(format!("constraint solve failed: {e}")))?;
        kernel_point -= correction;
    }
    let amp = kernel_point.amax();
    if amp == 0.0 {
        return Err(Error::GenerationFailed { attempts: 1 });
    }
    kernel_point *= ALMOST_KAHLER_AMPLITUDE / amp;
    let (j, g) = almost_kahler_from(n, &unpack(kernel_point.as_slice()), shape)?;
    AlmostHermitianStructure::from_matrices(n, Preset::AlmostKahlerNonintegrable.as_str(), &j, &g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_structure_is_kahler_and_integrable() {
        for n in 1..=3 {
            let s = preset("flat_kahler", n).unwrap();
            let f = s.fiber().unwrap();
            assert!(f.d_omega().max_abs() == 0.0);
            assert!(s.nijenhuis().unwrap().norm() == 0.0);
        }
    }

    #[test]
    fn zero_perturbation_gives_flat_structure() {
        let s = random_structure(7, 2, 0.0).unwrap();
        let flat = preset("flat_kahler", 2).unwrap();
        assert_eq!(s.j, flat.j);
        assert_eq!(s.g, flat.g);
        assert_eq!(s.fiber().unwrap().d_omega().max_abs(), 0.0);
    }

    #[test]
    fn random_structures_satisfy_invariants_in_every_slot() {
        for seed in 0..20 {
            for n in 1..=4 {
                for order in 1..=2 {
                    let s = random_structure_of_order(seed, n, 0.4, order).unwrap();
                    let r = s.invariant_residuals();
                    assert!(r.max() < STRUCTURE_TOL, "seed {seed} n {n}: {r:?}");
                    assert!(s
                        .j
                        .iter()
                        .chain(&s.g)
                        .all(|x| x.hessian_asymmetry() < 1e-15));
                }
            }
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let a = random_structure(99, 3, 0.3).unwrap();
        let b = random_structure(99, 3, 0.3).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_ne!(a, random_structure(100, 3, 0.3).unwrap());
    }

    #[test]
    fn hermitian_nonkahler_has_torsion_but_no_nijenhuis() {
        let s = preset("hermitian_nonkahler", 2).unwrap();
        assert_eq!(s.nijenhuis().unwrap().norm(), 0.0);
        assert!(s.fiber().unwrap().d_omega().max_abs() > 0.1);
    }

    #[test]
    fn almost_kahler_preset_is_closed_at_origin_and_nonintegrable() {
        for n in 2..=4 {
            let s = preset("almost_kahler_nonintegrable", n).unwrap();
            assert!(s.invariant_residuals().max() < STRUCTURE_TOL);
            assert!(s.fiber().unwrap().d_omega().max_abs() < 1e-12, "n = {n}");
            assert!(s.nijenhuis().unwrap().norm() > 1e-2, "n = {n}");
        }
    }

    #[test]
    fn generic_preset_is_neither_kahler_nor_integrable() {
        for n in 2..=3 {
            let s = preset("generic", n).unwrap();
            assert!(s.fiber().unwrap().d_omega().max_abs() > 1e-3);
            assert!(s.nijenhuis().unwrap().norm() > 1e-3);
        }
    }

    #[test]
    fn nijenhuis_is_antisymmetric_and_vanishes_for_constant_j() {
        let s = random_structure(5, 3, 0.4).unwrap();
        let nj = s.nijenhuis().unwrap();
        assert!(nj.antisymmetry_defect() < 1e-12);
        let frozen = s.truncated(0);
        assert!(frozen.nijenhuis().is_err());
        let constant = AlmostHermitianStructure {
            j: s.j
                .iter()
                .map(|x| Jet::constant(x.shape(), x.value()))
                .collect(),
            ..s.clone()
        };
        assert_eq!(constant.nijenhuis().unwrap().norm(), 0.0);
    }

    #[test]
    fn unknown_preset_and_bad_dimension() {
        assert!(matches!(
            preset("kodaira_thurston", 2),
            Err(Error::UnknownPreset(_))
        ));
        assert!(preset("flat_kahler", 5).is_err());
        assert!(random_structure(0, 0, 0.1).is_err());
    }

    #[test]
    fn structure_json_round_trip() {
        let s = random_structure_of_order(3, 1, 0.2, 2).unwrap();
        let back: AlmostHermitianStructure =
            serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
