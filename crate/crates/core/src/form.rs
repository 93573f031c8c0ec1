//! Complex exterior elements over the real coordinate coframe `dx^0..dx^{2n-1}`.
//!
//! Components are stored densely, indexed by the bitmask of the (sorted)
//! multi-index, so canonicalization is implicit and wedge signs come from
//! [`wedge_sign`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, JetShape};
use crate::linalg::{wedge_sign, Basis};
use crate::ring::{Coeff, C64};

/// A form whose coefficients live in the ring `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "C: Serialize, C::Ctx: Serialize",
    deserialize = "C: Deserialize<'de>, C::Ctx: Deserialize<'de>"
))]
pub struct Form<C: Coeff> {
    dim: usize,
    ctx: C::Ctx,
    coeffs: Vec<C>,
}

/// Form with scalar coefficients (a value at the base point).
pub type FormAtPoint = Form<C64>;
/// Form with jet coefficients (a germ at the base point).
pub type JetForm = Form<Jet>;

/// Below this norm a form is treated as zero.
pub const ZERO_FORM_NORM: f64 = 1e-14;

impl<C: Coeff> Form<C> {
    pub fn zero(dim: usize, ctx: C::Ctx) -> Self {
        Form {
            dim,
            ctx,
            coeffs: vec![C::zero(ctx); 1 << dim],
        }
    }

    pub fn one(dim: usize, ctx: C::Ctx) -> Self {
        Self::basis(dim, ctx, 0)
    }

    /// The basis element `e_S` for the multi-index bitmask `mask`.
    pub fn basis(dim: usize, ctx: C::Ctx, mask: u32) -> Self {
        let mut f = Self::zero(dim, ctx);
        f.coeffs[mask as usize] = C::one(ctx);
        f
    }

    /// `e_{i1} ^ e_{i2} ^ ...` for arbitrary (unsorted) indices.
    pub fn monomial(dim: usize, ctx: C::Ctx, indices: &[usize]) -> Result<Self> {
        let mut f = Self::one(dim, ctx);
        for &i in indices {
            if i >= dim {
                return Err(Error::InvalidParameter(format!(
                    "index {i} out of range for dimension {dim}"
                )));
            }
            f = f.wedge(&Self::basis(dim, ctx, 1 << i))?;
        }
        Ok(f)
    }

    pub fn from_coeffs(dim: usize, ctx: C::Ctx, coeffs: Vec<C>) -> Result<Self> {
        if coeffs.len() != 1 << dim {
            return Err(Error::DimensionMismatch {
                expected: 1 << dim,
                found: coeffs.len(),
            });
        }
        Ok(Form { dim, ctx, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn ctx(&self) -> C::Ctx {
        self.ctx
    }
    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }
    pub fn coeff(&self, mask: u32) -> &C {
        &self.coeffs[mask as usize]
    }
    pub fn coeff_mut(&mut self, mask: u32) -> &mut C {
        &mut self.coeffs[mask as usize]
    }
    pub fn set(&mut self, mask: u32, c: C) {
        self.coeffs[mask as usize] = c;
    }

    fn check_same(&self, o: &Self) -> Result<()> {
        if self.dim != o.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: o.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.dim, o.dim);
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&o.coeffs) {
            a.add_assign(b);
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(self.dim, o.dim);
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&o.coeffs) {
            a.scaled_acc(C64::new(-1.0, 0.0), b);
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_coeffs(self.ctx, |c| c.scale(s))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Multiplies every coefficient by the ring element `f`.
    pub fn mul_coeff(&self, f: &C) -> Self {
        self.map_coeffs(self.ctx, |c| c.mul(f))
    }

    pub fn conj(&self) -> Self {
        self.map_coeffs(self.ctx, Coeff::conj)
    }

    pub fn map_coeffs<D: Coeff>(&self, ctx: D::Ctx, f: impl Fn(&C) -> D) -> Form<D> {
        Form {
            dim: self.dim,
            ctx,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Point value of every coefficient.
    pub fn values(&self) -> FormAtPoint {
        self.map_coeffs((), Coeff::value)
    }

    /// Exterior product; bilinear and graded-anticommutative.
    pub fn wedge(&self, o: &Self) -> Result<Self> {
        self.check_same(o)?;
        let mut out = Self::zero(self.dim, self.ctx);
        for (s, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (t, b) in o.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                match wedge_sign(s as u32, t as u32) {
                    0 => {}
                    1 => out.coeffs[s | t].mul_acc(a, b),
                    _ => out.coeffs[s | t].mul_acc(&a.neg(), b),
                }
            }
        }
        Ok(out)
    }

    /// The degree-`k` homogeneous piece.
    pub fn degree_part(&self, k: usize) -> Self {
        let mut out = Self::zero(self.dim, self.ctx);
        for (m, c) in self.coeffs.iter().enumerate() {
            if (m as u32).count_ones() as usize == k {
                out.coeffs[m] = c.clone();
            }
        }
        out
    }

    /// Degrees carrying a coefficient of modulus above `tol`.
    pub fn degrees(&self, tol: f64) -> Vec<usize> {
        let mut seen = vec![false; self.dim + 1];
        for (m, c) in self.coeffs.iter().enumerate() {
            if c.max_abs() > tol {
                seen[(m as u32).count_ones() as usize] = true;
            }
        }
        seen.iter()
            .enumerate()
            .filter_map(|(k, &s)| s.then_some(k))
            .collect()
    }

    /// The degree of a homogeneous form (zero forms report `None`).
    pub fn homogeneous_degree(&self, tol: f64) -> Result<Option<usize>> {
        match self.degrees(tol).as_slice() {
            [] => Ok(None),
            [k] => Ok(Some(*k)),
            _ => Err(Error::NotHomogeneous),
        }
    }

    /// Coefficients of the degree-`k` piece, ordered as in [`Basis::masks`].
    pub fn block(&self, basis: &Basis, k: usize) -> Vec<C> {
        basis
            .masks(k)
            .iter()
            .map(|&m| self.coeffs[m as usize].clone())
            .collect()
    }

    pub fn set_block(&mut self, basis: &Basis, k: usize, values: Vec<C>) {
        for (&m, v) in basis.masks(k).iter().zip(values) {
            self.coeffs[m as usize] = v;
        }
    }

    /// Largest coefficient modulus over all slots (coefficient-wise sup norm).
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(Coeff::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.sub(o).max_abs()
    }
}

impl JetForm {
    pub fn jet_shape(&self) -> JetShape {
        self.ctx
    }

    /// Constant-coefficient germ with the given point value.
    pub fn constant_from(a: &FormAtPoint, shape: JetShape) -> Self {
        a.map_coeffs(shape, |c| Jet::constant(shape, *c))
    }

    pub fn truncate(&self, order: u8) -> Self {
        let shape = JetShape {
            order: order.min(self.ctx.order),
            dim: self.ctx.dim,
        };
        self.map_coeffs(shape, |j| j.truncate(order))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(dim: usize, idx: &[usize]) -> FormAtPoint {
        Form::monomial(dim, (), idx).unwrap()
    }

    #[test]
    fn wedge_antisymmetry_on_coordinate_covectors() {
        let d12 = e(4, &[0]).wedge(&e(4, &[1])).unwrap();
        let d21 = e(4, &[1]).wedge(&e(4, &[0])).unwrap();
        assert_eq!(*d12.coeff(0b11), C64::new(1.0, 0.0));
        assert_eq!(*d21.coeff(0b11), C64::new(-1.0, 0.0));
    }

    #[test]
    fn homogeneity_detection() {
        let a = e(4, &[0]).add(&e(4, &[1, 2]));
        assert_eq!(a.homogeneous_degree(0.0), Err(Error::NotHomogeneous));
        assert_eq!(e(4, &[1, 2]).homogeneous_degree(0.0), Ok(Some(2)));
        assert_eq!(FormAtPoint::zero(4, ()).homogeneous_degree(0.0), Ok(None));
        assert!(e(4, &[0]).wedge(&e(2, &[0])).is_err());
    }

    fn random_homogeneous(dim: usize, k: usize, seed: &[f64]) -> FormAtPoint {
        let basis = Basis::new(dim);
        let mut f = FormAtPoint::zero(dim, ());
        let vals = basis
            .masks(k)
            .iter()
            .enumerate()
            .map(|(i, _)| {
                C64::new(
                    seed[i % seed.len()] * (i as f64 + 1.0).sin(),
                    seed[(i + 1) % seed.len()],
                )
            })
            .collect();
        f.set_block(&basis, k, vals);
        f
    }

    proptest! {
        #[test]
        fn graded_commutativity(k in 0usize..=4, l in 0usize..=4, s in proptest::collection::vec(-1.0f64..1.0, 4..8)) {
            let a = random_homogeneous(4, k, &s);
            let b = random_homogeneous(4, l, &s[1..]);
            let ab = a.wedge(&b).unwrap();
            let ba = b.wedge(&a).unwrap().scale_real(if (k * l) % 2 == 0 { 1.0 } else { -1.0 });
            prop_assert!(ab.max_abs_diff(&ba) < 1e-14);
        }

        #[test]
        fn one_forms_square_to_zero(s in proptest::collection::vec(-1.0f64..1.0, 6)) {
            let a = random_homogeneous(6, 1, &s);
            prop_assert!(a.wedge(&a).unwrap().max_abs() < 1e-15);
        }

        #[test]
        fn wedge_is_associative(s in proptest::collection::vec(-1.0f64..1.0, 5)) {
            let a = random_homogeneous(5, 1, &s);
            let b = random_homogeneous(5, 2, &s[1..]);
            let c = random_homogeneous(5, 2, &s[2..]);
            let l = a.wedge(&b).unwrap().wedge(&c).unwrap();
            let r = a.wedge(&b.wedge(&c).unwrap()).unwrap();
            prop_assert!(l.max_abs_diff(&r) < 1e-13);
        }
    }
}
