//! The coefficient rings forms are built over: plain complex scalars (values at
//! the base point) and truncated jets (germs).

use std::fmt::Debug;

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{Lu, Mat};

pub type C64 = Complex64;

/// A commutative ring with a complex scalar action, a point-evaluation map and
/// a linear solver.
///
/// `Ctx` carries whatever is needed to build constants (for jets: order and
/// ambient dimension).
pub trait Coeff: Clone + Debug + PartialEq + Send + Sync + 'static {
    type Ctx: Copy + Debug + PartialEq + Send + Sync + 'static;

    fn zero(ctx: Self::Ctx) -> Self;
    fn constant(ctx: Self::Ctx, c: C64) -> Self;
    fn ctx(&self) -> Self::Ctx;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn scale(&self, c: C64) -> Self;
    fn conj(&self) -> Self;

    fn add_assign(&mut self, rhs: &Self);
    /// `self += a * b`
    fn mul_acc(&mut self, a: &Self, b: &Self);
    /// `self += c * a`
    fn scaled_acc(&mut self, c: C64, a: &Self);

    fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }

    fn one(ctx: Self::Ctx) -> Self {
        Self::constant(ctx, C64::new(1.0, 0.0))
    }

    /// Value at the base point.
    fn value(&self) -> C64;
    /// Largest modulus over every stored slot.
    fn max_abs(&self) -> f64;
    /// Exact zero in every slot (used only to skip work).
    fn is_zero(&self) -> bool;

    /// Solves `a x = b` for a square `a` whose point value is invertible.
    fn solve(a: &Mat<Self>, b: &Mat<Self>) -> Result<Mat<Self>>;
}

impl Coeff for C64 {
    type Ctx = ();

    fn zero(_: ()) -> Self {
        C64::new(0.0, 0.0)
    }
    fn constant(_: (), c: C64) -> Self {
        c
    }
    fn ctx(&self) {}

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn scale(&self, c: C64) -> Self {
        self * c
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn add_assign(&mut self, rhs: &Self) {
        *self += rhs;
    }
    fn mul_acc(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn scaled_acc(&mut self, c: C64, a: &Self) {
        *self += c * a;
    }
    fn value(&self) -> C64 {
        *self
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn solve(a: &Mat<Self>, b: &Mat<Self>) -> Result<Mat<Self>> {
        Lu::factor(a)?.solve(b)
    }
}
