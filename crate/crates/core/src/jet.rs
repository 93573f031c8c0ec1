//! Truncated Taylor expansions at the base point of R^{2n}.
//!
//! A jet of order K stores the value, the gradient (K >= 1) and the symmetric
//! Hessian (K = 2) of a complex function germ. Order 0 jets are plain values
//! and appear as the output of differentiating an order 1 jet.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::ring::{Coeff, C64};

pub const MAX_ORDER: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JetShape {
    pub order: u8,
    pub dim: usize,
}

impl JetShape {
    pub fn new(order: u8, dim: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::InvalidParameter(format!(
                "jet order {order} > {MAX_ORDER}"
            )));
        }
        Ok(Self { order, dim })
    }
}

type Grad = SmallVec<[C64; 8]>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JetRepr", into = "JetRepr")]
pub struct Jet {
    shape: JetShape,
    value: C64,
    gradient: Grad,
    /// Row-major `dim x dim`, present iff order = 2.
    hessian: Option<Vec<C64>>,
}

#[derive(Serialize, Deserialize)]
struct JetRepr {
    value: C64,
    gradient: Vec<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hessian: Option<Vec<Vec<C64>>>,
}

impl From<Jet> for JetRepr {
    fn from(j: Jet) -> Self {
        let dim = j.shape.dim;
        JetRepr {
            value: j.value,
            gradient: j.gradient.to_vec(),
            hessian: j
                .hessian
                .map(|h| h.chunks(dim).map(|r| r.to_vec()).collect()),
        }
    }
}

impl TryFrom<JetRepr> for Jet {
    type Error = Error;

    fn try_from(r: JetRepr) -> Result<Self> {
        let dim = r.gradient.len();
        match r.hessian {
            None => Ok(Jet::from_parts(r.value, r.gradient, None)),
            Some(rows) => {
                if rows.len() != dim || rows.iter().any(|row| row.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: rows.len(),
                    });
                }
                let flat: Vec<C64> = rows.into_iter().flatten().collect();
                Ok(Jet::from_parts(r.value, r.gradient, Some(flat)))
            }
        }
    }
}

impl Jet {
    /// Builds a jet from its slots. The Hessian is symmetrized.
    pub fn from_parts(value: C64, gradient: Vec<C64>, hessian: Option<Vec<C64>>) -> Self {
        let dim = gradient.len();
        let order = match (&hessian, dim) {
            (Some(_), _) => 2,
            (None, 0) => 0,
            (None, _) => 1,
        };
        let hessian = hessian.map(|h| {
            assert_eq!(h.len(), dim * dim, "hessian must be dim x dim");
            let mut s = h.clone();
            for i in 0..dim {
                for j in 0..dim {
                    s[i * dim + j] = (h[i * dim + j] + h[j * dim + i]) * 0.5;
                }
            }
            s
        });
        Jet {
            shape: JetShape { order, dim },
            value,
            gradient: Grad::from_vec(gradient),
            hessian,
        }
    }

    /// The jet of the coordinate function `x^i` at the origin.
    pub fn coordinate(shape: JetShape, i: usize) -> Self {
        let mut j = Jet::zero(shape);
        if shape.order >= 1 {
            j.gradient[i] = C64::new(1.0, 0.0);
        }
        j
    }

    pub fn shape(&self) -> JetShape {
        self.shape
    }
    pub fn order(&self) -> u8 {
        self.shape.order
    }
    pub fn dim(&self) -> usize {
        self.shape.dim
    }
    pub fn gradient(&self) -> &[C64] {
        &self.gradient
    }
    pub fn hessian(&self) -> Option<&[C64]> {
        self.hessian.as_deref()
    }
    pub fn gradient_mut(&mut self) -> &mut [C64] {
        &mut self.gradient
    }
    pub fn hessian_mut(&mut self) -> Option<&mut [C64]> {
        self.hessian.as_deref_mut()
    }
    pub fn set_value(&mut self, v: C64) {
        self.value = v;
    }

    /// `d/dx^i` of the germ, one order lower.
    pub fn partial(&self, i: usize) -> Result<Jet> {
        let dim = self.shape.dim;
        match self.shape.order {
            0 => Err(Error::OrderTooLow { order: 0 }),
            1 => {
                let mut out = Jet::zero(JetShape { order: 0, dim });
                out.value = self.gradient[i];
                Ok(out)
            }
            _ => {
                let h = self.hessian.as_ref().expect("order 2 jet has a hessian");
                let mut out = Jet::zero(JetShape { order: 1, dim });
                out.value = self.gradient[i];
                out.gradient.copy_from_slice(&h[i * dim..(i + 1) * dim]);
                Ok(out)
            }
        }
    }

    /// Drops slots above `order`.
    pub fn truncate(&self, order: u8) -> Jet {
        if order >= self.shape.order {
            return self.clone();
        }
        let mut out = Jet::zero(JetShape {
            order,
            dim: self.shape.dim,
        });
        out.value = self.value;
        if order >= 1 {
            out.gradient.copy_from_slice(&self.gradient);
        }
        out
    }

    /// Multiplicative inverse; requires a nonzero value.
    pub fn recip(&self) -> Result<Jet> {
        if self.value.norm() == 0.0 {
            return Err(Error::SingularSystem { pivot: 0.0 });
        }
        let v = self.value.inv();
        let v2 = v * v;
        let mut out = self.clone();
        out.value = v;
        for g in out.gradient.iter_mut() {
            *g = -*g * v2;
        }
        if let Some(h) = out.hessian.as_mut() {
            let dim = self.shape.dim;
            let v3 = v2 * v;
            for i in 0..dim {
                for j in 0..dim {
                    let a = self.hessian.as_ref().unwrap()[i * dim + j];
                    h[i * dim + j] = -a * v2 + self.gradient[i] * self.gradient[j] * v3 * 2.0;
                }
            }
        }
        Ok(out)
    }

    /// Largest deviation of the Hessian from symmetry.
    pub fn hessian_asymmetry(&self) -> f64 {
        let dim = self.shape.dim;
        self.hessian.as_ref().map_or(0.0, |h| {
            let mut worst: f64 = 0.0;
            for i in 0..dim {
                for j in 0..i {
                    worst = worst.max((h[i * dim + j] - h[j * dim + i]).norm());
                }
            }
            worst
        })
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.shape.dim != other.shape.dim {
            return Err(Error::DimensionMismatch {
                expected: self.shape.dim,
                found: other.shape.dim,
            });
        }
        if self.shape.order != other.shape.order {
            return Err(Error::OrderMismatch {
                left: self.shape.order,
                right: other.shape.order,
            });
        }
        Ok(())
    }
}

/// Truncated Leibniz product, checking that both jets live in the same ring.
pub fn jet_mul(a: &Jet, b: &Jet) -> Result<Jet> {
    a.check_compatible(b)?;
    Ok(a.mul(b))
}

pub fn jet_add(a: &Jet, b: &Jet) -> Result<Jet> {
    a.check_compatible(b)?;
    Ok(Coeff::add(a, b))
}

/// Matrix-vector product over the jet ring.
pub fn jet_matvec(a: &Mat<Jet>, x: &[Jet]) -> Result<Vec<Jet>> {
    if a.cols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: x.len(),
        });
    }
    Ok(a.matvec(x))
}

/// Solves `A x = b` over the jet ring.
///
/// The value part `A0` is factored once; every higher slot of `x` is obtained
/// by a scalar solve against that same factorization:
/// `A0 x_i = b_i - A_i x0` and
/// `A0 x_ij = b_ij - A_ij x0 - A_i x_j - A_j x_i`.
pub fn jet_linear_solve(a: &Mat<Jet>, b: &Mat<Jet>) -> Result<Mat<Jet>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.rows(),
        });
    }
    let shape = match a.data().first() {
        Some(j) => j.shape,
        None => return Ok(b.clone()),
    };
    for entry in a.data().iter().chain(b.data()) {
        if entry.shape != shape {
            return Err(Error::OrderMismatch {
                left: shape.order,
                right: entry.shape.order,
            });
        }
    }
    let dim = shape.dim;
    let m = b.cols();

    let slot = |mat: &Mat<Jet>, f: &dyn Fn(&Jet) -> C64| -> Mat<C64> {
        Mat::from_fn(mat.rows(), mat.cols(), |r, c| f(mat.get(r, c)))
    };

    let a0 = slot(a, &|j| j.value);
    let lu = Lu::factor(&a0)?;
    let x0 = lu.solve(&slot(b, &|j| j.value))?;

    let mut x = Mat::from_fn(n, m, |r, c| {
        let mut j = Jet::zero(shape);
        j.value = *x0.get(r, c);
        j
    });
    if shape.order == 0 {
        return Ok(x);
    }

    let a_grad: Vec<Mat<C64>> = (0..dim).map(|i| slot(a, &|j| j.gradient[i])).collect();
    let mut x_grad = Vec::with_capacity(dim);
    for (i, ai) in a_grad.iter().enumerate() {
        let rhs = slot(b, &|j| j.gradient[i]).sub(&ai.matmul(&x0));
        x_grad.push(lu.solve(&rhs)?);
    }
    for r in 0..n {
        for c in 0..m {
            let e = x.get_mut(r, c);
            for (i, xi) in x_grad.iter().enumerate() {
                e.gradient[i] = *xi.get(r, c);
            }
        }
    }
    if shape.order == 1 {
        return Ok(x);
    }

    for i in 0..dim {
        for j in 0..=i {
            let aij = slot(a, &|e| e.hessian.as_ref().unwrap()[i * dim + j]);
            let bij = slot(b, &|e| e.hessian.as_ref().unwrap()[i * dim + j]);
            let rhs = bij
                .sub(&aij.matmul(&x0))
                .sub(&a_grad[i].matmul(&x_grad[j]))
                .sub(&a_grad[j].matmul(&x_grad[i]));
            let xij = lu.solve(&rhs)?;
            for r in 0..n {
                for c in 0..m {
                    let h = x.get_mut(r, c).hessian.as_mut().unwrap();
                    h[i * dim + j] = *xij.get(r, c);
                    h[j * dim + i] = *xij.get(r, c);
                }
            }
        }
    }
    Ok(x)
}

impl Coeff for Jet {
    type Ctx = JetShape;

    fn zero(shape: JetShape) -> Self {
        let dim = shape.dim;
        let zero = C64::new(0.0, 0.0);
        Jet {
            shape,
            value: zero,
            gradient: if shape.order >= 1 {
                smallvec::smallvec![zero; dim]
            } else {
                Grad::new()
            },
            hessian: (shape.order >= 2).then(|| vec![zero; dim * dim]),
        }
    }

    fn constant(shape: JetShape, c: C64) -> Self {
        let mut j = Jet::zero(shape);
        j.value = c;
        j
    }

    fn ctx(&self) -> JetShape {
        self.shape
    }

    fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }

    fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.scaled_acc(C64::new(-1.0, 0.0), rhs);
        out
    }

    fn mul(&self, rhs: &Self) -> Self {
        let mut out = Jet::zero(self.shape);
        out.mul_acc(self, rhs);
        out
    }

    fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.value *= c;
        for g in out.gradient.iter_mut() {
            *g *= c;
        }
        if let Some(h) = out.hessian.as_mut() {
            for x in h.iter_mut() {
                *x *= c;
            }
        }
        out
    }

    fn conj(&self) -> Self {
        let mut out = self.clone();
        out.value = out.value.conj();
        for g in out.gradient.iter_mut() {
            *g = g.conj();
        }
        if let Some(h) = out.hessian.as_mut() {
            for x in h.iter_mut() {
                *x = x.conj();
            }
        }
        out
    }

    fn add_assign(&mut self, rhs: &Self) {
        assert_eq!(self.shape, rhs.shape, "jet ring mismatch");
        self.value += rhs.value;
        for (a, b) in self.gradient.iter_mut().zip(&rhs.gradient) {
            *a += b;
        }
        if let (Some(a), Some(b)) = (self.hessian.as_mut(), rhs.hessian.as_ref()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn mul_acc(&mut self, a: &Self, b: &Self) {
        assert!(
            self.shape == a.shape && a.shape == b.shape,
            "jet ring mismatch"
        );
        let (av, bv) = (a.value, b.value);
        self.value += av * bv;
        for ((g, ag), bg) in self.gradient.iter_mut().zip(&a.gradient).zip(&b.gradient) {
            *g += av * bg + bv * ag;
        }
        if let Some(h) = self.hessian.as_mut() {
            let dim = self.shape.dim;
            let (ah, bh) = (a.hessian.as_ref().unwrap(), b.hessian.as_ref().unwrap());
            // lower triangle only, mirrored, so the result stays exactly symmetric
            for i in 0..dim {
                for j in 0..=i {
                    let k = i * dim + j;
                    let t = av * bh[k]
                        + bv * ah[k]
                        + a.gradient[i] * b.gradient[j]
                        + a.gradient[j] * b.gradient[i];
                    h[k] += t;
                    if i != j {
                        h[j * dim + i] = h[k];
                    }
                }
            }
        }
    }

    fn scaled_acc(&mut self, c: C64, a: &Self) {
        assert_eq!(self.shape, a.shape, "jet ring mismatch");
        self.value += c * a.value;
        for (g, ag) in self.gradient.iter_mut().zip(&a.gradient) {
            *g += c * ag;
        }
        if let (Some(h), Some(ah)) = (self.hessian.as_mut(), a.hessian.as_ref()) {
            for (x, y) in h.iter_mut().zip(ah) {
                *x += c * y;
            }
        }
    }

    fn value(&self) -> C64 {
        self.value
    }

    fn max_abs(&self) -> f64 {
        let mut m = self.value.norm();
        for g in &self.gradient {
            m = m.max(g.norm());
        }
        if let Some(h) = &self.hessian {
            for x in h {
                m = m.max(x.norm());
            }
        }
        m
    }

    fn is_zero(&self) -> bool {
        self.value.is_zero()
            && self.gradient.iter().all(Coeff::is_zero)
            && self
                .hessian
                .as_ref()
                .is_none_or(|h| h.iter().all(Coeff::is_zero))
    }

    fn solve(a: &Mat<Self>, b: &Mat<Self>) -> Result<Mat<Self>> {
        jet_linear_solve(a, b)
    }
}

impl std::ops::Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Coeff::add(self, rhs)
    }
}

impl std::ops::Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Coeff::sub(self, rhs)
    }
}

impl std::ops::Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        Coeff::mul(self, rhs)
    }
}

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Coeff::neg(self)
    }
}
