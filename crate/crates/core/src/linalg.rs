//! Small dense matrices over a coefficient ring.

use crate::error::{Error, Result};
use crate::ring::{Coeff, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<C> {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl<C: Coeff> Mat<C> {
    pub fn zeros(rows: usize, cols: usize, ctx: C::Ctx) -> Self {
        Mat {
            rows,
            cols,
            data: vec![C::zero(ctx); rows * cols],
        }
    }

    pub fn identity(n: usize, ctx: C::Ctx) -> Self {
        let mut m = Self::zeros(n, n, ctx);
        for i in 0..n {
            m.data[i * n + i] = C::one(ctx);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<C>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn data(&self) -> &[C] {
        &self.data
    }
    pub fn get(&self, r: usize, c: usize) -> &C {
        &self.data[r * self.cols + c]
    }
    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut C {
        &mut self.data[r * self.cols + c]
    }
    pub fn set(&mut self, r: usize, c: usize, v: C) {
        self.data[r * self.cols + c] = v;
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Mat<D> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn values(&self) -> Mat<C64> {
        self.map(|c| c.value())
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    pub fn conj_transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|c| c.scale(s))
    }

    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "matmul shape mismatch");
        let ctx = self.data.first().or(o.data.first()).map(|c| c.ctx());
        let Some(ctx) = ctx else {
            return Mat {
                rows: self.rows,
                cols: o.cols,
                data: Vec::new(),
            };
        };
        let mut out: Mat<C> = Mat::zeros(self.rows, o.cols, ctx);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..o.cols {
                    let b = &o.data[k * o.cols + c];
                    if !b.is_zero() {
                        out.data[r * o.cols + c].mul_acc(a, b);
                    }
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        let ctx = match x.first().or(self.data.first()) {
            Some(c) => c.ctx(),
            None => return Vec::new(),
        };
        let mut out = vec![C::zero(ctx); self.rows];
        for (r, o) in out.iter_mut().enumerate() {
            for (k, xk) in x.iter().enumerate() {
                let a = &self.data[r * self.cols + k];
                if !a.is_zero() && !xk.is_zero() {
                    o.mul_acc(a, xk);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Coeff::max_abs).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.sub(o).max_abs()
    }

    pub fn column(&self, c: usize) -> Vec<C> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }
}

/// Partial-pivot LU factorization of a square complex matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
}

/// Pivots below this fraction of the largest entry are treated as singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-13;

impl Lu {
    pub fn factor(a: &Mat<C64>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.cols(),
            });
        }
        let scale = a.max_abs();
        let mut lu = a.data().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, mag) =
                (k..n)
                    .map(|r| (r, lu[r * n + k].norm()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if mag <= SINGULAR_PIVOT_RTOL * scale || mag == 0.0 {
                return Err(Error::SingularSystem {
                    pivot: mag.max(0.0),
                });
            }
            if piv != k {
                for c in 0..n {
                    lu.swap(k * n + c, piv * n + c);
                }
                perm.swap(k, piv);
            }
            let d = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / d;
                lu[r * n + k] = f;
                if f.norm() == 0.0 {
                    continue;
                }
                for c in k + 1..n {
                    let u = lu[k * n + c];
                    lu[r * n + c] -= f * u;
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    pub fn solve(&self, b: &Mat<C64>) -> Result<Mat<C64>> {
        let n = self.n;
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.rows(),
            });
        }
        let m = b.cols();
        let mut x = Mat::from_fn(n, m, |r, c| *b.get(self.perm[r], c));
        for c in 0..m {
            for r in 0..n {
                let mut s = *x.get(r, c);
                for k in 0..r {
                    s -= self.lu[r * n + k] * x.get(k, c);
                }
                x.set(r, c, s);
            }
            for r in (0..n).rev() {
                let mut s = *x.get(r, c);
                for k in r + 1..n {
                    s -= self.lu[r * n + k] * x.get(k, c);
                }
                x.set(r, c, s / self.lu[r * n + r]);
            }
        }
        Ok(x)
    }
}

/// Least-squares solution of an over-determined but consistent system through
/// the normal equations `A^H A x = A^H b`.
pub fn solve_normal<C: Coeff>(a: &Mat<C>, b: &Mat<C>) -> Result<Mat<C>> {
    let ah = a.conj_transpose();
    C::solve(&ah.matmul(a), &ah.matmul(b))
}

/// Multi-index bookkeeping for the exterior algebra on `dim` generators:
/// subsets of `{0, .., dim-1}` as bitmasks, grouped by degree.
#[derive(Clone, Debug)]
pub struct Basis {
    dim: usize,
    by_degree: Vec<Vec<u32>>,
    rank: Vec<usize>,
}

impl Basis {
    pub fn new(dim: usize) -> Self {
        assert!(dim <= 16);
        let mut by_degree = vec![Vec::new(); dim + 1];
        let mut rank = vec![0; 1 << dim];
        for mask in 0u32..(1 << dim) {
            let k = mask.count_ones() as usize;
            rank[mask as usize] = by_degree[k].len();
            by_degree[k].push(mask);
        }
        Basis {
            dim,
            by_degree,
            rank,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn size(&self) -> usize {
        1 << self.dim
    }
    pub fn masks(&self, degree: usize) -> &[u32] {
        self.by_degree.get(degree).map_or(&[], |v| v.as_slice())
    }
    pub fn count(&self, degree: usize) -> usize {
        self.masks(degree).len()
    }
    /// Position of `mask` among the masks of its degree.
    pub fn rank(&self, mask: u32) -> usize {
        self.rank[mask as usize]
    }
    pub fn full(&self) -> u32 {
        ((1u64 << self.dim) - 1) as u32
    }
}

/// Sign of `e_S ^ e_T` relative to `e_{S u T}`; zero when they overlap.
pub fn wedge_sign(s: u32, t: u32) -> i32 {
    if s & t != 0 {
        return 0;
    }
    // count pairs (a in S, b in T) with a > b
    let mut swaps = 0u32;
    let mut rest = t;
    while rest != 0 {
        let b = rest.trailing_zeros();
        rest &= rest - 1;
        swaps += (s >> (b + 1)).count_ones();
    }
    if swaps.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// All exterior powers of `m` (acting on covector components): entry `(S, T)`
/// of the degree-k block is the minor `det m[S, T]`, built by Laplace expansion
/// along the lowest row of `S`. Ring operations only, so it works over jets.
pub fn compound_matrices<C: Coeff>(m: &Mat<C>, basis: &Basis, ctx: C::Ctx) -> Vec<Mat<C>> {
    let dim = basis.dim();
    assert_eq!((m.rows(), m.cols()), (dim, dim));
    let mut out: Vec<Mat<C>> = Vec::with_capacity(dim + 1);
    out.push(Mat::identity(1, ctx));
    for k in 1..=dim {
        let masks = basis.masks(k);
        let prev = &out[k - 1];
        let mut block: Mat<C> = Mat::zeros(masks.len(), masks.len(), ctx);
        for (ri, &s) in masks.iter().enumerate() {
            let s0 = s.trailing_zeros() as usize;
            let s_rest = s & (s - 1);
            let prow = basis.rank(s_rest);
            for (ci, &t) in masks.iter().enumerate() {
                let entry = block.get_mut(ri, ci);
                let mut bits = t;
                let mut pos = 0;
                while bits != 0 {
                    let tb = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let a = m.get(s0, tb);
                    if !a.is_zero() {
                        let minor = prev.get(prow, basis.rank(t & !(1 << tb)));
                        if pos % 2 == 0 {
                            entry.mul_acc(a, minor);
                        } else {
                            entry.mul_acc(&a.neg(), minor);
                        }
                    }
                    pos += 1;
                }
            }
        }
        out.push(block);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn lu_solves_and_detects_singularity() {
        let a = Mat::from_rows(
            3,
            3,
            vec![
                c(0.0, 0.0),
                c(2.0, 1.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(3.0, 0.0),
                c(0.0, -1.0),
                c(2.0, 0.0),
            ],
        );
        let b = Mat::from_rows(3, 1, vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 3.0)]);
        let x = Lu::factor(&a).unwrap().solve(&b).unwrap();
        assert!(a.matmul(&x).max_abs_diff(&b) < 1e-14);

        let s = Mat::from_rows(
            2,
            2,
            vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)],
        );
        assert!(matches!(Lu::factor(&s), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn wedge_sign_matches_hand_computation() {
        assert_eq!(wedge_sign(0b01, 0b10), 1);
        assert_eq!(wedge_sign(0b10, 0b01), -1);
        assert_eq!(wedge_sign(0b11, 0b01), 0);
        // e_2 ^ e_{13} = -e_{123}
        assert_eq!(wedge_sign(0b010, 0b101), -1);
        // e_{13} ^ e_2 = -e_{123}
        assert_eq!(wedge_sign(0b101, 0b010), -1);
    }

    #[test]
    fn compound_of_product_is_product_of_compounds() {
        let basis = Basis::new(4);
        let a = Mat::from_fn(4, 4, |r, k| {
            c((r * 7 + k * 3) as f64 % 5.0 - 2.0, (r + k) as f64 * 0.1)
        });
        let b = Mat::from_fn(4, 4, |r, k| c(((r + 2) * (k + 1)) as f64 % 3.0 - 1.0, 0.0));
        let ca = compound_matrices(&a, &basis, ());
        let cb = compound_matrices(&b, &basis, ());
        let cab = compound_matrices(&a.matmul(&b), &basis, ());
        for k in 0..=4 {
            assert!(
                ca[k].matmul(&cb[k]).max_abs_diff(&cab[k]) < 1e-12,
                "degree {k}"
            );
        }
        // top compound is the determinant: compare with LU pivots product
        assert_eq!(cab[0].rows(), 1);
        assert!(ca[1].max_abs_diff(&a) == 0.0);
    }
}
