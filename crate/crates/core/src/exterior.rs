//! Fiberwise operators of an almost Hermitian structure: Hodge star, the
//! Lefschetz pair `L`, `Λ`, the extension `𝕀` of `J`, bidegree projectors and
//! the primitive decomposition.
//!
//! Everything is generic over the coefficient ring, so the same code produces
//! the operators at the base point (`C = C64`) and as germs (`C = Jet`), the
//! latter being what the exterior differential needs.
//!
//! Conventions: `J` acts on covectors by its transpose, `(1,0)`-covectors are
//! the `+i` eigenspace of `Jᵀ` (so `dz = dx + i dy` for the standard
//! structure), `ω(X, Y) = g(JX, Y)`, `vol = ωⁿ/n!` and `⋆` is the complex-linear
//! extension of the real star defined by `α ∧ ⋆β = ⟨α, β⟩ vol`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::form::Form;
use crate::linalg::{compound_matrices, solve_normal, wedge_sign, Basis, Mat};
use crate::ring::{Coeff, C64};

/// Largest supported real dimension `2n`.
pub const MAX_REAL_DIM: usize = 8;

/// Tolerance for `J² + I = 0` when building operators.
pub const ALMOST_COMPLEX_TOL: f64 = 1e-10;

/// Tolerance for primitivity and reconstruction checks, relative to the input.
pub const DECOMPOSITION_RTOL: f64 = 1e-9;

/// Operator tables for one structure over one coefficient ring.
#[derive(Clone, Debug)]
pub struct FiberOps<C: Coeff> {
    n: usize,
    ctx: C::Ctx,
    basis: Arc<Basis>,
    jt: Mat<C>,
    omega: Form<C>,
    vol: C,
    gram: Vec<Mat<C>>,
    star: Vec<Mat<C>>,
    lef: Vec<Mat<C>>,
    lam: Vec<Mat<C>>,
    proj: Vec<Vec<Mat<C>>>,
}

/// `a = Σ_r L^r α_r` with every `α_r` primitive.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "C: Serialize, C::Ctx: Serialize"))]
pub struct PrimitiveDecomposition<C: Coeff> {
    pub base_degree: usize,
    /// `(r, α_r)` with `α_r` of degree `base_degree - 2r`, increasing in `r`.
    pub components: Vec<(usize, Form<C>)>,
}

impl<C: Coeff> PrimitiveDecomposition<C> {
    /// `α_r`, or the zero form when `r` is out of range.
    pub fn component(&self, r: usize, dim: usize, ctx: C::Ctx) -> Form<C> {
        self.components
            .iter()
            .find(|(s, _)| *s == r)
            .map_or_else(|| Form::zero(dim, ctx), |(_, f)| f.clone())
    }

    pub fn reconstruct(&self, ops: &FiberOps<C>) -> Form<C> {
        let mut out = Form::zero(ops.dim(), ops.ctx());
        for (r, alpha) in &self.components {
            out = out.add(&ops.l_pow(alpha, *r));
        }
        out
    }
}

fn imag_unit_pow(e: i64) -> C64 {
    match e.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// `i^e` for any integer exponent.
pub fn i_pow(e: i64) -> C64 {
    imag_unit_pow(e)
}

impl<C: Coeff> FiberOps<C> {
    /// Builds the operator tables from `J` (acting on tangent vectors) and the
    /// metric `g`, both `2n x 2n`. Only `J² = -I` and positivity of `g` at the
    /// base point are checked here; compatibility is the caller's business.
    pub fn new(n: usize, j: &Mat<C>, g: &Mat<C>, ctx: C::Ctx) -> Result<Self> {
        let dim = 2 * n;
        if n == 0 || dim > MAX_REAL_DIM {
            return Err(Error::InvalidParameter(format!(
                "complex dimension {n} outside 1..=4"
            )));
        }
        for m in [j, g] {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.rows(),
                });
            }
        }
        let j2 = j.matmul(j).add(&Mat::identity(dim, ctx));
        let residual = j2.max_abs();
        if residual > ALMOST_COMPLEX_TOL {
            return Err(Error::NotAlmostComplex { residual });
        }
        check_positive_definite(&g.values())?;

        let basis = Arc::new(Basis::new(dim));
        let jt = j.transpose();

        // ω_ab = g(J e_a, e_b) = (Jᵀ g)_ab
        let jtg = jt.matmul(g);
        let mut omega = Form::zero(dim, ctx);
        for a in 0..dim {
            for b in a + 1..dim {
                omega.set((1 << a) | (1 << b), jtg.get(a, b).clone());
            }
        }

        let mut top = Form::one(dim, ctx);
        let mut factorial = 1.0;
        for m in 1..=n {
            top = top.wedge(&omega)?;
            factorial *= m as f64;
        }
        let vol = top
            .coeff(basis.full())
            .scale(C64::new(1.0 / factorial, 0.0));

        let ginv = C::solve(g, &Mat::identity(dim, ctx))?;
        let gram = compound_matrices(&ginv, &basis, ctx);

        let full = basis.full();
        let star = (0..=dim)
            .map(|k| {
                let src = basis.masks(k);
                let mut m = Mat::zeros(basis.count(dim - k), src.len(), ctx);
                for (si, &s) in src.iter().enumerate() {
                    let comp = full & !s;
                    let sign = wedge_sign(s, comp) as f64;
                    let row = basis.rank(comp);
                    for ti in 0..src.len() {
                        let entry = gram[k].get(si, ti).mul(&vol).scale(C64::new(sign, 0.0));
                        m.set(row, ti, entry);
                    }
                }
                m
            })
            .collect::<Vec<_>>();

        let lef = (0..=dim)
            .map(|k| {
                let src = basis.masks(k);
                let mut m: Mat<C> = Mat::zeros(basis.count(k + 2), src.len(), ctx);
                for (ti, &t) in src.iter().enumerate() {
                    for (om, w) in omega.coeffs().iter().enumerate() {
                        let om = om as u32;
                        if om.count_ones() != 2 || w.is_zero() {
                            continue;
                        }
                        let sign = wedge_sign(om, t);
                        if sign != 0 {
                            m.get_mut(basis.rank(om | t), ti)
                                .scaled_acc(C64::new(sign as f64, 0.0), w);
                        }
                    }
                }
                m
            })
            .collect::<Vec<_>>();

        // Λ = ⋆⁻¹ L ⋆ with ⋆⁻¹ = (-1)^m ⋆ on degree m
        let lam = (0..=dim)
            .map(|k| {
                if k < 2 {
                    return Mat::zeros(0, basis.count(k), ctx);
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                star[dim - k + 2]
                    .matmul(&lef[dim - k])
                    .matmul(&star[k])
                    .scale(C64::new(sign, 0.0))
            })
            .collect::<Vec<_>>();

        // Λ^k(P + ζ P̄) = Σ_q ζ^q Π^{k-q,q}; recover the projectors by a DFT in ζ
        let half = C64::new(0.5, 0.0);
        let i_half = C64::new(0.0, 0.5);
        let id = Mat::identity(dim, ctx);
        let p10 = id.scale(half).sub(&jt.scale(i_half));
        let p01 = id.scale(half).add(&jt.scale(i_half));
        let roots = dim + 1;
        let mut proj: Vec<Vec<Mat<C>>> = (0..=dim)
            .map(|k| {
                (0..=k)
                    .map(|_| Mat::zeros(basis.count(k), basis.count(k), ctx))
                    .collect()
            })
            .collect();
        for m in 0..roots {
            let angle = 2.0 * std::f64::consts::PI * m as f64 / roots as f64;
            let zeta = C64::from_polar(1.0, angle);
            let comps = compound_matrices(&p10.add(&p01.scale(zeta)), &basis, ctx);
            for k in 0..=dim {
                for p in 0..=k {
                    let q = (k - p) as f64;
                    let w = C64::from_polar(1.0 / roots as f64, -angle * q);
                    let acc = proj[k][p].add(&comps[k].scale(w));
                    proj[k][p] = acc;
                }
            }
        }

        Ok(FiberOps {
            n,
            ctx,
            basis,
            jt,
            omega,
            vol,
            gram,
            star,
            lef,
            lam,
            proj,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        2 * self.n
    }
    pub fn ctx(&self) -> C::Ctx {
        self.ctx
    }
    pub fn basis(&self) -> &Basis {
        &self.basis
    }
    /// The fundamental 2-form `ω`.
    pub fn omega(&self) -> &Form<C> {
        &self.omega
    }
    /// `vol = ωⁿ/n!` as a top form.
    pub fn vol(&self) -> Form<C> {
        let mut v = Form::zero(self.dim(), self.ctx);
        v.set(self.basis.full(), self.vol.clone());
        v
    }
    /// Coefficient of `vol` on `dx^0 ∧ … ∧ dx^{2n-1}`.
    pub fn vol_coeff(&self) -> &C {
        &self.vol
    }
    /// `Jᵀ`, the action of `J` on covector components.
    pub fn j_transpose(&self) -> &Mat<C> {
        &self.jt
    }
    /// Gram matrix of the induced metric on degree-`k` forms.
    pub fn gram(&self, k: usize) -> &Mat<C> {
        &self.gram[k]
    }
    pub fn star_block(&self, k: usize) -> &Mat<C> {
        &self.star[k]
    }
    pub fn projector_block(&self, p: usize, q: usize) -> Option<&Mat<C>> {
        self.proj.get(p + q).and_then(|v| v.get(p))
    }

    fn check(&self, a: &Form<C>) {
        assert_eq!(a.dim(), self.dim(), "form and structure dimensions differ");
    }

    /// Applies per-degree blocks `mats[k]` mapping degree `k` to `target(k)`.
    fn apply_blocks(
        &self,
        a: &Form<C>,
        mats: &[Mat<C>],
        target: impl Fn(usize) -> Option<usize>,
    ) -> Form<C> {
        self.check(a);
        let mut out: Form<C> = Form::zero(self.dim(), self.ctx);
        for k in 0..=self.dim() {
            let Some(t) = target(k) else { continue };
            let block = a.block(&self.basis, k);
            if block.iter().all(Coeff::is_zero) {
                continue;
            }
            let image = mats[k].matvec(&block);
            let mut cur = out.block(&self.basis, t);
            for (c, v) in cur.iter_mut().zip(&image) {
                c.add_assign(v);
            }
            out.set_block(&self.basis, t, cur);
        }
        out
    }

    /// The Hodge star, degree by degree.
    pub fn hodge_star(&self, a: &Form<C>) -> Form<C> {
        let dim = self.dim();
        self.apply_blocks(a, &self.star, |k| Some(dim - k))
    }

    /// `⋆⁻¹ = (-1)^k ⋆` on degree `k`.
    pub fn hodge_star_inv(&self, a: &Form<C>) -> Form<C> {
        let mut out = Form::zero(self.dim(), self.ctx);
        for k in 0..=self.dim() {
            let part = self.hodge_star(&a.degree_part(k));
            out = out.add(&if k % 2 == 0 {
                part
            } else {
                part.scale_real(-1.0)
            });
        }
        out
    }

    /// `L a = ω ∧ a`.
    pub fn lefschetz_l(&self, a: &Form<C>) -> Form<C> {
        let dim = self.dim();
        self.apply_blocks(a, &self.lef, |k| (k + 2 <= dim).then_some(k + 2))
    }

    /// `L^j a` (identity for `j = 0`).
    pub fn l_pow(&self, a: &Form<C>, j: usize) -> Form<C> {
        (0..j).fold(a.clone(), |acc, _| self.lefschetz_l(&acc))
    }

    /// `Λ = ⋆⁻¹ L ⋆`, the pointwise adjoint of `L`.
    pub fn lambda(&self, a: &Form<C>) -> Form<C> {
        self.apply_blocks(a, &self.lam, |k| (k >= 2).then(|| k - 2))
    }

    pub fn lambda_pow(&self, a: &Form<C>, j: usize) -> Form<C> {
        (0..j).fold(a.clone(), |acc, _| self.lambda(&acc))
    }

    /// Projection onto `𝒜^{p,q}`; zero on every other degree.
    pub fn bigrade_project(&self, a: &Form<C>, p: usize, q: usize) -> Form<C> {
        self.check(a);
        let k = p + q;
        let mut out = Form::zero(self.dim(), self.ctx);
        if k > self.dim() || p > self.n || q > self.n {
            return out;
        }
        let image = self.proj[k][p].matvec(&a.block(&self.basis, k));
        out.set_block(&self.basis, k, image);
        out
    }

    /// Every nonzero `(p, q)` piece of `a`.
    pub fn bigrade_split(&self, a: &Form<C>) -> Vec<((usize, usize), Form<C>)> {
        let mut out = Vec::new();
        for k in 0..=self.dim() {
            let block = a.block(&self.basis, k);
            if block.iter().all(Coeff::is_zero) {
                continue;
            }
            for p in 0..=k {
                let q = k - p;
                if p > self.n || q > self.n {
                    continue;
                }
                let mut f = Form::zero(self.dim(), self.ctx);
                f.set_block(&self.basis, k, self.proj[k][p].matvec(&block));
                out.push(((p, q), f));
            }
        }
        out
    }

    fn weight_by_bidegree(&self, a: &Form<C>, weight: impl Fn(usize, usize) -> C64) -> Form<C> {
        let mut out = Form::zero(self.dim(), self.ctx);
        for ((p, q), piece) in self.bigrade_split(a) {
            out = out.add(&piece.scale(weight(p, q)));
        }
        out
    }

    /// `𝕀`: multiplication by `i^{p-q}` on `𝒜^{p,q}`.
    pub fn apply_i(&self, a: &Form<C>) -> Form<C> {
        self.weight_by_bidegree(a, |p, q| i_pow(p as i64 - q as i64))
    }

    /// `𝕀⁻¹`: multiplication by `(-i)^{p-q}` on `𝒜^{p,q}`.
    pub fn apply_i_inv(&self, a: &Form<C>) -> Form<C> {
        self.weight_by_bidegree(a, |p, q| i_pow(q as i64 - p as i64))
    }

    /// Hermitian pairing `⟨a, b⟩` with `a ∧ ⋆b̄ = ⟨a, b⟩ vol`; distinct degrees
    /// are orthogonal.
    pub fn inner_product(&self, a: &Form<C>, b: &Form<C>) -> C {
        self.check(a);
        self.check(b);
        let mut acc = C::zero(self.ctx);
        for k in 0..=self.dim() {
            let ab = a.block(&self.basis, k);
            if ab.iter().all(Coeff::is_zero) {
                continue;
            }
            let bb: Vec<C> = b.block(&self.basis, k).iter().map(Coeff::conj).collect();
            let gb = self.gram[k].matvec(&bb);
            for (x, y) in ab.iter().zip(&gb) {
                acc.mul_acc(x, y);
            }
        }
        acc
    }

    /// Pointwise norm `sqrt(Re⟨a, a⟩)` at the base point.
    pub fn norm(&self, a: &Form<C>) -> f64 {
        self.inner_product(a, a).value().re.max(0.0).sqrt()
    }

    /// Unique decomposition `a = Σ_r L^r α_r` with `Λ α_r = 0`, by one
    /// over-determined solve of `{Σ_r L^r α_r = a, Λ α_r = 0}`.
    pub fn lefschetz_decompose(&self, a: &Form<C>, k: usize) -> Result<PrimitiveDecomposition<C>> {
        self.check(a);
        let dim = self.dim();
        let n = self.n;
        if k > dim {
            return Err(Error::InvalidParameter(format!("degree {k} exceeds {dim}")));
        }
        let scale = a.max_abs();
        if a.sub(&a.degree_part(k)).max_abs() > DECOMPOSITION_RTOL * scale.max(1.0) {
            return Err(Error::NotHomogeneous);
        }
        let r_min = k.saturating_sub(n);
        let r_max = k / 2;
        let rs: Vec<usize> = (r_min..=r_max).collect();

        let col_offsets: Vec<usize> = rs
            .iter()
            .scan(0, |acc, &r| {
                let o = *acc;
                *acc += self.basis.count(k - 2 * r);
                Some(o)
            })
            .collect();
        let ncols: usize = rs.iter().map(|&r| self.basis.count(k - 2 * r)).sum();
        let top_rows = self.basis.count(k);
        let lam_rows: Vec<usize> = rs
            .iter()
            .map(|&r| {
                if k - 2 * r >= 2 {
                    self.basis.count(k - 2 * r - 2)
                } else {
                    0
                }
            })
            .collect();
        let nrows = top_rows + lam_rows.iter().sum::<usize>();

        let mut sys = Mat::zeros(nrows, ncols, self.ctx);
        let mut row_off = top_rows;
        for (idx, &r) in rs.iter().enumerate() {
            let m = k - 2 * r;
            // L^r restricted to degree m
            let mut lr = Mat::identity(self.basis.count(m), self.ctx);
            for s in 0..r {
                lr = self.lef[m + 2 * s].matmul(&lr);
            }
            for row in 0..top_rows {
                for col in 0..self.basis.count(m) {
                    sys.set(row, col_offsets[idx] + col, lr.get(row, col).clone());
                }
            }
            if m >= 2 {
                for row in 0..lam_rows[idx] {
                    for col in 0..self.basis.count(m) {
                        sys.set(
                            row_off + row,
                            col_offsets[idx] + col,
                            self.lam[m].get(row, col).clone(),
                        );
                    }
                }
                row_off += lam_rows[idx];
            }
        }
        let mut rhs = Mat::zeros(nrows, 1, self.ctx);
        for (row, c) in a.block(&self.basis, k).into_iter().enumerate() {
            rhs.set(row, 0, c);
        }
        let x = solve_normal(&sys, &rhs)?;
        let residual = sys.matmul(&x).sub(&rhs).max_abs();
        if residual > DECOMPOSITION_RTOL * scale.max(1.0) {
            return Err(Error::InconsistentSystem { residual });
        }

        let components = rs
            .iter()
            .enumerate()
            .map(|(idx, &r)| {
                let m = k - 2 * r;
                let vals = (0..self.basis.count(m))
                    .map(|i| x.get(col_offsets[idx] + i, 0).clone())
                    .collect();
                let mut f = Form::zero(dim, self.ctx);
                f.set_block(&self.basis, m, vals);
                (r, f)
            })
            .collect();
        Ok(PrimitiveDecomposition {
            base_degree: k,
            components,
        })
    }

    /// The primitive part `α_0` of a homogeneous form.
    pub fn primitive_part(&self, a: &Form<C>, k: usize) -> Result<Form<C>> {
        let dec = self.lefschetz_decompose(a, k)?;
        Ok(dec.component(0, self.dim(), self.ctx))
    }
}

fn check_positive_definite(g: &Mat<C64>) -> Result<()> {
    let dim = g.rows();
    let m = nalgebra::DMatrix::from_fn(dim, dim, |r, c| g.get(r, c).re);
    let sym = (&m - m.transpose()).abs().max();
    if sym > 1e-10 || g.data().iter().any(|z| z.im.abs() > 1e-10) {
        return Err(Error::NotPositiveDefinite);
    }
    match nalgebra::linalg::Cholesky::new(m) {
        Some(_) => Ok(()),
        None => Err(Error::NotPositiveDefinite),
    }
}

impl FiberOps<C64> {
    /// The standard flat structure `J₀`, `g = I` on `R^{2n}` at a point.
    pub fn flat(n: usize) -> Result<Self> {
        let (j, g) = crate::geometry::standard_pair(n);
        Self::new(n, &j, &g, ())
    }
}
