//! Independent dense realization of the fiber operators.
//!
//! Every operator is an explicit `2^{2n} × 2^{2n}` matrix over the jet ring on
//! the full coordinate basis, assembled without the structured code paths:
//! creation operators with signs found by sorting, the Gram matrix from the
//! Leibniz determinant formula, `⋆` by solving the wedge-pairing system
//! `e_S ∧ ⋆e_T = ⟨e_S, e_T⟩ vol`, `Λ` as the Gram adjoint of `L`, `𝕀` as the
//! algebra extension of `Jᵀ`, and the bigrading projectors by changing to a
//! `(1,0)`/`(0,1)` coframe and back. The Lefschetz decomposition at the point
//! is rebuilt from SVD kernels of `Λ`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::calculus::{adjoint_op, exterior_d, Differential};
use crate::error::{Error, Result};
use crate::form::{Form, FormAtPoint, JetForm};
use crate::geometry::{AlmostHermitianStructure, Fiber};
use crate::identities::coefficients::admissible;
use crate::jet::{jet_linear_solve, Jet, JetShape};
use crate::linalg::Mat;
use crate::ring::{Coeff, C64};
use crate::sampling::random_primitive_germ;

use super::residual::{Check, Comparison, Indices};
use super::theorem::{conjugated_star, lambda_d_parts, theorem_sides, Mutation};

/// Relative singular-value cutoff for the kernel of `Λ`.
const KERNEL_RTOL: f64 = 1e-9;

/// `dx^i ∧ ·` on the full basis; the sign is the parity of the sort that moves
/// `i` to its place.
fn creation(dim: usize, i: usize) -> Mat<C64> {
    let size = 1usize << dim;
    let mut m = Mat::zeros(size, size, ());
    for s in 0..size {
        if s & (1 << i) != 0 {
            continue;
        }
        let mut seq = vec![i];
        seq.extend((0..dim).filter(|b| s & (1 << b) != 0));
        let mut swaps = 0;
        for pass in 0..seq.len() {
            for x in 0..seq.len() - 1 - pass {
                if seq[x] > seq[x + 1] {
                    seq.swap(x, x + 1);
                    swaps += 1;
                }
            }
        }
        let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
        m.set(s | (1 << i), s, C64::new(sign, 0.0));
    }
    m
}

fn bits(s: usize, dim: usize) -> Vec<usize> {
    (0..dim).filter(|b| s & (1 << b) != 0).collect()
}

fn permutation_parity(p: &[usize]) -> f64 {
    let mut inversions = 0;
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            if p[a] > p[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// `det m[rows, cols]` by the Leibniz formula.
fn minor(m: &Mat<Jet>, rows: &[usize], cols: &[usize], shape: JetShape) -> Jet {
    let mut acc = Jet::zero(shape);
    for perm in permutations(rows.len()) {
        let mut term = Jet::constant(shape, C64::new(permutation_parity(&perm), 0.0));
        for (a, &b) in perm.iter().enumerate() {
            term = &term * m.get(rows[a], cols[b]);
        }
        acc.add_assign(&term);
    }
    acc
}

fn scale_by(m: &Mat<Jet>, s: &Jet) -> Mat<Jet> {
    m.map(|x| x * s)
}

/// `v_1 ∧ (v_2 ∧ (… ∧ 1))` for the covectors whose wedge operators are `ops`.
fn wedge_chain(ops: &[&Mat<Jet>], unit: &[Jet]) -> Vec<Jet> {
    ops.iter()
        .rev()
        .fold(unit.to_vec(), |acc, op| op.matvec(&acc))
}

/// Dense operator matrices of one structure.
pub struct DenseOracle {
    n: usize,
    creation: Vec<Mat<C64>>,
    pub l: Mat<Jet>,
    pub gram: Mat<Jet>,
    pub vol: Vec<Jet>,
    pub star: Mat<Jet>,
    pub lambda: Mat<Jet>,
    pub i_op: Mat<Jet>,
    pub i_inv: Mat<Jet>,
    projectors: Vec<Mat<Jet>>,
}

impl DenseOracle {
    pub fn new(s: &AlmostHermitianStructure) -> Result<Self> {
        let n = s.n;
        let dim = 2 * n;
        let size = 1usize << dim;
        let shape = s.shape();
        let lift = |m: &Mat<C64>| m.map(|c| Jet::constant(shape, *c));
        let creation: Vec<Mat<C64>> = (0..dim).map(|i| creation(dim, i)).collect();
        let lifted: Vec<Mat<Jet>> = creation.iter().map(lift).collect();
        let (j, g) = (s.j_mat(), s.g_mat());

        // L = Σ_{a<b} ω_ab E_a E_b with ω_ab = Σ_c J_ca g_cb
        let mut l = Mat::zeros(size, size, shape);
        for a in 0..dim {
            for b in a + 1..dim {
                let mut w = Jet::zero(shape);
                for c in 0..dim {
                    w.mul_acc(j.get(c, a), g.get(c, b));
                }
                l = l.add(&scale_by(&lifted[a].matmul(&lifted[b]), &w));
            }
        }

        let mut unit = vec![Jet::zero(shape); size];
        unit[0] = Jet::one(shape);
        let mut vol = unit.clone();
        let mut fact = 1.0;
        for m in 1..=n {
            vol = l.matvec(&vol);
            fact *= m as f64;
        }
        let vol: Vec<Jet> = vol
            .iter()
            .map(|x| x.scale(C64::new(1.0 / fact, 0.0)))
            .collect();
        let v = vol[size - 1].clone();

        let g_inv = jet_linear_solve(&g, &Mat::identity(dim, shape))?;
        let gram = Mat::from_fn(size, size, |a, b| {
            if a.count_ones() != b.count_ones() {
                return Jet::zero(shape);
            }
            minor(&g_inv, &bits(a, dim), &bits(b, dim), shape)
        });

        // W[S, U] = coefficient of e_full in e_S ∧ e_U
        let full = size - 1;
        let mut pairing = Mat::zeros(size, size, ());
        for sm in 0..size {
            let mut op = Mat::identity(size, ());
            for &b in bits(sm, dim).iter().rev() {
                op = creation[b].matmul(&op);
            }
            for u in 0..size {
                pairing.set(sm, u, *op.get(full, u));
            }
        }
        let star = jet_linear_solve(&lift(&pairing), &scale_by(&gram, &v))?;
        let lambda = jet_linear_solve(&gram, &l.transpose().matmul(&gram))?;

        // 𝕀 e_S = Jᵀdx^{s_1} ∧ … ∧ Jᵀdx^{s_k}, with Jᵀdx^s = Σ_a J_sa dx^a
        let jt_ops: Vec<Mat<Jet>> = (0..dim)
            .map(|sidx| {
                (0..dim).fold(Mat::zeros(size, size, shape), |acc, a| {
                    acc.add(&scale_by(&lifted[a], j.get(sidx, a)))
                })
            })
            .collect();
        let mut i_op = Mat::zeros(size, size, shape);
        for sm in 0..size {
            let chain: Vec<&Mat<Jet>> = bits(sm, dim).iter().map(|&b| &jt_ops[b]).collect();
            for (r, x) in wedge_chain(&chain, &unit).into_iter().enumerate() {
                i_op.set(r, sm, x);
            }
        }
        let i_inv = jet_linear_solve(&i_op, &Mat::identity(size, shape))?;

        let projectors = frame_projectors(n, &j, &lifted, &unit, shape)?;
        Ok(Self {
            n,
            creation,
            l,
            gram,
            vol,
            star,
            lambda,
            i_op,
            i_inv,
            projectors,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        1 << (2 * self.n)
    }

    /// `Π^{p,q}` on the full basis.
    pub fn projector(&self, p: usize, q: usize) -> &Mat<Jet> {
        &self.projectors[p * (self.n + 1) + q]
    }

    /// `(d x)(0) = Σ_i dx^i ∧ ∂_i x`.
    pub fn d_at_point(&self, x: &[Jet]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.size()];
        for (i, e) in self.creation.iter().enumerate() {
            let partial: Vec<C64> = x.iter().map(|c| c.gradient()[i]).collect();
            for (o, v) in out.iter_mut().zip(e.matvec(&partial)) {
                *o += v;
            }
        }
        out
    }

    /// Lefschetz components `(r, α_r)` of a homogeneous degree-`k` point form,
    /// from an SVD basis of each `ker Λ` and one square solve.
    pub fn lefschetz_decompose(&self, form: &[C64], k: usize) -> Result<Vec<(usize, Vec<C64>)>> {
        let size = self.size();
        let lam = self.lambda.values();
        let l = self.l.values();
        let deg = |m: usize| -> Vec<usize> {
            (0..size).filter(|s| s.count_ones() as usize == m).collect()
        };
        let target = deg(k);
        let mut columns: Vec<(usize, Vec<C64>, Vec<C64>)> = Vec::new();
        for r in 0..=k / 2 {
            let m = k - 2 * r;
            let src = deg(m);
            let dst: Vec<usize> = if m >= 2 { deg(m - 2) } else { Vec::new() };
            let kernel = if dst.is_empty() {
                (0..src.len())
                    .map(|c| {
                        (0..src.len())
                            .map(|x| C64::new((x == c) as u8 as f64, 0.0))
                            .collect()
                    })
                    .collect()
            } else {
                let block = DMatrix::from_fn(dst.len(), src.len(), |a, b| *lam.get(dst[a], src[b]));
                let gram = block.adjoint() * &block;
                let svd = gram.svd(false, true);
                let v_t = svd.v_t.ok_or(Error::SingularSystem { pivot: 0.0 })?;
                let top = svd.singular_values.max();
                (0..src.len())
                    .filter(|&x| svd.singular_values[x] <= KERNEL_RTOL * top.max(1.0))
                    .map(|x| {
                        (0..src.len())
                            .map(|c| v_t[(x, c)].conj())
                            .collect::<Vec<C64>>()
                    })
                    .collect::<Vec<_>>()
            };
            for kv in kernel {
                let mut full = vec![C64::new(0.0, 0.0); size];
                for (c, s) in src.iter().enumerate() {
                    full[*s] = kv[c];
                }
                let mut image = full.clone();
                for _ in 0..r {
                    image = l.matvec(&image);
                }
                if image.iter().map(|z| z.norm()).fold(0.0, f64::max) > 1e-10 {
                    columns.push((r, full, image));
                }
            }
        }
        if columns.len() != target.len() {
            return Err(Error::InconsistentSystem {
                residual: (columns.len() as f64 - target.len() as f64).abs(),
            });
        }
        let basis = DMatrix::from_fn(target.len(), columns.len(), |x, c| columns[c].2[target[x]]);
        let rhs = nalgebra::DVector::from_fn(target.len(), |x, _| form[target[x]]);
        let coeffs = basis
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularSystem { pivot: 0.0 })?;
        let mut out: Vec<(usize, Vec<C64>)> = (0..=k / 2)
            .map(|r| (r, vec![C64::new(0.0, 0.0); size]))
            .collect();
        for (c, (r, full, _)) in columns.iter().enumerate() {
            for (o, x) in out[*r].1.iter_mut().zip(full) {
                *o += coeffs[c] * x;
            }
        }
        Ok(out)
    }
}

/// Projectors `Π^{p,q} = C D_{p,q} C⁻¹`, with `C` the algebra extension of the
/// change to a coframe `(θ^1…θ^n, θ̄^1…θ̄^n)` of `(1,0)`-forms `θ^a` taken as
/// columns of `(1 − iJᵀ)/2`, and `D_{p,q}` selecting frame multi-indices with
/// `p` unbarred and `q` barred factors.
fn frame_projectors(
    n: usize,
    j: &Mat<Jet>,
    lifted: &[Mat<Jet>],
    unit: &[Jet],
    shape: JetShape,
) -> Result<Vec<Mat<Jet>>> {
    let dim = 2 * n;
    let size = 1usize << dim;
    let half = C64::new(0.5, 0.0);
    let minus_half_i = C64::new(0.0, -0.5);
    // (1 − iJᵀ)/2, entry (a, b) = (δ_ab − i J_ba)/2
    let p10 = Mat::from_fn(dim, dim, |a, b| {
        let mut x = j.get(b, a).scale(minus_half_i);
        if a == b {
            x.add_assign(&Jet::constant(shape, half));
        }
        x
    });

    // greedy choice of n columns independent at the point
    let values = p10.values();
    let mut chosen: Vec<usize> = Vec::new();
    let mut ortho: Vec<Vec<C64>> = Vec::new();
    for c in 0..dim {
        let mut v = values.column(c);
        let norm0 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for u in &ortho {
            let dot: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.1 * norm0 && norm0 > 0.0 {
            ortho.push(v.iter().map(|z| z / norm).collect());
            chosen.push(c);
        }
        if chosen.len() == n {
            break;
        }
    }
    if chosen.len() != n {
        return Err(Error::NotAlmostComplex { residual: f64::NAN });
    }

    let frame_cols: Vec<Vec<Jet>> = chosen
        .iter()
        .map(|&c| (0..dim).map(|a| p10.get(a, c).clone()).collect::<Vec<_>>())
        .chain(
            chosen
                .iter()
                .map(|&c| (0..dim).map(|a| p10.get(a, c).conj()).collect::<Vec<_>>()),
        )
        .collect();
    let frame_ops: Vec<Mat<Jet>> = frame_cols
        .iter()
        .map(|col| {
            (0..dim).fold(Mat::zeros(size, size, shape), |acc, a| {
                acc.add(&scale_by(&lifted[a], &col[a]))
            })
        })
        .collect();
    let mut change = Mat::zeros(size, size, shape);
    for f in 0..size {
        let chain: Vec<&Mat<Jet>> = bits(f, dim).iter().map(|&b| &frame_ops[b]).collect();
        for (r, x) in wedge_chain(&chain, unit).into_iter().enumerate() {
            change.set(r, f, x);
        }
    }
    let change_inv = jet_linear_solve(&change, &Mat::identity(size, shape))?;
    let low = (1usize << n) - 1;
    let mut out = Vec::with_capacity((n + 1) * (n + 1));
    for p in 0..=n {
        for q in 0..=n {
            let select = Mat::from_fn(size, size, |a, b| {
                let keep = a == b
                    && (a & low).count_ones() as usize == p
                    && (a >> n).count_ones() as usize == q;
                Jet::constant(shape, C64::new(keep as u8 as f64, 0.0))
            });
            out.push(change.matmul(&select).matmul(&change_inv));
        }
    }
    Ok(out)
}

fn sup_jets(a: &[Jet]) -> f64 {
    a.iter().map(Coeff::max_abs).fold(0.0, f64::max)
}

fn sup_diff_jets(a: &[Jet], b: &[Jet]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.sub(y).max_abs())
        .fold(0.0, f64::max)
}

fn sup_c64(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sup_diff_c64(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Running sup-norm comparison, one slot per degree.
struct Tally(Vec<Comparison>);

impl Tally {
    fn new(slots: usize) -> Self {
        Self(vec![Comparison::sup(0.0, 0.0, 0.0); slots])
    }
    fn add(&mut self, slot: usize, lhs: f64, rhs: f64, diff: f64) {
        let c = &mut self.0[slot];
        c.lhs_norm = c.lhs_norm.max(lhs);
        c.rhs_norm = c.rhs_norm.max(rhs);
        c.residual_abs = c.residual_abs.max(diff);
    }
    fn emit(self, id: &str, out: &mut Vec<Check>) {
        for (k, c) in self.0.into_iter().enumerate() {
            out.push(Check::holds(id, Indices::k(k), c));
        }
    }
}

/// Structured operators against the dense oracle on every basis element (and
/// every basis germ `e_S`, `x^i e_S` for operators involving `d`), plus the
/// theorem's left-hand side on random primitive germs.
pub fn oracle_checks(fiber: &Fiber, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let s = fiber.structure();
    let oracle = DenseOracle::new(s)?;
    let order = s.order();
    let shape = s.shape();
    let ops = fiber.jet(order)?;
    let pt = fiber.point();
    let (n, dim, size) = (fiber.n(), fiber.dim(), oracle.size());
    let mut out = Vec::new();
    let degree = |sm: usize| sm.count_ones() as usize;

    let fiber_ops: [(&str, &dyn Fn(&JetForm) -> JetForm, &Mat<Jet>); 5] = [
        ("oracle.star", &|a| ops.hodge_star(a), &oracle.star),
        ("oracle.l", &|a| ops.lefschetz_l(a), &oracle.l),
        ("oracle.lambda", &|a| ops.lambda(a), &oracle.lambda),
        ("oracle.i", &|a| ops.apply_i(a), &oracle.i_op),
        ("oracle.i_inv", &|a| ops.apply_i_inv(a), &oracle.i_inv),
    ];
    for (id, op, mat) in fiber_ops {
        let mut tally = Tally::new(dim + 1);
        for sm in 0..size {
            let got = op(&Form::basis(dim, shape, sm as u32));
            let want = mat.column(sm);
            tally.add(
                degree(sm),
                sup_jets(got.coeffs()),
                sup_jets(&want),
                sup_diff_jets(got.coeffs(), &want),
            );
        }
        tally.emit(id, &mut out);
    }

    for p in 0..=n {
        for q in 0..=n {
            let mut c = Comparison::sup(0.0, 0.0, 0.0);
            for sm in (0..size).filter(|&sm| degree(sm) == p + q) {
                let got = ops.bigrade_project(&Form::basis(dim, shape, sm as u32), p, q);
                let want = oracle.projector(p, q).column(sm);
                c.lhs_norm = c.lhs_norm.max(sup_jets(got.coeffs()));
                c.rhs_norm = c.rhs_norm.max(sup_jets(&want));
                c.residual_abs = c.residual_abs.max(sup_diff_jets(got.coeffs(), &want));
            }
            out.push(Check::holds(
                "oracle.bigrade_projector",
                Indices::pq(p, q),
                c,
            ));
        }
    }

    // operators containing d, on basis germs
    let star_pt = oracle.star.values();
    let lambda_pt = oracle.lambda.values();
    let i_inv_pt = oracle.i_inv.values();
    let mut tallies: Vec<Tally> = (0..4).map(|_| Tally::new(dim + 1)).collect();
    for sm in 0..size {
        let e = Form::basis(dim, shape, sm as u32);
        let germs = std::iter::once(e.clone())
            .chain((0..dim).map(|i| e.mul_coeff(&Jet::coordinate(shape, i))));
        for germ in germs {
            let x = germ.coeffs();
            let d_want = oracle.d_at_point(x);
            let d_got = exterior_d(&germ)?.values();

            let inner = oracle.d_at_point(&oracle.i_op.matvec(&oracle.star.matvec(x)));
            let cs_want = star_pt.matvec(&i_inv_pt.matvec(&inner));
            let cs_got = conjugated_star(fiber, &germ)?;

            let ld_want: Vec<C64> = lambda_pt
                .matvec(&d_want)
                .iter()
                .zip(oracle.d_at_point(&oracle.lambda.matvec(x)))
                .map(|(a, b)| a - b)
                .collect();
            let (ld, dl) = lambda_d_parts(fiber, &germ)?;
            let ld_got = ld.sub(&dl);

            let ds_want: Vec<C64> = star_pt
                .matvec(&oracle.d_at_point(&oracle.star.matvec(x)))
                .iter()
                .map(|z| -z)
                .collect();
            let ds_got = adjoint_op(fiber, Differential::D, &germ)?;

            for (t, (got, want)) in tallies.iter_mut().zip([
                (d_got, d_want),
                (cs_got, cs_want),
                (ld_got, ld_want),
                (ds_got, ds_want),
            ]) {
                t.add(
                    degree(sm),
                    sup_c64(got.coeffs()),
                    sup_c64(&want),
                    sup_diff_c64(got.coeffs(), &want),
                );
            }
        }
    }
    let names = [
        "oracle.d",
        "oracle.conjugated_star",
        "oracle.lambda_d_commutator",
        "oracle.d_star",
    ];
    for (t, id) in tallies.into_iter().zip(names) {
        t.emit(id, &mut out);
    }

    // Lefschetz decomposition at the point
    let mut tally = Tally::new(dim + 1);
    for sm in 0..size {
        let k = degree(sm);
        let e: FormAtPoint = Form::basis(dim, (), sm as u32);
        let got = pt.lefschetz_decompose(&e, k)?;
        for (r, want) in oracle.lefschetz_decompose(e.coeffs(), k)? {
            let g = got.component(r, dim, ());
            tally.add(
                k,
                sup_c64(g.coeffs()),
                sup_c64(&want),
                sup_diff_c64(g.coeffs(), &want),
            );
        }
    }
    tally.emit("oracle.lefschetz", &mut out);

    // the theorem's left-hand side on random primitive germs
    for (k, j) in admissible(n) {
        let alpha = random_primitive_germ(fiber, rng, k, order)?;
        let got = theorem_sides(fiber, &alpha, k, j, Mutation::None)?.lhs();
        let mut eta = alpha.coeffs().to_vec();
        for _ in 0..j {
            eta = oracle.l.matvec(&eta);
        }
        let ld = lambda_pt.matvec(&oracle.d_at_point(&eta));
        let dl = oracle.d_at_point(&oracle.lambda.matvec(&eta));
        let inner = oracle.d_at_point(&oracle.i_op.matvec(&oracle.star.matvec(&eta)));
        let cs = star_pt.matvec(&i_inv_pt.matvec(&inner));
        let want: Vec<C64> = (0..size).map(|x| ld[x] - dl[x] - cs[x]).collect();
        let c = Comparison::sup(
            sup_c64(got.coeffs()),
            sup_c64(&want),
            sup_diff_c64(got.coeffs(), &want),
        );
        out.push(Check::holds("oracle.theorem_lhs", Indices::kj(k, j), c));
    }

    // internal consistency of the oracle: ⋆⋆ = (−1)^k and Λ = ⋆⁻¹L⋆
    let mut squared = Tally::new(dim + 1);
    let mut adjoint = Tally::new(dim + 1);
    for sm in 0..size {
        let k = degree(sm);
        let col = oracle.star.column(sm);
        let ss = oracle.star.matvec(&col);
        let mut e = vec![Jet::zero(shape); size];
        e[sm] = Jet::constant(shape, C64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
        squared.add(k, sup_jets(&ss), 1.0, sup_diff_jets(&ss, &e));
        let sls = oracle.star.matvec(&oracle.l.matvec(&col));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let via_star: Vec<Jet> = sls.iter().map(|x| x.scale(C64::new(sign, 0.0))).collect();
        let lam = oracle.lambda.column(sm);
        adjoint.add(
            k,
            sup_jets(&via_star),
            sup_jets(&lam),
            sup_diff_jets(&via_star, &lam),
        );
    }
    squared.emit("oracle.self.star_squared", &mut out);
    adjoint.emit("oracle.self.lambda_star", &mut out);
    Ok(out)
}
