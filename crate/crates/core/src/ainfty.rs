//! Transferred A∞ operations by sums over planar trees.
//!
//! The tree formulas only need, for every ordered pair of objects, a product,
//! a differential and a strong deformation retraction `(p, h)`. That data is
//! abstracted as [`TransferSystem`], implemented both by the spectral family
//! of Witten complexes and by a finite-dimensional dg algebra used to check
//! the signs.
//!
//! Inputs are passed in leaf order: `inputs[l]` lives over the pair
//! `(objects[l], objects[l+1])`. In the composition `μ(x, y)` the first
//! argument is the one over the later pair.
//!
//! Two normalizations coexist. [`mk_tree`] and [`mk_total`] are the unsigned
//! tree sums whose pairings are compared with Morse counts. [`transferred`]
//! carries the bar-complex signs `B_1 = -d`, `B_n = Σ_T ε_T p(T)` with
//! `ε_T = Π_v (-1)^{|first input at v|}`, in which the relations read
//! `Σ (-1)^{Σ_{i≤r}(|x_i|-1)} B(x_1..x_r, B(x_{r+1}..x_{r+s}), ..) = 0`
//! (arguments `x_1, x_2, ..` in composition order, that is, reversed leaves).

use crate::derham::{build_d, wedge, CircleGrid, Cochain};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, Mat};
use crate::morse::{action, CriticalPoint, Sequence};
use crate::real::Real;
use crate::spectral::Retract;
use crate::trees::{enumerate_topologies, EdgeKind, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A homogeneous element.
#[derive(Clone, Debug, PartialEq)]
pub struct Graded<T> {
    pub degree: i32,
    pub values: Vec<T>,
}

impl<T: Real> Graded<T> {
    pub fn zero(degree: i32, len: usize) -> Self {
        Graded { degree, values: vec![T::zero(); len] }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Graded { degree: self.degree, values: self.values.iter().map(|v| v.mul_f64(s)).collect() }
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }
}

pub trait TransferSystem: Sync {
    type Scalar: Real;
    /// `μ(x, y)` for `x` over `(j, k)` and `y` over `(i, j)`.
    fn product(&self, x: &Graded<Self::Scalar>, y: &Graded<Self::Scalar>) -> Graded<Self::Scalar>;
    fn d(&self, pair: (usize, usize), x: &Graded<Self::Scalar>) -> Graded<Self::Scalar>;
    fn h(&self, pair: (usize, usize), x: &Graded<Self::Scalar>) -> Graded<Self::Scalar>;
    fn p(&self, pair: (usize, usize), x: &Graded<Self::Scalar>) -> Graded<Self::Scalar>;
    fn norm(&self, x: &Graded<Self::Scalar>) -> f64;
}

/// Value of one tree with `h` on internal edges and no projection at the
/// root, together with its bar sign `ε_T`.
pub fn tree_value<S: TransferSystem>(
    sys: &S,
    topo: &Topology,
    objects: &[usize],
    inputs: &[Graded<S::Scalar>],
) -> (Graded<S::Scalar>, f64) {
    let mut vals: Vec<Option<Graded<S::Scalar>>> = vec![None; topo.node_count()];
    for (l, x) in inputs.iter().enumerate() {
        vals[l] = Some(x.clone());
    }
    let mut sign = 1.0;
    let mut last = None;
    for v in &topo.vertices {
        let upper = vals[v.upper].take().expect("post-order");
        let lower = vals[v.lower].take().expect("post-order");
        if upper.degree % 2 != 0 {
            sign = -sign;
        }
        let prod = sys.product(&upper, &lower);
        let e = &topo.edges[v.id];
        let out = match e.kind {
            EdgeKind::Internal => sys.h((objects[e.label.0], objects[e.label.1]), &prod),
            _ => prod,
        };
        last = Some(v.id);
        vals[v.id] = Some(out);
    }
    let top = last.expect("k >= 2");
    (vals[top].take().unwrap(), sign)
}

/// `B_n` in bar conventions.
pub fn transferred<S: TransferSystem>(sys: &S, objects: &[usize], inputs: &[Graded<S::Scalar>]) -> Result<Graded<S::Scalar>> {
    let n = inputs.len();
    let root = (objects[0], objects[n]);
    if n == 1 {
        return Ok(sys.p(root, &sys.d(root, &inputs[0])).scaled(-1.0));
    }
    let mut acc: Option<Graded<S::Scalar>> = None;
    for topo in enumerate_topologies(n)? {
        let (v, eps) = tree_value(sys, &topo, objects, inputs);
        let t = sys.p(root, &v).scaled(eps);
        match &mut acc {
            None => acc = Some(t),
            Some(a) => a.add_assign(&t),
        }
    }
    Ok(acc.unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationResidual {
    pub n: usize,
    pub absolute: f64,
    /// `absolute / Π ‖x_i‖`.
    pub relative: f64,
    pub largest_term: f64,
}

/// The `n`-th A∞ relation evaluated on `inputs`.
pub fn ainfty_residual<S: TransferSystem>(
    sys: &S,
    objects: &[usize],
    inputs: &[Graded<S::Scalar>],
) -> Result<RelationResidual> {
    let n = inputs.len();
    if n == 0 || objects.len() != n + 1 {
        return Err(Error::InvalidArity(n));
    }
    let mut total: Option<Graded<S::Scalar>> = None;
    let mut largest = 0.0f64;
    for a in 0..n {
        for b in a..n {
            let inner = transferred(sys, &objects[a..=b + 1], &inputs[a..=b])?;
            let mut outer_inputs: Vec<Graded<S::Scalar>> = inputs[..a].to_vec();
            outer_inputs.push(inner);
            outer_inputs.extend_from_slice(&inputs[b + 1..]);
            let mut outer_objects: Vec<usize> = objects[..=a].to_vec();
            outer_objects.extend_from_slice(&objects[b + 1..]);
            let shift: i32 = inputs[b + 1..].iter().map(|x| x.degree - 1).sum();
            let sign = if shift % 2 == 0 { 1.0 } else { -1.0 };
            let term = transferred(sys, &outer_objects, &outer_inputs)?.scaled(sign);
            largest = largest.max(sys.norm(&term));
            match &mut total {
                None => total = Some(term),
                Some(t) => t.add_assign(&term),
            }
        }
    }
    let absolute = sys.norm(&total.unwrap());
    let scale: f64 = inputs.iter().map(|x| sys.norm(x)).product();
    Ok(RelationResidual { n, absolute, relative: absolute / scale, largest_term: largest })
}

/// Retractions for every ordered pair of a function sequence at one `ħ`.
pub struct Family<T> {
    pub seq: Sequence,
    pub grid: CircleGrid,
    pub hbar: f64,
    retracts: Vec<Vec<Option<Retract<T>>>>,
}

impl<T: Real> Family<T> {
    /// Builds all pairs in parallel.
    pub fn new(seq: &Sequence, grid: CircleGrid, hbar: f64) -> Result<Family<T>> {
        let n = seq.len();
        let d = build_d::<T>(&grid);
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let built: Vec<Result<Retract<T>>> =
            pairs.par_iter().map(|&(i, j)| Retract::new(grid, seq.f(i, j), hbar, &d)).collect();
        let mut retracts: Vec<Vec<Option<Retract<T>>>> = (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
        for ((i, j), r) in pairs.into_iter().zip(built) {
            retracts[i][j] = Some(r?);
        }
        Ok(Family { seq: seq.clone(), grid, hbar, retracts })
    }

    pub fn retract(&self, i: usize, j: usize) -> &Retract<T> {
        self.retracts[i][j].as_ref().expect("pairs are ordered i < j")
    }

    pub fn retracts(&self) -> impl Iterator<Item = ((usize, usize), &Retract<T>)> {
        self.retracts
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().filter_map(move |(j, r)| r.as_ref().map(|r| ((i, j), r))))
    }

    pub fn warnings(&self) -> Vec<String> {
        self.retracts().flat_map(|((i, j), r)| r.warnings.iter().map(move |w| format!("pair ({i},{j}): {w}"))).collect()
    }

    pub fn homotopy_residual(&self) -> f64 {
        self.retracts().map(|(_, r)| r.homotopy_residual).fold(0.0, f64::max)
    }

    fn leaf_inputs(&self, q: &[CriticalPoint]) -> Result<Vec<Graded<T>>> {
        let k = q.len() - 1;
        (0..k)
            .map(|l| {
                let r = self.retract(l, l + 1);
                let e = r.eigenform(&q[l]).ok_or_else(|| not_critical(&q[l]))?;
                Ok(Graded { degree: e.form.degree as i32, values: e.form.values.clone() })
            })
            .collect()
    }
}

fn not_critical(q: &CriticalPoint) -> Error {
    Error::Schema { path: "q_tuple".into(), msg: format!("{:.6} is not a critical point of its pair", q.theta) }
}

impl<T: Real> TransferSystem for Family<T> {
    type Scalar = T;

    fn product(&self, x: &Graded<T>, y: &Graded<T>) -> Graded<T> {
        let degree = x.degree + y.degree;
        if !(0..=1).contains(&x.degree) || !(0..=1).contains(&y.degree) || degree > 1 {
            return Graded::zero(degree, self.grid.n);
        }
        let a = Cochain { degree: x.degree as u8, values: x.values.clone() };
        let b = Cochain { degree: y.degree as u8, values: y.values.clone() };
        Graded { degree, values: wedge(&a, &b).values }
    }

    fn d(&self, (i, j): (usize, usize), x: &Graded<T>) -> Graded<T> {
        if x.degree != 0 {
            return Graded::zero(x.degree + 1, self.grid.n);
        }
        Graded { degree: 1, values: self.retract(i, j).apply_d(&x.values) }
    }

    fn h(&self, (i, j): (usize, usize), x: &Graded<T>) -> Graded<T> {
        if x.degree != 1 {
            return Graded::zero(x.degree - 1, self.grid.n);
        }
        Graded { degree: 0, values: self.retract(i, j).h.matvec(&x.values) }
    }

    fn p(&self, (i, j): (usize, usize), x: &Graded<T>) -> Graded<T> {
        if !(0..=1).contains(&x.degree) {
            return Graded::zero(x.degree, self.grid.n);
        }
        Graded { degree: x.degree, values: self.retract(i, j).spectrum(x.degree as u8).project(&x.values) }
    }

    fn norm(&self, x: &Graded<T>) -> f64 {
        self.grid.inner(&x.values, &x.values).to_f64().sqrt()
    }
}

/// Pairing of one tree's output with the output eigenform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreePairing {
    pub topology_id: usize,
    /// `ln |pairing|`; `None` when the pairing is exactly zero.
    pub pairing_log_abs: Option<f64>,
    pub sign: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductValue {
    pub k: usize,
    pub q_tuple: Vec<f64>,
    pub hbar: f64,
    pub action: f64,
    pub pairing_log_abs: Option<f64>,
    pub pairing_sign: i32,
    pub per_tree: Vec<TreePairing>,
}

fn log_sign<T: Real>(v: T) -> (Option<f64>, i32) {
    let s = v.signum_f64() as i32;
    if s == 0 {
        (None, 0)
    } else {
        // ln of a double-double: ln(hi) + lo/hi
        let x = v.abs();
        let hi = x.to_f64();
        (Some(hi.ln() + (x - T::from_f64(hi)).to_f64() / hi), s)
    }
}

/// `⟨m_k^T(φ_{q_01}, …), φ_{q_0k}⟩` for one topology, without signs.
pub fn mk_tree<T: Real>(family: &Family<T>, topo: &Topology, q: &[CriticalPoint]) -> Result<T> {
    let k = topo.k;
    if q.len() != k + 1 || family.seq.len() != k + 1 {
        return Err(Error::Schema {
            path: "q_tuple".into(),
            msg: format!("k = {k} needs {} critical points and {} functions", k + 1, k + 1),
        });
    }
    let inputs = family.leaf_inputs(q)?;
    let root = family.retract(0, k);
    let objects: Vec<usize> = (0..=k).collect();
    let out = if k == 1 {
        family.d((0, 1), &inputs[0])
    } else {
        tree_value(family, topo, &objects, &inputs).0
    };
    if !(0..=1).contains(&out.degree) || out.degree as usize != q[k].index {
        return Ok(T::zero());
    }
    let c = root.project(&Cochain { degree: out.degree as u8, values: out.values });
    root.pairing(&c, &q[k])
}

/// The pairing of `m_k` summed over all topologies, plus the per-tree parts.
pub fn mk_total<T: Real>(family: &Family<T>, q: &[CriticalPoint]) -> Result<(T, Vec<(usize, T)>)> {
    let k = q.len() - 1;
    let per: Vec<(usize, T)> = enumerate_topologies(k)?
        .iter()
        .map(|t| mk_tree(family, t, q).map(|v| (t.id, v)))
        .collect::<Result<_>>()?;
    let total = per.iter().fold(T::zero(), |a, (_, v)| a + *v);
    Ok((total, per))
}

pub fn product_value<T: Real>(family: &Family<T>, q: &[CriticalPoint]) -> Result<ProductValue> {
    let (total, per) = mk_total(family, q)?;
    let (pairing_log_abs, pairing_sign) = log_sign(total);
    Ok(ProductValue {
        k: q.len() - 1,
        q_tuple: q.iter().map(|c| c.theta).collect(),
        hbar: family.hbar,
        action: action(q),
        pairing_log_abs,
        pairing_sign,
        per_tree: per
            .into_iter()
            .map(|(id, v)| {
                let (l, s) = log_sign(v);
                TreePairing { topology_id: id, pairing_log_abs: l, sign: s }
            })
            .collect(),
    })
}

/// A finite-dimensional dg algebra `End(V)` with a Hodge-type retraction
/// onto its cohomology, for checking the transfer signs away from any
/// discretization. All pairs share the same algebra.
pub struct EndAlgebra {
    pub degrees: Vec<i32>,
    /// Operators on row-major vectorized matrices.
    d: Mat<f64>,
    h: Mat<f64>,
    p: Mat<f64>,
    /// Metric on the vectorized matrices. [`EndAlgebra::new`] uses `⟨A, B⟩ = tr(Aᵀ M B M⁻¹)`.
    gram: Mat<f64>,
    pub homotopy_residual: f64,
}

impl EndAlgebra {
    /// `V` graded in degrees `[0, 0, 1, 1, 2]` with a random rank-one `Q`
    /// from degree 0 to degree 1, so that `H(V)` has one class in each degree,
    /// and a random block-diagonal metric.
    ///
    /// The metric on `End(V)` is the induced one plus a random perturbation
    /// inside each degree. The induced metric alone makes the harmonic part
    /// a subalgebra, and then every `m_k` with `k >= 3` vanishes.
    pub fn toy(seed: u64) -> EndAlgebra {
        let degrees = vec![0, 0, 1, 1, 2];
        let n = degrees.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = || rng.gen_range(-1.0..1.0);
        let (u, v) = ([r(), r()], [r(), r()]);
        let mut q = Mat::zeros(n, n);
        for a in 0..2 {
            for b in 0..2 {
                q[(2 + a, b)] = u[a] * v[b];
            }
        }
        let mut m = Mat::zeros(n, n);
        for block in [[0usize, 1], [2, 3]] {
            let (a, b, c) = (r(), r(), r());
            // LLᵀ of a lower-triangular factor with a positive diagonal
            let l = [[1.0 + a.abs(), 0.0], [b, 1.0 + c.abs()]];
            for i in 0..2 {
                for j in 0..2 {
                    m[(block[i], block[j])] = (0..2).map(|t| l[i][t] * l[j][t]).sum();
                }
            }
        }
        m[(4, 4)] = 1.0 + r().abs();
        let mut alg = Self::new(degrees.clone(), &q, &m);
        let dim = n * n;
        let deg = |i: usize| degrees[i / n] - degrees[i % n];
        let b = Mat::from_fn(dim, dim, |i, j| if deg(i) == deg(j) { 0.3 * r() } else { 0.0 });
        let gram = alg.gram.add(&b.matmul(&b.transpose()));
        alg = Self::with_gram(degrees, alg.d, gram);
        alg
    }

    pub fn new(degrees: Vec<i32>, q: &Mat<f64>, metric: &Mat<f64>) -> EndAlgebra {
        let n = degrees.len();
        let dim = n * n;
        let idx = |a: usize, b: usize| a * n + b;
        let deg = |a: usize, b: usize| degrees[a] - degrees[b];
        let minv = inverse_spd(metric);
        // d E_ab = Q E_ab - (-1)^{|E_ab|} E_ab Q
        let mut d = Mat::zeros(dim, dim);
        for a in 0..n {
            for b in 0..n {
                let sgn = if deg(a, b) % 2 == 0 { 1.0 } else { -1.0 };
                for c in 0..n {
                    d[(idx(c, b), idx(a, b))] += q[(c, a)];
                    d[(idx(a, c), idx(a, b))] -= sgn * q[(b, c)];
                }
            }
        }
        let gram = Mat::from_fn(dim, dim, |i, j| {
            let (a, b, c, e) = (i / n, i % n, j / n, j % n);
            metric[(a, c)] * minv[(e, b)]
        });
        Self::with_gram(degrees, d, gram)
    }

    /// Hodge data for the differential `d` and an arbitrary degree-preserving
    /// metric `gram` on the vectorized matrices.
    pub fn with_gram(degrees: Vec<i32>, d: Mat<f64>, gram: Mat<f64>) -> EndAlgebra {
        let dim = d.rows;
        // symmetric picture: conjugate by W^{1/2}
        let we = sym_eigen(&gram);
        let half = spectral_fn(&we, f64::sqrt);
        let half_inv = spectral_fn(&we, |x| 1.0 / x.sqrt());
        let ds = half.matmul(&d).matmul(&half_inv);
        let ds_adj = ds.transpose();
        let lap = ds.matmul(&ds_adj).add(&ds_adj.matmul(&ds));
        let le = sym_eigen(&lap);
        let scale = le.values.last().copied().unwrap_or(1.0).abs().max(1.0);
        let harmonic = |r: usize| le.values[r].abs() < 1e-10 * scale;
        let mut ps = Mat::zeros(dim, dim);
        let mut gs = Mat::zeros(dim, dim);
        for r in 0..dim {
            let v = le.vector(r);
            let (target, w) = if harmonic(r) { (&mut ps, 1.0) } else { (&mut gs, 1.0 / le.values[r]) };
            for i in 0..dim {
                for j in 0..dim {
                    target[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        let hs = ds_adj.matmul(&gs);
        let back = |x: &Mat<f64>| half_inv.matmul(x).matmul(&half);
        let (h, p) = (back(&hs), back(&ps));
        let eye = Mat::identity(dim);
        let homotopy_residual = d.matmul(&h).add(&h.matmul(&d)).sub(&eye.sub(&p)).max_abs();
        EndAlgebra { degrees, d, h, p, gram, homotopy_residual }
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    /// The degree-`k` part of the cohomology, as vectorized matrices.
    pub fn cohomology_basis(&self, k: i32) -> Vec<Graded<f64>> {
        let n = self.dim();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if self.degrees[a] - self.degrees[b] != k {
                    continue;
                }
                let mut e = vec![0.0; n * n];
                e[a * n + b] = 1.0;
                let v = self.p.matvec(&e);
                if v.iter().any(|x| x.abs() > 1e-9) {
                    out.push(Graded { degree: k, values: v });
                }
            }
        }
        out
    }

    /// A random unit-norm element of the degree-`k` cohomology, if nonzero.
    pub fn random_class(&self, k: i32, rng: &mut impl Rng) -> Option<Graded<f64>> {
        let basis = self.cohomology_basis(k);
        if basis.is_empty() {
            return None;
        }
        let mut x = Graded::zero(k, self.dim() * self.dim());
        for b in &basis {
            let c: f64 = rng.gen_range(-1.0..1.0);
            for (xi, bi) in x.values.iter_mut().zip(&b.values) {
                *xi += c * bi;
            }
        }
        let nrm = self.norm(&x);
        Some(x.scaled(1.0 / nrm))
    }
}

fn spectral_fn(e: &crate::linalg::SymEigen<f64>, f: impl Fn(f64) -> f64) -> Mat<f64> {
    let n = e.values.len();
    let mut out = Mat::zeros(n, n);
    for r in 0..n {
        let w = f(e.values[r]);
        let v = e.vector(r);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    out
}

fn inverse_spd(m: &Mat<f64>) -> Mat<f64> {
    spectral_fn(&sym_eigen(m), |x| 1.0 / x)
}

impl TransferSystem for EndAlgebra {
    type Scalar = f64;

    fn product(&self, x: &Graded<f64>, y: &Graded<f64>) -> Graded<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        for a in 0..n {
            for c in 0..n {
                let xa = x.values[a * n + c];
                if xa == 0.0 {
                    continue;
                }
                for b in 0..n {
                    out[a * n + b] += xa * y.values[c * n + b];
                }
            }
        }
        Graded { degree: x.degree + y.degree, values: out }
    }

    fn d(&self, _: (usize, usize), x: &Graded<f64>) -> Graded<f64> {
        Graded { degree: x.degree + 1, values: self.d.matvec(&x.values) }
    }

    fn h(&self, _: (usize, usize), x: &Graded<f64>) -> Graded<f64> {
        Graded { degree: x.degree - 1, values: self.h.matvec(&x.values) }
    }

    fn p(&self, _: (usize, usize), x: &Graded<f64>) -> Graded<f64> {
        Graded { degree: x.degree, values: self.p.matvec(&x.values) }
    }

    fn norm(&self, x: &Graded<f64>) -> f64 {
        crate::linalg::dot(&x.values, &self.gram.matvec(&x.values)).max(0.0).sqrt()
    }
}

/// Largest relative residual of the relations up to `max_n` on random
/// cohomology classes of the toy algebra.
pub fn toy_relation_check(alg: &EndAlgebra, max_n: usize, samples: usize, seed: u64) -> Result<Vec<RelationResidual>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degrees: Vec<i32> = (-2..=2).filter(|&k| !alg.cohomology_basis(k).is_empty()).collect();
    let mut out = Vec::new();
    for n in 1..=max_n {
        let mut worst = RelationResidual { n, absolute: 0.0, relative: 0.0, largest_term: 0.0 };
        for _ in 0..samples {
            let inputs: Vec<Graded<f64>> = (0..n)
                .map(|_| {
                    let k = degrees[rng.gen_range(0..degrees.len())];
                    alg.random_class(k, &mut rng).unwrap()
                })
                .collect();
            let objects = vec![0; n + 1];
            let r = ainfty_residual(alg, &objects, &inputs)?;
            if r.relative >= worst.relative {
                worst = r;
            }
        }
        out.push(worst);
    }
    Ok(out)
}
