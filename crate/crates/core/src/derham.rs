//! Spectral collocation de Rham complex on the circle and its Witten deformation.
//!
//! Both 0-forms and 1-forms are sampled at the nodes `θ_j = 2πj/n`; a 1-form
//! is stored through its `dθ` coefficient. The metric is flat, so the `L²`
//! pairing is `h Σ u_j v_j` in both degrees and adjoints are transposes.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::morse::PeriodicFunction;
use crate::real::Real;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircleGrid {
    pub n: usize,
}

impl CircleGrid {
    pub fn new(n: usize) -> Result<CircleGrid> {
        // On an even grid the antisymmetric D has a second null vector besides
        // the constants, and d_f inherits a spurious Nyquist-modulated kernel.
        if n < 17 || n % 2 == 0 {
            return Err(Error::Schema { path: "grid.n".into(), msg: format!("need an odd n >= 17, got {n}") });
        }
        Ok(CircleGrid { n })
    }

    pub fn h(&self) -> f64 {
        std::f64::consts::TAU / self.n as f64
    }

    /// The spacing in working precision.
    pub fn step<T: Real>(&self) -> T {
        T::pi().mul_f64(2.0).div_f64(self.n as f64)
    }

    pub fn node<T: Real>(&self, j: usize) -> T {
        T::pi().mul_f64(2.0 * j as f64).div_f64(self.n as f64)
    }

    pub fn nodes_f64(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.h() * j as f64).collect()
    }

    /// Sample of `f^(r)` at every node.
    pub fn sample<T: Real>(&self, f: &PeriodicFunction, r: u32) -> Vec<T> {
        (0..self.n).map(|j| f.deriv_at(self.node::<T>(j), r)).collect()
    }

    /// `h Σ u_j v_j`.
    pub fn inner<T: Real>(&self, u: &[T], v: &[T]) -> T {
        crate::linalg::dot(u, v) * self.step::<T>()
    }

    /// Value at `theta` of the trigonometric interpolant of `values`.
    pub fn interpolate<T: Real>(&self, values: &[T], theta: T) -> T {
        let n = self.n;
        let mut acc = T::zero();
        for (j, &v) in values.iter().enumerate() {
            let x = theta - self.node::<T>(j);
            let (s_half, _) = x.mul_f64(0.5).sin_cos();
            if s_half.abs().to_f64() < 1e-300 {
                acc += v;
                continue;
            }
            // Dirichlet kernel sin(nx/2) / (n sin(x/2))
            let (s_n, _) = x.mul_f64(n as f64 / 2.0).sin_cos();
            acc += v * s_n / s_half.mul_f64(n as f64);
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cochain<T> {
    pub degree: u8,
    pub values: Vec<T>,
}

impl<T: Real> Cochain<T> {
    pub fn new(degree: u8, values: Vec<T>) -> Result<Self> {
        if degree > 1 {
            return Err(Error::Degree(format!("the circle has no {degree}-forms")));
        }
        Ok(Cochain { degree, values })
    }

    pub fn zero(degree: u8, n: usize) -> Self {
        Cochain { degree, values: vec![T::zero(); n] }
    }
}

/// A linear map between cochain degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap<T> {
    pub from: u8,
    pub to: u8,
    pub mat: Mat<T>,
}

impl<T: Real> LinearMap<T> {
    pub fn apply(&self, c: &Cochain<T>) -> Result<Cochain<T>> {
        if c.degree != self.from {
            return Err(Error::Degree(format!("map expects degree {}, got {}", self.from, c.degree)));
        }
        Ok(Cochain { degree: self.to, values: self.mat.matvec(&c.values) })
    }

    pub fn adjoint(&self) -> LinearMap<T> {
        LinearMap { from: self.to, to: self.from, mat: self.mat.transpose() }
    }

    pub fn compose(&self, then: &LinearMap<T>) -> Result<LinearMap<T>> {
        if self.to != then.from {
            return Err(Error::Degree("composition degrees do not chain".into()));
        }
        Ok(LinearMap { from: self.from, to: then.to, mat: then.mat.matmul(&self.mat) })
    }

    /// One header line `n,from,to`, then one CSV row per matrix row.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{},{},{}", self.mat.rows, self.from, self.to)?;
        for i in 0..self.mat.rows {
            let row: Vec<String> = self.mat.row(i).iter().map(|x| format!("{:e}", x.to_f64())).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// `b"MWLOP1"`, `n` as u64, `from` and `to` as u8, then row-major f64,
    /// all little-endian.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(b"MWLOP1")?;
        w.write_all(&(self.mat.rows as u64).to_le_bytes())?;
        w.write_all(&[self.from, self.to])?;
        for x in &self.mat.data {
            w.write_all(&x.to_f64().to_le_bytes())?;
        }
        Ok(())
    }
}

pub fn read_binary(bytes: &[u8]) -> Result<LinearMap<f64>> {
    let bad = || Error::Schema { path: "operator".into(), msg: "malformed binary operator".into() };
    if bytes.len() < 16 || &bytes[..6] != b"MWLOP1" {
        return Err(bad());
    }
    let n = u64::from_le_bytes(bytes[6..14].try_into().unwrap()) as usize;
    let (from, to) = (bytes[14], bytes[15]);
    let body = &bytes[16..];
    if body.len() != n * n * 8 {
        return Err(bad());
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(LinearMap { from, to, mat: Mat { rows: n, cols: n, data } })
}

/// Spectral differentiation `D_jk = ½ (-1)^(j-k) / sin((j-k) h / 2)`, zero diagonal.
pub fn build_d<T: Real>(grid: &CircleGrid) -> LinearMap<T> {
    let n = grid.n;
    let mut col = vec![T::zero(); n];
    // fill the first half and mirror, so D is exactly antisymmetric
    for m in 1..=n / 2 {
        let (s, _) = T::pi().mul_f64(m as f64).div_f64(n as f64).sin_cos();
        let v = (T::one() / s).mul_f64(0.5);
        col[m] = if m % 2 == 0 { v } else { -v };
        col[n - m] = -col[m];
    }
    let mat = Mat::from_fn(n, n, |j, k| col[(j + n - k) % n]);
    LinearMap { from: 0, to: 1, mat }
}

/// Pointwise exterior product; the product of two 1-forms vanishes.
pub fn wedge<T: Real>(a: &Cochain<T>, b: &Cochain<T>) -> Cochain<T> {
    let degree = a.degree + b.degree;
    if degree > 1 {
        return Cochain::zero(1, a.values.len());
    }
    Cochain { degree, values: a.values.iter().zip(&b.values).map(|(&x, &y)| x * y).collect() }
}

/// Sampled data of one difference function `f_ij` at a fixed `ħ`.
#[derive(Clone, Debug)]
pub struct WittenData<T> {
    pub grid: CircleGrid,
    pub hbar: f64,
    pub f: PeriodicFunction,
    pub f0: Vec<T>,
    pub f1: Vec<T>,
    pub f2: Vec<T>,
}

impl<T: Real> WittenData<T> {
    pub fn new(grid: CircleGrid, f: &PeriodicFunction, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Schema { path: "hbar".into(), msg: format!("need hbar > 0, got {hbar}") });
        }
        Ok(WittenData {
            grid,
            hbar,
            f: f.clone(),
            f0: grid.sample(f, 0),
            f1: grid.sample(f, 1),
            f2: grid.sample(f, 2),
        })
    }
}

/// `d_f = ħ d + df ∧`, from 0-forms to 1-forms.
pub fn witten_d<T: Real>(data: &WittenData<T>, d: &LinearMap<T>) -> LinearMap<T> {
    let mut mat = d.mat.scale(T::from_f64(data.hbar));
    for j in 0..data.grid.n {
        mat[(j, j)] += data.f1[j];
    }
    LinearMap { from: 0, to: 1, mat }
}

/// `d_f^* = -ħ ∂ + f'`, the transpose of `d_f`.
pub fn witten_adjoint<T: Real>(df: &LinearMap<T>) -> LinearMap<T> {
    df.adjoint()
}

/// `Δ_f = d^* d` on 0-forms and `d d^*` on 1-forms, by composition.
pub fn witten_laplacian<T: Real>(df: &LinearMap<T>, degree: u8) -> LinearMap<T> {
    let t = df.mat.transpose();
    let mat = if degree == 0 { t.matmul(&df.mat) } else { df.mat.matmul(&t) };
    LinearMap { from: degree, to: degree, mat }
}

/// `-ħ² D² + f'² ∓ ħ f''` (minus on 0-forms, plus on 1-forms).
pub fn witten_laplacian_formula<T: Real>(data: &WittenData<T>, d: &LinearMap<T>, degree: u8) -> LinearMap<T> {
    let h2 = T::from_f64(data.hbar * data.hbar);
    let mut mat = d.mat.matmul(&d.mat).scale(-h2);
    let sign = if degree == 0 { -1.0 } else { 1.0 };
    for j in 0..data.grid.n {
        mat[(j, j)] += data.f1[j] * data.f1[j] + data.f2[j].mul_f64(sign * data.hbar);
    }
    LinearMap { from: degree, to: degree, mat }
}
