//! Small-eigenvalue subspace of the Witten Laplacian, the Green operator on
//! its orthogonal complement and the contracting homotopy `H = d^* G`.
//!
//! For each ordered pair the subspace `Ω_sm` spanned by eigenforms with
//! eigenvalue below `ħ^{3/2}` is spanned, up to exponentially small errors,
//! by one eigenform localized at each critical point. These forms are
//! normalized so that their pairings reproduce Morse counts exactly:
//!
//! * at a minimum `q` the 0-form satisfies `φ(q) = 1`;
//! * at a maximum `q` the 1-form satisfies `∫ e^{(f-f(q))/ħ} φ = 1` over the
//!   arc between the two neighbouring minima.

use crate::derham::{witten_d, witten_laplacian, CircleGrid, Cochain, LinearMap, WittenData};
use crate::error::{Error, Result};
use crate::linalg::{dot, solve_small, sym_eigen, sym_pinv_from, Mat, SymEigen};
use crate::morse::{agmon_distance, ccw, circle_dist, critical_points, next_critical, CriticalPoint, PeriodicFunction};
use crate::real::Real;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Below this gap ratio the subspace is still used, with a warning.
pub const GAP_RATIO_WARN: f64 = 10.0;
/// Below this gap ratio the small subspace is not separated at all.
pub const GAP_RATIO_MIN: f64 = 2.0;
pub const HOMOTOPY_TOL: f64 = 1e-6;
/// `ħ` must exceed the grid-resolution estimate by this factor.
pub const RESOLUTION_FACTOR: f64 = 25.0;

pub fn threshold(hbar: f64) -> f64 {
    hbar.powf(1.5)
}

/// Eigen-decomposition of one Laplacian split at `ħ^{3/2}`.
#[derive(Clone, Debug)]
pub struct SmallSpectrum<T> {
    pub hbar: f64,
    pub degree: u8,
    pub eigen: SymEigen<T>,
    pub dim: usize,
    pub expected_dim: Option<usize>,
    pub threshold: f64,
    /// First excluded eigenvalue over the threshold.
    pub gap_ratio: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub hbar: f64,
    pub degree: u8,
    pub small_eigs: Vec<f64>,
    pub gap_ratio: f64,
    pub dim: usize,
    pub expected_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn small_spectrum<T: Real>(lap: &LinearMap<T>, hbar: f64, expected_dim: Option<usize>) -> Result<SmallSpectrum<T>> {
    let eigen = sym_eigen(&lap.mat);
    let thr = threshold(hbar);
    let dim = eigen.values.iter().take_while(|v| v.to_f64() < thr).count();
    if let Some(e) = expected_dim {
        if e != dim {
            return Err(Error::DimensionMismatch { expected: e, found: dim, hbar });
        }
    }
    let gap_ratio = eigen.values.get(dim).map_or(f64::INFINITY, |v| v.to_f64() / thr);
    let mut warnings = Vec::new();
    if gap_ratio < GAP_RATIO_WARN {
        warnings.push(format!("degree {}: gap ratio {gap_ratio:.2} below {GAP_RATIO_WARN}", lap.from));
    }
    Ok(SmallSpectrum { hbar, degree: lap.from, eigen, dim, expected_dim, threshold: thr, gap_ratio, warnings })
}

impl<T: Real> SmallSpectrum<T> {
    pub fn report(&self) -> EigenReport {
        EigenReport {
            hbar: self.hbar,
            degree: self.degree,
            small_eigs: self.eigen.values[..self.dim].iter().map(|v| v.to_f64()).collect(),
            gap_ratio: self.gap_ratio,
            dim: self.dim,
            expected_dim: self.expected_dim,
            warnings: self.warnings.clone(),
        }
    }

    /// Orthogonal projection onto the small subspace.
    pub fn project(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        for r in 0..self.dim {
            let v = self.eigen.vector(r);
            crate::linalg::axpy(dot(v, x), v, &mut out);
        }
        out
    }

    pub fn projector(&self) -> Mat<T> {
        let n = self.eigen.values.len();
        let mut p = Mat::zeros(n, n);
        for r in 0..self.dim {
            let v = self.eigen.vector(r);
            for i in 0..n {
                for j in 0..n {
                    p[(i, j)] += v[i] * v[j];
                }
            }
        }
        p
    }

    /// `G` with `G Δ = Δ G = I - P`.
    pub fn green(&self) -> Result<Mat<T>> {
        let largest = self.eigen.values.last().map_or(0.0, |v| v.to_f64().abs());
        let tol = 1e3 * T::epsilon() * largest;
        if let Some(v) = self.eigen.values.get(self.dim) {
            if v.to_f64() < tol {
                return Err(Error::IllConditioned { smallest: v.to_f64(), tol });
            }
        }
        Ok(sym_pinv_from(&self.eigen, |r| r >= self.dim))
    }

    /// Largest spectral amplitude of the small eigenvectors in the top
    /// quarter of the frequency band, times the operator norm. Eigenvalues of
    /// the discretization are off by at most about this much.
    pub fn resolution_estimate(&self) -> f64 {
        let n = self.eigen.values.len();
        let norm = self.eigen.values.iter().fold(0.0f64, |m, v| m.max(v.to_f64().abs()));
        let table: Vec<(T, T)> = (0..n).map(|j| T::pi().mul_f64(2.0 * j as f64).div_f64(n as f64).sin_cos()).collect();
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            let v = self.eigen.vector(r);
            let total = dot(v, v).to_f64() * n as f64;
            let mut tail = 0.0;
            for m in (n / 4 + 1)..=(n / 2) {
                let (mut re, mut im) = (T::zero(), T::zero());
                for (j, &x) in v.iter().enumerate() {
                    let (s, c) = table[(m * j) % n];
                    re += x * c;
                    im -= x * s;
                }
                let e = (re * re + im * im).to_f64();
                tail += if m == n / 2 { e } else { 2.0 * e };
            }
            worst = worst.max((tail / total).sqrt());
        }
        worst * norm
    }
}

/// A critical point with its normalized eigenform.
#[derive(Clone, Debug)]
pub struct Eigenform<T> {
    pub point: CriticalPoint,
    pub form: Cochain<T>,
}

/// Spectral data of one ordered pair at one `ħ`: the retraction of the
/// twisted de Rham complex onto its small subspace.
#[derive(Clone, Debug)]
pub struct Retract<T> {
    pub data: WittenData<T>,
    pub crit: Vec<CriticalPoint>,
    pub df: LinearMap<T>,
    pub spec0: SmallSpectrum<T>,
    pub spec1: SmallSpectrum<T>,
    /// `H = d^* G` from 1-forms to 0-forms; it vanishes on 0-forms.
    pub h: Mat<T>,
    /// `max |dH + Hd - (I - P)|` over both degrees.
    pub homotopy_residual: f64,
    pub resolution: f64,
    pub minima: Vec<Eigenform<T>>,
    pub maxima: Vec<Eigenform<T>>,
    pub warnings: Vec<String>,
}

impl<T: Real> Retract<T> {
    /// `d` is the undeformed differentiation matrix of `grid`, shared across pairs.
    pub fn new(grid: CircleGrid, f: &PeriodicFunction, hbar: f64, d: &LinearMap<T>) -> Result<Retract<T>> {
        let crit = critical_points(f)?;
        let data = WittenData::new(grid, f, hbar)?;
        let df = witten_d(&data, d);
        let n_min = crit.iter().filter(|c| c.index == 0).count();
        let spec0 = small_spectrum(&witten_laplacian(&df, 0), hbar, Some(n_min))?;
        let spec1 = small_spectrum(&witten_laplacian(&df, 1), hbar, Some(crit.len() - n_min))?;
        for s in [&spec0, &spec1] {
            if s.gap_ratio < GAP_RATIO_MIN {
                return Err(Error::Regime(format!(
                    "degree {} gap ratio {:.2} below {GAP_RATIO_MIN} at hbar = {hbar}",
                    s.degree, s.gap_ratio
                )));
            }
        }
        let resolution = spec0.resolution_estimate().max(spec1.resolution_estimate());
        if hbar < RESOLUTION_FACTOR * resolution {
            return Err(Error::Regime(format!(
                "grid n = {} under-resolves hbar = {hbar} (resolution estimate {resolution:.2e})",
                grid.n
            )));
        }

        let g1 = spec1.green()?;
        let h = df.mat.transpose().matmul(&g1);
        let n = grid.n;
        let eye = Mat::<T>::identity(n);
        let r1 = df.mat.matmul(&h).sub(&eye.sub(&spec1.projector())).max_abs();
        let r0 = h.matmul(&df.mat).sub(&eye.sub(&spec0.projector())).max_abs();
        let homotopy_residual = r0.max(r1);
        if homotopy_residual > HOMOTOPY_TOL {
            return Err(Error::HomotopyResidual(homotopy_residual));
        }

        let warnings = spec0.warnings.iter().chain(&spec1.warnings).cloned().collect();
        let mut r = Retract {
            data,
            crit,
            df,
            spec0,
            spec1,
            h,
            homotopy_residual,
            resolution,
            minima: Vec::new(),
            maxima: Vec::new(),
            warnings,
        };
        r.minima = r.localize(0);
        r.maxima = r.localize(1);
        Ok(r)
    }

    pub fn hbar(&self) -> f64 {
        self.data.hbar
    }

    pub fn grid(&self) -> CircleGrid {
        self.data.grid
    }

    pub fn spectrum(&self, degree: u8) -> &SmallSpectrum<T> {
        if degree == 0 {
            &self.spec0
        } else {
            &self.spec1
        }
    }

    pub fn eigenforms(&self, degree: u8) -> &[Eigenform<T>] {
        if degree == 0 {
            &self.minima
        } else {
            &self.maxima
        }
    }

    pub fn eigenform(&self, q: &CriticalPoint) -> Option<&Eigenform<T>> {
        self.eigenforms(q.index as u8).iter().find(|e| circle_dist(e.point.theta, q.theta) < 1e-9)
    }

    pub fn apply_d(&self, x: &[T]) -> Vec<T> {
        self.df.mat.matvec(x)
    }

    pub fn apply_h(&self, x: &Cochain<T>) -> Cochain<T> {
        let n = self.grid().n;
        if x.degree == 0 {
            return Cochain::zero(0, n);
        }
        Cochain { degree: 0, values: self.h.matvec(&x.values) }
    }

    pub fn project(&self, x: &Cochain<T>) -> Cochain<T> {
        Cochain { degree: x.degree, values: self.spectrum(x.degree).project(&x.values) }
    }

    pub fn green(&self, degree: u8) -> Result<Mat<T>> {
        self.spectrum(degree).green()
    }

    /// Coordinates of `x` in the eigenform basis of its degree, through the
    /// Gram matrix so that overlaps between neighbouring forms cancel.
    pub fn coordinates(&self, x: &Cochain<T>) -> Vec<T> {
        let forms = self.eigenforms(x.degree);
        let grid = self.grid();
        let m = forms.len();
        let gram = Mat::from_fn(m, m, |a, b| grid.inner(&forms[a].form.values, &forms[b].form.values));
        let rhs: Vec<T> = forms.iter().map(|e| grid.inner(&e.form.values, &x.values)).collect();
        solve_small(&gram, &rhs).expect("eigenforms are linearly independent")
    }

    /// The coefficient of `φ_q` in `x`.
    pub fn pairing(&self, x: &Cochain<T>, q: &CriticalPoint) -> Result<T> {
        let forms = self.eigenforms(x.degree);
        let i = forms
            .iter()
            .position(|e| circle_dist(e.point.theta, q.theta) < 1e-9 && e.point.index == x.degree as usize)
            .ok_or_else(|| Error::Degree(format!("no degree-{} eigenform at {:.6}", x.degree, q.theta)))?;
        Ok(self.coordinates(x)[i])
    }

    /// Gram matrix `⟨φ_p, φ_q⟩` of the eigenforms of one degree, optionally
    /// after scaling each form to unit norm.
    pub fn gram(&self, degree: u8, unit: bool) -> Mat<T> {
        let grid = self.grid();
        let forms = self.eigenforms(degree);
        let mut g = Mat::from_fn(forms.len(), forms.len(), |a, b| grid.inner(&forms[a].form.values, &forms[b].form.values));
        if unit {
            let d: Vec<T> = (0..forms.len()).map(|a| g[(a, a)].sqrt()).collect();
            g = Mat::from_fn(forms.len(), forms.len(), |a, b| g[(a, b)] / (d[a] * d[b]));
        }
        g
    }

    /// `‖φ_q‖` divided by its harmonic-oscillator prediction [`closed_form_norm`].
    pub fn norm_ratio(&self, q: &CriticalPoint) -> Option<f64> {
        let e = self.eigenform(q)?;
        let norm = self.grid().inner(&e.form.values, &e.form.values).sqrt().to_f64();
        Some(norm / closed_form_norm(&self.data.f, q, self.hbar()))
    }

    /// Pairs `(ρ(q, x), ħ log |φ_q(x)|)` over the nodes where `ρ(q, x) <= max_rho`.
    pub fn decay_profile(&self, q: &CriticalPoint, max_rho: f64) -> Option<Vec<(f64, f64)>> {
        let e = self.eigenform(q)?;
        let hbar = self.hbar();
        let f = &self.data.f;
        Some(
            self.grid()
                .nodes_f64()
                .iter()
                .zip(&e.form.values)
                .filter_map(|(&x, v)| {
                    let rho = agmon_distance(f, &self.crit, q.theta, x);
                    (rho <= max_rho && v.to_f64() != 0.0).then(|| (rho, hbar * v.abs().to_f64().ln()))
                })
                .collect(),
        )
    }

    fn localize(&self, degree: u8) -> Vec<Eigenform<T>> {
        let spec = self.spectrum(degree);
        let grid = self.grid();
        let n = grid.n;
        let same: Vec<CriticalPoint> = self.crit.iter().filter(|c| c.index == degree as usize).copied().collect();
        let nodes = grid.nodes_f64();
        let mut out = Vec::new();
        for q in &same {
            let sep = same
                .iter()
                .filter(|o| o.theta != q.theta)
                .map(|o| circle_dist(o.theta, q.theta))
                .fold(PI, f64::min);
            let eta = (sep / 3.0).min(PI / 2.0);
            let ball: Vec<usize> = (0..n).filter(|&j| circle_dist(nodes[j], q.theta) < eta).collect();
            let m = spec.dim;
            let mass = Mat::from_fn(m, m, |a, b| {
                let (va, vb) = (spec.eigen.vector(a), spec.eigen.vector(b));
                ball.iter().fold(T::zero(), |s, &j| s + va[j] * vb[j])
            });
            let top = sym_eigen(&mass);
            let c = top.vector(m - 1);
            let mut phi = vec![T::zero(); n];
            for (a, &ca) in c.iter().enumerate() {
                crate::linalg::axpy(ca, spec.eigen.vector(a), &mut phi);
            }
            let scale = if degree == 0 {
                grid.interpolate(&phi, T::from_f64(q.theta))
            } else {
                self.max_normalizer(q, &phi)
            };
            for v in &mut phi {
                *v /= scale;
            }
            out.push(Eigenform { point: *q, form: Cochain { degree, values: phi } });
        }
        out
    }

    /// `∫ e^{(f - f(q))/ħ} φ` over the open arc between the minima adjacent to `q`.
    fn max_normalizer(&self, q: &CriticalPoint, phi: &[T]) -> T {
        let grid = self.grid();
        let lo = next_critical(&self.crit, q.theta, -1.0).theta;
        let mut len = ccw(lo, next_critical(&self.crit, q.theta, 1.0).theta);
        if len == 0.0 {
            // a single minimum: the arc is the whole circle minus that point
            len = crate::morse::TAU;
        }
        let fq: T = self.data.f.deriv_at(T::from_f64(q.theta), 0);
        let hbar = T::from_f64(self.hbar());
        let mut acc = T::zero();
        for (j, &t) in grid.nodes_f64().iter().enumerate() {
            let off = ccw(lo, t);
            if off > 0.0 && off < len {
                acc += ((self.data.f0[j] - fq) / hbar).exp() * phi[j];
            }
        }
        acc * grid.step::<T>()
    }
}

/// Norm of the normalized eigenform predicted by the harmonic approximation
/// at `q`: `(|λ₋|/|λ₊|)^{1/4} (πħ)^{(1/2 - deg)/2}` with `λ± = f''(q)`.
pub fn closed_form_norm(f: &PeriodicFunction, q: &CriticalPoint, hbar: f64) -> f64 {
    let l = f.d2(q.theta).abs();
    let hess = if q.index == 0 { 1.0 / l } else { l };
    hess.powf(0.25) * (PI * hbar).powf((0.5 - q.index as f64) / 2.0)
}

/// One row of a Green-kernel decay table. `x` is snapped to the nearest node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub hbar: f64,
    pub x: f64,
    pub y: f64,
    pub log_abs_kernel: f64,
    pub agmon_ref: f64,
}

/// Fitted decay rate of `G(x, y)` in `1/ħ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub x: f64,
    pub y: f64,
    pub rate_est: f64,
    pub rate_stderr: f64,
    pub agmon_ref: f64,
}

/// Width of the Gaussian source in units of `ħ`. A nodal delta would excite
/// every frequency up to Nyquist and leave an algebraic tail in `G δ`; a
/// source of width `∝ ħ` is resolved and only shifts `log |G|` by a constant.
pub const BUMP_WIDTH: f64 = 1.0;

fn node_index(grid: &CircleGrid, t: f64) -> usize {
    ((crate::morse::wrap(t) / grid.h()).round() as usize) % grid.n
}

/// Periodized Gaussian of width `sigma` at `y` with unit discrete mass.
pub fn bump<T: Real>(grid: &CircleGrid, y: f64, sigma: f64) -> Vec<T> {
    let mut u: Vec<T> = grid
        .nodes_f64()
        .iter()
        .map(|&t| {
            let r = circle_dist(t, y);
            T::from_f64(-(r * r) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let mass = u.iter().fold(T::zero(), |a, &b| a + b) * grid.step::<T>();
    for v in &mut u {
        *v /= mass;
    }
    u
}

/// `(G u)(x)` for the bump `u` of width `BUMP_WIDTH ħ` at `y`.
pub fn green_kernel<T: Real>(g: &Mat<T>, grid: &CircleGrid, hbar: f64, x: f64, y: f64) -> T {
    let u = bump::<T>(grid, y, BUMP_WIDTH * hbar);
    let i = node_index(grid, x);
    (0..grid.n).fold(T::zero(), |a, j| a + g[(i, j)] * u[j])
}

/// Samples `log |G(x, y)|` over `hbars` for every pair, with the Agmon
/// distance alongside.
pub fn green_decay_probe<T: Real>(
    grid: CircleGrid,
    f: &PeriodicFunction,
    hbars: &[f64],
    pairs: &[(f64, f64)],
    degree: u8,
) -> Result<Vec<DecayRow>> {
    let crit = critical_points(f)?;
    let d = crate::derham::build_d::<T>(&grid);
    let nodes = grid.nodes_f64();
    let mut rows = Vec::new();
    for &hbar in hbars {
        // the bump's Fourier tail at Nyquist is exp(-(nσ/2)²/2)
        let reach = grid.n as f64 * BUMP_WIDTH * hbar / 2.0;
        if reach * reach / 2.0 < 46.0 {
            return Err(Error::Regime(format!("grid n = {} cannot resolve a source of width {hbar}", grid.n)));
        }
        let data = WittenData::new(grid, f, hbar)?;
        let df = witten_d(&data, &d);
        let spec = small_spectrum(&witten_laplacian(&df, degree), hbar, None)?;
        let g = spec.green()?;
        for &(x, y) in pairs {
            let x = nodes[node_index(&grid, x)];
            rows.push(DecayRow {
                hbar,
                x,
                y,
                log_abs_kernel: green_kernel(&g, &grid, hbar, x, y).abs().to_f64().ln(),
                agmon_ref: agmon_distance(f, &crit, x, y),
            });
        }
    }
    Ok(rows)
}

pub const MIN_DECAY_POINTS: usize = 4;

/// Fits `log |G| = -r/ħ + p log ħ + c` per `(x, y)` pair.
pub fn fit_decay_rates(rows: &[DecayRow]) -> Result<Vec<DecayFit>> {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.x, r.y)) {
            keys.push((r.x, r.y));
        }
    }
    keys.iter()
        .map(|&(x, y)| {
            let sel: Vec<&DecayRow> = rows.iter().filter(|r| (r.x, r.y) == (x, y) && r.log_abs_kernel.is_finite()).collect();
            if sel.len() < MIN_DECAY_POINTS {
                return Err(Error::InsufficientData { needed: MIN_DECAY_POINTS, got: sel.len() });
            }
            let hs: Vec<f64> = sel.iter().map(|r| r.hbar).collect();
            let ls: Vec<f64> = sel.iter().map(|r| r.log_abs_kernel).collect();
            let fit = crate::asymptotics::fit_log_model_unchecked(&hs, &ls)?;
            Ok(DecayFit { x, y, rate_est: fit.a, rate_stderr: fit.a_stderr, agmon_ref: sel[0].agmon_ref })
        })
        .collect()
}

/// Decay-probe CSV with columns `hbar,x,y,rate_est,agmon_ref,log_abs_kernel`.
pub fn write_decay_csv(rows: &[DecayRow], fits: &[DecayFit], mut w: impl std::io::Write) -> Result<()> {
    writeln!(w, "hbar,x,y,rate_est,agmon_ref,log_abs_kernel")?;
    for r in rows {
        let rate = fits.iter().find(|f| (f.x, f.y) == (r.x, r.y)).map_or(String::new(), |f| f.rate_est.to_string());
        writeln!(w, "{},{},{},{},{},{}", r.hbar, r.x, r.y, rate, r.agmon_ref, r.log_abs_kernel)?;
    }
    Ok(())
}
