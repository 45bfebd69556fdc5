//! Laplace expansions and the WKB transport along a gradient flow line.
//!
//! Everything here is one-dimensional: phases are polynomials in a single
//! variable, fibers are points, and the tensor factor `M` is a scalar.

use crate::derham::{CircleGrid, Cochain};
use crate::error::{Error, Result};
use crate::morse::{critical_points, next_critical, PeriodicFunction};
use crate::quad;
use crate::real::Real;
use crate::spectral::Retract;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Relative tolerance for transport residuals and discretization estimates.
pub const TRANSPORT_TOL: f64 = 1e-6;
/// The `-∞` end of the transport integral is cut where the weighted source
/// falls below this fraction of its maximum.
pub const CUTOFF: f64 = 1e-30;
/// Quadrature reference intervals extend until `φ/ħ` reaches this value.
const LAPLACE_TAIL: f64 = 80.0;

// ---------------------------------------------------------------------------
// truncated power series

fn series_mul(a: &[f64], b: &[f64], deg: usize) -> Vec<f64> {
    let mut c = vec![0.0; deg + 1];
    for (i, &x) in a.iter().enumerate().take(deg + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(deg + 1 - i) {
            c[i + j] += x * y;
        }
    }
    c
}

fn series_sqrt(r: &[f64], deg: usize) -> Vec<f64> {
    let mut s = vec![0.0; deg + 1];
    s[0] = r[0].sqrt();
    for k in 1..=deg {
        let rk = r.get(k).copied().unwrap_or(0.0);
        let cross: f64 = (1..k).map(|j| s[j] * s[k - j]).sum();
        s[k] = (rk - cross) / (2.0 * s[0]);
    }
    s
}

/// `p(x(y))` for a polynomial `p` and a series `x` with no constant term.
fn series_compose(p: &[f64], x: &[f64], deg: usize) -> Vec<f64> {
    let mut acc = vec![0.0; deg + 1];
    for &c in p.iter().rev() {
        acc = series_mul(&acc, x, deg);
        acc[0] += c;
    }
    acc
}

/// Compositional inverse of `c` (with `c_0 = 0`, `c_1 ≠ 0`) through degree `deg`.
fn series_revert(c: &[f64], deg: usize) -> Vec<f64> {
    let c1 = c[1];
    let mut higher = c.to_vec();
    higher.resize(deg + 1, 0.0);
    higher[0] = 0.0;
    higher[1] = 0.0;
    let mut x = vec![0.0; deg + 1];
    x[1] = 1.0 / c1;
    // each pass fixes one more coefficient
    for _ in 1..deg {
        let h = series_compose(&higher, &x, deg);
        let mut next: Vec<f64> = h.iter().map(|v| -v / c1).collect();
        next[1] += 1.0 / c1;
        x = next;
    }
    x
}

fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn double_factorial_odd(k: usize) -> f64 {
    // (2k - 1)!!
    (1..=k).map(|j| (2 * j - 1) as f64).product()
}

// ---------------------------------------------------------------------------
// Laplace method

/// `∫ e^{-φ/ħ} u dx` near a nondegenerate minimum of `φ` at the origin.
/// `phase` and `amplitude` are Taylor coefficients in `x`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaplaceProblem {
    pub phase: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub order: usize,
    pub hbar: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaplaceResult {
    pub hbar: f64,
    pub order: usize,
    /// `√(2πħ) ħ^k (2k-1)!! g_{2k}` for `k < order`.
    pub terms: Vec<f64>,
    pub expansion: f64,
    pub quadrature: f64,
    pub error: f64,
}

impl LaplaceProblem {
    fn validate(&self) -> Result<()> {
        let a = |i: usize| self.phase.get(i).copied().unwrap_or(0.0);
        if a(0).abs() > 1e-14 {
            return Err(Error::NotAMinimum(format!("phi(0) = {}", a(0))));
        }
        if a(1).abs() > 1e-14 {
            return Err(Error::NotAMinimum(format!("phi'(0) = {}", a(1))));
        }
        if !(a(2) > 0.0) {
            return Err(Error::NotAMinimum(format!("phi''(0) = {}", 2.0 * a(2))));
        }
        if self.order == 0 {
            return Err(Error::Schema { path: "order".into(), msg: "need at least one term".into() });
        }
        if !(self.hbar > 0.0) {
            return Err(Error::Schema { path: "hbar".into(), msg: format!("need hbar > 0, got {}", self.hbar) });
        }
        Ok(())
    }

    /// Taylor coefficients of `g(x̃) = u(x(x̃)) dx/dx̃` in the Morse
    /// coordinate `x̃ = sign(x) √(2φ)`, through degree `2·order - 2`.
    pub fn morse_amplitude(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let top = 2 * self.order - 1;
        // x̃ = x √(2φ/x²)
        let r: Vec<f64> = (0..top).map(|k| 2.0 * self.phase.get(k + 2).copied().unwrap_or(0.0)).collect();
        let s = series_sqrt(&r, top - 1);
        let mut xt = vec![0.0; top + 1];
        xt[1..].copy_from_slice(&s);
        let x = series_revert(&xt, top);
        let dx: Vec<f64> = (1..=top).map(|k| k as f64 * x[k]).collect();
        let u = series_compose(&self.amplitude, &x, top - 1);
        Ok(series_mul(&u, &dx, top - 1))
    }

    pub fn expand(&self) -> Result<LaplaceResult> {
        let g = self.morse_amplitude()?;
        let h = self.hbar;
        let pre = (TAU * h).sqrt();
        let terms: Vec<f64> =
            (0..self.order).map(|k| pre * h.powi(k as i32) * double_factorial_odd(k) * g[2 * k]).collect();
        let expansion = terms.iter().sum();
        let quadrature = self.quadrature()?;
        Ok(LaplaceResult { hbar: h, order: self.order, terms, expansion, quadrature, error: expansion - quadrature })
    }

    /// Adaptive reference over the interval where `φ/ħ ≤ 80`.
    pub fn quadrature(&self) -> Result<f64> {
        self.validate()?;
        let h = self.hbar;
        let phi = |x: f64| poly_eval(&self.phase, x);
        let mut l = (2.0 * LAPLACE_TAIL * h / (2.0 * self.phase[2])).sqrt();
        while phi(l) < LAPLACE_TAIL * h || phi(-l) < LAPLACE_TAIL * h {
            l *= 1.25;
            if l > 1e3 {
                return Err(Error::NotAMinimum("phase does not grow away from the minimum".into()));
            }
        }
        let samples = 2000;
        for i in 0..=samples {
            let x = -l + 2.0 * l * i as f64 / samples as f64;
            if phi(x) < -1e-14 {
                return Err(Error::NotAMinimum(format!("phi({x:.4}) < 0")));
            }
        }
        let f = |x: f64| (-phi(x) / h).exp() * poly_eval(&self.amplitude, x);
        let scale = (TAU * h).sqrt();
        let left = quad::integrate(f, -l, 0.0, 1e-16 * scale, 1e-14);
        let right = quad::integrate(f, 0.0, l, 1e-16 * scale, 1e-14);
        Ok(left + right)
    }
}

pub fn laplace_expand(p: &LaplaceProblem) -> Result<LaplaceResult> {
    p.expand()
}

/// Leading term of a fiber integral and its quadrature reference.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberLaplace {
    pub hbar: f64,
    pub hessian: f64,
    pub leading: f64,
    pub quadrature: f64,
}

/// `∫ e^{-φ/ħ} β` over `[v - half_width, v + half_width]` against
/// `√(2πħ) β(v) / √φ''(v)`. `φ` must vanish to second order at `v`.
pub fn fiber_laplace(
    phi: impl Fn(f64) -> f64,
    beta: impl Fn(f64) -> f64,
    v: f64,
    half_width: f64,
    hbar: f64,
) -> Result<FiberLaplace> {
    let e = 1e-3;
    let hessian = (-phi(v + 2.0 * e) + 16.0 * phi(v + e) - 30.0 * phi(v) + 16.0 * phi(v - e) - phi(v - 2.0 * e))
        / (12.0 * e * e);
    if !(hessian > 1e-8) {
        return Err(Error::DegenerateHessian(hessian));
    }
    let leading = (TAU * hbar).sqrt() * beta(v) / hessian.sqrt();
    let f = |x: f64| (-phi(x) / hbar).exp() * beta(x);
    let tol = 1e-16 * (TAU * hbar).sqrt();
    let quadrature = quad::integrate(f, v - half_width, v, tol, 1e-13) + quad::integrate(f, v, v + half_width, tol, 1e-13);
    Ok(FiberLaplace { hbar, hessian, leading, quadrature })
}

// ---------------------------------------------------------------------------
// uniform-grid calculus

fn check_uniform(t: &[f64]) -> Result<f64> {
    if t.len() < 12 {
        return Err(Error::Schema { path: "t".into(), msg: format!("need at least 12 samples, got {}", t.len()) });
    }
    let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::Schema { path: "t".into(), msg: "samples must increase".into() });
    }
    for (i, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::Schema { path: format!("t[{}]", i + 1), msg: "samples must be uniformly spaced".into() });
        }
    }
    Ok(h)
}

/// First derivative, 4th order, one-sided from upstream (smaller `t`).
pub fn upwind_d1(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            if i >= 4 {
                (25.0 * u[i] - 48.0 * u[i - 1] + 36.0 * u[i - 2] - 16.0 * u[i - 3] + 3.0 * u[i - 4]) / (12.0 * h)
            } else {
                // not enough history: shifted 5-point stencil on [0, 4]
                let c: [f64; 5] = match i {
                    0 => [-25.0, 48.0, -36.0, 16.0, -3.0],
                    1 => [-3.0, -10.0, 18.0, -6.0, 1.0],
                    2 => [1.0, -8.0, 0.0, 8.0, -1.0],
                    _ => [-1.0, 6.0, -18.0, 10.0, 3.0],
                };
                c.iter().zip(&u[0..5]).map(|(a, b)| a * b).sum::<f64>() / (12.0 * h)
            }
        })
        .collect()
}

/// Second derivative, 4th order; central inside, one-sided at the ends.
pub fn d2(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let h2 = 12.0 * h * h;
    let one_sided = |w: &[f64], first: bool| -> f64 {
        let c: [f64; 6] = if first {
            [45.0, -154.0, 214.0, -156.0, 61.0, -10.0]
        } else {
            [10.0, -15.0, -4.0, 14.0, -6.0, 1.0]
        };
        c.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / h2
    };
    (0..n)
        .map(|i| {
            if i == 0 {
                one_sided(&u[0..6], true)
            } else if i == 1 {
                one_sided(&u[0..6], false)
            } else if i == n - 1 {
                let w: Vec<f64> = u[n - 6..].iter().rev().copied().collect();
                one_sided(&w, true)
            } else if i == n - 2 {
                let w: Vec<f64> = u[n - 6..].iter().rev().copied().collect();
                one_sided(&w, false)
            } else {
                (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) / h2
            }
        })
        .collect()
}

/// `∫_{t_0}^{t_i} u` for every `i`, cubic-exact on each panel.
pub fn cumulative(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let panel = if i == 0 {
            9.0 * u[0] + 19.0 * u[1] - 5.0 * u[2] + u[3]
        } else if i == n - 2 {
            u[n - 4] - 5.0 * u[n - 3] + 19.0 * u[n - 2] + 9.0 * u[n - 1]
        } else {
            -u[i - 1] + 13.0 * u[i] + 13.0 * u[i + 1] - u[i + 2]
        };
        out[i + 1] = out[i] + panel * h / 24.0;
    }
    out
}

fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Richardson estimate of the error of `op` against the same operator on the
/// even-indexed subgrid, relative to `max |op(u)|`.
fn richardson(u: &[f64], h: f64, op: fn(&[f64], f64) -> Vec<f64>) -> f64 {
    let fine = op(u, h);
    let coarse_u: Vec<f64> = u.iter().step_by(2).copied().collect();
    let coarse = op(&coarse_u, 2.0 * h);
    let diff = coarse.iter().zip(fine.iter().step_by(2)).map(|(c, f)| (c - f).abs()).fold(0.0, f64::max);
    let scale = max_abs(&fine);
    if scale == 0.0 {
        0.0
    } else {
        diff / 15.0 / scale
    }
}

// ---------------------------------------------------------------------------
// flow lines

/// Samples along a gradient line parametrized by arc length `t`, increasing
/// in the direction of `∇f`. `m` is the scalar tensor factor `M`; it is
/// identically zero for a flat circle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowLineProblem {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    #[serde(rename = "psi_S")]
    pub psi_s: Vec<f64>,
    pub nu: Vec<f64>,
    #[serde(default)]
    pub m: Option<Vec<f64>>,
}

/// Derived quantities on the line.
#[derive(Clone, Debug, Serialize)]
pub struct FlowLine {
    pub step: f64,
    /// Index of the sample where `ψ_S - f` is smallest, the stable point `v`.
    pub vertex: usize,
    pub speed: Vec<f64>,
    pub psi_e: Vec<f64>,
    pub big_psi: Vec<f64>,
    pub g_e: Vec<f64>,
    pub m: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Transport {
    pub mu: Vec<f64>,
    pub residual: f64,
    pub discretization: f64,
    /// First sample kept after the `-∞` cutoff.
    pub start: usize,
}

impl FlowLineProblem {
    pub fn line(&self) -> Result<FlowLine> {
        let h = check_uniform(&self.t)?;
        let n = self.t.len();
        for (name, v) in [("f", &self.f), ("psi_S", &self.psi_s), ("nu", &self.nu)] {
            if v.len() != n {
                return Err(Error::Schema { path: name.into(), msg: format!("{} samples, t has {n}", v.len()) });
            }
        }
        let m = match &self.m {
            Some(m) if m.len() != n => {
                return Err(Error::Schema { path: "m".into(), msg: format!("{} samples, t has {n}", m.len()) })
            }
            Some(m) => m.clone(),
            None => vec![0.0; n],
        };
        let speed = upwind_d1(&self.f, h);
        if let Some(i) = speed.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::Schema {
                path: format!("f[{i}]"),
                msg: "f must increase strictly along the line (no critical points)".into(),
            });
        }
        let g_s: Vec<f64> = self.psi_s.iter().zip(&self.f).map(|(p, f)| p - f).collect();
        let vertex = (0..n).min_by(|&a, &b| g_s[a].partial_cmp(&g_s[b]).unwrap()).unwrap();
        let psi_e: Vec<f64> = self.f.iter().map(|f| f - self.f[vertex] + self.psi_s[vertex]).collect();
        let big_psi: Vec<f64> = psi_e.iter().zip(&self.psi_s).map(|(e, s)| e - s).collect();
        let g_e: Vec<f64> = psi_e.iter().zip(&self.f).map(|(e, f)| e - f).collect();
        Ok(FlowLine { step: h, vertex, speed, psi_e, big_psi, g_e, m })
    }

    /// `max | |∇ψ_E| - |∇f| | / max |∇f|` with `ψ_E` rebuilt as
    /// `ψ_S(v) + ∫_v |f'|`.
    pub fn psi_e_consistency(&self) -> Result<f64> {
        let line = self.line()?;
        let h = line.step;
        let acc = cumulative(&line.speed, h);
        let v = line.vertex;
        let psi_e: Vec<f64> = acc.iter().map(|a| self.psi_s[v] + a - acc[v]).collect();
        let grad = upwind_d1(&psi_e, h);
        let dev = grad.iter().zip(&line.speed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(dev / max_abs(&line.speed))
    }
}

impl FlowLine {
    /// `I(φ)(t) = ∫_{-∞}^t e^{∫_r^t M/2} φ(r) dτ(r)` in flow time `dτ = dt/|f'|`.
    fn integrate(&self, phi: &[f64]) -> (Vec<f64>, f64) {
        let h = self.step;
        let rate: Vec<f64> = self.m.iter().zip(&self.speed).map(|(m, s)| 0.5 * m / s).collect();
        let log_w = cumulative(&rate, h);
        let inner: Vec<f64> = phi.iter().zip(&self.speed).zip(&log_w).map(|((p, s), w)| p / s * (-w).exp()).collect();
        let acc = cumulative(&inner, h);
        let out = acc.iter().zip(&log_w).map(|(a, w)| a * w.exp()).collect();
        (out, richardson(&inner, h, cumulative))
    }

    /// `𝒯μ = 2ℒ_{∇ψ_E}μ - Mμ`.
    pub fn transport_operator(&self, mu: &[f64]) -> Vec<f64> {
        let d = upwind_d1(mu, self.step);
        d.iter().zip(&self.speed).zip(mu.iter().zip(&self.m)).map(|((d, s), (u, m))| 2.0 * s * d - m * u).collect()
    }
}

fn relative(r: &[f64], scale: &[f64]) -> f64 {
    let s = max_abs(scale);
    if s == 0.0 {
        max_abs(r)
    } else {
        max_abs(r) / s
    }
}

/// `μ_0 = (1/2ħ) I(e^{Ψ/ħ} ν)`, checked against `ħ𝒯μ_0 = e^{Ψ/ħ} ν`.
pub fn transport_leading(fp: &FlowLineProblem, hbar: f64) -> Result<Transport> {
    let line = fp.line()?;
    let mut src: Vec<f64> = line.big_psi.iter().zip(&fp.nu).map(|(p, n)| (p / hbar).exp() * n).collect();
    let peak = max_abs(&src);
    let start = src.iter().position(|s| s.abs() >= CUTOFF * peak).unwrap_or(0);
    src[..start].iter_mut().for_each(|s| *s = 0.0);
    let (acc, disc) = line.integrate(&src);
    let mu: Vec<f64> = acc.iter().map(|a| a / (2.0 * hbar)).collect();
    if disc > TRANSPORT_TOL {
        return Err(Error::Refine(format!("transport quadrature error estimate {disc:.2e}")));
    }
    let lhs = line.transport_operator(&mu);
    let r: Vec<f64> = lhs.iter().zip(&src).map(|(l, s)| hbar * l - s).collect();
    let residual = relative(&r[start..], &src[start..]);
    if residual > TRANSPORT_TOL {
        return Err(Error::TransportResidual(residual));
    }
    Ok(Transport { mu, residual, discretization: disc, start })
}

/// `μ_{l+1} = -(ħ/2) I(Δμ_l)` with `Δ = -d²/dt²`, checked against
/// `𝒯μ_{l+1} = -ħΔμ_l`.
pub fn transport_iterate(fp: &FlowLineProblem, mu: &[f64], hbar: f64) -> Result<Transport> {
    let line = fp.line()?;
    if mu.len() != fp.t.len() {
        return Err(Error::Schema { path: "mu".into(), msg: format!("{} samples, t has {}", mu.len(), fp.t.len()) });
    }
    let h = line.step;
    let smooth = richardson(mu, h, d2);
    if smooth > TRANSPORT_TOL {
        return Err(Error::Refine(format!("second-derivative error estimate {smooth:.2e}")));
    }
    let lap: Vec<f64> = d2(mu, h).iter().map(|x| -x).collect();
    let (acc, disc) = line.integrate(&lap);
    if disc > TRANSPORT_TOL {
        return Err(Error::Refine(format!("transport quadrature error estimate {disc:.2e}")));
    }
    let next: Vec<f64> = acc.iter().map(|a| -0.5 * hbar * a).collect();
    let lhs = line.transport_operator(&next);
    let rhs: Vec<f64> = lap.iter().map(|x| -hbar * x).collect();
    let r: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, s)| l - s).collect();
    let residual = relative(&r, &rhs);
    if residual > TRANSPORT_TOL {
        return Err(Error::TransportResidual(residual));
    }
    Ok(Transport { mu: next, residual, discretization: disc.max(smooth), start: 0 })
}

/// Discrete `L²` norm along the line.
pub fn line_norm(fp: &FlowLineProblem, u: &[f64]) -> f64 {
    let h = (fp.t[fp.t.len() - 1] - fp.t[0]) / (fp.t.len() - 1) as f64;
    (u.iter().map(|x| x * x).sum::<f64>() * h).sqrt()
}

// ---------------------------------------------------------------------------
// comparison with the spectral homotopy

/// WKB prediction of `Hζ` at one node against the spectral value.
#[derive(Clone, Debug, Serialize)]
pub struct Amplification {
    pub hbar: f64,
    pub vertex: f64,
    pub x: f64,
    pub spectral: f64,
    pub wkb: f64,
    pub ratio: f64,
    pub residual: f64,
}

/// Compares `Hζ` at node `node` of the retract's grid with the leading WKB
/// term transported from `vertex` along the gradient line of the pair's
/// function `f`. `psi_s` is the phase of `ζ`, so that `ζ ≈ e^{-ψ_S/ħ}·(smooth)`.
/// The node must lie downstream of `vertex`, before the next critical point.
pub fn amplification<T: Real>(
    retract: &Retract<T>,
    f: &PeriodicFunction,
    zeta: &Cochain<T>,
    psi_s: impl Fn(f64) -> f64,
    vertex: f64,
    node: usize,
    samples: usize,
) -> Result<Amplification> {
    let hbar = retract.hbar();
    let grid: CircleGrid = retract.grid();
    if zeta.degree != 1 {
        return Err(Error::Degree("the homotopy acts on 1-forms".into()));
    }
    let crit = critical_points(f)?;
    let dir = f.d1(vertex).signum();
    let x = grid.h() * node as f64;
    let ahead = next_critical(&crit, vertex, dir);
    let along = |a: f64, b: f64| if dir > 0.0 { crate::morse::ccw(a, b) } else { crate::morse::ccw(b, a) };
    let reach = along(vertex, x);
    if reach >= along(vertex, ahead.theta) {
        return Err(Error::Schema { path: "node".into(), msg: "target is not on the flow line out of the vertex".into() });
    }
    let behind = next_critical(&crit, vertex, -dir);
    let back_room = 0.9 * along(behind.theta, vertex);
    let curv = (f.d2(vertex) - second_derivative(&psi_s, vertex)).abs().max(1e-3);
    let back = (2.0 * 80.0 * hbar / curv).sqrt().min(back_room);

    // ν = e^{ψ_S/ħ} (1 - P) d* ζ
    let s = retract.df.mat.transpose().matvec(&zeta.values);
    let s = retract.spectrum(0).project(&s).iter().zip(&s).map(|(p, v)| *v - *p).collect::<Vec<T>>();
    let h = (reach + back) / (samples - 1) as f64;
    let t: Vec<f64> = (0..samples).map(|i| -back + h * i as f64).collect();
    let theta = |ti: f64| vertex + dir * ti;
    let nu: Vec<f64> = t
        .iter()
        .map(|&ti| {
            let th = theta(ti);
            (grid.interpolate(&s, T::from_f64(th)) * T::from_f64(psi_s(th) / hbar).exp()).to_f64()
        })
        .collect();
    let fp = FlowLineProblem {
        t: t.clone(),
        f: t.iter().map(|&ti| f.eval(theta(ti))).collect(),
        psi_s: t.iter().map(|&ti| psi_s(theta(ti))).collect(),
        nu,
        m: None,
    };
    let line = fp.line()?;
    let tr = transport_leading(&fp, hbar)?;
    let last = samples - 1;
    let wkb = (-line.psi_e[last] / hbar).exp() * tr.mu[last];
    let spectral = retract.apply_h(zeta).values[node].to_f64();
    Ok(Amplification { hbar, vertex, x, spectral, wkb, ratio: spectral / wkb, residual: tr.residual })
}

fn second_derivative(g: &impl Fn(f64) -> f64, x: f64) -> f64 {
    let e = 1e-3;
    (-g(x + 2.0 * e) + 16.0 * g(x + e) - 30.0 * g(x) + 16.0 * g(x - e) - g(x - 2.0 * e)) / (12.0 * e * e)
}

/// `√(2πħ)`, the one-dimensional Gaussian mass.
pub fn gaussian_mass(hbar: f64) -> f64 {
    (2.0 * PI * hbar).sqrt()
}
