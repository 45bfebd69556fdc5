//! `ħ`-sweeps of product pairings and the regression
//! `log |v(ħ)| = -A/ħ + p log ħ + c`.

use crate::ainfty::{product_value, Family, TreePairing};
use crate::derham::CircleGrid;
use crate::error::{Error, Result};
use crate::morse::{degree_balanced, morse_product, CriticalPoint, Sequence};
use crate::real::Real;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const MIN_FIT_POINTS: usize = 5;
pub const MAX_CONDITION: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub hbar: f64,
    pub log_abs_pairing: Option<f64>,
    pub sign: i32,
    pub per_tree: Vec<TreePairing>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedPoint {
    pub hbar: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub k: usize,
    pub q_tuple: Vec<f64>,
    pub action: f64,
    /// Decreasing in `ħ`.
    pub points: Vec<SweepPoint>,
    pub dropped: Vec<DroppedPoint>,
    /// The degree condition fails, so every pairing vanishes identically.
    pub trivial: bool,
    pub sign_stable: bool,
}

/// Evaluates the product pairing at every `ħ`. Points outside the validated
/// regime are dropped and recorded; any other error aborts.
pub fn hbar_sweep<T: Real>(seq: &Sequence, q: &[CriticalPoint], hbars: &[f64], grid: CircleGrid) -> Result<SweepResult> {
    let k = q.len() - 1;
    let mut hs = hbars.to_vec();
    hs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    hs.dedup();
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for hbar in hs {
        match Family::<T>::new(seq, grid, hbar).and_then(|fam| product_value(&fam, q).map(|v| (fam.warnings(), v))) {
            Ok((warnings, v)) => points.push(SweepPoint {
                hbar,
                log_abs_pairing: v.pairing_log_abs,
                sign: v.pairing_sign,
                per_tree: v.per_tree,
                warnings,
            }),
            Err(e @ (Error::Regime(_) | Error::DimensionMismatch { .. } | Error::IllConditioned { .. })) => {
                dropped.push(DroppedPoint { hbar, reason: e.to_string() })
            }
            Err(e) => return Err(e),
        }
    }
    let signs: Vec<i32> = points.iter().map(|p| p.sign).filter(|&s| s != 0).collect();
    Ok(SweepResult {
        k,
        q_tuple: q.iter().map(|c| c.theta).collect(),
        action: crate::morse::action(q),
        sign_stable: signs.windows(2).all(|w| w[0] == w[1]),
        trivial: !degree_balanced(q),
        points,
        dropped,
    })
}

/// Sweep CSV with columns `k,hbar,log_abs_pairing,sign,topology_id`. Rows
/// with an empty `topology_id` hold the total; an empty `log_abs_pairing`
/// marks an exactly vanishing pairing.
pub fn write_sweep_csv(s: &SweepResult, mut w: impl std::io::Write) -> Result<()> {
    let fmt = |l: Option<f64>| l.map_or(String::new(), |x| format!("{x:.17e}"));
    writeln!(w, "k,hbar,log_abs_pairing,sign,topology_id")?;
    for p in &s.points {
        writeln!(w, "{},{},{},{},", s.k, p.hbar, fmt(p.log_abs_pairing), p.sign)?;
        for t in &p.per_tree {
            writeln!(w, "{},{},{},{},{}", s.k, p.hbar, fmt(t.pairing_log_abs), t.sign, t.topology_id)?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub a: f64,
    pub a_stderr: f64,
    pub p: f64,
    pub p_stderr: f64,
    pub c: f64,
    pub c_stderr: f64,
    /// `e^c`.
    pub coefficient: f64,
    /// `max |v_fit/v - 1|` over the points.
    pub max_rel_residual: f64,
    /// Of the column-normalized design matrix.
    pub condition: f64,
    pub n_points: usize,
}

/// Ordinary least squares through the SVD of the column-normalized design
/// matrix: coefficients, standard errors, residuals and condition number.
pub(crate) struct Lstsq {
    pub beta: Vec<f64>,
    pub stderr: Vec<f64>,
    pub resid: Vec<f64>,
    pub condition: f64,
}

pub(crate) fn lstsq(x: &DMatrix<f64>, y: &[f64]) -> Result<Lstsq> {
    let (m, k) = x.shape();
    let norms: Vec<f64> = (0..k).map(|j| x.column(j).norm()).collect();
    let xs = DMatrix::from_fn(m, k, |i, j| x[(i, j)] / norms[j]);
    let svd = xs.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::FitIllConditioned(condition));
    }
    let yv = DVector::from_column_slice(y);
    let beta_s = svd.solve(&yv, 0.0).map_err(|e| Error::Regime(e.to_string()))?;
    let beta: Vec<f64> = (0..k).map(|j| beta_s[j] / norms[j]).collect();
    let resid: Vec<f64> = (&yv - x * DVector::from_column_slice(&beta)).iter().copied().collect();
    let sigma2 = resid.iter().map(|r| r * r).sum::<f64>() / (m.saturating_sub(k)).max(1) as f64;
    // cov = σ² (XᵀX)⁻¹ = σ² D⁻¹ V Σ⁻² Vᵀ D⁻¹ with D the column norms
    let vt = svd.v_t.as_ref().expect("requested");
    let stderr = (0..k)
        .map(|j| (sigma2 * (0..k).map(|r| (vt[(r, j)] / sv[r]).powi(2)).sum::<f64>()).sqrt() / norms[j])
        .collect();
    Ok(Lstsq { beta, stderr, resid, condition })
}

/// Least squares for `log|v| = -A/ħ + p log ħ + c`.
pub fn fit_log_model(hbars: &[f64], logs: &[f64]) -> Result<Fit> {
    let m = hbars.len();
    if m < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { needed: MIN_FIT_POINTS, got: m });
    }
    fit_log_model_unchecked(hbars, logs)
}

pub(crate) fn fit_log_model_unchecked(hbars: &[f64], logs: &[f64]) -> Result<Fit> {
    let x = DMatrix::from_fn(hbars.len(), 3, |i, j| match j {
        0 => -1.0 / hbars[i],
        1 => hbars[i].ln(),
        _ => 1.0,
    });
    let l = lstsq(&x, logs)?;
    let max_rel_residual = l.resid.iter().fold(0.0f64, |a, r| a.max((-r).exp_m1().abs()));
    Ok(Fit {
        a: l.beta[0],
        a_stderr: l.stderr[0],
        p: l.beta[1],
        p_stderr: l.stderr[1],
        c: l.beta[2],
        c_stderr: l.stderr[2],
        coefficient: l.beta[2].exp(),
        max_rel_residual,
        condition: l.condition,
        n_points: hbars.len(),
    })
}

/// `y = slope x + intercept`, returning `(slope, intercept, slope stderr)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: xs.len() });
    }
    let x = DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { xs[i] } else { 1.0 });
    let l = lstsq(&x, ys)?;
    Ok((l.beta[0], l.beta[1], l.stderr[0]))
}

/// Fit of the total pairing, or of one topology when `topology` is given.
/// Points with an exactly vanishing pairing are skipped.
pub fn fit_asymptotics(s: &SweepResult, topology: Option<usize>) -> Result<Fit> {
    let mut hs = Vec::new();
    let mut ls = Vec::new();
    for p in &s.points {
        let l = match topology {
            None => p.log_abs_pairing,
            Some(id) => p.per_tree.iter().find(|t| t.topology_id == id).and_then(|t| t.pairing_log_abs),
        };
        if let Some(l) = l {
            hs.push(p.hbar);
            ls.push(l);
        }
    }
    fit_log_model(&hs, &ls)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative tolerance on the action.
    pub action: f64,
    /// Absolute tolerance on the power of `ħ`.
    pub power: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { action: 0.05, power: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeFit {
    pub topology_id: usize,
    pub fit: Option<Fit>,
    /// Action of the rigid trees of this topology, when there are any.
    pub reference_action: Option<f64>,
    pub morse_count: i64,
    pub action_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub k: usize,
    pub fit: Option<Fit>,
    pub fit_error: Option<String>,
    pub reference_action: f64,
    pub expected_power: f64,
    pub reference_count: i64,
    pub sweep_sign: i32,
    pub action_ok: bool,
    pub power_ok: bool,
    pub count_ok: bool,
    pub sign_ok: bool,
    /// `None` when no verdict can be issued (too few points, ill-conditioned
    /// fit or standard errors above the tolerances).
    pub pass: Option<bool>,
    pub per_tree: Vec<TreeFit>,
    pub notes: Vec<String>,
}

/// Compares a sweep with the Morse product: action, power `2 - k`, rounded
/// coefficient and sign.
pub fn verify_theorem(seq: &Sequence, s: &SweepResult, tol: Tolerances, tree_resolved: bool) -> Result<FitReport> {
    let q = seq.snap(&s.q_tuple)?;
    let morse = morse_product(seq, &q)?;
    let k = s.k;
    let expected_power = 2.0 - k as f64;
    let reference_action = s.action;
    let sweep_sign = s.points.iter().map(|p| p.sign).find(|&x| x != 0).unwrap_or(0);
    let mut notes = Vec::new();
    if !s.sign_stable {
        notes.push("pairing sign changes across the sweep".to_string());
    }
    if s.trivial {
        notes.push("degree condition fails; all pairings vanish".to_string());
    }
    for d in &s.dropped {
        notes.push(format!("dropped hbar = {}: {}", d.hbar, d.reason));
    }
    let (fit, fit_error) = match fit_asymptotics(s, None) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (mut action_ok, mut power_ok, mut count_ok) = (false, false, false);
    let sign_ok = s.sign_stable && (sweep_sign as i64) == morse.coefficient.signum();
    let mut pass = None;
    if let Some(f) = &fit {
        action_ok = (f.a - reference_action).abs() <= tol.action * reference_action.abs();
        power_ok = (f.p - expected_power).abs() <= tol.power;
        count_ok = f.coefficient.round() as i64 == morse.coefficient.abs();
        let confident = f.a_stderr < tol.action * reference_action.abs() && f.p_stderr < tol.power;
        if confident {
            pass = Some(action_ok && power_ok && count_ok && sign_ok);
        } else {
            notes.push("standard errors exceed the tolerances; no verdict".to_string());
        }
    } else if s.points.iter().all(|p| p.log_abs_pairing.is_none()) && !s.points.is_empty() {
        // identically vanishing pairing: compare with a zero count
        count_ok = morse.coefficient == 0;
        if s.points.len() >= MIN_FIT_POINTS {
            pass = Some(count_ok);
        }
    }
    let mut per_tree = Vec::new();
    if tree_resolved {
        for &(id, count) in &morse.per_topology {
            let trees: Vec<_> = morse.trees.iter().filter(|t| t.topology_id == id).collect();
            let reference_action = trees.iter().map(|t| t.action).reduce(f64::min);
            let fit = fit_asymptotics(s, Some(id)).ok();
            let action_ok = match (&fit, reference_action) {
                (Some(f), Some(a)) => Some((f.a - a).abs() <= tol.action * a.abs()),
                _ => None,
            };
            per_tree.push(TreeFit { topology_id: id, fit, reference_action, morse_count: count, action_ok });
        }
    }
    Ok(FitReport {
        k,
        fit,
        fit_error,
        reference_action,
        expected_power,
        reference_count: morse.coefficient,
        sweep_sign,
        action_ok,
        power_ok,
        count_ok,
        sign_ok,
        pass,
        per_tree,
        notes,
    })
}
