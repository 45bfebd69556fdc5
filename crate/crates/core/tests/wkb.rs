use mwl::asymptotics::fit_line;
use mwl::wkb::*;
use mwl::Error;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn quartic(order: usize, hbar: f64) -> LaplaceProblem {
    LaplaceProblem { phase: vec![0.0, 0.0, 0.5, 0.0, 0.25], amplitude: vec![1.0], order, hbar }
}

/// Independent route for the quartic: expand `e^{-x⁴/4ħ}` and integrate
/// Gaussian moments term by term. The `ħ^k` coefficient of
/// `(1/√(2πħ)) ∫ e^{-x²/2ħ - x⁴/4ħ}` is `Σ_j (-1/4)^j / j! · (4j-1)!!` with
/// `k = j`.
fn quartic_moment_coefficients(n: usize) -> Vec<f64> {
    let dfact = |m: i64| (1..=m).rev().step_by(2).map(|x| x as f64).product::<f64>();
    let mut fact = 1.0;
    (0..n)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            (-0.25f64).powi(j as i32) / fact * dfact(4 * j as i64 - 1)
        })
        .collect()
}

#[test]
fn gaussian_moments_are_exact() {
    for hbar in [0.3, 0.1, 0.01] {
        let g = (TAU * hbar).sqrt();
        let r = LaplaceProblem { phase: vec![0.0, 0.0, 0.5], amplitude: vec![1.0], order: 1, hbar }.expand().unwrap();
        assert!((r.expansion - g).abs() < 1e-10 * g);
        assert!(r.error.abs() < 1e-10 * g);
        let r = LaplaceProblem { phase: vec![0.0, 0.0, 0.5], amplitude: vec![0.0, 0.0, 1.0], order: 2, hbar }.expand().unwrap();
        assert!((r.expansion - hbar * g).abs() < 1e-10 * hbar * g, "{r:?}");
        assert!(r.terms[0].abs() < 1e-300);
    }
}

#[test]
fn quartic_coefficients_match_the_moment_expansion() {
    let oracle = quartic_moment_coefficients(4);
    assert_eq!(oracle, vec![1.0, -0.75, 3.28125, -27.0703125]);
    let g = quartic(4, 0.1).morse_amplitude().unwrap();
    let dfact = |k: usize| (1..2 * k).step_by(2).map(|x| x as f64).product::<f64>();
    for k in 0..4 {
        assert!((g[2 * k] * dfact(k) - oracle[k]).abs() < 1e-12 * oracle[k].abs(), "k = {k}");
    }
    // odd coefficients vanish for an even phase
    for k in 0..3 {
        assert!(g[2 * k + 1].abs() < 1e-14);
    }
}

#[test]
fn quartic_error_slopes_converge_at_small_hbar() {
    let hs = [0.004f64, 0.002, 0.001];
    let lh: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    for n in 1..=3 {
        let le: Vec<f64> = hs.iter().map(|&h| quartic(n, h).expand().unwrap().error.abs().ln()).collect();
        let (slope, _, _) = fit_line(&lh, &le).unwrap();
        assert!((slope - (n as f64 + 0.5)).abs() < 0.05, "N = {n}: slope {slope}");
    }
}

#[test]
fn laplace_rejects_bad_phases() {
    let mut p = quartic(2, 0.1);
    p.phase[1] = 0.1;
    assert!(matches!(p.expand(), Err(Error::NotAMinimum(_))));
    let mut p = quartic(2, 0.1);
    p.phase[2] = -0.5;
    assert!(matches!(p.expand(), Err(Error::NotAMinimum(_))));
    let p = LaplaceProblem { phase: vec![0.0, 0.0, 0.5, 0.0, -1.0], amplitude: vec![1.0], order: 1, hbar: 0.1 };
    assert!(matches!(p.quadrature(), Err(Error::NotAMinimum(_))));
    let p = quartic(0, 0.1);
    assert!(matches!(p.expand(), Err(Error::Schema { .. })));
}

#[test]
fn fiber_leading_term() {
    let v = 0.7;
    for hbar in [0.1, 0.05, 0.02] {
        let r = fiber_laplace(|x| 2.0 * (x - v).powi(2), |_| 1.0, v, 3.0, hbar).unwrap();
        assert!((r.hessian - 4.0).abs() < 1e-6);
        let exact = (TAU * hbar).sqrt() / 2.0;
        assert!((r.leading - exact).abs() < 1e-6 * exact);
        assert!((r.quadrature - exact).abs() < 1e-10 * exact);
    }
    // a β vanishing to second order at v loses a factor ħ
    let hs = [0.08f64, 0.04, 0.02, 0.01];
    let le: Vec<f64> = hs
        .iter()
        .map(|&h| fiber_laplace(|x| 1.0 - (x - v).cos(), |x| (x - v).powi(2), v, 1.5, h).unwrap().quadrature.ln())
        .collect();
    let lh: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let (slope, _, _) = fit_line(&lh, &le).unwrap();
    assert!((slope - 1.5).abs() < 0.05, "{slope}");
    assert!(matches!(fiber_laplace(|x| (x - v).powi(4), |_| 1.0, v, 1.0, 0.1), Err(Error::DegenerateHessian(_))));
}

fn grid(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect()
}

const A: f64 = 4.0;

fn bump(t: &[f64]) -> FlowLineProblem {
    let nu = t.iter().map(|&x| 0.5 * ((A * (x + 1.0)).tanh() - (A * (x - 1.0)).tanh())).collect();
    FlowLineProblem { t: t.to_vec(), f: t.to_vec(), psi_s: t.to_vec(), nu, m: None }
}

fn bump_antiderivative(x: f64) -> f64 {
    ((A * (x + 1.0)).cosh().ln() - (A * (x - 1.0)).cosh().ln()) / (2.0 * A)
}

#[test]
fn zero_source_gives_zero() {
    let t = grid(-3.0, 3.0, 201);
    let mut fp = bump(&t);
    fp.nu = vec![0.0; t.len()];
    let tr = transport_leading(&fp, 0.1).unwrap();
    assert!(tr.mu.iter().all(|&m| m == 0.0));
    let it = transport_iterate(&fp, &vec![0.0; t.len()], 0.1).unwrap();
    assert!(it.mu.iter().all(|&m| m == 0.0));
}

#[test]
fn bump_matches_its_closed_form() {
    let t = grid(-3.0, 3.0, 1201);
    let fp = bump(&t);
    let hbar = 0.1;
    let tr = transport_leading(&fp, hbar).unwrap();
    assert!(tr.residual < TRANSPORT_TOL);
    let err = t
        .iter()
        .zip(&tr.mu)
        .map(|(&x, m)| (m - (bump_antiderivative(x) - bump_antiderivative(-3.0)) / (2.0 * hbar)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err:e}");
    let it = transport_iterate(&fp, &tr.mu, hbar).unwrap();
    assert!(it.residual < TRANSPORT_TOL);
    assert!(fp.psi_e_consistency().unwrap() < 1e-10);
}

#[test]
fn coarse_lines_ask_for_refinement() {
    let fp = bump(&grid(-3.0, 3.0, 25));
    assert!(matches!(transport_leading(&fp, 0.1), Err(Error::Refine(_))));
}

#[test]
fn line_validation() {
    let t = grid(-1.0, 1.0, 50);
    let mut fp = bump(&t);
    fp.f = t.iter().map(|x| x * x).collect();
    assert!(matches!(fp.line(), Err(Error::Schema { .. })));
    let mut fp = bump(&t);
    fp.nu.pop();
    assert!(matches!(fp.line(), Err(Error::Schema { path, .. }) if path == "nu"));
    let mut fp = bump(&t);
    fp.t[3] += 1e-4;
    assert!(matches!(fp.line(), Err(Error::Schema { .. })));
    assert!(matches!(bump(&grid(0.0, 1.0, 5)).line(), Err(Error::Schema { .. })));
}

#[test]
fn vertex_is_where_psi_s_minus_f_is_smallest() {
    let t = grid(-2.0, 4.0, 601);
    let f: Vec<f64> = t.iter().map(|x| x + 0.1 * x * x).collect();
    let psi_s: Vec<f64> = t.iter().zip(&f).map(|(x, f)| f + (x - 0.5).powi(2) / 2.0).collect();
    let fp = FlowLineProblem { t: t.clone(), f, psi_s, nu: vec![1.0; t.len()], m: None };
    let line = fp.line().unwrap();
    assert!((t[line.vertex] - 0.5).abs() < 1e-12);
    assert!(line.big_psi.iter().all(|&p| p <= 1e-12));
    assert_eq!(line.big_psi[line.vertex], 0.0);
}

#[test]
fn flow_line_json_round_trip() {
    let fp = bump(&grid(-1.0, 1.0, 20));
    let s = serde_json::to_string(&fp).unwrap();
    assert!(s.contains("\"psi_S\""));
    let back: FlowLineProblem = serde_json::from_str(&s).unwrap();
    assert_eq!(back.t, fp.t);
    assert_eq!(back.m, None);
}

#[test]
fn constant_m_gives_an_exponential_weight() {
    // f = t, Ψ = 0, ν = 1, M = c: 2μ' - cμ = 1/ħ from -3
    let t = grid(-3.0, 1.0, 801);
    let c = 0.4;
    let fp = FlowLineProblem { t: t.clone(), f: t.clone(), psi_s: t.clone(), nu: vec![1.0; t.len()], m: Some(vec![c; t.len()]) };
    let hbar = 0.2;
    let tr = transport_leading(&fp, hbar).unwrap();
    for (&x, m) in t.iter().zip(&tr.mu) {
        let exact = ((c * (x + 3.0) / 2.0).exp() - 1.0) / (c * hbar);
        assert!((m - exact).abs() < 1e-9 * (1.0 + exact.abs()), "{x} {m} {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transport_is_linear_in_the_source(s in -3.0f64..3.0, shift in -0.5f64..0.5) {
        let t = grid(-3.0, 3.0, 601);
        let mut fp = bump(&t);
        fp.nu = t.iter().map(|&x| (-(x - shift).powi(2) * 4.0).exp()).collect();
        let a = transport_leading(&fp, 0.1).unwrap();
        fp.nu.iter_mut().for_each(|n| *n *= s);
        let b = transport_leading(&fp, 0.1).unwrap();
        for (x, y) in a.mu.iter().zip(&b.mu) {
            prop_assert!((s * x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn calculus_is_exact_on_cubics(c in prop::array::uniform4(-2.0f64..2.0)) {
        let t = grid(-1.0, 1.0, 41);
        let h = t[1] - t[0];
        let p = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
        let u: Vec<f64> = t.iter().map(|&x| p(x)).collect();
        let du = upwind_d1(&u, h);
        let ddu = d2(&u, h);
        let iu = cumulative(&u, h);
        let anti = |x: f64| c[0] * x + c[1] * x * x / 2.0 + c[2] * x.powi(3) / 3.0 + c[3] * x.powi(4) / 4.0;
        for (i, &x) in t.iter().enumerate() {
            prop_assert!((du[i] - (c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x)).abs() < 1e-9);
            prop_assert!((ddu[i] - (2.0 * c[2] + 6.0 * c[3] * x)).abs() < 1e-7);
            prop_assert!((iu[i] - (anti(x) - anti(-1.0))).abs() < 1e-12);
        }
    }
}
