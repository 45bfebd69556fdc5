use mwl::asymptotics::*;
use mwl::derham::CircleGrid;
use mwl::morse::{PeriodicFunction, Sequence};
use mwl::{Dd, Error};
use proptest::prelude::*;

const HS: [f64; 6] = [0.2, 0.17, 0.15, 0.12, 0.1, 0.08];

#[test]
fn exact_model_is_recovered() {
    let logs: Vec<f64> = HS.iter().map(|h| 3f64.ln() - h.ln() - 2.0 / h).collect();
    let f = fit_log_model(&HS, &logs).unwrap();
    assert!((f.a - 2.0).abs() < 1e-6, "{f:?}");
    assert!((f.p + 1.0).abs() < 1e-6, "{f:?}");
    assert!((f.coefficient - 3.0).abs() < 1e-6, "{f:?}");
    assert!(f.max_rel_residual < 1e-9);
    assert_eq!(f.n_points, 6);
}

#[test]
fn too_few_points_gives_no_fit() {
    let logs: Vec<f64> = HS[..3].iter().map(|h| -1.0 / h).collect();
    assert!(matches!(fit_log_model(&HS[..3], &logs), Err(Error::InsufficientData { needed: 5, got: 3 })));
    assert!(matches!(fit_line(&[1.0, 2.0], &[0.0, 1.0]), Err(Error::InsufficientData { .. })));
}

#[test]
fn clustered_hbars_are_ill_conditioned() {
    let hs: Vec<f64> = (0..6).map(|i| 0.1 + 1e-7 * i as f64).collect();
    let logs: Vec<f64> = hs.iter().map(|h| -1.0 / h).collect();
    assert!(matches!(fit_log_model(&hs, &logs), Err(Error::FitIllConditioned(_))));
}

#[test]
fn noisy_model_has_honest_errors() {
    // deterministic ±1e-3 perturbation
    let logs: Vec<f64> = HS.iter().enumerate().map(|(i, h)| -1.5 / h + 0.5 * h.ln() + if i % 2 == 0 { 1e-3 } else { -1e-3 }).collect();
    let f = fit_log_model(&HS, &logs).unwrap();
    assert!((f.a - 1.5).abs() < 5.0 * f.a_stderr.max(1e-6));
    assert!((f.p - 0.5).abs() < 5.0 * f.p_stderr.max(1e-6));
    assert!(f.a_stderr > 0.0 && f.a_stderr < 0.05);
}

#[test]
fn m1_sweep_matches_the_morse_differential() {
    let seq = Sequence::new(vec![PeriodicFunction::zero(), PeriodicFunction::new(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0, 0.0, 1e-3])])
        .unwrap();
    let crit = seq.crit(0, 1);
    let min = crit.iter().find(|c| c.index == 0).copied().unwrap();
    // the maximum reached along the positive arc from the minimum
    let max = crit
        .iter()
        .filter(|c| c.index == 1)
        .min_by(|a, b| (a.theta - min.theta).rem_euclid(std::f64::consts::TAU).total_cmp(&(b.theta - min.theta).rem_euclid(std::f64::consts::TAU)))
        .copied()
        .unwrap();
    let q = vec![min, max];
    let s = hbar_sweep::<Dd>(&seq, &q, &HS, CircleGrid::new(129).unwrap()).unwrap();
    assert!(s.dropped.is_empty(), "{:?}", s.dropped);
    assert_eq!(s.points.len(), 6);
    assert!((s.action - 2.0).abs() < 5e-3);
    let r = verify_theorem(&seq, &s, Tolerances::default(), false).unwrap();
    assert_eq!(r.expected_power, 1.0);
    assert_eq!(r.reference_count.abs(), 1);
    assert_eq!(r.pass, Some(true), "{r:?}");
    let mut csv = Vec::new();
    write_sweep_csv(&s, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("k,hbar,log_abs_pairing,sign,topology_id\n"));
    assert_eq!(text.lines().count(), 1 + 6 * (1 + s.points[0].per_tree.len()));
}

#[test]
fn vanishing_degree_gives_a_trivial_sweep() {
    let seq = Sequence::new(vec![PeriodicFunction::zero(), PeriodicFunction::cosine(2, 1.0, 0.3)]).unwrap();
    let c = seq.crit(0, 1);
    let min = c.iter().find(|c| c.index == 0).copied().unwrap();
    let other_min = c.iter().filter(|c| c.index == 0).nth(1).copied().unwrap();
    let s = hbar_sweep::<f64>(&seq, &[min, other_min], &[0.3, 0.25, 0.2, 0.18, 0.15], CircleGrid::new(129).unwrap()).unwrap();
    assert!(s.trivial);
    assert!(s.dropped.is_empty(), "{:?}", s.dropped);
    assert!(s.points.iter().all(|p| p.log_abs_pairing.is_none()));
    let r = verify_theorem(&seq, &s, Tolerances::default(), false).unwrap();
    assert_eq!(r.reference_count, 0);
    assert_eq!(r.pass, Some(true));
}

proptest! {
    #[test]
    fn lattice_models_are_recovered(a in 0.3f64..3.0, p in -3i32..3, c in -2.0f64..2.0) {
        let logs: Vec<f64> = HS.iter().map(|h| -a / h + p as f64 * h.ln() + c).collect();
        let f = fit_log_model(&HS, &logs).unwrap();
        prop_assert!((f.a - a).abs() < 1e-7 * (1.0 + a));
        prop_assert!((f.p - p as f64).abs() < 1e-6);
        prop_assert!((f.c - c).abs() < 1e-5);
    }

    #[test]
    fn fit_line_is_exact_on_lines(s in -5.0f64..5.0, b in -5.0f64..5.0) {
        let xs = [0.1, 0.5, 1.0, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x| s * x + b).collect();
        let (fs, fb, _) = fit_line(&xs, &ys).unwrap();
        prop_assert!((fs - s).abs() < 1e-10 && (fb - b).abs() < 1e-10);
    }
}
