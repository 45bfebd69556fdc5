use mwl::derham::{build_d, witten_d, witten_laplacian, CircleGrid, Cochain, WittenData};
use mwl::linalg::{sym_eigen, Mat};
use mwl::morse::{critical_points, PeriodicFunction};
use mwl::spectral::*;
use mwl::{Dd, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn retract(n: usize, f: &PeriodicFunction, hbar: f64) -> Retract<Dd> {
    let grid = CircleGrid::new(n).unwrap();
    Retract::new(grid, f, hbar, &build_d::<Dd>(&grid)).unwrap()
}

fn cos2_generic() -> PeriodicFunction {
    // breaks the symmetry of cos 2θ so that the two minima localize
    PeriodicFunction::new(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0, 0.0, 1e-3])
}

fn counts(f: &PeriodicFunction) -> (usize, usize) {
    let c = critical_points(f).unwrap();
    let m = c.iter().filter(|c| c.index == 0).count();
    (m, c.len() - m)
}

#[test]
fn witten_counting_at_moderate_grid() {
    for (f, hbar) in [(PeriodicFunction::cosine(1, 1.0, 0.0), 0.1), (cos2_generic(), 0.1), (cos2_generic(), 0.05)] {
        let grid = CircleGrid::new(257).unwrap();
        let data = WittenData::<f64>::new(grid, &f, hbar).unwrap();
        let df = witten_d(&data, &build_d::<f64>(&grid));
        let (m0, m1) = counts(&f);
        for (deg, want) in [(0u8, m0), (1, m1)] {
            let s = small_spectrum(&witten_laplacian(&df, deg), hbar, Some(want)).unwrap();
            assert_eq!(s.dim, want, "{f:?} degree {deg}");
            assert!(s.gap_ratio > GAP_RATIO_MIN);
        }
    }
}

fn rel(a: &Mat<Dd>, scale: f64) -> f64 {
    a.max_abs() / scale.max(1.0)
}

#[test]
fn shallow_well_is_not_separated_at_moderate_hbar() {
    // cos θ + 0.3 sin 3θ has a min/max pair with a barrier of 0.0083; its
    // tunnelling eigenvalue stays above ħ^{3/2} down to ħ ≈ 0.02
    let f = PeriodicFunction::new(vec![0.0, 1.0], vec![0.0, 0.0, 0.0, 0.3]);
    assert_eq!(counts(&f), (3, 3));
    let grid = CircleGrid::new(257).unwrap();
    let data = WittenData::<f64>::new(grid, &f, 0.05).unwrap();
    let df = witten_d(&data, &build_d::<f64>(&grid));
    let s = small_spectrum(&witten_laplacian(&df, 0), 0.05, None).unwrap();
    assert_eq!(s.dim, 1);
    assert!((s.eigen.values[1] / s.threshold - 1.238).abs() < 1e-3);
}

#[test]
fn homotopy_identities() {
    for f in [PeriodicFunction::cosine(1, 1.0, 0.0), cos2_generic()] {
        let r = retract(129, &f, 0.15);
        let n = 129;
        let eye = Mat::<Dd>::identity(n);
        for deg in [0u8, 1] {
            let s = r.spectrum(deg);
            let p = s.projector();
            assert!(rel(&p.matmul(&p).sub(&p), 1.0) < 1e-20);
            assert!(rel(&p.sub(&p.transpose()), 1.0) < 1e-25);
            let lap = if deg == 0 {
                r.df.mat.transpose().matmul(&r.df.mat)
            } else {
                r.df.mat.matmul(&r.df.mat.transpose())
            };
            let g = r.green(deg).unwrap();
            assert!(rel(&lap.matmul(&g).sub(&eye.sub(&p)), 1.0) < 1e-8);
            assert!(rel(&g.matmul(&p), g.max_abs()) < 1e-10);
            // G's top eigenvalue is the inverse of the first excluded one
            let top = sym_eigen(&g).values.last().unwrap().to_f64();
            let first = s.eigen.values[s.dim].to_f64();
            assert!((top * first - 1.0).abs() < 1e-8);
        }
        assert!(r.homotopy_residual < 1e-8, "{}", r.homotopy_residual);
        // H kills the small subspace and 0-forms
        for e in r.eigenforms(1) {
            let h = r.apply_h(&e.form);
            let scale = e.form.values.iter().fold(0.0f64, |m, v| m.max(v.abs().to_f64()));
            assert!(h.values.iter().all(|v| v.abs().to_f64() < 1e-10 * scale));
        }
        let zero_form = Cochain { degree: 0, values: vec![Dd::from_f64(1.0); n] };
        assert!(r.apply_h(&zero_form).values.iter().all(|v| v.to_f64() == 0.0));
    }
}

#[test]
fn homotopy_on_random_vectors() {
    let r = retract(129, &PeriodicFunction::cosine(1, 1.0, 0.0), 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let x: Vec<Dd> = (0..129).map(|_| Dd::from_f64(rng.gen_range(-1.0..1.0))).collect();
        let c = Cochain { degree: 1, values: x.clone() };
        // d H x = (I - P) x on 1-forms
        let dh = r.apply_d(&r.apply_h(&c).values);
        let p = r.project(&c).values;
        let err = dh.iter().zip(&x).zip(&p).map(|((a, b), c)| (*a - (*b - *c)).abs().to_f64()).fold(0.0, f64::max);
        assert!(err < 1e-8);
        // ⟨Hx, Hy⟩ = ⟨x, H*Hy⟩ consistency through the stored matrix
        let y: Vec<Dd> = (0..129).map(|_| Dd::from_f64(rng.gen_range(-1.0..1.0))).collect();
        let hy = r.h.matvec(&y);
        let lhs = mwl::linalg::dot(&r.h.matvec(&x), &hy).to_f64();
        let rhs = mwl::linalg::dot(&x, &r.h.tmatvec(&hy)).to_f64();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}

#[test]
fn eigenform_normalization_and_shape() {
    let f = PeriodicFunction::cosine(1, 1.0, 0.0);
    let mut last = f64::INFINITY;
    for hbar in [0.15, 0.1, 0.07] {
        let r = retract(257, &f, hbar);
        let min = r.eigenforms(0)[0].clone();
        let grid = r.grid();
        let at = grid.interpolate(&min.form.values, Dd::from_f64(min.point.theta)).to_f64();
        assert!((at - 1.0).abs() < 1e-20);
        // harmonic-oscillator norm, 1 + O(ħ)
        for q in &r.crit {
            let ratio = r.norm_ratio(q).unwrap();
            assert!((ratio - 1.0).abs() < 0.1 * hbar, "ħ = {hbar}, {q:?}: {ratio}");
        }
        let dev = (r.norm_ratio(&min.point).unwrap() - 1.0).abs();
        assert!(dev < last);
        last = dev;
    }
}

#[test]
fn eigenform_decay_follows_agmon_distance() {
    let f = PeriodicFunction::cosine(1, 1.0, 0.0);
    let r = retract(257, &f, 0.1);
    for q in r.crit.clone() {
        let prof = r.decay_profile(&q, 50.0 * 0.1).unwrap();
        let xs: Vec<f64> = prof.iter().map(|p| -p.0).collect();
        let ys: Vec<f64> = prof.iter().map(|p| p.1).collect();
        let (slope, _, _) = mwl::asymptotics::fit_line(&xs, &ys).unwrap();
        assert!((slope - 1.0).abs() < 0.1, "{q:?}: {slope}");
    }
}

#[test]
fn pairing_picks_out_each_eigenform() {
    let r = retract(129, &cos2_generic(), 0.15);
    for deg in [0u8, 1] {
        let forms = r.eigenforms(deg);
        assert_eq!(forms.len(), 2);
        for (i, e) in forms.iter().enumerate() {
            for (j, o) in forms.iter().enumerate() {
                let v = r.pairing(&e.form, &o.point).unwrap().to_f64();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-20);
            }
        }
    }
    // a maximum is not a degree-0 eigenform
    let max = r.eigenforms(1)[0].point;
    assert!(matches!(r.pairing(&r.eigenforms(0)[0].form, &max), Err(Error::Degree(_))));
}

#[test]
fn unresolved_hbar_is_a_regime_error() {
    let grid = CircleGrid::new(33).unwrap();
    let e = Retract::<f64>::new(grid, &PeriodicFunction::cosine(1, 1.0, 0.0), 0.01, &build_d::<f64>(&grid));
    assert!(matches!(e, Err(Error::Regime(_))), "{e:?}");
}

#[test]
fn green_decay_is_symmetric_and_local() {
    let f = PeriodicFunction::cosine(1, 1.0, 0.0);
    let grid = CircleGrid::new(257).unwrap();
    let h = grid.h();
    // node-aligned pairs so both orders see the same points
    let (a, b) = (8.0 * h, 64.0 * h);
    let hbars = [0.2, 0.16, 0.13, 0.1, 0.085];
    let rows = green_decay_probe::<Dd>(grid, &f, &hbars, &[(a, b), (b, a), (a, a)], 0).unwrap();
    let fits = fit_decay_rates(&rows).unwrap();
    let rate = |x: f64, y: f64| fits.iter().find(|d| (d.x - x).abs() < 1e-12 && (d.y - y).abs() < 1e-12).unwrap();
    let (ab, ba, aa) = (rate(a, b), rate(b, a), rate(a, a));
    assert!((ab.rate_est - ba.rate_est).abs() < 0.05 * ab.rate_est);
    assert!((ab.rate_est - ab.agmon_ref).abs() < 0.05 * ab.agmon_ref, "{ab:?}");
    assert!(aa.rate_est.abs() < 0.05, "{aa:?}");
    let mut csv = Vec::new();
    write_decay_csv(&rows, &fits, &mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("hbar,x,y,rate_est,agmon_ref"));
}

#[test]
fn coarse_grid_rejects_narrow_source() {
    let grid = CircleGrid::new(65).unwrap();
    let e = green_decay_probe::<f64>(grid, &PeriodicFunction::cosine(1, 1.0, 0.0), &[0.1], &[(0.0, 1.0)], 0);
    assert!(matches!(e, Err(Error::Regime(_))));
}
