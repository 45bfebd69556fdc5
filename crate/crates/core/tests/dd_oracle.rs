//! Double-double elementary functions against 50-digit reference values.

use mwl::Dd;
use proptest::prelude::*;

const TRIG: [(f64, f64, f64, f64, f64); 6] = [
    (0.123, 0.12269009002431533, 5.32132508604229e-18, 0.9924450321351935, 4.271150561551316e-17),
    (1.0, 0.8414709848078965, 1.776845092935536e-18, 0.5403023058681398, -4.760954612604417e-17),
    (-2.5, -0.5984721441039565, 5.521403334082375e-17, -0.8011436155469337, -1.8674742705085553e-17),
    (7.75, 0.9945987791111761, 8.35257604489188e-18, 0.10379435721925297, 4.265758670469736e-18),
    (30.0, -0.9880316240928618, 3.655935837727403e-17, 0.15425144988758405, 3.980208666184612e-18),
    (100.0, -0.5063656411097588, -3.050947053792115e-18, 0.8623188722876839, 4.334809858136501e-17),
];

const EXP: [(f64, f64, f64); 5] = [
    (0.5, 1.6487212707001282, -4.731568479435833e-17),
    (-3.0, 0.049787068367863944, -1.4831389691394365e-18),
    (10.0, 22026.465794806718, -1.3780134700517372e-12),
    (-40.0, 4.248354255291589e-18, 1.2437470802645773e-34),
    (200.0, 7.225973768125749e+86, 2.9945383505980016e+70),
];

fn rel(got: Dd, hi: f64, lo: f64) -> f64 {
    ((got - Dd::new(hi, lo)).abs() / Dd::new(hi, lo).abs()).to_f64()
}

#[test]
fn sin_cos_match_reference() {
    for (x, sh, sl, ch, cl) in TRIG {
        let (s, c) = Dd::from_f64(x).sin_cos();
        assert!(rel(s, sh, sl) < 1e-30, "sin {x}: {:e}", rel(s, sh, sl));
        assert!(rel(c, ch, cl) < 1e-30, "cos {x}: {:e}", rel(c, ch, cl));
    }
}

#[test]
fn exp_matches_reference() {
    for (x, hi, lo) in EXP {
        let e = Dd::from_f64(x).exp();
        // nine squarings amplify the reduced-argument error by 512
        assert!(rel(e, hi, lo) < 1e-29, "exp {x}: {:e}", rel(e, hi, lo));
    }
}

#[test]
fn division_by_f64_is_accurate() {
    let third = Dd::ONE.div_f64(3.0);
    assert!((third.mul_f64(3.0) - Dd::ONE).abs().to_f64() < 1e-31);
    let q = Dd::PI.div_f64(7.0);
    assert!(((q.mul_f64(7.0) - Dd::PI) / Dd::PI).abs().to_f64() < 1e-31);
}

proptest! {
    #[test]
    fn pythagoras(x in -50.0f64..50.0) {
        let (s, c) = Dd::from_f64(x).sin_cos();
        prop_assert!((s * s + c * c - Dd::ONE).abs().to_f64() < 1e-30);
    }

    #[test]
    fn exp_is_a_homomorphism(a in -20.0f64..20.0, b in -20.0f64..20.0) {
        let lhs = (Dd::from_f64(a) + Dd::from_f64(b)).exp();
        let rhs = Dd::from_f64(a).exp() * Dd::from_f64(b).exp();
        prop_assert!(((lhs - rhs) / lhs).abs().to_f64() < 1e-28);
    }

    #[test]
    fn sqrt_squares_back(x in 1e-10f64..1e10) {
        let r = Dd::from_f64(x).sqrt();
        prop_assert!(((r * r - Dd::from_f64(x)) / Dd::from_f64(x)).abs().to_f64() < 1e-31);
    }
}
