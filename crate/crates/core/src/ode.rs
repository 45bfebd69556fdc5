//! Dormand–Prince 5(4) integration for scalar autonomous flows.

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = g(y)` from `y0` over time `t_end >= 0` with local error `tol`.
pub fn flow(g: impl Fn(f64) -> f64, y0: f64, t_end: f64, tol: f64) -> f64 {
    let mut t = 0.0;
    let mut y = y0;
    let mut h = (t_end / 16.0).max(1e-6).min(t_end);
    let mut k = [0.0f64; 7];
    let mut steps = 0;
    while t < t_end && steps < 1_000_000 {
        steps += 1;
        if t + h > t_end {
            h = t_end - t;
        }
        k[0] = g(y);
        for s in 1..7 {
            let mut acc = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += h * A[s][j] * kj;
            }
            k[s] = g(acc);
        }
        let mut y5 = y;
        let mut y4 = y;
        for s in 0..7 {
            y5 += h * B5[s] * k[s];
            y4 += h * B4[s] * k[s];
        }
        let err = (y5 - y4).abs();
        let scale = tol * (1.0 + y.abs());
        if err <= scale {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * (scale / err).powf(0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = flow(|y| y, 1.0, 2.0, 1e-12);
        assert!((y - 2f64.exp()).abs() < 1e-9);
    }
}
