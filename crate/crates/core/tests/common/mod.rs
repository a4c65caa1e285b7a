#![allow(dead_code)]

use holeburn::MaterialParams;

fn derivative(n: [f64; 3], r: f64, m: &MaterialParams) -> [f64; 3] {
    let ge = 1.0 / m.excited_lifetime;
    let gb = 1.0 / m.bottleneck_lifetime;
    let z = m.zeta;
    let [g, e, b] = n;
    [
        -r * g + (r + (1.0 - z) * ge) * e + gb * b,
        r * g - (r + ge) * e,
        z * ge * e - gb * b,
    ]
}

fn rk4_step(n: [f64; 3], r: f64, m: &MaterialParams, h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], k: [f64; 3], s: f64| [a[0] + s * k[0], a[1] + s * k[1], a[2] + s * k[2]];
    let k1 = derivative(n, r, m);
    let k2 = derivative(add(n, k1, 0.5 * h), r, m);
    let k3 = derivative(add(n, k2, 0.5 * h), r, m);
    let k4 = derivative(add(n, k3, h), r, m);
    [0, 1, 2].map(|i| n[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Step-doubling adaptive RK4 reference for one bin.
pub fn rk4_adaptive(n0: [f64; 3], r: f64, m: &MaterialParams, t_end: f64, tol: f64) -> [f64; 3] {
    let fastest = 2.0 * r + 1.0 / m.excited_lifetime + 1.0 / m.bottleneck_lifetime;
    let mut h = (0.1 / fastest).min(t_end);
    let mut t = 0.0;
    let mut n = n0;
    while t < t_end {
        h = h.min(t_end - t);
        let full = rk4_step(n, r, m, h);
        let half = rk4_step(rk4_step(n, r, m, 0.5 * h), r, m, 0.5 * h);
        let err = (0..3).map(|i| (full[i] - half[i]).abs()).fold(0.0, f64::max);
        if err <= tol || h < 1e-15 {
            t += h;
            // Richardson extrapolation of the two estimates.
            n = [0, 1, 2].map(|i| half[i] + (half[i] - full[i]) / 15.0);
            if err < 0.1 * tol {
                h *= 2.0;
            }
        } else {
            h *= 0.5;
        }
    }
    n
}

pub fn material(t_e: f64, t_b: f64, zeta: f64) -> MaterialParams {
    let mut m = MaterialParams::with_zeta(zeta);
    m.excited_lifetime = t_e;
    m.bottleneck_lifetime = t_b;
    m
}

/// Full width at half maximum of a sampled peak, by linear interpolation of
/// the outermost half-maximum crossings.
pub fn fwhm(x: &[f64], y: &[f64]) -> f64 {
    let peak = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half = 0.5 * peak;
    let first = y.iter().position(|&v| v >= half).expect("peak above half");
    let last = y.iter().rposition(|&v| v >= half).expect("peak above half");
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) / (y[j] - y[i]) * (x[j] - x[i]);
    let left = if first == 0 { x[0] } else { cross(first - 1, first) };
    let right = if last + 1 == y.len() { x[last] } else { cross(last, last + 1) };
    right - left
}
