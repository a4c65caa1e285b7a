mod common;

use std::f64::consts::PI;

use holeburn::diffusion::{fit_lorentzian, LorentzianFit};
use holeburn::pulse::{
    excitation_rate, power_spectrum_at, pulse_spectrum_on_grid, synthesize, PulseKind, PulseShape,
};
use holeburn::rate::{
    apply_diffusion_broadening, hole_depth, propagate_bin, run_sequence, BurnSequence,
    PulseSegment, SnapshotPolicy,
};
use holeburn::{Background, FrequencyGrid, LaserParams, SpectralArray, SpectralUnit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use common::{fwhm, material, rk4_adaptive};

#[test]
fn cascade_closed_form() {
    let (t_e, t_b) = (1e-3, 50e-3);
    let m = material(t_e, t_b, 1.0);
    let n = propagate_bin([0.0, 1.0, 0.0], 0.0, &m, t_e);
    let e_expect = (-1.0_f64).exp();
    let b_expect = t_b / (t_b - t_e) * ((-t_e / t_b).exp() - (-1.0_f64).exp());
    assert!((n[1] - e_expect).abs() < 1e-14);
    assert!((n[2] - b_expect).abs() < 1e-14);
    let rk = rk4_adaptive([0.0, 1.0, 0.0], 0.0, &m, t_e, 1e-14);
    assert!((rk[2] - b_expect).abs() < 1e-10);
}

#[test]
fn rk4_reference_is_accurate_for_two_level_case() {
    // With ζ = 0 and g + e = 1, e(t) = R/(2R + Γ)·(1 − exp(−(2R + Γ)t)).
    let m = material(1e-3, 50e-3, 0.0);
    let (r, t): (f64, f64) = (700.0, 3e-3);
    let k = 2.0 * r + 1e3;
    let expect = r / k * -(-k * t).exp_m1();
    let rk = rk4_adaptive([1.0, 0.0, 0.0], r, &m, t, 1e-14);
    assert!((rk[1] - expect).abs() < 1e-11);
    assert!((propagate_bin([1.0, 0.0, 0.0], r, &m, t)[1] - expect).abs() < 1e-14);
}

/// `|F(f)|²` of `sech(βt)·exp(i·2π∫(B/2)tanh(βt)dt)`, up to a constant.
fn sech_analytic(f: f64, bandwidth: f64, beta: f64) -> f64 {
    let mu = PI * bandwidth / beta;
    1.0 / ((PI * mu).cosh() + (2.0 * PI * PI * f / beta).cosh())
}

#[test]
fn sech_spectrum_matches_analytic_form() {
    let (bw, beta) = (100e3, 2e4);
    let shape = PulseShape {
        kind: PulseKind::HyperbolicSecant {
            chirp_bandwidth: bw,
            steepness_beta: beta,
            truncation: 1e-7,
        },
        duration: 2.0 * 17.0 / beta,
        peak_rate_amplitude: 1.0,
    };
    let w = synthesize(&shape, 4e6).unwrap();
    let offsets: Vec<f64> = (0..=300).map(|i| -150e3 + i as f64 * 1e3).collect();
    let numeric = power_spectrum_at(&w, &offsets).unwrap();
    let analytic: Vec<f64> = offsets.iter().map(|&f| sech_analytic(f, bw, beta)).collect();
    let peak = analytic.iter().copied().fold(0.0, f64::max);
    for (i, (&n, &a)) in numeric.iter().zip(&analytic).enumerate() {
        assert!((n - a / peak).abs() < 2e-3, "offset {}: {n} vs {}", offsets[i], a / peak);
    }
}

fn hs_100k() -> PulseShape {
    PulseShape::hyperbolic_secant(1e-3, 1e3, 100e3, 2e4)
}

#[test]
fn sech_passband_is_flat_and_width_matches_bandwidth() {
    let shape = hs_100k();
    let w = synthesize(&shape, 4e6).unwrap();
    let offsets: Vec<f64> = (0..=1200).map(|i| -150e3 + i as f64 * 250.0).collect();
    let p = power_spectrum_at(&w, &offsets).unwrap();
    let at = |f: f64| p[((f + 150e3) / 250.0).round() as usize];
    assert!(at(45e3) >= 0.8 && at(-45e3) >= 0.8, "{} {}", at(45e3), at(-45e3));
    let width = fwhm(&offsets, &p);
    assert!((width / 100e3 - 1.0).abs() < 0.1, "fwhm {width}");
}

#[test]
fn sech_edges_fall_faster_than_linear_chirp() {
    let fs = 4e6;
    let offsets = [0.75 * 100e3];
    let mut probe: Vec<f64> = (0..=200).map(|i| -50e3 + i as f64 * 500.0).collect();
    probe.extend_from_slice(&offsets);
    let rel = |shape: PulseShape| {
        let p = power_spectrum_at(&synthesize(&shape, fs).unwrap(), &probe).unwrap();
        p[p.len() - 1]
    };
    let hs = rel(hs_100k());
    let chirp = rel(PulseShape::linear_chirp(1e-3, 1e3, 100e3));
    assert!(hs < chirp, "hs {hs} chirp {chirp}");
}

#[test]
fn rectangular_spectrum_first_null() {
    let tau = 1e-3;
    let w = synthesize(&PulseShape::rectangular(tau, 1e3), 1e6).unwrap();
    let offsets = [0.0, 0.5 / tau, 1.0 / tau, 1.5 / tau];
    let p = power_spectrum_at(&w, &offsets).unwrap();
    assert!((p[1] - (2.0 / PI).powi(2)).abs() < 1e-3);
    assert!(p[2] < 1e-5, "{}", p[2]);
    assert!(p[3] > 0.03);
}

#[test]
fn sech_pumped_rate_width() {
    let grid = FrequencyGrid::with_spacing(150e6, 1.25e3, 321).unwrap();
    let laser = LaserParams {
        linewidth_nu: 5e3,
        rate_amplitude_a: 1e3,
        center_detuning: 150e6,
    };
    let m = material(1e-3, 50e-3, 0.5);
    let shape = PulseShape::hyperbolic_secant(1e-3, 1e3, 50e3, 2e4);
    let spec = pulse_spectrum_on_grid(&shape, &laser, &grid).unwrap();
    let r = excitation_rate(&laser, &m, Some(&spec), &grid).unwrap();
    let width = fwhm(&grid.detunings(), r.values());
    // pulse band plus a sub-kHz homogeneous line
    assert!((width - 50e3).abs() < 1.5e3, "R FWHM {width}");
}

#[test]
fn cw_rate_closed_form_points() {
    let grid = FrequencyGrid::with_spacing(150e6, 1e3, 201).unwrap();
    let laser = LaserParams {
        linewidth_nu: 5e3,
        rate_amplitude_a: 800.0,
        center_detuning: 150e6,
    };
    let r = excitation_rate(&laser, &material(1e-3, 50e-3, 0.5), None, &grid).unwrap();
    assert_eq!(r.values()[100], 800.0);
    assert!((r.values()[105] - 400.0).abs() < 1e-12);
    assert!((r.values()[95] - 400.0).abs() < 1e-12);
}

fn lorentz_dip(grid: &FrequencyGrid, c: f64, w: f64, depth: f64, base: f64) -> Vec<f64> {
    let f = LorentzianFit {
        center: c,
        fwhm: w,
        depth,
        baseline: base,
        residual_rms: 0.0,
        converged: true,
    };
    grid.detunings().iter().map(|&x| f.eval(x)).collect()
}

#[test]
fn lorentzian_fit_monte_carlo() {
    let grid = FrequencyGrid::new(0.0, 400e3, 801).unwrap();
    let clean = lorentz_dip(&grid, 0.0, 20e3, 0.5, 1.0);
    let noise = Normal::new(0.0, 0.01).unwrap();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = clean.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let s = SpectralArray::new(grid, y, SpectralUnit::OpticalDepth).unwrap();
        let f = fit_lorentzian(&s).unwrap();
        assert!(f.converged, "seed {seed}");
        assert!((f.fwhm / 20e3 - 1.0).abs() < 0.02, "seed {seed}: fwhm {}", f.fwhm);
        assert!((f.depth / 0.5 - 1.0).abs() < 0.02, "seed {seed}: depth {}", f.depth);
        assert!((f.baseline - 1.0).abs() < 0.02, "seed {seed}");
        assert!(f.center.abs() < 0.02 * 20e3, "seed {seed}: center {}", f.center);
    }
}

#[test]
fn broadening_adds_widths_and_keeps_area() {
    let grid = FrequencyGrid::new(0.0, 2e6, 4001).unwrap();
    let d0 = Background::Constant(1.0);
    let w = 20e3;
    let od = SpectralArray::new(grid, lorentz_dip(&grid, 0.0, w, 0.6, 1.0), SpectralUnit::OpticalDepth)
        .unwrap();
    let area = |s: &SpectralArray| s.values().iter().map(|v| 1.0 - v).sum::<f64>();
    for added in [5e3, 30e3, 100e3] {
        let out = apply_diffusion_broadening(&od, &d0, added).unwrap();
        assert!((area(&out) / area(&od) - 1.0).abs() < 1e-6);
        let feature: Vec<f64> = out.values().iter().map(|v| 1.0 - v).collect();
        let width = fwhm(&grid.detunings(), &feature);
        assert!((width - (w + added)).abs() <= 2.0 * grid.spacing(), "{added}: {width}");
    }
    assert_eq!(apply_diffusion_broadening(&od, &d0, 0.0).unwrap(), od);
    assert!(apply_diffusion_broadening(&od, &d0, 1.5 * grid.spacing()).is_err());
}

fn fig3_cycle(a: f64, wait: f64) -> [PulseSegment; 2] {
    let laser = LaserParams {
        linewidth_nu: 5e3,
        rate_amplitude_a: a,
        center_detuning: 150e6,
    };
    [
        PulseSegment::burn(PulseShape::rectangular(1e-3, a), laser),
        PulseSegment::wait(wait),
    ]
}

#[test]
fn hole_deepens_each_cycle() {
    let grid = FrequencyGrid::new(150e6, 200e3, 257).unwrap();
    let m = material(1e-3, 50e-3, 0.5);
    let seq = BurnSequence::repeated(&fig3_cycle(1e3, 10e-3), 50, SnapshotPolicy::AfterEachCycle);
    let evo = run_sequence(&seq, &m, &grid, None).unwrap();
    assert_eq!(evo.len(), 51);
    let centre = grid.nearest_bin(150e6);
    let depths: Vec<f64> = evo
        .od_spectra
        .iter()
        .map(|od| hole_depth(od, &m.d0, centre))
        .collect();
    for k in 1..depths.len() {
        assert!(depths[k] > depths[k - 1], "cycle {k}");
    }
    // Approaching saturation: late gains are much smaller than early ones.
    assert!(depths[50] - depths[49] < 0.2 * (depths[1] - depths[0]));
}

#[test]
fn long_waits_stall_the_hole() {
    let grid = FrequencyGrid::new(150e6, 100e3, 129).unwrap();
    let m = material(1e-3, 50e-3, 0.5);
    let centre = grid.nearest_bin(150e6);
    let run = |wait: f64| {
        let seq = BurnSequence::repeated(&fig3_cycle(1e3, wait), 50, SnapshotPolicy::AfterEachCycle);
        let evo = run_sequence(&seq, &m, &grid, None).unwrap();
        evo.od_spectra
            .iter()
            .map(|od| hole_depth(od, &m.d0, centre))
            .collect::<Vec<f64>>()
    };
    let short = run(10e-3);
    let long = run(100e-3);
    assert!(long[50] < 0.8 * short[50], "{} vs {}", long[50], short[50]);
    let late_gain = long[50] - long[49];
    assert!(late_gain.abs() < 1e-3 * long[50]);
}

#[test]
fn zero_amplitude_burn_leaves_background() {
    let grid = FrequencyGrid::new(150e6, 100e3, 129).unwrap();
    let m = material(1e-3, 50e-3, 0.5);
    let seq = BurnSequence::repeated(&fig3_cycle(0.0, 10e-3), 5, SnapshotPolicy::AfterEachSegment);
    let evo = run_sequence(&seq, &m, &grid, None).unwrap();
    for od in &evo.od_spectra {
        assert!(od.values().iter().all(|&v| v == 1.0));
    }
}
