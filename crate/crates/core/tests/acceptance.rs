//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use holeburn::diffusion::{
    fit_bnoise, fit_diffusion_timeseries, fit_lorentzian, hole_width_model, log_spaced,
    synthetic_field_series, synthetic_width_series, DiffusionModel, WidthPoint,
};
use holeburn::dipolar::{species_table, ygg_host_species};
use holeburn::pulse::{out_of_band_db, PulseShape};
use holeburn::rate::{
    apply_diffusion_broadening, burn_rate, hole_depth, propagate_bin, run_sequence, BurnSequence,
    PulseSegment, SnapshotPolicy,
};
use holeburn::zeeman::{
    default_111_classes, dir_111, hole_pattern, predict_shift_split, FeatureKind, LevelSpin,
    SpinModel,
};
use holeburn::{FrequencyGrid, LaserParams, MaterialParams};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{material, rk4_adaptive};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

const BURN_DETUNING: f64 = 150e6;

fn laser(a: f64) -> LaserParams {
    LaserParams {
        linewidth_nu: 5e3,
        rate_amplitude_a: a,
        center_detuning: BURN_DETUNING,
    }
}

fn cycle(shape: PulseShape, a: f64, wait: f64) -> [PulseSegment; 2] {
    [PulseSegment::burn(shape, laser(a)), PulseSegment::wait(wait)]
}

fn tm_ygg() -> MaterialParams {
    material(1e-3, 50e-3, 0.5)
}

fn conservation() -> Outcome {
    let grid = FrequencyGrid::with_spacing(BURN_DETUNING, 1e3, 4096).unwrap();
    let seq = BurnSequence::repeated(
        &cycle(PulseShape::rectangular(1e-3, 1e3), 1e3, 10e-3),
        50,
        SnapshotPolicy::AfterEachSegment,
    );
    let evo = run_sequence(&seq, &tm_ygg(), &grid, None).unwrap();
    let err = evo.max_conservation_error();
    outcome(
        err < 1e-9,
        format!("{} snapshots, max |n_g+n_e+n_b-1| = {err:.2e}", evo.len()),
    )
}

fn propagator_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for draw in 0..100 {
        let r = if draw % 5 == 0 {
            0.0
        } else {
            10f64.powf(rng.gen_range(-1.0..4.0))
        };
        let m = material(
            10f64.powf(rng.gen_range(-4.0..-2.0)),
            10f64.powf(rng.gen_range(-3.0..-0.3)),
            rng.gen_range(0.0..=1.0),
        );
        let dt = 10f64.powf(rng.gen_range(-6.0..-1.0));
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        let (e, b) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
        let n0 = [1.0 - e - b, e, b];
        let exact = propagate_bin(n0, r, &m, dt);
        let reference = rk4_adaptive(n0, r, &m, dt, 1e-13);
        for i in 0..3 {
            worst = worst.max((exact[i] - reference[i]).abs());
        }
    }
    outcome(worst < 1e-8, format!("100 draws, max |exp - rk4| = {worst:.2e}"))
}

fn two_level_steady_state() -> Outcome {
    // Bins within ±10 kHz of the burn keep R ≥ 500 Hz, so after 10·T_e the
    // transient exp(−(2R + 1/T_e)·t) is below 3e-9.
    let t_e = 1e-3;
    let m = material(t_e, 50e-3, 0.0);
    let grid = FrequencyGrid::with_spacing(BURN_DETUNING, 1.25e3, 17).unwrap();
    let shape = PulseShape::rectangular(10.0 * t_e, 2.5e3);
    let seq = BurnSequence {
        segments: vec![PulseSegment::burn(shape, laser(2.5e3))],
        snapshot_policy: SnapshotPolicy::FinalOnly,
    };
    let evo = run_sequence(&seq, &m, &grid, None).unwrap();
    let rate = burn_rate(&shape, &laser(2.5e3), &m, &grid).unwrap();
    let n_e = evo.final_state().n_e.values();
    let worst = rate
        .values()
        .iter()
        .zip(n_e)
        .map(|(&r, &e)| {
            let target = r / (2.0 * r + 1.0 / t_e);
            ((e - target) / target).abs()
        })
        .fold(0.0, f64::max);
    outcome(worst < 1e-6, format!("max relative deviation {worst:.2e}"))
}

fn wait_time_ordering() -> Outcome {
    let grid = FrequencyGrid::new(BURN_DETUNING, 100e3, 129).unwrap();
    let m = tm_ygg();
    let centre = grid.nearest_bin(BURN_DETUNING);
    let depth = |wait: f64| {
        let seq = BurnSequence::repeated(
            &cycle(PulseShape::rectangular(1e-3, 1e3), 1e3, wait),
            50,
            SnapshotPolicy::FinalOnly,
        );
        let evo = run_sequence(&seq, &m, &grid, None).unwrap();
        hole_depth(evo.final_od(), &m.d0, centre)
    };
    let (d10, d50, d100) = (depth(10e-3), depth(50e-3), depth(100e-3));
    outcome(
        d100 < d50 && d50 < d10,
        format!("depth 10 ms {d10:.4}, 50 ms {d50:.4}, 100 ms {d100:.4}"),
    )
}

fn fitted_fwhm(shape_of: impl Fn(f64) -> PulseShape, a: f64, grid: &FrequencyGrid) -> f64 {
    let seq = BurnSequence::repeated(&cycle(shape_of(a), a, 50e-3), 50, SnapshotPolicy::FinalOnly);
    let evo = run_sequence(&seq, &tm_ygg(), grid, None).unwrap();
    fit_lorentzian(evo.final_od()).unwrap().fwhm
}

fn power_broadening_contrast() -> Outcome {
    let grid = FrequencyGrid::with_spacing(BURN_DETUNING, 1.25e3, 801).unwrap();
    let lorentz = |a| PulseShape::rectangular(1e-3, a);
    let sech = |a| PulseShape::hyperbolic_secant(1e-3, a, 50e3, 2e4);
    let (l_lo, l_hi) = (fitted_fwhm(lorentz, 300.0, &grid), fitted_fwhm(lorentz, 2.5e3, &grid));
    let (s_lo, s_hi) = (fitted_fwhm(sech, 300.0, &grid), fitted_fwhm(sech, 2.5e3, &grid));
    let l_growth = l_hi / l_lo - 1.0;
    let s_change = (s_hi / s_lo - 1.0).abs();
    outcome(
        l_growth > 0.5 && s_change < 0.1,
        format!(
            "Lorentzian {:.1} -> {:.1} kHz ({:+.0}%), sech {:.1} -> {:.1} kHz ({:+.1}%)",
            l_lo / 1e3,
            l_hi / 1e3,
            100.0 * l_growth,
            s_lo / 1e3,
            s_hi / 1e3,
            100.0 * (s_hi / s_lo - 1.0)
        ),
    )
}

fn sech_steepness() -> Outcome {
    let bw = 100e3;
    let fs = 4e6;
    let offset = 1.5 * 0.5 * bw;
    let hs = out_of_band_db(&PulseShape::hyperbolic_secant(1e-3, 1e3, bw, 2e4), offset, fs).unwrap();
    let chirp = out_of_band_db(&PulseShape::linear_chirp(1e-3, 1e3, bw), offset, fs).unwrap();
    outcome(
        chirp - hs >= 10.0,
        format!("at {:.0} kHz: HS {hs:.1} dB, chirp {chirp:.1} dB", offset / 1e3),
    )
}

fn width_model() -> DiffusionModel {
    DiffusionModel {
        gamma_0: 10e3,
        gamma_sd: 40e3,
        rate_rs: 0.05,
        gamma_max0: 5e3,
        b_noise: 87e-6,
        g_env: 7.1e-4,
        temperature: 0.6,
    }
}

fn within(x: f64, truth: f64, tol: f64) -> bool {
    (x / truth - 1.0).abs() < tol
}

fn width_series_recovery() -> Outcome {
    let m = width_model();
    let times = log_spaced(1.0, 300.0, 20);
    let mut good = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = synthetic_width_series(&m, &times, 0.02, &mut rng);
        if let Ok(f) = fit_diffusion_timeseries(&pts) {
            if within(f.gamma_0, m.gamma_0, 0.05)
                && within(f.gamma_sd, m.gamma_sd, 0.05)
                && within(f.rate_rs, m.rate_rs, 0.05)
            {
                good += 1;
            }
        }
    }
    outcome(good >= 95, format!("{good}/100 trials within 5%"))
}

/// Hz/T² for the illustrative tensor difference used in the pipeline.
const K_EXAMPLE: f64 = 2.9e8;

fn bnoise_pipeline() -> Outcome {
    let m = width_model();
    let fields = [0.1, 0.575, 1.05, 1.525, 2.0];
    let thermal = Some((m.g_env, m.temperature));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let clean = synthetic_field_series(&m, K_EXAMPLE, &fields, 0.0, &mut rng);
    let exact = fit_bnoise(&clean, K_EXAMPLE, thermal).unwrap().b_noise.unwrap_or(0.0);
    let mut good = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = synthetic_field_series(&m, K_EXAMPLE, &fields, 0.10, &mut rng);
        let fit = fit_bnoise(&pts, K_EXAMPLE, thermal).unwrap();
        if fit.b_noise.is_some_and(|b| within(b, m.b_noise, 0.20)) {
            good += 1;
        }
    }
    outcome(
        within(exact, m.b_noise, 0.05) && good >= 95,
        format!(
            "noise-free {:.2} uT; 10% noise: {good}/100 seeds within 20%",
            exact * 1e6
        ),
    )
}

/// Illustrative spin parameters, not measured values.
fn example_spin_model() -> SpinModel {
    SpinModel {
        ground: LevelSpin {
            g_j: 7.0 / 6.0,
            a_j: -393e6,
            gamma: Vector3::new(40e6, 90e6, 400e6),
        },
        excited: LevelSpin {
            g_j: 0.8,
            a_j: -330e6,
            gamma: Vector3::new(30e6, 60e6, 120e6),
        },
        gamma_n: -3.5e6,
        lambda_g: Matrix3::from_diagonal(&Vector3::new(-1e6, -3e6, -20e6)),
        lambda_e: Matrix3::from_diagonal(&Vector3::new(-0.5e6, -1e6, -4e6)),
    }
}

fn quadratic_zeeman_scaling() -> Outcome {
    let model = example_spin_model();
    let classes = default_111_classes();
    let dir = dir_111();
    let delta = dir * 1.6e-3;
    let shift_at = |b: f64| predict_shift_split(&(dir * b), &delta, &model, &classes).unwrap();
    let lo = shift_at(0.5);
    let hi = shift_at(1.5);
    let worst_ratio = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (h.center_shift / l.center_shift / 3.0 - 1.0).abs())
        .fold(0.0, f64::max);
    let sweep: Vec<Vec<f64>> = (0..=190)
        .map(|i| {
            shift_at(0.1 + 0.01 * i as f64)
                .iter()
                .map(|s| s.center_shift.abs())
                .collect()
        })
        .collect();
    let monotone = sweep.windows(2).all(|w| w[1].iter().zip(&w[0]).all(|(b, a)| b > a));
    outcome(
        worst_ratio < 1e-6 && monotone,
        format!(
            "shift(1.5 T)/shift(0.5 T) deviates from 3 by {worst_ratio:.2e} relative; sweep monotone: {monotone}"
        ),
    )
}

fn hole_positions() -> Outcome {
    let p = hole_pattern(10e6, 2e6, (1.0, 1.0)).unwrap();
    let holes = p.offsets(FeatureKind::Hole);
    let anti = p.offsets(FeatureKind::Antihole);
    let pass = holes == [-2e6, 0.0, 2e6] && anti == [-12e6, -10e6, -8e6, 8e6, 10e6, 12e6];
    let mhz = |v: &[f64]| v.iter().map(|x| format!("{}", x / 1e6)).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("holes {{{}}} MHz, antiholes {{{}}} MHz", mhz(&holes), mhz(&anti)))
}

fn dipolar_table() -> Outcome {
    let table = species_table(&ygg_host_species()).unwrap();
    let reference = [("Ga69", 19e-6), ("Ga71", 15e-6), ("Y", 850e-9), ("Tm", 500e-9)];
    let order_ok = table
        .rows
        .iter()
        .zip(&reference)
        .all(|(row, (name, _))| row.species.name == *name);
    let mut detail = Vec::new();
    let mut within_5x = true;
    for (name, value) in reference {
        let row = table.rows.iter().find(|r| r.species.name == name).unwrap();
        let ratio = row.field / value;
        within_5x &= (0.2..=5.0).contains(&ratio);
        detail.push(format!("{name} {:.3} uT (x{ratio:.2})", row.field * 1e6));
    }
    outcome(order_ok && within_5x, detail.join(", "))
}

fn diffusion_round_trip() -> Outcome {
    let grid = FrequencyGrid::with_spacing(BURN_DETUNING, 250.0, 4001).unwrap();
    let m = tm_ygg();
    let seq = BurnSequence::repeated(
        &cycle(PulseShape::rectangular(1e-3, 300.0), 300.0, 10e-3),
        5,
        SnapshotPolicy::FinalOnly,
    );
    let evo = run_sequence(&seq, &m, &grid, None).unwrap();
    let hole = evo.final_od();
    let gamma_0 = fit_lorentzian(hole).unwrap().fwhm;
    let truth = DiffusionModel {
        gamma_0,
        ..width_model()
    };
    let points: Vec<WidthPoint> = log_spaced(1.0, 300.0, 20)
        .into_iter()
        .map(|t| {
            let added = hole_width_model(t, &truth) - gamma_0;
            let broadened = apply_diffusion_broadening(hole, &m.d0, added).unwrap();
            WidthPoint {
                t_delay: t,
                fwhm: fit_lorentzian(&broadened).unwrap().fwhm,
                sigma: None,
            }
        })
        .collect();
    let fit = fit_diffusion_timeseries(&points).unwrap();
    let pass = within(fit.gamma_0, truth.gamma_0, 0.05)
        && within(fit.gamma_sd, truth.gamma_sd, 0.05)
        && within(fit.rate_rs, truth.rate_rs, 0.05);
    outcome(
        pass,
        format!(
            "G0 {:.0}/{:.0} Hz, GSD {:.0}/{:.0} Hz, Rs {:.4}/{:.4} 1/s",
            fit.gamma_0, truth.gamma_0, fit.gamma_sd, truth.gamma_sd, fit.rate_rs, truth.rate_rs
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("population conservation", conservation),
        ("propagator vs adaptive RK4", propagator_oracle),
        ("two-level steady state", two_level_steady_state),
        ("wait-time depth ordering", wait_time_ordering),
        ("power-broadening contrast", power_broadening_contrast),
        ("sech spectral steepness", sech_steepness),
        ("width-series recovery", width_series_recovery),
        ("B_noise pipeline", bnoise_pipeline),
        ("quadratic Zeeman scaling", quadratic_zeeman_scaling),
        ("hole/anti-hole positions", hole_positions),
        ("dipolar field table", dipolar_table),
        ("diffusion round trip", diffusion_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!("[{tag}] {:>2}. {name}: {}", i + 1, result.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
