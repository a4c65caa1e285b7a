use std::path::Path;

use holeburn::diffusion::{
    fit_bnoise, fit_diffusion_timeseries, gamma_max_of_b, gamma_sd_of_bt, log_spaced,
    synthetic_width_series, DiffusionModel, FieldPoint, WidthPoint,
};
use holeburn::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Context;
use crate::config::{require, DiffusionConfig, DiffusionMode, SyntheticConfig};
use crate::failure::{Invalid, Numeric};

#[derive(Serialize, Deserialize)]
struct WidthRow {
    b_t: f64,
    t_s: f64,
    fwhm_hz: f64,
    sigma_hz: Option<f64>,
}

#[derive(Serialize)]
struct FieldRow {
    b_t: f64,
    gamma_sd_hz: f64,
    sigma_hz: Option<f64>,
}

#[derive(Serialize)]
struct ReportRow {
    quantity: &'static str,
    b_t: Option<f64>,
    value: f64,
    sigma: Option<f64>,
    unit: &'static str,
    generating: Option<f64>,
}

/// One width series per field, sorted by field.
type Series = Vec<(f64, Vec<WidthPoint>)>;

fn thermal(d: &DiffusionConfig) -> Option<(f64, f64)> {
    d.g_env.zip(d.temperature_k)
}

fn check_synthetic(s: &SyntheticConfig) -> Result<(), Invalid> {
    let positive = [
        ("t_min_s", s.t_min_s),
        ("t_max_s", s.t_max_s),
        ("rate_rs_per_s", s.rate_rs_per_s),
    ];
    for (name, v) in positive {
        if !(v.is_finite() && v > 0.0) {
            return Err(Invalid(format!("diffusion.synthetic.{name} must be > 0")));
        }
    }
    if s.t_max_s <= s.t_min_s {
        return Err(Invalid("diffusion.synthetic.t_max_s must exceed t_min_s".into()));
    }
    if !(s.width_noise.is_finite() && s.width_noise >= 0.0) {
        return Err(Invalid("diffusion.synthetic.width_noise must be >= 0".into()));
    }
    if s.fields_t.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
        return Err(Invalid("diffusion.synthetic.fields_t must be >= 0".into()));
    }
    Ok(())
}

fn base_model(d: &DiffusionConfig, s: &SyntheticConfig) -> DiffusionModel {
    DiffusionModel {
        gamma_0: s.gamma_0_hz,
        gamma_sd: 0.0,
        rate_rs: s.rate_rs_per_s,
        gamma_max0: s.gamma_max0_hz,
        b_noise: s.b_noise_t,
        g_env: d.g_env.unwrap_or(0.0),
        temperature: d.temperature_k.unwrap_or(1.0),
    }
}

/// Generating Γ_SD at field `b`.
fn true_gamma_sd(d: &DiffusionConfig, s: &SyntheticConfig, b: f64) -> f64 {
    let gamma_max = gamma_max_of_b(b, &base_model(d, s), d.k_hz_per_t2);
    match thermal(d) {
        Some((g, temp)) => gamma_sd_of_bt(b, temp, g, gamma_max),
        None => gamma_max,
    }
}

fn synthesize(d: &DiffusionConfig, s: &SyntheticConfig, seed: u64) -> anyhow::Result<Series> {
    check_synthetic(s)?;
    let base = base_model(d, s);
    let bad = base.violations();
    if !bad.is_empty() {
        return Err(Error::Invalid(bad).into());
    }
    let times = log_spaced(s.t_min_s, s.t_max_s, s.points);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = s.fields_t.clone();
    fields.sort_by(f64::total_cmp);
    Ok(fields
        .into_iter()
        .map(|b| {
            let m = DiffusionModel {
                gamma_sd: true_gamma_sd(d, s, b),
                ..base
            };
            (b, synthetic_width_series(&m, &times, s.width_noise, &mut rng))
        })
        .collect())
}

fn read_series(path: &Path) -> anyhow::Result<Series> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut series: Series = Vec::new();
    for row in reader.deserialize() {
        let r: WidthRow = row.map_err(|e| Invalid(format!("{}: {e}", path.display())))?;
        let p = WidthPoint {
            t_delay: r.t_s,
            fwhm: r.fwhm_hz,
            sigma: r.sigma_hz,
        };
        match series.iter_mut().find(|(b, _)| *b == r.b_t) {
            Some((_, pts)) => pts.push(p),
            None => series.push((r.b_t, vec![p])),
        }
    }
    series.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(series)
}

pub fn run(ctx: &Context) -> anyhow::Result<()> {
    let d = require(&ctx.config.diffusion, "diffusion")?;
    if !(d.k_hz_per_t2.is_finite() && d.k_hz_per_t2 > 0.0) {
        return Err(Invalid("diffusion.k_hz_per_t2 must be > 0".into()).into());
    }
    let truth = match d.mode {
        DiffusionMode::SelfTest => Some(require(&d.synthetic, "diffusion.synthetic")?),
        DiffusionMode::Csv => None,
    };
    let series = match truth {
        Some(s) => synthesize(d, s, ctx.seed())?,
        None => {
            let path = d
                .width_csv
                .as_deref()
                .ok_or_else(|| Invalid("csv mode needs diffusion.width_csv".into()))?;
            read_series(path)?
        }
    };
    if series.is_empty() {
        return Err(Error::InsufficientData("no width series".into()).into());
    }

    let mut report = Vec::new();
    let mut field_points = Vec::new();
    for (b, points) in &series {
        let fit = match fit_diffusion_timeseries(points) {
            Ok(f) => f,
            Err(e @ Error::DegenerateFit(_)) => {
                ctx.warn(e)?;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let names = [
            ("gamma_0", "Hz", truth.map(|s| s.gamma_0_hz)),
            ("gamma_sd", "Hz", truth.map(|s| true_gamma_sd(d, s, *b))),
            ("rate_rs", "1/s", truth.map(|s| s.rate_rs_per_s)),
        ];
        let values = [fit.gamma_0, fit.gamma_sd, fit.rate_rs];
        for (k, (quantity, unit, generating)) in names.into_iter().enumerate() {
            report.push(ReportRow {
                quantity,
                b_t: Some(*b),
                value: values[k],
                sigma: Some(fit.sigma[k]),
                unit,
                generating,
            });
        }
        field_points.push(FieldPoint {
            b: *b,
            gamma_sd: fit.gamma_sd,
            sigma: Some(fit.sigma[1]),
        });
    }
    // Exact data gives zero uncertainties; fall back to an unweighted line.
    if field_points.iter().any(|p| !p.sigma.is_some_and(|s| s.is_finite() && s > 0.0)) {
        field_points.iter_mut().for_each(|p| p.sigma = None);
    }

    let mut b_noise = None;
    if field_points.len() >= 3 {
        let fit = fit_bnoise(&field_points, d.k_hz_per_t2, thermal(d))?;
        if let Some(w) = &fit.warning {
            ctx.warn(Numeric(w.clone()))?;
        }
        report.push(ReportRow {
            quantity: "gamma_max0",
            b_t: None,
            value: fit.gamma_max0,
            sigma: Some(fit.gamma_max0_sigma),
            unit: "Hz",
            generating: truth.map(|s| s.gamma_max0_hz),
        });
        report.push(ReportRow {
            quantity: "slope",
            b_t: None,
            value: fit.slope,
            sigma: Some(fit.slope_sigma),
            unit: "Hz/T",
            generating: truth.map(|s| s.b_noise_t * d.k_hz_per_t2),
        });
        if let Some(v) = fit.b_noise {
            report.push(ReportRow {
                quantity: "b_noise",
                b_t: None,
                value: v,
                sigma: fit.b_noise_sigma,
                unit: "T",
                generating: truth.map(|s| s.b_noise_t),
            });
            b_noise = Some((v, fit.b_noise_sigma.unwrap_or(0.0)));
        }
    } else {
        eprintln!("warning: {} usable field(s); b_noise needs at least 3", field_points.len());
    }

    let out = ctx.out()?;
    let widths: Vec<WidthRow> = series
        .iter()
        .flat_map(|(b, pts)| {
            pts.iter().map(|p| WidthRow {
                b_t: *b,
                t_s: p.t_delay,
                fwhm_hz: p.fwhm,
                sigma_hz: p.sigma,
            })
        })
        .collect();
    out.write_rows("width_series.csv", &widths)?;
    let fields: Vec<FieldRow> = field_points
        .iter()
        .map(|p| FieldRow {
            b_t: p.b,
            gamma_sd_hz: p.gamma_sd,
            sigma_hz: p.sigma,
        })
        .collect();
    out.write_rows("field_series.csv", &fields)?;
    out.write_rows("fit_report.csv", &report)?;

    println!("{} field(s) fitted", field_points.len());
    if let Some((v, s)) = b_noise {
        println!("b_noise = {:.2} +/- {:.2} uT", v * 1e6, s * 1e6);
    }
    Ok(())
}
