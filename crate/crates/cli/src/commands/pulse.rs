use holeburn::pulse::{out_of_band_db, power_spectrum_at, synthesize, PulseKind};
use serde::Serialize;

use super::Context;
use crate::config::require;
use crate::failure::Invalid;

#[derive(Serialize)]
struct WaveformRow {
    t_s: f64,
    amplitude: f64,
    freq_hz: f64,
}

#[derive(Serialize)]
struct SpectrumRow {
    offset_hz: f64,
    power_rel: f64,
    power_db: f64,
}

#[derive(Serialize)]
struct SuppressionRow {
    name: String,
    shape: &'static str,
    duration_s: f64,
    bandwidth_hz: f64,
    probe_offset_hz: f64,
    out_of_band_db: f64,
}

fn shape_name(kind: &PulseKind) -> &'static str {
    match kind {
        PulseKind::Rectangular => "rectangular",
        PulseKind::HyperbolicSecant { .. } => "sech",
        PulseKind::LinearChirp { .. } => "chirp",
    }
}

pub fn run(ctx: &Context) -> anyhow::Result<()> {
    let study = require(&ctx.config.pulse, "pulse")?;
    if study.pulses.is_empty() {
        return Err(Invalid("[pulse] lists no pulses".into()).into());
    }
    if study.spectrum_bins < 3 {
        return Err(Invalid("pulse.spectrum_bins must be >= 3".into()).into());
    }
    let default_amplitude = ctx.config.laser.as_ref().map_or(1.0, |l| l.rate_amplitude_hz);
    let mut shapes = Vec::with_capacity(study.pulses.len());
    for (i, p) in study.pulses.iter().enumerate() {
        let shape = p.build(default_amplitude)?;
        shape.validate()?;
        if study.sample_rate_hz < shape.min_sample_rate() {
            return Err(holeburn::Error::NyquistViolation {
                sample_rate: study.sample_rate_hz,
                required: shape.min_sample_rate(),
            }
            .into());
        }
        let name = p.name.clone().unwrap_or_else(|| format!("pulse{i}"));
        shapes.push((name, shape));
    }
    for (_, shape) in &shapes {
        if let Some(w) = shape.adiabaticity_warning() {
            ctx.warn(Invalid(w))?;
        }
    }

    let widest = shapes
        .iter()
        .map(|(_, s)| s.chirp_bandwidth().max(1.0 / s.duration))
        .fold(0.0, f64::max);
    let span = study.spectrum_span_hz.unwrap_or(4.0 * widest);
    let n = study.spectrum_bins;
    let offsets: Vec<f64> = (0..n)
        .map(|i| span * (i as f64 / (n - 1) as f64 - 0.5))
        .collect();

    let out = ctx.out()?;
    let mut table = Vec::with_capacity(shapes.len());
    for (name, shape) in &shapes {
        let w = synthesize(shape, study.sample_rate_hz)?;
        let rows: Vec<WaveformRow> = w
            .times()
            .into_iter()
            .zip(&w.amplitude)
            .zip(&w.instantaneous_frequency)
            .map(|((t, &a), &f)| WaveformRow {
                t_s: t,
                amplitude: a,
                freq_hz: f,
            })
            .collect();
        out.write_rows(&format!("waveform_{name}.csv"), &rows)?;

        let p = power_spectrum_at(&w, &offsets)?;
        let peak = p.iter().cloned().fold(0.0, f64::max);
        let rows: Vec<SpectrumRow> = offsets
            .iter()
            .zip(&p)
            .map(|(&f, &v)| {
                let rel = if peak > 0.0 { v / peak } else { 0.0 };
                SpectrumRow {
                    offset_hz: f,
                    power_rel: rel,
                    power_db: 10.0 * rel.max(f64::MIN_POSITIVE).log10(),
                }
            })
            .collect();
        out.write_rows(&format!("spectrum_{name}.csv"), &rows)?;

        let band = shape.chirp_bandwidth().max(1.0 / shape.duration);
        let probe = study.suppression_factor * 0.5 * band;
        table.push(SuppressionRow {
            name: name.clone(),
            shape: shape_name(&shape.kind),
            duration_s: shape.duration,
            bandwidth_hz: shape.chirp_bandwidth(),
            probe_offset_hz: probe,
            out_of_band_db: out_of_band_db(shape, probe, study.sample_rate_hz)?,
        });
    }
    out.write_rows("suppression.csv", &table)?;
    for r in &table {
        println!(
            "{:<12} {:<12} {:>10.1} Hz  {:>8.2} dB",
            r.name, r.shape, r.probe_offset_hz, r.out_of_band_db
        );
    }
    Ok(())
}
