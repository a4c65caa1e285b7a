use holeburn::zeeman::{
    default_111_classes, dir_111, hole_pattern, predict_shift_split, splittings, validate_classes,
    FeatureKind,
};
use holeburn::Error;
use nalgebra::Vector3;
use serde::Serialize;

use super::Context;
use crate::config::require;
use crate::failure::Invalid;

#[derive(Serialize)]
struct SweepRow {
    class: &'static str,
    #[serde(rename = "B_T")]
    b_t: f64,
    center_shift_hz: f64,
    splitting_hz: f64,
}

#[derive(Serialize)]
struct PatternRow {
    class: &'static str,
    #[serde(rename = "B_T")]
    b_t: f64,
    d_g_hz: f64,
    d_e_hz: f64,
    offset_hz: f64,
    kind: &'static str,
    relative_strength: f64,
}

pub fn run(ctx: &Context) -> anyhow::Result<()> {
    let cfg = &ctx.config;
    let model = require(&cfg.spin_model, "spin_model")?.build();
    let z = require(&cfg.zeeman, "zeeman")?;
    let bad = model.violations();
    if !bad.is_empty() {
        return Err(Error::Invalid(bad).into());
    }
    let classes = match &cfg.site_classes {
        Some(list) => list.iter().map(|c| c.build()).collect(),
        None => default_111_classes().to_vec(),
    };
    validate_classes(&classes)?;
    let dir = match z.direction {
        Some(d) => {
            let v = Vector3::from(d);
            if !(v.norm() > 0.0 && v.iter().all(|x| x.is_finite())) {
                return Err(Invalid("zeeman.direction must be a finite non-zero vector".into()).into());
            }
            v.normalize()
        }
        None => dir_111(),
    };
    if z.b_steps < 2 || !(z.b_min_t.is_finite() && z.b_max_t > z.b_min_t) {
        return Err(Invalid("zeeman sweep needs b_max_t > b_min_t and b_steps >= 2".into()).into());
    }
    if !z.delta_b_t.is_finite() || !z.pattern_field_t.is_finite() {
        return Err(Invalid("zeeman.delta_b_t and pattern_field_t must be finite".into()).into());
    }

    let mut sweep = Vec::with_capacity(z.b_steps * classes.len());
    for i in 0..z.b_steps {
        let b = z.b_min_t + (z.b_max_t - z.b_min_t) * i as f64 / (z.b_steps - 1) as f64;
        for p in predict_shift_split(&(dir * b), &(dir * z.delta_b_t), &model, &classes)? {
            sweep.push(SweepRow {
                class: p.label.as_str(),
                b_t: b,
                center_shift_hz: p.center_shift,
                splitting_hz: p.splitting,
            });
        }
    }

    let field = dir * z.pattern_field_t;
    let weights = (z.branch_weights[0], z.branch_weights[1]);
    let mut pattern = Vec::new();
    for site in &classes {
        let (d_g, d_e) = splittings(&field, site, &model);
        for line in hole_pattern(d_g, d_e, weights)?.lines {
            pattern.push(PatternRow {
                class: site.label.as_str(),
                b_t: z.pattern_field_t,
                d_g_hz: d_g,
                d_e_hz: d_e,
                offset_hz: line.offset,
                kind: match line.kind {
                    FeatureKind::Hole => "hole",
                    FeatureKind::Antihole => "antihole",
                },
                relative_strength: line.relative_strength,
            });
        }
    }

    let out = ctx.out()?;
    out.write_rows("zeeman_sweep.csv", &sweep)?;
    out.write_rows("hole_pattern.csv", &pattern)?;
    println!(
        "{} sweep rows over {}..{} T; {} pattern lines at {} T",
        sweep.len(),
        z.b_min_t,
        z.b_max_t,
        pattern.len(),
        z.pattern_field_t
    );
    Ok(())
}
