use holeburn::constants::ANGSTROM;
use holeburn::dipolar::species_table;
use serde::Serialize;

use super::Context;
use crate::config::require;

#[derive(Serialize)]
struct SpeciesRow {
    name: String,
    concentration: f64,
    g_eff: f64,
    r_angstrom: f64,
    #[serde(rename = "field_T")]
    field_t: f64,
}

pub fn run(ctx: &Context) -> anyhow::Result<()> {
    let species: Vec<_> = require(&ctx.config.species, "species")?
        .iter()
        .map(|s| s.build())
        .collect();
    let table = species_table(&species)?;
    let rows: Vec<SpeciesRow> = table
        .rows
        .iter()
        .map(|r| SpeciesRow {
            name: r.species.name.clone(),
            concentration: r.species.concentration,
            g_eff: r.species.g_eff,
            r_angstrom: r.species.typical_distance / ANGSTROM,
            field_t: r.field,
        })
        .collect();
    ctx.out()?.write_rows("species.csv", &rows)?;
    for r in &rows {
        println!("{:<8} {:>10.3e} T", r.name, r.field_t);
    }
    println!("dominant: {}", table.dominant().species.name);
    Ok(())
}
