//! Classification atlas over the configured grid.

use std::fmt::Write as _;

use chentype::chen::{AtlasRow, ClassificationAtlas};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RadiusSpec, RunConfig};
use crate::CliError;

pub const COLUMNS: [&str; 9] = ["family", "m", "k", "radius", "type", "lambda_u", "lambda_v", "mass_symmetric", "minimal"];

pub fn build(cfg: &RunConfig) -> Result<ClassificationAtlas, CliError> {
    let cells = cfg.cells()?;
    let parts: Vec<ClassificationAtlas> = cells
        .par_iter()
        .map(|&cell| {
            let grid = if cell.family.has_radius() { cfg.cell_radii(cell, false)? } else { vec![] };
            ClassificationAtlas::for_cell(cell.family, cell.m, cell.k, &grid).map_err(|e| CliError::Config(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    Ok(ClassificationAtlas::merge(parts))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn fields(row: &AtlasRow) -> [String; 9] {
    [
        row.family.name().to_string(),
        row.m.to_string(),
        row.k.to_string(),
        row.radius.to_string(),
        row.verdict.label().to_string(),
        opt(row.lambda_u),
        opt(row.lambda_v),
        row.mass_symmetric.map(|b| b.to_string()).unwrap_or_default(),
        row.minimal.to_string(),
    ]
}

pub fn to_csv(atlas: &ClassificationAtlas) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for row in &atlas.rows {
        w.write_record(fields(row))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_markdown(atlas: &ClassificationAtlas) -> String {
    let mut s = String::from("# chentype classification atlas\n\n");
    let _ = writeln!(s, "| {} | labels |", COLUMNS.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(COLUMNS.len() + 1));
    for row in &atlas.rows {
        let _ = writeln!(s, "| {} | {} |", fields(row).join(" | "), row.labels.join(", "));
    }
    s
}

#[derive(Serialize)]
struct AtlasJson<'a> {
    meta: AtlasMeta<'a>,
    rows: &'a [AtlasRow],
}

#[derive(Serialize)]
struct AtlasMeta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    grid: Vec<String>,
    columns: &'a [&'a str],
}

pub fn to_json(atlas: &ClassificationAtlas, cfg: &RunConfig) -> String {
    let grid = cfg
        .radii
        .iter()
        .map(|r| match r {
            RadiusSpec::Value(v) => v.to_string(),
            RadiusSpec::Auto(t) => format!("auto:{t}"),
        })
        .collect();
    let doc = AtlasJson {
        meta: AtlasMeta { tool: "chentype", version: env!("CARGO_PKG_VERSION"), command: "atlas", grid, columns: &COLUMNS },
        rows: &atlas.rows,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("atlas serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_atlas_is_header_only() {
        let csv = to_csv(&ClassificationAtlas::default()).unwrap();
        assert_eq!(csv, "family,m,k,radius,type,lambda_u,lambda_v,mass_symmetric,minimal\n");
    }
}
