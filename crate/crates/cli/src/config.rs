//! Run configuration: a `key = value` file merged with command-line flags,
//! expanded into legal grid points.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chentype::chen::resolve_auto_radius;
use chentype::hypersurface::{Family, FamilySpec};
use chentype::laplace::FdConfig;

use crate::checks::Check;
use crate::CliError;

pub const KEYS: [&str; 9] = ["family", "m", "k", "radius", "checks", "fd-step", "seed", "format", "out"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Md,
    Csv,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(Format::Json),
            "md" => Ok(Format::Md),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::Config(format!("unknown format '{other}' (expected json, md or csv)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RadiusSpec {
    Value(f64),
    /// `auto:<token>`, resolved per cell from the special radii.
    Auto(String),
}

impl FromStr for RadiusSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if let Some(token) = s.strip_prefix("auto:") {
            return Ok(RadiusSpec::Auto(token.to_string()));
        }
        s.parse::<f64>()
            .ok()
            .filter(|r| r.is_finite())
            .map(RadiusSpec::Value)
            .ok_or_else(|| CliError::Config(format!("radius '{s}' is neither a number nor auto:<token>")))
    }
}

/// Which subcommand the configuration feeds; it sets the defaults.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Verify,
    Atlas,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub families: Vec<Family>,
    pub m: Vec<usize>,
    /// `None` means every legal `k` for each `m`.
    pub k: Option<Vec<usize>>,
    pub radii: Vec<RadiusSpec>,
    pub checks: Vec<Check>,
    pub fd: FdConfig,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

/// One `(family, m, k)` cell of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    pub family: Family,
    pub m: usize,
    pub k: usize,
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
    parse_settings(&text)
}

pub fn parse_settings(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", no + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("config line {}: unknown key '{key}'", no + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| CliError::Config(format!("invalid {what} '{s}'"))))
        .collect()
}

impl RunConfig {
    pub fn from_settings(settings: &BTreeMap<String, String>, mode: Mode) -> Result<Self, CliError> {
        let get = |k: &str| settings.get(k).map(String::as_str);
        let families = match get("family") {
            Some(raw) => list::<Family>(raw, "family")?,
            None if mode == Mode::Atlas => Family::ALL.to_vec(),
            None => return Err(CliError::Config("--family is required".into())),
        };
        let m = match get("m") {
            Some(raw) => list::<usize>(raw, "m")?,
            None => vec![2],
        };
        let k = get("k").map(|raw| list::<usize>(raw, "k")).transpose()?;
        let radii = match get("radius") {
            Some(raw) => raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(RadiusSpec::from_str)
                .collect::<Result<_, _>>()?,
            None => vec![],
        };
        let checks = match get("checks") {
            Some("all") | None => Check::ALL.to_vec(),
            Some(raw) => {
                let mut v = list::<Check>(raw, "check")?;
                v.sort();
                v.dedup();
                v
            }
        };
        let h = match get("fd-step") {
            Some(raw) => raw.parse::<f64>().map_err(|_| CliError::Config(format!("invalid fd-step '{raw}'")))?,
            None => FdConfig::default().h,
        };
        let fd = FdConfig::new(h, FdConfig::default().richardson_levels)
            .map_err(|e| CliError::Config(format!("invalid fd-step: {e}")))?;
        let seed = match get("seed") {
            Some(raw) => raw.parse::<u64>().map_err(|_| CliError::Config(format!("invalid seed '{raw}'")))?,
            None => 0,
        };
        let format = match get("format") {
            Some(raw) => raw.parse()?,
            None if mode == Mode::Atlas => Format::Csv,
            None => Format::Json,
        };
        let out = get("out").filter(|s| !s.is_empty()).map(PathBuf::from);
        Ok(Self { families, m, k, radii, checks, fd, seed, format, out })
    }

    /// Every legal `(family, m, k)` cell, in `(family, m, k)` order.
    pub fn cells(&self) -> Result<Vec<Cell>, CliError> {
        let mut cells = Vec::new();
        for &family in &self.families {
            for &m in &self.m {
                let ks: Vec<usize> = if !family.has_k() {
                    vec![0]
                } else {
                    match &self.k {
                        Some(ks) => ks.clone(),
                        None => (0..m).collect(),
                    }
                };
                for k in ks {
                    let probe = if family.has_radius() { 0.5 * family.max_radius().min(1.0) } else { 0.0 };
                    FamilySpec::new(family, m, k, probe).map_err(|e| CliError::Config(e.to_string()))?;
                    cells.push(Cell { family, m, k });
                }
            }
        }
        cells.sort();
        cells.dedup();
        Ok(cells)
    }

    /// Grid radii of one cell, sorted; auto tokens resolve to the cell's special radii.
    /// With `strict`, an out-of-range decimal radius is a configuration error;
    /// otherwise it is skipped for that family.
    pub fn cell_radii(&self, cell: Cell, strict: bool) -> Result<Vec<f64>, CliError> {
        if !cell.family.has_radius() {
            return Ok(vec![0.0]);
        }
        let mut radii = Vec::new();
        for spec in &self.radii {
            match spec {
                RadiusSpec::Value(r) => match FamilySpec::new(cell.family, cell.m, cell.k, *r) {
                    Ok(_) => radii.push(*r),
                    Err(e) if strict => return Err(CliError::Config(e.to_string())),
                    Err(_) => {}
                },
                RadiusSpec::Auto(token) => radii.extend(
                    resolve_auto_radius(cell.family, cell.m, cell.k, token)
                        .map_err(|e| CliError::Config(e.to_string()))?,
                ),
            }
        }
        radii.sort_by(f64::total_cmp);
        radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        Ok(radii)
    }

    pub fn specs(&self, cell: Cell) -> Result<Vec<FamilySpec>, CliError> {
        if cell.family.has_radius() && self.radii.is_empty() {
            return Err(CliError::Config(format!("--radius is required for family {}", cell.family)));
        }
        self.cell_radii(cell, true)?
            .into_iter()
            .map(|r| FamilySpec::new(cell.family, cell.m, cell.k, r).map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }
}
