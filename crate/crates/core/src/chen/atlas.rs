//! Classification atlas: type verdicts, eigenvalues, mass-symmetry and
//! minimality over special radii and radius grids.

use serde::{Deserialize, Serialize};

use super::fit::spectral_decomposition;
use super::{model_scalars, solve_type_coefficients, special_radii, TypeVerdict};
use crate::error::{Error, Result};
use crate::hypersurface::{Chart, Family, FamilySpec};

/// `|f|` below which a model counts as minimal.
pub const MINIMAL_TOL: f64 = 1e-9;

/// `max |x̃_0 - I/(m+1)|` below which a model counts as mass-symmetric.
pub const MASS_SYMMETRY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasRow {
    pub family: Family,
    pub m: usize,
    pub k: usize,
    pub radius: f64,
    pub verdict: TypeVerdict,
    pub lambda_u: Option<f64>,
    pub lambda_v: Option<f64>,
    /// `None` when the position vector has no type decomposition, or when the
    /// chart is too ill-conditioned to resolve the frame (large hyperbolic radii).
    pub mass_symmetric: Option<bool>,
    pub minimal: bool,
    /// Special-radius labels attached to this row.
    pub labels: Vec<String>,
}

impl AtlasRow {
    pub fn evaluate(spec: FamilySpec) -> Result<Self> {
        let tc = solve_type_coefficients(&spec);
        let mass_symmetric = if tc.order.is_some() {
            let chart = Chart::new(spec, 0);
            match spectral_decomposition(&chart, &vec![0.0; chart.n()], &tc) {
                Ok(d) => Some(d.center_offset() <= MASS_SYMMETRY_TOL),
                Err(Error::Contract(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        Ok(Self {
            family: spec.family,
            m: spec.m,
            k: spec.k,
            radius: spec.r,
            verdict: tc.verdict,
            lambda_u: tc.lambda_u(),
            lambda_v: tc.lambda_v(),
            mass_symmetric,
            minimal: model_scalars(&spec).f.abs() <= MINIMAL_TOL,
            labels: vec![],
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassificationAtlas {
    pub rows: Vec<AtlasRow>,
}

impl ClassificationAtlas {
    /// Rows for every special radius of `(family, m, k)` plus every legal grid radius,
    /// merged by radius and ordered by `(family, m, k, radius)`.
    pub fn for_cell(family: Family, m: usize, k: usize, grid: &[f64]) -> Result<Self> {
        let mut radii: Vec<(f64, Vec<String>)> = Vec::new();
        if family.has_radius() {
            for s in special_radii(family, m, k)? {
                radii.push((s.radius, vec![s.label.name().to_string()]));
            }
            for r in grid {
                if *r > 0.0 && *r < family.max_radius() {
                    radii.push((*r, vec![]));
                }
            }
        } else {
            radii.push((0.0, vec![]));
        }
        radii.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, Vec<String>)> = Vec::new();
        for (r, labels) in radii {
            match merged.last_mut() {
                Some((last, l)) if (*last - r).abs() <= 1e-12 => l.extend(labels),
                _ => merged.push((r, labels)),
            }
        }
        let rows = merged
            .into_iter()
            .map(|(r, labels)| {
                let mut row = AtlasRow::evaluate(FamilySpec::new(family, m, k, r)?)?;
                row.labels = labels;
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub fn merge(parts: impl IntoIterator<Item = ClassificationAtlas>) -> Self {
        let mut rows: Vec<AtlasRow> = parts.into_iter().flat_map(|a| a.rows).collect();
        rows.sort_by(|a, b| {
            (a.family as u8, a.m, a.k)
                .cmp(&(b.family as u8, b.m, b.k))
                .then(a.radius.total_cmp(&b.radius))
        });
        Self { rows }
    }

    pub fn two_type_rows(&self) -> impl Iterator<Item = &AtlasRow> {
        self.rows.iter().filter(|r| r.verdict == TypeVerdict::TwoType)
    }
}

/// Root of `f(r) = 0` on the legal radius interval, by bisection on the model
/// mean curvature.
pub fn minimal_radius_bisect(family: Family, m: usize, k: usize) -> Result<Option<f64>> {
    if !family.has_radius() {
        return Ok(None);
    }
    let f = |r: f64| -> Result<f64> { Ok(model_scalars(&FamilySpec::new(family, m, k, r)?).f) };
    let (mut lo, mut hi) = (1e-9, family.max_radius().min(20.0) - 1e-9);
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chen::RadiusLabel;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn hyperbolic_two_type_rows_are_spheres_and_hyperplane_tubes() {
        let grid = [0.3, 0.8, 1.5];
        let mut parts = vec![];
        for k in 0..2 {
            parts.push(ClassificationAtlas::for_cell(Family::H1k, 2, k, &grid).unwrap());
        }
        parts.push(ClassificationAtlas::for_cell(Family::H2, 2, 0, &grid).unwrap());
        parts.push(ClassificationAtlas::for_cell(Family::H3, 2, 0, &grid).unwrap());
        let atlas = ClassificationAtlas::merge(parts);
        assert_eq!(atlas.rows.len(), 10);
        for row in &atlas.rows {
            let two = row.verdict == TypeVerdict::TwoType;
            assert_eq!(two, row.family == Family::H1k, "{row:?}");
        }
        let h3 = atlas.rows.iter().find(|r| r.family == Family::H3).unwrap();
        assert_eq!(h3.verdict, TypeVerdict::InfiniteType);
    }

    #[test]
    fn projective_cell_marks_special_rows() {
        let atlas = ClassificationAtlas::for_cell(Family::P1k, 3, 1, &[0.6]).unwrap();
        let ms: Vec<&AtlasRow> = atlas.rows.iter().filter(|r| r.mass_symmetric == Some(true)).collect();
        assert_eq!(ms.len(), 1);
        assert!((ms[0].radius - FRAC_PI_4).abs() < 1e-15);
        assert!(ms[0].minimal);
        assert_eq!(atlas.two_type_rows().count(), 2);
        let grid_row = atlas.rows.iter().find(|r| r.labels.is_empty()).unwrap();
        assert_eq!(grid_row.verdict, TypeVerdict::NotTwoType);
    }

    #[test]
    fn bisection_matches_closed_form_minimal_radii() {
        for (family, m, k) in [(Family::P1k, 2, 0), (Family::P1k, 3, 1), (Family::P1k, 4, 1), (Family::P1k, 3, 2), (Family::P2, 3, 0)] {
            let closed = special_radii(family, m, k)
                .unwrap()
                .into_iter()
                .find(|s| s.label == RadiusLabel::Minimal)
                .unwrap()
                .radius;
            let found = minimal_radius_bisect(family, m, k).unwrap().unwrap();
            assert!((found - closed).abs() < 1e-10, "{family} {m} {k}");
        }
        assert_eq!(minimal_radius_bisect(Family::H2, 2, 0).unwrap(), None);
    }

    #[test]
    fn large_hyperbolic_radii_keep_closed_form_columns() {
        let atlas = ClassificationAtlas::for_cell(Family::H1k, 2, 1, &[9.0]).unwrap();
        let row = &atlas.rows[0];
        assert_eq!(row.verdict, TypeVerdict::TwoType);
        assert!(row.lambda_u.is_some() && row.lambda_v.is_some());
    }
}
