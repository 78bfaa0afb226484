//! Fixtures shared by the criterion benchmarks.

use chentype::hypersurface::{Family, FamilySpec};

/// One representative member per family at `m = 2`.
pub fn representative_specs() -> Vec<FamilySpec> {
    [
        (Family::P1k, 0, 0.7),
        (Family::P2, 0, 0.4),
        (Family::H1k, 1, 0.8),
        (Family::H2, 0, 0.6),
        (Family::H3, 0, 0.0),
    ]
    .into_iter()
    .map(|(family, k, r)| FamilySpec::new(family, 2, k, r).expect("legal fixture"))
    .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_cover_every_family() {
        let specs = super::representative_specs();
        assert_eq!(specs.len(), chentype::hypersurface::Family::ALL.len());
    }
}
