//! Chen-type machinery for the model hypersurfaces: closed-form iterated
//! Laplacians, the algebraic 2-type conditions, type coefficients, special
//! radii, spectral decompositions, PDE residuals and the classification atlas.

mod atlas;
mod conditions;
mod fields;
mod fit;

pub use atlas::{minimal_radius_bisect, AtlasRow, ClassificationAtlas, MASS_SYMMETRY_TOL, MINIMAL_TOL};
pub use conditions::{condition_residuals, solve_conditions, ConditionReport, ConditionSolve, CONDITION_TOL};
pub use fields::{
    class_b_fields, closed_form_fields, ensure_curvature_adapted, frame_field, frame_sums, quadric_center_identity,
    sphere_fields, sums_field, ClassBFields, ClosedForms, FrameSums,
};
pub use fit::{
    center_estimate, eigen_residual, laplace_samples, one_type_fit, order_two_fit, sample_charts, spectral_decomposition,
    type_pde_residual, CenterChoice, FitResult, LaplaceSample, SpectralDecomposition,
};

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypersurface::{partner, CurvatureScalars, Family, FamilySpec};

/// Relative tolerance for recognizing a special radius from its curvature value.
pub const ROOT_TOL: f64 = 1e-9;

/// Structural class of a model hypersurface with the parameters its formulas use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelClass {
    /// Geodesic spheres and tubes about quaternionic hyperplanes; `mu` is the
    /// principal curvature on `D` (multiplicity `4(m-1)`).
    A1 { mu: f64 },
    /// Tubes about `ℍQ^k`, `1 ≤ k ≤ m-2`, with `K = 4k+3`, `L = 4l+3`.
    A2 { mu: f64, nu: f64, big_k: f64, big_l: f64 },
    /// Tubes about the complex space form; `alpha` is the simple curvature on `D⊥`.
    B { alpha: f64 },
    Horosphere,
}

pub fn model_class(spec: &FamilySpec) -> ModelClass {
    let (m, k, r) = (spec.m, spec.k, spec.r);
    match spec.family {
        Family::P1k | Family::H1k => {
            let row = spec.model_curvatures();
            if k == 0 {
                ModelClass::A1 { mu: row.mu }
            } else if k == m - 1 {
                ModelClass::A1 { mu: row.nu }
            } else {
                let l = m - k - 1;
                ModelClass::A2 {
                    mu: row.mu,
                    nu: row.nu,
                    big_k: (4 * k + 3) as f64,
                    big_l: (4 * l + 3) as f64,
                }
            }
        }
        Family::P2 => ModelClass::B { alpha: 2.0 / (2.0 * r).tan() },
        Family::H2 => ModelClass::B { alpha: 2.0 / (2.0 * r).tanh() },
        Family::H3 => ModelClass::Horosphere,
    }
}

/// Curvature scalars of a model taken directly from its principal curvatures.
pub fn model_scalars(spec: &FamilySpec) -> CurvatureScalars {
    let row = spec.model_curvatures();
    let c = spec.c();
    let alpha = row.alphas();
    let mut tau: Vec<(f64, usize)> = [(row.mu, row.m_mu), (row.nu, row.m_nu)]
        .into_iter()
        .filter(|(_, k)| *k > 0)
        .collect();
    tau.sort_by(|a, b| a.0.total_cmp(&b.0));
    let spectrum = row.spectrum();
    let f = spectrum.iter().map(|(v, k)| v * *k as f64).sum();
    let f2 = spectrum.iter().map(|(v, k)| v * v * *k as f64).sum();
    let mut partners_undefined = false;
    let mut partner_gap: f64 = 0.0;
    let partners = tau
        .iter()
        .map(|(t, _)| {
            [0, 1, 2].map(|q| {
                let p = partner(c, *t, alpha[q]);
                match p {
                    Some(v) => {
                        let gap = tau.iter().map(|(s, _)| (s - v).abs()).fold(f64::INFINITY, f64::min);
                        partner_gap = partner_gap.max(gap);
                    }
                    None => partners_undefined = true,
                }
                p
            })
        })
        .collect();
    CurvatureScalars { c, n: spec.n(), f, f2, alpha, tau, partners, partner_gap, partners_undefined }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeVerdict {
    OneType,
    TwoType,
    ThreeType,
    /// No consistent 2-type coefficients; higher type is not decided.
    NotTwoType,
    /// Not of finite type.
    InfiniteType,
}

impl TypeVerdict {
    pub fn label(self) -> &'static str {
        match self {
            TypeVerdict::OneType => "1-type",
            TypeVerdict::TwoType => "2-type",
            TypeVerdict::ThreeType => "3-type",
            TypeVerdict::NotTwoType => "not-2-type",
            TypeVerdict::InfiniteType => "infinite-type",
        }
    }
}

impl fmt::Display for TypeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Coefficients of the type equation satisfied by the position vector.
///
/// Order 1: `Δx̃ = λ(x̃ - x̃_0)`. Order 2: `Δ²x̃ - aΔx̃ + b(x̃ - x̃_0) = 0`.
/// Order 3: `Δ³x̃ + pΔ²x̃ + qΔx̃ + r(x̃ - x̃_0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeCoefficients {
    pub verdict: TypeVerdict,
    pub order: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    /// `(λ_u, λ_v)` for order 2, `[λ]` for order 1, the cubic's real roots for order 3.
    pub eigenvalues: Vec<f64>,
    /// Which closed-form case produced the coefficients.
    pub case: Option<String>,
}

impl TypeCoefficients {
    fn without(verdict: TypeVerdict) -> Self {
        Self { verdict, order: None, a: None, b: None, p: None, q: None, r: None, eigenvalues: vec![], case: None }
    }

    fn order_two(a: f64, b: f64, lu: f64, lv: f64, case: &str) -> Self {
        Self {
            verdict: TypeVerdict::TwoType,
            order: Some(2),
            a: Some(a),
            b: Some(b),
            p: None,
            q: None,
            r: None,
            eigenvalues: vec![lu, lv],
            case: Some(case.into()),
        }
    }

    pub fn lambda_u(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn lambda_v(&self) -> Option<f64> {
        if self.order == Some(2) {
            self.eigenvalues.get(1).copied()
        } else {
            None
        }
    }

    /// `a² - 4b`, positive for distinct real eigenvalues.
    pub fn discriminant(&self) -> Option<f64> {
        Some(self.a? * self.a? - 4.0 * self.b?)
    }
}

fn near(x: f64, target: f64) -> bool {
    (x - target).abs() <= ROOT_TOL * target.abs().max(1.0)
}

/// Roots of `μ²` for the A2 consistency condition, with case labels.
pub fn a2_mu_sq_roots(big_k: f64, big_l: f64, c: f64) -> [(&'static str, f64); 3] {
    [
        ("a", (big_k + 1.0) * c / (big_l + 1.0)),
        ("b", big_k * c / (big_l + 2.0)),
        ("c", (big_k + 2.0) * c / big_l),
    ]
}

/// Roots of `α²` for the class-B consistency sextic.
pub fn class_b_alpha_sq_roots(m: usize, c: f64) -> [(&'static str, f64); 3] {
    let m = m as f64;
    let d = (96.0 * m * m - 15.0).sqrt();
    [
        ("i", 4.0 * c / m),
        ("ii", (6.0 * c + 2.0 * d) / (4.0 * m * m - 1.0)),
        ("iii", (6.0 * c - 2.0 * d) / (4.0 * m * m - 1.0)),
    ]
}

/// Real roots of `t³ + p t² + q t + r`, ascending.
pub fn cubic_real_roots(p: f64, q: f64, r: f64) -> Vec<f64> {
    let companion = nalgebra::Matrix3::new(-p, -q, -r, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let scale = 1.0 + p.abs() + q.abs().sqrt() + r.abs().cbrt();
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * scale)
        .map(|z| z.re)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

/// Class-B cubic coefficients `(p, q, r)` at `α²`.
pub fn class_b_cubic(m: usize, c: f64, alpha_sq: f64) -> (f64, f64, f64) {
    let m = m as f64;
    let a2 = alpha_sq;
    let s = a2 + 4.0 * c;
    let p = -s * ((6.0 * m - 1.0) * a2 + 8.0 * c) / a2;
    let q = s * (4.0 * m * (2.0 * m - 1.0) * a2 * a2 + 8.0 * c * (6.0 * m * m + 2.0 * m - 1.0) * a2 + 32.0 * (4.0 * m + 1.0))
        / a2;
    let r = -16.0 * c / a2 * (2.0 * m * m + m - 1.0) * s * s * (m * a2 + 4.0 * c);
    (p, q, r)
}

/// Closed-form type coefficients of a model hypersurface.
pub fn solve_type_coefficients(spec: &FamilySpec) -> TypeCoefficients {
    let c = spec.c();
    let n = spec.n() as f64;
    match model_class(spec) {
        ModelClass::A1 { mu } => {
            let mu2 = mu * mu;
            let lu = 2.0 * (n + 1.0) * (mu2 + c);
            if c > 0.0 && near(mu2, 3.0 / (n + 2.0)) {
                return TypeCoefficients {
                    verdict: TypeVerdict::OneType,
                    order: Some(1),
                    eigenvalues: vec![lu],
                    case: Some("one-type".into()),
                    ..TypeCoefficients::without(TypeVerdict::OneType)
                };
            }
            let a = (mu2 + c) * (3.0 * n + 2.0 + 3.0 * c / mu2);
            let b = 2.0 * (n + 1.0) * (n * mu2 * mu2 + c * (2.0 * n + 3.0) * mu2 + 3.0 * c / mu2 + n + 6.0);
            let lv = (n * mu2 + 3.0 * c) * (mu2 + c) / mu2;
            TypeCoefficients::order_two(a, b, lu, lv, "a1")
        }
        ModelClass::A2 { mu, nu, big_k: k, big_l: l } => {
            if c < 0.0 {
                return TypeCoefficients::without(TypeVerdict::NotTwoType);
            }
            let mu2 = mu * mu;
            let Some((case, _)) = a2_mu_sq_roots(k, l, c).into_iter().find(|(_, x)| near(mu2, *x)) else {
                return TypeCoefficients::without(TypeVerdict::NotTwoType);
            };
            let nu2 = nu * nu;
            let a = (l * l + 4.0 * l + 2.0) * mu2 + (k * k + 4.0 * k + 2.0) * nu2 - 2.0 * l * k;
            let b = l * (l + 1.0) * (l + 2.0) * mu2 * mu2
                + (l.powi(3) - l * l * k + 2.0 * l * l + 2.0 * l * k + 2.0 * l + 2.0 * k) * mu2
                + k * (k + 1.0) * (k + 2.0) * nu2 * nu2
                + (k.powi(3) - l * k * k + 2.0 * k * k + 2.0 * l * k + 2.0 * l + 2.0 * k) * nu2
                - l * l * k
                - l * k * k
                - l * l
                - k * k
                + 4.0 * l * k
                + 2.0 * l
                + 2.0 * k;
            let lu = (l + 1.0) * (l + 2.0) * mu2 + (k + 1.0) * (k + 2.0) * nu2 - (l + k + 2.0 * l * k);
            let lv = l * mu2 + k * nu2 + l + k;
            TypeCoefficients::order_two(a, b, lu, lv, &format!("a2-{case}"))
        }
        ModelClass::B { alpha } => {
            let a2 = alpha * alpha;
            let m = spec.m as f64;
            let two_type = c > 0.0 && class_b_alpha_sq_roots(spec.m, c)[..2].iter().any(|(_, x)| near(a2, *x));
            if two_type {
                let case = class_b_alpha_sq_roots(spec.m, c)
                    .into_iter()
                    .find(|(_, x)| near(a2, *x))
                    .map(|(s, _)| s)
                    .unwrap_or("i");
                let a = (4.0 * m * m + 4.0 * m - 1.0) * a2 - 64.0 / a2 + 4.0 * c * (4.0 * m - 1.0);
                let b = 8.0 * c * (m + 1.0) * ((4.0 * m * m + 2.0 * m - 1.0) * a2 - 64.0 / a2 + 4.0 * c * (2.0 * m - 1.0));
                let disc = (a * a - 4.0 * b).max(0.0).sqrt();
                let (lo, hi) = (0.5 * (a - disc), 0.5 * (a + disc));
                return TypeCoefficients::order_two(a, b, lo, hi, &format!("b-{case}"));
            }
            let (p, q, r) = class_b_cubic(spec.m, c, a2);
            TypeCoefficients {
                verdict: TypeVerdict::ThreeType,
                order: Some(3),
                p: Some(p),
                q: Some(q),
                r: Some(r),
                eigenvalues: cubic_real_roots(p, q, r),
                case: Some("b-cubic".into()),
                ..TypeCoefficients::without(TypeVerdict::ThreeType)
            }
        }
        ModelClass::Horosphere => TypeCoefficients::without(TypeVerdict::InfiniteType),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusLabel {
    OneType,
    TwoTypeA,
    TwoTypeB,
    MassSymmetric,
    Minimal,
}

impl RadiusLabel {
    pub fn name(self) -> &'static str {
        match self {
            RadiusLabel::OneType => "one-type",
            RadiusLabel::TwoTypeA => "two-type-a",
            RadiusLabel::TwoTypeB => "two-type-b",
            RadiusLabel::MassSymmetric => "mass-symmetric",
            RadiusLabel::Minimal => "minimal",
        }
    }

    /// Whether the label answers an `auto:<token>` radius request.
    pub fn matches_token(self, token: &str) -> bool {
        match token {
            "two-type" => matches!(self, RadiusLabel::TwoTypeA | RadiusLabel::TwoTypeB),
            other => self.name() == other,
        }
    }
}

/// A radius singled out by a closed-form condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialRadius {
    pub radius: f64,
    pub label: RadiusLabel,
    /// Closed form of the radius.
    pub expression: String,
}

fn acot_sqrt(x: f64) -> f64 {
    (1.0 / x.sqrt()).atan()
}

/// Labeled special radii of a family, sorted by radius.
pub fn special_radii(family: Family, m: usize, k: usize) -> Result<Vec<SpecialRadius>> {
    // Validates m and k; the radius is a placeholder inside the legal interval.
    let probe = FamilySpec::new(family, m, k, 0.5 * family.max_radius().min(1.0))?;
    let n = probe.n() as f64;
    let mf = m as f64;
    let mut out: Vec<SpecialRadius> = Vec::new();
    let mut push = |radius: f64, label: RadiusLabel, expression: String| {
        if radius > 0.0 && radius < family.max_radius() {
            out.push(SpecialRadius { radius, label, expression });
        }
    };
    match (family, model_class(&probe)) {
        (Family::P1k, ModelClass::A1 { .. }) => {
            // Spheres have μ = cot r; tubes about a hyperplane have |μ| = tan r.
            let mirrored = k != 0;
            let radius = |x: f64| if mirrored { FRAC_PI_2 - acot_sqrt(x) } else { acot_sqrt(x) };
            let expr = |s: &str| {
                if mirrored {
                    format!("pi/2 - acot(sqrt({s}))")
                } else {
                    format!("acot(sqrt({s}))")
                }
            };
            push(radius(3.0 / (n + 2.0)), RadiusLabel::OneType, expr(&format!("3/{}", 4 * m + 1)));
            push(radius(1.0 / mf), RadiusLabel::MassSymmetric, expr(&format!("1/{m}")));
            push(radius(3.0 / n), RadiusLabel::Minimal, expr(&format!("3/{}", 4 * m - 1)));
        }
        (Family::P1k, ModelClass::A2 { big_k, big_l, .. }) => {
            let (kk, ll) = (big_k as usize, big_l as usize);
            let ra = acot_sqrt((big_k + 1.0) / (big_l + 1.0));
            let ea = format!("acot(sqrt({}/{}))", kk + 1, ll + 1);
            push(ra, RadiusLabel::TwoTypeA, ea.clone());
            push(ra, RadiusLabel::MassSymmetric, ea);
            push(
                acot_sqrt(big_k / (big_l + 2.0)),
                RadiusLabel::TwoTypeB,
                format!("acot(sqrt({kk}/{}))", ll + 2),
            );
            push(acot_sqrt(big_k / big_l), RadiusLabel::Minimal, format!("acot(sqrt({kk}/{ll}))"));
        }
        (Family::P2, _) => {
            let roots = class_b_alpha_sq_roots(m, 1.0);
            let radius = |a2: f64| 0.5 * (2.0 / a2.sqrt()).atan();
            let ei = format!("acot(1/sqrt({m}))/2");
            let eii = format!("acot(sqrt((3 + sqrt({})) / {}))/2", 96 * m * m - 15, 2 * (4 * m * m - 1));
            push(radius(roots[0].1), RadiusLabel::TwoTypeA, ei.clone());
            push(radius(roots[0].1), RadiusLabel::MassSymmetric, ei);
            push(radius(roots[1].1), RadiusLabel::TwoTypeB, eii.clone());
            push(radius(roots[1].1), RadiusLabel::MassSymmetric, eii);
            push(
                radius(8.0 / (2.0 * mf - 1.0)),
                RadiusLabel::Minimal,
                format!("acot(sqrt(2/{}))/2", 2 * m - 1),
            );
        }
        _ => {}
    }
    out.sort_by(|a, b| a.radius.total_cmp(&b.radius).then(a.label.cmp(&b.label)));
    out.dedup_by(|a, b| a.label == b.label && (a.radius - b.radius).abs() < 1e-12);
    Ok(out)
}

/// Radii matching an `auto:<token>` request.
pub fn resolve_auto_radius(family: Family, m: usize, k: usize, token: &str) -> Result<Vec<f64>> {
    const TOKENS: [&str; 4] = ["two-type", "minimal", "mass-symmetric", "one-type"];
    if !TOKENS.contains(&token) {
        return Err(Error::Spec(format!("unknown radius token 'auto:{token}'")));
    }
    let mut radii: Vec<f64> = special_radii(family, m, k)?
        .into_iter()
        .filter(|s| s.label.matches_token(token))
        .map(|s| s.radius)
        .collect();
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(radii)
}
