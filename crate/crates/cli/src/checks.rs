//! Named check suites. Each check turns a grid point or a whole cell into a
//! record of measured residuals against closed-form expectations.

use std::fmt;
use std::str::FromStr;

use chentype::chen::{
    closed_form_fields, condition_residuals, laplace_samples, minimal_radius_bisect, model_scalars, one_type_fit,
    order_two_fit, solve_conditions, solve_type_coefficients, spectral_decomposition, special_radii,
    type_pde_residual, CenterChoice, RadiusLabel, TypeCoefficients, TypeVerdict, CONDITION_TOL, MASS_SYMMETRY_TOL,
    MINIMAL_TOL,
};
use chentype::embedding::{
    shape_operator_of_embedding, sigma, weingarten_fd, CanonicalTriple, HorizontalVector, SpaceFormPoint,
};
use chentype::hypersurface::{scalar_invariants, shape_operator, curvature_deviation, Chart, Family, FamilySpec};
use chentype::laplace::{laplace_beltrami, position_field, FdConfig};
use chentype::quaternion::{trace_metric, QMatrix, QVector};
use chentype::sampling::{gaussian, horizontal_unit, quadric_point, rng};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Cell;
use crate::report::{Bound, Record, Skipped};
use crate::CliError;

/// Chart samples per grid point for Laplacian-based checks.
pub const SAMPLES: usize = 10;
/// Random point and tangent tuples per cell for the embedding identities.
pub const IDENTITY_SAMPLES: usize = 100;
/// Radii closer than this to a special radius count as that radius.
const LABEL_MATCH: f64 = 1e-12;

const CLOSED_FORM: &str = "closed-form";
const ROOTS: &str = "closed-form roots";
const ORACLE: &str = "finite-difference oracle";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    #[serde(rename = "table1")]
    PrincipalCurvatures,
    SigmaIdentities,
    Beltrami,
    Chen2,
    Chen3,
    Horosphere,
    MassSymmetry,
    Minimality,
    SpecialRadii,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::PrincipalCurvatures,
        Check::SigmaIdentities,
        Check::Beltrami,
        Check::Chen2,
        Check::Chen3,
        Check::Horosphere,
        Check::MassSymmetry,
        Check::Minimality,
        Check::SpecialRadii,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Check::PrincipalCurvatures => "table1",
            Check::SigmaIdentities => "sigma-identities",
            Check::Beltrami => "beltrami",
            Check::Chen2 => "chen2",
            Check::Chen3 => "chen3",
            Check::Horosphere => "horosphere",
            Check::MassSymmetry => "mass-symmetry",
            Check::Minimality => "minimality",
            Check::SpecialRadii => "special-radii",
        }
    }

    /// Cell-wide checks run once per `(family, m, k)` instead of per radius.
    pub fn per_cell(self) -> bool {
        matches!(self, Check::SigmaIdentities | Check::SpecialRadii)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Check::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| CliError::Config(format!("unknown check '{s}'")))
    }
}

/// Shared knobs for every check.
#[derive(Clone, Copy, Debug)]
pub struct Context {
    pub seed: u64,
    pub fd: FdConfig,
}

/// Result of one check at one grid point.
pub enum Outcome {
    Records(Vec<Record>),
    Skip(Skipped),
}

type Run = Result<Outcome, chentype::Error>;

fn cell_of(sp: &FamilySpec) -> Cell {
    Cell { family: sp.family, m: sp.m, k: sp.k }
}

fn point_radius(sp: &FamilySpec) -> Option<f64> {
    sp.family.has_radius().then_some(sp.r)
}

fn skip(check: Check, cell: Cell, radius: Option<f64>, reason: impl Into<String>) -> Outcome {
    Outcome::Skip(Skipped {
        check,
        family: cell.family.name().to_string(),
        params: crate::report::Params { m: cell.m, k: cell.k, radius },
        reason: reason.into(),
    })
}

fn one(record: Record) -> Outcome {
    Outcome::Records(vec![record])
}

/// Special-radius labels attached to `sp.r`.
fn labels_at(sp: &FamilySpec) -> Vec<RadiusLabel> {
    if !sp.family.has_radius() {
        return vec![];
    }
    special_radii(sp.family, sp.m, sp.k)
        .unwrap_or_default()
        .into_iter()
        .filter(|s| (s.radius - sp.r).abs() <= LABEL_MATCH)
        .map(|s| s.label)
        .collect()
}

fn coefficients_json(tc: &TypeCoefficients) -> Value {
    json!({
        "verdict": tc.verdict,
        "order": tc.order,
        "a": tc.a,
        "b": tc.b,
        "p": tc.p,
        "q": tc.q,
        "r": tc.r,
        "lambda": tc.eigenvalues,
        "case": tc.case,
    })
}

/// Runs a point check at `sp`; core errors become failing records.
pub fn run_point(check: Check, sp: FamilySpec, ctx: &Context) -> Outcome {
    let run = match check {
        Check::PrincipalCurvatures => principal_curvatures(sp, ctx),
        Check::Beltrami => beltrami(sp, ctx),
        Check::Chen2 => chen2(sp, ctx),
        Check::Chen3 => chen3(sp, ctx),
        Check::Horosphere => horosphere(sp, ctx),
        Check::MassSymmetry => mass_symmetry(sp, ctx),
        Check::Minimality => minimality(sp, ctx),
        Check::SigmaIdentities | Check::SpecialRadii => unreachable!("{check} is a cell check"),
    };
    run.unwrap_or_else(|e| {
        let mut r = Record::new(check, cell_of(&sp), point_radius(&sp), Value::Null, CLOSED_FORM);
        r.fail_with(e.to_string());
        one(r)
    })
}

/// Runs a cell check over `(family, m, k)`.
pub fn run_cell(check: Check, cell: Cell, ctx: &Context) -> Outcome {
    let run = match check {
        Check::SigmaIdentities => sigma_identities(cell, ctx),
        Check::SpecialRadii => special_radii_check(cell),
        _ => unreachable!("{check} is a point check"),
    };
    run.unwrap_or_else(|e| {
        let mut r = Record::new(check, cell, None, Value::Null, CLOSED_FORM);
        r.fail_with(e.to_string());
        one(r)
    })
}

fn principal_curvatures(sp: FamilySpec, ctx: &Context) -> Run {
    let chart = Chart::new(sp, ctx.seed);
    let frame = shape_operator(&chart, &vec![0.0; chart.n()])?;
    let want = sp.model_curvatures().spectrum();
    let mut r = Record::new(Check::PrincipalCurvatures, cell_of(&sp), point_radius(&sp), json!(want), CLOSED_FORM);
    r.measured(json!(frame.spectrum));
    match curvature_deviation(&frame, &sp) {
        Some(d) => r.residual("curvature", d, Bound::AtMost(1e-6)),
        None => r.agree("multiplicities", false),
    };
    Ok(one(r))
}

fn sigma_identities(cell: Cell, ctx: &Context) -> Run {
    let (c, m) = (cell.family.c(), cell.m);
    let triple = CanonicalTriple::standard();
    let mut g = rng(ctx.seed ^ ((m as u64) << 8) ^ if c > 0.0 { 1 } else { 2 });
    let quadric_value = c * m as f64 / (2.0 * (m + 1) as f64);
    let (mut quad, mut prod, mut wein, mut rel) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..IDENTITY_SAMPLES {
        let z = quadric_point(&mut g, m, c, 1.0);
        let p = SpaceFormPoint::new(z.clone())?;
        let v: Vec<QVector> = (0..4).map(|_| horizontal_unit(&mut g, &z).scale(1.0 + 0.5 * gaussian(&mut g))).collect();
        let h = |a: &QVector| HorizontalVector::new(z.clone(), a.clone());
        let sxy = sigma(&p, &h(&v[0])?, &h(&v[1])?).value;
        let svw = sigma(&p, &h(&v[2])?, &h(&v[3])?).value;
        let centered = p.centered();
        quad = quad.max((trace_metric(&centered, &centered)? - quadric_value).abs());

        let j = |q: usize, a: &QVector| triple.apply(q, a);
        let mut want = 2.0 * v[0].dot(&v[1]) * v[2].dot(&v[3]) + v[0].dot(&v[2]) * v[1].dot(&v[3]) + v[0].dot(&v[3]) * v[1].dot(&v[2]);
        for q in 1..=3 {
            want += j(q, &v[0]).dot(&v[2]) * j(q, &v[1]).dot(&v[3]) + j(q, &v[0]).dot(&v[3]) * j(q, &v[1]).dot(&v[2]);
        }
        prod = prod.max((trace_metric(&sxy, &svw)? - c * want).abs());

        let fd = weingarten_fd(&p, &sxy, &v[2]);
        wein = wein.max((&fd - &shape_operator_of_embedding(&triple, &v[0], &v[1], &v[2])).max_abs());

        rel = rel.max((trace_metric(&sxy, &p.p)? + v[0].dot(&v[1])).abs());
        rel = rel.max(trace_metric(&sxy, &QMatrix::identity(m + 1, c))?.abs());
        for q in 1..=3 {
            let sj = sigma(&p, &h(&j(q, &v[0]))?, &h(&j(q, &v[1]))?).value;
            rel = rel.max(sj.max_diff(&sxy));
        }
    }
    let mut r = Record::new(
        Check::SigmaIdentities,
        cell,
        None,
        json!({ "quadric": quadric_value, "samples": IDENTITY_SAMPLES }),
        CLOSED_FORM,
    );
    r.residual("quadric", quad, Bound::AtMost(1e-8))
        .residual("sigma_products", prod, Bound::AtMost(1e-8))
        .residual("sigma_relations", rel, Bound::AtMost(1e-8))
        .residual("weingarten", wein, Bound::AtMost(1e-7));
    Ok(one(r))
}

fn beltrami(sp: FamilySpec, ctx: &Context) -> Run {
    let mut worst = 0.0f64;
    for i in 0..SAMPLES as u64 {
        let chart = Chart::new(sp, ctx.seed.wrapping_add(i));
        let u = vec![0.0; chart.n()];
        let fd = laplace_beltrami(&position_field(&chart), &chart, &u, &ctx.fd)?;
        let closed = closed_form_fields(&shape_operator(&chart, &u)?)?.laplacian.to_reals();
        let scale = closed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = fd.iter().zip(&closed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(diff / scale);
    }
    let mut r = Record::new(Check::Beltrami, cell_of(&sp), point_radius(&sp), json!("closed-form Laplacian of the position vector"), ORACLE);
    r.residual("relative", worst, Bound::AtMost(1e-6));
    Ok(one(r))
}

fn chen2(sp: FamilySpec, ctx: &Context) -> Run {
    let tc = solve_type_coefficients(&sp);
    let mut r = Record::new(Check::Chen2, cell_of(&sp), point_radius(&sp), coefficients_json(&tc), ROOTS);
    match tc.order {
        Some(1) => {
            let samples = laplace_samples(sp, ctx.seed, SAMPLES, 1, &ctx.fd)?;
            let fit = one_type_fit(&samples)?;
            let lambda = tc.eigenvalues[0];
            r.measured(json!({ "lambda": fit.coefficients[0] }));
            r.residual("pde", type_pde_residual(&samples, &tc, &CenterChoice::Estimated)?, Bound::AtMost(1e-4))
                .residual("one_type_fit", fit.residual, Bound::AtMost(1e-4))
                .residual("lambda", (fit.coefficients[0] - lambda).abs() / lambda.abs().max(1.0), Bound::AtMost(1e-6));
        }
        Some(2) => {
            let (a, b) = (tc.a.unwrap_or(f64::NAN), tc.b.unwrap_or(f64::NAN));
            let samples = laplace_samples(sp, ctx.seed, SAMPLES, 2, &ctx.fd)?;
            let fit = order_two_fit(&samples)?;
            let (fa, fb) = (fit.coefficients[0], fit.coefficients[1]);
            let disc = (fa * fa - 4.0 * fb).max(0.0).sqrt();
            r.measured(json!({ "a": fa, "b": fb, "lambda": [0.5 * (fa + disc), 0.5 * (fa - disc)] }));
            let scale = a.abs().max(b.abs()).max(1.0);
            let cond = condition_residuals(&model_scalars(&sp), a, b);
            r.residual("pde", type_pde_residual(&samples, &tc, &CenterChoice::Estimated)?, Bound::AtMost(1e-4))
                .residual("coefficients", (fa - a).abs().max((fb - b).abs()) / scale, Bound::AtMost(1e-4))
                .residual("conditions", cond.max_scalar_residual() / scale, Bound::AtMost(CONDITION_TOL))
                .agree("partner_hypothesis", cond.hypothesis_holds);
        }
        _ => {
            // A negative verdict must agree with the least-squares condition solve.
            match solve_conditions(&model_scalars(&sp)) {
                Some(sol) => {
                    r.measured(json!({ "a": sol.a, "b": sol.b }));
                    r.residual("conditions_lsq", sol.residual / sol.scale, Bound::Above(CONDITION_TOL));
                }
                None => {
                    r.agree("partner_hypothesis_fails", true);
                }
            }
        }
    }
    Ok(one(r))
}

fn chen3(sp: FamilySpec, ctx: &Context) -> Run {
    let tc = solve_type_coefficients(&sp);
    if tc.verdict != TypeVerdict::ThreeType {
        return Ok(skip(Check::Chen3, cell_of(&sp), point_radius(&sp), format!("verdict is {}", tc.verdict)));
    }
    let samples = laplace_samples(sp, ctx.seed, SAMPLES, 3, &ctx.fd)?;
    let mut r = Record::new(Check::Chen3, cell_of(&sp), point_radius(&sp), coefficients_json(&tc), ROOTS);
    r.residual("pde", type_pde_residual(&samples, &tc, &CenterChoice::Quadric)?, Bound::AtMost(1e-3));
    Ok(one(r))
}

fn horosphere(sp: FamilySpec, ctx: &Context) -> Run {
    if sp.family != Family::H3 {
        return Ok(skip(Check::Horosphere, cell_of(&sp), point_radius(&sp), "not a horosphere"));
    }
    let samples = laplace_samples(sp, ctx.seed, SAMPLES, 2, &ctx.fd)?;
    let d2: Vec<Vec<f64>> = samples.iter().map(|s| s.d2.as_ref().map(|v| v.as_slice().to_vec()).unwrap_or_default()).collect();
    let amax = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = d2.iter().fold(0.0f64, |m, v| m.max(amax(v)));
    let spread = d2.iter().fold(0.0f64, |m, v| m.max(diff(v, &d2[0]))) / scale;
    let (mut closed, mut norm) = (0.0f64, f64::INFINITY);
    for (i, v) in d2.iter().enumerate() {
        let chart = Chart::new(sp, ctx.seed.wrapping_add(i as u64));
        let cf = closed_form_fields(&shape_operator(&chart, &vec![0.0; chart.n()])?)?;
        let want = cf.bilaplacian.to_reals();
        closed = closed.max(diff(v, &want) / amax(&want));
        norm = norm.min(v.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    let fit = one_type_fit(&samples)?;
    let tc = solve_type_coefficients(&sp);
    let mut r = Record::new(
        Check::Horosphere,
        cell_of(&sp),
        None,
        json!({ "bilaplacian": "closed-form, constant", "verdict": TypeVerdict::InfiniteType }),
        CLOSED_FORM,
    );
    r.measured(json!({ "bilaplacian_norm": norm, "verdict": tc.verdict }));
    r.residual("spread", spread, Bound::AtMost(1e-5))
        .residual("closed_form", closed, Bound::AtMost(1e-5))
        .residual("bilaplacian_norm", norm, Bound::AtLeast(1.0))
        .residual("one_type_fit", fit.residual, Bound::Above(1e-2))
        .agree("verdict", tc.verdict == TypeVerdict::InfiniteType);
    Ok(one(r))
}

fn mass_symmetry(sp: FamilySpec, ctx: &Context) -> Run {
    let tc = solve_type_coefficients(&sp);
    let Some(order) = tc.order else {
        return Ok(skip(Check::MassSymmetry, cell_of(&sp), point_radius(&sp), format!("verdict is {}", tc.verdict)));
    };
    let labelled = labels_at(&sp).contains(&RadiusLabel::MassSymmetric);
    let symmetric = labelled || tc.verdict == TypeVerdict::ThreeType;
    let (mut worst, mut least, mut recon) = (0.0f64, f64::INFINITY, 0.0f64);
    for i in 0..3 {
        let chart = Chart::new(sp, ctx.seed.wrapping_add(i));
        let d = spectral_decomposition(&chart, &vec![0.0; chart.n()], &tc)?;
        worst = worst.max(d.center_offset());
        least = least.min(d.center_offset());
        recon = recon.max(d.reconstruction_residual());
    }
    let mut r = Record::new(Check::MassSymmetry, cell_of(&sp), point_radius(&sp), json!({ "mass_symmetric": symmetric }), ROOTS);
    r.measured(json!({ "mass_symmetric": worst <= MASS_SYMMETRY_TOL }));
    if symmetric {
        r.residual("center_offset", worst, Bound::AtMost(MASS_SYMMETRY_TOL));
    } else {
        r.residual("center_offset", least, Bound::Above(MASS_SYMMETRY_TOL));
    }
    if order <= 2 {
        r.residual("reconstruction", recon, Bound::AtMost(1e-8));
    }
    Ok(one(r))
}

fn minimality(sp: FamilySpec, ctx: &Context) -> Run {
    let closed = model_scalars(&sp).f;
    let chart = Chart::new(sp, ctx.seed);
    let f = scalar_invariants(&shape_operator(&chart, &vec![0.0; chart.n()])?).f;
    let labelled = labels_at(&sp).contains(&RadiusLabel::Minimal);
    let mut r = Record::new(
        Check::Minimality,
        cell_of(&sp),
        point_radius(&sp),
        json!({ "f": closed, "minimal": labelled }),
        CLOSED_FORM,
    );
    r.measured(json!({ "f": f, "minimal": closed.abs() <= MINIMAL_TOL }));
    r.residual("f", (f - closed).abs() / closed.abs().max(1.0), Bound::AtMost(1e-9))
        .agree("minimal", (closed.abs() <= MINIMAL_TOL) == labelled);
    Ok(one(r))
}

fn special_radii_check(cell: Cell) -> Run {
    let radii = special_radii(cell.family, cell.m, cell.k)?;
    if radii.is_empty() {
        return Ok(skip(Check::SpecialRadii, cell, None, "no isolated special radii"));
    }
    let mut out = Vec::new();
    for s in radii {
        let sp = FamilySpec::new(cell.family, cell.m, cell.k, s.radius)?;
        let tc = solve_type_coefficients(&sp);
        let mut r = Record::new(
            Check::SpecialRadii,
            cell,
            Some(s.radius),
            json!({ "label": s.label.name(), "expression": s.expression }),
            ROOTS,
        );
        r.measured(json!({ "verdict": tc.verdict }));
        match s.label {
            RadiusLabel::OneType => {
                r.agree("verdict", tc.verdict == TypeVerdict::OneType);
            }
            RadiusLabel::TwoTypeA | RadiusLabel::TwoTypeB => {
                r.agree("verdict", tc.verdict == TypeVerdict::TwoType);
                match solve_conditions(&model_scalars(&sp)) {
                    Some(sol) => r.residual("conditions_lsq", sol.residual / sol.scale, Bound::AtMost(CONDITION_TOL)),
                    None => r.agree("partner_hypothesis", false),
                };
            }
            RadiusLabel::MassSymmetric => {
                let chart = Chart::new(sp, 0);
                let d = spectral_decomposition(&chart, &vec![0.0; chart.n()], &tc)?;
                r.residual("center_offset", d.center_offset(), Bound::AtMost(MASS_SYMMETRY_TOL));
            }
            RadiusLabel::Minimal => {
                r.residual("f", model_scalars(&sp).f.abs(), Bound::AtMost(MINIMAL_TOL));
                let root = minimal_radius_bisect(cell.family, cell.m, cell.k)?.unwrap_or(f64::NAN);
                r.residual("bisection", (root - s.radius).abs(), Bound::AtMost(1e-10));
            }
        }
        out.push(r);
    }
    Ok(Outcome::Records(out))
}
