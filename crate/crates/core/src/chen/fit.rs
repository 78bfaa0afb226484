//! Sampling of Laplace iterates, type-equation residuals, least-squares type
//! fits and spectral decompositions of the position vector.

use nalgebra::{DVector, Matrix2, Vector2};

use super::fields::{class_b_fields, closed_form_fields, frame_field, frame_sums};
use super::{model_class, ModelClass, TypeCoefficients};
use crate::error::{Error, Result};
use crate::hypersurface::{shape_operator, Chart, FamilySpec};
use crate::laplace::{laplace_beltrami, position_field, FdConfig};
use crate::quaternion::QMatrix;

/// Laplace iterates of the position vector at one sample point.
///
/// `d1` is the finite-difference Laplacian of `x̃`; `d2` and `d3` apply the
/// finite-difference operator to the closed-form `Δx̃` and `Δ²x̃` fields.
#[derive(Clone, Debug)]
pub struct LaplaceSample {
    pub x: DVector<f64>,
    pub d1: DVector<f64>,
    pub d2: Option<DVector<f64>>,
    pub d3: Option<DVector<f64>>,
}

/// One chart per seed `seed, seed+1, …`; each sample sits at the chart centre.
pub fn sample_charts(spec: FamilySpec, seed: u64, count: usize) -> Vec<Chart> {
    (0..count as u64).map(|i| Chart::new(spec, seed.wrapping_add(i))).collect()
}

pub fn laplace_samples(
    spec: FamilySpec,
    seed: u64,
    count: usize,
    depth: usize,
    cfg: &FdConfig,
) -> Result<Vec<LaplaceSample>> {
    if !(1..=3).contains(&depth) {
        return Err(Error::Contract(format!("Laplace depth must be 1, 2 or 3, got {depth}")));
    }
    sample_charts(spec, seed, count)
        .iter()
        .map(|chart| {
            let u = vec![0.0; chart.n()];
            let x = position_field(chart)(&u)?;
            let d1 = laplace_beltrami(&position_field(chart), chart, &u, cfg)?;
            let d2 = if depth >= 2 {
                Some(laplace_beltrami(&frame_field(chart, |cf| cf.laplacian.clone()), chart, &u, cfg)?)
            } else {
                None
            };
            let d3 = if depth >= 3 {
                Some(laplace_beltrami(&frame_field(chart, |cf| cf.bilaplacian.clone()), chart, &u, cfg)?)
            } else {
                None
            };
            Ok(LaplaceSample { x, d1, d2, d3 })
        })
        .collect()
}

/// Constant part used in a type equation.
#[derive(Clone, Debug)]
pub enum CenterChoice {
    /// The hyperquadric centre `I/(m+1)`.
    Quadric,
    Given(DVector<f64>),
    /// Sample mean of the constant part implied by the equation.
    Estimated,
}

fn order_of(coeffs: &TypeCoefficients) -> Result<usize> {
    coeffs
        .order
        .ok_or_else(|| Error::Contract(format!("{} has no type equation", coeffs.verdict)))
}

fn need<'a>(v: &'a Option<DVector<f64>>, what: &str) -> Result<&'a DVector<f64>> {
    v.as_ref().ok_or_else(|| Error::Contract(format!("sample lacks {what}")))
}

fn coeff(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Contract(format!("missing coefficient {name}")))
}

/// `(L x̃, κ)` with the type equation written as `L x̃ + κ (x̃ - x̃_0) = 0`.
fn operator_part(s: &LaplaceSample, coeffs: &TypeCoefficients) -> Result<(DVector<f64>, f64)> {
    match order_of(coeffs)? {
        1 => {
            let l = coeffs.lambda_u().ok_or_else(|| Error::Contract("missing eigenvalue".into()))?;
            Ok((&s.d1 * 1.0, -l))
        }
        2 => {
            let (a, b) = (coeff(coeffs.a, "a")?, coeff(coeffs.b, "b")?);
            Ok((need(&s.d2, "Δ²x̃")? - &s.d1 * a, b))
        }
        _ => {
            let (p, q, r) = (coeff(coeffs.p, "p")?, coeff(coeffs.q, "q")?, coeff(coeffs.r, "r")?);
            Ok((need(&s.d3, "Δ³x̃")? + need(&s.d2, "Δ²x̃")? * p + &s.d1 * q, r))
        }
    }
}

fn leading(s: &LaplaceSample, order: usize) -> Result<&DVector<f64>> {
    match order {
        1 => Ok(&s.d1),
        2 => need(&s.d2, "Δ²x̃"),
        _ => need(&s.d3, "Δ³x̃"),
    }
}

/// Mean over samples of `x̃ + L x̃ / κ`.
pub fn center_estimate(samples: &[LaplaceSample], coeffs: &TypeCoefficients) -> Result<DVector<f64>> {
    let first = samples.first().ok_or_else(|| Error::Contract("no samples".into()))?;
    let mut acc = DVector::zeros(first.x.len());
    for s in samples {
        let (l, kappa) = operator_part(s, coeffs)?;
        acc += &s.x + l / kappa;
    }
    Ok(acc / samples.len() as f64)
}

fn quadric_center(len: usize) -> DVector<f64> {
    let dim = ((len / 4) as f64).sqrt().round() as usize;
    DVector::from_vec(QMatrix::identity(dim, 1.0).scale(1.0 / dim as f64).to_reals())
}

/// Largest entrywise residual of the type equation over the samples, relative to
/// the largest entry of the leading Laplace iterate.
pub fn type_pde_residual(samples: &[LaplaceSample], coeffs: &TypeCoefficients, center: &CenterChoice) -> Result<f64> {
    let order = order_of(coeffs)?;
    let first = samples.first().ok_or_else(|| Error::Contract("no samples".into()))?;
    let x0 = match center {
        CenterChoice::Quadric => quadric_center(first.x.len()),
        CenterChoice::Given(v) => v.clone(),
        CenterChoice::Estimated => center_estimate(samples, coeffs)?,
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for s in samples {
        let (l, kappa) = operator_part(s, coeffs)?;
        worst = worst.max((l + (&s.x - &x0) * kappa).amax());
        scale = scale.max(leading(s, order)?.amax());
    }
    Ok(worst / scale)
}

/// Least-squares type fit with a free constant part.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// `[λ]` for order 1, `[a, b]` for order 2.
    pub coefficients: Vec<f64>,
    pub x0: DVector<f64>,
    /// Relative residual as in [`type_pde_residual`].
    pub residual: f64,
}

fn centered(samples: &[LaplaceSample], pick: impl Fn(&LaplaceSample) -> Result<DVector<f64>>) -> Result<(Vec<DVector<f64>>, DVector<f64>)> {
    let vals: Vec<DVector<f64>> = samples.iter().map(&pick).collect::<Result<_>>()?;
    let mean = vals.iter().fold(DVector::zeros(vals[0].len()), |a, v| a + v) / vals.len() as f64;
    Ok((vals.iter().map(|v| v - &mean).collect(), mean))
}

fn dot_all(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Best `Δx̃ = λ (x̃ - x̃_0)` over `(λ, x̃_0)`.
pub fn one_type_fit(samples: &[LaplaceSample]) -> Result<FitResult> {
    if samples.len() < 2 {
        return Err(Error::Contract("a fit needs at least two samples".into()));
    }
    let (xc, xm) = centered(samples, |s| Ok(s.x.clone()))?;
    let (dc, dm) = centered(samples, |s| Ok(s.d1.clone()))?;
    let lambda = dot_all(&dc, &xc) / dot_all(&xc, &xc);
    let worst = dc.iter().zip(&xc).fold(0.0f64, |w, (d, x)| w.max((d - x * lambda).amax()));
    let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.d1.amax()));
    Ok(FitResult { coefficients: vec![lambda], x0: &xm - &dm / lambda, residual: worst / scale })
}

/// Best `Δ²x̃ - aΔx̃ + b(x̃ - x̃_0) = 0` over `(a, b, x̃_0)`.
pub fn order_two_fit(samples: &[LaplaceSample]) -> Result<FitResult> {
    if samples.len() < 3 {
        return Err(Error::Contract("an order-two fit needs at least three samples".into()));
    }
    let (xc, xm) = centered(samples, |s| Ok(s.x.clone()))?;
    let (d1c, d1m) = centered(samples, |s| Ok(s.d1.clone()))?;
    let (d2c, d2m) = centered(samples, |s| need(&s.d2, "Δ²x̃").cloned())?;
    // Δ²_c = a Δ_c - b X_c in least squares.
    let g = Matrix2::new(
        dot_all(&d1c, &d1c),
        -dot_all(&d1c, &xc),
        -dot_all(&d1c, &xc),
        dot_all(&xc, &xc),
    );
    let rhs = Vector2::new(dot_all(&d1c, &d2c), -dot_all(&xc, &d2c));
    let sol = g
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("order-two normal equations are singular".into()))?;
    let (a, b) = (sol[0], sol[1]);
    let mut worst: f64 = 0.0;
    for i in 0..samples.len() {
        worst = worst.max((&d2c[i] - &d1c[i] * a + &xc[i] * b).amax());
    }
    let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.d2.as_ref().map_or(0.0, |v| v.amax())));
    let x0 = &xm - (&d1m * a - &d2m) / b;
    Ok(FitResult { coefficients: vec![a, b], x0, residual: worst / scale })
}

/// Constant part and eigencomponents of the position vector at one point.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub x0: QMatrix,
    /// `(λ, x̃_λ)` pairs.
    pub components: Vec<(f64, QMatrix)>,
    pub position: QMatrix,
}

impl SpectralDecomposition {
    /// `max |x̃ - x̃_0 - Σ x̃_λ|`.
    pub fn reconstruction_residual(&self) -> f64 {
        let sum = self.components.iter().fold(self.x0.clone(), |acc, (_, v)| acc.axpy(1.0, v));
        sum.max_diff(&self.position)
    }

    /// `max |x̃_0 - I/(m+1)|`.
    pub fn center_offset(&self) -> f64 {
        let d = self.x0.dim();
        self.x0.max_diff(&QMatrix::identity(d, self.x0.c()).scale(1.0 / d as f64))
    }
}

/// Decomposition from the closed-form Laplace iterates at a chart point.
///
/// Order 2 uses `x̃_u = (Δ²x̃ - λ_v Δx̃)/(λ_u(λ_u - λ_v))` and its mirror; order 3
/// (class B) returns only the constant part, from the closed-form `Δ³x̃`.
pub fn spectral_decomposition(chart: &Chart, u: &[f64], coeffs: &TypeCoefficients) -> Result<SpectralDecomposition> {
    let frame = shape_operator(chart, u)?;
    let cf = closed_form_fields(&frame)?;
    let x = cf.sums.position.clone();
    match order_of(coeffs)? {
        1 => {
            let l = coeffs.lambda_u().ok_or_else(|| Error::Contract("missing eigenvalue".into()))?;
            let xu = cf.laplacian.scale(1.0 / l);
            Ok(SpectralDecomposition { x0: x.axpy(-1.0, &xu), components: vec![(l, xu)], position: x })
        }
        2 => {
            let (lu, lv) = (coeffs.eigenvalues[0], coeffs.eigenvalues[1]);
            if (lu - lv).abs() <= 1e-12 * lu.abs().max(lv.abs()) {
                return Err(Error::Degenerate(format!("coincident eigenvalues {lu} and {lv}")));
            }
            let xu = cf.bilaplacian.axpy(-lv, &cf.laplacian).scale(1.0 / (lu * (lu - lv)));
            let xv = cf.bilaplacian.axpy(-lu, &cf.laplacian).scale(1.0 / (lv * (lv - lu)));
            let x0 = x.axpy(-1.0, &xu).axpy(-1.0, &xv);
            Ok(SpectralDecomposition { x0, components: vec![(lu, xu), (lv, xv)], position: x })
        }
        _ => {
            let ModelClass::B { alpha } = model_class(&chart.spec) else {
                return Err(Error::Contract("order-3 decomposition needs a class-B model".into()));
            };
            let b = class_b_fields(&frame_sums(&frame), alpha, chart.c(), chart.m());
            let (p, q, r) = (coeff(coeffs.p, "p")?, coeff(coeffs.q, "q")?, coeff(coeffs.r, "r")?);
            let op = b.trilaplacian.axpy(p, &b.bilaplacian).axpy(q, &b.laplacian);
            let x0 = x.axpy(1.0 / r, &op);
            let rest = x.axpy(-1.0, &x0);
            Ok(SpectralDecomposition { x0, components: vec![(f64::NAN, rest)], position: x })
        }
    }
}

/// `max |Δx̃_λ - λ x̃_λ| / max |λ x̃_λ|` for component `index`, with `Δ` from
/// the finite-difference oracle.
pub fn eigen_residual(chart: &Chart, u: &[f64], coeffs: &TypeCoefficients, index: usize, cfg: &FdConfig) -> Result<f64> {
    let pick = |p: &[f64]| -> Result<DVector<f64>> {
        let d = spectral_decomposition(chart, p, coeffs)?;
        let (_, v) = d
            .components
            .get(index)
            .ok_or_else(|| Error::Contract(format!("no component {index}")))?;
        Ok(DVector::from_vec(v.to_reals()))
    };
    let lambda = spectral_decomposition(chart, u, coeffs)?.components[index].0;
    let fd = laplace_beltrami(&pick, chart, u, cfg)?;
    let want = pick(u)? * lambda;
    Ok((&fd - &want).amax() / want.amax())
}
