//! Finite-difference Laplace–Beltrami operator on coordinate charts.
//!
//! Sign convention: `Δ = -(1/√g) ∂_i(√g g^{ij} ∂_j)`, so the Laplacian is a
//! nonnegative operator and the first eigenvalue of the unit round `S^n` is `+n`.
//! Metric derivatives are taken by central differences of the metric map.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypersurface::{Chart, TangentFrame};

/// Finite-difference settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub h: f64,
    pub richardson_levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { h: 1e-3, richardson_levels: 1 }
    }
}

impl FdConfig {
    pub fn new(h: f64, richardson_levels: usize) -> Result<Self> {
        if !(1e-5..=1e-1).contains(&h) {
            return Err(Error::Spec(format!("finite-difference step {h} outside [1e-5, 1e-1]")));
        }
        if richardson_levels > 3 {
            return Err(Error::Spec("at most 3 Richardson levels".into()));
        }
        Ok(Self { h, richardson_levels })
    }

    /// Largest coordinate offset touched by one Laplacian evaluation.
    pub fn reach(&self) -> f64 {
        self.h
    }
}

/// Induced metric data at one coordinate point.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricPatch {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub sqrt_det: f64,
}

impl MetricPatch {
    pub fn from_metric(g: DMatrix<f64>) -> Result<Self> {
        let chol = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Chart("metric is not positive definite".into()))?;
        let sqrt_det = chol.l().diagonal().product();
        let g_inv = chol.inverse();
        Ok(Self { g, g_inv, sqrt_det })
    }
}

/// A coordinate chart carrying a Riemannian metric.
pub trait MetricChart {
    fn dim(&self) -> usize;
    fn metric(&self, u: &[f64]) -> Result<DMatrix<f64>>;
    /// Half-width of the coordinate box on which the chart may be evaluated.
    fn domain(&self) -> f64;
}

impl MetricChart for Chart {
    fn dim(&self) -> usize {
        self.n()
    }

    fn metric(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        Ok(TangentFrame::new(self, u)?.metric)
    }

    fn domain(&self) -> f64 {
        self.domain
    }
}

/// `g_ij = Re Ψ(P_H ∂_i ẑ, P_H ∂_j ẑ)`.
pub fn induced_metric(chart: &Chart, u: &[f64]) -> Result<MetricPatch> {
    MetricPatch::from_metric(chart.metric(u)?)
}

/// Real vector-valued field on chart coordinates.
pub trait Field: Fn(&[f64]) -> Result<DVector<f64>> + Sync {}
impl<T: Fn(&[f64]) -> Result<DVector<f64>> + Sync> Field for T {}

/// `x̃ = Φ(ẑ(u))` as a real vector (row-major quaternion entries).
pub fn position_field(chart: &Chart) -> impl Field + '_ {
    move |u: &[f64]| {
        let z = chart.lift(u);
        Ok(DVector::from_vec(crate::quaternion::projector_bilinear(&z, &z).to_reals()))
    }
}

fn check_stencil<M: MetricChart + ?Sized>(chart: &M, u: &[f64], reach: f64) -> Result<()> {
    if u.len() != chart.dim() {
        return Err(Error::Dimension(format!("expected {} coordinates, got {}", chart.dim(), u.len())));
    }
    let worst = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if worst + reach > chart.domain() {
        return Err(Error::Domain(format!(
            "stencil reaches {} beyond chart half-width {}",
            worst + reach,
            chart.domain()
        )));
    }
    Ok(())
}

fn offset(u: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut p = u.to_vec();
    for (i, s) in moves {
        p[*i] += s;
    }
    p
}

/// Plain second-order central-difference Laplacian at step `h`.
fn laplacian_at_step<M, F>(field: &F, chart: &M, u: &[f64], h: f64) -> Result<DVector<f64>>
where
    M: MetricChart + ?Sized,
    F: Field + ?Sized,
{
    let n = chart.dim();
    let patch = MetricPatch::from_metric(chart.metric(u)?)?;
    let gi = &patch.g_inv;

    // Metric derivatives and the drift b^j = ∂_i g^{ij} + g^{ij} ∂_i log √g.
    let mut drift = DVector::<f64>::zeros(n);
    for i in 0..n {
        let gp = chart.metric(&offset(u, &[(i, h)]))?;
        let gm = chart.metric(&offset(u, &[(i, -h)]))?;
        let dg = (gp - gm) / (2.0 * h);
        let dginv = -(gi * &dg * gi);
        let dlog = 0.5 * (gi * &dg).trace();
        for j in 0..n {
            drift[j] += dginv[(i, j)] + gi[(i, j)] * dlog;
        }
    }

    let f0 = field(u)?;
    let mut out = DVector::<f64>::zeros(f0.len());
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let fp = field(&offset(u, &[(i, h)]))?;
        let fm = field(&offset(u, &[(i, -h)]))?;
        out += (&fp - &f0 * 2.0 + &fm) * (gi[(i, i)] / (h * h));
        grad.push((fp - fm) / (2.0 * h));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let w = gi[(i, j)];
            if w.abs() < 1e-300 {
                continue;
            }
            let fpp = field(&offset(u, &[(i, h), (j, h)]))?;
            let fpm = field(&offset(u, &[(i, h), (j, -h)]))?;
            let fmp = field(&offset(u, &[(i, -h), (j, h)]))?;
            let fmm = field(&offset(u, &[(i, -h), (j, -h)]))?;
            out += (fpp - fpm - fmp + fmm) * (2.0 * w / (4.0 * h * h));
        }
    }
    for (j, gj) in grad.iter().enumerate() {
        out += gj * drift[j];
    }
    Ok(-out)
}

/// `ΔF(u)` with central differences and Richardson extrapolation.
pub fn laplace_beltrami<M, F>(field: &F, chart: &M, u: &[f64], cfg: &FdConfig) -> Result<DVector<f64>>
where
    M: MetricChart + ?Sized,
    F: Field + ?Sized,
{
    check_stencil(chart, u, 2.0 * cfg.reach())?;
    let levels = cfg.richardson_levels;
    let mut table: Vec<DVector<f64>> = (0..=levels)
        .map(|l| laplacian_at_step(field, chart, u, cfg.h / f64::powi(2.0, l as i32)))
        .collect::<Result<_>>()?;
    for k in 1..=levels {
        let factor = f64::powi(4.0, k as i32);
        for l in (k..=levels).rev() {
            table[l] = (&table[l] * factor - &table[l - 1]) / (factor - 1.0);
        }
    }
    Ok(table.pop().expect("nonempty table"))
}

/// `Δ^k F(u)` by nesting the finite-difference operator.
pub fn iterated_laplacian<M, F>(
    field: &F,
    chart: &M,
    u: &[f64],
    k: usize,
    cfg: &FdConfig,
) -> Result<DVector<f64>>
where
    M: MetricChart + Sync + ?Sized,
    F: Field + ?Sized,
{
    match k {
        0 => field(u),
        1 => laplace_beltrami(field, chart, u, cfg),
        _ => {
            let inner = |p: &[f64]| iterated_laplacian(field, chart, p, k - 1, cfg);
            laplace_beltrami(&inner, chart, u, cfg)
        }
    }
}

/// Unit round sphere `S^n` in the chart `u ↦ (u, √(1 - |u|²))`.
#[derive(Clone, Copy, Debug)]
pub struct RoundSphereChart {
    pub n: usize,
}

impl RoundSphereChart {
    pub fn embed(&self, u: &[f64]) -> Vec<f64> {
        let s: f64 = u.iter().map(|x| x * x).sum();
        let mut p = u.to_vec();
        p.push((1.0 - s).sqrt());
        p
    }
}

impl MetricChart for RoundSphereChart {
    fn dim(&self) -> usize {
        self.n
    }

    fn metric(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let s: f64 = u.iter().map(|x| x * x).sum();
        if s >= 1.0 {
            return Err(Error::Domain("outside the hemisphere chart".into()));
        }
        let w = 1.0 - s;
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| {
            f64::from(u8::from(i == j)) + u[i] * u[j] / w
        }))
    }

    fn domain(&self) -> f64 {
        0.5
    }
}
