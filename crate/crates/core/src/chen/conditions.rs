//! Algebraic consistency conditions on `(a, b)` for a 2-type hypersurface with
//! constant principal curvatures, written in the curvature scalars.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::hypersurface::CurvatureScalars;

/// Absolute tolerance for the scalar conditions.
pub const CONDITION_TOL: f64 = 1e-9;

/// Residuals of the scalar 2-type conditions for given `(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub a: f64,
    pub b: f64,
    /// `α_q² + 4c ≠ 0` for every `q`, so the partner curvatures exist.
    pub hypothesis_holds: bool,
    /// One residual per `α_k`.
    pub c1: Vec<f64>,
    /// One residual per distinct `D` curvature `τ`.
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
    /// Difference condition, one residual per `(τ, α_k)` pair.
    pub difference: Vec<f64>,
    /// Covariant-derivative residual of `A` for class-A models, when measured.
    pub class_a: Option<f64>,
    pub class_a_tolerance: f64,
    /// Type-equation residual, when measured.
    pub pde: Option<f64>,
    pub pde_tolerance: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ConditionReport {
    pub fn max_scalar_residual(&self) -> f64 {
        self.c1
            .iter()
            .chain(&self.c2)
            .chain(&self.c3)
            .chain(&self.difference)
            .fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn with_class_a(mut self, residual: f64, tolerance: f64) -> Self {
        self.class_a = Some(residual);
        self.class_a_tolerance = tolerance;
        self.refresh();
        self
    }

    pub fn with_pde(mut self, residual: f64, tolerance: f64) -> Self {
        self.pde = Some(residual);
        self.pde_tolerance = tolerance;
        self.refresh();
        self
    }

    fn refresh(&mut self) {
        let scalar_ok = self.hypothesis_holds && self.max_scalar_residual() <= self.tolerance;
        let class_a_ok = self.class_a.is_none_or(|r| r <= self.class_a_tolerance);
        let pde_ok = self.pde.is_none_or(|r| r <= self.pde_tolerance);
        self.pass = scalar_ok && class_a_ok && pde_ok;
    }
}

/// Linear rows `coef_a · a + coef_b · b = rhs` of the conditions.
struct Row {
    coef_a: f64,
    coef_b: f64,
    rhs: f64,
}

impl Row {
    fn residual(&self, a: f64, b: f64) -> f64 {
        self.coef_a * a + self.coef_b * b - self.rhs
    }
}

struct Rows {
    c1: Vec<Row>,
    c2: Vec<Row>,
    c3: Vec<Row>,
    difference: Vec<Row>,
    hypothesis_holds: bool,
}

fn rows(s: &CurvatureScalars) -> Rows {
    let (c, n, f, f2) = (s.c, s.n as f64, s.f, s.f2);
    let (sa, sa2) = (s.sum_alpha(), s.sum_alpha_sq());
    let hypothesis_holds = !s.partners_undefined && s.alpha.iter().all(|a| (a * a + 4.0 * c).abs() > 1e-9);
    let trace_term = f * (f2 + c * (3.0 * n + 7.0)) - 4.0 * c * sa;

    let c1 = s
        .alpha
        .iter()
        .map(|ak| Row {
            coef_a: 2.0 * c * (n + 3.0) + ak * f,
            coef_b: -1.0,
            rhs: 4.0 * (n + 1.0) * (n + 6.0) + ak * trace_term - 4.0 * c * f2 + 4.0 * c * (f * sa + sa2),
        })
        .collect();

    let mut c2 = Vec::new();
    let mut c3 = Vec::new();
    let mut difference = Vec::new();
    for (i, (tau, _)) in s.tau.iter().enumerate() {
        let tau = *tau;
        let (st, st2) = s.partners[i]
            .iter()
            .fold((0.0, 0.0), |(a, b), p| p.map_or((f64::NAN, f64::NAN), |v| (a + v, b + v * v)));
        let partner_term = f * (tau + st) + tau * tau + st2;
        c2.push(Row {
            coef_a: 2.0 * c * (n + 4.0) + tau * f,
            coef_b: -1.0,
            rhs: 4.0 * (n * n + 8.0 * n + 13.0) + 4.0 * c * partner_term + 2.0 * c * f * f + trace_term * tau,
        });
        c3.push(Row {
            coef_a: f + 2.0 * tau,
            coef_b: 0.0,
            rhs: trace_term
                + 4.0 * tau * partner_term
                + 2.0 * tau * (2.0 * f2 + f * f + 2.0 * c * (n + 7.0) - 2.0 * f * sa - 2.0 * sa2),
        });
        for ak in &s.alpha {
            difference.push(Row {
                coef_a: 2.0 * c + (tau - ak) * f,
                coef_b: 0.0,
                rhs: 4.0 * (n + 7.0) + 2.0 * c * f * f + 4.0 * c * f2 + 4.0 * c * partner_term + trace_term * (tau - ak)
                    - 4.0 * c * (f * sa + sa2),
            });
        }
    }
    Rows { c1, c2, c3, difference, hypothesis_holds }
}

/// Residuals of every scalar condition at `(a, b)`.
pub fn condition_residuals(s: &CurvatureScalars, a: f64, b: f64) -> ConditionReport {
    let r = rows(s);
    let eval = |v: &[Row]| v.iter().map(|row| row.residual(a, b).abs()).collect::<Vec<_>>();
    let mut report = ConditionReport {
        a,
        b,
        hypothesis_holds: r.hypothesis_holds,
        c1: eval(&r.c1),
        c2: eval(&r.c2),
        c3: eval(&r.c3),
        difference: eval(&r.difference),
        class_a: None,
        class_a_tolerance: 0.0,
        pde: None,
        pde_tolerance: 0.0,
        tolerance: CONDITION_TOL,
        pass: false,
    };
    report.refresh();
    report
}

/// Least-squares `(a, b)` from all scalar conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSolve {
    pub a: f64,
    pub b: f64,
    /// Largest absolute residual at the solution.
    pub residual: f64,
    /// Largest right-hand side magnitude, at least 1.
    pub scale: f64,
    /// `residual <= CONDITION_TOL * scale`.
    pub consistent: bool,
}

pub fn solve_conditions(s: &CurvatureScalars) -> Option<ConditionSolve> {
    let r = rows(s);
    if !r.hypothesis_holds {
        return None;
    }
    let all: Vec<&Row> = r.c1.iter().chain(&r.c2).chain(&r.c3).chain(&r.difference).collect();
    let mat = DMatrix::from_fn(all.len(), 2, |i, j| if j == 0 { all[i].coef_a } else { all[i].coef_b });
    let rhs = DVector::from_iterator(all.len(), all.iter().map(|row| row.rhs));
    let sol = mat.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let (a, b) = (sol[0], sol[1]);
    let residual = all.iter().fold(0.0f64, |m, row| m.max(row.residual(a, b).abs()));
    let scale = all.iter().fold(1.0f64, |m, row| m.max(row.rhs.abs()));
    Some(ConditionSolve { a, b, residual, scale, consistent: residual <= CONDITION_TOL * scale })
}
