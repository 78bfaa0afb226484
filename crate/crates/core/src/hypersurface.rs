//! Model hypersurfaces: explicit charts through lifts to the quadric, unit
//! normals, shape operators, principal curvatures and the `D`/`D⊥` split.
//!
//! Every chart is centred at a base point chosen by a seeded generator, so
//! sampling different seeds samples the whole hypersurface. Lift derivatives
//! are exact (forward-mode dual numbers); only the Laplace oracle uses finite
//! differences.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen, U1};
use num_dual::{Derivative, Dual2DVec64, Dual2Vec, DualDVec64, DualNum};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{
    cs, curvature_tensor, horizontal_part, push_tangent_at, CanonicalTriple, SpaceFormPoint,
};
use crate::error::{Error, Result};
use crate::quaternion::{form_weight, projector_bilinear, trace_metric_unchecked, QMatrix, QVector};
use crate::sampling::{gaussian, gaussian_vec, rng};

/// Absolute gap used to cluster principal curvatures.
pub const CLUSTER_GAP: f64 = 1e-4;

/// Half-width of the coordinate box on which charts are used.
pub const CHART_DOMAIN: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// Tubes about ℍP^k in ℍP^m (geodesic spheres for k = 0).
    P1k,
    /// Tubes about ℂP^m in ℍP^m.
    P2,
    /// Tubes about ℍH^k in ℍH^m (geodesic spheres for k = 0).
    H1k,
    /// Tubes about ℂH^m in ℍH^m.
    H2,
    /// Horospheres of ℍH^m.
    H3,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::P1k, Family::P2, Family::H1k, Family::H2, Family::H3];

    pub fn c(self) -> f64 {
        match self {
            Family::P1k | Family::P2 => 1.0,
            _ => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::P1k => "p1k",
            Family::P2 => "p2",
            Family::H1k => "h1k",
            Family::H2 => "h2",
            Family::H3 => "h3",
        }
    }

    pub fn has_k(self) -> bool {
        matches!(self, Family::P1k | Family::H1k)
    }

    pub fn has_radius(self) -> bool {
        self != Family::H3
    }

    /// Upper end of the legal radius interval.
    pub fn max_radius(self) -> f64 {
        match self {
            Family::P1k => FRAC_PI_2,
            Family::P2 => FRAC_PI_4,
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1k" => Ok(Family::P1k),
            "p2" => Ok(Family::P2),
            "h1k" => Ok(Family::H1k),
            "h2" => Ok(Family::H2),
            "h3" => Ok(Family::H3),
            other => Err(Error::Spec(format!("unknown family '{other}'"))),
        }
    }
}

/// A member of one of the model families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub m: usize,
    pub k: usize,
    pub r: f64,
}

/// Principal curvatures and multiplicities of a model hypersurface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCurvatures {
    pub mu: f64,
    pub nu: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub m_mu: usize,
    pub m_nu: usize,
    pub m_alpha1: usize,
    pub m_alpha2: usize,
}

impl ModelCurvatures {
    /// Merged `(value, multiplicity)` list, ascending, zero multiplicities dropped.
    pub fn spectrum(&self) -> Vec<(f64, usize)> {
        let mut parts: Vec<(f64, usize)> = [
            (self.mu, self.m_mu),
            (self.nu, self.m_nu),
            (self.alpha1, self.m_alpha1),
            (self.alpha2, self.m_alpha2),
        ]
        .into_iter()
        .filter(|(_, k)| *k > 0)
        .collect();
        parts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, usize)> = Vec::new();
        for (v, k) in parts {
            match out.last_mut() {
                Some(last) if (last.0 - v).abs() < CLUSTER_GAP => last.1 += k,
                _ => out.push((v, k)),
            }
        }
        out
    }

    /// Principal curvatures on `D⊥`, ordered with the simple one first.
    pub fn alphas(&self) -> [f64; 3] {
        if self.m_alpha2 == 0 {
            [self.alpha1; 3]
        } else {
            [self.alpha1, self.alpha2, self.alpha2]
        }
    }
}

impl FamilySpec {
    pub fn new(family: Family, m: usize, k: usize, r: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Spec(format!("m must be >= 2, got {m}")));
        }
        if family.has_k() && k > m - 1 {
            return Err(Error::Spec(format!("k must lie in 0..={}, got {k}", m - 1)));
        }
        let k = if family.has_k() { k } else { 0 };
        let r = if family.has_radius() { r } else { 0.0 };
        if family.has_radius() && !(r > 0.0 && r < family.max_radius() && r.is_finite()) {
            return Err(Error::Spec(format!(
                "radius {r} outside (0, {}) for {family}",
                family.max_radius()
            )));
        }
        Ok(Self { family, m, k, r })
    }

    pub fn c(&self) -> f64 {
        self.family.c()
    }

    pub fn n(&self) -> usize {
        4 * self.m - 1
    }

    /// Quaternionic dimension of the second block for tubes about ℍQ^k.
    pub fn l(&self) -> usize {
        self.m - self.k - 1
    }

    /// Principal curvatures and multiplicities of the model.
    pub fn model_curvatures(&self) -> ModelCurvatures {
        let (m, k, r) = (self.m, self.k, self.r);
        match self.family {
            Family::P1k => ModelCurvatures {
                mu: 1.0 / r.tan(),
                nu: -r.tan(),
                alpha1: 2.0 / (2.0 * r).tan(),
                alpha2: f64::NAN,
                m_mu: 4 * (m - k - 1),
                m_nu: 4 * k,
                m_alpha1: 3,
                m_alpha2: 0,
            },
            Family::P2 => ModelCurvatures {
                mu: 1.0 / r.tan(),
                nu: -r.tan(),
                alpha1: 2.0 / (2.0 * r).tan(),
                alpha2: -2.0 * (2.0 * r).tan(),
                m_mu: 2 * (m - 1),
                m_nu: 2 * (m - 1),
                m_alpha1: 1,
                m_alpha2: 2,
            },
            Family::H1k => ModelCurvatures {
                mu: 1.0 / r.tanh(),
                nu: r.tanh(),
                alpha1: 2.0 / (2.0 * r).tanh(),
                alpha2: f64::NAN,
                m_mu: 4 * (m - k - 1),
                m_nu: 4 * k,
                m_alpha1: 3,
                m_alpha2: 0,
            },
            Family::H2 => ModelCurvatures {
                mu: 1.0 / r.tanh(),
                nu: r.tanh(),
                alpha1: 2.0 / (2.0 * r).tanh(),
                alpha2: 2.0 * (2.0 * r).tanh(),
                m_mu: 2 * (m - 1),
                m_nu: 2 * (m - 1),
                m_alpha1: 1,
                m_alpha2: 2,
            },
            Family::H3 => ModelCurvatures {
                mu: 1.0,
                nu: f64::NAN,
                alpha1: 2.0,
                alpha2: f64::NAN,
                m_mu: 4 * (m - 1),
                m_nu: 0,
                m_alpha1: 3,
                m_alpha2: 0,
            },
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::P1k | Family::H1k => {
                write!(f, "{}(m={}, k={}, r={})", self.family, self.m, self.k, self.r)
            }
            Family::H3 => write!(f, "h3(m={})", self.m),
            _ => write!(f, "{}(m={}, r={})", self.family, self.m, self.r),
        }
    }
}

/// Scalar type accepted by the generic lift: `f64` or a forward-mode dual number.
pub trait LiftScalar: DualNum<Primitive = f64> {}
impl<T: DualNum<Primitive = f64>> LiftScalar for T {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum ChartKind {
    /// Lift `(cos_c r · u(s), sin_c r · v(t))` over the block split `k+1 | l+1`.
    Product { u0: Vec<f64>, e: Vec<Vec<f64>>, v0: Vec<f64>, f: Vec<Vec<f64>> },
    /// Lift `cos_c r · U + sin_c r · V j` with `U, V ∈ ℂ^{m+1}` and `Σ c_a V_a U_a = 0`.
    Complex { u0: Vec<f64>, e: Vec<Vec<f64>>, v0: Vec<f64>, f: Vec<Vec<f64>> },
    /// Horosphere `z = a ℓ - ℓ' + w` with `ℓ = e_0 + e_1`, `ℓ' = (e_0 - e_1)/2`.
    Horo { eps0: [f64; 3], w0: Vec<f64> },
}

/// Coordinate parameterization `u ↦ ẑ(u)` of a model hypersurface through its lift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub spec: FamilySpec,
    kind: ChartKind,
    pub domain: f64,
}

/// Orthonormal basis of the Euclidean complement of `constraints` in ℝ^dim.
fn complement_basis(constraints: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
    fn orth(mut v: Vec<f64>, against: &[Vec<f64>]) -> Vec<f64> {
        for _ in 0..2 {
            for b in against {
                let d = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        v
    }
    let mut cons: Vec<Vec<f64>> = Vec::new();
    for c in constraints {
        let v = orth(c.clone(), &cons);
        let n = dot(&v, &v).sqrt();
        if n > 1e-10 {
            cons.push(v.iter().map(|x| x / n).collect());
        }
    }
    let target = dim - cons.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(target);
    for idx in 0..dim {
        if out.len() == target {
            break;
        }
        let mut v = vec![0.0; dim];
        v[idx] = 1.0;
        let v = orth(orth(v, &cons), &out);
        let n = dot(&v, &v).sqrt();
        if n > 1e-6 {
            out.push(v.iter().map(|x| x / n).collect());
        }
    }
    out
}

fn weighted(v: &[f64], weights: impl Fn(usize) -> f64, per: usize) -> Vec<f64> {
    v.iter().enumerate().map(|(i, x)| x * weights(i / per)).collect()
}

/// Complex `i · v` for a complex vector stored as (re, im) pairs.
fn times_i(v: &[f64]) -> Vec<f64> {
    v.chunks(2).flat_map(|p| [-p[1], p[0]]).collect()
}

/// Complex conjugate of a complex vector stored as (re, im) pairs.
fn conj_c(v: &[f64]) -> Vec<f64> {
    v.chunks(2).flat_map(|p| [p[0], -p[1]]).collect()
}

impl Chart {
    /// Chart of `spec` centred at a base point drawn from `seed`.
    pub fn new(spec: FamilySpec, seed: u64) -> Self {
        let mut g = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
        let kind = match spec.family {
            Family::P1k | Family::H1k => Self::product_base(&spec, &mut g),
            Family::P2 | Family::H2 => Self::complex_base(&spec, &mut g),
            Family::H3 => {
                let eps0 = [0.3 * gaussian(&mut g), 0.3 * gaussian(&mut g), 0.3 * gaussian(&mut g)];
                let w = gaussian_vec(&mut g, 4 * (spec.m - 1));
                let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                let rad = 0.6 * g.gen::<f64>();
                ChartKind::Horo { eps0, w0: w.iter().map(|x| rad * x / wn).collect() }
            }
        };
        Self { spec, kind, domain: CHART_DOMAIN }
    }

    fn product_base<R: Rng>(spec: &FamilySpec, g: &mut R) -> ChartKind {
        let c = spec.c();
        let (k, l) = (spec.k, spec.l());
        let dim_a = 4 * (k + 1);
        let u0 = if c > 0.0 {
            let v = gaussian_vec(g, dim_a);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / n).collect::<Vec<_>>()
        } else {
            let rho = 0.8 * g.gen::<f64>();
            let q = gaussian_vec(g, 4);
            let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut u: Vec<f64> = q.iter().map(|x| rho.cosh() * x / qn).collect();
            if k > 0 {
                let w = gaussian_vec(g, 4 * k);
                let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                u.extend(w.iter().map(|x| rho.sinh() * x / wn));
            }
            u
        };
        // Tangent space of the block quadric at u0: Re Ψ(s, u0) = 0.
        let e = complement_basis(&[weighted(&u0, |j| form_weight(c, j), 4)], dim_a);
        let dim_b = 4 * (l + 1);
        let v = gaussian_vec(g, dim_b);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v0: Vec<f64> = v.iter().map(|x| x / n).collect();
        // ℍ-orthogonal complement of v0: Re Ψ(t, ι v0) = 0 for ι ∈ {1, i, j, k}.
        let qv0 = QVector::from_reals(&v0, 1.0);
        let cons: Vec<Vec<f64>> = [
            crate::quaternion::Quaternion::ONE,
            crate::quaternion::Quaternion::I,
            crate::quaternion::Quaternion::J,
            crate::quaternion::Quaternion::K,
        ]
        .iter()
        .map(|iota| qv0.left_mul(*iota).to_reals())
        .collect();
        let f = complement_basis(&cons, dim_b);
        ChartKind::Product { u0, e, v0, f }
    }

    fn complex_base<R: Rng>(spec: &FamilySpec, g: &mut R) -> ChartKind {
        let c = spec.c();
        let m = spec.m;
        let dim = 2 * (m + 1);
        let wc = |a: usize| form_weight(c, a);
        let u0 = if c > 0.0 {
            let v = gaussian_vec(g, dim);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / n).collect::<Vec<_>>()
        } else {
            let rho = 0.8 * g.gen::<f64>();
            let phi = std::f64::consts::TAU * g.gen::<f64>();
            let y = gaussian_vec(g, 2 * m);
            let yn = y.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut u = vec![rho.cosh() * phi.cos(), rho.cosh() * phi.sin()];
            u.extend(y.iter().map(|x| rho.sinh() * x / yn));
            u
        };
        // Complex c-orthogonal complement of U0.
        let e = complement_basis(
            &[weighted(&u0, wc, 2), weighted(&times_i(&u0), wc, 2)],
            dim,
        );
        let ubar = conj_c(&u0);
        let raw = gaussian_vec(g, dim);
        let v0 = complex_project_normalize(&raw, &ubar, c);
        let f = complement_basis(
            &[
                weighted(&ubar, wc, 2),
                weighted(&times_i(&ubar), wc, 2),
                weighted(&v0, wc, 2),
            ],
            dim,
        );
        ChartKind::Complex { u0, e, v0, f }
    }

    pub fn c(&self) -> f64 {
        self.spec.c()
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    /// Number of real components of a lift.
    pub fn lift_len(&self) -> usize {
        4 * (self.spec.m + 1)
    }

    /// Real components of `ẑ(u)`, generic over the scalar type.
    pub fn lift_generic<D: LiftScalar>(&self, u: &[D]) -> Vec<D> {
        assert_eq!(u.len(), self.n(), "chart coordinate count");
        let c = self.c();
        let (co, si) = cs(c, self.spec.r);
        match &self.kind {
            ChartKind::Product { u0, e, v0, f } => {
                let na = e.len();
                let a = affine(u0, e, &u[..na]);
                let b = affine(v0, f, &u[na..]);
                let qa = weighted_norm_sqr(&a, |j| form_weight(c, j), 4);
                let qb = weighted_norm_sqr(&b, |_| 1.0, 4);
                let sa = (qa * c).sqrt().recip() * co;
                let sb = qb.sqrt().recip() * si;
                a.into_iter()
                    .map(|x| x * sa.clone())
                    .chain(b.into_iter().map(|x| x * sb.clone()))
                    .collect()
            }
            ChartKind::Complex { u0, e, v0, f } => {
                let ns = e.len();
                let wc = |a: usize| form_weight(c, a);
                let uu = affine(u0, e, &u[..ns]);
                let qu = weighted_norm_sqr(&uu, wc, 2);
                let su = (qu * c).sqrt().recip();
                let uu: Vec<D> = uu.into_iter().map(|x| x * su.clone()).collect();
                let vv = affine(v0, f, &u[ns..]);
                // Project onto the c-complement of conj(U): V - c ⟨V, Ū⟩_c Ū.
                let (mut pr, mut pi) = (D::from(0.0), D::from(0.0));
                for a in 0..=self.spec.m {
                    let w = wc(a);
                    let (vr, vi) = (&vv[2 * a], &vv[2 * a + 1]);
                    let (ur, ui) = (&uu[2 * a], &uu[2 * a + 1]);
                    // V_a · U_a (complex product, no conjugation).
                    pr += (vr.clone() * ur.clone() - vi.clone() * ui.clone()) * w;
                    pi += (vr.clone() * ui.clone() + vi.clone() * ur.clone()) * w;
                }
                let mut vp = vv.clone();
                for a in 0..=self.spec.m {
                    // Ū_a = (ur, -ui); coefficient (pr + i pi).
                    let (ur, ui) = (&uu[2 * a], &uu[2 * a + 1]);
                    let re = pr.clone() * ur.clone() + pi.clone() * ui.clone();
                    let im = pi.clone() * ur.clone() - pr.clone() * ui.clone();
                    vp[2 * a] -= re * c;
                    vp[2 * a + 1] -= im * c;
                }
                let qv = weighted_norm_sqr(&vp, wc, 2);
                let sv = qv.sqrt().recip();
                let mut out = Vec::with_capacity(self.lift_len());
                for a in 0..=self.spec.m {
                    out.push(uu[2 * a].clone() * co);
                    out.push(uu[2 * a + 1].clone() * co);
                    out.push(vp[2 * a].clone() * sv.clone() * si);
                    out.push(vp[2 * a + 1].clone() * sv.clone() * si);
                }
                out
            }
            ChartKind::Horo { eps0, w0 } => {
                let eps: Vec<D> = (0..3).map(|i| u[i].clone() + eps0[i]).collect();
                let w: Vec<D> = (0..w0.len()).map(|i| u[3 + i].clone() + w0[i]).collect();
                let w2 = w.iter().fold(D::from(0.0), |acc, x| acc + x.clone() * x.clone());
                let re_a = (w2 + 1.0) * (-0.5);
                let mut out = Vec::with_capacity(self.lift_len());
                out.push(re_a.clone() - 0.5);
                out.extend(eps.iter().cloned());
                out.push(re_a + 0.5);
                out.extend(eps.iter().cloned());
                out.extend(w);
                out
            }
        }
    }

    pub fn lift(&self, u: &[f64]) -> QVector {
        QVector::from_reals(&self.lift_generic(u), self.c())
    }

    /// Lift and its exact first partial derivatives.
    pub fn lift_d1(&self, u: &[f64]) -> (QVector, Vec<QVector>) {
        let n = self.n();
        let x: Vec<DualDVec64> =
            u.iter().enumerate().map(|(i, v)| DualDVec64::from_re(*v).derivative(n, i)).collect();
        let out = self.lift_generic(&x);
        let c = self.c();
        let z: Vec<f64> = out.iter().map(|d| d.re).collect();
        let mut parts = vec![vec![0.0; out.len()]; n];
        for (comp, d) in out.iter().enumerate() {
            if let Some(g) = &d.eps.0 {
                for i in 0..n {
                    parts[i][comp] = g[i];
                }
            }
        }
        (QVector::from_reals(&z, c), parts.iter().map(|p| QVector::from_reals(p, c)).collect())
    }

    /// Lift with exact first and second partial derivatives (row-major `n × n`).
    pub fn lift_d2(&self, u: &[f64]) -> (QVector, Vec<QVector>, Vec<QVector>) {
        let n = self.n();
        let x: Vec<Dual2DVec64> = u
            .iter()
            .enumerate()
            .map(|(i, v)| {
                Dual2Vec::new(*v, Derivative::derivative_generic(U1, Dyn(n), i), Derivative::none())
            })
            .collect();
        let out = self.lift_generic(&x);
        let c = self.c();
        let len = out.len();
        let z: Vec<f64> = out.iter().map(|d| d.re).collect();
        let mut d1 = vec![vec![0.0; len]; n];
        let mut d2 = vec![vec![0.0; len]; n * n];
        for (comp, d) in out.iter().enumerate() {
            if let Some(g) = &d.v1.0 {
                for i in 0..n {
                    d1[i][comp] = g[i];
                }
            }
            if let Some(h) = &d.v2.0 {
                for i in 0..n {
                    for j in 0..n {
                        d2[i * n + j][comp] = h[(i, j)];
                    }
                }
            }
        }
        (
            QVector::from_reals(&z, c),
            d1.iter().map(|p| QVector::from_reals(p, c)).collect(),
            d2.iter().map(|p| QVector::from_reals(p, c)).collect(),
        )
    }

    /// A horizontal vector at `ẑ(u)` with positive component along the chosen normal:
    /// toward the core for tubes, toward the centre at infinity for horospheres.
    pub fn inward_hint(&self, u: &[f64]) -> QVector {
        let z = self.lift(u);
        let raw = match &self.kind {
            ChartKind::Horo { .. } => {
                let mut reals = vec![0.0; self.lift_len()];
                reals[0] = 0.5;
                reals[4] = -0.5;
                QVector::from_reals(&reals, self.c())
            }
            _ => {
                let dr = 1e-6;
                let mut lo = self.clone();
                lo.spec.r -= dr;
                let mut hi = self.clone();
                hi.spec.r += dr;
                (&lo.lift(u) - &hi.lift(u)).scale(0.5 / dr)
            }
        };
        horizontal_part(&z, &raw)
    }

    /// Cosine of the distance from `[ẑ(u)]` to the complex core of a P2 tube,
    /// the maximum of `|Ψ(ẑ, w)|` over unit complex `w`.
    pub fn core_distance(&self, u: &[f64]) -> Result<f64> {
        if self.spec.family != Family::P2 {
            return Err(Error::Contract("core distance is implemented for P2 tubes".into()));
        }
        let z = self.lift(u);
        let d = 2 * (self.m() + 1);
        // z_a = p_a + q_a j with complex p, q gives |Ψ(z, w)|² = |⟨p, w⟩|² + |⟨q̄, w⟩|².
        let mut herm = DMatrix::<f64>::zeros(d, d);
        let p: Vec<f64> = z.entries.iter().flat_map(|q| [q.w, q.x]).collect();
        let qbar: Vec<f64> = z.entries.iter().flat_map(|q| [q.y, -q.z]).collect();
        for x in [&p, &qbar] {
            let xi = times_i(x);
            for y in [x, &xi] {
                herm += DVector::from_column_slice(y) * DVector::from_column_slice(y).transpose();
            }
        }
        Ok(SymmetricEigen::new(herm).eigenvalues.max().sqrt())
    }
}

fn affine<D: LiftScalar>(base: &[f64], basis: &[Vec<f64>], coords: &[D]) -> Vec<D> {
    let mut out: Vec<D> = base.iter().map(|b| D::from(*b)).collect();
    for (coef, dir) in coords.iter().zip(basis) {
        for (o, d) in out.iter_mut().zip(dir) {
            if *d != 0.0 {
                *o += coef.clone() * *d;
            }
        }
    }
    out
}

fn weighted_norm_sqr<D: LiftScalar>(x: &[D], weight: impl Fn(usize) -> f64, per: usize) -> D {
    x.iter()
        .enumerate()
        .fold(D::from(0.0), |acc, (i, v)| acc + v.clone() * v.clone() * weight(i / per))
}

fn complex_project_normalize(x: &[f64], ubar: &[f64], c: f64) -> Vec<f64> {
    let wc = |a: usize| form_weight(c, a);
    // ⟨x, Ū⟩_c = Σ w_a x_a conj(Ū_a).
    let (mut pr, mut pi) = (0.0, 0.0);
    for a in 0..x.len() / 2 {
        let (xr, xi, ur, ui) = (x[2 * a], x[2 * a + 1], ubar[2 * a], -ubar[2 * a + 1]);
        pr += wc(a) * (xr * ur - xi * ui);
        pi += wc(a) * (xr * ui + xi * ur);
    }
    let qq: f64 = (0..x.len() / 2)
        .map(|a| wc(a) * (ubar[2 * a].powi(2) + ubar[2 * a + 1].powi(2)))
        .sum();
    let mut v = x.to_vec();
    for a in 0..x.len() / 2 {
        let (ur, ui) = (ubar[2 * a], ubar[2 * a + 1]);
        v[2 * a] -= (pr * ur - pi * ui) / qq;
        v[2 * a + 1] -= (pr * ui + pi * ur) / qq;
    }
    let nn: f64 = (0..v.len() / 2).map(|a| wc(a) * (v[2 * a].powi(2) + v[2 * a + 1].powi(2))).sum();
    v.iter().map(|t| t / nn.sqrt()).collect()
}

/// Orthonormal tangent frame and unit normal at a chart point.
#[derive(Clone, Debug)]
pub struct TangentFrame {
    pub z: QVector,
    /// Horizontal parts of the coordinate derivatives `∂_i ẑ`.
    pub coord: Vec<QVector>,
    /// Raw coordinate derivatives of the lift.
    pub raw: Vec<QVector>,
    pub metric: DMatrix<f64>,
    /// Orthonormal tangent vectors `e_a`.
    pub frame: Vec<QVector>,
    /// `coord[i] = Σ_a t_to_e[(i, a)] e_a`.
    pub t_to_e: DMatrix<f64>,
    pub xi: QVector,
}

impl TangentFrame {
    pub fn new(chart: &Chart, u: &[f64]) -> Result<Self> {
        let (z, raw) = chart.lift_d1(u);
        Self::from_derivatives(chart, u, z, raw)
    }

    fn from_derivatives(chart: &Chart, u: &[f64], z: QVector, raw: Vec<QVector>) -> Result<Self> {
        let n = raw.len();
        let coord: Vec<QVector> = raw.iter().map(|d| horizontal_part(&z, d)).collect();
        let metric = DMatrix::from_fn(n, n, |i, j| coord[i].dot(&coord[j]));
        let chol = metric
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Chart("induced metric is not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Chart("singular induced metric".into()))?;
        // e_a = Σ_i (L^{-1})_{a i} coord_i, so coord_i = Σ_a L_{i a} e_a.
        let frame: Vec<QVector> = (0..n)
            .map(|a| {
                (0..n).fold(QVector::zeros(z.len(), z.c()), |acc, i| acc.axpy(linv[(a, i)], &coord[i]))
            })
            .collect();
        let mut xi = chart.inward_hint(u);
        for _ in 0..2 {
            for e in &frame {
                xi = xi.axpy(-xi.dot(e), e);
            }
        }
        let xn = xi.dot(&xi).sqrt();
        if xn < 1e-8 {
            return Err(Error::Chart("normal hint is tangent".into()));
        }
        let xi = xi.scale(1.0 / xn);
        Ok(Self { z, coord, raw, metric, frame, t_to_e: l, xi })
    }

    pub fn n(&self) -> usize {
        self.frame.len()
    }

    pub fn position(&self) -> QMatrix {
        projector_bilinear(&self.z, &self.z)
    }

    /// `dΦ(ξ)`.
    pub fn xi_pushed(&self) -> QMatrix {
        push_tangent_at(&self.z, &self.xi)
    }

    /// Vectors `U_q = -J_q ξ` for the standard triple.
    pub fn u_standard(&self) -> [QVector; 3] {
        let t = CanonicalTriple::standard();
        [1, 2, 3].map(|q| t.apply(q, &self.xi).scale(-1.0))
    }

    /// Coordinates of a horizontal vector in the orthonormal frame.
    pub fn coords_of(&self, v: &QVector) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.frame.iter().map(|e| e.dot(v)))
    }

    /// Vector with the given orthonormal-frame coordinates.
    pub fn vector_of(&self, coords: &DVector<f64>) -> QVector {
        self.frame
            .iter()
            .zip(coords.iter())
            .fold(QVector::zeros(self.z.len(), self.z.c()), |acc, (e, a)| acc.axpy(*a, e))
    }
}

/// Shape operator data at a chart point.
#[derive(Clone, Debug)]
pub struct ShapeFrame {
    pub tangent: TangentFrame,
    pub point: SpaceFormPoint,
    /// Shape operator in the orthonormal frame.
    pub a: DMatrix<f64>,
    /// Principal curvatures, ascending.
    pub eigenvalues: Vec<f64>,
    /// Principal directions (orthonormal-frame coordinates), matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    /// Clustered principal curvatures `(value, multiplicity)`.
    pub spectrum: Vec<(f64, usize)>,
    /// Quaternionic triple rotated so that the `U_q` are principal.
    pub triple: CanonicalTriple,
    /// `U_q = -J_q ξ` for the rotated triple.
    pub u: [QVector; 3],
    /// `α_q = ⟨A U_q, U_q⟩`.
    pub alpha: [f64; 3],
    /// Orthogonal projector onto `D⊥` in frame coordinates.
    pub dperp_projector: DMatrix<f64>,
}

/// Groups sorted values whose successive gaps are below `gap`.
pub fn cluster(sorted: &[f64], gap: f64) -> Vec<(f64, usize)> {
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for v in sorted {
        match groups.last_mut() {
            Some(g) if (v - g.last().unwrap()).abs() < gap => g.push(*v),
            _ => groups.push(vec![*v]),
        }
    }
    groups.into_iter().map(|g| (g.iter().sum::<f64>() / g.len() as f64, g.len())).collect()
}

fn symmetric_eigen_sorted(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let vals = idx.iter().map(|i| eig.eigenvalues[*i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Shape operator at `u`: `A X = -(∇̄_X ξ)^T`, computed from the exact second
/// derivatives of `x̃ = Φ ∘ ẑ` as `h_ij = ⟨dΦ(ξ), ∂_i ∂_j x̃⟩`.
pub fn shape_operator(chart: &Chart, u: &[f64]) -> Result<ShapeFrame> {
    let (z, raw, hess) = chart.lift_d2(u);
    let n = raw.len();
    let tangent = TangentFrame::from_derivatives(chart, u, z.clone(), raw)?;
    let xi_t = tangent.xi_pushed();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let second = projector_bilinear(&hess[i * n + j], &z)
                .axpy(1.0, &projector_bilinear(&tangent.raw[i], &tangent.raw[j]))
                .scale(2.0);
            let v = trace_metric_unchecked(&xi_t, &second);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    // h = L h_e Lᵀ with coord_i = Σ_a L_{ia} e_a.
    let linv = tangent.t_to_e.clone().try_inverse().expect("invertible frame");
    let a = &linv * h * linv.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let (eigenvalues, eigenvectors) = symmetric_eigen_sorted(a.clone());
    let spectrum = cluster(&eigenvalues, CLUSTER_GAP);

    // Rotate the triple so that the U_q diagonalize A on D⊥.
    let u_std = tangent.u_standard();
    let uc: Vec<DVector<f64>> = u_std.iter().map(|v| tangent.coords_of(v)).collect();
    let m3 = DMatrix::from_fn(3, 3, |p, q| (uc[p].transpose() * &a * &uc[q])[(0, 0)]);
    let (vals3, mut vecs3) = symmetric_eigen_sorted(m3);
    let order = simple_first_order(&vals3);
    vecs3 = DMatrix::from_fn(3, 3, |r, c| vecs3[(r, order[c])]);
    if vecs3.determinant() < 0.0 {
        for r in 0..3 {
            vecs3[(r, 2)] = -vecs3[(r, 2)];
        }
    }
    let rot = [0, 1, 2].map(|q| [0, 1, 2].map(|p| vecs3[(p, q)]));
    let triple = CanonicalTriple::standard().rotated(rot);
    let uq = [1, 2, 3].map(|q| triple.apply(q, &tangent.xi).scale(-1.0));
    let alpha = [0, 1, 2].map(|q| {
        let cq = tangent.coords_of(&uq[q]);
        (cq.transpose() * &a * &cq)[(0, 0)]
    });
    let mut dperp_projector = DMatrix::<f64>::zeros(n, n);
    for v in &uq {
        let cq = tangent.coords_of(v);
        dperp_projector += &cq * cq.transpose();
    }
    let point = SpaceFormPoint { p: tangent.position(), lift: z };
    Ok(ShapeFrame {
        tangent,
        point,
        a,
        eigenvalues,
        eigenvectors,
        spectrum,
        triple,
        u: uq,
        alpha,
        dperp_projector,
    })
}

/// Ordering of three ascending values that puts a value of multiplicity one first
/// when the other two coincide.
fn simple_first_order(vals: &[f64]) -> [usize; 3] {
    let close = |a: f64, b: f64| (a - b).abs() < CLUSTER_GAP;
    if close(vals[0], vals[1]) && !close(vals[1], vals[2]) {
        [2, 0, 1]
    } else {
        [0, 1, 2]
    }
}

impl ShapeFrame {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Orthonormal basis of `D` in frame coordinates.
    pub fn d_basis(&self) -> Vec<DVector<f64>> {
        let n = self.n();
        let p = DMatrix::<f64>::identity(n, n) - &self.dperp_projector;
        let (vals, vecs) = symmetric_eigen_sorted(p);
        (0..n).filter(|i| vals[*i] > 0.5).map(|i| vecs.column(i).into_owned()).collect()
    }

    /// Shape operator restricted to `D`, in the basis of [`ShapeFrame::d_basis`].
    pub fn a_on_d(&self) -> DMatrix<f64> {
        let b = self.d_basis();
        DMatrix::from_fn(b.len(), b.len(), |i, j| (b[i].transpose() * &self.a * &b[j])[(0, 0)])
    }

    /// `max_q ‖A U_q - α_q U_q‖`.
    pub fn u_principal_residual(&self) -> f64 {
        (0..3)
            .map(|q| {
                let cq = self.tangent.coords_of(&self.u[q]);
                (&self.a * &cq - &cq * self.alpha[q]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max_{X ∈ D} ‖(A X)_{D⊥}‖` over an orthonormal basis of `D`.
    pub fn d_invariance_residual(&self) -> f64 {
        self.d_basis()
            .iter()
            .map(|x| (&self.dperp_projector * (&self.a * x)).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `‖A v - λ v‖` over the computed principal directions.
    pub fn eigen_residual(&self) -> f64 {
        (0..self.n())
            .map(|i| {
                let v = self.eigenvectors.column(i);
                (&self.a * v - v * self.eigenvalues[i]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Normal Jacobi operator `𝒦X = R̄(X, ξ)ξ` in frame coordinates, from the curvature tensor.
    pub fn normal_jacobi(&self) -> DMatrix<f64> {
        let t = CanonicalTriple::standard();
        let xi = &self.tangent.xi;
        let n = self.n();
        let cols: Vec<DVector<f64>> = self
            .tangent
            .frame
            .iter()
            .map(|e| self.tangent.coords_of(&curvature_tensor(&t, e, xi, xi)))
            .collect();
        DMatrix::from_fn(n, n, |r, c| cols[c][r])
    }
}

/// `‖𝒦A - A𝒦‖_F`.
pub fn commutator_residual(k: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    (k * a - a * k).norm()
}

pub fn curvature_adapted_residual(frame: &ShapeFrame) -> f64 {
    commutator_residual(&frame.normal_jacobi(), &frame.a)
}

/// Trace invariants, `D⊥` curvatures, clustered `D` spectrum and partner values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureScalars {
    pub c: f64,
    pub n: usize,
    pub f: f64,
    pub f2: f64,
    pub alpha: [f64; 3],
    pub tau: Vec<(f64, usize)>,
    /// `τ_q` for each `(τ, q)`; `None` when `α_q² + 4c = 0`.
    pub partners: Vec<[Option<f64>; 3]>,
    /// Largest distance from a partner value to the `D` spectrum.
    pub partner_gap: f64,
    /// Set when some `α_q² + 4c` vanishes and partners are undefined.
    pub partners_undefined: bool,
}

impl CurvatureScalars {
    pub fn sum_alpha(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn sum_alpha_sq(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum()
    }
}

/// Partner curvature `τ_q = (2c + α τ)/(2τ - α)`.
pub fn partner(c: f64, tau: f64, alpha: f64) -> Option<f64> {
    if (alpha * alpha + 4.0 * c).abs() < 1e-9 || (2.0 * tau - alpha).abs() < 1e-12 {
        None
    } else {
        Some((2.0 * c + alpha * tau) / (2.0 * tau - alpha))
    }
}

pub fn scalar_invariants(frame: &ShapeFrame) -> CurvatureScalars {
    let c = frame.point.c();
    let f = frame.a.trace();
    let f2 = (&frame.a * &frame.a).trace();
    let (dvals, _) = symmetric_eigen_sorted(frame.a_on_d());
    let tau = cluster(&dvals, CLUSTER_GAP);
    let mut partners_undefined = false;
    let mut partner_gap: f64 = 0.0;
    let partners: Vec<[Option<f64>; 3]> = tau
        .iter()
        .map(|(t, _)| {
            [0, 1, 2].map(|q| {
                let p = partner(c, *t, frame.alpha[q]);
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
    CurvatureScalars {
        c,
        n: frame.n(),
        f,
        f2,
        alpha: frame.alpha,
        tau,
        partners,
        partner_gap,
        partners_undefined,
    }
}

/// Matches clustered principal curvatures against the model table; returns the
/// largest value error, or `None` if the multiplicities differ.
pub fn curvature_deviation(frame: &ShapeFrame, spec: &FamilySpec) -> Option<f64> {
    let want = spec.model_curvatures().spectrum();
    if want.len() != frame.spectrum.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for ((wv, wk), (gv, gk)) in want.iter().zip(&frame.spectrum) {
        if wk != gk {
            return None;
        }
        worst = worst.max((wv - gv).abs());
    }
    Some(worst)
}

/// Largest deviation of `(∇_X A)Y` from `-c Σ_q [⟨S_q X, Y⟩ U_q + ⟨U_q, Y⟩ S_q X]`
/// over coordinate directions, with `∇A` from central differences of the exact shape
/// operator and Christoffel symbols from differences of the induced metric.
pub fn class_a_residual(chart: &Chart, u: &[f64], h: f64) -> Result<f64> {
    let n = chart.n();
    let coord_shape = |p: &[f64]| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let fr = shape_operator(chart, p)?;
        // Coordinate matrix A^k_j = (L^{-T} A_e L^T).
        let l = &fr.tangent.t_to_e;
        let linv = l.clone().try_inverse().expect("invertible frame");
        Ok((linv.transpose() * &fr.a * l.transpose(), fr.tangent.metric.clone()))
    };
    let shifted = |i: usize, s: f64| {
        let mut p = u.to_vec();
        p[i] += s;
        p
    };
    let (a0, g0) = coord_shape(u)?;
    let mut da = Vec::with_capacity(n);
    let mut dg = Vec::with_capacity(n);
    for i in 0..n {
        let (ap, gp) = coord_shape(&shifted(i, h))?;
        let (am, gm) = coord_shape(&shifted(i, -h))?;
        let (ap2, gp2) = coord_shape(&shifted(i, 0.5 * h))?;
        let (am2, gm2) = coord_shape(&shifted(i, -0.5 * h))?;
        let coarse_a = (&ap - &am) / (2.0 * h);
        let fine_a = (&ap2 - &am2) / h;
        da.push((&fine_a * 4.0 - coarse_a) / 3.0);
        let coarse_g = (&gp - &gm) / (2.0 * h);
        let fine_g = (&gp2 - &gm2) / h;
        dg.push((&fine_g * 4.0 - coarse_g) / 3.0);
    }
    let ginv = g0.clone().try_inverse().ok_or_else(|| Error::Chart("singular metric".into()))?;
    // Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il - ∂_l g_ij).
    let gamma = |k: usize, i: usize, j: usize| -> f64 {
        (0..n)
            .map(|l| 0.5 * ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
            .sum()
    };
    let mut gam = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                gam[(k * n + i) * n + j] = gamma(k, i, j);
            }
        }
    }
    let fr = shape_operator(chart, u)?;
    let c = chart.c();
    let t = &fr.tangent;
    let triple = CanonicalTriple::standard();
    let uq = t.u_standard();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut lhs = QVector::zeros(t.z.len(), c);
            for k in 0..n {
                let mut v = da[i][(k, j)];
                for l in 0..n {
                    v += gam[(k * n + i) * n + l] * a0[(l, j)] - a0[(k, l)] * gam[(l * n + i) * n + j];
                }
                lhs = lhs.axpy(v, &t.coord[k]);
            }
            let x = &t.coord[i];
            let y = &t.coord[j];
            let mut rhs = QVector::zeros(t.z.len(), c);
            for q in 1..=3 {
                let uqv = &uq[q - 1];
                let sx = triple.apply(q, x).axpy(-x.dot(uqv), &t.xi);
                rhs = rhs.axpy(-c * sx.dot(y), uqv).axpy(-c * uqv.dot(y), &sx);
            }
            worst = worst.max((&lhs - &rhs).dot(&(&lhs - &rhs)).sqrt());
        }
    }
    Ok(worst)
}
