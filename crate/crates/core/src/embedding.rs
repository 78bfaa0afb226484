//! The space form ℍQ^m(4c) realized as trace-1 projectors: geodesics, the
//! differential of `Φ`, the quaternionic structure, the second fundamental
//! form `σ` of `Φ` and the curvature tensor.
//!
//! Tangent vectors of ℍQ^m at `[z]` are represented by their horizontal lifts
//! at `z`, i.e. vectors `v` with `Ψ_c(v, z) = 0`. The structures `J_q` act on
//! lifts by left multiplication with an orthonormal triple of imaginary units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quaternion::{
    hermitian_form_unchecked, projector, projector_bilinear, trace_metric_unchecked, QMatrix,
    QVector, Quaternion,
};

/// Horizontality tolerance, relative to the size of the lift.
pub const HORIZONTAL_TOL: f64 = 1e-10;

/// Default finite-difference step for `σ`.
pub const SIGMA_STEP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormPoint {
    pub p: QMatrix,
    pub lift: QVector,
}

impl SpaceFormPoint {
    pub fn new(lift: QVector) -> Result<Self> {
        Ok(Self { p: projector(&lift)?, lift })
    }

    pub fn c(&self) -> f64 {
        self.lift.c()
    }

    pub fn m(&self) -> usize {
        self.lift.len() - 1
    }

    /// `P - I/(m+1)`, the position relative to the centre of the hyperquadric.
    pub fn centered(&self) -> QMatrix {
        let d = self.lift.len();
        self.p.axpy(-1.0 / d as f64, &QMatrix::identity(d, self.c()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizontalVector {
    pub base: QVector,
    pub v: QVector,
}

impl HorizontalVector {
    pub fn new(base: QVector, v: QVector) -> Result<Self> {
        let dev = hermitian_form_unchecked(&v, &base).norm();
        if dev > HORIZONTAL_TOL * v.max_abs().max(1.0) * base.max_abs().max(1.0) {
            return Err(Error::NotHorizontal { deviation: dev });
        }
        Ok(Self { base, v })
    }

    pub fn norm(&self) -> f64 {
        self.v.dot(&self.v).sqrt()
    }
}

/// Removes the fiber and radial components: `w - c Ψ_c(w, z) z`.
pub fn horizontal_part(z: &QVector, w: &QVector) -> QVector {
    let psi = hermitian_form_unchecked(w, z);
    let c = z.c();
    w.axpy(-1.0, &z.left_mul(psi.scale(c)))
}

/// Orthonormal basis (w.r.t. `Re Ψ_c`) of the `4m`-dimensional horizontal space at `z`.
pub fn horizontal_basis(z: &QVector) -> Vec<QVector> {
    let len = z.len();
    let mut basis: Vec<QVector> = Vec::with_capacity(4 * (len - 1));
    for idx in 0..4 * len {
        let mut reals = vec![0.0; 4 * len];
        reals[idx] = 1.0;
        let mut w = horizontal_part(z, &QVector::from_reals(&reals, z.c()));
        for _ in 0..2 {
            for b in &basis {
                w = w.axpy(-w.dot(b), b);
            }
        }
        let n2 = w.dot(&w);
        if n2 > 1e-8 {
            basis.push(w.scale(1.0 / n2.sqrt()));
        }
        if basis.len() == 4 * (len - 1) {
            break;
        }
    }
    basis
}

/// `cos_c` and `sin_c`: circular for `c = 1`, hyperbolic for `c = -1`.
pub fn cs(c: f64, t: f64) -> (f64, f64) {
    if c > 0.0 {
        (t.cos(), t.sin())
    } else {
        (t.cosh(), t.sinh())
    }
}

/// Lift of the unit-speed geodesic through `p` with initial velocity `x`.
pub fn geodesic_lift(z: &QVector, x: &QVector, t: f64) -> QVector {
    let (co, si) = cs(z.c(), t);
    z.scale(co).axpy(si, x)
}

pub fn geodesic(p: &SpaceFormPoint, x: &HorizontalVector, t: f64) -> Result<SpaceFormPoint> {
    let xn = x.norm();
    if (xn - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!("geodesic needs a unit vector, |X| = {xn}")));
    }
    HorizontalVector::new(p.lift.clone(), x.v.clone())?;
    SpaceFormPoint::new(geodesic_lift(&p.lift, &x.v, t))
}

/// `dΦ_z(v) = 2 B(z, v)`: the derivative of the quadratic map `Φ` along `v`.
pub fn push_tangent_at(z: &QVector, v: &QVector) -> QMatrix {
    projector_bilinear(z, v).scale(2.0)
}

pub fn push_tangent(p: &SpaceFormPoint, v: &HorizontalVector) -> QMatrix {
    push_tangent_at(&p.lift, &v.v)
}

/// Orthonormal basis (trace metric) of `dΦ(T_pℍQ^m)`.
pub fn tangent_basis(z: &QVector) -> Vec<QMatrix> {
    horizontal_basis(z).iter().map(|w| push_tangent_at(z, w)).collect()
}

/// Removes the component of `s` tangent to `Φ(ℍQ^m)` at `z`.
pub fn normal_projection(z: &QVector, s: &QMatrix) -> QMatrix {
    let mut out = s.clone();
    for t in tangent_basis(z) {
        out = out.axpy(-trace_metric_unchecked(&out, &t), &t);
    }
    out
}

/// Second derivative of `t ↦ Φ(γ(t))` at 0 for the lift geodesic with initial velocity `x`.
fn geodesic_second_derivative(z: &QVector, x: &QVector, h: f64) -> QMatrix {
    let speed = x.dot(x).sqrt();
    if speed == 0.0 {
        return QMatrix::zeros(z.len(), z.c());
    }
    let u = x.scale(1.0 / speed);
    // Φ(γ(t)) - Φ(z) = B(d, 2z + d) with d = γ(t) - z formed without cancellation,
    // so roundoff in the second difference scales like ε/h rather than ε/h².
    let increment = |t: f64| {
        let half = 0.5 * t;
        let (_, s_half) = cs(z.c(), half);
        let co_minus_one = -2.0 * z.c() * s_half * s_half;
        let (_, si) = cs(z.c(), t);
        let d = z.scale(co_minus_one).axpy(si, &u);
        projector_bilinear(&d, &z.scale(2.0).axpy(1.0, &d))
    };
    let d2 = |step: f64| (&increment(step) + &increment(-step)).scale(1.0 / (step * step));
    let coarse = d2(h);
    let fine = d2(0.5 * h);
    fine.scale(4.0 / 3.0).axpy(-1.0 / 3.0, &coarse).scale(speed * speed)
}

/// `σ(X, Y)` by central differences of `Φ` along lift geodesics (one Richardson level),
/// polarization for mixed arguments and projection onto the normal space of `Φ`.
pub fn sigma(p: &SpaceFormPoint, x: &HorizontalVector, y: &HorizontalVector) -> SigmaValue {
    sigma_with_step(p, x, y, SIGMA_STEP)
}

pub fn sigma_with_step(
    p: &SpaceFormPoint,
    x: &HorizontalVector,
    y: &HorizontalVector,
    h: f64,
) -> SigmaValue {
    let z = &p.lift;
    let plus = geodesic_second_derivative(z, &(&x.v + &y.v), h);
    let minus = geodesic_second_derivative(z, &(&x.v - &y.v), h);
    let raw = (&plus - &minus).scale(0.25);
    SigmaValue { value: normal_projection(z, &raw) }
}

/// `σ(x, y) = 2 B(x, y) - 2c ⟨x, y⟩ Φ(z)`, the exact second derivative of `Φ`
/// along lift geodesics, for horizontal `x`, `y` at `z`.
pub fn sigma_exact(z: &QVector, x: &QVector, y: &QVector) -> QMatrix {
    let p = projector_bilinear(z, z);
    projector_bilinear(x, y)
        .scale(2.0)
        .axpy(-2.0 * z.c() * x.dot(y), &p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaValue {
    pub value: QMatrix,
}

/// A canonical basis `{J_1, J_2, J_3}` of the quaternionic structure, acting on
/// horizontal lifts by left multiplication with orthonormal imaginary units
/// `ι_1, ι_2, ι_3` satisfying `ι_1 ι_2 = ι_3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalTriple {
    pub units: [Quaternion; 3],
}

impl Default for CanonicalTriple {
    fn default() -> Self {
        Self::standard()
    }
}

impl CanonicalTriple {
    pub fn standard() -> Self {
        Self { units: [Quaternion::I, Quaternion::J, Quaternion::K] }
    }

    /// Triple `ι'_q = Σ_p R_qp ι_p` for a rotation `R` (rows orthonormal, det +1).
    pub fn rotated(&self, r: [[f64; 3]; 3]) -> Self {
        let mut units = [Quaternion::ZERO; 3];
        for (q, row) in r.iter().enumerate() {
            for (p, coef) in row.iter().enumerate() {
                units[q] += self.units[p].scale(*coef);
            }
        }
        Self { units }
    }

    /// `J_q v` for `q ∈ {1, 2, 3}`.
    pub fn apply(&self, q: usize, v: &QVector) -> QVector {
        assert!((1..=3).contains(&q), "q must be 1, 2 or 3");
        v.left_mul(self.units[q - 1])
    }
}

pub fn jq_apply(q: usize, v: &HorizontalVector) -> HorizontalVector {
    HorizontalVector { base: v.base.clone(), v: CanonicalTriple::standard().apply(q, &v.v) }
}

/// Closed form of `Ā_{σ(X,Y)} V`.
pub fn shape_operator_of_embedding(
    triple: &CanonicalTriple,
    x: &QVector,
    y: &QVector,
    v: &QVector,
) -> QVector {
    let c = x.c();
    let mut out = v.scale(2.0 * x.dot(y)).axpy(x.dot(v), y).axpy(y.dot(v), x);
    for q in 1..=3 {
        let jx = triple.apply(q, x);
        let jy = triple.apply(q, y);
        out = out.axpy(jx.dot(v), &jy).axpy(jy.dot(v), &jx);
    }
    out.scale(c)
}

/// Weingarten map of `Φ` in the normal direction `eta`, from finite-difference `σ`:
/// `Ā_η V = Σ_a ⟨σ(V, w_a), η⟩ w_a` over an orthonormal horizontal basis.
pub fn weingarten_fd(p: &SpaceFormPoint, eta: &QMatrix, v: &QVector) -> QVector {
    let z = &p.lift;
    let hv = HorizontalVector { base: z.clone(), v: v.clone() };
    let mut out = QVector::zeros(z.len(), z.c());
    for w in horizontal_basis(z) {
        let hw = HorizontalVector { base: z.clone(), v: w.clone() };
        let s = sigma(p, &hv, &hw).value;
        out = out.axpy(trace_metric_unchecked(&s, eta), &w);
    }
    out
}

/// Curvature tensor `R̄(X, Y) Z` of ℍQ^m(4c).
pub fn curvature_tensor(
    triple: &CanonicalTriple,
    x: &QVector,
    y: &QVector,
    zv: &QVector,
) -> QVector {
    let c = x.c();
    let mut out = x.scale(y.dot(zv)).axpy(-x.dot(zv), y);
    for q in 1..=3 {
        let jx = triple.apply(q, x);
        let jy = triple.apply(q, y);
        let jz = triple.apply(q, zv);
        out = out
            .axpy(jy.dot(zv), &jx)
            .axpy(-jx.dot(zv), &jy)
            .axpy(-2.0 * jx.dot(y), &jz);
    }
    out.scale(c)
}
