//! Closed-form Laplacians of the position vector and of the normal fields,
//! assembled from `ξ`, `σ(ξ,ξ)` and frame sums of the second fundamental form
//! of the projector embedding.

use nalgebra::DVector;

use crate::embedding::{push_tangent_at, sigma_exact};
use crate::error::{Error, Result};
use crate::hypersurface::{scalar_invariants, shape_operator, Chart, CurvatureScalars, ShapeFrame};
use crate::laplace::Field;
use crate::quaternion::QMatrix;

/// Largest tolerated leak of `A` between `D` and `D⊥`, relative to `‖A‖`.
const ADAPTED_TOL: f64 = 1e-7;

/// Normal fields along the hypersurface at one point.
#[derive(Clone, Debug)]
pub struct FrameSums {
    pub position: QMatrix,
    /// `dΦ(ξ)`.
    pub xi: QMatrix,
    /// `σ(ξ, ξ)`.
    pub sigma_xi: QMatrix,
    /// `Σ_i σ(e_i, e_i)` over an orthonormal tangent frame.
    pub sigma_all: QMatrix,
    /// `Σ σ(e, e)` over an orthonormal frame of `D`.
    pub sigma_d: QMatrix,
    /// `Σ_i σ(e_i, A e_i)`.
    pub sigma_a: QMatrix,
    /// `Σ_i σ(A e_i, A e_i)`.
    pub sigma_aa: QMatrix,
}

pub fn frame_sums(frame: &ShapeFrame) -> FrameSums {
    let t = &frame.tangent;
    let z = &t.z;
    let zero = QMatrix::zeros(z.len(), z.c());
    let (mut sigma_all, mut sigma_a, mut sigma_aa) = (zero.clone(), zero.clone(), zero.clone());
    for (i, lambda) in frame.eigenvalues.iter().enumerate() {
        let v = t.vector_of(&frame.eigenvectors.column(i).into_owned());
        let s = sigma_exact(z, &v, &v);
        sigma_all = sigma_all.axpy(1.0, &s);
        sigma_a = sigma_a.axpy(*lambda, &s);
        sigma_aa = sigma_aa.axpy(lambda * lambda, &s);
    }
    let sigma_d = frame.d_basis().iter().fold(zero, |acc, d| {
        let v = t.vector_of(d);
        acc.axpy(1.0, &sigma_exact(z, &v, &v))
    });
    FrameSums {
        position: t.position(),
        xi: push_tangent_at(z, &t.xi),
        sigma_xi: sigma_exact(z, &t.xi, &t.xi),
        sigma_all,
        sigma_d,
        sigma_a,
        sigma_aa,
    }
}

/// Fails unless `D` and `D⊥` are invariant under `A` with the `U_q` principal.
pub fn ensure_curvature_adapted(frame: &ShapeFrame) -> Result<()> {
    let scale = frame.a.amax().max(1.0);
    let leak = frame.d_invariance_residual().max(frame.u_principal_residual());
    if leak > ADAPTED_TOL * scale {
        return Err(Error::Contract(format!(
            "frame is not curvature-adapted (leak {leak:e} against scale {scale:e})"
        )));
    }
    Ok(())
}

/// `Δx̃`, `Δ²x̃` and `Δξ` for a curvature-adapted hypersurface with constant
/// principal curvatures.
#[derive(Clone, Debug)]
pub struct ClosedForms {
    pub scalars: CurvatureScalars,
    pub sums: FrameSums,
    pub laplacian: QMatrix,
    pub bilaplacian: QMatrix,
    pub delta_xi: QMatrix,
}

pub fn closed_form_fields(frame: &ShapeFrame) -> Result<ClosedForms> {
    ensure_curvature_adapted(frame)?;
    let s = scalar_invariants(frame);
    let sums = frame_sums(frame);
    let (c, n, f, f2) = (s.c, s.n as f64, s.f, s.f2);
    let sa = s.sum_alpha();

    let laplacian = sums.xi.scale(-f).axpy(-1.0, &sums.sigma_all);

    let bilaplacian = sums
        .xi
        .scale(4.0 * c * sa - f * (f2 + c * (3.0 * n + 7.0)))
        .axpy(6.0 * c + 2.0 * f2 + f * f, &sums.sigma_xi)
        .axpy(-2.0 * c * (n + 4.0), &sums.sigma_all)
        .axpy(-2.0 * f, &sums.sigma_a)
        .axpy(-2.0, &sums.sigma_aa);

    // Constant principal curvatures make the gradient of f vanish.
    let delta_xi = sums
        .xi
        .scale(f2 + c * (n - 3.0))
        .axpy(-f, &sums.sigma_xi)
        .axpy(2.0, &sums.sigma_a);

    Ok(ClosedForms { scalars: s, sums, laplacian, bilaplacian, delta_xi })
}

/// `(Δx̃, Δ²x̃)` for geodesic spheres and tubes about hyperplanes, with `μ` the
/// principal curvature on `D`.
pub fn sphere_fields(sums: &FrameSums, mu: f64, c: f64, n: usize) -> (QMatrix, QMatrix) {
    let n = n as f64;
    let lap = sums
        .xi
        .scale(-(n * mu - 3.0 * c / mu))
        .axpy(-3.0, &sums.sigma_xi)
        .axpy(-1.0, &sums.sigma_d);
    let mu2 = mu * mu;
    let bilap = sums
        .xi
        .scale(
            -(n * n * mu2 * mu + c * (3.0 * n * n - 2.0 * n - 12.0) * mu
                - 3.0 * (2.0 * n - 3.0) / mu
                - 9.0 * c / (mu2 * mu)),
        )
        .axpy((n * n - 4.0 * n - 6.0) * mu2 - 9.0 / mu2 - 6.0 * c * n, &sums.sigma_xi)
        .axpy(-2.0 * (n + 1.0) * (mu2 + c), &sums.sigma_d);
    (lap, bilap)
}

/// Closed forms for tubes about the complex space form, written in `ξ`,
/// `σ(ξ,ξ)` and `Σ_D σ(e,e)`.
#[derive(Clone, Debug)]
pub struct ClassBFields {
    pub laplacian: QMatrix,
    pub bilaplacian: QMatrix,
    pub trilaplacian: QMatrix,
    pub delta_xi: QMatrix,
    pub delta_sigma_xi: QMatrix,
    pub delta_sigma_d: QMatrix,
}

/// Combination `x ξ + y σ(ξ,ξ) + w Σ_D σ(e,e)`.
fn combo(sums: &FrameSums, x: f64, y: f64, w: f64) -> QMatrix {
    sums.xi.scale(x).axpy(y, &sums.sigma_xi).axpy(w, &sums.sigma_d)
}

pub fn class_b_fields(sums: &FrameSums, alpha: f64, c: f64, m: usize) -> ClassBFields {
    let a = alpha;
    let a2 = a * a;
    let m = m as f64;
    let laplacian = combo(sums, -((2.0 * m - 1.0) * a - 8.0 * c / a), -3.0, -1.0);
    let delta_xi = combo(
        sums,
        (2.0 * m - 1.0) * a2 + 32.0 / a2 + 8.0 * c * (m - 1.0),
        -((2.0 * m - 3.0) * a + 8.0 * c / a),
        a,
    );
    let delta_sigma_xi = combo(
        sums,
        4.0 * c * (a - 8.0 * c / a),
        4.0 * ((2.0 * m + 1.0) * c + (m - 1.0) * a2),
        -a2,
    );
    let delta_sigma_d = combo(
        sums,
        8.0 * c * (m - 1.0) * ((2.0 * m + 3.0) * a - 8.0 * c / a),
        -8.0 * (m - 1.0) * (c + 2.0 * a2),
        4.0 * (2.0 * c * (m + 1.0) + a2),
    );
    let bilaplacian = combo(
        sums,
        -((2.0 * m - 1.0).powi(2) * a2 * a + 4.0 * c * (8.0 * m * m - 8.0 * m + 1.0) * a
            - 64.0 * m / a
            - 256.0 * c / (a2 * a)),
        (4.0 * m * m - 4.0 * m - 1.0) * a2 - 64.0 / a2 - 4.0 * c * (4.0 * m + 1.0),
        -2.0 * m * (a2 + 4.0 * c),
    );
    let a4 = a2 * a2;
    let trilaplacian = combo(
        sums,
        -((2.0 * m - 1.0).powi(3) * a4 * a
            + 8.0 * c * (16.0 * m.powi(3) - 20.0 * m * m + 6.0 * m - 1.0) * a2 * a
            + 16.0 * (24.0 * m.powi(3) - 28.0 * m * m + 6.0 * m - 1.0) * a
            - 512.0 * c * (2.0 * m - 1.0) / a
            - 4096.0 * m / (a2 * a)
            - 8192.0 * c / (a4 * a)),
        (24.0 * m.powi(3) - 20.0 * m * m - 6.0 * m + 1.0) * a4
            + 8.0 * c * (12.0 * m.powi(3) - 8.0 * m * m - 6.0 * m + 1.0) * a2
            - 512.0 * c * (3.0 * m - 1.0) / a2
            - 2048.0 / a4
            + 16.0 * (4.0 * m * m - 30.0 * m + 17.0),
        -(8.0 * m * m * a4 + 48.0 * c * m * m * a2 - 256.0 * c / a2 + 64.0 * (m * m - 1.0)),
    );
    ClassBFields { laplacian, bilaplacian, trilaplacian, delta_xi, delta_sigma_xi, delta_sigma_d }
}

/// `I/(m+1) - c/(8(m+1)) [4σ(ξ,ξ) + Σ_D σ(e,e)]`, which reproduces `x̃` at every point.
pub fn quadric_center_identity(sums: &FrameSums) -> QMatrix {
    let d = sums.position.dim();
    let c = sums.position.c();
    let m1 = d as f64;
    QMatrix::identity(d, c)
        .scale(1.0 / m1)
        .axpy(-4.0 * c / (8.0 * m1), &sums.sigma_xi)
        .axpy(-c / (8.0 * m1), &sums.sigma_d)
}

/// Chart field `u ↦ pick(closed forms at u)` as real coordinates.
pub fn frame_field<'a, P>(chart: &'a Chart, pick: P) -> impl Field + 'a
where
    P: Fn(&ClosedForms) -> QMatrix + Sync + 'a,
{
    move |u: &[f64]| {
        let frame = shape_operator(chart, u)?;
        let cf = closed_form_fields(&frame)?;
        Ok(DVector::from_vec(pick(&cf).to_reals()))
    }
}

/// Chart field built from the frame sums alone, skipping the curvature-adapted check.
pub fn sums_field<'a, P>(chart: &'a Chart, pick: P) -> impl Field + 'a
where
    P: Fn(&ShapeFrame, &FrameSums) -> QMatrix + Sync + 'a,
{
    move |u: &[f64]| {
        let frame = shape_operator(chart, u)?;
        let sums = frame_sums(&frame);
        Ok(DVector::from_vec(pick(&frame, &sums).to_reals()))
    }
}
