//! Seeded random sampling of quadric points, horizontal vectors and unit quaternions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embedding::horizontal_part;
use crate::quaternion::{QVector, Quaternion};

/// Deterministic generator used throughout the engine.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| gaussian(rng)).collect()
}

pub fn unit_quaternion<R: Rng>(rng: &mut R) -> Quaternion {
    let q = Quaternion::from_array([gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng)]);
    q.scale(1.0 / q.norm())
}

pub fn unit_imaginary<R: Rng>(rng: &mut R) -> Quaternion {
    let v = [gaussian(rng), gaussian(rng), gaussian(rng)];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    Quaternion::imag([v[0] / n, v[1] / n, v[2] / n])
}

/// Random point of the quadric `Ψ_c(z, z) = c` in ℍ^{m+1}.
///
/// For `c = -1` the point lies within hyperbolic distance `max_dist` of `[e_0]`.
pub fn quadric_point<R: Rng>(rng: &mut R, m: usize, c: f64, max_dist: f64) -> QVector {
    let v = gaussian_vec(rng, 4 * (m + 1));
    if c > 0.0 {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        return QVector::from_reals(&v.iter().map(|x| x / n).collect::<Vec<_>>(), 1.0);
    }
    let rho = max_dist * rng.gen::<f64>();
    let tail = &v[4..];
    let tn = tail.iter().map(|x| x * x).sum::<f64>().sqrt();
    let q0 = unit_quaternion(rng).scale(rho.cosh());
    let mut reals = q0.to_array().to_vec();
    reals.extend(tail.iter().map(|x| rho.sinh() * x / tn));
    QVector::from_reals(&reals, -1.0)
}

/// Random unit horizontal vector at the quadric point `z`.
pub fn horizontal_unit<R: Rng>(rng: &mut R, z: &QVector) -> QVector {
    let w = QVector::from_reals(&gaussian_vec(rng, 4 * z.len()), z.c());
    let h = horizontal_part(z, &w);
    let n = h.dot(&h).sqrt();
    h.scale(1.0 / n)
}
