//! Quaternion scalars, vectors over the signed Hermitian form `Ψ_c`, and
//! quaternion-entry matrices with the ambient trace metric.
//!
//! Vectors form a *left* ℍ-module: `Ψ_c(q z, w) = q Ψ_c(z, w)`. The Sp(1)
//! fiber therefore acts by left multiplication `z ↦ q z`, which leaves the
//! projector `Φ([z])` unchanged.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the quadric membership test in [`projector`].
pub const QUADRIC_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn real(w: f64) -> Self {
        Self::new(w, 0.0, 0.0, 0.0)
    }

    /// Pure imaginary quaternion `x i + y j + z k`.
    pub const fn imag(v: [f64; 3]) -> Self {
        Self::new(0.0, v[0], v[1], v[2])
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Hamilton product with `i j = k`.
pub fn qmul(a: Quaternion, b: Quaternion) -> Quaternion {
    Quaternion::new(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )
}

impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        qmul(self, rhs)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        Self::new(self.w + r.w, self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, r: Self) -> Self {
        Self::new(self.w - r.w, self.x - r.x, self.y - r.y, self.z - r.z)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, r: Self) {
        *self = *self + r;
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, r: Self) {
        *self = *self - r;
    }
}

/// Sign `c` of the form and quaternionic dimension `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormSignature {
    c: i8,
    m: usize,
}

impl FormSignature {
    pub fn new(c: i8, m: usize) -> Result<Self> {
        if c != 1 && c != -1 {
            return Err(Error::Spec(format!("signature must be +1 or -1, got {c}")));
        }
        if m < 2 {
            return Err(Error::Spec(format!("quaternionic dimension must be >= 2, got {m}")));
        }
        Ok(Self { c, m })
    }

    pub fn c(self) -> f64 {
        f64::from(self.c)
    }

    pub fn m(self) -> usize {
        self.m
    }

    /// Hypersurface dimension `4m - 1`.
    pub fn n(self) -> usize {
        4 * self.m - 1
    }
}

fn check_sign(c: f64) {
    assert!(c == 1.0 || c == -1.0, "signature must be +1 or -1");
}

/// Weight of coordinate `j` in `Ψ_c`: `c` for the first slot, `1` after.
#[inline]
pub fn form_weight(c: f64, j: usize) -> f64 {
    if j == 0 {
        c
    } else {
        1.0
    }
}

/// Weight of column `j` in the projector matrix: `1` for the first column, `c` after.
#[inline]
pub fn column_weight(c: f64, j: usize) -> f64 {
    if j == 0 {
        1.0
    } else {
        c
    }
}

/// Element of ℍ^{m+1} carrying the signature of its form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QVector {
    pub entries: Vec<Quaternion>,
    c: f64,
}

impl QVector {
    pub fn new(entries: Vec<Quaternion>, c: f64) -> Self {
        check_sign(c);
        Self { entries, c }
    }

    pub fn zeros(len: usize, c: f64) -> Self {
        Self::new(vec![Quaternion::ZERO; len], c)
    }

    pub fn basis(len: usize, idx: usize, c: f64) -> Self {
        let mut v = Self::zeros(len, c);
        v.entries[idx] = Quaternion::ONE;
        v
    }

    /// Builds a vector from `4 len` real components, quaternion-major.
    pub fn from_reals(reals: &[f64], c: f64) -> Self {
        assert_eq!(reals.len() % 4, 0);
        let entries = reals
            .chunks(4)
            .map(|q| Quaternion::new(q[0], q[1], q[2], q[3]))
            .collect();
        Self::new(entries, c)
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.entries.iter().flat_map(|q| q.to_array()).collect()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.entries.iter().map(|q| q.scale(s)).collect(), self.c)
    }

    /// Left scalar multiplication `q · z`.
    pub fn left_mul(&self, q: Quaternion) -> Self {
        Self::new(self.entries.iter().map(|e| q * *e).collect(), self.c)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| *a + b.scale(s))
                .collect(),
            self.c,
        )
    }

    /// Real inner product `g_c = Re Ψ_c`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .enumerate()
            .map(|(j, (a, b))| {
                form_weight(self.c, j)
                    * (a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z)
            })
            .sum()
    }

    /// Largest absolute real component.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, q| m.max(q.max_abs()))
    }
}

impl Add for &QVector {
    type Output = QVector;
    fn add(self, r: &QVector) -> QVector {
        self.axpy(1.0, r)
    }
}

impl Sub for &QVector {
    type Output = QVector;
    fn sub(self, r: &QVector) -> QVector {
        self.axpy(-1.0, r)
    }
}

fn check_vectors(z: &QVector, w: &QVector) -> Result<()> {
    if z.len() != w.len() {
        return Err(Error::Dimension(format!("vector lengths {} and {}", z.len(), w.len())));
    }
    if z.c != w.c {
        return Err(Error::Dimension("vectors carry different signatures".into()));
    }
    Ok(())
}

/// `Ψ_c(z, w) = c z_0 w̄_0 + Σ_{j≥1} z_j w̄_j`.
pub fn hermitian_form(z: &QVector, w: &QVector) -> Result<Quaternion> {
    check_vectors(z, w)?;
    Ok(hermitian_form_unchecked(z, w))
}

pub(crate) fn hermitian_form_unchecked(z: &QVector, w: &QVector) -> Quaternion {
    z.entries
        .iter()
        .zip(&w.entries)
        .enumerate()
        .fold(Quaternion::ZERO, |acc, (j, (a, b))| {
            acc + (*a * b.conj()).scale(form_weight(z.c, j))
        })
}

/// Square matrix with quaternion entries, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QMatrix {
    dim: usize,
    pub entries: Vec<Quaternion>,
    c: f64,
}

impl QMatrix {
    pub fn zeros(dim: usize, c: f64) -> Self {
        check_sign(c);
        Self { dim, entries: vec![Quaternion::ZERO; dim * dim], c }
    }

    pub fn identity(dim: usize, c: f64) -> Self {
        let mut s = Self::zeros(dim, c);
        for i in 0..dim {
            s.entries[i * dim + i] = Quaternion::ONE;
        }
        s
    }

    /// Unit matrix `E_ij`.
    pub fn unit(dim: usize, i: usize, j: usize, c: f64) -> Self {
        let mut s = Self::zeros(dim, c);
        s.entries[i * dim + j] = Quaternion::ONE;
        s
    }

    pub fn from_reals(dim: usize, reals: &[f64], c: f64) -> Self {
        assert_eq!(reals.len(), 4 * dim * dim);
        let mut s = Self::zeros(dim, c);
        for (q, chunk) in s.entries.iter_mut().zip(reals.chunks(4)) {
            *q = Quaternion::new(chunk[0], chunk[1], chunk[2], chunk[3]);
        }
        s
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.entries.iter().flat_map(|q| q.to_array()).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn get(&self, i: usize, j: usize) -> Quaternion {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, q: Quaternion) {
        self.entries[i * self.dim + j] = q;
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.entries.iter_mut().for_each(|q| *q = q.scale(s));
        out
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a += b.scale(s);
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d, self.c);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                for j in 0..d {
                    out.entries[i * d + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Quaternion {
        (0..self.dim).fold(Quaternion::ZERO, |acc, i| acc + self.get(i, i))
    }

    /// Largest absolute real component.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, q| m.max(q.max_abs()))
    }

    /// Largest absolute real component of `self - other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.axpy(-1.0, other).max_abs()
    }

    /// Norm induced by [`trace_metric`]; meaningful where the metric is definite.
    pub fn metric_norm(&self) -> f64 {
        trace_metric_unchecked(self, self).abs().sqrt()
    }
}

impl Add for &QMatrix {
    type Output = QMatrix;
    fn add(self, r: &QMatrix) -> QMatrix {
        self.axpy(1.0, r)
    }
}

impl Sub for &QMatrix {
    type Output = QMatrix;
    fn sub(self, r: &QMatrix) -> QMatrix {
        self.axpy(-1.0, r)
    }
}

/// `⟨S, T⟩ = (c/2) Re tr(S T)`.
pub fn trace_metric(s: &QMatrix, t: &QMatrix) -> Result<f64> {
    if s.dim != t.dim {
        return Err(Error::Dimension(format!("matrix sizes {} and {}", s.dim, t.dim)));
    }
    if s.c != t.c {
        return Err(Error::Dimension("matrices carry different signatures".into()));
    }
    Ok(trace_metric_unchecked(s, t))
}

pub(crate) fn trace_metric_unchecked(s: &QMatrix, t: &QMatrix) -> f64 {
    let d = s.dim;
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let a = s.get(i, j);
            let b = t.get(j, i);
            acc += a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z;
        }
    }
    0.5 * s.c * acc
}

/// Symmetrized bilinear version of the projector map:
/// `B(a, b)_ij = ½ c_j (ā_i b_j + b̄_i a_j)` with column weights `c_0 = 1`, `c_j = c`.
pub fn projector_bilinear(a: &QVector, b: &QVector) -> QMatrix {
    let d = a.len();
    let c = a.c;
    let mut out = QMatrix::zeros(d, c);
    for i in 0..d {
        let ai = a.entries[i].conj();
        let bi = b.entries[i].conj();
        for j in 0..d {
            let q = ai * b.entries[j] + bi * a.entries[j];
            out.entries[i * d + j] = q.scale(0.5 * column_weight(c, j));
        }
    }
    out
}

/// `Φ([z])`: the projector onto the quaternionic line through a quadric point `z`.
pub fn projector(z: &QVector) -> Result<QMatrix> {
    let psi = hermitian_form_unchecked(z, z);
    let scale = z.entries.iter().map(|q| q.norm_sqr()).sum::<f64>().max(1.0);
    if (psi - Quaternion::real(z.c)).norm() > QUADRIC_TOL * scale {
        return Err(Error::NotOnQuadric { deviation: (psi - Quaternion::real(z.c)).norm() });
    }
    Ok(projector_bilinear(z, z))
}
