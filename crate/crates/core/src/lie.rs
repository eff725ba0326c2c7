//! SO(3)/SE(3) exponential and logarithm maps.
//!
//! Poses are a rotation matrix plus translation. Every map is generic over
//! [`Real`], so the identical code path evaluates plain values or records
//! itself on an AD tape.

use core::f64::consts::PI;

use crate::ad::{Real, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::math;

/// Below this rotation angle the exp/log maps switch to Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-8;
/// Logarithm refuses rotations closer than this to pi.
pub const NEAR_PI: f64 = 1e-6;
/// Orthonormality drift tolerated before a polar re-projection.
pub const DRIFT_TOLERANCE: f64 = 1e-9;

/// Element of se(3): rotation part `omega` (axis-angle) and translation part `v`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Twist<S = f64> {
    pub omega: [S; 3],
    pub v: [S; 3],
}

/// Rigid transform `x -> rotation * x + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose<S = f64> {
    pub rotation: [[S; 3]; 3],
    pub translation: [S; 3],
}

pub type RigidTransform = Pose<f64>;

impl Twist<f64> {
    pub const fn new(omega: [f64; 3], v: [f64; 3]) -> Self {
        Self { omega, v }
    }

    pub const fn zero() -> Self {
        Self { omega: [0.0; 3], v: [0.0; 3] }
    }

    /// `(omega, v)` packed as a 6-vector.
    pub fn from_array(xi: [f64; 6]) -> Self {
        Self { omega: [xi[0], xi[1], xi[2]], v: [xi[3], xi[4], xi[5]] }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.omega[0], self.omega[1], self.omega[2], self.v[0], self.v[1], self.v[2]]
    }

    pub fn norm_inf(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, x| f64::max(m, math::abs(*x)))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

impl<'t> Twist<Var<'t>> {
    /// Twist from six consecutive scalar vars.
    pub fn from_vars(xi: &[Var<'t>]) -> Self {
        assert!(xi.len() >= 6);
        Self { omega: [xi[0], xi[1], xi[2]], v: [xi[3], xi[4], xi[5]] }
    }
}

impl<S: Real> Twist<S> {
    pub fn scaled(&self, k: f64) -> Self {
        Self { omega: self.omega.map(|x| x * k), v: self.v.map(|x| x * k) }
    }
}

#[inline]
fn dot<S: Real>(a: &[S; 3], b: &[S; 3]) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross<S: Real>(a: &[S; 3], b: &[S; 3]) -> [S; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
fn mat_vec<S: Real>(m: &[[S; 3]; 3], v: &[S; 3]) -> [S; 3] {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// Builds `I(1 - k2*theta2) + k1*W + k2*w*w^T`, the common shape of the
/// rotation and left-Jacobian series.
fn so3_series<S: Real>(w: &[S; 3], theta2: S, k1: S, k2: S) -> [[S; 3]; 3] {
    let diag = theta2 * k2;
    let skew = |i: usize, j: usize| -> Option<(S, bool)> {
        // W = [[0,-w2,w1],[w2,0,-w0],[-w1,w0,0]]
        match (i, j) {
            (0, 1) => Some((w[2], false)),
            (0, 2) => Some((w[1], true)),
            (1, 0) => Some((w[2], true)),
            (1, 2) => Some((w[0], false)),
            (2, 0) => Some((w[1], false)),
            (2, 1) => Some((w[0], true)),
            _ => None,
        }
    };
    core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            let outer = k2 * w[i] * w[j];
            match skew(i, j) {
                None => outer - diag + 1.0,
                Some((x, true)) => outer + k1 * x,
                Some((x, false)) => outer - k1 * x,
            }
        })
    })
}

/// Closed-form SE(3) exponential (Rodrigues rotation with the left Jacobian
/// applied to the translation part).
pub fn se3_exp<S: Real>(xi: &Twist<S>) -> Pose<S> {
    let w = &xi.omega;
    let theta2 = dot(w, w);
    let (a, b, c) = if theta2.real_value() < SMALL_ANGLE * SMALL_ANGLE {
        (
            theta2 * (-1.0 / 6.0) + 1.0,
            theta2 * (-1.0 / 24.0) + 0.5,
            theta2 * (-1.0 / 120.0) + 1.0 / 6.0,
        )
    } else {
        let theta = theta2.sqrt();
        let s = theta.sin();
        let half = (theta * 0.5).sin();
        // 1 - cos(theta) written as 2 sin^2(theta / 2) to avoid cancellation.
        (s / theta, half * half * 2.0 / theta2, (theta - s) / (theta2 * theta))
    };
    let rotation = so3_series(w, theta2, a, b);
    let jacobian = so3_series(w, theta2, b, c);
    Pose { rotation, translation: mat_vec(&jacobian, &xi.v) }
}

/// SE(3) logarithm, the inverse of [`se3_exp`] for rotation angles below pi.
pub fn se3_log<S: Real>(pose: &Pose<S>) -> Result<Twist<S>> {
    let r = &pose.rotation;
    let cos_t = (r[0][0] + r[1][1] + r[2][2] - 1.0) * 0.5;
    // sin(theta) * axis
    let s = [
        (r[2][1] - r[1][2]) * 0.5,
        (r[0][2] - r[2][0]) * 0.5,
        (r[1][0] - r[0][1]) * 0.5,
    ];
    let sin2 = dot(&s, &s);
    let angle = math::atan2(math::sqrt(sin2.real_value()), cos_t.real_value());
    if PI - angle < NEAR_PI {
        return Err(Error::AngleNearPi { angle });
    }
    let (factor, d) = if angle < SMALL_ANGLE {
        (sin2 * (1.0 / 6.0) + 1.0, sin2 * (1.0 / 720.0) + 1.0 / 12.0)
    } else {
        let sin_t = sin2.sqrt();
        let theta = sin_t.atan2(cos_t);
        let half = theta * 0.5;
        let cot_term = half * half.cos() / half.sin();
        (theta / sin_t, (-cot_term + 1.0) / (theta * theta))
    };
    let omega = s.map(|x| x * factor);
    let t = &pose.translation;
    let wt = cross(&omega, t);
    let wwt = cross(&omega, &wt);
    let v = core::array::from_fn(|i| t[i] - wt[i] * 0.5 + wwt[i] * d);
    Ok(Twist { omega, v })
}

impl<S: Real> Pose<S> {
    /// `self * other` without re-projection.
    pub fn compose(&self, other: &Pose<S>) -> Pose<S> {
        let a = &self.rotation;
        let b = &other.rotation;
        let rotation = core::array::from_fn(|i| {
            core::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j])
        });
        let rt = mat_vec(a, &other.translation);
        let translation = core::array::from_fn(|i| rt[i] + self.translation[i]);
        Pose { rotation, translation }
    }

    /// Inverse using the transpose of the rotation.
    pub fn inverse(&self) -> Pose<S> {
        let r = &self.rotation;
        let rotation = core::array::from_fn(|i| core::array::from_fn(|j| r[j][i]));
        let rt = mat_vec(&rotation, &self.translation);
        Pose { rotation, translation: rt.map(|x| -x) }
    }

    pub fn transform_point(&self, p: &[S; 3]) -> [S; 3] {
        let rp = mat_vec(&self.rotation, p);
        core::array::from_fn(|i| rp[i] + self.translation[i])
    }

    pub fn rotate(&self, v: &[S; 3]) -> [S; 3] {
        mat_vec(&self.rotation, v)
    }
}

impl<'t> Pose<Var<'t>> {
    /// Rotation as a `3x3` tensor var.
    pub fn rotation_var(&self, tape: &'t Tape) -> Var<'t> {
        let parts: alloc::vec::Vec<Var<'t>> =
            self.rotation.iter().flat_map(|row| row.iter().copied()).collect();
        tape.assemble(&parts, 3, 3)
    }

    /// Translation as a `1x3` row var.
    pub fn translation_var(&self, tape: &'t Tape) -> Var<'t> {
        tape.assemble(&self.translation, 1, 3)
    }

    /// Current numeric value.
    pub fn to_value(&self) -> RigidTransform {
        Pose {
            rotation: self.rotation.map(|row| row.map(|x| x.item())),
            translation: self.translation.map(|x| x.item()),
        }
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub const fn identity() -> Self {
        Pose {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub const fn from_translation(t: [f64; 3]) -> Self {
        let mut p = Self::identity();
        p.translation = t;
        p
    }

    /// Constant copy of this pose on `tape`.
    pub fn lift<'t>(&self, tape: &'t Tape) -> Pose<Var<'t>> {
        Pose {
            rotation: self.rotation.map(|row| row.map(|x| tape.scalar(x))),
            translation: self.translation.map(|x| tape.scalar(x)),
        }
    }

    /// Largest entry of `|R^T R - I|` together with `|det R - 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let r = &self.rotation;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = r[0][i] * r[0][j] + r[1][i] * r[1][j] + r[2][i] * r[2][j];
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max(math::abs(d - expected));
            }
        }
        worst.max(math::abs(det3(r) - 1.0))
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.orthonormality_error() <= tol && self.translation.iter().all(|x| x.is_finite())
    }

    /// Nearest rotation (polar factor) via Newton iteration.
    pub fn orthonormalized(&self) -> Self {
        Pose { rotation: polar_rotation(&self.rotation), translation: self.translation }
    }

    /// Rotation angle in radians, in `[0, pi]`.
    pub fn rotation_angle(&self) -> f64 {
        let r = &self.rotation;
        let cos_t = (r[0][0] + r[1][1] + r[2][2] - 1.0) * 0.5;
        let s = [
            (r[2][1] - r[1][2]) * 0.5,
            (r[0][2] - r[2][0]) * 0.5,
            (r[1][0] - r[0][1]) * 0.5,
        ];
        math::atan2(math::sqrt(dot(&s, &s)), cos_t)
    }

    /// Unit quaternion `[x, y, z, w]` with `w >= 0`.
    pub fn quaternion(&self) -> [f64; 4] {
        let r = &self.rotation;
        let trace = r[0][0] + r[1][1] + r[2][2];
        let mut q = if trace > 0.0 {
            let s = math::sqrt(trace + 1.0) * 2.0;
            [(r[2][1] - r[1][2]) / s, (r[0][2] - r[2][0]) / s, (r[1][0] - r[0][1]) / s, 0.25 * s]
        } else if r[0][0] > r[1][1] && r[0][0] > r[2][2] {
            let s = math::sqrt(1.0 + r[0][0] - r[1][1] - r[2][2]) * 2.0;
            [0.25 * s, (r[0][1] + r[1][0]) / s, (r[0][2] + r[2][0]) / s, (r[2][1] - r[1][2]) / s]
        } else if r[1][1] > r[2][2] {
            let s = math::sqrt(1.0 + r[1][1] - r[0][0] - r[2][2]) * 2.0;
            [(r[0][1] + r[1][0]) / s, 0.25 * s, (r[1][2] + r[2][1]) / s, (r[0][2] - r[2][0]) / s]
        } else {
            let s = math::sqrt(1.0 + r[2][2] - r[0][0] - r[1][1]) * 2.0;
            [(r[0][2] + r[2][0]) / s, (r[1][2] + r[2][1]) / s, 0.25 * s, (r[1][0] - r[0][1]) / s]
        };
        let n = math::sqrt(q.iter().map(|x| x * x).sum());
        let sign = if q[3] < 0.0 { -1.0 } else { 1.0 };
        for x in &mut q {
            *x *= sign / n;
        }
        q
    }

    /// Pose from a quaternion `[x, y, z, w]` (normalized here) and a translation.
    pub fn from_quaternion(q: [f64; 4], translation: [f64; 3]) -> Self {
        let n = math::sqrt(q.iter().map(|x| x * x).sum());
        let [x, y, z, w] = q.map(|c| c / n);
        let rotation = [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
            [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
            [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
        ];
        Pose { rotation, translation }
    }

    /// Largest absolute entry difference over rotation and translation.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max(math::abs(self.rotation[i][j] - other.rotation[i][j]));
            }
            worst = worst.max(math::abs(self.translation[i] - other.translation[i]));
        }
        worst
    }
}

/// Group product with polar re-projection when drift exceeds
/// [`DRIFT_TOLERANCE`].
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    reproject(a.compose(b))
}

pub fn inverse(a: &RigidTransform) -> RigidTransform {
    reproject(a.inverse())
}

fn reproject(p: RigidTransform) -> RigidTransform {
    if p.orthonormality_error() > DRIFT_TOLERANCE {
        p.orthonormalized()
    } else {
        p
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Orthogonal polar factor of a non-singular `3x3` matrix with positive
/// determinant, by the iteration `X <- (X + X^-T) / 2`.
pub fn polar_rotation(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut x = *m;
    for _ in 0..100 {
        let det = det3(&x);
        // cofactor matrix divided by det is X^-T
        let cof = |i: usize, j: usize| {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            x[i1][j1] * x[i2][j2] - x[i1][j2] * x[i2][j1]
        };
        let next: [[f64; 3]; 3] =
            core::array::from_fn(|i| core::array::from_fn(|j| 0.5 * (x[i][j] + cof(i, j) / det)));
        let mut delta: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                delta = delta.max(math::abs(next[i][j] - x[i][j]));
            }
        }
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

/// Pose from a packed twist stored in a tensor row (six entries per pose).
pub fn poses_from_twists(twists: &Tensor) -> alloc::vec::Vec<RigidTransform> {
    twists
        .data()
        .chunks_exact(6)
        .map(|c| se3_exp(&Twist::from_array([c[0], c[1], c[2], c[3], c[4], c[5]])))
        .collect()
}
