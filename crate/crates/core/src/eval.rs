//! Trajectory error after removing the unobservable similarity gauge.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lie::{polar_rotation, RigidTransform};
use crate::math;
use crate::spline::Trajectory;

/// `x -> s R x + t` applied to camera-to-world poses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeAlignment {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub scale: f64,
}

impl GaugeAlignment {
    pub fn identity() -> Self {
        Self { rotation: RigidTransform::identity().rotation, translation: [0.0; 3], scale: 1.0 }
    }

    pub fn apply(&self, pose: &RigidTransform) -> RigidTransform {
        let g = RigidTransform { rotation: self.rotation, translation: [0.0; 3] };
        let mut out = g.compose(pose);
        for i in 0..3 {
            out.translation[i] = self.scale * out.translation[i] + self.translation[i];
        }
        out
    }
}

fn matmul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    core::array::from_fn(|i| core::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

fn transpose3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    core::array::from_fn(|i| core::array::from_fn(|j| a[j][i]))
}

/// Rotation from the chordal mean of `R_gt R_est^T`, then scale and
/// translation by least squares with that rotation fixed. Scale is clamped
/// at zero and falls back to 1 when the estimate does not translate.
pub fn align_gauge(estimate: &[RigidTransform], reference: &[RigidTransform]) -> Result<GaugeAlignment> {
    if estimate.len() != reference.len() || estimate.is_empty() {
        return Err(Error::ShapeMismatch("trajectories need equal, non-zero sample counts"));
    }
    let mut m = [[0.0; 3]; 3];
    for (e, r) in estimate.iter().zip(reference) {
        let p = matmul3(&r.rotation, &transpose3(&e.rotation));
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += p[i][j];
            }
        }
    }
    let rotation = polar_rotation(&m);
    let g = RigidTransform { rotation, translation: [0.0; 3] };
    let p: Vec<[f64; 3]> = estimate.iter().map(|e| g.rotate(&e.translation)).collect();
    let q: Vec<[f64; 3]> = reference.iter().map(|r| r.translation).collect();
    let n = p.len() as f64;
    let mean = |v: &[[f64; 3]]| -> [f64; 3] { core::array::from_fn(|i| v.iter().map(|x| x[i]).sum::<f64>() / n) };
    let (pm, qm) = (mean(&p), mean(&q));
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in p.iter().zip(&q) {
        for i in 0..3 {
            num += (a[i] - pm[i]) * (b[i] - qm[i]);
            den += (a[i] - pm[i]) * (a[i] - pm[i]);
        }
    }
    let scale = if den > 1e-24 { (num / den).max(0.0) } else { 1.0 };
    let translation = core::array::from_fn(|i| qm[i] - scale * pm[i]);
    Ok(GaugeAlignment { rotation, translation, scale })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryError {
    pub alignment: GaugeAlignment,
    /// Per-sample geodesic rotation error, degrees.
    pub rotation_deg: Vec<f64>,
    /// Per-sample translation error, scene units.
    pub translation: Vec<f64>,
}

impl TrajectoryError {
    pub fn rotation_rmse_deg(&self) -> f64 {
        rms(&self.rotation_deg)
    }

    pub fn translation_rmse(&self) -> f64 {
        rms(&self.translation)
    }
}

fn rms(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64)
}

/// Errors of gauge-aligned `estimate` against `reference` sample by sample.
pub fn pose_errors(estimate: &[RigidTransform], reference: &[RigidTransform]) -> Result<TrajectoryError> {
    let alignment = align_gauge(estimate, reference)?;
    let mut rotation_deg = Vec::with_capacity(estimate.len());
    let mut translation = Vec::with_capacity(estimate.len());
    for (e, r) in estimate.iter().zip(reference) {
        let aligned = alignment.apply(e);
        let rel = RigidTransform { rotation: matmul3(&transpose3(&r.rotation), &aligned.rotation), translation: [0.0; 3] };
        rotation_deg.push(rel.rotation_angle().to_degrees());
        let d: [f64; 3] = core::array::from_fn(|i| aligned.translation[i] - r.translation[i]);
        translation.push(math::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]));
    }
    Ok(TrajectoryError { alignment, rotation_deg, translation })
}

/// Samples both trajectories at `samples` uniform times in `[0, 1]`.
pub fn trajectory_error(estimate: &dyn Trajectory, reference: &dyn Trajectory, samples: usize) -> Result<TrajectoryError> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two trajectory samples"));
    }
    let times = (0..samples).map(|i| i as f64 / (samples - 1) as f64);
    let mut est = Vec::with_capacity(samples);
    let mut gt = Vec::with_capacity(samples);
    for t in times {
        est.push(estimate.pose_at(t)?);
        gt.push(reference.pose_at(t)?);
    }
    pose_errors(&est, &gt)
}
