//! Continuous-time camera trajectories: a uniform cumulative cubic B-spline
//! on SE(3), and geodesic interpolation between two poses.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ad::{Real, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::lie::{compose, se3_exp, se3_log, Pose, RigidTransform, Twist};
use crate::math;

/// Rounding slack accepted at the closed end of a spline domain.
const DOMAIN_SLACK: f64 = 1e-9;

/// Anything that yields a camera-to-world pose at a normalized time.
pub trait Trajectory {
    fn pose_at(&self, t: f64) -> Result<RigidTransform>;
}

/// Cumulative basis weights `C * [1, u, u^2, u^3]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CumulativeBasis(pub [f64; 4]);

/// Cumulative cubic B-spline basis at `u`.
pub fn cumulative_basis(u: f64) -> CumulativeBasis {
    const C: [[f64; 4]; 4] = [
        [6.0, 0.0, 0.0, 0.0],
        [5.0, 3.0, -3.0, 1.0],
        [1.0, 3.0, 3.0, -2.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let powers = [1.0, u, u * u, u * u * u];
    CumulativeBasis(core::array::from_fn(|i| {
        (C[i][0] * powers[0] + C[i][1] * powers[1] + C[i][2] * powers[2] + C[i][3] * powers[3]) / 6.0
    }))
}

/// Segment index `k` and local parameter `u` for time `t`. The closing
/// instant of the domain maps to `u = 1` on the last segment.
pub fn knot_index(t: f64, t0: f64, dt: f64, knot_count: usize) -> Result<(usize, f64)> {
    let segments = knot_count.checked_sub(3).filter(|s| *s > 0).ok_or(Error::TooFewKnots { min: 4, got: knot_count })?;
    let x = (t - t0) / dt;
    let end = segments as f64;
    if !(x >= 0.0 && x <= end + DOMAIN_SLACK) {
        return Err(Error::OutOfDomain { t, start: t0, end: t0 + end * dt });
    }
    let k = (math::floor(x) as usize).min(segments - 1);
    Ok((k, (x - k as f64).min(1.0)))
}

/// Increments `log(T_i^-1 T_{i+1})` between consecutive knots.
pub fn knot_increments<S: Real>(knots: &[Pose<S>]) -> Result<Vec<Twist<S>>> {
    knots.windows(2).map(|w| se3_log(&w[0].inverse().compose(&w[1]))).collect()
}

/// `T_k * prod_j exp(B_{j+1}(u) * Omega_{k+j})`.
pub fn spline_pose<S: Real>(knots: &[Pose<S>], increments: &[Twist<S>], k: usize, u: f64) -> Pose<S> {
    let b = cumulative_basis(u).0;
    let mut pose = knots[k];
    for j in 0..3 {
        pose = pose.compose(&se3_exp(&increments[k + j].scaled(b[j + 1])));
    }
    pose
}

/// Geodesic `start * exp(s * log(start^-1 end))`.
pub fn geodesic_pose<S: Real>(start: &Pose<S>, end: &Pose<S>, s: f64) -> Result<Pose<S>> {
    let delta = se3_log(&start.inverse().compose(end))?;
    Ok(start.compose(&se3_exp(&delta.scaled(s))))
}

/// Linear interpolation on SE(3) between two poses, `s` in `[0, 1]`.
pub fn pose_at_linear(s: f64, start: &RigidTransform, end: &RigidTransform) -> Result<RigidTransform> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfDomain { t: s, start: 0.0, end: 1.0 });
    }
    let p = geodesic_pose(start, end, s)?;
    Ok(compose(&p, &RigidTransform::identity()))
}

/// Uniform cubic B-spline with fixed knots.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineTrajectory {
    knots: Vec<RigidTransform>,
    t0: f64,
    dt: f64,
}

impl SplineTrajectory {
    pub fn new(knots: Vec<RigidTransform>, t0: f64, dt: f64) -> Result<Self> {
        if knots.len() < 4 {
            return Err(Error::TooFewKnots { min: 4, got: knots.len() });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidSpacing(dt));
        }
        Ok(Self { knots, t0, dt })
    }

    /// Knots spread so the queryable domain is exactly `[0, 1]`.
    pub fn over_unit_interval(knots: Vec<RigidTransform>) -> Result<Self> {
        let segments = knots.len().saturating_sub(3).max(1);
        Self::new(knots, 0.0, 1.0 / segments as f64)
    }

    pub fn knots(&self) -> &[RigidTransform] {
        &self.knots
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `[start, end]` of the queryable domain.
    pub fn domain(&self) -> (f64, f64) {
        (self.t0, self.t0 + (self.knots.len() - 3) as f64 * self.dt)
    }

    pub fn knot_index(&self, t: f64) -> Result<(usize, f64)> {
        knot_index(t, self.t0, self.dt, self.knots.len())
    }
}

impl Trajectory for SplineTrajectory {
    fn pose_at(&self, t: f64) -> Result<RigidTransform> {
        let (k, u) = self.knot_index(t)?;
        let increments = knot_increments(&self.knots[k..k + 4])?;
        let p = spline_pose(&self.knots[k..k + 4], &increments, 0, u);
        Ok(compose(&p, &RigidTransform::identity()))
    }
}

/// Random knots `exp(xi)` with every twist coordinate uniform in
/// `(0, magnitude)`, spanning the unit interval.
pub fn init_knots(count: usize, magnitude: f64, seed: u64) -> Result<SplineTrajectory> {
    if count < 4 {
        return Err(Error::TooFewKnots { min: 4, got: count });
    }
    if !(magnitude > 0.0) {
        return Err(Error::InvalidParameter("knot init magnitude must be positive"));
    }
    let twists = random_twists(count, magnitude, seed);
    SplineTrajectory::over_unit_interval(twists.iter().map(|xi| se3_exp(&Twist::from_array(*xi))).collect())
}

fn random_twists(count: usize, magnitude: f64, seed: u64) -> Vec<[f64; 6]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| core::array::from_fn(|_| rng.random_range(0.0..magnitude))).collect()
}

/// Trajectory representation used during optimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum TrajectoryKind {
    /// Cumulative cubic B-spline.
    #[default]
    Spline,
    /// Geodesic interpolation between a start and an end pose.
    Linear,
}

/// Optimizable trajectory: one twist per knot, materialized with `exp`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryParams {
    kind: TrajectoryKind,
    twists: Vec<[f64; 6]>,
}

impl TrajectoryParams {
    pub fn new(kind: TrajectoryKind, twists: Vec<[f64; 6]>) -> Result<Self> {
        match kind {
            TrajectoryKind::Spline if twists.len() < 4 => Err(Error::TooFewKnots { min: 4, got: twists.len() }),
            TrajectoryKind::Linear if twists.len() != 2 => {
                Err(Error::InvalidParameter("linear trajectory needs exactly two poses"))
            }
            _ => Ok(Self { kind, twists }),
        }
    }

    /// Random initialization near the identity. `knot_count` is ignored for
    /// the linear representation, which always has two poses.
    pub fn init(kind: TrajectoryKind, knot_count: usize, magnitude: f64, seed: u64) -> Result<Self> {
        if !(magnitude > 0.0) {
            return Err(Error::InvalidParameter("knot init magnitude must be positive"));
        }
        let count = match kind {
            TrajectoryKind::Spline => knot_count,
            TrajectoryKind::Linear => 2,
        };
        Self::new(kind, random_twists(count, magnitude, seed))
    }

    /// Parameters taken from existing poses.
    pub fn from_poses(kind: TrajectoryKind, poses: &[RigidTransform]) -> Result<Self> {
        let twists = poses.iter().map(|p| se3_log(p).map(|xi| xi.to_array())).collect::<Result<Vec<_>>>()?;
        Self::new(kind, twists)
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn twists(&self) -> &[[f64; 6]] {
        &self.twists
    }

    pub fn len(&self) -> usize {
        self.twists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.twists.is_empty()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.twists.iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.twists.len() * 6);
        for (dst, src) in self.twists.iter_mut().zip(flat.chunks_exact(6)) {
            dst.copy_from_slice(src);
        }
    }

    pub fn poses(&self) -> Vec<RigidTransform> {
        self.twists.iter().map(|xi| se3_exp(&Twist::from_array(*xi))).collect()
    }

    /// Value-level spline for inspection and export.
    pub fn to_spline(&self) -> Result<SplineTrajectory> {
        SplineTrajectory::over_unit_interval(self.poses())
    }

    /// Records the knots on `tape` as a single `1 x 6n` leaf.
    pub fn bind<'t>(&self, tape: &'t Tape) -> Result<BoundTrajectory<'t>> {
        let leaf = tape.leaf(Tensor::row(self.flat()));
        BoundTrajectory::from_leaf(self.kind, leaf)
    }
}

impl Trajectory for TrajectoryParams {
    fn pose_at(&self, t: f64) -> Result<RigidTransform> {
        match self.kind {
            TrajectoryKind::Spline => self.to_spline()?.pose_at(t),
            TrajectoryKind::Linear => {
                let poses = self.poses();
                pose_at_linear(t, &poses[0], &poses[1])
            }
        }
    }
}

/// A trajectory whose knots live on a tape.
pub struct BoundTrajectory<'t> {
    kind: TrajectoryKind,
    leaf: Var<'t>,
    knots: Vec<Pose<Var<'t>>>,
    increments: Vec<Twist<Var<'t>>>,
}

impl<'t> BoundTrajectory<'t> {
    pub fn from_leaf(kind: TrajectoryKind, leaf: Var<'t>) -> Result<Self> {
        let comps = leaf.components();
        let knots: Vec<Pose<Var<'t>>> = comps.chunks_exact(6).map(|c| se3_exp(&Twist::from_vars(c))).collect();
        let increments = knot_increments(&knots)?;
        Ok(Self { kind, leaf, knots, increments })
    }

    pub fn leaf(&self) -> Var<'t> {
        self.leaf
    }

    pub fn pose_at(&self, t: f64) -> Result<Pose<Var<'t>>> {
        match self.kind {
            TrajectoryKind::Spline => {
                let segments = self.knots.len() - 3;
                let (k, u) = knot_index(t, 0.0, 1.0 / segments as f64, self.knots.len())?;
                Ok(spline_pose(&self.knots, &self.increments, k, u))
            }
            TrajectoryKind::Linear => {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::OutOfDomain { t, start: 0.0, end: 1.0 });
                }
                Ok(self.knots[0].compose(&se3_exp(&self.increments[0].scaled(t))))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Direct matrix-vector product with the published coefficient matrix.
    fn basis_oracle(u: f64) -> [f64; 4] {
        let c = [[6.0, 0.0, 0.0, 0.0], [5.0, 3.0, -3.0, 1.0], [1.0, 3.0, 3.0, -2.0], [0.0, 0.0, 0.0, 1.0]];
        let p = [1.0, u, u * u, u * u * u];
        let mut out = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i] += c[i][j] * p[j] / 6.0;
            }
        }
        out
    }

    #[test]
    fn knot_index_examples() {
        assert_eq!(knot_index(0.0, 0.0, 0.1, 10).unwrap(), (0, 0.0));
        let (k, u) = knot_index(0.025, 0.0, 0.1, 10).unwrap();
        assert_eq!(k, 0);
        assert_abs_diff_eq!(u, 0.25, epsilon = 1e-12);
        let (k, u) = knot_index(1.75, 1.0, 0.5, 6).unwrap();
        assert_eq!(k, 1);
        assert_abs_diff_eq!(u, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn knot_index_domain() {
        assert!(matches!(knot_index(-0.01, 0.0, 1.0, 4), Err(Error::OutOfDomain { .. })));
        assert!(matches!(knot_index(1.01, 0.0, 1.0, 4), Err(Error::OutOfDomain { .. })));
        assert!(matches!(knot_index(f64::NAN, 0.0, 1.0, 4), Err(Error::OutOfDomain { .. })));
        assert_eq!(knot_index(1.0, 0.0, 1.0, 4).unwrap(), (0, 1.0));
        let (k, u) = knot_index(1.0, 0.0, 1.0 / 3.0, 6).unwrap();
        assert_eq!(k, 2);
        assert_abs_diff_eq!(u, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn basis_values() {
        assert_eq!(cumulative_basis(0.0).0, [1.0, 5.0 / 6.0, 1.0 / 6.0, 0.0]);
        let b = cumulative_basis(0.5).0;
        for (x, y) in b.iter().zip([1.0, 0.9791666666666666, 0.5, 0.020833333333333332]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
        }
        let b = cumulative_basis(1.0).0;
        for (x, y) in b.iter().zip([1.0, 1.0, 5.0 / 6.0, 1.0 / 6.0]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
        }
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let b = cumulative_basis(u).0;
            let o = basis_oracle(u);
            assert_eq!(b[0], 1.0);
            for j in 0..4 {
                assert_abs_diff_eq!(b[j], o[j], epsilon = 1e-12);
            }
            if u < 1.0 {
                assert!(b[0] >= b[1] && b[1] >= b[2] && b[2] >= b[3] && b[3] >= 0.0);
            }
        }
    }

    #[test]
    fn constant_splines() {
        let id = SplineTrajectory::over_unit_interval(vec![RigidTransform::identity(); 4]).unwrap();
        let t = se3_exp(&Twist::new([0.2, -0.4, 0.1], [1.0, 2.0, -3.0]));
        let fixed = SplineTrajectory::over_unit_interval(vec![t; 4]).unwrap();
        for i in 0..=10 {
            let s = i as f64 / 10.0;
            assert!(id.pose_at(s).unwrap().max_abs_diff(&RigidTransform::identity()) < 1e-15);
            assert!(fixed.pose_at(s).unwrap().max_abs_diff(&t) < 1e-12);
        }
    }

    #[test]
    fn translation_spline_midpoint() {
        let knots = (0..4).map(|x| RigidTransform::from_translation([x as f64, 0.0, 0.0])).collect();
        let s = SplineTrajectory::new(knots, 0.0, 1.0).unwrap();
        let p = s.pose_at(0.5).unwrap();
        assert_abs_diff_eq!(p.translation[0], 1.5, epsilon = 1e-12);
        assert!(p.max_abs_diff(&RigidTransform::from_translation([1.5, 0.0, 0.0])) < 1e-12);
    }

    #[test]
    fn uniform_translation_knots_trace_constant_velocity() {
        let d = 0.37;
        let knots = (0..7).map(|x| RigidTransform::from_translation([d * x as f64, -0.5 * d * x as f64, 0.0])).collect();
        let s = SplineTrajectory::new(knots, 2.0, 0.25).unwrap();
        let (a, b) = s.domain();
        let p0 = s.pose_at(a).unwrap().translation;
        let p1 = s.pose_at(b).unwrap().translation;
        for i in 0..=50 {
            let t = a + (b - a) * i as f64 / 50.0;
            let p = s.pose_at(t).unwrap().translation;
            let f = (t - a) / (b - a);
            for c in 0..3 {
                assert_abs_diff_eq!(p[c], p0[c] + f * (p1[c] - p0[c]), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn continuous_across_segment_boundary() {
        let knots: Vec<_> = (0..6)
            .map(|i| se3_exp(&Twist::new([0.1 * i as f64, -0.05 * i as f64, 0.02], [0.3 * i as f64, 0.1, -0.2])))
            .collect();
        let s = SplineTrajectory::new(knots.clone(), 0.0, 0.5).unwrap();
        let left = {
            let inc = knot_increments(&knots).unwrap();
            spline_pose(&knots, &inc, 0, 1.0)
        };
        let right = s.pose_at(0.5).unwrap();
        assert!(left.max_abs_diff(&right) < 1e-9);
    }

    #[test]
    fn linear_interpolation_examples() {
        let a = se3_exp(&Twist::new([0.1, 0.2, 0.3], [1.0, 0.0, 0.0]));
        let b = se3_exp(&Twist::new([-0.2, 0.1, 0.0], [0.0, 2.0, 0.0]));
        assert!(pose_at_linear(0.0, &a, &b).unwrap().max_abs_diff(&a) < 1e-12);
        assert!(pose_at_linear(1.0, &a, &b).unwrap().max_abs_diff(&b) < 1e-12);
        let p = pose_at_linear(0.25, &RigidTransform::identity(), &RigidTransform::from_translation([2.0, 0.0, 0.0]))
            .unwrap();
        assert!(p.max_abs_diff(&RigidTransform::from_translation([0.5, 0.0, 0.0])) < 1e-15);
    }

    #[test]
    fn init_knots_contract() {
        let a = init_knots(4, 0.01, 7).unwrap();
        let b = init_knots(4, 0.01, 7).unwrap();
        assert_eq!(a, b);
        for k in a.knots() {
            let xi = se3_log(k).unwrap();
            assert!(xi.norm_inf() <= 0.01 * 1.01, "{xi:?}");
        }
        let tiny = init_knots(5, 1e-12, 3).unwrap();
        for k in tiny.knots() {
            assert!(k.max_abs_diff(&RigidTransform::identity()) < 1e-11);
        }
        assert!(init_knots(3, 0.01, 0).is_err());
    }

    #[test]
    fn bound_trajectory_matches_values() {
        let params = TrajectoryParams::new(
            TrajectoryKind::Spline,
            vec![[0.01, 0.02, -0.03, 0.1, 0.0, 0.2], [0.05, 0.0, 0.01, 0.2, 0.1, 0.1], [0.1, -0.1, 0.0, 0.0, 0.3, 0.0], [0.0, 0.05, 0.02, -0.1, 0.0, 0.4]],
        )
        .unwrap();
        let tape = Tape::new();
        let bound = params.bind(&tape).unwrap();
        for t in [0.0, 0.3, 0.77, 1.0] {
            let v = bound.pose_at(t).unwrap().to_value();
            assert!(v.max_abs_diff(&params.pose_at(t).unwrap()) < 1e-12);
        }
        let lin = TrajectoryParams::new(TrajectoryKind::Linear, params.twists()[..2].to_vec()).unwrap();
        let bound = lin.bind(&tape).unwrap();
        let v = bound.pose_at(0.4).unwrap().to_value();
        assert!(v.max_abs_diff(&lin.pose_at(0.4).unwrap()) < 1e-12);
    }

    fn twist_vec(rot: f64) -> impl Strategy<Value = [f64; 6]> {
        (prop::array::uniform3(-rot..rot), prop::array::uniform3(-1.0..1.0f64)).prop_map(|(w, v)| [w[0], w[1], w[2], v[0], v[1], v[2]])
    }

    proptest! {
        #[test]
        fn basis_closure_and_order(u in 0.0..1.0f64) {
            let b = cumulative_basis(u).0;
            prop_assert_eq!(b[0], 1.0);
            prop_assert!(b[0] >= b[1] && b[1] >= b[2] && b[2] >= b[3] && b[3] >= 0.0);
        }

        #[test]
        fn pure_translation_is_affine(d in prop::array::uniform3(-2.0..2.0f64), n in 4usize..9, t in 0.0..=1.0f64) {
            let knots = (0..n).map(|i| RigidTransform::from_translation(d.map(|c| c * i as f64))).collect();
            let s = SplineTrajectory::over_unit_interval(knots).unwrap();
            let a = s.pose_at(0.0).unwrap().translation;
            let b = s.pose_at(1.0).unwrap().translation;
            let p = s.pose_at(t).unwrap();
            for c in 0..3 {
                prop_assert!((p.translation[c] - (a[c] + t * (b[c] - a[c]))).abs() < 1e-9);
            }
            prop_assert!(p.max_abs_diff(&RigidTransform::from_translation(p.translation)) < 1e-12);
        }

        #[test]
        fn segments_join_continuously(twists in prop::collection::vec(twist_vec(0.8), 5..8), seg in 0usize..4) {
            let knots: Vec<_> = twists.iter().map(|x| se3_exp(&Twist::from_array(*x))).collect();
            let segments = knots.len() - 3;
            let k = seg % (segments - 1);
            let inc = knot_increments(&knots).unwrap();
            let left = spline_pose(&knots, &inc, k, 1.0);
            let right = spline_pose(&knots, &inc, k + 1, 0.0);
            prop_assert!(left.max_abs_diff(&right) < 1e-9);
        }

        #[test]
        fn knot_gradients_match_differences(
            twists in prop::collection::vec(twist_vec(0.3), 4..6),
            t in 0.0..=1.0f64,
            w in prop::array::uniform12(-1.0..1.0f64),
        ) {
            let params = TrajectoryParams::new(TrajectoryKind::Spline, twists).unwrap();
            let tape = Tape::new();
            let bound = params.bind(&tape).unwrap();
            let pose = bound.pose_at(t).unwrap();
            let rw = tape.constant(Tensor::new(3, 3, w[..9].to_vec()));
            let tw = tape.constant(Tensor::row(w[9..].to_vec()));
            let f = (pose.rotation_var(&tape) * rw).sum() + (pose.translation_var(&tape) * tw).sum();
            let grads = tape.backward(f).unwrap();
            let analytic = grads.wrt(bound.leaf()).into_data();
            let value = |flat: &[f64]| {
                let mut p = params.clone();
                p.set_flat(flat);
                let pose = p.pose_at(t).unwrap();
                (0..9).map(|i| pose.rotation[i / 3][i % 3] * w[i]).sum::<f64>() + (0..3).map(|i| pose.translation[i] * w[9 + i]).sum::<f64>()
            };
            let h = 1e-5;
            let flat = params.flat();
            for i in 0..flat.len() {
                let mut p = flat.clone();
                p[i] += h;
                let plus = value(&p);
                p[i] -= 2.0 * h;
                let fd = (plus - value(&p)) / (2.0 * h);
                let err = (analytic[i] - fd).abs();
                prop_assert!(err <= 1e-4 * fd.abs().max(1e-4), "coordinate {}: analytic {} fd {}", i, analytic[i], fd);
            }
        }
    }
}
