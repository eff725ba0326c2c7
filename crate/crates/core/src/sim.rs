//! Procedural ground-truth scenes, reference-level event simulation and
//! blur synthesis.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ad::LOG_EPS;
use crate::error::{Error, Result};
use crate::events::{Event, EventStream};
use crate::image::Image;
use crate::lie::{se3_exp, RigidTransform, Twist};
use crate::math;
use crate::render::{make_ray, CameraIntrinsics, Ray};
use crate::spline::{SplineTrajectory, Trajectory};
use crate::synth::luminance;

/// One planar sinusoid of a texture.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Wave {
    pub k: [f64; 2],
    pub phase: f64,
    pub amplitude: [f64; 3],
}

/// Smooth colour texture `base + swing * tanh(gain * sum(amplitude * sin(k . uv + phase)))`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Texture {
    pub base: [f64; 3],
    pub swing: f64,
    pub gain: f64,
    pub waves: Vec<Wave>,
}

impl Texture {
    /// `count` waves with spatial periods between `min_period` and
    /// `max_period` scene units.
    pub fn random(count: usize, min_period: f64, max_period: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = 1.0 / count.max(1) as f64;
        let waves = (0..count)
            .map(|_| {
                let period = rng.random_range(min_period..max_period);
                let angle = rng.random_range(0.0..PI);
                let f = 2.0 * PI / period;
                Wave {
                    k: [f * math::cos(angle), f * math::sin(angle)],
                    phase: rng.random_range(0.0..2.0 * PI),
                    amplitude: core::array::from_fn(|_| amp * rng.random_range(0.4..1.0)),
                }
            })
            .collect();
        Self { base: [0.5; 3], swing: 0.42, gain: 4.0, waves }
    }

    pub fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for w in &self.waves {
            let s = math::sin(w.k[0] * u + w.k[1] * v + w.phase);
            for i in 0..3 {
                acc[i] += w.amplitude[i] * s;
            }
        }
        core::array::from_fn(|i| (self.base[i] + self.swing * math::tanh(self.gain * acc[i])).clamp(0.0, 1.0))
    }
}

/// Textured plane `z = depth` facing the origin.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TexturedPlane {
    pub depth: f64,
    pub texture: Texture,
}

/// Camera inside an axis-aligned textured room with a solid box occluder.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxRoom {
    pub room_min: [f64; 3],
    pub room_max: [f64; 3],
    pub occluder_min: [f64; 3],
    pub occluder_max: [f64; 3],
    pub texture: Texture,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sphere {
    pub center: [f64; 3],
    pub radius: f64,
    pub albedo: [f64; 3],
}

/// Lambertian spheres in front of a textured backdrop plane.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Spheres {
    pub spheres: Vec<Sphere>,
    pub backdrop: TexturedPlane,
    pub light_dir: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum GroundTruthScene {
    TexturedPlane(TexturedPlane),
    VoxelBoxRoom(BoxRoom),
    AnalyticSpheres(Spheres),
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn at(ray: &Ray, s: f64) -> [f64; 3] {
    core::array::from_fn(|i| ray.origin[i] + s * ray.dir[i])
}

/// Entry and exit distances of a ray through an axis-aligned box.
fn slab(ray: &Ray, lo: &[f64; 3], hi: &[f64; 3]) -> Option<(f64, f64, usize, usize)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    let (mut a0, mut a1) = (0, 0);
    for i in 0..3 {
        if ray.dir[i] == 0.0 {
            if ray.origin[i] < lo[i] || ray.origin[i] > hi[i] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / ray.dir[i];
        let (mut n, mut f) = ((lo[i] - ray.origin[i]) * inv, (hi[i] - ray.origin[i]) * inv);
        if n > f {
            core::mem::swap(&mut n, &mut f);
        }
        if n > t0 {
            t0 = n;
            a0 = i;
        }
        if f < t1 {
            t1 = f;
            a1 = i;
        }
    }
    (t0 <= t1).then_some((t0, t1, a0, a1))
}

/// Texture coordinates on a face perpendicular to `axis`.
fn face_uv(p: &[f64; 3], axis: usize) -> (f64, f64) {
    match axis {
        0 => (p[2], p[1]),
        1 => (p[0], p[2]),
        _ => (p[0], p[1]),
    }
}

const FACE_TINT: [[f64; 3]; 3] = [[1.0, 0.85, 0.85], [0.85, 1.0, 0.85], [0.85, 0.85, 1.0]];

impl TexturedPlane {
    fn hit(&self, ray: &Ray) -> Option<(f64, [f64; 3])> {
        if ray.dir[2] <= 0.0 {
            return None;
        }
        let s = (self.depth - ray.origin[2]) / ray.dir[2];
        if s <= 0.0 {
            return None;
        }
        let p = at(ray, s);
        Some((s, self.texture.sample(p[0], p[1])))
    }
}

impl GroundTruthScene {
    /// Plane at `depth` with a seeded texture of 6 waves, periods 0.6 to 2.0.
    pub fn textured_plane(depth: f64, seed: u64) -> Self {
        GroundTruthScene::TexturedPlane(TexturedPlane { depth, texture: Texture::random(6, 0.6, 2.0, seed) })
    }

    pub fn box_room(seed: u64) -> Self {
        GroundTruthScene::VoxelBoxRoom(BoxRoom {
            room_min: [-3.0, -3.0, -2.0],
            room_max: [3.0, 3.0, 6.0],
            occluder_min: [-0.6, -0.6, 2.5],
            occluder_max: [0.6, 0.6, 3.7],
            texture: Texture::random(5, 0.5, 2.0, seed),
        })
    }

    pub fn spheres(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let spheres = (0..3)
            .map(|i| Sphere {
                center: [(i as f64 - 1.0) * 1.1, rng.random_range(-0.4..0.4), rng.random_range(3.2..4.0)],
                radius: rng.random_range(0.35..0.55),
                albedo: core::array::from_fn(|_| rng.random_range(0.3..0.9)),
            })
            .collect();
        GroundTruthScene::AnalyticSpheres(Spheres {
            spheres,
            backdrop: TexturedPlane { depth: 5.5, texture: Texture::random(5, 0.8, 2.5, seed) },
            light_dir: [-0.4, -0.5, -0.77],
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            GroundTruthScene::TexturedPlane(_) => "textured-plane",
            GroundTruthScene::VoxelBoxRoom(_) => "voxel-box-room",
            GroundTruthScene::AnalyticSpheres(_) => "analytic-spheres",
        }
    }

    /// Linear RGB seen along `ray`; black when nothing is hit.
    pub fn radiance(&self, ray: &Ray) -> [f64; 3] {
        match self {
            GroundTruthScene::TexturedPlane(p) => p.hit(ray).map_or([0.0; 3], |h| h.1),
            GroundTruthScene::VoxelBoxRoom(room) => {
                if let Some((t0, _, axis, _)) = slab(ray, &room.occluder_min, &room.occluder_max) {
                    if t0 > 0.0 {
                        let p = at(ray, t0);
                        let (u, v) = face_uv(&p, axis);
                        let c = room.texture.sample(2.0 * u + 7.0, 2.0 * v - 3.0);
                        return c.map(|x| 0.9 * x);
                    }
                }
                match slab(ray, &room.room_min, &room.room_max) {
                    Some((_, t1, _, axis)) if t1 > 0.0 => {
                        let p = at(ray, t1);
                        let (u, v) = face_uv(&p, axis);
                        let c = room.texture.sample(u, v);
                        core::array::from_fn(|i| c[i] * FACE_TINT[axis][i])
                    }
                    _ => [0.0; 3],
                }
            }
            GroundTruthScene::AnalyticSpheres(scene) => {
                let mut best: Option<(f64, &Sphere)> = None;
                for s in &scene.spheres {
                    let oc: [f64; 3] = core::array::from_fn(|i| ray.origin[i] - s.center[i]);
                    let b = dot(&oc, &ray.dir);
                    let c = dot(&oc, &oc) - s.radius * s.radius;
                    let disc = b * b - c;
                    if disc < 0.0 {
                        continue;
                    }
                    let t = -b - math::sqrt(disc);
                    if t > 0.0 && best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, s));
                    }
                }
                match best {
                    Some((t, s)) => {
                        let p = at(ray, t);
                        let n: [f64; 3] = core::array::from_fn(|i| (p[i] - s.center[i]) / s.radius);
                        let l = scene.light_dir;
                        let ln = math::sqrt(dot(&l, &l));
                        let shade = 0.25 + 0.7 * (-dot(&n, &l) / ln).max(0.0);
                        core::array::from_fn(|i| (s.albedo[i] * shade).clamp(0.0, 1.0))
                    }
                    None => scene.backdrop.hit(ray).map_or([0.0; 3], |h| h.1),
                }
            }
        }
    }

    pub fn render(&self, pose: &RigidTransform, k: &CameraIntrinsics) -> Image {
        let pixels: Vec<[f64; 3]> = (0..k.height)
            .flat_map(|y| (0..k.width).map(move |x| (x, y)))
            .map(|px| self.radiance(&make_ray(px, pose, k)))
            .collect();
        Image::from_rgb(k.width, k.height, &pixels).unwrap_or_else(|_| Image::new(k.width, k.height, 3))
    }

    /// Guarded log-luminance `ln(Y + eps)` per pixel.
    pub fn log_luminance(&self, pose: &RigidTransform, k: &CameraIntrinsics, eps: f64) -> Vec<f64> {
        let img = self.render(pose, k);
        img.data().chunks_exact(3).map(|c| math::ln(luminance([c[0], c[1], c[2]]) + eps)).collect()
    }
}

/// Ground-truth motion over the exposure: constant velocity `velocity`
/// (twist traversed across `[0, 1]`) about `center`, plus knot offsets
/// `wobble * [1, -1, -1, 1]` that bow the path.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MotionSpec {
    pub center: RigidTransform,
    pub velocity: [f64; 6],
    pub wobble: [f64; 6],
}

impl MotionSpec {
    /// Random axis and direction with the given total rotation (degrees) and
    /// translation (scene units) across the exposure.
    pub fn random(rotation_deg: f64, translation: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut unit = || {
            let v: [f64; 3] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let n = math::sqrt(dot(&v, &v)).max(1e-9);
            v.map(|x| x / n)
        };
        let axis = unit();
        let dir = unit();
        let angle = rotation_deg.to_radians();
        let velocity = [axis[0] * angle, axis[1] * angle, axis[2] * angle, dir[0] * translation, dir[1] * translation, dir[2] * translation];
        Self { center: RigidTransform::identity(), velocity, wobble: [0.0; 6] }
    }

    pub fn trajectory(&self) -> Result<SplineTrajectory> {
        const OFFSETS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
        let knots = (0..4)
            .map(|i| {
                let s = i as f64 - 1.5;
                let drift = se3_exp(&Twist::from_array(self.velocity.map(|v| v * s)));
                let bow = se3_exp(&Twist::from_array(self.wobble.map(|v| v * OFFSETS[i])));
                self.center.compose(&drift).compose(&bow)
            })
            .collect();
        SplineTrajectory::over_unit_interval(knots)
    }
}

/// Reference-level event generation from log frames sampled at `times`.
/// `frames[j]` holds one value per pixel.
pub fn events_from_log_frames(
    frames: &[Vec<f64>],
    times: &[f64],
    width: usize,
    height: usize,
    contrast: f64,
) -> Result<EventStream> {
    if frames.len() < 2 || frames.len() != times.len() {
        return Err(Error::InvalidParameter("need at least two frames with matching timestamps"));
    }
    if !(contrast > 0.0) {
        return Err(Error::InvalidParameter("contrast threshold must be positive"));
    }
    if frames.iter().any(|f| f.len() != width * height) {
        return Err(Error::ShapeMismatch("frame size does not match sensor"));
    }
    let mut events = Vec::new();
    for px in 0..width * height {
        let (x, y) = ((px % width) as u16, (px / width) as u16);
        let origin = frames[0][px];
        let mut level = 0i64;
        for j in 1..frames.len() {
            let (l0, l1) = (frames[j - 1][px], frames[j][px]);
            let (t0, t1) = (times[j - 1], times[j]);
            let mut emit = |level: i64, polarity: i8| {
                let crossing = origin + level as f64 * contrast;
                let frac = ((crossing - l0) / (l1 - l0)).clamp(0.0, 1.0);
                events.push(Event { t: t0 + frac * (t1 - t0), x, y, polarity });
            };
            while l1 - (origin + level as f64 * contrast) >= contrast {
                level += 1;
                emit(level, 1);
            }
            while (origin + level as f64 * contrast) - l1 >= contrast {
                level -= 1;
                emit(level, -1);
            }
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
    EventStream::new(width, height, contrast, events)
}

/// Events along `traj` from `frames` uniformly spaced renders.
pub fn simulate_events(
    scene: &GroundTruthScene,
    traj: &dyn Trajectory,
    k: &CameraIntrinsics,
    frames: usize,
    contrast: f64,
    eps: f64,
) -> Result<EventStream> {
    if frames < 2 {
        return Err(Error::InvalidParameter("need at least two simulator frames"));
    }
    let times: Vec<f64> = (0..frames).map(|i| i as f64 / (frames - 1) as f64).collect();
    let logs = times
        .iter()
        .map(|&t| Ok(scene.log_luminance(&traj.pose_at(t)?, k, eps)))
        .collect::<Result<Vec<_>>>()?;
    events_from_log_frames(&logs, &times, k.width, k.height, contrast)
}

/// Blurry image and the sharp frames it averages.
#[derive(Clone, Debug, PartialEq)]
pub struct BlurSimulation {
    pub blurry: Image,
    pub sharp: Vec<Image>,
    pub times: Vec<f64>,
}

pub fn simulate_blur(scene: &GroundTruthScene, traj: &dyn Trajectory, k: &CameraIntrinsics, n_gt: usize) -> Result<BlurSimulation> {
    if n_gt < 2 {
        return Err(Error::InvalidParameter("need at least two sharp frames"));
    }
    let times: Vec<f64> = (0..n_gt).map(|i| i as f64 / (n_gt - 1) as f64).collect();
    let sharp = times.iter().map(|&t| Ok(scene.render(&traj.pose_at(t)?, k))).collect::<Result<Vec<_>>>()?;
    let blurry = Image::mean_of(&sharp)?;
    Ok(BlurSimulation { blurry, sharp, times })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SimSettings {
    /// Log frames rendered for event generation.
    pub frames: usize,
    /// Sharp frames averaged into the blurry image.
    pub n_gt: usize,
    pub contrast: f64,
    pub log_eps: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self { frames: 200, n_gt: 51, contrast: 0.2, log_eps: LOG_EPS }
    }
}

/// Everything the simulator produces for one exposure.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedData {
    pub blur: BlurSimulation,
    pub events: EventStream,
}

pub fn simulate(scene: &GroundTruthScene, traj: &dyn Trajectory, k: &CameraIntrinsics, s: &SimSettings) -> Result<SimulatedData> {
    Ok(SimulatedData {
        blur: simulate_blur(scene, traj, k, s.n_gt)?,
        events: simulate_events(scene, traj, k, s.frames, s.contrast, s.log_eps)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{accumulate_events, EventWindow};
    use alloc::vec;
    use proptest::prelude::*;

    fn camera() -> CameraIntrinsics {
        CameraIntrinsics::new(20.0, 20.0, 12.0, 10.0, 24, 20).unwrap()
    }

    fn moving() -> SplineTrajectory {
        let spec = MotionSpec { velocity: [0.0, 0.02, 0.03, 0.15, -0.05, 0.1], ..MotionSpec::random(0.0, 0.0, 0) };
        spec.trajectory().unwrap()
    }

    #[test]
    fn ramp_emits_integer_crossings() {
        let frames: Vec<Vec<f64>> = (0..11).map(|i| vec![0.7 * i as f64 / 10.0]).collect();
        let times: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let s = events_from_log_frames(&frames, &times, 1, 1, 0.23).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.events().iter().all(|e| e.polarity == 1));
        let expected = [0.23, 0.46, 0.69].map(|l| l / 0.7);
        for (e, t) in s.events().iter().zip(expected) {
            assert!((e.t - t).abs() < 1e-12);
        }
    }

    #[test]
    fn static_trajectory_is_silent() {
        let traj = SplineTrajectory::over_unit_interval(vec![RigidTransform::identity(); 4]).unwrap();
        for scene in [GroundTruthScene::textured_plane(4.0, 1), GroundTruthScene::box_room(1), GroundTruthScene::spheres(1)] {
            assert!(simulate_events(&scene, &traj, &camera(), 20, 0.2, LOG_EPS).unwrap().is_empty());
            let b = simulate_blur(&scene, &traj, &camera(), 5).unwrap();
            for (x, y) in b.blurry.data().iter().zip(b.sharp[2].data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn time_reversal_flips_polarity() {
        let scene = GroundTruthScene::textured_plane(4.0, 2);
        let k = camera();
        let traj = moving();
        let times: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let logs: Vec<Vec<f64>> = times.iter().map(|&t| scene.log_luminance(&traj.pose_at(t).unwrap(), &k, LOG_EPS)).collect();
        let forward = events_from_log_frames(&logs, &times, k.width, k.height, 0.2).unwrap();
        let reversed: Vec<Vec<f64>> = logs.iter().rev().cloned().collect();
        let backward = events_from_log_frames(&reversed, &times, k.width, k.height, 0.2).unwrap();
        assert!(!forward.is_empty());
        let net = |s: &EventStream| {
            let mut n = vec![0i64; k.pixel_count()];
            for e in s.events() {
                n[e.y as usize * k.width + e.x as usize] += e.polarity as i64;
            }
            n
        };
        let (a, b) = (net(&forward), net(&backward));
        let mut checked = 0;
        for px in 0..k.pixel_count() {
            let rising = logs.windows(2).all(|w| w[1][px] >= w[0][px]);
            let falling = logs.windows(2).all(|w| w[1][px] <= w[0][px]);
            if rising || falling {
                assert_eq!(a[px], -b[px]);
                checked += 1;
            }
        }
        assert!(checked > k.pixel_count() / 2);
    }

    #[test]
    fn brightening_pixels_emit_only_positive_events() {
        let frames: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sqrt(), -(i as f64) * 0.05]).collect();
        let times: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let s = events_from_log_frames(&frames, &times, 2, 1, 0.1).unwrap();
        for e in s.events() {
            assert_eq!(e.polarity, if e.x == 0 { 1 } else { -1 });
        }
    }

    #[test]
    fn simulation_is_deterministic_and_sorted() {
        let scene = GroundTruthScene::textured_plane(4.0, 3);
        let a = simulate_events(&scene, &moving(), &camera(), 50, 0.2, LOG_EPS).unwrap();
        let b = simulate_events(&scene, &moving(), &camera(), 50, 0.2, LOG_EPS).unwrap();
        assert_eq!(a, b);
        assert!(a.events().windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn blur_is_mean_of_sharp_frames() {
        let scene = GroundTruthScene::spheres(4);
        let b = simulate_blur(&scene, &moving(), &camera(), 7).unwrap();
        for (i, v) in b.blurry.data().iter().enumerate() {
            let vals: Vec<f64> = b.sharp.iter().map(|f| f.data()[i]).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
    }

    #[test]
    fn scenes_render_in_unit_range() {
        let k = camera();
        for scene in [GroundTruthScene::textured_plane(4.0, 5), GroundTruthScene::box_room(5), GroundTruthScene::spheres(5)] {
            let img = scene.render(&RigidTransform::identity(), &k);
            assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
            let mean = img.data().iter().sum::<f64>() / img.data().len() as f64;
            assert!(mean > 0.05, "{} renders black", scene.kind_name());
        }
    }

    #[test]
    fn motion_spec_hits_requested_magnitudes() {
        let spec = MotionSpec::random(4.0, 0.2, 9);
        let traj = spec.trajectory().unwrap();
        let rel = traj.pose_at(0.0).unwrap().inverse().compose(&traj.pose_at(1.0).unwrap());
        assert!((rel.rotation_angle().to_degrees() - 4.0).abs() < 1e-9);
        let mid = traj.pose_at(0.5).unwrap();
        assert!(mid.max_abs_diff(&RigidTransform::identity()) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn accumulation_tracks_log_change_for_monotone_pixels(
            steps in prop::collection::vec(0.0..0.05f64, 20..60),
            c in 0.05..0.3f64,
            a in 0usize..20,
            len in 1usize..20,
        ) {
            let mut l = vec![0.0];
            for s in &steps {
                l.push(l.last().unwrap() + s);
            }
            let n = l.len();
            let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let frames: Vec<Vec<f64>> = l.iter().map(|v| vec![*v]).collect();
            let s = events_from_log_frames(&frames, &times, 1, 1, c).unwrap();
            let i0 = a.min(n - 2);
            let i1 = (i0 + len).min(n - 1);
            // Window edges strictly between frames so no event sits on a bound.
            let ts = times[i0] + 1e-9;
            let te = times[i1] - 1e-9;
            prop_assume!(ts < te);
            let acc = accumulate_events(&s, &EventWindow::new(ts, te).unwrap(), c, &[(0, 0)])[0];
            let truth = l[i1] - l[i0];
            prop_assert!((acc - truth).abs() < c + 1e-9);
        }
    }
}
