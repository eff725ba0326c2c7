//! Pose samples as text, one `t tx ty tz qx qy qz qw` line per sample.
//! Poses are camera-to-world.

use std::fs;
use std::path::Path;

use blurev_core::spline::Trajectory;
use blurev_core::RigidTransform;

use crate::error::{Error, Result};

/// `count` uniform samples over `[0, 1]`, endpoints included.
pub fn sample_times(count: usize) -> Vec<f64> {
    (0..count).map(|i| i as f64 / (count.max(2) - 1) as f64).collect()
}

pub fn sample_trajectory(traj: &dyn Trajectory, count: usize) -> Result<Vec<(f64, RigidTransform)>> {
    sample_times(count).into_iter().map(|t| Ok((t, traj.pose_at(t)?))).collect()
}

pub fn format_samples(samples: &[(f64, RigidTransform)]) -> String {
    let mut s = String::from("# t tx ty tz qx qy qz qw\n");
    for (t, p) in samples {
        let q = p.quaternion();
        let [x, y, z] = p.translation;
        s.push_str(&format!("{t:?} {x:?} {y:?} {z:?} {:?} {:?} {:?} {:?}\n", q[0], q[1], q[2], q[3]));
    }
    s
}

pub fn write_samples(path: &Path, samples: &[(f64, RigidTransform)]) -> Result<()> {
    fs::write(path, format_samples(samples)).map_err(Error::io(path))
}

pub fn read_samples(path: &Path) -> Result<Vec<(f64, RigidTransform)>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|e| Error::parse(path, format!("line {}", n + 1), e)))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != 8 {
            return Err(Error::parse(path, format!("line {}", n + 1), format!("expected 8 values, got {}", v.len())));
        }
        let pose = RigidTransform::from_quaternion([v[4], v[5], v[6], v[7]], [v[1], v[2], v[3]]);
        out.push((v[0], pose));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use blurev_core::lie::se3_exp;
    use blurev_core::Twist;

    #[test]
    fn text_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.txt");
        let samples: Vec<_> = sample_times(5)
            .into_iter()
            .map(|t| (t, se3_exp(&Twist::new([0.1 * t, -0.2, 0.3], [t, 2.0, -1.0]))))
            .collect();
        write_samples(&p, &samples).unwrap();
        let back = read_samples(&p).unwrap();
        assert_eq!(back.len(), 5);
        for ((t0, a), (t1, b)) in samples.iter().zip(&back) {
            assert_eq!(t0, t1);
            assert_eq!(a.translation, b.translation);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a.rotation[i][j] - b.rotation[i][j]).abs() < 1e-14);
                }
            }
        }
        fs::write(&p, "0 1 2 3\n").unwrap();
        assert!(matches!(read_samples(&p), Err(Error::Parse { .. })));
    }
}
