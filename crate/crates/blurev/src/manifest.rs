//! Dataset manifest: JSON with a schema version. Paths are relative to the
//! manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use blurev_core::CameraIntrinsics;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub scene: u64,
    pub motion: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub scene: String,
    pub intrinsics: CameraIntrinsics,
    pub exposure_s: f64,
    pub near: f64,
    pub far: f64,
    pub contrast: f64,
    pub sim_frames: usize,
    pub event_file: PathBuf,
    pub blur_image: PathBuf,
    pub gt_trajectory: Option<PathBuf>,
    pub gt_sharp_frames: Option<Vec<PathBuf>>,
    /// Normalized times of `gt_sharp_frames`.
    pub gt_frame_times: Option<Vec<f64>>,
    pub seeds: Seeds,
}

const REQUIRED: [&str; 11] = [
    "schema_version",
    "scene",
    "intrinsics",
    "exposure_s",
    "near",
    "far",
    "contrast",
    "sim_frames",
    "event_file",
    "blur_image",
    "seeds",
];

impl DatasetManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    /// Parses and validates; errors name the offending field.
    pub fn from_json(path: &Path, text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::parse(path, "manifest", e))?;
        let obj = value.as_object().ok_or_else(|| Error::parse(path, "manifest", "expected a JSON object"))?;
        for key in REQUIRED {
            if obj.get(key).is_none_or(|v| v.is_null()) {
                return Err(Error::parse(path, key, "missing"));
            }
        }
        let version = obj["schema_version"].as_u64().ok_or_else(|| Error::parse(path, "schema_version", "not an integer"))?;
        if version != SCHEMA_VERSION as u64 {
            return Err(Error::VersionMismatch {
                path: path.into(),
                what: "manifest schema",
                expected: SCHEMA_VERSION.to_string(),
                found: version.to_string(),
            });
        }
        for (key, v) in obj {
            if let Err(e) = check_field(key, v) {
                return Err(Error::parse(path, key.as_str(), e));
            }
        }
        let m: DatasetManifest = serde_json::from_value(value).map_err(|e| Error::parse(path, "manifest", e))?;
        m.validate(path)?;
        Ok(m)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        self.intrinsics.validate().map_err(|source| Error::Validation { path: path.into(), source })?;
        if !(self.near < self.far && self.near > 0.0) {
            return Err(Error::parse(path, "near", "need 0 < near < far"));
        }
        if !(self.contrast > 0.0) {
            return Err(Error::parse(path, "contrast", "must be positive"));
        }
        match (&self.gt_sharp_frames, &self.gt_frame_times) {
            (Some(f), Some(t)) if f.len() == t.len() => {}
            (None, None) => {}
            _ => return Err(Error::parse(path, "gt_frame_times", "must accompany gt_sharp_frames one-to-one")),
        }
        if let Some(t) = &self.gt_frame_times {
            if t.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(Error::parse(path, "gt_frame_times", "times must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, self.to_json()).map_err(Error::io(path))
    }

    /// Reads `dir/manifest.json`, or `dir` itself when it is a file.
    pub fn read(path: &Path) -> Result<(Self, PathBuf)> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = fs::read_to_string(&file).map_err(Error::io(&file))?;
        let m = Self::from_json(&file, &text)?;
        let root = file.parent().map(Path::to_path_buf).unwrap_or_default();
        m.check_files(&file, &root)?;
        Ok((m, root))
    }

    fn check_files(&self, file: &Path, root: &Path) -> Result<()> {
        let mut refs: Vec<(String, &PathBuf)> = vec![("event_file".into(), &self.event_file), ("blur_image".into(), &self.blur_image)];
        if let Some(p) = &self.gt_trajectory {
            refs.push(("gt_trajectory".into(), p));
        }
        for (i, p) in self.gt_sharp_frames.iter().flatten().enumerate() {
            refs.push((format!("gt_sharp_frames[{i}]"), p));
        }
        for (field, p) in refs {
            if !root.join(p).is_file() {
                return Err(Error::parse(file, field, format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

fn check_field(key: &str, v: &serde_json::Value) -> std::result::Result<(), String> {
    let ok = match key {
        "event_file" | "blur_image" | "scene" => v.is_string(),
        "gt_trajectory" => v.is_string() || v.is_null(),
        "gt_sharp_frames" => v.is_null() || v.as_array().is_some_and(|a| a.iter().all(|s| s.is_string())),
        "gt_frame_times" => v.is_null() || v.as_array().is_some_and(|a| a.iter().all(|s| s.is_number())),
        "exposure_s" | "near" | "far" | "contrast" => v.is_number(),
        "sim_frames" | "schema_version" => v.is_u64(),
        "intrinsics" | "seeds" => v.is_object(),
        other => return Err(format!("unknown field `{other}`")),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("unexpected value {v}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DatasetManifest {
        DatasetManifest {
            schema_version: SCHEMA_VERSION,
            scene: "textured-plane".into(),
            intrinsics: CameraIntrinsics::new(64.0, 64.0, 32.0, 32.0, 64, 64).unwrap(),
            exposure_s: 0.04,
            near: 3.0,
            far: 5.0,
            contrast: 0.2,
            sim_frames: 200,
            event_file: "events.evt".into(),
            blur_image: "blurry.png".into(),
            gt_trajectory: Some("gt_trajectory.txt".into()),
            gt_sharp_frames: Some(vec!["sharp/000.png".into(), "sharp/001.png".into()]),
            gt_frame_times: Some(vec![0.0, 1.0]),
            seeds: Seeds { scene: 7, motion: 3 },
        }
    }

    #[test]
    fn json_round_trip() {
        let m = sample();
        assert_eq!(DatasetManifest::from_json(Path::new("m"), &m.to_json()).unwrap(), m);
    }

    fn without(key: &str) -> String {
        let mut v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        v.as_object_mut().unwrap().remove(key);
        v.to_string()
    }

    #[test]
    fn missing_field_is_named() {
        for key in REQUIRED {
            match DatasetManifest::from_json(Path::new("m"), &without(key)) {
                Err(Error::Parse { field, .. }) => assert_eq!(field, key),
                other => panic!("{key}: {other:?}"),
            }
        }
    }

    #[test]
    fn optional_ground_truth() {
        let mut m = sample();
        m.gt_trajectory = None;
        m.gt_sharp_frames = None;
        m.gt_frame_times = None;
        assert_eq!(DatasetManifest::from_json(Path::new("m"), &m.to_json()).unwrap(), m);
    }

    #[test]
    fn wrong_types_and_versions() {
        let text = sample().to_json().replace("\"blurry.png\"", "3");
        assert!(matches!(DatasetManifest::from_json(Path::new("m"), &text), Err(Error::Parse { field, .. }) if field == "blur_image"));
        let text = sample().to_json().replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(matches!(DatasetManifest::from_json(Path::new("m"), &text), Err(Error::VersionMismatch { .. })));
        let text = sample().to_json().replace("\"near\": 3.0", "\"near\": 7.0");
        assert!(matches!(DatasetManifest::from_json(Path::new("m"), &text), Err(Error::Parse { field, .. }) if field == "near"));
        let text = sample().to_json().replace("\"seeds\"", "\"extra\": 1, \"seeds\"");
        assert!(matches!(DatasetManifest::from_json(Path::new("m"), &text), Err(Error::Parse { field, .. }) if field == "extra"));
    }

    #[test]
    fn referenced_files_must_exist() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = sample();
        m.gt_trajectory = None;
        m.gt_sharp_frames = None;
        m.gt_frame_times = None;
        m.write(dir.path()).unwrap();
        fs::write(dir.path().join("events.evt"), b"").unwrap();
        match DatasetManifest::read(dir.path()) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "blur_image"),
            other => panic!("{other:?}"),
        }
        fs::write(dir.path().join("blurry.png"), b"").unwrap();
        assert_eq!(DatasetManifest::read(dir.path()).unwrap().0, m);
    }
}
