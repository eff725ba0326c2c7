//! Resumable training checkpoints.
//!
//! Layout, little-endian: `BLCK`, u32 header length, JSON header, then f64
//! arrays in header order (field parameters, knot twists, field Adam `m`
//! and `v`, trajectory Adam `m` and `v`), then a CRC-32 of every preceding
//! byte.

use std::fs;
use std::path::Path;

use blurev_core::optim::{AdamConfig, AdamState};
use blurev_core::train::OptimizationState;
use blurev_core::{CameraIntrinsics, FieldArch, RenderSettings, SceneField, TrajectoryKind, TrajectoryParams};
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BLCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    arch: FieldArch,
    trajectory: TrajectoryKind,
    knots: usize,
    params: usize,
    step: u64,
    skipped_event_terms: u64,
    field_adam: AdamConfig,
    field_adam_step: u64,
    trajectory_adam: AdamConfig,
    trajectory_adam_step: u64,
    rng_seed: String,
    rng_stream: u64,
    /// Decimal, since JSON numbers cannot hold a u128.
    rng_word_pos: String,
    intrinsics: CameraIntrinsics,
    render: RenderSettings,
}

/// Training state plus the camera and sampling needed to render from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub state: OptimizationState,
    pub intrinsics: CameraIntrinsics,
    pub render: RenderSettings,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 {
        return None;
    }
    let mut out = [0; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(s.get(2 * i..2 * i + 2)?, 16).ok()?;
    }
    Some(out)
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let state = &ck.state;
    let header = Header {
        format_version: FORMAT_VERSION,
        arch: state.field.arch().clone(),
        trajectory: state.trajectory.kind(),
        knots: state.trajectory.len(),
        params: state.field.params().len(),
        step: state.step,
        skipped_event_terms: state.skipped_event_terms,
        field_adam: state.field_opt.config,
        field_adam_step: state.field_opt.step,
        trajectory_adam: state.trajectory_opt.config,
        trajectory_adam_step: state.trajectory_opt.step,
        rng_seed: hex(&state.rng.get_seed()),
        rng_stream: state.rng.get_stream(),
        rng_word_pos: state.rng.get_word_pos().to_string(),
        intrinsics: ck.intrinsics,
        render: ck.render,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    let arrays: [&[f64]; 6] = [
        state.field.params(),
        &state.trajectory.flat(),
        &state.field_opt.m,
        &state.field_opt.v,
        &state.trajectory_opt.m,
        &state.trajectory_opt.v,
    ];
    for a in arrays {
        for v in a {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Decodes a checkpoint. With `expected` set, a different field
/// architecture is reported as a version mismatch.
pub fn decode_checkpoint(path: &Path, b: &[u8], expected: Option<&FieldArch>) -> Result<Checkpoint> {
    if b.len() < 12 || &b[..4] != MAGIC {
        return Err(Error::parse(path, "magic", "not a checkpoint"));
    }
    let (body, tail) = b.split_at(b.len() - 4);
    if crc32fast::hash(body).to_le_bytes() != tail {
        return Err(Error::parse(path, "checksum", "CRC mismatch; file is truncated or corrupt"));
    }
    let hlen = u32::from_le_bytes(body[4..8].try_into().unwrap()) as usize;
    let json = body.get(8..8 + hlen).ok_or_else(|| Error::parse(path, "header", "truncated"))?;
    let h: Header = serde_json::from_slice(json).map_err(|e| Error::parse(path, "header", e))?;
    if h.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            path: path.into(),
            what: "checkpoint format",
            expected: FORMAT_VERSION.to_string(),
            found: h.format_version.to_string(),
        });
    }
    if let Some(arch) = expected {
        if *arch != h.arch {
            return Err(Error::VersionMismatch {
                path: path.into(),
                what: "field architecture",
                expected: format!("{arch:?}"),
                found: format!("{:?}", h.arch),
            });
        }
    }
    let t = 6 * h.knots;
    let lens = [h.params, t, h.params, h.params, t, t];
    let data = &body[8 + hlen..];
    if data.len() != 8 * lens.iter().sum::<usize>() {
        return Err(Error::parse(path, "arrays", "length does not match the header"));
    }
    let mut values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
    let [params, flat, fm, fv, tm, tv] = lens.map(&mut take);

    let field = SceneField::from_params(h.arch, params)?;
    let twists = flat.chunks_exact(6).map(|c| c.try_into().unwrap()).collect();
    let trajectory = TrajectoryParams::new(h.trajectory, twists)?;
    let seed = unhex(&h.rng_seed).ok_or_else(|| Error::parse(path, "rng_seed", "expected 64 hex digits"))?;
    let word_pos: u128 = h.rng_word_pos.parse().map_err(|e| Error::parse(path, "rng_word_pos", e))?;
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(h.rng_stream);
    rng.set_word_pos(word_pos);
    let state = OptimizationState {
        field,
        trajectory,
        field_opt: AdamState { config: h.field_adam, m: fm, v: fv, step: h.field_adam_step },
        trajectory_opt: AdamState { config: h.trajectory_adam, m: tm, v: tv, step: h.trajectory_adam_step },
        rng,
        step: h.step,
        skipped_event_terms: h.skipped_event_terms,
    };
    Ok(Checkpoint { state, intrinsics: h.intrinsics, render: h.render })
}

/// Writes through a temporary file and a rename so a crash never leaves a
/// half-written checkpoint under the final name.
pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode_checkpoint(ck)).map_err(Error::io(&tmp))?;
    fs::rename(&tmp, path).map_err(Error::io(path))
}

pub fn load_checkpoint(path: &Path, expected: Option<&FieldArch>) -> Result<Checkpoint> {
    let b = fs::read(path).map_err(Error::io(path))?;
    decode_checkpoint(path, &b, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use blurev_core::field::Activation;
    use blurev_core::train::TrainConfig;
    use rand_chacha::rand_core::RngCore;

    fn state() -> Checkpoint {
        let config = TrainConfig {
            arch: FieldArch { hidden_width: 8, hidden_layers: 1, activation: Activation::Softplus, ..FieldArch::default() },
            ..TrainConfig::default()
        };
        let mut s = OptimizationState::new(&config).unwrap();
        s.field_opt.m.iter_mut().enumerate().for_each(|(i, m)| *m = i as f64 * 1e-3);
        s.trajectory_opt.v[3] = 0.25;
        s.step = 17;
        s.rng.next_u64();
        s.rng.next_u32();
        let intrinsics = CameraIntrinsics::new(10.0, 10.0, 5.0, 4.0, 10, 8).unwrap();
        Checkpoint { state: s, intrinsics, render: RenderSettings { n_samples: 5, ..RenderSettings::default() } }
    }

    #[test]
    fn round_trip_is_exact() {
        let s = state();
        let b = encode_checkpoint(&s);
        let mut back = decode_checkpoint(Path::new("c"), &b, Some(s.state.field.arch())).unwrap();
        assert_eq!(back, s);
        assert_eq!(encode_checkpoint(&back), b);
        let mut orig = s.clone();
        assert_eq!(back.state.rng.next_u64(), orig.state.rng.next_u64());
    }

    #[test]
    fn truncation_and_corruption_detected() {
        let b = encode_checkpoint(&state());
        for cut in [1, 9, b.len() / 2] {
            let err = decode_checkpoint(Path::new("c"), &b[..b.len() - cut], None).unwrap_err();
            assert!(matches!(err, Error::Parse { .. }), "{err}");
        }
        let mut c = b.clone();
        c[b.len() / 2] ^= 1;
        assert!(matches!(decode_checkpoint(Path::new("c"), &c, None), Err(Error::Parse { .. })));
    }

    #[test]
    fn architecture_mismatch() {
        let b = encode_checkpoint(&state());
        let other = FieldArch { hidden_width: 16, ..state().state.field.arch().clone() };
        assert!(matches!(decode_checkpoint(Path::new("c"), &b, Some(&other)), Err(Error::VersionMismatch { .. })));
        assert!(decode_checkpoint(Path::new("c"), &b, None).is_ok());
    }

    #[test]
    fn format_version_checked() {
        let s = state();
        let b = encode_checkpoint(&s);
        let hlen = u32::from_le_bytes(b[4..8].try_into().unwrap()) as usize;
        let json = String::from_utf8(b[8..8 + hlen].to_vec()).unwrap().replace("\"format_version\":1", "\"format_version\":2");
        let mut c = b[..4].to_vec();
        c.extend_from_slice(&(json.len() as u32).to_le_bytes());
        c.extend_from_slice(json.as_bytes());
        c.extend_from_slice(&b[8 + hlen..b.len() - 4]);
        let crc = crc32fast::hash(&c);
        c.extend_from_slice(&crc.to_le_bytes());
        assert!(matches!(decode_checkpoint(Path::new("c"), &c, None), Err(Error::VersionMismatch { .. })));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ck.bin");
        save_checkpoint(&p, &state()).unwrap();
        assert_eq!(load_checkpoint(&p, None).unwrap(), state());
        assert!(!p.with_extension("tmp").exists());
    }
}
