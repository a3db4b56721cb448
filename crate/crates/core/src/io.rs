//! Versioned container files for training sets and models.
//!
//! Both formats are little-endian binaries: a 4-byte magic, a u32 version,
//! then length-prefixed sections. The dataset keeps its normalization in a
//! JSON sidecar next to the binary (`<path>.norm.json`); the model embeds a
//! JSON header (architecture, normalization, hyperparameters) followed by
//! the raw f64 parameter blocks, so a reload reproduces generation
//! bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cvae::CvaeModel;
use crate::geometry::TargetState;
use crate::nn::LayerKind;
use crate::sampler::{Normalization, TrainingRecord, TrainingSet};

const DATASET_MAGIC: &[u8; 4] = b"RFSD";
const MODEL_MAGIC: &[u8; 4] = b"RFSM";
const DATASET_VERSION: u32 = 1;
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad magic bytes at offset 0: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {found} (supported {supported}) at byte offset {offset}")]
    Version { found: u32, supported: u32, offset: u64 },
    #[error("truncated file: needed {needed} bytes at byte offset {offset}")]
    Truncated { offset: u64, needed: usize },
    #[error("corrupt header at byte offset {offset}: {detail}")]
    Header { offset: u64, detail: String },
    #[error("sidecar {path} invalid: {detail}")]
    Sidecar { path: PathBuf, detail: String },
    #[error("model file inconsistent: {0}")]
    ModelMismatch(String),
}

/// Byte reader that reports the offset of any truncation.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        if self.pos + n > self.buf.len() {
            return Err(IoError::Truncated { offset: self.offset(), needed: n });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, IoError> {
        let raw = self.take(n * 8)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".norm.json");
    PathBuf::from(s)
}

/// Writes the record container and the normalization sidecar.
pub fn save_dataset(path: &Path, set: &TrainingSet) -> Result<(), IoError> {
    let mut out = Vec::with_capacity(32 + set.records.len() * (6 + set.f) * 8);
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&(set.f as u32).to_le_bytes());
    out.extend_from_slice(&(set.conditions as u32).to_le_bytes());
    out.extend_from_slice(&(set.per_condition as u32).to_le_bytes());
    out.extend_from_slice(&(set.records.len() as u64).to_le_bytes());
    for r in &set.records {
        push_f64s(&mut out, &r.condition.feature_vector());
        push_f64s(&mut out, &r.profile);
    }
    write_file(path, &out)?;
    let sidecar = serde_json::to_vec_pretty(&set.normalization)
        .map_err(|e| IoError::Sidecar { path: sidecar_path(path), detail: e.to_string() })?;
    write_file(&sidecar_path(path), &sidecar)
}

/// Loads a dataset written by [`save_dataset`].
pub fn load_dataset(path: &Path) -> Result<TrainingSet, IoError> {
    let buf = read_file(path)?;
    let mut r = Reader::new(&buf);
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if &magic != DATASET_MAGIC {
        return Err(IoError::BadMagic { expected: *DATASET_MAGIC, found: magic });
    }
    let version_offset = r.offset();
    let version = r.u32()?;
    if version != DATASET_VERSION {
        return Err(IoError::Version {
            found: version,
            supported: DATASET_VERSION,
            offset: version_offset,
        });
    }
    let f = r.u32()? as usize;
    let conditions = r.u32()? as usize;
    let per_condition = r.u32()? as usize;
    let n_records = r.u64()? as usize;
    let mut records = Vec::with_capacity(n_records);
    for _ in 0..n_records {
        let c = r.f64s(6)?;
        let profile = r.f64s(f)?;
        records.push(TrainingRecord {
            condition: TargetState {
                x: c[0],
                y: c[1],
                phi: c[2],
                h_s: c[3],
                w_s1: c[4],
                w_s2: c[5],
            },
            profile,
        });
    }
    let sc = sidecar_path(path);
    let side = read_file(&sc)?;
    let normalization: Normalization = serde_json::from_slice(&side)
        .map_err(|e| IoError::Sidecar { path: sc, detail: e.to_string() })?;
    if normalization.profile_mean.len() != f {
        return Err(IoError::Sidecar {
            path: sidecar_path(path),
            detail: format!(
                "normalization length {} != F = {f}",
                normalization.profile_mean.len()
            ),
        });
    }
    Ok(TrainingSet { f, conditions, per_condition, records, normalization })
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    f: usize,
    z: usize,
    beta: f64,
    recon_sigma: f64,
    normalization: Normalization,
    encoder_layers: Vec<LayerKind>,
    decoder_layers: Vec<LayerKind>,
}

/// Writes architecture descriptor, normalization and raw parameters.
pub fn save_model(path: &Path, model: &CvaeModel) -> Result<(), IoError> {
    let header = ModelHeader {
        f: model.f,
        z: model.z,
        beta: model.beta,
        recon_sigma: model.recon_sigma,
        normalization: model.norm.clone(),
        encoder_layers: model.encoder.layers().to_vec(),
        decoder_layers: model.decoder.layers().to_vec(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| IoError::Header { offset: 0, detail: e.to_string() })?;
    let enc = model.encoder.params();
    let dec = model.decoder.params();
    let mut out =
        Vec::with_capacity(32 + header_json.len() + (enc.len() + dec.len()) * 8);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    out.extend_from_slice(&(enc.len() as u64).to_le_bytes());
    push_f64s(&mut out, enc);
    out.extend_from_slice(&(dec.len() as u64).to_le_bytes());
    push_f64s(&mut out, dec);
    write_file(path, &out)
}

/// Loads a model written by [`save_model`]; generation after a reload is
/// bit-identical under the same seed.
pub fn load_model(path: &Path) -> Result<CvaeModel, IoError> {
    let buf = read_file(path)?;
    let mut r = Reader::new(&buf);
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if &magic != MODEL_MAGIC {
        return Err(IoError::BadMagic { expected: *MODEL_MAGIC, found: magic });
    }
    let version_offset = r.offset();
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(IoError::Version {
            found: version,
            supported: MODEL_VERSION,
            offset: version_offset,
        });
    }
    let header_len = r.u64()? as usize;
    let header_offset = r.offset();
    let header_bytes = r.take(header_len)?;
    let header: ModelHeader = serde_json::from_slice(header_bytes)
        .map_err(|e| IoError::Header { offset: header_offset, detail: e.to_string() })?;
    let n_enc = r.u64()? as usize;
    let enc = r.f64s(n_enc)?;
    let n_dec = r.u64()? as usize;
    let dec = r.f64s(n_dec)?;
    CvaeModel::from_parts(
        header.f,
        header.z,
        header.beta,
        header.recon_sigma,
        header.normalization,
        header.encoder_layers,
        header.decoder_layers,
        &enc,
        &dec,
    )
    .map_err(|e| IoError::ModelMismatch(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvae::CvaeArch;
    use crate::seeding::seed_stream;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("rfshadow-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn small_set() -> TrainingSet {
        let cond = TargetState { x: 1.0, y: 0.25, phi: 0.1, h_s: 1.8, w_s1: 0.55, w_s2: 0.25 };
        TrainingSet {
            f: 3,
            conditions: 1,
            per_condition: 2,
            records: vec![
                TrainingRecord { condition: cond, profile: vec![1.5, 2.5, 3.5] },
                TrainingRecord { condition: cond, profile: vec![0.1, -0.2, 0.3] },
            ],
            normalization: Normalization {
                cond_ranges: Normalization::default_cond_ranges(4.0),
                profile_mean: vec![0.8, 1.15, 1.9],
                profile_scale: vec![0.7, 1.35, 1.6],
            },
        }
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let set = small_set();
        let p = tmp("ds.rfsd");
        save_dataset(&p, &set).unwrap();
        let back = load_dataset(&p).unwrap();
        assert_eq!(set, back);
    }

    #[test]
    fn dataset_bad_magic_rejected() {
        let p = tmp("ds_badmagic.rfsd");
        save_dataset(&p, &small_set()).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[0] = b'X';
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_dataset(&p), Err(IoError::BadMagic { .. })));
    }

    #[test]
    fn dataset_truncation_reports_offset() {
        let p = tmp("ds_trunc.rfsd");
        save_dataset(&p, &small_set()).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        match load_dataset(&p) {
            Err(IoError::Truncated { offset, .. }) => assert!(offset > 0),
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn dataset_version_mismatch_rejected() {
        let p = tmp("ds_ver.rfsd");
        save_dataset(&p, &small_set()).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[4] = 9;
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_dataset(&p), Err(IoError::Version { found: 9, .. })));
    }

    #[test]
    fn model_round_trip_generates_identically() {
        let set = small_set();
        let model =
            CvaeModel::new(3, 2, 0.05, 0.1, set.normalization.clone(), &CvaeArch::tiny(), 77)
                .unwrap();
        let p = tmp("model.rfsm");
        save_model(&p, &model).unwrap();
        let back = load_model(&p).unwrap();
        assert_eq!(model, back);
        let cond = set.records[0].condition;
        let mut r1 = seed_stream(5, 0);
        let mut r2 = seed_stream(5, 0);
        let a = model.generate(&cond, 4, &mut r1).unwrap();
        let b = back.generate(&cond, 4, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn model_param_count_mismatch_rejected() {
        let set = small_set();
        let model =
            CvaeModel::new(3, 2, 0.05, 0.1, set.normalization.clone(), &CvaeArch::tiny(), 8)
                .unwrap();
        let p = tmp("model_bad.rfsm");
        save_model(&p, &model).unwrap();
        let bytes = fs::read(&p).unwrap();
        // drop the last parameter (8 bytes) and fix the decoder count
        let mut truncated = bytes.clone();
        truncated.truncate(bytes.len() - 8);
        fs::write(&p, &truncated).unwrap();
        assert!(load_model(&p).is_err());
    }
}
