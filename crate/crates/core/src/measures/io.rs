//! JSON persistence with bit-exact binary payloads.

use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dyadic::GridConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::measure::{GridFunction, Weight, WeightMeta};

pub const FORMAT_VERSION: u32 = 1;

/// On-disk weight: densities as base64 of little-endian `f64`, row-major
/// with the axes of factor 1 first.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightFile {
    pub version: u32,
    pub dims: Vec<usize>,
    pub depth: u32,
    pub lattice: Vec<usize>,
    pub density: String,
    pub meta: MetaRecord,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MetaRecord {
    pub kind: String,
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: Value,
}

/// On-disk grid function, same layout as [`WeightFile`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridFunctionFile {
    pub version: u32,
    pub dims: Vec<usize>,
    pub depth: u32,
    pub lattice: Vec<usize>,
    pub values: String,
    #[serde(default)]
    pub meta: Value,
}

pub fn encode_f64<S: Scalar>(xs: &[S]) -> String {
    let mut bytes = Vec::with_capacity(xs.len() * 8);
    for x in xs {
        bytes.extend_from_slice(&x.to_f64_lossy().to_le_bytes());
    }
    B64.encode(bytes)
}

pub fn decode_f64<S: Scalar>(s: &str, expected: usize) -> Result<Vec<S>> {
    let bytes = B64
        .decode(s.trim())
        .map_err(|e| Error::Format(format!("bad base64 payload: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(Error::Format(format!(
            "payload holds {} values, expected {expected}",
            bytes.len() / 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| S::from_f64_lossy(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect())
}

fn check_header(version: u32, dims: &[usize], depth: u32, lattice: &[usize]) -> Result<GridConfig> {
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let config = GridConfig::new(dims.to_vec(), depth)?;
    let expected = vec![config.cells_per_axis(); config.total_dim()];
    if lattice != expected.as_slice() {
        return Err(Error::Format(format!(
            "lattice {lattice:?} inconsistent with depth {depth} (expected {expected:?})"
        )));
    }
    Ok(config)
}

impl<S: Scalar> Weight<S> {
    pub fn to_file(&self) -> WeightFile {
        let cfg = self.config();
        WeightFile {
            version: FORMAT_VERSION,
            dims: cfg.dims().to_vec(),
            depth: cfg.depth(),
            lattice: vec![cfg.cells_per_axis(); cfg.total_dim()],
            density: encode_f64(self.density()),
            meta: MetaRecord {
                kind: self.meta().kind.clone(),
                seed: self.meta().seed,
                params: self.meta().params.clone(),
            },
        }
    }

    pub fn from_file(file: &WeightFile) -> Result<Self> {
        let config = check_header(file.version, &file.dims, file.depth, &file.lattice)?;
        let density = decode_f64(&file.density, config.cell_count())?;
        Weight::from_density(
            &config,
            density,
            WeightMeta {
                kind: file.meta.kind.clone(),
                seed: file.meta.seed,
                params: file.meta.params.clone(),
            },
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: WeightFile = serde_json::from_str(&text)?;
        Self::from_file(&file)
    }

    /// Load and insist on a particular configuration.
    pub fn load_expecting(path: impl AsRef<Path>, config: &GridConfig) -> Result<Self> {
        let w = Self::load(path)?;
        if w.config() != config {
            return Err(Error::ConfigMismatch(format!(
                "file has dims {:?} depth {}, expected dims {:?} depth {}",
                w.config().dims(),
                w.config().depth(),
                config.dims(),
                config.depth()
            )));
        }
        Ok(w)
    }
}

impl<S: Scalar> GridFunction<S> {
    pub fn to_file(&self, meta: Value) -> GridFunctionFile {
        let cfg = self.config();
        GridFunctionFile {
            version: FORMAT_VERSION,
            dims: cfg.dims().to_vec(),
            depth: cfg.depth(),
            lattice: vec![cfg.cells_per_axis(); cfg.total_dim()],
            values: encode_f64(self.values()),
            meta,
        }
    }

    pub fn from_file(file: &GridFunctionFile) -> Result<Self> {
        let config = check_header(file.version, &file.dims, file.depth, &file.lattice)?;
        GridFunction::new(&config, decode_f64(&file.values, config.cell_count())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::gen_cascade;

    #[test]
    fn round_trip_is_bitwise() {
        let cfg = GridConfig::new(vec![1, 1], 3).unwrap();
        let w: Weight<f64> = gen_cascade(&cfg, 3.0, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        w.save(&path).unwrap();
        let back: Weight<f64> = Weight::load(&path).unwrap();
        let a: Vec<u64> = w.density().iter().map(|x| x.to_bits()).collect();
        let b: Vec<u64> = back.density().iter().map(|x| x.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(back.meta(), w.meta());
    }

    #[test]
    fn mismatched_depth_rejected() {
        let cfg = GridConfig::new(vec![1], 3).unwrap();
        let w: Weight<f64> = gen_cascade(&cfg, 2.0, 1).unwrap();
        let mut file = w.to_file();
        file.depth = 4;
        let err = Weight::<f64>::from_file(&file).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        w.save(&path).unwrap();
        let other = GridConfig::new(vec![1], 4).unwrap();
        assert!(matches!(
            Weight::<f64>::load_expecting(&path, &other),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn malformed_payload_rejected() {
        let cfg = GridConfig::new(vec![1], 2).unwrap();
        let w: Weight<f64> = gen_cascade(&cfg, 2.0, 1).unwrap();
        let mut file = w.to_file();
        file.density = "!!!".into();
        assert!(Weight::<f64>::from_file(&file).is_err());
        let mut file = w.to_file();
        file.version = 2;
        assert!(Weight::<f64>::from_file(&file).is_err());
    }

    #[test]
    fn grid_function_round_trip() {
        let cfg = GridConfig::new(vec![2], 1).unwrap();
        let f = GridFunction::new(&cfg, (0..36).map(|i| i as f64 / 7.0).collect()).unwrap();
        let back = GridFunction::<f64>::from_file(&f.to_file(Value::Null)).unwrap();
        assert_eq!(back, f);
    }
}
