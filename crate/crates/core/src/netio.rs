//! Persistence: TOML network configs and the little-endian binary
//! formats for weights (`RVDW`), feature maps (`RVDF`), and sample sets
//! (`RVDS`).
//!
//! Binary payloads store fixed-point raw values directly, so round-trips
//! are bit-exact. Loaders parse fully before returning and reject any
//! malformed input — bad magic, size mismatch, truncation, or trailing
//! bytes — with a diagnostic naming the file.

use crate::error::{Error, Result};
use crate::fixed::FixedPoint32;
use crate::model::PlatformModel;
use crate::network::{check_chain, Activation, NetworkLayer};
use crate::sparsity::SampleSet;
use crate::tensor::{FeatureMap, LayerParams, WeightTensor};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const WEIGHTS_MAGIC: &[u8; 4] = b"RVDW";
const WEIGHTS_VERSION: u16 = 1;
const MAP_MAGIC: &[u8; 4] = b"RVDF";
const SAMPLES_MAGIC: &[u8; 4] = b"RVDS";

/// A fully validated network description.
#[derive(Clone, Debug)]
pub struct NetworkConfig {
    pub name: String,
    pub frac_bits: u32,
    /// Default weight file; CLI flags may override it.
    pub weights: Option<PathBuf>,
    pub platform: PlatformModel,
    pub layers: Vec<NetworkLayer>,
}

impl NetworkConfig {
    /// The bare layer geometries, for the model and DSE entry points.
    pub fn params(&self) -> Vec<LayerParams> {
        self.layers.iter().map(|l| l.params).collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    #[serde(default = "default_frac_bits")]
    frac_bits: u32,
    weights: Option<PathBuf>,
    #[serde(default)]
    platform: PlatformModel,
    #[serde(rename = "layer")]
    layers: Vec<RawLayer>,
}

fn default_frac_bits() -> u32 {
    crate::fixed::DEFAULT_FRAC_BITS
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    in_height: usize,
    in_width: usize,
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    #[serde(default)]
    activation: Activation,
}

/// Parse and validate a TOML network config. Syntax errors keep the TOML
/// parser's line/column info; semantic errors name the offending layer.
pub fn load_config(path: &Path) -> Result<NetworkConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if !(1..=30).contains(&raw.frac_bits) {
        return Err(Error::Config(format!(
            "{}: frac_bits {} outside 1..=30",
            path.display(),
            raw.frac_bits
        )));
    }
    raw.platform.validate()?;
    let mut layers = Vec::with_capacity(raw.layers.len());
    for (i, l) in raw.layers.iter().enumerate() {
        let params = LayerParams::new(
            l.in_height,
            l.in_width,
            l.in_channels,
            l.out_channels,
            l.kernel,
            l.stride,
            l.padding,
        )
        .map_err(|e| Error::Config(format!("{}: layer {i}: {e}", path.display())))?;
        layers.push(NetworkLayer {
            params,
            activation: l.activation,
        });
    }
    check_chain(&layers)?;
    Ok(NetworkConfig {
        name: raw.name,
        frac_bits: raw.frac_bits,
        weights: raw.weights,
        platform: raw.platform,
        layers,
    })
}

/// Forward-only reader over a fully buffered file.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!(
                "{}: truncated (needed {n} bytes at offset {}, have {})",
                self.path.display(),
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, want: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != want {
            return Err(Error::Format(format!(
                "{}: bad magic {:?}, expected {:?}",
                self.path.display(),
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(want)
            )));
        }
        Ok(())
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{}: {} trailing bytes after payload",
                self.path.display(),
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn read_file<'a>(path: &'a Path, buf: &'a mut Vec<u8>) -> Result<Reader<'a>> {
    *buf = std::fs::read(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(Reader { buf, pos: 0, path })
}

/// Serialize network weights: magic, version, frac_bits, then per layer
/// its dims (I_C, O_C, K as u32), raw i32 weights in
/// `[i_c][o_c][k_h][k_w]` order, and O_C raw i32 biases.
pub fn save_weights(path: &Path, weights: &[WeightTensor], frac_bits: u32) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(frac_bits as u16).to_le_bytes());
    for w in weights {
        out.extend_from_slice(&(w.in_channels() as u32).to_le_bytes());
        out.extend_from_slice(&(w.out_channels() as u32).to_le_bytes());
        out.extend_from_slice(&(w.kernel() as u32).to_le_bytes());
        for v in w.weights() {
            out.extend_from_slice(&v.raw().to_le_bytes());
        }
        for b in w.biases() {
            out.extend_from_slice(&b.raw().to_le_bytes());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Load weights for every layer of `config`, enforcing that the file's
/// fixed-point format and per-layer dimensions match the config exactly.
pub fn load_weights(path: &Path, config: &NetworkConfig) -> Result<Vec<WeightTensor>> {
    let mut buf = Vec::new();
    let mut r = read_file(path, &mut buf)?;
    r.magic(WEIGHTS_MAGIC)?;
    let version = r.u16()?;
    if version != WEIGHTS_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported weight format version {version}",
            path.display()
        )));
    }
    let file_f = r.u16()? as u32;
    if file_f != config.frac_bits {
        return Err(Error::Format(format!(
            "{}: weight file has frac_bits {file_f}, config expects {}",
            path.display(),
            config.frac_bits
        )));
    }
    let mut tensors = Vec::with_capacity(config.layers.len());
    for (i, layer) in config.layers.iter().enumerate() {
        let p = &layer.params;
        let (i_c, o_c, k) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
        if (i_c, o_c, k) != (p.in_channels, p.out_channels, p.kernel) {
            return Err(Error::Format(format!(
                "{}: layer {i} is {i_c}x{o_c} kernel {k}, config expects {}x{} kernel {}",
                path.display(),
                p.in_channels,
                p.out_channels,
                p.kernel
            )));
        }
        let mut w = WeightTensor::zeros(i_c, o_c, k);
        for v in w.weights_mut() {
            *v = FixedPoint32::from_raw(r.i32()?);
        }
        for b in w.biases_mut() {
            *b = FixedPoint32::from_raw(r.i32()?);
        }
        tensors.push(w);
    }
    r.finish()?;
    Ok(tensors)
}

/// Serialize one feature map: magic, C/H/W dims, raw i32 data in
/// channel-major `[c][h][w]` order.
pub fn save_feature_map(path: &Path, map: &FeatureMap) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAP_MAGIC);
    out.extend_from_slice(&(map.channels() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    for v in map.as_slice() {
        out.extend_from_slice(&v.raw().to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_feature_map(path: &Path) -> Result<FeatureMap> {
    let mut buf = Vec::new();
    let mut r = read_file(path, &mut buf)?;
    r.magic(MAP_MAGIC)?;
    let (c, h, w) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let mut data = Vec::with_capacity(c * h * w);
    for _ in 0..c * h * w {
        data.push(FixedPoint32::from_raw(r.i32()?));
    }
    r.finish()?;
    FeatureMap::from_data(c, h, w, data)
}

/// Serialize a real-valued sample set: magic, n and d as u32, then n·d
/// f64 values row-major.
pub fn save_sample_set(path: &Path, set: &SampleSet) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(SAMPLES_MAGIC);
    out.extend_from_slice(&(set.len() as u32).to_le_bytes());
    out.extend_from_slice(&(set.dim() as u32).to_le_bytes());
    for v in set.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_sample_set(path: &Path) -> Result<SampleSet> {
    let mut buf = Vec::new();
    let mut r = read_file(path, &mut buf)?;
    r.magic(SAMPLES_MAGIC)?;
    let (n, d) = (r.u32()? as usize, r.u32()? as usize);
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        data.push(r.f64()?);
    }
    r.finish()?;
    SampleSet::new(d, data)
}

/// Human-readable dump of a feature map for debugging: one line per row,
/// channels separated by headers.
pub fn export_feature_map_text(map: &FeatureMap, frac_bits: u32) -> String {
    let mut out = String::new();
    for c in 0..map.channels() {
        let _ = writeln!(out, "channel {c}");
        for h in 0..map.height() {
            let row: Vec<String> = (0..map.width())
                .map(|w| format!("{:.6}", map.get(c, h, w).to_real(frac_bits)))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::DEFAULT_FRAC_BITS as F;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn write_cfg(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("net.cfg");
        std::fs::write(&p, body).unwrap();
        p
    }

    const GOOD_CFG: &str = r#"
name = "toy"
frac_bits = 16

[platform]
num_cus = 4
clock_hz = 100e6
ddr_bw_bytes_per_s = 5e8

[[layer]]
in_height = 1
in_width = 1
in_channels = 3
out_channels = 2
kernel = 3
stride = 1
padding = 0
activation = "relu"

[[layer]]
in_height = 3
in_width = 3
in_channels = 2
out_channels = 1
kernel = 4
stride = 2
padding = 1
activation = "tanh"
"#;

    #[test]
    fn config_loads_with_defaults_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = load_config(&write_cfg(dir.path(), GOOD_CFG)).unwrap();
        assert_eq!(cfg.name, "toy");
        assert_eq!(cfg.frac_bits, 16);
        assert_eq!(cfg.platform.num_cus, 4);
        assert_eq!(cfg.platform.clock_hz, 100e6);
        // unspecified platform fields keep their defaults
        assert_eq!(cfg.platform.word_bytes, PlatformModel::default().word_bytes);
        assert_eq!(cfg.layers.len(), 2);
        assert_eq!(cfg.layers[0].activation, Activation::Relu);
        assert_eq!(cfg.layers[0].params.out_height, 3);
        assert_eq!(cfg.layers[1].params.out_height, 6);
        assert!(cfg.weights.is_none());
    }

    #[test]
    fn config_chain_violation_names_the_pair() {
        let broken = GOOD_CFG.replace("out_channels = 2", "out_channels = 5");
        let dir = tempfile::tempdir().unwrap();
        let err = load_config(&write_cfg(dir.path(), &broken)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("layers 0 and 1"), "got: {msg}");
    }

    #[test]
    fn config_syntax_error_keeps_line_info() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_config(&write_cfg(dir.path(), "name = \"x\"\nkernel = [1,\n")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "got: {msg}");
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let bad = GOOD_CFG.replace("stride = 2", "stride = 2\nstrde = 2");
        let dir = tempfile::tempdir().unwrap();
        assert!(load_config(&write_cfg(dir.path(), &bad)).is_err());
    }

    fn random_tensor(rng: &mut ChaCha8Rng, i_c: usize, o_c: usize, k: usize) -> WeightTensor {
        let mut w = WeightTensor::zeros(i_c, o_c, k);
        for v in w.weights_mut() {
            *v = FixedPoint32::from_raw(rng.gen());
        }
        for b in w.biases_mut() {
            *b = FixedPoint32::from_raw(rng.gen());
        }
        w
    }

    fn toy_config(dir: &Path) -> NetworkConfig {
        load_config(&write_cfg(dir, GOOD_CFG)).unwrap()
    }

    #[test]
    fn weights_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = toy_config(dir.path());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let tensors = vec![
            random_tensor(&mut rng, 3, 2, 3),
            random_tensor(&mut rng, 2, 1, 4),
        ];
        let path = dir.path().join("w.rvdw");
        save_weights(&path, &tensors, F).unwrap();
        let first = std::fs::read(&path).unwrap();
        let loaded = load_weights(&path, &cfg).unwrap();
        assert_eq!(loaded, tensors);
        save_weights(&path, &loaded, F).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn weights_loader_rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = toy_config(dir.path());
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let tensors = vec![
            random_tensor(&mut rng, 3, 2, 3),
            random_tensor(&mut rng, 2, 1, 4),
        ];
        let path = dir.path().join("w.rvdw");
        save_weights(&path, &tensors, F).unwrap();
        let good = std::fs::read(&path).unwrap();

        let truncated = &good[..good.len() - 3];
        std::fs::write(&path, truncated).unwrap();
        let err = load_weights(&path, &cfg).unwrap_err();
        assert!(err.to_string().contains("truncated"));

        let mut trailing = good.clone();
        trailing.push(0);
        std::fs::write(&path, trailing).unwrap();
        let err = load_weights(&path, &cfg).unwrap_err();
        assert!(err.to_string().contains("trailing"));

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        std::fs::write(&path, bad_magic).unwrap();
        let err = load_weights(&path, &cfg).unwrap_err();
        assert!(err.to_string().contains("magic"));

        // frac_bits mismatch
        save_weights(&path, &tensors, 12).unwrap();
        let err = load_weights(&path, &cfg).unwrap_err();
        assert!(err.to_string().contains("frac_bits"));

        // dimension mismatch: swap the layer order
        let swapped = vec![tensors[1].clone(), tensors[0].clone()];
        save_weights(&path, &swapped, F).unwrap();
        let err = load_weights(&path, &cfg).unwrap_err();
        assert!(err.to_string().contains("layer 0"));
    }

    #[test]
    fn feature_map_round_trip_and_hand_written_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let map = FeatureMap::from_data(
            2,
            3,
            4,
            (0..24).map(|_| FixedPoint32::from_raw(rng.gen())).collect(),
        )
        .unwrap();
        let path = dir.path().join("m.rvdf");
        save_feature_map(&path, &map).unwrap();
        assert_eq!(load_feature_map(&path).unwrap(), map);

        // hand-written 1x2x2 file: values 1.0, -0.5, 0.25, 0 at F=16
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RVDF");
        for dim in [1u32, 2, 2] {
            bytes.extend_from_slice(&dim.to_le_bytes());
        }
        for raw in [65536i32, -32768, 16384, 0] {
            bytes.extend_from_slice(&raw.to_le_bytes());
        }
        let path = dir.path().join("hand.rvdf");
        std::fs::write(&path, bytes).unwrap();
        let m = load_feature_map(&path).unwrap();
        assert_eq!((m.channels(), m.height(), m.width()), (1, 2, 2));
        assert_eq!(m.get(0, 0, 0).to_real(F), 1.0);
        assert_eq!(m.get(0, 0, 1).to_real(F), -0.5);
        assert_eq!(m.get(0, 1, 0).to_real(F), 0.25);
        assert_eq!(m.get(0, 1, 1).to_real(F), 0.0);
    }

    #[test]
    fn sample_set_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let set = SampleSet::new(3, vec![0.5, -1.25, 3.0, 0.0, 2.5e-3, 9.0]).unwrap();
        let path = dir.path().join("s.rvds");
        save_sample_set(&path, &set).unwrap();
        assert_eq!(load_sample_set(&path).unwrap(), set);
    }

    #[test]
    fn text_export_layout() {
        let map = FeatureMap::from_data(
            1,
            2,
            2,
            vec![
                FixedPoint32::from_raw(65536),
                FixedPoint32::ZERO,
                FixedPoint32::from_raw(-32768),
                FixedPoint32::from_raw(16384),
            ],
        )
        .unwrap();
        let text = export_feature_map_text(&map, F);
        assert_eq!(text, "channel 0\n1.000000 0.000000\n-0.500000 0.250000\n");
    }
}
