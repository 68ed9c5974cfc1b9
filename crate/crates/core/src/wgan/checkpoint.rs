//! `WGCK` checkpoint files.
//!
//! Layout, little-endian: magic `WGCK`, `u16` version, `u32` JSON length and
//! the JSON header (config, geometry, scalers, step), `u32` network count,
//! then per network a `u32` layer count and per layer `u32` inputs, `u32`
//! outputs, `u8` activation. The payload follows: every network's
//! parameters as `f64` (per layer, weights row-major then bias), the Adam
//! state of generator and critic (`u64` step, first moments, second
//! moments), and the random generator state (32-byte seed, `u64` stream,
//! `u128` word position).

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::{Activation, Layer, Mlp};
use super::network::{Critic, Generator};
use super::spread::ValueScaler;
use super::train::{Model, TrainingConfig};
use crate::csi::ArrayGeometry;
use crate::dataset::{ConditionScaler, Reader};
use crate::error::{FormatError, Result};

pub const WGCK_MAGIC: [u8; 4] = *b"WGCK";
pub const WGCK_VERSION: u16 = 1;

/// Serializable position of a ChaCha8 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState { seed: rng.get_seed(), stream: rng.get_stream(), word_pos: rng.get_word_pos() }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainingConfig,
    /// Generator updates completed.
    pub step: u64,
    pub model: Model,
    pub generator_adam: Adam,
    pub critic_adam: Adam,
    pub rng: RngState,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: TrainingConfig,
    geometry: ArrayGeometry,
    condition_scaler: ConditionScaler,
    spread_scaler: ValueScaler,
    step: u64,
}

fn put_f64s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_adam(out: &mut Vec<u8>, adam: &Adam) {
    out.extend_from_slice(&adam.t.to_le_bytes());
    put_f64s(out, adam.m.iter().copied());
    put_f64s(out, adam.v.iter().copied());
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Result<Vec<u8>> {
    let header = Header {
        config: ck.config.clone(),
        geometry: ck.model.geometry(),
        condition_scaler: ck.model.condition_scaler,
        spread_scaler: ck.model.spread_scaler,
        step: ck.step,
    };
    let json = serde_json::to_vec(&header).map_err(FormatError::from)?;
    let nets = [&ck.model.generator.mlp, &ck.model.critic.trunk, &ck.model.critic.head];

    let mut out = Vec::new();
    out.extend_from_slice(&WGCK_MAGIC);
    out.extend_from_slice(&WGCK_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(nets.len() as u32).to_le_bytes());
    for net in nets {
        out.extend_from_slice(&(net.layers.len() as u32).to_le_bytes());
        for l in &net.layers {
            out.extend_from_slice(&(l.inputs() as u32).to_le_bytes());
            out.extend_from_slice(&(l.outputs() as u32).to_le_bytes());
            out.push(l.activation.code());
        }
    }
    for net in nets {
        put_f64s(&mut out, net.flatten());
    }
    put_adam(&mut out, &ck.generator_adam);
    put_adam(&mut out, &ck.critic_adam);
    out.extend_from_slice(&ck.rng.seed);
    out.extend_from_slice(&ck.rng.stream.to_le_bytes());
    out.extend_from_slice(&ck.rng.word_pos.to_le_bytes());
    Ok(out)
}

fn read_f64s(r: &mut Reader, n: usize) -> Result<Vec<f64>, FormatError> {
    (0..n).map(|_| r.f64()).collect()
}

fn read_adam(r: &mut Reader, n: usize) -> Result<Adam, FormatError> {
    let t = r.u64()?;
    Ok(Adam { t, m: read_f64s(r, n)?, v: read_f64s(r, n)? })
}

fn header_err(e: impl ToString) -> FormatError {
    FormatError::Header(e.to_string())
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::new(bytes);
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != WGCK_MAGIC {
        return Err(FormatError::BadMagic { expected: WGCK_MAGIC, found: magic }.into());
    }
    let version = r.u16()?;
    if version != WGCK_VERSION {
        return Err(FormatError::VersionMismatch { expected: WGCK_VERSION, found: version }.into());
    }
    let json_len = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(json_len)?).map_err(FormatError::from)?;
    header.geometry.validate().map_err(header_err)?;

    let net_count = r.u32()?;
    if net_count != 3 {
        return Err(header_err(format!("expected 3 networks, found {net_count}")).into());
    }
    let mut tables = Vec::with_capacity(3);
    for _ in 0..3 {
        let n = r.u32()? as usize;
        if n == 0 || n > 64 {
            return Err(header_err(format!("implausible layer count {n}")).into());
        }
        let mut table = Vec::with_capacity(n);
        for _ in 0..n {
            let inputs = r.u32()? as usize;
            let outputs = r.u32()? as usize;
            let act = r.u8()?;
            let activation = Activation::from_code(act).ok_or_else(|| header_err(format!("unknown activation code {act}")))?;
            table.push((inputs, outputs, activation));
        }
        tables.push(table);
    }

    let counts: Vec<u64> =
        tables.iter().map(|t| t.iter().map(|&(i, o, _)| (i as u64 + 1) * o as u64).sum()).collect();
    let gen_params = counts[0];
    let critic_params = counts[1] + counts[2];
    let payload = 8 * (counts.iter().sum::<u64>() + 2 * gen_params + 2 * critic_params) + 16 + 32 + 8 + 16;
    let actual = r.remaining() as u64;
    if actual < payload {
        return Err(FormatError::Truncated { needed: bytes.len() as u64 - actual + payload, available: bytes.len() as u64 }.into());
    }
    if actual > payload {
        return Err(FormatError::LengthMismatch { declared: payload, actual }.into());
    }

    let mut nets = Vec::with_capacity(3);
    for table in &tables {
        let mut layers = Vec::with_capacity(table.len());
        for &(inputs, outputs, activation) in table {
            let w = read_f64s(&mut r, inputs * outputs)?;
            let b = read_f64s(&mut r, outputs)?;
            layers.push(Layer {
                weight: Array2::from_shape_vec((outputs, inputs), w).map_err(header_err)?,
                bias: Array1::from(b),
                activation,
            });
        }
        nets.push(Mlp::from_layers(layers).map_err(header_err)?);
    }
    let head = nets.pop().unwrap();
    let trunk = nets.pop().unwrap();
    let gen = nets.pop().unwrap();
    let generator = Generator::from_parts(gen, header.config.noise_dim, header.geometry).map_err(header_err)?;
    let critic = Critic::from_parts(trunk, head, header.geometry).map_err(header_err)?;

    let generator_adam = read_adam(&mut r, gen_params as usize)?;
    let critic_adam = read_adam(&mut r, critic_params as usize)?;
    let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
    let stream = r.u64()?;
    let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());

    Ok(Checkpoint {
        config: header.config,
        step: header.step,
        model: Model {
            generator,
            critic,
            condition_scaler: header.condition_scaler,
            spread_scaler: header.spread_scaler,
        },
        generator_adam,
        critic_adam,
        rng: RngState { seed, stream, word_pos },
    })
}

pub fn save_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_checkpoint(ck)?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::synth::{serpentine_grid, synth_dataset, Scenario};
    use crate::wgan::train::{train, TrainingConfig};
    use rand::RngCore;

    fn checkpoint() -> Checkpoint {
        let g = ArrayGeometry::new(1, 1, 2, 4, 1.272e9, 50e6).unwrap();
        let scenario = Scenario::demo(g);
        let data = synth_dataset(&scenario, &serpentine_grid(scenario.bounds.min, scenario.bounds.max, 4, 4)).unwrap();
        let config = TrainingConfig { batch_size: 4, n_critic: 1, noise_dim: 3, width_scale: 0.02, ..TrainingConfig::new(2) };
        train(&data, config).unwrap().0
    }

    fn code(err: Error) -> u8 {
        match err {
            Error::Format(f) => f.code(),
            other => panic!("expected a format error, got {other}"),
        }
    }

    #[test]
    fn round_trip_is_lossless() {
        let ck = checkpoint();
        let bytes = encode_checkpoint(&ck).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
    }

    #[test]
    fn rng_state_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        rng.set_stream(9);
        for _ in 0..13 {
            rng.next_u32();
        }
        let mut restored = RngState::capture(&rng).restore();
        assert_eq!(rng.next_u64(), restored.next_u64());
    }

    #[test]
    fn corrupt_files_have_distinct_codes() {
        let bytes = encode_checkpoint(&checkpoint()).unwrap();
        let mut magic = bytes.clone();
        magic[0] = b'X';
        let mut version = bytes.clone();
        version[4] = 9;
        let truncated = &bytes[..bytes.len() - 3];
        let mut trailing = bytes.clone();
        trailing.push(0);
        let mut json = bytes.clone();
        json[10] = b'#';
        let codes = [
            code(decode_checkpoint(&magic).unwrap_err()),
            code(decode_checkpoint(&version).unwrap_err()),
            code(decode_checkpoint(truncated).unwrap_err()),
            code(decode_checkpoint(&trailing).unwrap_err()),
            code(decode_checkpoint(&json).unwrap_err()),
        ];
        assert_eq!(codes, [1, 2, 3, 4, 6]);
        assert_eq!(code(decode_checkpoint(&bytes[..3]).unwrap_err()), 3);
    }
}
