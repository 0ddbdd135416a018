//! Versioned binary model checkpoints.
//!
//! Layout (all little-endian): magic `QMC1`, version, a kind byte, system
//! metadata, the optional pilot parameter block (autoencoder checkpoints),
//! then the layer list with raw 64-bit parameter arrays and batch-norm
//! running statistics. Round trips are bit-exact.

use super::layers::{BatchNorm, Dense, QuantizeForward, QuantizeNode, SteKind};
use super::{Layer, Network};
use crate::channel::ChannelKind;
use crate::error::{Error, Result};
use crate::pilot::PowerConstraint;
use crate::quantizer::{QuantizerSpec, Resolution};
use nalgebra::DMatrix;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"QMC1";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointKind {
    Regressor,
    Autoencoder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointMeta {
    pub kind: CheckpointKind,
    pub tau: usize,
    pub m: usize,
    pub k: usize,
    pub channel: ChannelKind,
    /// None means the unquantized diagnostic configuration.
    pub resolution: Option<Resolution>,
    pub snr_db: f64,
    pub rho: f64,
    pub n0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub network: Network,
    /// Stacked-real pilot parameter (autoencoder checkpoints only).
    pub pilot_param: Option<DMatrix<f64>>,
    pub constraint: Option<PowerConstraint>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read(&mut r)
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        put_u32(w, VERSION)?;
        put_u8(w, match self.meta.kind {
            CheckpointKind::Regressor => 0,
            CheckpointKind::Autoencoder => 1,
        })?;
        put_u32(w, self.meta.tau as u32)?;
        put_u32(w, self.meta.m as u32)?;
        put_u32(w, self.meta.k as u32)?;
        put_u8(w, match self.meta.channel {
            ChannelKind::RayleighIid => 0,
            ChannelKind::Los => 1,
        })?;
        put_u8(w, encode_resolution(self.meta.resolution))?;
        put_f64(w, self.meta.snr_db)?;
        put_f64(w, self.meta.rho)?;
        put_f64(w, self.meta.n0)?;
        match (&self.pilot_param, &self.constraint) {
            (Some(p), Some(c)) => {
                put_u8(w, 1)?;
                put_u8(w, match c {
                    PowerConstraint::PerColumn => 0,
                    PowerConstraint::SumPower => 1,
                })?;
                put_u32(w, p.nrows() as u32)?;
                put_u32(w, p.ncols() as u32)?;
                for v in p.iter() {
                    put_f64(w, *v)?;
                }
            }
            (None, None) => put_u8(w, 0)?,
            _ => return Err(Error::Checkpoint("pilot block needs both param and constraint".into())),
        }
        match self.network.skip_into {
            Some(i) => {
                put_u8(w, 1)?;
                put_u32(w, i as u32)?;
            }
            None => put_u8(w, 0)?,
        }
        put_u32(w, self.network.layers.len() as u32)?;
        for layer in &self.network.layers {
            match layer {
                Layer::Dense(d) => {
                    put_u8(w, 0)?;
                    put_u32(w, d.in_width as u32)?;
                    put_u32(w, d.out_width as u32)?;
                    put_slice(w, &d.weights)?;
                    put_slice(w, &d.bias)?;
                }
                Layer::Relu => put_u8(w, 1)?,
                Layer::Tanh => put_u8(w, 2)?,
                Layer::BatchNorm(b) => {
                    put_u8(w, 3)?;
                    put_u32(w, b.width as u32)?;
                    put_f64(w, b.momentum)?;
                    put_f64(w, b.epsilon)?;
                    put_slice(w, &b.gamma)?;
                    put_slice(w, &b.beta)?;
                    put_slice(w, &b.running_mean)?;
                    put_slice(w, &b.running_var)?;
                }
                Layer::Quantize(q) => {
                    put_u8(w, 4)?;
                    put_u8(w, encode_resolution(Some(q.spec.resolution)))?;
                    put_f64(w, q.spec.sigma)?;
                    put_u8(w, match q.forward {
                        QuantizeForward::Levels => 0,
                        QuantizeForward::ClippedIdentity => 1,
                        QuantizeForward::Identity => 2,
                    })?;
                    put_u8(w, match q.ste {
                        SteKind::Clipped => 0,
                        SteKind::Identity => 1,
                    })?;
                }
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
        }
        let version = get_u32(r)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let kind = match get_u8(r)? {
            0 => CheckpointKind::Regressor,
            1 => CheckpointKind::Autoencoder,
            k => return Err(Error::Checkpoint(format!("bad kind {k}"))),
        };
        let tau = get_u32(r)? as usize;
        let m = get_u32(r)? as usize;
        let k = get_u32(r)? as usize;
        let channel = match get_u8(r)? {
            0 => ChannelKind::RayleighIid,
            1 => ChannelKind::Los,
            c => return Err(Error::Checkpoint(format!("bad channel {c}"))),
        };
        let resolution = decode_resolution(get_u8(r)?)?;
        let snr_db = get_f64(r)?;
        let rho = get_f64(r)?;
        let n0 = get_f64(r)?;
        let (pilot_param, constraint) = if get_u8(r)? == 1 {
            let constraint = match get_u8(r)? {
                0 => PowerConstraint::PerColumn,
                1 => PowerConstraint::SumPower,
                c => return Err(Error::Checkpoint(format!("bad constraint {c}"))),
            };
            let rows = get_u32(r)? as usize;
            let cols = get_u32(r)? as usize;
            let mut data = vec![0.0; rows * cols];
            get_slice(r, &mut data)?;
            (Some(DMatrix::from_vec(rows, cols, data)), Some(constraint))
        } else {
            (None, None)
        };
        let skip_into = if get_u8(r)? == 1 { Some(get_u32(r)? as usize) } else { None };
        let n_layers = get_u32(r)? as usize;
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            layers.push(match get_u8(r)? {
                0 => {
                    let in_width = get_u32(r)? as usize;
                    let out_width = get_u32(r)? as usize;
                    let mut weights = vec![0.0; in_width * out_width];
                    get_slice(r, &mut weights)?;
                    let mut bias = vec![0.0; out_width];
                    get_slice(r, &mut bias)?;
                    Layer::Dense(Dense { in_width, out_width, weights, bias })
                }
                1 => Layer::Relu,
                2 => Layer::Tanh,
                3 => {
                    let width = get_u32(r)? as usize;
                    let momentum = get_f64(r)?;
                    let epsilon = get_f64(r)?;
                    let mut b = BatchNorm::new(width);
                    b.momentum = momentum;
                    b.epsilon = epsilon;
                    get_slice(r, &mut b.gamma)?;
                    get_slice(r, &mut b.beta)?;
                    get_slice(r, &mut b.running_mean)?;
                    get_slice(r, &mut b.running_var)?;
                    Layer::BatchNorm(b)
                }
                4 => {
                    let res = decode_resolution(get_u8(r)?)?
                        .ok_or_else(|| Error::Checkpoint("quantize node without resolution".into()))?;
                    let sigma = get_f64(r)?;
                    let forward = match get_u8(r)? {
                        0 => QuantizeForward::Levels,
                        1 => QuantizeForward::ClippedIdentity,
                        2 => QuantizeForward::Identity,
                        f => return Err(Error::Checkpoint(format!("bad forward mode {f}"))),
                    };
                    let ste = match get_u8(r)? {
                        0 => SteKind::Clipped,
                        1 => SteKind::Identity,
                        s => return Err(Error::Checkpoint(format!("bad ste kind {s}"))),
                    };
                    Layer::Quantize(QuantizeNode { spec: QuantizerSpec::new(res, sigma)?, forward, ste })
                }
                t => return Err(Error::Checkpoint(format!("bad layer tag {t}"))),
            });
        }
        Ok(Checkpoint {
            meta: CheckpointMeta { kind, tau, m, k, channel, resolution, snr_db, rho, n0 },
            network: Network::new(layers, skip_into),
            pilot_param,
            constraint,
        })
    }
}

fn encode_resolution(r: Option<Resolution>) -> u8 {
    match r {
        None => 0,
        Some(Resolution::OneBit) => 1,
        Some(Resolution::Ternary) => 2,
        Some(Resolution::TwoBit) => 3,
        Some(Resolution::ThreeBit) => 4,
        Some(Resolution::FourBit) => 5,
    }
}

fn decode_resolution(b: u8) -> Result<Option<Resolution>> {
    Ok(match b {
        0 => None,
        1 => Some(Resolution::OneBit),
        2 => Some(Resolution::Ternary),
        3 => Some(Resolution::TwoBit),
        4 => Some(Resolution::ThreeBit),
        5 => Some(Resolution::FourBit),
        _ => return Err(Error::Checkpoint(format!("bad resolution byte {b}"))),
    })
}

fn put_u8<W: Write>(w: &mut W, v: u8) -> Result<()> {
    Ok(w.write_all(&[v])?)
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_slice<W: Write>(w: &mut W, s: &[f64]) -> Result<()> {
    for v in s {
        put_f64(w, *v)?;
    }
    Ok(())
}

fn get_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_slice<R: Read>(r: &mut R, out: &mut [f64]) -> Result<()> {
    for v in out.iter_mut() {
        *v = get_f64(r)?;
    }
    Ok(())
}
