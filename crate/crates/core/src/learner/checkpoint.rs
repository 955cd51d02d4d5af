//! Binary checkpoint container.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field            | type                                   |
//! |------------------|----------------------------------------|
//! | magic            | `b"THROWCKP"`                          |
//! | version          | u32 (= 1)                              |
//! | variant          | u8 (0 = 2d, 1 = 3d)                    |
//! | iteration        | u64                                    |
//! | config hash      | 32 bytes (SHA-256 of the run config)   |
//! | layer count `L`  | u32                                    |
//! | actor sizes      | `L` x u32 (obs, hidden..., act)        |
//! | normalizer flag  | u8                                     |
//! | normalizer count | f64                                    |
//! | parameters       | f64 x `n`: actor, critic, log-std      |
//! | normalizer       | f64 x obs: mean, then variance         |
//! | checksum         | 32 bytes, SHA-256 of all bytes above   |
//!
//! Each network stores its layers in order, weights input-major then biases.
//! The critic shares the hidden sizes and has a single output.

use std::path::Path;

use ndarray::Array1;
use rand::SeedableRng;
use sha2::{Digest, Sha256};

use super::normalizer::RunningNormalizer;
use super::policy::ActorCritic;
use crate::env::Variant;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"THROWCKP";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub variant: Variant,
    pub iteration: u64,
    pub config_hash: [u8; 32],
    pub policy: ActorCritic,
    pub normalizer: RunningNormalizer,
}

pub fn sha256(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(MAGIC);
        b.extend(VERSION.to_le_bytes());
        b.push(match self.variant {
            Variant::Planar => 0,
            Variant::Spatial => 1,
        });
        b.extend(self.iteration.to_le_bytes());
        b.extend_from_slice(&self.config_hash);
        let sizes = self.policy.actor.sizes();
        b.extend((sizes.len() as u32).to_le_bytes());
        for s in &sizes {
            b.extend((*s as u32).to_le_bytes());
        }
        b.push(u8::from(self.normalizer.enabled));
        b.extend(self.normalizer.count.to_le_bytes());
        for v in self.policy.to_flat() {
            b.extend(v.to_le_bytes());
        }
        for v in self.normalizer.mean.iter().chain(self.normalizer.var.iter()) {
            b.extend(v.to_le_bytes());
        }
        let sum = sha256(&b);
        b.extend_from_slice(&sum);
        b
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < MAGIC.len() + 32 || &data[..8] != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let (body, sum) = data.split_at(data.len() - 32);
        if sha256(body) != sum {
            return Err(Error::Checkpoint("checksum mismatch".into()));
        }
        let mut r = Reader { data: body, pos: 8 };
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let variant = match r.u8()? {
            0 => Variant::Planar,
            1 => Variant::Spatial,
            v => return Err(Error::Checkpoint(format!("unknown variant tag {v}"))),
        };
        let iteration = r.u64()?;
        let config_hash: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let layers = r.u32()? as usize;
        if !(3..=16).contains(&layers) {
            return Err(Error::Checkpoint(format!("implausible layer count {layers}")));
        }
        let sizes = (0..layers).map(|_| r.u32().map(|s| s as usize)).collect::<Result<Vec<_>>>()?;
        if sizes.iter().any(|&s| s == 0 || s > 1 << 16) {
            return Err(Error::Checkpoint("implausible layer size".into()));
        }
        let (obs_dim, act_dim) = (sizes[0], sizes[layers - 1]);
        if obs_dim != variant.obs_dim() || act_dim != variant.act_dim() {
            return Err(Error::Checkpoint(format!(
                "network {obs_dim}->{act_dim} does not match the {variant} variant"
            )));
        }
        let enabled = r.u8()? != 0;
        let count = r.f64()?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut policy = ActorCritic::new(obs_dim, act_dim, &sizes[1..layers - 1], 0.0, &mut rng);
        let flat = (0..policy.num_params()).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        policy.set_flat(&flat);
        let mean = (0..obs_dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let var = (0..obs_dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        if r.pos != body.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        Ok(Checkpoint {
            variant,
            iteration,
            config_hash,
            policy,
            normalizer: RunningNormalizer {
                mean: Array1::from(mean),
                var: Array1::from(var),
                count,
                enabled,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&data)
    }
}
