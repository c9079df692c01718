//! Binary parameter dumps.
//!
//! Layout (little endian): magic `RSCK`, format version `u32`, 32-byte config
//! hash, parameter count `u64`, the parameters as `f64`, then a 32-byte sha256
//! of everything before it.

use std::path::Path;

use ruleshift_core::policy::{TinyParams, NUM_PARAMS};
use sha2::{Digest, Sha256};

pub const MAGIC: &[u8; 4] = b"RSCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file")]
    Magic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint holds {found} parameters, this build expects {expected}")]
    Size { found: u64, expected: usize },
    #[error("checkpoint is truncated or corrupted")]
    Corrupt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: [u8; 32],
    pub params: TinyParams,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let values = &self.params.values;
        let mut out = Vec::with_capacity(4 + 4 + 32 + 8 + 8 * values.len() + 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.config_hash);
        out.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
        const HEADER: usize = 4 + 4 + 32 + 8;
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(CheckpointError::Magic);
        }
        if bytes.len() < HEADER + 32 {
            return Err(CheckpointError::Corrupt);
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let config_hash: [u8; 32] = bytes[8..40].try_into().expect("32 bytes");
        let n = u64::from_le_bytes(bytes[40..48].try_into().expect("8 bytes"));
        if n != NUM_PARAMS as u64 {
            return Err(CheckpointError::Size { found: n, expected: NUM_PARAMS });
        }
        let body_end = HEADER + 8 * NUM_PARAMS;
        if bytes.len() != body_end + 32 || Sha256::digest(&bytes[..body_end])[..] != bytes[body_end..] {
            return Err(CheckpointError::Corrupt);
        }
        let values = bytes[HEADER..body_end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let params = TinyParams::from_values(values).map_err(|_| CheckpointError::Corrupt)?;
        Ok(Checkpoint { config_hash, params })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        Checkpoint::from_bytes(&std::fs::read(path)?)
    }
}
