//! Binary snapshot: `LOEE`, u32 version, u32 header length, JSON header, then
//! A as f32 in `(c, x, y)` order and P as f32 in `(p, k, x, y)` order, all
//! little-endian.

use std::collections::VecDeque;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EventCounts, RngState, SimConfig, WorldState};
use crate::evolution::EventRecord;
use crate::field::{Dims, StackedField};
use crate::genome::{N_CHANNELS, N_GENES};

pub const MAGIC: [u8; 4] = *b"LOEE";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot: magic {found:?}")]
    MagicMismatch { found: [u8; 4] },
    #[error("unsupported snapshot version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("snapshot truncated while reading {section}")]
    Truncated { section: &'static str },
    #[error("snapshot header declares {header} but config is {config}")]
    DimensionMismatch { header: Dims, config: Dims },
    #[error("malformed snapshot header: {0}")]
    Header(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl SnapshotError {
    /// Stable numeric code per failure kind, used as a process exit status.
    pub fn code(&self) -> i32 {
        match self {
            SnapshotError::MagicMismatch { .. } => 10,
            SnapshotError::VersionMismatch { .. } => 11,
            SnapshotError::Truncated { .. } => 12,
            SnapshotError::DimensionMismatch { .. } => 13,
            SnapshotError::Header(_) => 14,
            SnapshotError::Io(_) => 15,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: SimConfig,
    width: usize,
    height: usize,
    step: u64,
    rng: RngState,
    counts: EventCounts,
    alpha_area: usize,
    events: Vec<EventRecord>,
}

pub fn write_snapshot(mut w: impl Write, state: &WorldState, config: &SimConfig) -> Result<(), SnapshotError> {
    let dims = state.dims();
    let header = Header {
        config: config.clone(),
        width: dims.width,
        height: dims.height,
        step: state.step,
        rng: RngState::capture(&state.rng),
        counts: state.counts,
        alpha_area: state.alpha_area,
        events: state.events.iter().cloned().collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| SnapshotError::Header(e.to_string()))?;
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    w.write_all(&f32_bytes(state.phenospace.as_slice()))?;
    w.write_all(&f32_bytes(state.genospace.as_slice()))?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(mut r: impl Read) -> Result<(WorldState, SimConfig), SnapshotError> {
    let mut magic = [0u8; 4];
    read_section(&mut r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(SnapshotError::MagicMismatch { found: magic });
    }
    let mut word = [0u8; 4];
    read_section(&mut r, &mut word, "version")?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(SnapshotError::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    read_section(&mut r, &mut word, "header length")?;
    let mut json = vec![0u8; u32::from_le_bytes(word) as usize];
    read_section(&mut r, &mut json, "header")?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| SnapshotError::Header(e.to_string()))?;
    let dims = Dims::new(header.width, header.height);
    if dims != header.config.dims() {
        return Err(SnapshotError::DimensionMismatch {
            header: dims,
            config: header.config.dims(),
        });
    }
    header
        .config
        .validate()
        .map_err(|e| SnapshotError::Header(e.to_string()))?;
    let phenospace = read_stack(&mut r, dims, N_CHANNELS, "phenospace")?;
    let genospace = read_stack(&mut r, dims, N_GENES, "genospace")?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(SnapshotError::Header("trailing bytes after genospace".into()));
    }
    let state = WorldState {
        step: header.step,
        phenospace,
        genospace,
        rng: header.rng.restore().map_err(SnapshotError::Header)?,
        events: VecDeque::from(header.events),
        counts: header.counts,
        alpha_area: header.alpha_area,
    };
    Ok((state, header.config))
}

pub fn save(path: impl AsRef<Path>, state: &WorldState, config: &SimConfig) -> Result<(), SnapshotError> {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, state, config)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(WorldState, SimConfig), SnapshotError> {
    let bytes = fs::read(path)?;
    read_snapshot(bytes.as_slice())
}

pub fn to_bytes(state: &WorldState, config: &SimConfig) -> Vec<u8> {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, state, config).expect("writing to memory");
    buf
}

fn read_section(r: &mut impl Read, buf: &mut [u8], section: &'static str) -> Result<(), SnapshotError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => SnapshotError::Truncated { section },
        _ => SnapshotError::Io(e),
    })
}

fn read_stack(
    r: &mut impl Read,
    dims: Dims,
    layers: usize,
    section: &'static str,
) -> Result<StackedField, SnapshotError> {
    let mut bytes = vec![0u8; dims.len() * layers * 4];
    read_section(r, &mut bytes, section)?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(StackedField::from_vec(dims, layers, data).expect("length checked"))
}

pub(crate) fn f32_bytes(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}
