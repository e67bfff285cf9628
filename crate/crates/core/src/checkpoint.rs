//! Binary checkpoints of an [`OperatorMps`].
//!
//! Layout (little endian): magic `OPMS`, `u32` version, `u32` L, `u32` frame
//! tag (0 Pauli, 1 parallel), `L` pairs of `u32` (left, right) dimensions,
//! then every site tensor as row-major `f64`. A JSON sidecar next to the
//! binary carries the ledger, frame angles, center, step counter and any
//! run metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mps::{OperatorMps, SiteTensor, TruncationLedger, PHYS};
use crate::pauli::Frame;

const MAGIC: &[u8; 4] = b"OPMS";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub version: u32,
    pub frame: Frame,
    pub center: Option<usize>,
    pub time: f64,
    pub step: u64,
    pub ledger: TruncationLedger,
    /// Free-form run metadata.
    #[serde(default)]
    pub extra: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn frame_tag(f: &Frame) -> u32 {
    match f {
        Frame::Pauli => 0,
        Frame::Parallel(_) => 1,
    }
}

/// Writes `path` and its sidecar. Each file is written to a temporary name
/// and renamed, so an interrupted write never replaces a good checkpoint.
pub fn save(path: &Path, state: &OperatorMps, step: u64, extra: serde_json::Value) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(MAGIC)?;
        for x in [VERSION, state.len() as u32, frame_tag(&state.frame())] {
            w.write_all(&x.to_le_bytes())?;
        }
        for s in state.sites() {
            w.write_all(&(s.left as u32).to_le_bytes())?;
            w.write_all(&(s.right as u32).to_le_bytes())?;
        }
        for s in state.sites() {
            for x in &s.data {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
    }
    let meta = CheckpointMeta {
        version: VERSION,
        frame: state.frame(),
        center: state.center(),
        time: state.time(),
        step,
        ledger: state.ledger().clone(),
        extra,
    };
    let side = sidecar_path(path);
    let side_tmp = side.with_extension("json.tmp");
    std::fs::write(&side_tmp, serde_json::to_vec_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?)?;
    std::fs::rename(&tmp, path)?;
    std::fs::rename(&side_tmp, &side)?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn load(path: &Path) -> Result<(OperatorMps, CheckpointMeta)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let len = read_u32(&mut r)? as usize;
    let tag = read_u32(&mut r)?;
    let mut dims = Vec::with_capacity(len);
    for _ in 0..len {
        dims.push((read_u32(&mut r)? as usize, read_u32(&mut r)? as usize));
    }
    let mut sites = Vec::with_capacity(len);
    for (l, rr) in dims {
        let mut buf = vec![0u8; l * PHYS * rr * 8];
        r.read_exact(&mut buf)?;
        let data = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        sites.push(SiteTensor::new(l, rr, data).map_err(|e| Error::Format(e.to_string()))?);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    let text = std::fs::read(sidecar_path(path))?;
    let meta: CheckpointMeta = serde_json::from_slice(&text).map_err(|e| Error::Format(e.to_string()))?;
    if frame_tag(&meta.frame) != tag {
        return Err(Error::Format("frame tag disagrees with sidecar".into()));
    }
    let mut state = OperatorMps::from_sites(sites, meta.frame).map_err(|e| Error::Format(e.to_string()))?;
    *state.ledger_mut() = meta.ledger.clone();
    state.set_time(meta.time);
    state.center = meta.center;
    Ok((state, meta))
}
