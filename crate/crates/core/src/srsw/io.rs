//! State snapshots: raw little-endian f64 in field order (v1, v2, h) plus a
//! JSON sidecar describing the grid.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub time_index: usize,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn encode(x: &[f64]) -> Vec<u8> {
    x.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode(bytes: &[u8]) -> io::Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "length is not a multiple of 8"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Writes `path` (raw array) and `path.json` (sidecar).
pub fn write_snapshot(path: &Path, grid: &GridSpec, x: &[f64], time_index: usize) -> io::Result<()> {
    if x.len() != grid.state_dim() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "state length does not match grid"));
    }
    fs::write(path, encode(x))?;
    let meta = SnapshotMeta {
        nx: grid.nx,
        ny: grid.ny,
        dx: grid.dx,
        dy: grid.dy,
        time_index,
    };
    fs::write(sidecar(path), serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> io::Result<(SnapshotMeta, Vec<f64>)> {
    let meta: SnapshotMeta = serde_json::from_slice(&fs::read(sidecar(path))?)?;
    let x = decode(&fs::read(path)?)?;
    let expected = meta.nx * meta.ny * 2 + meta.nx * (meta.ny + 1);
    if x.len() != expected {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("expected {expected} values, found {}", x.len()),
        ));
    }
    Ok((meta, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(8, 8, 0.5, 0.25).unwrap();
        let x: Vec<f64> = (0..g.state_dim()).map(|k| (k as f64).sin() * 1e-3 + 1.0).collect();
        let p = dir.path().join("state.bin");
        write_snapshot(&p, &g, &x, 17).unwrap();
        let (m, y) = read_snapshot(&p).unwrap();
        assert_eq!(y, x);
        assert_eq!((m.nx, m.ny, m.time_index), (8, 8, 17));
        assert_eq!(fs::read(&p).unwrap().len(), 8 * g.state_dim());
        let side: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("state.bin.json")).unwrap()).unwrap();
        for k in ["nx", "ny", "dx", "dy", "time_index"] {
            assert!(side.get(k).is_some());
        }
    }

    #[test]
    fn rejects_truncated_file() {
        assert!(decode(&[0u8; 12]).is_err());
    }
}
