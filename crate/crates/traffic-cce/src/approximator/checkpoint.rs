use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint header: {0}")]
    BadHeader(String),
    #[error("payload length {got} does not match declared count {expected}")]
    CountMismatch { expected: usize, got: usize },
}

const MAGIC: &str = "TCCE-CKPT v1";

/// Parameter checkpoint: a versioned text header followed by a flat
/// little-endian 32-bit float array.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Component name, e.g. `policy_agent0`.
    pub kind: String,
    /// Layer widths, input through output.
    pub dims: Vec<usize>,
    pub seed: u64,
    pub iteration: usize,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn write(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "kind: {}", self.kind)?;
        writeln!(
            w,
            "dims: {}",
            self.dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        )?;
        writeln!(w, "seed: {}", self.seed)?;
        writeln!(w, "iteration: {}", self.iteration)?;
        writeln!(w, "count: {}", self.params.len())?;
        writeln!(w, "---")?;
        for &p in &self.params {
            w.write_all(&(p as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CheckpointError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let sep = b"---\n";
        let split = bytes
            .windows(sep.len())
            .position(|w| w == sep)
            .ok_or_else(|| CheckpointError::BadHeader("missing separator".into()))?;
        let header = std::str::from_utf8(&bytes[..split])
            .map_err(|_| CheckpointError::BadHeader("non-utf8 header".into()))?;
        let payload = &bytes[split + sep.len()..];

        let mut lines = header.lines();
        let magic = lines.next().unwrap_or("");
        if magic != MAGIC {
            return Err(CheckpointError::BadHeader(format!(
                "unknown magic `{magic}`"
            )));
        }
        let mut kind = String::new();
        let mut dims = Vec::new();
        let mut seed = 0u64;
        let mut iteration = 0usize;
        let mut count = None;
        for line in lines {
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| CheckpointError::BadHeader(format!("bad line `{line}`")))?;
            let value = value.trim();
            match key {
                "kind" => kind = value.to_string(),
                "dims" => {
                    dims = value
                        .split_whitespace()
                        .map(|t| t.parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| CheckpointError::BadHeader(format!("dims: {e}")))?
                }
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|e| CheckpointError::BadHeader(format!("seed: {e}")))?
                }
                "iteration" => {
                    iteration = value
                        .parse()
                        .map_err(|e| CheckpointError::BadHeader(format!("iteration: {e}")))?
                }
                "count" => {
                    count = Some(
                        value
                            .parse::<usize>()
                            .map_err(|e| CheckpointError::BadHeader(format!("count: {e}")))?,
                    )
                }
                other => {
                    return Err(CheckpointError::BadHeader(format!("unknown key `{other}`")))
                }
            }
        }
        let count = count.ok_or_else(|| CheckpointError::BadHeader("missing count".into()))?;
        if payload.len() != count * 4 {
            return Err(CheckpointError::CountMismatch {
                expected: count,
                got: payload.len() / 4,
            });
        }
        let params = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(Self {
            kind,
            dims,
            seed,
            iteration,
            params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn round_trip_preserves_f32_values() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let ck = Checkpoint {
            kind: "policy_agent0".into(),
            dims: vec![10, 8, 2],
            seed: 42,
            iteration: 17,
            params: vec![0.5, -1.25, 3.0, 1e-3],
        };
        ck.write(&path).unwrap();
        let back = Checkpoint::read(&path).unwrap();
        assert_eq!(back.kind, ck.kind);
        assert_eq!(back.dims, ck.dims);
        assert_eq!(back.seed, 42);
        assert_eq!(back.iteration, 17);
        // Round trip is exact at f32 precision.
        let expect: Vec<f64> = ck.params.iter().map(|&p| p as f32 as f64).collect();
        assert_eq!(back.params, expect);
    }

    #[test]
    fn rejects_truncated_payload() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        let ck = Checkpoint {
            kind: "x".into(),
            dims: vec![1, 1],
            seed: 0,
            iteration: 0,
            params: vec![1.0, 2.0, 3.0],
        };
        ck.write(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
        assert!(matches!(
            Checkpoint::read(&path),
            Err(CheckpointError::CountMismatch { .. })
        ));
    }

    #[test]
    fn rejects_unknown_magic() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad2.ckpt");
        std::fs::write(&path, b"NOT-A-CKPT\n---\n").unwrap();
        assert!(matches!(
            Checkpoint::read(&path),
            Err(CheckpointError::BadHeader(_))
        ));
    }
}
