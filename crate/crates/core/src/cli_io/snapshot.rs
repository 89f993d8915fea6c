//! `snapshot.v1`: one JSON header line, then one `{"j", "coords"}` line per loop.
//!
//! Floats are written in shortest round-trip form, so reading and writing
//! again reproduces the file byte for byte.

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::loop_paths::Loop;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

pub const SNAPSHOT_FORMAT: &str = "snapshot.v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub format: String,
    pub code_version: String,
    pub dim: usize,
    pub beta: f64,
    pub steps_per_beta: usize,
    pub loops: usize,
    /// Resolved run configuration that produced the snapshot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    j: usize,
    coords: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotFile {
    pub header: SnapshotHeader,
    pub config: Configuration,
}

impl SnapshotFile {
    pub fn new(config: Configuration, dim: usize, beta: f64, steps_per_beta: usize) -> Self {
        let header = SnapshotHeader {
            format: SNAPSHOT_FORMAT.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            dim,
            beta,
            steps_per_beta,
            loops: config.len(),
            config: None,
        };
        Self { header, config }
    }

    pub fn with_run_config(mut self, resolved: String) -> Self {
        self.header.config = Some(resolved);
        self
    }

    /// Bytes the file will occupy.
    pub fn encoded_len(&self) -> usize {
        let mut n = 0;
        let mut w = CountingWriter(&mut n);
        self.write(&mut w).expect("counting never fails");
        n
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
        for l in &self.config.loops {
            let rec = Record { j: l.j(), coords: l.coords().to_vec() };
            serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Format(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines.next().ok_or_else(|| Error::Format("empty snapshot".into()))??;
        let header: SnapshotHeader = serde_json::from_str(&first).map_err(|e| Error::Format(format!("header: {e}")))?;
        if header.format != SNAPSHOT_FORMAT {
            return Err(Error::Format(format!("unsupported snapshot format `{}`", header.format)));
        }
        let mut config = Configuration::empty();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Format(format!("loop {k}: {e}")))?;
            config.push(Loop::new(rec.j, header.dim, header.steps_per_beta, rec.coords)?);
        }
        if config.len() != header.loops {
            return Err(Error::Format(format!("header announces {} loops, found {}", header.loops, config.len())));
        }
        Ok(Self { header, config })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write(&mut v).expect("writing to memory");
        v
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        Self::read(b)
    }
}

struct CountingWriter<'a>(&'a mut usize);

impl Write for CountingWriter<'_> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        *self.0 += buf.len();
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_measures::{sample_free, LoopMeasureSpec};
    use crate::loop_paths::Domain;
    use crate::potentials::{ModelParams, Potential};
    use crate::rng::stream;

    #[test]
    fn write_read_write_is_byte_identical() {
        let p = ModelParams::new(3, 1.0, 0.0, Potential::zero()).unwrap();
        let s = LoopMeasureSpec::new(Domain::cube(3, -1.0, 3.0).unwrap(), p, 8, 8, 1.0).unwrap();
        let conf = sample_free(&s, &mut stream(5, 0, "snap"));
        assert!(!conf.is_empty());
        let snap = SnapshotFile::new(conf.clone(), 3, 1.0, 8);
        let a = snap.to_bytes();
        assert_eq!(a.len(), snap.encoded_len());
        let back = SnapshotFile::from_bytes(&a).unwrap();
        assert_eq!(back.config, conf);
        assert_eq!(back.to_bytes(), a);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let c: Configuration = vec![Loop::constant(&[0.0; 3], 1, 4).unwrap()].into_iter().collect();
        let mut b = SnapshotFile::new(c, 3, 1.0, 4).to_bytes();
        let cut = b.iter().position(|&x| x == b'\n').unwrap() + 1;
        b.truncate(cut);
        assert!(matches!(SnapshotFile::from_bytes(&b), Err(Error::Format(_))));
    }
}
