//! Minimal binary checkpoint encoding: a 4-byte kind tag, a version word,
//! then little-endian scalars and f64 payloads. Round-trips are bitwise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub(crate) struct CheckpointWriter {
    inner: BufWriter<File>,
    path: PathBuf,
}

impl CheckpointWriter {
    pub fn create(path: &Path, kind: [u8; 4], version: u32) -> Result<Self> {
        let file =
            File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = CheckpointWriter {
            inner: BufWriter::new(file),
            path: path.to_owned(),
        };
        w.bytes(&kind)?;
        w.u32(version)?;
        Ok(w)
    }

    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.inner
            .write_all(b)
            .map_err(|e| Error::io(self.path.display().to_string(), e))
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64_slice(&mut self, vs: &[f64]) -> Result<()> {
        for v in vs {
            self.f64(*v)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner
            .flush()
            .map_err(|e| Error::io(self.path.display().to_string(), e))
    }
}

pub(crate) struct CheckpointReader {
    inner: BufReader<File>,
    path: PathBuf,
}

impl CheckpointReader {
    /// Opens and validates the tag and version before any payload access.
    pub fn open(path: &Path, kind: [u8; 4], version: u32) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut r = CheckpointReader {
            inner: BufReader::new(file),
            path: path.to_owned(),
        };
        let mut tag = [0u8; 4];
        r.bytes(&mut tag)?;
        if tag != kind {
            return Err(Error::CheckpointHeader {
                path: r.path.clone(),
            });
        }
        let found = r.u32()?;
        if found != version {
            return Err(Error::CheckpointVersion {
                path: r.path.clone(),
                found,
                expected: version,
            });
        }
        Ok(r)
    }

    fn bytes(&mut self, out: &mut [u8]) -> Result<()> {
        self.inner
            .read_exact(out)
            .map_err(|e| Error::io(self.path.display().to_string(), e))
    }

    pub fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.bytes(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.bytes(&mut b)?;
        Ok(b[0])
    }

    pub fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    pub fn f64_vec(&mut self, len: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    /// Length-sanity guard for dimension fields read from untrusted files.
    pub fn dim(&mut self, name: &'static str, max: u64) -> Result<usize> {
        let v = self.u64()?;
        if v == 0 || v > max {
            return Err(Error::InvalidParam {
                name,
                reason: format!("checkpoint dimension {v} outside 1..={max}"),
            });
        }
        Ok(v as usize)
    }
}
