//! Trajectory export.
//!
//! CSV: header `replica,n,x_index,value,log_product`, one row per recorded
//! step and starting point, floats printed with Rust's shortest round-trip
//! formatting (`inf` for saturated values).
//!
//! Binary (all integers and floats little-endian):
//!
//! ```text
//! file   := magic[8] = "SDSTRJ01", n_starts: u64, starts: f64 * n_starts, chunk*
//! chunk  := replica: u64, len: u64,
//!           steps: u64 * len, log_product: f64 * len, running_max: f64 * len,
//!           path_0: f64 * len, ..., path_{n_starts-1}: f64 * len
//! ```
//!
//! Each chunk holds one bundle in column order; chunks follow replica order.

use std::io::{self, Read, Write};

use super::TrajectoryBundle;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "replica,n,x_index,value,log_product";
pub const BINARY_MAGIC: &[u8; 8] = b"SDSTRJ01";

fn io_err(e: io::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_csv_header<W: Write>(w: &mut W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}").map_err(io_err)
}

pub fn write_csv_rows<W: Write>(w: &mut W, bundle: &TrajectoryBundle) -> Result<()> {
    for (k, &n) in bundle.steps.iter().enumerate() {
        let s = bundle.log_products[k];
        for (i, path) in bundle.paths.iter().enumerate() {
            writeln!(w, "{},{},{},{},{}", bundle.replica, n, i, path[k], s).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Streams bundles into the binary layout described in the module docs.
pub struct BinaryWriter<W: Write> {
    inner: W,
    n_starts: usize,
}

impl<W: Write> BinaryWriter<W> {
    pub fn new(mut inner: W, starting_points: &[f64]) -> Result<Self> {
        inner.write_all(BINARY_MAGIC).map_err(io_err)?;
        inner
            .write_all(&(starting_points.len() as u64).to_le_bytes())
            .map_err(io_err)?;
        for x in starting_points {
            inner.write_all(&x.to_le_bytes()).map_err(io_err)?;
        }
        Ok(BinaryWriter {
            inner,
            n_starts: starting_points.len(),
        })
    }

    pub fn write_bundle(&mut self, b: &TrajectoryBundle) -> Result<()> {
        if b.paths.len() != self.n_starts {
            return Err(Error::domain("bundle has a different number of starting points"));
        }
        let w = &mut self.inner;
        w.write_all(&b.replica.to_le_bytes()).map_err(io_err)?;
        w.write_all(&(b.steps.len() as u64).to_le_bytes()).map_err(io_err)?;
        let mut buf = Vec::with_capacity(8 * b.steps.len());
        for n in &b.steps {
            buf.extend_from_slice(&n.to_le_bytes());
        }
        w.write_all(&buf).map_err(io_err)?;
        for col in std::iter::once(&b.log_products)
            .chain(std::iter::once(&b.running_max))
            .chain(b.paths.iter())
        {
            buf.clear();
            for v in col {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf).map_err(io_err)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(io_err)?;
        Ok(self.inner)
    }
}

/// One chunk read back from a binary dump.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryChunk {
    pub replica: u64,
    pub steps: Vec<u64>,
    pub log_products: Vec<f64>,
    pub running_max: Vec<f64>,
    pub paths: Vec<Vec<f64>>,
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f64>> {
    (0..n).map(|_| read_u64(r).map(f64::from_bits)).collect()
}

/// Reads a complete binary dump: the starting points and every chunk.
pub fn read_binary<R: Read>(mut r: R) -> Result<(Vec<f64>, Vec<BinaryChunk>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::domain("not a trajectory dump (bad magic)"));
    }
    let n_starts = read_u64(&mut r).map_err(io_err)? as usize;
    let starts = read_f64s(&mut r, n_starts).map_err(io_err)?;
    let mut chunks = Vec::new();
    loop {
        let replica = match read_u64(&mut r) {
            Ok(v) => v,
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(io_err(e)),
        };
        let len = read_u64(&mut r).map_err(io_err)? as usize;
        let steps = (0..len)
            .map(|_| read_u64(&mut r))
            .collect::<io::Result<Vec<_>>>()
            .map_err(io_err)?;
        let log_products = read_f64s(&mut r, len).map_err(io_err)?;
        let running_max = read_f64s(&mut r, len).map_err(io_err)?;
        let paths = (0..n_starts)
            .map(|_| read_f64s(&mut r, len))
            .collect::<io::Result<Vec<_>>>()
            .map_err(io_err)?;
        chunks.push(BinaryChunk {
            replica,
            steps,
            log_products,
            running_max,
            paths,
        });
    }
    Ok((starts, chunks))
}
