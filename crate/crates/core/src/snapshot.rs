//! Binary snapshot format for packed solver states.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic  b"ANEL"
//! 4       4     format version (u32, currently 1)
//! 8       4     spectral order m (u32)
//! 12      8     density exponent alpha (f64)
//! 20      8     density floor eps (f64)
//! 28      8     smoothing length delta (f64)
//! 36      8     simulation time t (f64)
//! 44      8     coefficient count n (u64), must equal the packed state
//!               length for order m
//! 52      8·n   packed state coefficients (f64), horizontal block first
//!               then vertical block, each in canonical dof order
//! ```
//!
//! Reads are strict: wrong magic, unknown version, inconsistent count, or
//! trailing bytes are all errors. Round-trips are bit-exact.

use crate::constraint::StateLayout;
use crate::{Result, SolverError};
use nalgebra::DVector;

pub const MAGIC: [u8; 4] = *b"ANEL";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 52;

/// A solver state with the parameters needed to reconstruct its system.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub m: u32,
    pub alpha: f64,
    pub eps: f64,
    pub delta: f64,
    pub t: f64,
    pub state: DVector<f64>,
}

impl Snapshot {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let expected = StateLayout::new(self.m as usize).total();
        if self.state.len() != expected {
            return Err(SolverError::Snapshot(format!(
                "state length {} does not match order m = {} (expected {})",
                self.state.len(),
                self.m,
                expected
            )));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.state.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        out.extend_from_slice(&self.eps.to_le_bytes());
        out.extend_from_slice(&self.delta.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&(self.state.len() as u64).to_le_bytes());
        for v in self.state.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Snapshot> {
        let take = |off: usize, len: usize| -> Result<&[u8]> {
            bytes.get(off..off + len).ok_or_else(|| {
                SolverError::Snapshot(format!(
                    "truncated snapshot: need {} bytes at offset {}, have {}",
                    len,
                    off,
                    bytes.len()
                ))
            })
        };
        let f64_at = |off: usize| -> Result<f64> {
            Ok(f64::from_le_bytes(take(off, 8)?.try_into().unwrap()))
        };
        if take(0, 4)? != MAGIC {
            return Err(SolverError::Snapshot(
                "bad magic: not a snapshot file".into(),
            ));
        }
        let version = u32::from_le_bytes(take(4, 4)?.try_into().unwrap());
        if version != VERSION {
            return Err(SolverError::Snapshot(format!(
                "unsupported snapshot version {version} (expected {VERSION})"
            )));
        }
        let m = u32::from_le_bytes(take(8, 4)?.try_into().unwrap());
        let alpha = f64_at(12)?;
        let eps = f64_at(20)?;
        let delta = f64_at(28)?;
        let t = f64_at(36)?;
        let n = u64::from_le_bytes(take(44, 8)?.try_into().unwrap()) as usize;
        let expected = StateLayout::new(m as usize).total();
        if n != expected {
            return Err(SolverError::Snapshot(format!(
                "coefficient count {n} inconsistent with order m = {m} (expected {expected})"
            )));
        }
        let payload = take(HEADER_LEN, 8 * n)?;
        if bytes.len() != HEADER_LEN + 8 * n {
            return Err(SolverError::Snapshot(format!(
                "trailing bytes: file is {} bytes, layout implies {}",
                bytes.len(),
                HEADER_LEN + 8 * n
            )));
        }
        let state = DVector::from_iterator(
            n,
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
        );
        Ok(Snapshot {
            m,
            alpha,
            eps,
            delta,
            t,
            state,
        })
    }
}
