//! Binary policy checkpoints.
//!
//! Layout (all integers u32 little-endian): magic `ULTP`, version, grid,
//! max elements, category count, then each category as length + UTF-8
//! bytes, then contexts, positions, vocabulary size, then the logit table as
//! little-endian f64.

use std::path::Path;

use super::policy::ToyPolicy;
use super::tokens::TokenScheme;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::layout::Category;

pub const MAGIC: &[u8; 4] = b"ULTP";
pub const VERSION: u32 = 1;

fn put(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn to_u32(v: usize, what: &str) -> u32 {
    u32::try_from(v).unwrap_or_else(|_| panic!("{what} does not fit in a checkpoint"))
}

pub fn to_bytes(policy: &ToyPolicy) -> Vec<u8> {
    let s = policy.scheme();
    let mut out = Vec::with_capacity(64 + policy.params().len() * 8);
    out.extend_from_slice(MAGIC);
    put(&mut out, VERSION);
    put(&mut out, s.grid);
    put(&mut out, to_u32(s.max_elements, "max elements"));
    put(&mut out, to_u32(s.categories.len(), "category count"));
    for c in &s.categories {
        let name = c.name().as_bytes();
        put(&mut out, to_u32(name.len(), "category name"));
        out.extend_from_slice(name);
    }
    put(&mut out, to_u32(policy.contexts(), "context count"));
    put(&mut out, to_u32(policy.positions(), "position count"));
    put(&mut out, to_u32(policy.vocab(), "vocabulary"));
    for z in policy.params() {
        out.extend_from_slice(&z.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end =
            end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<ToyPolicy> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let grid = r.u32()?;
    let max_elements = r.u32()? as usize;
    let ncat = r.u32()? as usize;
    if grid == 0 || ncat > 4096 {
        return Err(Error::Checkpoint("implausible scheme header".into()));
    }
    let mut categories = Vec::with_capacity(ncat);
    for _ in 0..ncat {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Checkpoint("category name is not UTF-8".into()))?;
        categories.push(
            Category::parse(name)
                .ok_or_else(|| Error::Checkpoint(format!("bad category name {name:?}")))?,
        );
    }
    let scheme = TokenScheme {
        grid,
        categories,
        max_elements,
    };
    let contexts = r.u32()? as usize;
    let positions = r.u32()? as usize;
    let vocab = r.u32()? as usize;
    if positions != scheme.max_len() - 1 || vocab != scheme.vocab_size() {
        return Err(Error::Checkpoint(
            "table shape disagrees with the token scheme".into(),
        ));
    }
    let n = contexts
        .checked_mul(positions)
        .and_then(|v| v.checked_mul(vocab))
        .ok_or_else(|| Error::Checkpoint("table too large".into()))?;
    let raw = r.take(
        n.checked_mul(8)
            .ok_or_else(|| Error::Checkpoint("table too large".into()))?,
    )?;
    if r.pos != buf.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    let logits = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    ToyPolicy::from_params(scheme, contexts, logits)
}

pub fn save(policy: &ToyPolicy, path: &Path) -> Result<()> {
    write_atomic(path, &to_bytes(policy))
}

pub fn load(path: &Path) -> Result<ToyPolicy> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
