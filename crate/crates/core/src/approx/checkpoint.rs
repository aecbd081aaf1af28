//! Little-endian parameter files.
//!
//! ```text
//! "EASQ" | version u32 | kind u32 | count u32 | sizes u32 × count | f64 × params
//! ```
//!
//! `kind` is 0 for a plain network, 1 for a dueling network and 2 for a
//! Q-table (`sizes = [states, actions]`). Dueling sizes read
//! `[input, trunk.., stream, outputs]`.

use std::fs;
use std::path::Path;

use super::{Architecture, Network};
use crate::error::{Error, Result};
use crate::learning::{StepSize, TabularQ};

pub const MAGIC: &[u8; 4] = b"EASQ";
pub const VERSION: u32 = 1;

const KIND_PLAIN: u32 = 0;
const KIND_DUELING: u32 = 1;
const KIND_TABLE: u32 = 2;
const MAX_SIZES: usize = 64;
const MAX_PARAMS: usize = 1 << 26;

/// Anything that can be stored as a policy checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum SavedPolicy {
    Network(Network),
    Table(TabularQ),
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn encode(policy: &SavedPolicy) -> Vec<u8> {
    let (kind, sizes, params): (u32, Vec<usize>, &[f64]) = match policy {
        SavedPolicy::Network(net) => {
            let kind = match net.architecture() {
                Architecture::Plain { .. } => KIND_PLAIN,
                Architecture::Dueling { .. } => KIND_DUELING,
            };
            (kind, net.architecture().sizes(), net.params())
        }
        SavedPolicy::Table(q) => (
            KIND_TABLE,
            vec![q.num_states(), crate::learning::QFunction::num_actions(q)],
            q.table(),
        ),
    };
    let mut out = Vec::with_capacity(16 + 4 * sizes.len() + 8 * params.len());
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, kind);
    put_u32(&mut out, sizes.len() as u32);
    for s in &sizes {
        put_u32(&mut out, *s as u32);
    }
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| Error::parse(0, format!("truncated checkpoint at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<SavedPolicy> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::parse(0, "missing EASQ magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::parse(0, format!("unsupported checkpoint version {version}")));
    }
    let kind = r.u32()?;
    let count = r.u32()? as usize;
    if count > MAX_SIZES {
        return Err(Error::parse(0, format!("implausible layer count {count}")));
    }
    let sizes = (0..count)
        .map(|_| r.u32().map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    if sizes.iter().any(|s| *s == 0 || *s > MAX_PARAMS) {
        return Err(Error::parse(0, "layer sizes must be positive and bounded"));
    }

    let read_params = |r: &mut Reader<'_>, n: usize| -> Result<Vec<f64>> {
        if n > MAX_PARAMS {
            return Err(Error::parse(0, "too many parameters"));
        }
        let raw = r.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    };

    let policy = match kind {
        KIND_PLAIN | KIND_DUELING => {
            let arch = if kind == KIND_PLAIN {
                if sizes.len() < 2 {
                    return Err(Error::parse(0, "plain network needs at least two sizes"));
                }
                Architecture::Plain { sizes }
            } else {
                if sizes.len() < 3 {
                    return Err(Error::parse(0, "dueling network needs input, stream and outputs"));
                }
                Architecture::Dueling {
                    input: sizes[0],
                    trunk: sizes[1..sizes.len() - 2].to_vec(),
                    stream: sizes[sizes.len() - 2],
                    outputs: sizes[sizes.len() - 1],
                }
            };
            let expected = param_count(&arch)
                .ok_or_else(|| Error::parse(0, "parameter count overflows"))?;
            let params = read_params(&mut r, expected)?;
            SavedPolicy::Network(Network::from_params(arch, params)?)
        }
        KIND_TABLE => {
            if sizes.len() != 2 {
                return Err(Error::parse(0, "table checkpoint needs [states, actions]"));
            }
            let n = sizes[0]
                .checked_mul(sizes[1])
                .ok_or_else(|| Error::parse(0, "table too large"))?;
            let values = read_params(&mut r, n)?;
            SavedPolicy::Table(TabularQ::from_table(sizes[0], sizes[1], values, StepSize::CONVERGENT))
        }
        other => return Err(Error::parse(0, format!("unknown checkpoint kind {other}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::parse(0, "trailing bytes after parameters"));
    }
    Ok(policy)
}

fn param_count(arch: &Architecture) -> Option<usize> {
    let dense = |i: usize, o: usize| i.checked_mul(o)?.checked_add(o);
    let mut total = 0usize;
    match arch {
        Architecture::Plain { sizes } => {
            for w in sizes.windows(2) {
                total = total.checked_add(dense(w[0], w[1])?)?;
            }
        }
        Architecture::Dueling {
            input,
            trunk,
            stream,
            outputs,
        } => {
            let mut prev = *input;
            for &w in trunk {
                total = total.checked_add(dense(prev, w)?)?;
                prev = w;
            }
            total = total.checked_add(dense(prev, *stream)?)?;
            total = total.checked_add(dense(*stream, *outputs)?)?;
            total = total.checked_add(dense(prev, *stream)?)?;
            total = total.checked_add(dense(*stream, 1)?)?;
        }
    }
    (total <= MAX_PARAMS).then_some(total)
}

pub fn save(policy: &SavedPolicy, path: &Path) -> Result<()> {
    fs::write(path, encode(policy)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<SavedPolicy> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
