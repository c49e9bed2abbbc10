//! Binary model checkpoints.
//!
//! All integers are little-endian `u32`, all parameters little-endian `f64`.
//!
//! ```text
//! "JSQA1"                       5 magic bytes
//! count                         number of matchers (2: subject, relation)
//! per matcher:
//!   mode                        0 = char, 1 = word
//!   embed_dim
//!   conv1, conv2                in, out, kernel, stride, padding each
//!   symbol count, then per symbol: byte length + UTF-8 bytes
//!                               (reserved UNK/SEP symbols are not stored)
//!   7 tensors in declared order: ndim, dims…, values…
//! ```

use std::path::Path;

use kbsqa_core::matcher::{MatcherConfig, MatcherMode, Vocabulary};
use kbsqa_core::nn::{Conv1dSpec, Tensor};
use kbsqa_core::{Matcher, Models};

use crate::error::{Error, Result};

const MAGIC: &[u8; 5] = b"JSQA1";

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(
        &u32::try_from(v)
            .expect("checkpoint field fits in u32")
            .to_le_bytes(),
    );
}

fn put_spec(out: &mut Vec<u8>, s: &Conv1dSpec) {
    for v in [
        s.in_channels,
        s.out_channels,
        s.kernel_size,
        s.stride,
        s.padding,
    ] {
        put_u32(out, v);
    }
}

fn put_matcher(out: &mut Vec<u8>, m: &Matcher) {
    let c = m.config();
    put_u32(out, matches!(c.mode, MatcherMode::Word) as usize);
    put_u32(out, c.embed_dim);
    put_spec(out, &c.conv1);
    put_spec(out, &c.conv2);
    put_u32(out, c.vocabulary.symbols().len());
    for s in c.vocabulary.symbols() {
        put_u32(out, s.len());
        out.extend_from_slice(s.as_bytes());
    }
    for t in m.params() {
        put_u32(out, t.shape().len());
        for &d in t.shape() {
            put_u32(out, d);
        }
        for v in t.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn encode(models: &Models) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    put_u32(&mut out, 2);
    put_matcher(&mut out, &models.subject);
    put_matcher(&mut out, &models.relation);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<usize, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn spec(&mut self) -> std::result::Result<Conv1dSpec, String> {
        Ok(Conv1dSpec {
            in_channels: self.u32()?,
            out_channels: self.u32()?,
            kernel_size: self.u32()?,
            stride: self.u32()?,
            padding: self.u32()?,
        })
    }

    fn matcher(&mut self) -> std::result::Result<Matcher, String> {
        let mode = match self.u32()? {
            0 => MatcherMode::Char,
            1 => MatcherMode::Word,
            other => return Err(format!("unknown matcher mode {other}")),
        };
        let embed_dim = self.u32()?;
        let conv1 = self.spec()?;
        let conv2 = self.spec()?;
        let count = self.u32()?;
        let mut symbols = Vec::new();
        for _ in 0..count {
            let len = self.u32()?;
            let s = std::str::from_utf8(self.take(len)?).map_err(|e| e.to_string())?;
            symbols.push(s.to_string());
        }
        let vocabulary = Vocabulary::from_symbols(symbols).map_err(|e| e.to_string())?;
        let config = MatcherConfig {
            mode,
            embed_dim,
            conv1,
            conv2,
            vocabulary,
        };
        let mut params = Vec::with_capacity(7);
        for _ in 0..7 {
            let ndim = self.u32()?;
            let shape = (0..ndim)
                .map(|_| self.u32())
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let n = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or("tensor too large")?;
            if n > self.bytes.len() / 8 {
                return Err(format!("tensor of {n} values exceeds the file"));
            }
            let values = (0..n)
                .map(|_| self.f64())
                .collect::<std::result::Result<Vec<_>, _>>()?;
            params.push(Tensor::new(&shape, values).map_err(|e| e.to_string())?);
        }
        Matcher::from_parts(config, params).map_err(|e| e.to_string())
    }
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<Models> {
    let bad = |message: String| Error::parse(path, 0, message);
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len()).map_err(bad)? != MAGIC {
        return Err(bad("not a JSQA1 checkpoint".into()));
    }
    let count = r.u32().map_err(bad)?;
    if count != 2 {
        return Err(bad(format!("expected 2 matchers, found {count}")));
    }
    let subject = r.matcher().map_err(bad)?;
    let relation = r.matcher().map_err(bad)?;
    if r.pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(Models { subject, relation })
}

pub fn save(models: &Models, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, encode(models)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Models> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
