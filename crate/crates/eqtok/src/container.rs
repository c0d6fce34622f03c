//! The compressed container file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "EQIC"          magic
//! u32             format version (1)
//! u8              method id (0 ac, 1 static-ac, 2 eqinfo-maxfill,
//!                            3 eqinfo-zeroavoid, 4 gzip)
//! u8              flags (bit 0: gzip framing stripped)
//! u32             window bits (0 when not windowed)
//! u8              token bit depth N
//! u8              coder precision beta
//! u16 + bytes     model id
//! u16 + bytes     params digest (hex)
//! u64             example count
//! per example:
//!   u64           symbol count
//!   u8            flags (bit 0: tail example)
//!   u32           window count
//!   per window:   u32 symbol count, u32 bit length,
//!                 packed bits (MSB-first, zero slack)
//! 32 bytes        SHA-256 of everything above
//! ```

use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::bits::BitStream;
use crate::corpus::Example;
use crate::error::{Error, Result};
use crate::model::{ByteReader, Model};
use crate::window::{
    compress_ac, compress_equal_info, compress_gzip, decompress_ac, decompress_equal_info,
    decompress_gzip, Method, MethodConfig, Variant, Window,
};

const EQIC_MAGIC: &[u8; 4] = b"EQIC";
const EQIC_VERSION: u32 = 1;

/// One compressed example: the original symbol count plus its windows. AC,
/// StaticAC, and GZip streams are stored as a single window of true bit
/// length whose symbol count is the whole example.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleRecord {
    pub symbol_count: u64,
    pub is_tail: bool,
    pub windows: Vec<Window>,
}

impl ExampleRecord {
    pub fn output_bits(&self) -> u64 {
        self.windows.iter().map(|w| w.bits.len() as u64).sum()
    }
}

/// An in-memory container: method configuration plus compressed examples in
/// corpus order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Container {
    pub config: MethodConfig,
    pub examples: Vec<ExampleRecord>,
}

impl Container {
    pub fn total_symbols(&self) -> u64 {
        self.examples.iter().map(|e| e.symbol_count).sum()
    }

    pub fn total_output_bits(&self) -> u64 {
        self.examples.iter().map(|e| e.output_bits()).sum()
    }

    /// The concatenated true bitstream, before any token padding.
    pub fn bitstream(&self) -> BitStream {
        let mut out = BitStream::with_capacity(self.total_output_bits() as usize);
        for example in &self.examples {
            for w in &example.windows {
                out.extend(&w.bits);
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut body: Vec<u8> = Vec::new();
        body.extend_from_slice(EQIC_MAGIC);
        body.extend_from_slice(&EQIC_VERSION.to_le_bytes());
        body.push(self.config.method.id());
        let flags = match self.config.method {
            Method::Gzip {
                strip_framing: true,
            } => 1u8,
            _ => 0,
        };
        body.push(flags);
        let window_bits = match self.config.method {
            Method::EqualInfo { window_bits, .. } => window_bits,
            _ => 0,
        };
        body.extend_from_slice(&window_bits.to_le_bytes());
        body.push(self.config.token_bits);
        body.push(self.config.beta);
        write_str(&mut body, &self.config.model_id);
        write_str(&mut body, &self.config.params_digest);
        body.extend_from_slice(&(self.examples.len() as u64).to_le_bytes());
        for example in &self.examples {
            body.extend_from_slice(&example.symbol_count.to_le_bytes());
            body.push(u8::from(example.is_tail));
            body.extend_from_slice(&(example.windows.len() as u32).to_le_bytes());
            for w in &example.windows {
                body.extend_from_slice(&w.symbol_count.to_le_bytes());
                body.extend_from_slice(&(w.bits.len() as u32).to_le_bytes());
                body.extend_from_slice(w.bits.as_bytes());
            }
        }
        let digest = Sha256::digest(&body);
        body.extend_from_slice(&digest);
        std::fs::write(path, &body).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let bad = |reason: &str| Error::BadFormat {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        if data.len() < 36 {
            return Err(bad("file too short"));
        }
        let (body, stored) = data.split_at(data.len() - 32);
        if Sha256::digest(body).as_slice() != stored {
            return Err(Error::ChecksumMismatch {
                path: path.to_path_buf(),
            });
        }
        let mut r = ByteReader::new(body);
        if r.take(4)? != EQIC_MAGIC.as_slice() {
            return Err(bad("bad magic"));
        }
        if r.u32()? != EQIC_VERSION {
            return Err(bad("unsupported version"));
        }
        let method_id = r.u8()?;
        let flags = r.u8()?;
        let window_bits = r.u32()?;
        let token_bits = r.u8()?;
        let beta = r.u8()?;
        let model_id = read_str(&mut r)?;
        let params_digest = read_str(&mut r)?;
        let method = match method_id {
            0 => Method::Ac,
            1 => Method::StaticAc,
            2 => Method::EqualInfo {
                window_bits,
                variant: Variant::MaxFill,
            },
            3 => Method::EqualInfo {
                window_bits,
                variant: Variant::ZeroAvoid,
            },
            4 => Method::Gzip {
                strip_framing: flags & 1 == 1,
            },
            m => return Err(bad(&format!("unknown method id {m}"))),
        };
        let config = MethodConfig::new(method, token_bits, beta, model_id, params_digest)?;
        let n_examples = r.u64()? as usize;
        let mut examples = Vec::with_capacity(n_examples);
        for _ in 0..n_examples {
            let symbol_count = r.u64()?;
            let is_tail = r.u8()? & 1 == 1;
            let n_windows = r.u32()? as usize;
            let mut windows = Vec::with_capacity(n_windows);
            for _ in 0..n_windows {
                let symbol_count = r.u32()?;
                let bit_len = r.u32()? as usize;
                let bytes = r.take(bit_len.div_ceil(8))?;
                windows.push(Window {
                    bits: BitStream::from_bytes(bytes, bit_len)?,
                    symbol_count,
                });
            }
            examples.push(ExampleRecord {
                symbol_count,
                is_tail,
                windows,
            });
        }
        if r.remaining() != 0 {
            return Err(bad("trailing bytes after examples"));
        }
        Ok(Self { config, examples })
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn read_str(r: &mut ByteReader) -> Result<String> {
    let len = r.u16()? as usize;
    let bytes = r.take(len)?;
    String::from_utf8(bytes.to_vec()).map_err(|e| Error::Config(format!("bad string: {e}")))
}

/// Compress one example under the configured method.
pub fn compress_example(
    example: &Example,
    config: &MethodConfig,
    model: Option<&Model>,
) -> Result<ExampleRecord> {
    let windows = match config.method {
        Method::Ac | Method::StaticAc => {
            let model = model.ok_or_else(|| Error::Config("method requires a model".into()))?;
            let mut state = model.state();
            vec![Window {
                bits: compress_ac(example.symbols(), &mut state)?,
                symbol_count: example.len() as u32,
            }]
        }
        Method::EqualInfo {
            window_bits,
            variant,
        } => {
            let model = model.ok_or_else(|| Error::Config("method requires a model".into()))?;
            let mut state = model.state();
            compress_equal_info(example.symbols(), &mut state, window_bits, variant)?
        }
        Method::Gzip { strip_framing } => {
            let bytes = compress_gzip(example.symbols(), strip_framing)?;
            vec![Window {
                bits: BitStream::from_whole_bytes(&bytes),
                symbol_count: example.len() as u32,
            }]
        }
    };
    Ok(ExampleRecord {
        symbol_count: example.len() as u64,
        is_tail: example.is_tail(),
        windows,
    })
}

/// Decompress one example record back into symbols.
pub fn decompress_example(
    record: &ExampleRecord,
    config: &MethodConfig,
    model: Option<&Model>,
) -> Result<Vec<u16>> {
    let symbols = match config.method {
        Method::Ac | Method::StaticAc => {
            let model = model.ok_or_else(|| Error::Config("method requires a model".into()))?;
            let mut state = model.state();
            decompress_ac(
                &record.windows[0].bits,
                &mut state,
                record.symbol_count as usize,
            )?
        }
        Method::EqualInfo {
            window_bits,
            variant,
        } => {
            let model = model.ok_or_else(|| Error::Config("method requires a model".into()))?;
            let mut state = model.state();
            decompress_equal_info(
                &record.windows,
                &mut state,
                window_bits,
                variant,
                Some(record.symbol_count),
            )?
        }
        Method::Gzip { strip_framing } => {
            let symbols = decompress_gzip(record.windows[0].bits.as_bytes(), strip_framing)?;
            if symbols.len() as u64 != record.symbol_count {
                return Err(Error::Config(format!(
                    "gzip payload decoded to {} symbols, expected {}",
                    symbols.len(),
                    record.symbol_count
                )));
            }
            symbols
        }
    };
    Ok(symbols)
}

/// Compress a corpus of examples with a worker pool. Output order follows
/// example index regardless of completion order, so any job count produces
/// identical bytes.
pub fn compress_corpus(
    examples: &[Example],
    config: &MethodConfig,
    model: Option<&Model>,
    jobs: usize,
) -> Result<Container> {
    if config.method.uses_model() {
        let model = model.ok_or_else(|| Error::Config("method requires a model".into()))?;
        if model.params_digest() != config.params_digest {
            return Err(Error::DigestMismatch {
                container: config.params_digest.clone(),
                model: model.params_digest().to_string(),
            });
        }
    }
    let records: Result<Vec<ExampleRecord>> = if jobs == 1 {
        examples
            .iter()
            .map(|e| compress_example(e, config, model))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            examples
                .par_iter()
                .map(|e| compress_example(e, config, model))
                .collect()
        })
    };
    Ok(Container {
        config: config.clone(),
        examples: records?,
    })
}

/// Decompress a container back into the original symbol stream, verifying
/// the model digest first.
pub fn decompress_corpus(
    container: &Container,
    model: Option<&Model>,
    jobs: usize,
) -> Result<Vec<u16>> {
    if container.config.method.uses_model() {
        let model = model.ok_or_else(|| Error::Config("method requires a model".into()))?;
        if model.params_digest() != container.config.params_digest {
            return Err(Error::DigestMismatch {
                container: container.config.params_digest.clone(),
                model: model.params_digest().to_string(),
            });
        }
    }
    let decoded: Result<Vec<Vec<u16>>> = if jobs == 1 {
        container
            .examples
            .iter()
            .map(|r| decompress_example(r, &container.config, model))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            container
                .examples
                .par_iter()
                .map(|r| decompress_example(r, &container.config, model))
                .collect()
        })
    };
    Ok(decoded?.into_iter().flatten().collect())
}
