//! Bitstream tokenization: chunk compressed bits into N-bit tokens and back.
//!
//! Chunking is MSB-first and exact: `tokens.len() * N` always equals the
//! source bit length. Streams that are not already N-aligned (whole-example
//! arithmetic coding output) are zero-padded before tokenization, with the
//! true bit length recorded next to the tokens so the padding is
//! reversible.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::bits::BitStream;
use crate::container::{Container, ExampleRecord};
use crate::error::{Error, Result};
use crate::model::ByteReader;
use crate::window::{Method, MethodConfig, Variant, Window};

const EQIT_MAGIC: &[u8; 4] = b"EQIT";
const EQIT_VERSION: u32 = 1;

/// N-bit token ids over a vocabulary of `2^N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<u16>,
    bit_depth: u8,
}

impl TokenSequence {
    pub fn new(tokens: Vec<u16>, bit_depth: u8) -> Result<Self> {
        if bit_depth == 0 || bit_depth > 16 {
            return Err(Error::Config(format!(
                "token bit depth {bit_depth} out of range 1..=16"
            )));
        }
        if bit_depth < 16 {
            let limit = 1u32 << bit_depth;
            if let Some(&t) = tokens.iter().find(|&&t| (t as u32) >= limit) {
                return Err(Error::TokenOutOfRange {
                    token: t as u32,
                    token_bits: bit_depth,
                });
            }
        }
        Ok(Self { tokens, bit_depth })
    }

    pub fn tokens(&self) -> &[u16] {
        &self.tokens
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn vocab_size(&self) -> u32 {
        1 << self.bit_depth
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Group every `bit_depth` bits into one token, most significant bit first.
pub fn tokenize(bits: &BitStream, bit_depth: u8) -> Result<TokenSequence> {
    if bit_depth == 0 || bit_depth > 16 {
        return Err(Error::Config(format!(
            "token bit depth {bit_depth} out of range 1..=16"
        )));
    }
    if !bits.len().is_multiple_of(bit_depth as usize) {
        return Err(Error::MisalignedStream {
            bits: bits.len(),
            token_bits: bit_depth,
        });
    }
    let n = bits.len() / bit_depth as usize;
    let mut tokens = Vec::with_capacity(n);
    for i in 0..n {
        tokens.push(bits.read_bits(i * bit_depth as usize, bit_depth) as u16);
    }
    TokenSequence::new(tokens, bit_depth)
}

/// Exact inverse of [`tokenize`].
pub fn detokenize(tokens: &TokenSequence) -> BitStream {
    let mut bits = BitStream::with_capacity(tokens.len() * tokens.bit_depth() as usize);
    for &t in tokens.tokens() {
        bits.push_bits(t as u64, tokens.bit_depth());
    }
    bits
}

/// Input tokens (byte symbols) per output token.
pub fn token_compression_ratio(input_symbols: u64, tokens: u64) -> Result<f64> {
    if tokens == 0 {
        return Err(Error::ZeroDenominator("token count"));
    }
    Ok(input_symbols as f64 / tokens as f64)
}

/// Input bits per output bit; invariant under re-chunking at any depth.
pub fn bit_compression_ratio(input_bits: u64, output_bits: u64) -> Result<f64> {
    if output_bits == 0 {
        return Err(Error::ZeroDenominator("output bits"));
    }
    Ok(input_bits as f64 / output_bits as f64)
}

/// Per-window structure preserved alongside the tokens: the symbol count
/// and the true (pre-padding) bit length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowMeta {
    pub symbol_count: u32,
    pub bit_len: u32,
}

/// One tokenized example, carrying enough structure to rebuild the
/// container exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenExample {
    pub symbol_count: u64,
    pub is_tail: bool,
    pub window_meta: Vec<WindowMeta>,
    pub tokens: TokenSequence,
}

/// The token dataset: what a downstream LM trainer consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenFile {
    pub config: MethodConfig,
    pub examples: Vec<TokenExample>,
}

impl TokenFile {
    pub fn total_tokens(&self) -> u64 {
        self.examples.iter().map(|e| e.tokens.len() as u64).sum()
    }

    pub fn total_symbols(&self) -> u64 {
        self.examples.iter().map(|e| e.symbol_count).sum()
    }

    /// All token ids across examples, in corpus order.
    pub fn flat_tokens(&self) -> Vec<u16> {
        self.examples
            .iter()
            .flat_map(|e| e.tokens.tokens().iter().copied())
            .collect()
    }
}

/// Tokenize a container. Each example's windows are concatenated and, for
/// non-windowed methods, zero-padded up to the token depth.
pub fn tokenize_container(container: &Container) -> Result<TokenFile> {
    let n = container.config.token_bits;
    if let Method::EqualInfo { window_bits, .. } = container.config.method {
        debug_assert_eq!(window_bits % n as u32, 0);
    }
    let mut examples = Vec::with_capacity(container.examples.len());
    for record in &container.examples {
        let mut bits = BitStream::new();
        let mut window_meta = Vec::with_capacity(record.windows.len());
        for w in &record.windows {
            window_meta.push(WindowMeta {
                symbol_count: w.symbol_count,
                bit_len: w.bits.len() as u32,
            });
            bits.extend(&w.bits);
        }
        bits.pad_to_multiple(n as usize);
        examples.push(TokenExample {
            symbol_count: record.symbol_count,
            is_tail: record.is_tail,
            window_meta,
            tokens: tokenize(&bits, n)?,
        });
    }
    Ok(TokenFile {
        config: container.config.clone(),
        examples,
    })
}

/// Rebuild the container from a token file, dropping the recorded padding.
pub fn detokenize_file(file: &TokenFile) -> Result<Container> {
    let mut records = Vec::with_capacity(file.examples.len());
    for example in &file.examples {
        let bits = detokenize(&example.tokens);
        let true_len: u64 = example.window_meta.iter().map(|m| m.bit_len as u64).sum();
        if (bits.len() as u64) < true_len {
            return Err(Error::Config(format!(
                "token payload holds {} bits but windows need {}",
                bits.len(),
                true_len
            )));
        }
        let mut windows = Vec::with_capacity(example.window_meta.len());
        let mut offset = 0usize;
        for meta in &example.window_meta {
            let w: BitStream = (0..meta.bit_len as usize)
                .map(|i| bits.get(offset + i).unwrap())
                .collect();
            offset += meta.bit_len as usize;
            windows.push(Window {
                bits: w,
                symbol_count: meta.symbol_count,
            });
        }
        records.push(ExampleRecord {
            symbol_count: example.symbol_count,
            is_tail: example.is_tail,
            windows,
        });
    }
    Ok(Container {
        config: file.config.clone(),
        examples: records,
    })
}

impl TokenFile {
    /// Write the token dataset. Token ids are packed little-endian, one
    /// byte each for depths up to 8, two bytes otherwise.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut body: Vec<u8> = Vec::new();
        body.extend_from_slice(EQIT_MAGIC);
        body.extend_from_slice(&EQIT_VERSION.to_le_bytes());
        body.push(self.config.token_bits);
        body.extend_from_slice(&(1u32 << self.config.token_bits).to_le_bytes());
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
        body.push(self.config.beta);
        write_str(&mut body, &self.config.model_id);
        write_str(&mut body, &self.config.params_digest);
        body.extend_from_slice(&(self.examples.len() as u64).to_le_bytes());
        let wide = self.config.token_bits > 8;
        for example in &self.examples {
            body.extend_from_slice(&example.symbol_count.to_le_bytes());
            body.push(u8::from(example.is_tail));
            body.extend_from_slice(&(example.window_meta.len() as u32).to_le_bytes());
            for meta in &example.window_meta {
                body.extend_from_slice(&meta.symbol_count.to_le_bytes());
                body.extend_from_slice(&meta.bit_len.to_le_bytes());
            }
            body.extend_from_slice(&(example.tokens.len() as u64).to_le_bytes());
            for &t in example.tokens.tokens() {
                if wide {
                    body.extend_from_slice(&t.to_le_bytes());
                } else {
                    body.push(t as u8);
                }
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
        if r.take(4)? != EQIT_MAGIC.as_slice() {
            return Err(bad("bad magic"));
        }
        if r.u32()? != EQIT_VERSION {
            return Err(bad("unsupported version"));
        }
        let token_bits = r.u8()?;
        let vocab = r.u32()?;
        if token_bits == 0 || token_bits > 16 || vocab != 1u32 << token_bits {
            return Err(bad("inconsistent vocabulary"));
        }
        let method_id = r.u8()?;
        let flags = r.u8()?;
        let window_bits = r.u32()?;
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
        let wide = token_bits > 8;
        let mut examples = Vec::with_capacity(n_examples);
        for _ in 0..n_examples {
            let symbol_count = r.u64()?;
            let is_tail = r.u8()? & 1 == 1;
            let n_windows = r.u32()? as usize;
            let mut window_meta = Vec::with_capacity(n_windows);
            for _ in 0..n_windows {
                let symbol_count = r.u32()?;
                let bit_len = r.u32()?;
                window_meta.push(WindowMeta {
                    symbol_count,
                    bit_len,
                });
            }
            let n_tokens = r.u64()? as usize;
            let mut tokens = Vec::with_capacity(n_tokens);
            for _ in 0..n_tokens {
                tokens.push(if wide { r.u16()? } else { r.u8()? as u16 });
            }
            examples.push(TokenExample {
                symbol_count,
                is_tail,
                window_meta,
                tokens: TokenSequence::new(tokens, token_bits)?,
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
