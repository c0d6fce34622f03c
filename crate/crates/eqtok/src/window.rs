//! Symbol-stream ↔ bitstream codecs: whole-example arithmetic coding,
//! equal-info windows in both padding variants, and the DEFLATE baseline.
//!
//! An equal-info window is a fixed budget of `W` output bits. The encoder
//! extends a symbol run while its self-contained encoding still fits, then
//! emits the run zero-padded to exactly `W` bits and resets both the coder
//! and the model context, so every window decodes independently.
//!
//! Padding makes the window ↔ symbol-count mapping ambiguous when a final
//! symbol compresses to nothing but zeros. The two variants resolve it in
//! opposite directions: `MaxFill` packs the most symbols per window and the
//! decoder picks the *largest* symbol count whose padded encoding equals the
//! window bits; `ZeroAvoid` defers such symbols to the next window so the
//! decoder can stop at the *smallest* matching count.
//!
//! Count recovery by re-encoding is exact for `ZeroAvoid`. For `MaxFill` it
//! can alias: a symbol the encoder never saw (it belongs to the next window)
//! may extend a window's decode while leaving the padded bits unchanged, and
//! the largest-count rule then overshoots. Windows therefore carry their
//! symbol counts ([`Window::symbol_count`], persisted by the container) and
//! the candidate search doubles as an integrity check; count-free recovery
//! stays available for `ZeroAvoid` and for `MaxFill` streams that never hit
//! the aliasing case.

use flate2::read::{DeflateDecoder, ZlibDecoder};
use flate2::write::ZlibEncoder;
use flate2::Compression;
use std::io::{Read, Write};

use crate::bits::BitStream;
use crate::coder::{decode, encode, CdfSource, Decoder};
use crate::error::{Error, Result};
use crate::model::{DEFAULT_BETA, EOS};

/// Zlib stream framing: 2-byte header plus 4-byte Adler-32 trailer.
pub const ZLIB_FRAMING_BYTES: usize = 6;

/// End-of-window padding behavior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Pack the most symbols possible into each window.
    MaxFill,
    /// Never let a symbol's inclusion leave the padded bits unchanged.
    ZeroAvoid,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::MaxFill => "maxfill",
            Variant::ZeroAvoid => "zeroavoid",
        }
    }
}

/// Compression method selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// One arithmetic-coding pass over the whole example.
    Ac,
    /// Same coder driven by the static byte unigram model.
    StaticAc,
    /// Independent fixed-size windows.
    EqualInfo { window_bits: u32, variant: Variant },
    /// DEFLATE over the raw bytes.
    Gzip { strip_framing: bool },
}

impl Method {
    pub fn id(&self) -> u8 {
        match self {
            Method::Ac => 0,
            Method::StaticAc => 1,
            Method::EqualInfo {
                variant: Variant::MaxFill,
                ..
            } => 2,
            Method::EqualInfo {
                variant: Variant::ZeroAvoid,
                ..
            } => 3,
            Method::Gzip { .. } => 4,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Method::Ac => "ac".into(),
            Method::StaticAc => "static-ac".into(),
            Method::EqualInfo {
                window_bits,
                variant,
            } => format!("eqinfo[{window_bits},{}]", variant.as_str()),
            Method::Gzip { strip_framing } => {
                if *strip_framing {
                    "gzip[stripped]".into()
                } else {
                    "gzip".into()
                }
            }
        }
    }

    pub fn uses_model(&self) -> bool {
        !matches!(self, Method::Gzip { .. })
    }
}

/// Validated per-run configuration shared by the container and token files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodConfig {
    pub method: Method,
    pub token_bits: u8,
    pub beta: u8,
    pub model_id: String,
    pub params_digest: String,
}

impl MethodConfig {
    pub fn new(
        method: Method,
        token_bits: u8,
        beta: u8,
        model_id: String,
        params_digest: String,
    ) -> Result<Self> {
        if token_bits == 0 || token_bits > 16 {
            return Err(Error::Config(format!(
                "token bit depth {token_bits} out of range 1..=16"
            )));
        }
        if !(8..=24).contains(&beta) {
            return Err(Error::Config(format!(
                "precision {beta} out of range 8..=24"
            )));
        }
        if let Method::EqualInfo { window_bits, .. } = method {
            if window_bits == 0 {
                return Err(Error::Config("window bits must be positive".into()));
            }
            if window_bits % token_bits as u32 != 0 {
                return Err(Error::Config(format!(
                    "window bits {window_bits} is not a multiple of token bits {token_bits}"
                )));
            }
        }
        Ok(Self {
            method,
            token_bits,
            beta,
            model_id,
            params_digest,
        })
    }
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            method: Method::Ac,
            token_bits: 8,
            beta: DEFAULT_BETA,
            model_id: String::new(),
            params_digest: String::new(),
        }
    }
}

/// One equal-info unit: exactly `W` bits and the number of source symbols
/// they encode. `symbol_count` is zero for windows rehydrated from a
/// container, which stores only per-example totals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub bits: BitStream,
    pub symbol_count: u32,
}

/// Whole-example arithmetic coding. The model starts from a fresh context
/// and is never reset mid-example.
pub fn compress_ac<S: CdfSource>(symbols: &[u16], source: &mut S) -> Result<BitStream> {
    encode(symbols, source)
}

/// Inverse of [`compress_ac`], given the symbol count.
pub fn decompress_ac<S: CdfSource>(
    bits: &BitStream,
    source: &mut S,
    num_symbols: usize,
) -> Result<Vec<u16>> {
    decode(bits, source, num_symbols)
}

/// All prefix decodes of a window's bits that reproduce those bits when
/// re-encoded and zero-padded. Returns (symbol count, symbols) candidates in
/// increasing count order.
fn window_candidates<S: CdfSource>(
    bits: &BitStream,
    source: &mut S,
    window_bits: u32,
    stop_at_first: bool,
) -> Result<Vec<(u32, Vec<u16>)>> {
    let beta = {
        source.reset();
        source.next_cdf()?.beta()
    };
    source.reset();
    let mut decoder = Decoder::new(bits, beta, false);
    let mut prefix: Vec<u16> = Vec::new();
    let mut candidates = Vec::new();
    loop {
        let cdf = source.next_cdf()?;
        let sym = decoder.decode_symbol(&cdf)?;
        source.observe(sym)?;
        prefix.push(sym);

        // Re-encode the prefix and compare. encode() leaves the source
        // context advanced through the prefix, ready for the next decode.
        let reencoded = encode(&prefix, source)?;
        if reencoded.len() <= window_bits as usize {
            if reencoded.padded_to(window_bits as usize)? == *bits {
                candidates.push((prefix.len() as u32, prefix.clone()));
                if stop_at_first {
                    break;
                }
            }
        } else {
            // The completed encoding overflows. Extensions may still fit
            // when the overflow came from termination bits, so bound on
            // locked bits, which only grow with prefix length. Every symbol
            // strictly shrinks the interval (widths are capped below the
            // full mass), so this bound is always reached.
            let locked = locked_bits_len(&prefix, source)?;
            if locked > window_bits as usize {
                break;
            }
        }
    }
    Ok(candidates)
}

/// Length of the locked (pre-termination) bitstream for a symbol run.
fn locked_bits_len<S: CdfSource>(symbols: &[u16], source: &mut S) -> Result<usize> {
    source.reset();
    let mut enc: Option<crate::coder::Encoder> = None;
    for &sym in symbols {
        let cdf = source.next_cdf()?;
        let e = enc.get_or_insert_with(|| crate::coder::Encoder::new(cdf.beta()));
        e.encode_symbol(&cdf, sym)?;
        source.observe(sym)?;
    }
    Ok(enc.map(|e| e.locked_len()).unwrap_or(0))
}

/// Compress a symbol stream into equal-info windows.
pub fn compress_equal_info<S: CdfSource>(
    symbols: &[u16],
    source: &mut S,
    window_bits: u32,
    variant: Variant,
) -> Result<Vec<Window>> {
    let mut windows = Vec::new();
    let mut pos = 0usize;
    while pos < symbols.len() {
        // Grow the run while its self-contained encoding fits.
        let mut run_len = 0usize;
        let mut run_bits = BitStream::new();
        loop {
            if pos + run_len == symbols.len() {
                break;
            }
            let cand = encode(&symbols[pos..pos + run_len + 1], source)?;
            if cand.len() <= window_bits as usize {
                run_len += 1;
                run_bits = cand;
            } else {
                if run_len == 0 {
                    return Err(Error::WindowTooSmall {
                        offset: pos,
                        needed: cand.len(),
                        window_bits,
                    });
                }
                break;
            }
        }
        debug_assert!(run_len > 0);
        let padded = run_bits.padded_to(window_bits as usize)?;

        let emit_len = match variant {
            Variant::MaxFill => run_len,
            Variant::ZeroAvoid => {
                // Emit the smallest prefix that reproduces the padded bits;
                // deferred symbols open the next window. The run itself
                // always matches, so a candidate exists.
                let cands = window_candidates(&padded, source, window_bits, true)?;
                match cands.first() {
                    Some(&(n, _)) if n as usize <= run_len => n as usize,
                    _ => return Err(Error::AmbiguousWindow { offset: pos }),
                }
            }
        };

        let bits = if emit_len == run_len {
            padded
        } else {
            encode(&symbols[pos..pos + emit_len], source)?.padded_to(window_bits as usize)?
        };
        windows.push(Window {
            bits,
            symbol_count: emit_len as u32,
        });
        pos += emit_len;
    }
    Ok(windows)
}

/// Decode equal-info windows back into the original symbol stream.
///
/// Every window decodes independently with a fresh model context. A window
/// with a known `symbol_count` decodes exactly that many symbols and is
/// verified by re-encoding. A window with `symbol_count == 0` recovers its
/// count by the candidate rule: smallest matching count for `ZeroAvoid`
/// (always exact), largest for `MaxFill` (the published procedure, subject
/// to the aliasing case in the module docs); for `MaxFill`'s final window,
/// `expected_symbols` — the stream total — picks the matching candidate.
pub fn decompress_equal_info<S: CdfSource>(
    windows: &[Window],
    source: &mut S,
    window_bits: u32,
    variant: Variant,
    expected_symbols: Option<u64>,
) -> Result<Vec<u16>> {
    let mut out: Vec<u16> = Vec::new();
    for (index, window) in windows.iter().enumerate() {
        if window.bits.len() != window_bits as usize {
            return Err(Error::CorruptWindow { index });
        }
        if window.symbol_count > 0 {
            // Count-directed decode, then verify the bits reproduce.
            source.reset();
            let symbols = decode(&window.bits, source, window.symbol_count as usize)
                .map_err(|_| Error::CorruptWindow { index })?;
            let reencoded = encode(&symbols, source)?;
            if reencoded.len() > window_bits as usize
                || reencoded.padded_to(window_bits as usize)? != window.bits
            {
                return Err(Error::CorruptWindow { index });
            }
            out.extend_from_slice(&symbols);
            continue;
        }
        let last = index + 1 == windows.len();
        let stop_at_first = matches!(variant, Variant::ZeroAvoid);
        let candidates = window_candidates(&window.bits, source, window_bits, stop_at_first)?;
        let chosen = match variant {
            Variant::ZeroAvoid => candidates.first(),
            Variant::MaxFill => {
                if last {
                    if let Some(total) = expected_symbols {
                        let want = total.saturating_sub(out.len() as u64) as u32;
                        candidates.iter().find(|(n, _)| *n == want)
                    } else {
                        candidates.last()
                    }
                } else {
                    candidates.last()
                }
            }
        };
        let Some((_, symbols)) = chosen else {
            return Err(Error::CorruptWindow { index });
        };
        out.extend_from_slice(symbols);
    }
    if let Some(total) = expected_symbols {
        if out.len() as u64 != total {
            return Err(Error::CorruptWindow {
                index: windows.len().saturating_sub(1),
            });
        }
    }
    Ok(out)
}

/// Escape EOS markers so a 257-symbol stream fits through a byte codec:
/// EOS becomes `FF 01`, a literal `0xFF` becomes `FF FF`.
pub fn escape_eos(symbols: &[u16]) -> Vec<u8> {
    let mut out = Vec::with_capacity(symbols.len() + 8);
    for &s in symbols {
        if s == EOS {
            out.push(0xFF);
            out.push(0x01);
        } else if s == 0xFF {
            out.push(0xFF);
            out.push(0xFF);
        } else {
            out.push(s as u8);
        }
    }
    out
}

pub fn unescape_eos(bytes: &[u8]) -> Result<Vec<u16>> {
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == 0xFF {
            match bytes.get(i + 1) {
                Some(0x01) => out.push(EOS),
                Some(0xFF) => out.push(0xFF),
                other => {
                    return Err(Error::Config(format!(
                        "bad escape sequence FF {other:02X?}"
                    )))
                }
            }
            i += 2;
        } else {
            out.push(bytes[i] as u16);
            i += 1;
        }
    }
    Ok(out)
}

/// DEFLATE-compress an example's bytes at the default level inside zlib
/// framing; `strip_framing` removes the 2-byte header and 4-byte checksum.
pub fn compress_gzip(symbols: &[u16], strip_framing: bool) -> Result<Vec<u8>> {
    let payload = escape_eos(symbols);
    let mut encoder = ZlibEncoder::new(Vec::new(), Compression::default());
    encoder
        .write_all(&payload)
        .and_then(|_| encoder.finish())
        .map_err(|e| Error::Config(format!("deflate failed: {e}")))
        .map(|framed| {
            if strip_framing {
                framed[2..framed.len() - 4].to_vec()
            } else {
                framed
            }
        })
}

pub fn decompress_gzip(data: &[u8], strip_framing: bool) -> Result<Vec<u16>> {
    let mut payload = Vec::new();
    let res = if strip_framing {
        DeflateDecoder::new(data).read_to_end(&mut payload)
    } else {
        ZlibDecoder::new(data).read_to_end(&mut payload)
    };
    res.map_err(|e| Error::Config(format!("inflate failed: {e}")))?;
    unescape_eos(&payload)
}
