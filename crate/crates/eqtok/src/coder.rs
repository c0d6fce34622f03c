//! Finite-precision arithmetic (range) coder.
//!
//! The coder walks a nested-interval construction over quantized CDFs using
//! `beta + 2`-bit integer registers. Bits are emitted on the fly: whenever
//! the interval falls entirely into one half of the register range, the
//! deciding bit is locked in and the interval is rescaled. Straddles of the
//! middle quarter are handled with a pending-bit counter (classic carry
//! handling), so emitted bits never change as more symbols arrive.
//!
//! Termination appends the minimal disambiguating suffix: nothing when the
//! final interval already spans the whole register range, otherwise one or
//! two suffix bits plus any pending bits. The total stream length stays
//! within two bits of the ideal `-log2 p(x)` for the quantized model.

use std::rc::Rc;

use crate::bits::BitStream;
use crate::error::{Error, Result};
use crate::model::{ModelState, QuantizedCdf};

/// A source of per-symbol quantized CDFs. Implemented by [`ModelState`] and
/// by fixed test distributions.
pub trait CdfSource {
    fn next_cdf(&mut self) -> Result<Rc<QuantizedCdf>>;
    fn observe(&mut self, symbol: u16) -> Result<()>;
    fn reset(&mut self);
}

impl CdfSource for ModelState<'_> {
    fn next_cdf(&mut self) -> Result<Rc<QuantizedCdf>> {
        ModelState::next_cdf(self)
    }

    fn observe(&mut self, symbol: u16) -> Result<()> {
        ModelState::observe(self, symbol)
    }

    fn reset(&mut self) {
        ModelState::reset(self)
    }
}

/// A context-free CDF repeated for every position; test helper and building
/// block for custom sources.
pub struct FixedCdf {
    cdf: Rc<QuantizedCdf>,
}

impl FixedCdf {
    pub fn new(cdf: QuantizedCdf) -> Self {
        Self { cdf: Rc::new(cdf) }
    }
}

impl CdfSource for FixedCdf {
    fn next_cdf(&mut self) -> Result<Rc<QuantizedCdf>> {
        Ok(Rc::clone(&self.cdf))
    }

    fn observe(&mut self, _symbol: u16) -> Result<()> {
        Ok(())
    }

    fn reset(&mut self) {}
}

/// Streaming encoder state: `low` and `high` are `beta + 2`-bit registers,
/// `pending` counts unresolved middle straddles.
pub struct Encoder {
    low: u64,
    high: u64,
    pending: u64,
    beta: u8,
    out: BitStream,
}

impl Encoder {
    pub fn new(beta: u8) -> Self {
        let full = 1u64 << (beta + 2);
        Self {
            low: 0,
            high: full - 1,
            pending: 0,
            beta,
            out: BitStream::new(),
        }
    }

    fn full(&self) -> u64 {
        1 << (self.beta + 2)
    }

    fn half(&self) -> u64 {
        1 << (self.beta + 1)
    }

    fn quarter(&self) -> u64 {
        1 << self.beta
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.pending {
            self.out.push(!bit);
        }
        self.pending = 0;
    }

    pub fn encode_symbol(&mut self, cdf: &QuantizedCdf, symbol: u16) -> Result<()> {
        if symbol as usize >= cdf.alphabet() {
            return Err(Error::SymbolOutOfRange {
                symbol: symbol as u32,
                alphabet: cdf.alphabet(),
            });
        }
        debug_assert_eq!(cdf.beta(), self.beta);
        let total = cdf.total() as u64;
        let range = self.high - self.low + 1;
        let clo = cdf.low(symbol) as u64;
        let chi = cdf.high(symbol) as u64;
        self.high = self.low + range * chi / total - 1;
        self.low += range * clo / total;
        debug_assert!(self.low <= self.high);

        let half = self.half();
        let quarter = self.quarter();
        loop {
            if self.high < half {
                self.emit(false);
            } else if self.low >= half {
                self.emit(true);
                self.low -= half;
                self.high -= half;
            } else if self.low >= quarter && self.high < 3 * quarter {
                self.pending += 1;
                self.low -= quarter;
                self.high -= quarter;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
        Ok(())
    }

    /// Bits locked in so far, before termination.
    pub fn locked_len(&self) -> usize {
        self.out.len()
    }

    /// Flush the minimal suffix that pins a bit interval inside the final
    /// symbol interval.
    pub fn finish(mut self) -> BitStream {
        let full = self.full();
        let quarter = self.quarter();
        if self.pending == 0 && self.low == 0 && self.high == full - 1 {
            // The whole register range is valid: nothing to disambiguate.
        } else if self.low == 0 {
            self.emit(false);
        } else if self.high == full - 1 {
            self.emit(true);
        } else {
            self.pending += 1;
            let bit = self.low >= quarter;
            self.emit(bit);
        }
        self.out
    }
}

/// Encode a symbol sequence, advancing the model after each symbol. The
/// source is reset first, so the stream is self-contained.
pub fn encode<S: CdfSource>(symbols: &[u16], source: &mut S) -> Result<BitStream> {
    source.reset();
    let mut encoder: Option<Encoder> = None;
    for &sym in symbols {
        let cdf = source.next_cdf()?;
        let enc = encoder.get_or_insert_with(|| Encoder::new(cdf.beta()));
        enc.encode_symbol(&cdf, sym)?;
        source.observe(sym)?;
    }
    Ok(encoder.map(Encoder::finish).unwrap_or_default())
}

/// Streaming decoder over a bitstream. Reads past the end of the stream are
/// zero-filled; in strict mode more than `beta + 2` such reads mean the
/// stream was truncated, since a complete stream never requires more
/// lookahead than the register width.
pub struct Decoder<'a> {
    bits: &'a BitStream,
    pos: usize,
    past_end: usize,
    strict: bool,
    low: u64,
    high: u64,
    code: u64,
    beta: u8,
    primed: bool,
}

impl<'a> Decoder<'a> {
    pub fn new(bits: &'a BitStream, beta: u8, strict: bool) -> Self {
        let full = 1u64 << (beta + 2);
        Self {
            bits,
            pos: 0,
            past_end: 0,
            strict,
            low: 0,
            high: full - 1,
            code: 0,
            beta,
            primed: false,
        }
    }

    fn next_bit(&mut self) -> Result<u64> {
        match self.bits.get(self.pos) {
            Some(b) => {
                self.pos += 1;
                Ok(u64::from(b))
            }
            None => {
                self.past_end += 1;
                if self.strict && self.past_end > self.beta as usize + 2 {
                    Err(Error::TruncatedStream {
                        decoded: 0,
                        expected: 0,
                    })
                } else {
                    Ok(0)
                }
            }
        }
    }

    fn prime(&mut self) -> Result<()> {
        if !self.primed {
            for _ in 0..self.beta + 2 {
                self.code = self.code << 1 | self.next_bit()?;
            }
            self.primed = true;
        }
        Ok(())
    }

    pub fn decode_symbol(&mut self, cdf: &QuantizedCdf) -> Result<u16> {
        self.prime()?;
        debug_assert_eq!(cdf.beta(), self.beta);
        let total = cdf.total() as u64;
        let range = self.high - self.low + 1;
        let target = ((self.code - self.low + 1) * total - 1) / range;
        let symbol = cdf.symbol_for(target as u32);
        let clo = cdf.low(symbol) as u64;
        let chi = cdf.high(symbol) as u64;
        self.high = self.low + range * chi / total - 1;
        self.low += range * clo / total;

        let half = 1u64 << (self.beta + 1);
        let quarter = 1u64 << self.beta;
        loop {
            if self.high < half {
                // nothing
            } else if self.low >= half {
                self.low -= half;
                self.high -= half;
                self.code -= half;
            } else if self.low >= quarter && self.high < 3 * quarter {
                self.low -= quarter;
                self.high -= quarter;
                self.code -= quarter;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.code = self.code << 1 | self.next_bit()?;
        }
        Ok(symbol)
    }
}

/// Decode exactly `num_symbols` symbols. The model must start from the same
/// state used for encoding; end-of-message is the caller's concern.
pub fn decode<S: CdfSource>(
    bits: &BitStream,
    source: &mut S,
    num_symbols: usize,
) -> Result<Vec<u16>> {
    source.reset();
    let mut out = Vec::with_capacity(num_symbols);
    let mut decoder: Option<Decoder> = None;
    for i in 0..num_symbols {
        let cdf = source.next_cdf()?;
        if decoder.is_none() {
            decoder = Some(Decoder::new(bits, cdf.beta(), true));
        }
        let dec = decoder.as_mut().unwrap();
        let sym = dec.decode_symbol(&cdf).map_err(|e| match e {
            Error::TruncatedStream { .. } => Error::TruncatedStream {
                decoded: i,
                expected: num_symbols,
            },
            other => other,
        })?;
        source.observe(sym)?;
        out.push(sym);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Model, QuantizedCdf};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dyadic_identity() {
        let model = Model::dyadic_bytes(14).unwrap();
        let bytes: Vec<u16> = b"hello, arithmetic coding"
            .iter()
            .map(|&b| b as u16)
            .collect();
        let mut state = model.state();
        let bits = encode(&bytes, &mut state).unwrap();
        assert_eq!(bits.len(), bytes.len() * 8);
        for (i, &sym) in bytes.iter().enumerate() {
            assert_eq!(bits.read_bits(i * 8, 8), sym as u64);
        }
        let decoded = decode(&bits, &mut state, bytes.len()).unwrap();
        assert_eq!(decoded, bytes);
    }

    #[test]
    fn empty_input_is_empty_stream() {
        let model = Model::uniform(257, 14).unwrap();
        let mut state = model.state();
        let bits = encode(&[], &mut state).unwrap();
        assert!(bits.is_empty());
        let decoded = decode(&bits, &mut state, 0).unwrap();
        assert!(decoded.is_empty());
    }

    #[test]
    fn roundtrip_random_sequences() {
        let model = Model::uniform(257, 14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let len = rng.random_range(1..=512);
            let symbols: Vec<u16> = (0..len).map(|_| rng.random_range(0..257)).collect();
            let mut state = model.state();
            let bits = encode(&symbols, &mut state).unwrap();
            let decoded = decode(&bits, &mut state, symbols.len()).unwrap();
            assert_eq!(decoded, symbols);
        }
    }

    #[test]
    fn roundtrip_skewed_fixed_cdf() {
        let cdf = QuantizedCdf::from_weights(&[50, 30, 15, 5], 14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let len = rng.random_range(1..=64);
            let symbols: Vec<u16> = (0..len)
                .map(|_| {
                    let r: f64 = rng.random();
                    if r < 0.5 {
                        0
                    } else if r < 0.8 {
                        1
                    } else if r < 0.95 {
                        2
                    } else {
                        3
                    }
                })
                .collect();
            let mut source = FixedCdf::new(cdf.clone());
            let bits = encode(&symbols, &mut source).unwrap();
            let decoded = decode(&bits, &mut source, symbols.len()).unwrap();
            assert_eq!(decoded, symbols);
        }
    }

    #[test]
    fn truncated_stream_is_detected() {
        let model = Model::uniform(257, 14).unwrap();
        let mut state = model.state();
        let symbols: Vec<u16> = (0..100).map(|i| (i * 31 % 257) as u16).collect();
        let bits = encode(&symbols, &mut state).unwrap();
        // Chop off half the stream: the decoder must error, not fabricate.
        let truncated: BitStream = bits.iter().take(bits.len() / 2).collect();
        let err = decode(&truncated, &mut state, symbols.len()).unwrap_err();
        assert!(matches!(err, Error::TruncatedStream { .. }));
    }

    #[test]
    fn prefix_bits_never_change() {
        // Lock-in property: encoding a longer sequence only appends to the
        // locked bits of the shorter prefix.
        let model = Model::uniform(257, 14).unwrap();
        let symbols: Vec<u16> = (0..64).map(|i| (i * 13 % 257) as u16).collect();
        let mut locked_prefix: Vec<bool> = Vec::new();
        let mut state = model.state();
        state.reset();
        let mut enc = Encoder::new(14);
        for &sym in &symbols {
            let cdf = CdfSource::next_cdf(&mut state).unwrap();
            enc.encode_symbol(&cdf, sym).unwrap();
            CdfSource::observe(&mut state, sym).unwrap();
            let now: Vec<bool> = (0..enc.locked_len())
                .map(|i| enc.out.get(i).unwrap())
                .collect();
            assert!(now.len() >= locked_prefix.len());
            assert_eq!(&now[..locked_prefix.len()], &locked_prefix[..]);
            locked_prefix = now;
        }
    }

    #[test]
    fn symbol_out_of_alphabet_is_domain_error() {
        let cdf = QuantizedCdf::from_weights(&[1, 1, 1, 1], 14).unwrap();
        let mut enc = Encoder::new(14);
        assert!(matches!(
            enc.encode_symbol(&cdf, 4),
            Err(Error::SymbolOutOfRange { .. })
        ));
    }

    #[test]
    fn mismatched_model_fails_to_reproduce() {
        // Two unigram models whose tables differ in a single count decode
        // each other's streams into different symbols.
        let a = Model::fit_unigram(
            &[crate::corpus::Example::new(
                b"abcabcabchello".iter().map(|&b| b as u16).collect(),
                0,
                false,
            )],
            14,
        )
        .unwrap();
        let b = Model::fit_unigram(
            &[crate::corpus::Example::new(
                b"abcabcabchelloo".iter().map(|&b| b as u16).collect(),
                0,
                false,
            )],
            14,
        )
        .unwrap();
        assert_ne!(a.params_digest(), b.params_digest());
        let symbols: Vec<u16> = b"the same message".iter().map(|&x| x as u16).collect();
        let bits = encode(&symbols, &mut a.state()).unwrap();
        let decoded = decode(&bits, &mut b.state(), symbols.len()).unwrap();
        assert_ne!(decoded, symbols);
    }
}
