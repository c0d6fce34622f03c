//! Probability models that drive the coder.
//!
//! A model's only interface to the coder is [`QuantizedCdf`]: the next-symbol
//! cumulative distribution scaled to `2^beta` integer mass with a per-symbol
//! floor of one unit. All model inference is integer-only, so a given
//! parameter set produces bit-identical distributions on every platform and
//! in every call order.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::rc::Rc;

use sha2::{Digest, Sha256};

use crate::corpus::Example;
use crate::error::{Error, Result};

/// End-of-document marker; the 257th symbol next to the 256 byte values.
pub const EOS: u16 = 256;
/// Bytes plus EOS.
pub const BYTE_ALPHABET: usize = 257;
/// Coder precision in bits.
pub const DEFAULT_BETA: u8 = 14;

/// Fixed-point scale used when blending context orders.
const BLEND_ONE: u64 = 1 << 16;

const EQIM_MAGIC: &[u8; 4] = b"EQIM";
const EQIM_VERSION: u32 = 1;

/// A cumulative distribution quantized to `2^beta` total mass.
///
/// `bounds` has one entry per symbol plus a terminal bound: `bounds[0] == 0`,
/// `bounds[alphabet] == 2^beta`, strictly increasing, so every symbol owns an
/// interval of width at least one (probability at least `2^-beta`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedCdf {
    bounds: Vec<u32>,
    beta: u8,
}

impl QuantizedCdf {
    /// Quantize non-negative weights to `2^beta` mass.
    ///
    /// Each symbol first gets the floor of its proportional share; leftover
    /// units go to the largest fractional remainders (ties to the lower
    /// symbol id). Zero-width cells are then raised to one unit, stealing
    /// from the widest cells.
    pub fn from_weights(weights: &[u64], beta: u8) -> Result<Self> {
        let alphabet = weights.len();
        if alphabet < 2 {
            return Err(Error::InvalidWeights(format!(
                "alphabet of size {alphabet} cannot be coded"
            )));
        }
        if beta >= 31 {
            return Err(Error::InvalidWeights(format!("precision {beta} too large")));
        }
        let mass: u64 = 1 << beta;
        if (mass as usize) < alphabet {
            return Err(Error::PrecisionTooSmall { beta, alphabet });
        }
        let total: u64 = weights.iter().sum();
        if total == 0 {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }

        let mut widths = vec![0u64; alphabet];
        let mut remainders: Vec<(u64, usize)> = Vec::with_capacity(alphabet);
        let mut assigned = 0u64;
        for (i, &w) in weights.iter().enumerate() {
            let scaled = (w as u128 * mass as u128) / total as u128;
            let rem = (w as u128 * mass as u128) % total as u128;
            widths[i] = scaled as u64;
            assigned += scaled as u64;
            remainders.push((rem as u64, i));
        }
        // Largest remainder first; ties broken toward the lower symbol id.
        remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut leftover = mass - assigned;
        for &(_, i) in &remainders {
            if leftover == 0 {
                break;
            }
            widths[i] += 1;
            leftover -= 1;
        }

        // Enforce the per-symbol floor of one unit, stealing one unit at a
        // time from the currently widest cell (ties to the lower symbol id).
        let zeros: Vec<usize> = (0..alphabet).filter(|&i| widths[i] == 0).collect();
        if !zeros.is_empty() {
            let mut donors: std::collections::BinaryHeap<(u64, std::cmp::Reverse<usize>)> = widths
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 1)
                .map(|(i, &w)| (w, std::cmp::Reverse(i)))
                .collect();
            for i in zeros {
                let (w, idx) = donors.pop().expect("mass exceeds alphabet size");
                debug_assert!(w > 1);
                widths[idx.0] -= 1;
                widths[i] = 1;
                if w - 1 > 1 {
                    donors.push((w - 1, idx));
                }
            }
        }

        let mut bounds = Vec::with_capacity(alphabet + 1);
        let mut acc = 0u64;
        bounds.push(0);
        for &w in &widths {
            acc += w;
            bounds.push(acc as u32);
        }
        debug_assert_eq!(acc, mass);
        Ok(Self { bounds, beta })
    }

    pub fn alphabet(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn beta(&self) -> u8 {
        self.beta
    }

    pub fn total(&self) -> u32 {
        1 << self.beta
    }

    pub fn low(&self, symbol: u16) -> u32 {
        self.bounds[symbol as usize]
    }

    pub fn high(&self, symbol: u16) -> u32 {
        self.bounds[symbol as usize + 1]
    }

    pub fn width(&self, symbol: u16) -> u32 {
        self.high(symbol) - self.low(symbol)
    }

    pub fn bounds(&self) -> &[u32] {
        &self.bounds
    }

    /// The symbol whose interval contains `target`.
    pub fn symbol_for(&self, target: u32) -> u16 {
        debug_assert!(target < self.total());
        // partition_point: first bound strictly above target, minus one.
        let idx = self.bounds.partition_point(|&b| b <= target);
        (idx - 1) as u16
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.bounds[0] != 0 || *self.bounds.last().unwrap() != self.total() {
            return Err(Error::InvalidWeights("cdf endpoints wrong".into()));
        }
        if self.bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidWeights("cdf not strictly increasing".into()));
        }
        Ok(())
    }
}

/// What a fitted model knows.
#[derive(Clone, Debug)]
enum ModelKind {
    /// Equal weight on every symbol of the alphabet.
    Uniform { alphabet: u16 },
    /// Frequency tables for contexts of length `0..=order`, blended with
    /// fixed-point back-off weights. Order 0 is the static unigram model.
    Table(TableModel),
}

#[derive(Clone, Debug)]
struct TableModel {
    order: u8,
    /// One table per context length; keys are packed contexts.
    tables: Vec<HashMap<u64, ContextCounts>>,
}

#[derive(Clone, Debug)]
struct ContextCounts {
    total: u64,
    /// Sorted by symbol id.
    entries: Vec<(u16, u64)>,
}

/// Nine bits per symbol (ids go up to 256), plus a length tag so contexts of
/// different lengths never collide.
fn pack_context(ctx: &[u16]) -> u64 {
    let mut key = ctx.len() as u64;
    for &s in ctx {
        key = key << 9 | s as u64;
    }
    key
}

/// A frozen probability model: parameters never change after fitting.
#[derive(Clone, Debug)]
pub struct Model {
    kind: ModelKind,
    beta: u8,
    model_id: String,
    params_digest: String,
}

impl Model {
    /// Equal probability over `alphabet` symbols. With a power-of-two
    /// alphabet the quantized intervals are exactly dyadic.
    pub fn uniform(alphabet: u16, beta: u8) -> Result<Self> {
        if (1u64 << beta) < alphabet as u64 {
            return Err(Error::PrecisionTooSmall {
                beta,
                alphabet: alphabet as usize,
            });
        }
        let mut model = Self {
            kind: ModelKind::Uniform { alphabet },
            beta,
            model_id: format!("uniform{alphabet}"),
            params_digest: String::new(),
        };
        model.params_digest = model.compute_digest()?;
        Ok(model)
    }

    /// The 256-symbol uniform model: every byte maps to exactly its own
    /// eight bits under the coder, which makes it the reference point for
    /// the dyadic identity checks.
    pub fn dyadic_bytes(beta: u8) -> Result<Self> {
        Self::uniform(256, beta)
    }

    /// Static byte unigram model: raw per-symbol counts; smoothing comes
    /// from the quantizer's one-unit floor.
    pub fn fit_unigram(corpus: &[Example], beta: u8) -> Result<Self> {
        Self::fit_context_model(corpus, 0, beta)
    }

    /// Order-`k` context model over the 257-symbol alphabet. Frequency
    /// tables are kept for every context length up to `k` and blended
    /// longest-first with fixed weights, so unseen contexts fall back to
    /// shorter ones and ultimately to the unigram table.
    pub fn fit_context_model(corpus: &[Example], order: u8, beta: u8) -> Result<Self> {
        if order > 4 {
            return Err(Error::Config(format!(
                "context order {order} out of range 0..=4"
            )));
        }
        if corpus.is_empty() || corpus.iter().all(|e| e.symbols().is_empty()) {
            return Err(Error::EmptyCorpus);
        }
        let mut builders: Vec<HashMap<u64, HashMap<u16, u64>>> =
            (0..=order).map(|_| HashMap::new()).collect();
        for example in corpus {
            let symbols = example.symbols();
            for i in 0..symbols.len() {
                let sym = symbols[i];
                if sym as usize >= BYTE_ALPHABET {
                    return Err(Error::SymbolOutOfRange {
                        symbol: sym as u32,
                        alphabet: BYTE_ALPHABET,
                    });
                }
                for j in 0..=order as usize {
                    if i < j {
                        break;
                    }
                    let key = pack_context(&symbols[i - j..i]);
                    *builders[j].entry(key).or_default().entry(sym).or_insert(0) += 1;
                }
            }
        }
        let tables = builders
            .into_iter()
            .map(|b| {
                b.into_iter()
                    .map(|(key, counts)| {
                        let mut entries: Vec<(u16, u64)> = counts.into_iter().collect();
                        entries.sort_unstable_by_key(|e| e.0);
                        let total = entries.iter().map(|e| e.1).sum();
                        (key, ContextCounts { total, entries })
                    })
                    .collect()
            })
            .collect();
        let model_id = if order == 0 {
            "unigram".to_string()
        } else {
            format!("context{order}")
        };
        let mut model = Self {
            kind: ModelKind::Table(TableModel { order, tables }),
            beta,
            model_id,
            params_digest: String::new(),
        };
        model.params_digest = model.compute_digest()?;
        Ok(model)
    }

    pub fn beta(&self) -> u8 {
        self.beta
    }

    pub fn alphabet(&self) -> usize {
        match &self.kind {
            ModelKind::Uniform { alphabet } => *alphabet as usize,
            ModelKind::Table(_) => BYTE_ALPHABET,
        }
    }

    /// Context length the model actually conditions on.
    pub fn order(&self) -> u8 {
        match &self.kind {
            ModelKind::Uniform { .. } => 0,
            ModelKind::Table(t) => t.order,
        }
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Content hash of the serialized parameters.
    pub fn params_digest(&self) -> &str {
        &self.params_digest
    }

    pub fn state(&self) -> ModelState<'_> {
        ModelState::new(self)
    }

    /// The quantized next-symbol distribution for an explicit context. Pure
    /// in (parameters, context).
    pub fn cdf(&self, ctx: &[u16]) -> Result<QuantizedCdf> {
        match &self.kind {
            ModelKind::Uniform { alphabet } => {
                let weights = vec![1u64; *alphabet as usize];
                QuantizedCdf::from_weights(&weights, self.beta)
            }
            ModelKind::Table(table) => {
                let weights = table.blended_weights(ctx);
                QuantizedCdf::from_weights(&weights, self.beta)
            }
        }
    }

    /// Raw unigram counts (order-0 table), exposed for entropy checks.
    pub fn unigram_counts(&self) -> Option<Vec<u64>> {
        match &self.kind {
            ModelKind::Uniform { .. } => None,
            ModelKind::Table(t) => {
                let mut counts = vec![0u64; BYTE_ALPHABET];
                if let Some(cc) = t.tables[0].get(&pack_context(&[])) {
                    for &(s, c) in &cc.entries {
                        counts[s as usize] = c;
                    }
                }
                Some(counts)
            }
        }
    }

    fn compute_digest(&self) -> Result<String> {
        let mut body = Vec::new();
        self.write_body(&mut body)
            .map_err(|e| Error::Config(format!("digest serialization failed: {e}")))?;
        Ok(hex(&Sha256::digest(&body)))
    }

    fn write_body<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(EQIM_MAGIC)?;
        w.write_all(&EQIM_VERSION.to_le_bytes())?;
        match &self.kind {
            ModelKind::Uniform { alphabet } => {
                w.write_all(&[0u8, self.beta])?;
                w.write_all(&alphabet.to_le_bytes())?;
                w.write_all(&[0u8])?; // order
            }
            ModelKind::Table(t) => {
                w.write_all(&[1u8, self.beta])?;
                w.write_all(&(BYTE_ALPHABET as u16).to_le_bytes())?;
                w.write_all(&[t.order])?;
                for table in &t.tables {
                    let mut keys: Vec<&u64> = table.keys().collect();
                    keys.sort_unstable();
                    w.write_all(&(keys.len() as u64).to_le_bytes())?;
                    for key in keys {
                        let cc = &table[key];
                        w.write_all(&key.to_le_bytes())?;
                        w.write_all(&(cc.entries.len() as u32).to_le_bytes())?;
                        for &(s, c) in &cc.entries {
                            w.write_all(&s.to_le_bytes())?;
                            w.write_all(&c.to_le_bytes())?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Write the versioned parameter file; the trailing 32 bytes are the
    /// SHA-256 of the body, which is also the params digest.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut body = Vec::new();
        self.write_body(&mut body)
            .map_err(|e| Error::Config(format!("serialize failed: {e}")))?;
        let digest = Sha256::digest(&body);
        let mut file = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        file.write_all(&body)
            .and_then(|_| file.write_all(&digest))
            .map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let bad = |reason: &str| Error::BadFormat {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        if data.len() < 32 + 4 {
            return Err(bad("file too short"));
        }
        let (body, stored_digest) = data.split_at(data.len() - 32);
        if Sha256::digest(body).as_slice() != stored_digest {
            return Err(Error::ChecksumMismatch {
                path: path.to_path_buf(),
            });
        }
        let mut r = ByteReader::new(body);
        if r.take(4)? != EQIM_MAGIC.as_slice() {
            return Err(bad("bad magic"));
        }
        if r.u32()? != EQIM_VERSION {
            return Err(bad("unsupported version"));
        }
        let kind_tag = r.u8()?;
        let beta = r.u8()?;
        let alphabet = r.u16()?;
        let order = r.u8()?;
        let kind = match kind_tag {
            0 => ModelKind::Uniform { alphabet },
            1 => {
                if alphabet as usize != BYTE_ALPHABET {
                    return Err(bad("table model must use the byte alphabet"));
                }
                let mut tables = Vec::with_capacity(order as usize + 1);
                for _ in 0..=order {
                    let n = r.u64()? as usize;
                    let mut table = HashMap::with_capacity(n);
                    for _ in 0..n {
                        let key = r.u64()?;
                        let n_entries = r.u32()? as usize;
                        let mut entries = Vec::with_capacity(n_entries);
                        for _ in 0..n_entries {
                            let s = r.u16()?;
                            let c = r.u64()?;
                            if s as usize >= BYTE_ALPHABET {
                                return Err(bad("symbol id out of range"));
                            }
                            entries.push((s, c));
                        }
                        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
                            return Err(bad("table entries not sorted by symbol"));
                        }
                        let total = entries.iter().map(|e| e.1).sum();
                        table.insert(key, ContextCounts { total, entries });
                    }
                    tables.push(table);
                }
                let base = tables[0].get(&pack_context(&[]));
                if base.is_none_or(|cc| cc.total == 0) {
                    return Err(bad("order-0 table lacks the empty context"));
                }
                ModelKind::Table(TableModel { order, tables })
            }
            t => return Err(bad(&format!("unknown model kind {t}"))),
        };
        let model_id = match &kind {
            ModelKind::Uniform { alphabet } => format!("uniform{alphabet}"),
            ModelKind::Table(t) if t.order == 0 => "unigram".to_string(),
            ModelKind::Table(t) => format!("context{}", t.order),
        };
        Ok(Self {
            kind,
            beta,
            model_id,
            params_digest: hex(stored_digest),
        })
    }
}

impl TableModel {
    /// Blend counts from order 0 up to `order`, longest context last. Each
    /// step keeps 3/4 of the current order's mass and 1/4 of the blend so
    /// far; a context with no observations passes the blend through.
    fn blended_weights(&self, ctx: &[u16]) -> Vec<u64> {
        let empty = pack_context(&[]);
        let base = self.tables[0]
            .get(&empty)
            .expect("order-0 table always has the empty context");
        let mut blend = vec![0u64; BYTE_ALPHABET];
        for &(s, c) in &base.entries {
            blend[s as usize] = c * BLEND_ONE / base.total;
        }
        for j in 1..=self.order as usize {
            if ctx.len() < j {
                break;
            }
            let key = pack_context(&ctx[ctx.len() - j..]);
            let Some(cc) = self.tables[j].get(&key) else {
                continue;
            };
            if cc.total == 0 {
                continue;
            }
            for w in blend.iter_mut() {
                *w /= 4;
            }
            for &(s, c) in &cc.entries {
                blend[s as usize] += 3 * (c * BLEND_ONE / cc.total) / 4;
            }
        }
        blend
    }
}

/// Per-stream model state: the bounded context plus a cache of quantized
/// distributions keyed by context content. The cache never affects results,
/// only the cost of recomputing a blend.
pub struct ModelState<'m> {
    model: &'m Model,
    ctx: Vec<u16>,
    cache: HashMap<u64, Rc<QuantizedCdf>>,
}

impl<'m> ModelState<'m> {
    pub fn new(model: &'m Model) -> Self {
        Self {
            model,
            ctx: Vec::with_capacity(model.order() as usize),
            cache: HashMap::new(),
        }
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn context(&self) -> &[u16] {
        &self.ctx
    }

    pub fn reset(&mut self) {
        self.ctx.clear();
    }

    /// Quantized CDF conditioned on the current context.
    pub fn next_cdf(&mut self) -> Result<Rc<QuantizedCdf>> {
        let key = pack_context(&self.ctx);
        if let Some(cdf) = self.cache.get(&key) {
            return Ok(Rc::clone(cdf));
        }
        let cdf = Rc::new(self.model.cdf(&self.ctx)?);
        self.cache.insert(key, Rc::clone(&cdf));
        Ok(cdf)
    }

    /// Advance the context by one observed symbol. Parameters are frozen;
    /// only the bounded history changes.
    pub fn observe(&mut self, symbol: u16) -> Result<()> {
        if symbol as usize >= self.model.alphabet() {
            return Err(Error::SymbolOutOfRange {
                symbol: symbol as u32,
                alphabet: self.model.alphabet(),
            });
        }
        let cap = self.model.order() as usize;
        if cap == 0 {
            return Ok(());
        }
        if self.ctx.len() == cap {
            self.ctx.remove(0);
        }
        self.ctx.push(symbol);
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Little-endian field reader for the binary formats.
pub(crate) struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Config("unexpected end of data".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }
}
