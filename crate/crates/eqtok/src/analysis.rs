//! Bitstream-uniformity diagnostics: per-partition entropy estimates and KL
//! divergence from the uniform distribution over bit n-grams or n-bit
//! tokens.
//!
//! The stream is split into disjoint partitions (100 by default); each
//! partition yields one entropy estimate, and the report carries the 5th,
//! 50th, and 95th percentiles of `KL(P ‖ U) = n - H(P)`. The alphabet is
//! `2^n` by construction, so the Miller-Madow corrected estimate is
//! `H + (2^n - 1) / (2 m ln 2)` bits for a partition of `m` segments; the
//! classical correction is stated in nats, and `literal_nats` reproduces it
//! without the bit conversion for comparison against sources that omit it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bits::BitStream;
use crate::error::{Error, Result};

pub const DEFAULT_PARTITIONS: usize = 100;
pub const MIN_SEGMENTS_PER_PARTITION: usize = 100;
const MAX_SEGMENT_BITS: u8 = 20;

/// How the bitstream is cut into segments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegMode {
    /// All overlapping n-bit windows.
    OverlappingNgram,
    /// Disjoint n-bit tokens; the stream length must divide by n.
    DisjointToken,
}

impl SegMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SegMode::OverlappingNgram => "ngram",
            SegMode::DisjointToken => "token",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentationSpec {
    pub mode: SegMode,
    pub n: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    PlugIn,
    MillerMadow { literal_nats: bool },
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::PlugIn => "plug-in",
            Estimator::MillerMadow {
                literal_nats: false,
            } => "miller-madow",
            Estimator::MillerMadow { literal_nats: true } => "miller-madow-literal",
        }
    }
}

/// Per-partition entropies and the KL-from-uniform percentile summary.
#[derive(Clone, Debug)]
pub struct EntropyReport {
    pub spec: SegmentationSpec,
    pub estimator: Estimator,
    pub partitions: usize,
    pub segments_per_partition: usize,
    /// One entropy estimate (bits) per partition.
    pub entropies: Vec<f64>,
    pub kl_p5: f64,
    pub kl_p50: f64,
    pub kl_p95: f64,
    /// Bias correction can push KL below zero; such values are kept and
    /// flagged rather than clamped.
    pub negative_kl_present: bool,
}

/// Estimate per-partition entropy of a segmented bitstream.
pub fn estimate_entropy(
    stream: &BitStream,
    spec: SegmentationSpec,
    estimator: Estimator,
    partitions: usize,
) -> Result<EntropyReport> {
    if spec.n == 0 || spec.n > MAX_SEGMENT_BITS {
        return Err(Error::Config(format!(
            "segment width {} out of range 1..={MAX_SEGMENT_BITS}",
            spec.n
        )));
    }
    if partitions == 0 {
        return Err(Error::Config("need at least one partition".into()));
    }
    let n = spec.n as usize;
    if spec.mode == SegMode::DisjointToken && !stream.len().is_multiple_of(n) {
        return Err(Error::MisalignedStream {
            bits: stream.len(),
            token_bits: spec.n,
        });
    }

    // Cut the stream into equal partition slices, aligned to whole tokens
    // in token mode.
    let (slice_bits, step_bits) = match spec.mode {
        SegMode::DisjointToken => {
            let tokens_total = stream.len() / n;
            let tokens_per_part = tokens_total / partitions;
            (tokens_per_part * n, n)
        }
        SegMode::OverlappingNgram => {
            let bits_per_part = stream.len() / partitions;
            (bits_per_part, 1)
        }
    };
    let segments = match spec.mode {
        SegMode::DisjointToken => slice_bits / n,
        SegMode::OverlappingNgram => slice_bits.saturating_sub(n - 1),
    };
    if segments < MIN_SEGMENTS_PER_PARTITION {
        let needed = match spec.mode {
            SegMode::DisjointToken => MIN_SEGMENTS_PER_PARTITION * n * partitions,
            SegMode::OverlappingNgram => (MIN_SEGMENTS_PER_PARTITION + n - 1) * partitions,
        };
        return Err(Error::InsufficientData {
            needed,
            have: stream.len(),
            unit: "bits",
        });
    }

    let vocab = 1usize << spec.n;
    let mut entropies = Vec::with_capacity(partitions);
    let mut counts = vec![0u64; vocab];
    for part in 0..partitions {
        counts.fill(0);
        let base = part * slice_bits;
        // A rolling register keeps segment extraction O(1) per step.
        let mut reg: u64 = 0;
        let mask: u64 = (1 << spec.n) - 1;
        if spec.mode == SegMode::OverlappingNgram {
            for i in 0..slice_bits {
                reg = (reg << 1 | u64::from(stream.get(base + i).unwrap())) & mask;
                if i + 1 >= n {
                    counts[reg as usize] += 1;
                }
            }
        } else {
            let mut i = 0;
            while i < slice_bits {
                let token = stream.read_bits(base + i, spec.n);
                counts[token as usize] += 1;
                i += step_bits;
            }
        }
        let m = match spec.mode {
            SegMode::DisjointToken => slice_bits / n,
            SegMode::OverlappingNgram => slice_bits - n + 1,
        };
        debug_assert_eq!(counts.iter().sum::<u64>() as usize, m);
        let mut h: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / m as f64;
                -p * p.log2()
            })
            .sum();
        if let Estimator::MillerMadow { literal_nats } = estimator {
            let bias = (vocab as f64 - 1.0) / (2.0 * m as f64);
            h += if literal_nats {
                bias
            } else {
                bias / std::f64::consts::LN_2
            };
        }
        entropies.push(h);
    }

    let mut kls: Vec<f64> = entropies.iter().map(|h| spec.n as f64 - h).collect();
    kls.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let negative_kl_present = kls.first().map(|&k| k < 0.0).unwrap_or(false);
    Ok(EntropyReport {
        spec,
        estimator,
        partitions,
        segments_per_partition: segments,
        entropies,
        kl_p5: percentile(&kls, 0.05),
        kl_p50: percentile(&kls, 0.50),
        kl_p95: percentile(&kls, 0.95),
        negative_kl_present,
    })
}

/// Linear-interpolation percentile over a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// One row of the KL profile table.
#[derive(Clone, Debug)]
pub struct KlRow {
    pub stream: String,
    pub mode: SegMode,
    pub n: u8,
    pub percentile: u8,
    pub value: f64,
}

pub const KL_CSV_HEADER: &str = "stream,mode,n,percentile,value";

impl KlRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.stream,
            self.mode.as_str(),
            self.n,
            self.percentile,
            self.value
        )
    }
}

/// Percentile KL-from-uniform for every (stream, n) pair.
///
/// In token mode, `min_window_bits` (the smallest equal-info window among
/// the streams) restricts n to its divisors so tokens never cross window
/// boundaries.
pub fn kl_profile(
    streams: &[(String, BitStream)],
    n_values: &[u8],
    mode: SegMode,
    estimator: Estimator,
    partitions: usize,
    min_window_bits: Option<u32>,
) -> Result<Vec<KlRow>> {
    if let (SegMode::DisjointToken, Some(w)) = (mode, min_window_bits) {
        for &n in n_values {
            if w % n as u32 != 0 {
                return Err(Error::Config(format!(
                    "token width {n} does not divide the smallest window of {w} bits"
                )));
            }
        }
    }
    let mut rows = Vec::new();
    for (name, stream) in streams {
        for &n in n_values {
            // Token mode tolerates a trailing partial token by trimming to
            // a whole-token length; n-gram mode uses the stream as-is.
            let trimmed;
            let stream_ref = if mode == SegMode::DisjointToken && stream.len() % n as usize != 0 {
                trimmed = stream
                    .iter()
                    .take(stream.len() - stream.len() % n as usize)
                    .collect();
                &trimmed
            } else {
                stream
            };
            let report = estimate_entropy(
                stream_ref,
                SegmentationSpec { mode, n },
                estimator,
                partitions,
            )?;
            for (pct, value) in [(5, report.kl_p5), (50, report.kl_p50), (95, report.kl_p95)] {
                rows.push(KlRow {
                    stream: name.clone(),
                    mode,
                    n,
                    percentile: pct,
                    value,
                });
            }
        }
    }
    Ok(rows)
}

/// Reproducible random bitstream from a cryptographically seeded generator.
pub fn rng_bitstream(bits: usize, seed: u64) -> BitStream {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut bytes = vec![0u8; bits.div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    BitStream::from_bytes(&bytes, bits).expect("length matches by construction")
}
