//! Evaluation arithmetic: bits/byte conversion, FLOPs/byte accounting, and
//! the trivial uniform/unigram token models.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tokens::TokenSequence;

/// Convert a per-token loss in nats to bits per input byte by scaling with
/// the token-level compression rate: `loss / ratio / ln 2`.
pub fn bits_per_byte(loss_nats_per_token: f64, token_ratio: f64) -> Result<f64> {
    if token_ratio <= 0.0 {
        return Err(Error::NonPositive("token ratio"));
    }
    if loss_nats_per_token < 0.0 {
        return Err(Error::NonPositive("loss"));
    }
    Ok(loss_nats_per_token / token_ratio / std::f64::consts::LN_2)
}

/// Inference cost per input byte: `2 * params / token_ratio`, plus
/// `2 * m1_params` when a compressor-side model runs once per byte.
/// `params` excludes embedding parameters; the caller supplies the
/// already-excluded count.
pub fn flops_per_byte(params: u64, token_ratio: f64, m1_params: Option<u64>) -> Result<f64> {
    if params == 0 {
        return Err(Error::NonPositive("params"));
    }
    if token_ratio <= 0.0 {
        return Err(Error::NonPositive("token ratio"));
    }
    let mut flops = 2.0 * params as f64 / token_ratio;
    if let Some(m1) = m1_params {
        flops += 2.0 * m1 as f64;
    }
    Ok(flops)
}

/// Bits/byte of the two trivial models over a token stream: "uniform"
/// assigns every token equal probability, "unigram" uses the stream's own
/// empirical frequencies (in-sample maximum-likelihood plug-in).
/// Returns `(uniform, unigram, delta)`.
pub fn trivial_model_eval(tokens: &TokenSequence, token_ratio: f64) -> Result<(f64, f64, f64)> {
    if tokens.is_empty() {
        return Err(Error::EmptyTokens);
    }
    let uniform_loss = (tokens.vocab_size() as f64).ln();
    let uniform = bits_per_byte(uniform_loss, token_ratio)?;

    let mut counts = vec![0u64; tokens.vocab_size() as usize];
    for &t in tokens.tokens() {
        counts[t as usize] += 1;
    }
    let m = tokens.len() as f64;
    let unigram_loss: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / m;
            -p * p.ln()
        })
        .sum();
    let unigram = bits_per_byte(unigram_loss, token_ratio)?;
    Ok((uniform, unigram, uniform - unigram))
}

/// Everything the stats report carries for one (method, corpus) pair.
#[derive(Clone, Debug, Serialize)]
pub struct CompressionStats {
    pub method: String,
    pub window_bits: u32,
    pub token_bits: u8,
    pub model_id: String,
    pub examples: u64,
    pub input_symbols: u64,
    pub input_bits: u64,
    pub output_tokens: u64,
    pub output_bits: u64,
    pub token_ratio: f64,
    pub bit_ratio: f64,
    pub uniform_bits_per_byte: f64,
    pub unigram_bits_per_byte: f64,
    pub delta: f64,
    pub params: Option<u64>,
    pub m1_params: Option<u64>,
    pub flops_per_byte: Option<f64>,
}

pub const STATS_CSV_HEADER: &str = "method,window_bits,token_bits,model_id,examples,\
input_symbols,input_bits,output_tokens,output_bits,token_ratio,bit_ratio,\
uniform_bits_per_byte,unigram_bits_per_byte,delta,params,m1_params,flops_per_byte";

impl CompressionStats {
    pub fn csv_row(&self) -> String {
        let opt_u64 = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_f64 = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{}",
            self.method,
            self.window_bits,
            self.token_bits,
            self.model_id,
            self.examples,
            self.input_symbols,
            self.input_bits,
            self.output_tokens,
            self.output_bits,
            self.token_ratio,
            self.bit_ratio,
            self.uniform_bits_per_byte,
            self.unigram_bits_per_byte,
            self.delta,
            opt_u64(self.params),
            opt_u64(self.m1_params),
            opt_f64(self.flops_per_byte),
        )
    }
}
