//! Sequence-to-sequence diagnostic datasets: pair raw symbols with their
//! arithmetic-coded tokens so an external trainer can probe whether a model
//! learns the coding procedure itself.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coder::CdfSource;
use crate::corpus::Example;
use crate::error::{Error, Result};
use crate::model::BYTE_ALPHABET;
use crate::tokens::{tokenize, TokenSequence};
use crate::window::compress_ac;

pub const SEQ2SEQ_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEQ2SEQ_LEN: usize = 1_024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Compress,
    Decompress,
}

/// One record: input ids and target ids over a combined vocabulary. Targets
/// are shifted by the input vocabulary size so the two id spaces never
/// collide.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seq2SeqExample {
    pub schema: u32,
    pub direction: Direction,
    pub inputs: Vec<u32>,
    pub targets: Vec<u32>,
}

impl Seq2SeqExample {
    pub fn max_input_id(&self) -> Option<u32> {
        self.inputs.iter().copied().max()
    }

    pub fn min_target_id(&self) -> Option<u32> {
        self.targets.iter().copied().min()
    }
}

/// Build one seq2seq record from an example: compress it with the model,
/// tokenize the bits, and lay out (inputs, shifted targets) per direction.
pub fn make_seq2seq<S: CdfSource>(
    example: &Example,
    source: &mut S,
    token_bits: u8,
    direction: Direction,
) -> Result<Seq2SeqExample> {
    if example.is_empty() {
        return Err(Error::Config(
            "cannot build a record from an empty example".into(),
        ));
    }
    let mut bits = compress_ac(example.symbols(), source)?;
    bits.pad_to_multiple(token_bits as usize);
    let tokens = tokenize(&bits, token_bits)?;
    let record = match direction {
        Direction::Compress => Seq2SeqExample {
            schema: SEQ2SEQ_SCHEMA_VERSION,
            direction,
            inputs: example.symbols().iter().map(|&s| s as u32).collect(),
            targets: tokens
                .tokens()
                .iter()
                .map(|&t| t as u32 + BYTE_ALPHABET as u32)
                .collect(),
        },
        Direction::Decompress => Seq2SeqExample {
            schema: SEQ2SEQ_SCHEMA_VERSION,
            direction,
            inputs: tokens.tokens().iter().map(|&t| t as u32).collect(),
            targets: example
                .symbols()
                .iter()
                .map(|&s| s as u32 + (1u32 << token_bits))
                .collect(),
        },
    };
    Ok(record)
}

/// Undo the target shift, recovering the raw token or symbol ids.
pub fn unshift_targets(record: &Seq2SeqExample, token_bits: u8) -> Result<Vec<u16>> {
    let shift = match record.direction {
        Direction::Compress => BYTE_ALPHABET as u32,
        Direction::Decompress => 1u32 << token_bits,
    };
    record
        .targets
        .iter()
        .map(|&t| {
            t.checked_sub(shift)
                .map(|v| v as u16)
                .ok_or_else(|| Error::Config(format!("target id {t} below shift {shift}")))
        })
        .collect()
}

/// Recover the token sequence from a compress-direction record.
pub fn targets_as_tokens(record: &Seq2SeqExample, token_bits: u8) -> Result<TokenSequence> {
    if record.direction != Direction::Compress {
        return Err(Error::Config("record is not compress-direction".into()));
    }
    TokenSequence::new(unshift_targets(record, token_bits)?, token_bits)
}

/// Write records as line-delimited JSON.
pub fn write_jsonl(path: &Path, records: &[Seq2SeqExample]) -> Result<()> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| Error::Config(format!("serialize failed: {e}")))?;
        out.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    file.write_all(&out).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
