//! Corpus ingestion: documents, symbol streams, and fixed-length examples.
//!
//! Text files use a blank line between documents; `.jsonl` files hold one
//! record per line with a single `text` field. Byte handling is 8-bit clean
//! throughout; nothing is ever normalized or validated as UTF-8.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::EOS;

/// One raw document, stored verbatim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    bytes: Vec<u8>,
}

impl Document {
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::Config("document must be non-empty".into()));
        }
        Ok(Self { bytes })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    /// Always false: emptiness is rejected at construction.
    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

/// Symbol ids in `[0, 257)`: byte values plus the EOS marker that ends every
/// document.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolStream {
    symbols: Vec<u16>,
}

impl SymbolStream {
    pub fn from_symbols(symbols: Vec<u16>) -> Self {
        Self { symbols }
    }

    pub fn symbols(&self) -> &[u16] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Count of byte symbols, excluding EOS markers.
    pub fn byte_count(&self) -> usize {
        self.symbols.iter().filter(|&&s| s != EOS).count()
    }

    /// Split back into documents at EOS markers. Symbols after the final
    /// EOS (a truncated trailing document) form a last document of their own.
    pub fn into_documents(&self) -> Vec<Vec<u8>> {
        let mut docs = Vec::new();
        let mut cur = Vec::new();
        for &s in &self.symbols {
            if s == EOS {
                docs.push(std::mem::take(&mut cur));
            } else {
                cur.push(s as u8);
            }
        }
        if !cur.is_empty() {
            docs.push(cur);
        }
        docs
    }
}

/// A fixed-length slice of the concatenated stream. The final slice of a
/// stream may be shorter and is flagged as a tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    symbols: Vec<u16>,
    source_offset: usize,
    is_tail: bool,
}

impl Example {
    pub fn new(symbols: Vec<u16>, source_offset: usize, is_tail: bool) -> Self {
        Self {
            symbols,
            source_offset,
            is_tail,
        }
    }

    pub fn symbols(&self) -> &[u16] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn source_offset(&self) -> usize {
        self.source_offset
    }

    pub fn is_tail(&self) -> bool {
        self.is_tail
    }
}

/// Load documents from files, auto-detecting the format by extension.
pub fn load_corpus<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let data = std::fs::read(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let is_jsonl = path
            .extension()
            .map(|e| e == "jsonl" || e == "ndjson")
            .unwrap_or(false);
        if is_jsonl {
            parse_jsonl(&data, path, &mut docs)?;
        } else {
            parse_blank_line(&data, path, &mut docs)?;
        }
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(docs)
}

/// Documents separated by a blank line (the two-byte sequence `\n\n`).
/// Runs of separators would imply empty documents, which are rejected so
/// that rejoining documents with `\n\n` reproduces the input exactly.
fn parse_blank_line(data: &[u8], path: &Path, docs: &mut Vec<Document>) -> Result<()> {
    if data.is_empty() {
        return Ok(());
    }
    let mut start = 0;
    let mut index = 0;
    let mut push = |piece: &[u8], index: usize| -> Result<()> {
        if piece.is_empty() {
            return Err(Error::EmptyDocument {
                index,
                path: path.to_path_buf(),
            });
        }
        docs.push(Document::new(piece.to_vec())?);
        Ok(())
    };
    let mut i = 0;
    while i + 1 < data.len() {
        if data[i] == b'\n' && data[i + 1] == b'\n' {
            push(&data[start..i], index)?;
            index += 1;
            start = i + 2;
            i += 2;
        } else {
            i += 1;
        }
    }
    push(&data[start..], index)?;
    Ok(())
}

fn parse_jsonl(data: &[u8], path: &Path, docs: &mut Vec<Document>) -> Result<()> {
    #[derive(serde::Deserialize)]
    struct Record {
        text: String,
    }
    for (lineno, line) in data.split(|&b| b == b'\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        let record: Record = serde_json::from_slice(line).map_err(|e| Error::MalformedRecord {
            line: lineno + 1,
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if record.text.is_empty() {
            return Err(Error::EmptyDocument {
                index: lineno,
                path: path.to_path_buf(),
            });
        }
        docs.push(Document::new(record.text.into_bytes())?);
    }
    Ok(())
}

/// Concatenate documents in groups, appending EOS after each document.
/// Output length is always `sum(len(doc) + 1)`.
pub fn concatenate(docs: &[Document], group_size: usize) -> Result<SymbolStream> {
    if group_size == 0 {
        return Err(Error::Config("group_size must be at least 1".into()));
    }
    let total: usize = docs.iter().map(|d| d.len() + 1).sum();
    let mut symbols = Vec::with_capacity(total);
    for group in docs.chunks(group_size) {
        for doc in group {
            symbols.extend(doc.bytes().iter().map(|&b| b as u16));
            symbols.push(EOS);
        }
    }
    Ok(SymbolStream::from_symbols(symbols))
}

/// Cut the stream into consecutive, non-overlapping examples of
/// `example_len` symbols. A shorter final slice is kept and flagged.
pub fn split_examples(stream: &SymbolStream, example_len: usize) -> Result<Vec<Example>> {
    if example_len < 2 {
        return Err(Error::Config("example_len must be at least 2".into()));
    }
    let symbols = stream.symbols();
    let mut examples = Vec::with_capacity(symbols.len().div_ceil(example_len));
    let mut offset = 0;
    while offset < symbols.len() {
        let end = (offset + example_len).min(symbols.len());
        let is_tail = end - offset < example_len;
        examples.push(Example::new(symbols[offset..end].to_vec(), offset, is_tail));
        offset = end;
    }
    Ok(examples)
}

/// Rebuild the blank-line text form of a symbol stream, the inverse of
/// `load_corpus` + `concatenate` for `.txt` inputs.
pub fn stream_to_text(stream: &SymbolStream) -> Vec<u8> {
    let docs = stream.into_documents();
    let mut out = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        if i > 0 {
            out.extend_from_slice(b"\n\n");
        }
        out.extend_from_slice(doc);
    }
    out
}

pub const DEFAULT_EXAMPLE_LEN: usize = 10_240;
pub const DEFAULT_GROUP_SIZE: usize = 128;

/// Convenience: load, concatenate, and split in one step.
pub fn corpus_examples<P: AsRef<Path>>(
    paths: &[P],
    group_size: usize,
    example_len: usize,
) -> Result<Vec<Example>> {
    let docs = load_corpus(paths)?;
    let stream = concatenate(&docs, group_size)?;
    split_examples(&stream, example_len)
}
