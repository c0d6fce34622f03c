//! Lossless compression as tokenization.
//!
//! This crate turns byte-level text into compressed token streams suitable
//! for language-model training, and ships the measurement stack to inspect
//! them:
//!
//! - [`corpus`]: document ingestion, EOS-terminated symbol streams, and
//!   fixed-length examples.
//! - [`model`]: integer-only probability models (uniform, static unigram,
//!   bounded-order context models) behind a quantized-CDF interface.
//! - [`coder`]: a finite-precision arithmetic (range) encoder/decoder with
//!   on-the-fly bit emission and carry handling.
//! - [`window`]: whole-stream AC, equal-info windows in both padding
//!   variants, and a DEFLATE baseline.
//! - [`container`], [`tokens`]: the `EQIC` compressed container and `EQIT`
//!   token dataset formats, with N-bit tokenization between them.
//! - [`metrics`]: bits/byte and FLOPs/byte accounting plus trivial-model
//!   baselines.
//! - [`analysis`]: entropy and KL-from-uniform diagnostics over bit n-grams
//!   and n-bit tokens, with Miller-Madow bias correction.
//! - [`seq2seq`]: compression/decompression diagnostic datasets.
//!
//! Compression and model inference use integer arithmetic exclusively, so
//! outputs are bit-identical across platforms, thread counts, and runs.
//!
//! # Example
//!
//! ```
//! use eqtok::coder::{decode, encode};
//! use eqtok::window::{compress_equal_info, decompress_equal_info};
//! use eqtok::{Example, Model, Variant};
//!
//! let corpus = vec![Example::new(
//!     "the text the model is fitted on".bytes().map(u16::from).collect(),
//!     0,
//!     false,
//! )];
//! let model = Model::fit_context_model(&corpus, 2, 14)?;
//!
//! // Whole-stream arithmetic coding.
//! let symbols: Vec<u16> = "hello".bytes().map(u16::from).collect();
//! let mut state = model.state();
//! let bits = encode(&symbols, &mut state)?;
//! assert_eq!(decode(&bits, &mut state, symbols.len())?, symbols);
//!
//! // Equal-info windows: every window is exactly 32 bits and decodes
//! // independently of the others.
//! let windows = compress_equal_info(&symbols, &mut state, 32, Variant::MaxFill)?;
//! assert!(windows.iter().all(|w| w.bits.len() == 32));
//! let back = decompress_equal_info(
//!     &windows,
//!     &mut state,
//!     32,
//!     Variant::MaxFill,
//!     Some(symbols.len() as u64),
//! )?;
//! assert_eq!(back, symbols);
//! # Ok::<(), eqtok::Error>(())
//! ```

pub mod analysis;
pub mod bits;
pub mod coder;
pub mod container;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod model;
pub mod seq2seq;
pub mod tokens;
pub mod window;

pub use bits::BitStream;
pub use container::{compress_corpus, decompress_corpus, Container};
pub use corpus::{concatenate, load_corpus, split_examples, Document, Example, SymbolStream};
pub use error::{Error, Result};
pub use model::{Model, ModelState, QuantizedCdf, DEFAULT_BETA, EOS};
pub use tokens::{detokenize, tokenize, TokenSequence};
pub use window::{Method, MethodConfig, Variant, Window};
