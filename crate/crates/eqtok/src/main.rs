//! Command-line surface for the compression-as-tokenization pipeline.
//!
//! Configuration problems print `config-error:` to stderr and exit 2;
//! runtime failures print `error:` and exit 1. Machine-readable reports go
//! to files, human summaries to stdout, and every subcommand is
//! deterministic given its flags and seed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eqtok::analysis::{
    kl_profile, rng_bitstream, Estimator, SegMode, DEFAULT_PARTITIONS, KL_CSV_HEADER,
};
use eqtok::bits::BitStream;
use eqtok::container::{compress_corpus, decompress_corpus, Container};
use eqtok::corpus::{
    concatenate, load_corpus, split_examples, stream_to_text, SymbolStream, DEFAULT_EXAMPLE_LEN,
    DEFAULT_GROUP_SIZE,
};
use eqtok::error::Error;
use eqtok::metrics::{
    bits_per_byte, flops_per_byte, trivial_model_eval, CompressionStats, STATS_CSV_HEADER,
};
use eqtok::model::{Model, DEFAULT_BETA};
use eqtok::seq2seq::{make_seq2seq, write_jsonl, Direction, DEFAULT_SEQ2SEQ_LEN};
use eqtok::tokens::{detokenize_file, tokenize_container, TokenFile};
use eqtok::window::{Method, MethodConfig, Variant};

#[derive(Parser)]
#[command(name = "eqtok", version, about = "Compression-as-tokenization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Ac,
    StaticAc,
    Eqinfo,
    Gzip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Maxfill,
    Zeroavoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Compress,
    Decompress,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Ngram,
    Token,
}

#[derive(Args)]
struct CorpusArgs {
    /// Input corpus files (.txt with blank-line delimiters, or .jsonl)
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    /// Symbols per example
    #[arg(long, default_value_t = DEFAULT_EXAMPLE_LEN)]
    example_len: usize,

    /// Documents concatenated per group
    #[arg(long, default_value_t = DEFAULT_GROUP_SIZE)]
    group_size: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a corpus and write its parameter file
    Fit {
        #[command(flatten)]
        corpus: CorpusArgs,

        /// Context order (0 = static unigram)
        #[arg(long, default_value_t = 0)]
        order: u8,

        /// Coder precision in bits
        #[arg(long, default_value_t = DEFAULT_BETA)]
        precision: u8,

        /// Output model file
        #[arg(long)]
        out: PathBuf,
    },

    /// Compress a corpus into a container file
    Compress {
        #[command(flatten)]
        corpus: CorpusArgs,

        #[arg(long, value_enum)]
        method: MethodArg,

        /// Model parameter file (required for ac, static-ac, eqinfo)
        #[arg(long)]
        model: Option<PathBuf>,

        /// Window size in bits (eqinfo only)
        #[arg(long, default_value_t = 16)]
        window_bits: u32,

        /// Token bit depth N
        #[arg(long, default_value_t = 8)]
        token_bits: u8,

        #[arg(long, value_enum, default_value_t = VariantArg::Maxfill)]
        variant: VariantArg,

        /// Strip the zlib header and checksum (gzip only)
        #[arg(long)]
        strip_framing: bool,

        /// Worker threads
        #[arg(long, default_value_t = 1)]
        jobs: usize,

        #[arg(long)]
        out: PathBuf,
    },

    /// Decompress a container back to blank-line text
    Decompress {
        container: PathBuf,

        #[arg(long)]
        model: Option<PathBuf>,

        #[arg(long, default_value_t = 1)]
        jobs: usize,

        #[arg(long)]
        out: PathBuf,
    },

    /// Chunk a container's bitstream into an N-bit token dataset
    Tokenize {
        container: PathBuf,

        #[arg(long)]
        out: PathBuf,
    },

    /// Rebuild the container from a token dataset
    Detokenize {
        tokens: PathBuf,

        #[arg(long)]
        out: PathBuf,
    },

    /// Report compression ratios, trivial-model bits/byte, and FLOPs/byte
    Stats {
        containers: Vec<PathBuf>,

        /// Model parameter count, embeddings excluded
        #[arg(long)]
        params: Option<u64>,

        /// Compressor-side model parameter count, added per input byte
        #[arg(long)]
        m1_params: Option<u64>,

        /// Write CSV here instead of a summary to stdout
        #[arg(long)]
        out: Option<PathBuf>,

        /// Emit JSON instead of CSV
        #[arg(long)]
        json: bool,
    },

    /// KL-from-uniform profile over bit n-grams or n-bit tokens
    Entropy {
        /// Containers whose bitstreams to profile
        containers: Vec<PathBuf>,

        /// Include a seeded RNG baseline stream of the same scale
        #[arg(long)]
        rng: bool,

        /// Segment widths
        #[arg(long, value_delimiter = ',', default_values_t = vec![8u8])]
        n: Vec<u8>,

        #[arg(long, value_enum, default_value_t = ModeArg::Token)]
        mode: ModeArg,

        /// Use the plug-in estimator instead of Miller-Madow
        #[arg(long)]
        plugin: bool,

        /// Apply the Miller-Madow correction in nats, unconverted
        #[arg(long)]
        mm_literal: bool,

        #[arg(long, default_value_t = DEFAULT_PARTITIONS)]
        partitions: usize,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// RNG baseline length in bits (defaults to the largest container)
        #[arg(long)]
        rng_bits: Option<usize>,

        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Emit sequence-to-sequence compression/decompression records
    Seq2seq {
        #[command(flatten)]
        corpus: CorpusArgs,

        #[arg(long)]
        model: PathBuf,

        #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
        direction: DirectionArg,

        #[arg(long, default_value_t = 8)]
        token_bits: u8,

        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let config_error = matches!(e, Error::Config(_));
            if config_error {
                eprintln!("config-error: {e}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        }
    }
}

fn load_examples(corpus: &CorpusArgs) -> Result<Vec<eqtok::Example>, Error> {
    let docs = load_corpus(&corpus.inputs)?;
    let stream = concatenate(&docs, corpus.group_size)?;
    split_examples(&stream, corpus.example_len)
}

fn build_config(
    method: MethodArg,
    variant: VariantArg,
    window_bits: u32,
    token_bits: u8,
    strip_framing: bool,
    model: Option<&Model>,
) -> Result<MethodConfig, Error> {
    let variant = match variant {
        VariantArg::Maxfill => Variant::MaxFill,
        VariantArg::Zeroavoid => Variant::ZeroAvoid,
    };
    let method = match method {
        MethodArg::Ac => Method::Ac,
        MethodArg::StaticAc => Method::StaticAc,
        MethodArg::Eqinfo => Method::EqualInfo {
            window_bits,
            variant,
        },
        MethodArg::Gzip => Method::Gzip { strip_framing },
    };
    if method.uses_model() && model.is_none() {
        return Err(Error::Config(format!(
            "method {} requires --model",
            method.name()
        )));
    }
    if method == Method::StaticAc {
        if let Some(m) = model {
            if m.order() != 0 {
                return Err(Error::Config(format!(
                    "static-ac needs an order-0 model, got {}",
                    m.model_id()
                )));
            }
        }
    }
    // Model identity is only meaningful for model-driven methods.
    let model = if method.uses_model() { model } else { None };
    let beta = model.map(|m| m.beta()).unwrap_or(DEFAULT_BETA);
    MethodConfig::new(
        method,
        token_bits,
        beta,
        model.map(|m| m.model_id().to_string()).unwrap_or_default(),
        model
            .map(|m| m.params_digest().to_string())
            .unwrap_or_default(),
    )
}

fn write_report(path: Option<&PathBuf>, contents: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        }),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn container_stats(
    container: &Container,
    params: Option<u64>,
    m1_params: Option<u64>,
) -> Result<CompressionStats, Error> {
    let token_file = tokenize_container(container)?;
    let input_symbols = container.total_symbols();
    let input_bits = input_symbols * 8;
    let output_tokens = token_file.total_tokens();
    let output_bits = container.total_output_bits();
    let token_ratio = input_symbols as f64 / output_tokens as f64;
    let bit_ratio = input_bits as f64 / output_bits as f64;
    let flat =
        eqtok::tokens::TokenSequence::new(token_file.flat_tokens(), container.config.token_bits)?;
    let (uniform, unigram, delta) = trivial_model_eval(&flat, token_ratio)?;
    let flops = params
        .map(|p| flops_per_byte(p, token_ratio, m1_params))
        .transpose()?;
    Ok(CompressionStats {
        method: container.config.method.name(),
        window_bits: match container.config.method {
            Method::EqualInfo { window_bits, .. } => window_bits,
            _ => 0,
        },
        token_bits: container.config.token_bits,
        model_id: container.config.model_id.clone(),
        examples: container.examples.len() as u64,
        input_symbols,
        input_bits,
        output_tokens,
        output_bits,
        token_ratio,
        bit_ratio,
        uniform_bits_per_byte: uniform,
        unigram_bits_per_byte: unigram,
        delta,
        params,
        m1_params,
        flops_per_byte: flops,
    })
}

/// The uncompressed byte-identity row: one 8-bit token per symbol.
fn bytes_baseline(input_symbols: u64, params: Option<u64>) -> Result<CompressionStats, Error> {
    let uniform = bits_per_byte(256f64.ln(), 1.0)?;
    let flops = params.map(|p| flops_per_byte(p, 1.0, None)).transpose()?;
    Ok(CompressionStats {
        method: "bytes".into(),
        window_bits: 0,
        token_bits: 8,
        model_id: String::new(),
        examples: 0,
        input_symbols,
        input_bits: input_symbols * 8,
        output_tokens: input_symbols,
        output_bits: input_symbols * 8,
        token_ratio: 1.0,
        bit_ratio: 1.0,
        uniform_bits_per_byte: uniform,
        unigram_bits_per_byte: uniform,
        delta: 0.0,
        params,
        m1_params: None,
        flops_per_byte: flops,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fit {
            corpus,
            order,
            precision,
            out,
        } => {
            let examples = load_examples(&corpus)?;
            let model = Model::fit_context_model(&examples, order, precision)?;
            model.save(&out)?;
            println!("{}", model.params_digest());
            Ok(())
        }

        Command::Compress {
            corpus,
            method,
            model,
            window_bits,
            token_bits,
            variant,
            strip_framing,
            jobs,
            out,
        } => {
            if jobs == 0 {
                return Err(Error::Config("--jobs must be at least 1".into()));
            }
            let examples = load_examples(&corpus)?;
            let model = model.map(|p| Model::load(&p)).transpose()?;
            let config = build_config(
                method,
                variant,
                window_bits,
                token_bits,
                strip_framing,
                model.as_ref(),
            )?;
            let container = compress_corpus(&examples, &config, model.as_ref(), jobs)?;
            container.write(&out)?;
            println!(
                "{} examples, {} symbols -> {} bits ({})",
                container.examples.len(),
                container.total_symbols(),
                container.total_output_bits(),
                config.method.name()
            );
            Ok(())
        }

        Command::Decompress {
            container,
            model,
            jobs,
            out,
        } => {
            if jobs == 0 {
                return Err(Error::Config("--jobs must be at least 1".into()));
            }
            let container = Container::read(&container)?;
            let model = model.map(|p| Model::load(&p)).transpose()?;
            let symbols = decompress_corpus(&container, model.as_ref(), jobs)?;
            let text = stream_to_text(&SymbolStream::from_symbols(symbols));
            std::fs::write(&out, &text).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            println!("{} bytes written", text.len());
            Ok(())
        }

        Command::Tokenize { container, out } => {
            let container = Container::read(&container)?;
            let token_file = tokenize_container(&container)?;
            token_file.write(&out)?;
            println!(
                "{} tokens at {} bits ({} vocabulary)",
                token_file.total_tokens(),
                container.config.token_bits,
                1u32 << container.config.token_bits
            );
            Ok(())
        }

        Command::Detokenize { tokens, out } => {
            let token_file = TokenFile::read(&tokens)?;
            let container = detokenize_file(&token_file)?;
            container.write(&out)?;
            println!("{} examples restored", container.examples.len());
            Ok(())
        }

        Command::Stats {
            containers,
            params,
            m1_params,
            out,
            json,
        } => {
            if containers.is_empty() {
                return Err(Error::Config("stats needs at least one container".into()));
            }
            let mut rows = Vec::new();
            let mut max_symbols = 0u64;
            for path in &containers {
                let container = Container::read(path)?;
                max_symbols = max_symbols.max(container.total_symbols());
                rows.push(container_stats(&container, params, m1_params)?);
            }
            let mut all = vec![bytes_baseline(max_symbols, params)?];
            all.extend(rows);
            let report = if json {
                let mut s = serde_json::to_string_pretty(&all)
                    .map_err(|e| Error::Config(format!("serialize failed: {e}")))?;
                s.push('\n');
                s
            } else {
                let mut s = String::from(STATS_CSV_HEADER);
                s.push('\n');
                for row in &all {
                    s.push_str(&row.csv_row());
                    s.push('\n');
                }
                s
            };
            write_report(out.as_ref(), &report)?;
            if out.is_some() {
                for row in &all {
                    println!(
                        "{}: token ratio {:.2}, bit ratio {:.2}, uniform {:.3} bits/byte",
                        row.method, row.token_ratio, row.bit_ratio, row.uniform_bits_per_byte
                    );
                }
            }
            Ok(())
        }

        Command::Entropy {
            containers,
            rng,
            n,
            mode,
            plugin,
            mm_literal,
            partitions,
            seed,
            rng_bits,
            out,
        } => {
            if containers.is_empty() && !rng {
                return Err(Error::Config(
                    "entropy needs container files and/or --rng".into(),
                ));
            }
            let mode = match mode {
                ModeArg::Ngram => SegMode::OverlappingNgram,
                ModeArg::Token => SegMode::DisjointToken,
            };
            let estimator = if plugin {
                Estimator::PlugIn
            } else {
                Estimator::MillerMadow {
                    literal_nats: mm_literal,
                }
            };
            let mut streams: Vec<(String, BitStream)> = Vec::new();
            let mut min_window: Option<u32> = None;
            for path in &containers {
                let container = Container::read(path)?;
                if let Method::EqualInfo { window_bits, .. } = container.config.method {
                    min_window = Some(min_window.map_or(window_bits, |w| w.min(window_bits)));
                }
                let name = container.config.method.name();
                streams.push((name, container.bitstream()));
            }
            if rng {
                let bits = rng_bits.unwrap_or_else(|| {
                    streams
                        .iter()
                        .map(|(_, s)| s.len())
                        .max()
                        .unwrap_or(8 * 1_000_000)
                });
                streams.push((format!("rng[seed={seed}]"), rng_bitstream(bits, seed)));
            }
            let rows = kl_profile(&streams, &n, mode, estimator, partitions, min_window)?;
            let negative = rows.iter().filter(|r| r.value < 0.0).count();
            if negative > 0 {
                eprintln!("note: {negative} corrected KL values are negative (kept, not clamped)");
            }
            let mut report = String::from(KL_CSV_HEADER);
            report.push('\n');
            for row in &rows {
                report.push_str(&row.csv_row());
                report.push('\n');
            }
            write_report(out.as_ref(), &report)?;
            Ok(())
        }

        Command::Seq2seq {
            corpus,
            model,
            direction,
            token_bits,
            out,
        } => {
            let corpus = CorpusArgs {
                example_len: if corpus.example_len == DEFAULT_EXAMPLE_LEN {
                    DEFAULT_SEQ2SEQ_LEN
                } else {
                    corpus.example_len
                },
                ..corpus
            };
            let examples = load_examples(&corpus)?;
            let model = Model::load(&model)?;
            let mut state = model.state();
            let directions: &[Direction] = match direction {
                DirectionArg::Compress => &[Direction::Compress],
                DirectionArg::Decompress => &[Direction::Decompress],
                DirectionArg::Both => &[Direction::Compress, Direction::Decompress],
            };
            let mut records = Vec::new();
            for example in &examples {
                for &d in directions {
                    records.push(make_seq2seq(example, &mut state, token_bits, d)?);
                }
            }
            write_jsonl(&out, &records)?;
            println!("{} records written", records.len());
            Ok(())
        }
    }
}
