//! Shared test fixtures: a deterministic English-like web-text generator.
#![allow(dead_code)]
//!
//! The generator mixes Zipf-weighted common words with recurring boilerplate
//! snippets (navigation bars, cookie notices, footers), which is the texture
//! the compression pipeline is built for: enough n-gram structure for
//! context models to beat unigrams, and enough repetition for DEFLATE to
//! find matches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eqtok::corpus::{concatenate, split_examples, Document, Example};

const WORDS: &[&str] = &[
    "the",
    "of",
    "and",
    "to",
    "in",
    "a",
    "is",
    "that",
    "it",
    "was",
    "for",
    "on",
    "are",
    "as",
    "with",
    "his",
    "they",
    "at",
    "be",
    "this",
    "from",
    "have",
    "or",
    "by",
    "one",
    "had",
    "not",
    "but",
    "what",
    "all",
    "were",
    "when",
    "we",
    "there",
    "can",
    "an",
    "your",
    "which",
    "their",
    "said",
    "if",
    "do",
    "will",
    "each",
    "about",
    "how",
    "up",
    "out",
    "them",
    "then",
    "she",
    "many",
    "some",
    "so",
    "these",
    "would",
    "other",
    "into",
    "has",
    "more",
    "her",
    "two",
    "like",
    "him",
    "see",
    "time",
    "could",
    "no",
    "make",
    "than",
    "first",
    "been",
    "its",
    "who",
    "now",
    "people",
    "my",
    "made",
    "over",
    "did",
    "down",
    "only",
    "way",
    "find",
    "use",
    "may",
    "water",
    "long",
    "little",
    "very",
    "after",
    "words",
    "called",
    "just",
    "where",
    "most",
    "know",
    "get",
    "through",
    "back",
    "much",
    "before",
    "go",
    "good",
    "new",
    "write",
    "our",
    "used",
    "me",
    "man",
    "too",
    "any",
    "day",
    "same",
    "right",
    "look",
    "think",
    "also",
    "around",
    "another",
    "came",
    "come",
    "work",
    "three",
    "word",
    "must",
    "because",
    "does",
    "part",
    "even",
    "place",
    "well",
    "such",
    "here",
    "take",
    "why",
    "things",
    "help",
    "put",
    "years",
    "different",
    "away",
    "again",
    "off",
    "went",
    "old",
    "number",
    "great",
    "tell",
    "men",
    "say",
    "small",
    "every",
    "found",
    "still",
    "between",
    "name",
    "should",
    "home",
    "big",
    "give",
    "air",
    "line",
    "set",
    "own",
    "under",
    "read",
    "last",
    "never",
    "us",
    "left",
    "end",
    "along",
    "while",
    "might",
    "next",
    "sound",
    "below",
    "saw",
    "something",
    "thought",
    "both",
    "few",
    "those",
    "always",
    "looked",
    "show",
    "large",
    "often",
    "together",
    "asked",
    "house",
    "world",
    "going",
    "want",
    "school",
    "important",
    "until",
    "form",
    "food",
    "keep",
    "children",
    "feet",
    "land",
    "side",
    "without",
    "boy",
    "once",
    "animals",
    "life",
    "enough",
    "took",
    "sometimes",
    "four",
    "head",
    "above",
    "kind",
    "began",
    "almost",
    "live",
    "page",
    "got",
    "earth",
    "need",
    "far",
    "hand",
    "high",
    "year",
    "mother",
    "light",
    "country",
    "father",
    "let",
    "night",
    "picture",
    "being",
    "study",
    "second",
    "soon",
    "story",
    "since",
    "white",
    "ever",
    "paper",
    "hard",
    "near",
    "sentence",
    "better",
    "best",
    "across",
    "during",
    "today",
    "however",
    "sure",
    "knew",
    "try",
    "told",
    "young",
    "miles",
    "sun",
    "ways",
    "thing",
    "whole",
    "hear",
    "example",
    "heard",
    "several",
    "change",
    "answer",
    "room",
    "against",
    "top",
    "turned",
    "learn",
    "point",
    "city",
    "play",
    "toward",
    "five",
    "himself",
    "usually",
    "money",
    "seen",
    "car",
    "morning",
    "body",
    "upon",
    "family",
    "later",
    "turn",
    "move",
    "face",
    "door",
    "cut",
    "done",
    "group",
    "true",
    "half",
    "red",
    "fish",
    "plants",
    "living",
    "black",
    "eat",
    "short",
    "united",
    "run",
    "book",
    "gave",
    "order",
    "open",
    "ground",
    "cold",
    "really",
    "table",
    "remember",
    "tree",
    "course",
    "front",
    "american",
    "space",
    "inside",
    "ago",
    "sad",
    "early",
    "lead",
    "hours",
    "war",
    "bring",
    "problem",
    "quality",
    "service",
    "online",
    "free",
    "business",
    "customers",
    "product",
    "design",
    "experience",
    "website",
    "information",
    "email",
    "market",
    "content",
    "team",
    "share",
];

const BOILERPLATE: &[&str] = &[
    "Home About Services Products Blog News Events Gallery Contact Privacy Policy Terms of Use Sitemap",
    "This website uses cookies to ensure you get the best experience on our website. By continuing to browse the site you are agreeing to our use of cookies. Accept Decline Learn more",
    "Subscribe to our newsletter and get the latest updates, exclusive offers, and special discounts delivered straight to your inbox every week. Enter your email address Subscribe Now",
    "Copyright All rights reserved. No part of this publication may be reproduced, distributed, or transmitted in any form without the prior written permission of the publisher.",
    "Share this post on Facebook Twitter LinkedIn Pinterest WhatsApp Email Print Leave a Reply Cancel reply Your email address will not be published. Required fields are marked",
    "Posted in news, updates, community by the editorial team. Tagged with tips, guide, review, tutorial, best practices. Bookmark the permalink. Comments are closed.",
    "Free shipping on all orders over fifty dollars. Thirty day money back guarantee. Customer support available twenty four hours a day, seven days a week. Shop Now",
    "Related articles you might also like: previous post next post popular posts recent comments archives categories meta log in entries feed comments feed",
];

pub struct TextGen {
    rng: ChaCha8Rng,
    cumulative: Vec<f64>,
    boilerplate_rate: f64,
}

impl TextGen {
    pub fn new(seed: u64) -> Self {
        Self::with_boilerplate_rate(seed, 0.35)
    }

    pub fn with_boilerplate_rate(seed: u64, boilerplate_rate: f64) -> Self {
        // Zipf-ish weights over the rank-ordered word list.
        let mut cumulative = Vec::with_capacity(WORDS.len());
        let mut acc = 0.0;
        for rank in 0..WORDS.len() {
            acc += 1.0 / (rank as f64 + 2.7).powf(1.05);
            cumulative.push(acc);
        }
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cumulative,
            boilerplate_rate,
        }
    }

    fn word(&mut self) -> &'static str {
        let total = *self.cumulative.last().unwrap();
        let x: f64 = self.rng.random_range(0.0..total);
        let idx = self.cumulative.partition_point(|&c| c < x);
        WORDS[idx.min(WORDS.len() - 1)]
    }

    fn sentence(&mut self) -> String {
        let n_words = self.rng.random_range(5..18);
        let mut s = String::new();
        for i in 0..n_words {
            let w = self.word();
            if i == 0 {
                let mut chars = w.chars();
                if let Some(first) = chars.next() {
                    s.push(first.to_ascii_uppercase());
                    s.push_str(chars.as_str());
                }
            } else {
                s.push(' ');
                if self.rng.random_range(0..24) == 0 {
                    s.push_str(&w.to_ascii_uppercase()[..1.min(w.len())]);
                    s.push_str(&w[1.min(w.len())..]);
                } else {
                    s.push_str(w);
                }
            }
            if i + 1 < n_words && self.rng.random_range(0..12) == 0 {
                s.push(',');
            }
        }
        match self.rng.random_range(0..12) {
            0 => s.push('?'),
            1 => s.push('!'),
            _ => s.push('.'),
        }
        s
    }

    fn paragraph(&mut self) -> String {
        let n = self.rng.random_range(2..7);
        (0..n)
            .map(|_| self.sentence())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn document(&mut self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if self.rng.random_bool(self.boilerplate_rate) {
            let i = self.rng.random_range(0..BOILERPLATE.len());
            parts.push(BOILERPLATE[i].to_string());
        }
        let n = self.rng.random_range(2..8);
        for _ in 0..n {
            parts.push(self.paragraph());
        }
        if self.rng.random_bool(self.boilerplate_rate) {
            let i = self.rng.random_range(0..BOILERPLATE.len());
            parts.push(BOILERPLATE[i].to_string());
        }
        parts.join("\n")
    }

    /// Blank-line separated documents totalling roughly `target_bytes`.
    pub fn corpus_text(&mut self, target_bytes: usize) -> String {
        let mut out = String::with_capacity(target_bytes + 4_096);
        while out.len() < target_bytes {
            if !out.is_empty() {
                out.push_str("\n\n");
            }
            out.push_str(&self.document());
        }
        out
    }
}

/// Documents -> concatenated stream -> examples, entirely in memory.
pub fn generated_examples(target_bytes: usize, seed: u64, example_len: usize) -> Vec<Example> {
    let text = TextGen::new(seed).corpus_text(target_bytes);
    let docs: Vec<Document> = text
        .split("\n\n")
        .map(|d| Document::new(d.as_bytes().to_vec()).unwrap())
        .collect();
    let stream = concatenate(&docs, 128).unwrap();
    split_examples(&stream, example_len).unwrap()
}

/// Random symbol sequences over the full 257-symbol alphabet.
pub fn random_symbol_sequences(count: usize, max_len: usize, seed: u64) -> Vec<Vec<u16>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len).map(|_| rng.random_range(0..257)).collect()
        })
        .collect()
}

/// Exact big-integer oracle for the coder, shared by the oracle tests and
/// the acceptance suite.
pub mod oracle {
    use num_bigint::BigUint;

    use eqtok::coder::CdfSource;
    use eqtok::model::QuantizedCdf;
    use eqtok::BitStream;

    /// Infinite-precision interval for a symbol sequence under a CDF
    /// source: (lo, size, den_exp) with the interval [lo, lo+size)/2^den_exp
    /// and size the product of quantized widths.
    pub fn rational_interval<S: CdfSource>(
        symbols: &[u16],
        source: &mut S,
    ) -> (BigUint, BigUint, u64) {
        source.reset();
        let mut lo = BigUint::ZERO;
        let mut size = BigUint::from(1u32);
        let mut den_exp = 0u64;
        for &sym in symbols {
            let cdf = source.next_cdf().unwrap();
            lo = &lo * BigUint::from(cdf.total()) + &size * BigUint::from(cdf.low(sym));
            size *= BigUint::from(cdf.width(sym));
            den_exp += cdf.beta() as u64;
            source.observe(sym).unwrap();
        }
        (lo, size, den_exp)
    }

    /// `-ceil(log2 p) + 1` for p = size / 2^den_exp.
    pub fn ideal_code_length(size: &BigUint, den_exp: u64) -> u64 {
        den_exp - (size.bits() - 1) + 1
    }

    /// `encoded_len <= -log2(size/2^den_exp) + 2`, exactly.
    pub fn within_two_bits_of_ideal(encoded_len: usize, size: &BigUint, den_exp: u64) -> bool {
        (size.clone() << encoded_len) <= (BigUint::from(1u32) << (den_exp + 2))
    }

    /// The bitstream's dyadic interval is enclosed by the rational interval.
    pub fn bits_enclosed_by(bits: &BitStream, lo: &BigUint, size: &BigUint, den_exp: u64) -> bool {
        let mut v = BigUint::ZERO;
        for b in bits.iter() {
            v = (v << 1u8) + BigUint::from(u8::from(b));
        }
        let k = bits.len() as u64;
        let lhs_low = v.clone() << den_exp;
        let rhs_low = lo.clone() << k;
        let lhs_high = (v + 1u32) << den_exp;
        let rhs_high = (lo + size) << k;
        lhs_low >= rhs_low && lhs_high <= rhs_high
    }

    /// A dyadic 4-symbol distribution: widths 1/2, 1/4, 1/8, 1/8.
    pub fn dyadic4(beta: u8) -> QuantizedCdf {
        let total = 1u64 << beta;
        QuantizedCdf::from_weights(&[total / 2, total / 4, total / 8, total / 8], beta).unwrap()
    }

    pub fn all_sequences(alphabet: u16, len: usize) -> Vec<Vec<u16>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|s| {
                    (0..alphabet).map(move |x| {
                        let mut t = s.clone();
                        t.push(x);
                        t
                    })
                })
                .collect();
        }
        out
    }
}
