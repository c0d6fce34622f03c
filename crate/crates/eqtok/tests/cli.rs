//! End-to-end tests of the command-line surface, run as real processes.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::TextGen;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eqtok"))
}

fn write_corpus(dir: &Path, bytes: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("corpus-{seed}.txt"));
    std::fs::write(&path, TextGen::new(seed).corpus_text(bytes)).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn fit_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 40_000, 3);
    let digest_of = |out_name: &str| {
        let out = run_ok(bin().args([
            "fit",
            corpus.to_str().unwrap(),
            "--order",
            "2",
            "--out",
            dir.path().join(out_name).to_str().unwrap(),
        ]));
        String::from_utf8(out.stdout).unwrap().trim().to_string()
    };
    let first = digest_of("a.eqim");
    let second = digest_of("b.eqim");
    assert_eq!(first, second);
    assert_eq!(first.len(), 64);
    assert_eq!(
        std::fs::read(dir.path().join("a.eqim")).unwrap(),
        std::fs::read(dir.path().join("b.eqim")).unwrap()
    );
}

#[test]
fn fit_empty_corpus_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, b"").unwrap();
    let out = bin()
        .args([
            "fit",
            empty.to_str().unwrap(),
            "--order",
            "0",
            "--out",
            dir.path().join("m.eqim").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"), "stderr: {stderr}");
    assert!(stderr.contains("empty corpus"), "stderr: {stderr}");
}

#[test]
fn window_token_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 10_000, 4);
    let model = dir.path().join("m.eqim");
    run_ok(bin().args([
        "fit",
        corpus.to_str().unwrap(),
        "--order",
        "0",
        "--out",
        model.to_str().unwrap(),
    ]));
    let out = bin()
        .args([
            "compress",
            corpus.to_str().unwrap(),
            "--method",
            "eqinfo",
            "--window-bits",
            "12",
            "--token-bits",
            "8",
            "--model",
            model.to_str().unwrap(),
            "--out",
            dir.path().join("c.eqic").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("config-error:"), "stderr: {stderr}");
    assert!(stderr.contains("12"), "stderr: {stderr}");
}

#[test]
fn compress_decompress_roundtrip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 60_000, 5);
    let model = dir.path().join("m.eqim");
    run_ok(bin().args([
        "fit",
        corpus.to_str().unwrap(),
        "--order",
        "1",
        "--out",
        model.to_str().unwrap(),
    ]));
    let cases: [(&str, &[&str]); 3] = [
        ("eqinfo", &["--window-bits", "32", "--variant", "zeroavoid"]),
        ("ac", &[]),
        ("gzip", &[]),
    ];
    for (method, extra) in cases {
        let container = dir.path().join(format!("{method}.eqic"));
        let restored = dir.path().join(format!("{method}.out.txt"));
        let mut cmd = bin();
        cmd.args([
            "compress",
            corpus.to_str().unwrap(),
            "--method",
            method,
            "--model",
            model.to_str().unwrap(),
            "--out",
            container.to_str().unwrap(),
        ]);
        cmd.args(extra);
        run_ok(&mut cmd);
        run_ok(bin().args([
            "decompress",
            container.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--out",
            restored.to_str().unwrap(),
        ]));
        assert_eq!(
            std::fs::read(&corpus).unwrap(),
            std::fs::read(&restored).unwrap(),
            "roundtrip through {method} changed bytes"
        );
    }
}

#[test]
fn gzip_strip_framing_shrinks_by_exactly_six_bytes_per_example() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 120_000, 6);
    let framed = dir.path().join("framed.eqic");
    let stripped = dir.path().join("stripped.eqic");
    let compress = |out: &Path, strip: bool| {
        let mut cmd = bin();
        cmd.args([
            "compress",
            corpus.to_str().unwrap(),
            "--method",
            "gzip",
            "--example-len",
            "10240",
            "--out",
            out.to_str().unwrap(),
        ]);
        if strip {
            cmd.arg("--strip-framing");
        }
        run_ok(&mut cmd);
    };
    compress(&framed, false);
    compress(&stripped, true);
    let framed_len = std::fs::metadata(&framed).unwrap().len();
    let stripped_len = std::fs::metadata(&stripped).unwrap().len();
    // Independent count of framing bytes: 6 per example (2-byte header,
    // 4-byte checksum), examples counted from the corpus size.
    let symbols = {
        let text = std::fs::read(&corpus).unwrap();
        let docs = text.split(|&b| b == b'\n').count(); // not exact; use stdout instead
        let _ = docs;
        text.len()
    };
    let _ = symbols;
    let examples: u64 = {
        let out = run_ok(bin().args(["stats", framed.to_str().unwrap()]));
        let stdout = String::from_utf8(out.stdout).unwrap();
        let row = stdout.lines().find(|l| l.starts_with("gzip,")).unwrap();
        row.split(',').nth(4).unwrap().parse().unwrap()
    };
    assert_eq!(framed_len - stripped_len, 6 * examples);
    // The framing's impact on measured bits/byte is tiny at this example
    // length: 48 bits over 10,240 symbols.
    let corpus_symbols = std::fs::read(&corpus).unwrap().len() as f64;
    let delta_bits_per_byte = (6.0 * 8.0 * examples as f64) / corpus_symbols;
    assert!(
        delta_bits_per_byte < 0.02,
        "framing costs {delta_bits_per_byte} bits/byte"
    );
    // Decompression still works without the framing.
    let restored = dir.path().join("restored.txt");
    run_ok(bin().args([
        "decompress",
        stripped.to_str().unwrap(),
        "--out",
        restored.to_str().unwrap(),
    ]));
    assert_eq!(
        std::fs::read(&corpus).unwrap(),
        std::fs::read(&restored).unwrap()
    );
}

#[test]
fn digest_mismatch_fails_with_both_digests() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 30_000, 7);
    let other_corpus = write_corpus(dir.path(), 30_000, 8);
    let model_a = dir.path().join("a.eqim");
    let model_b = dir.path().join("b.eqim");
    let fit = |corpus: &Path, out: &Path| {
        let stdout = run_ok(bin().args([
            "fit",
            corpus.to_str().unwrap(),
            "--order",
            "0",
            "--out",
            out.to_str().unwrap(),
        ]))
        .stdout;
        String::from_utf8(stdout).unwrap().trim().to_string()
    };
    let digest_a = fit(&corpus, &model_a);
    let digest_b = fit(&other_corpus, &model_b);
    assert_ne!(digest_a, digest_b);
    let container = dir.path().join("c.eqic");
    run_ok(bin().args([
        "compress",
        corpus.to_str().unwrap(),
        "--method",
        "ac",
        "--model",
        model_a.to_str().unwrap(),
        "--out",
        container.to_str().unwrap(),
    ]));
    let out = bin()
        .args([
            "decompress",
            container.to_str().unwrap(),
            "--model",
            model_b.to_str().unwrap(),
            "--out",
            dir.path().join("x.txt").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains(&digest_a) && stderr.contains(&digest_b),
        "stderr: {stderr}"
    );
}

#[test]
fn tokenize_detokenize_restores_container_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 50_000, 9);
    let model = dir.path().join("m.eqim");
    run_ok(bin().args([
        "fit",
        corpus.to_str().unwrap(),
        "--order",
        "1",
        "--out",
        model.to_str().unwrap(),
    ]));
    let container = dir.path().join("c.eqic");
    run_ok(bin().args([
        "compress",
        corpus.to_str().unwrap(),
        "--method",
        "eqinfo",
        "--window-bits",
        "16",
        "--token-bits",
        "8",
        "--model",
        model.to_str().unwrap(),
        "--out",
        container.to_str().unwrap(),
    ]));
    let tokens = dir.path().join("c.eqit");
    run_ok(bin().args([
        "tokenize",
        container.to_str().unwrap(),
        "--out",
        tokens.to_str().unwrap(),
    ]));
    let rebuilt = dir.path().join("rebuilt.eqic");
    run_ok(bin().args([
        "detokenize",
        tokens.to_str().unwrap(),
        "--out",
        rebuilt.to_str().unwrap(),
    ]));
    assert_eq!(
        std::fs::read(&container).unwrap(),
        std::fs::read(&rebuilt).unwrap()
    );
}

#[test]
fn jobs_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 80_000, 10);
    let model = dir.path().join("m.eqim");
    run_ok(bin().args([
        "fit",
        corpus.to_str().unwrap(),
        "--order",
        "2",
        "--out",
        model.to_str().unwrap(),
    ]));
    let compress = |jobs: &str, out: &Path| {
        run_ok(bin().args([
            "compress",
            corpus.to_str().unwrap(),
            "--method",
            "eqinfo",
            "--window-bits",
            "16",
            "--model",
            model.to_str().unwrap(),
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]));
    };
    let serial = dir.path().join("serial.eqic");
    let parallel = dir.path().join("parallel.eqic");
    compress("1", &serial);
    compress("8", &parallel);
    assert_eq!(
        std::fs::read(&serial).unwrap(),
        std::fs::read(&parallel).unwrap()
    );
}

#[test]
fn stats_report_has_bytes_baseline_and_consistent_flops() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 50_000, 12);
    let model = dir.path().join("m.eqim");
    run_ok(bin().args([
        "fit",
        corpus.to_str().unwrap(),
        "--order",
        "0",
        "--out",
        model.to_str().unwrap(),
    ]));
    let container = dir.path().join("c.eqic");
    run_ok(bin().args([
        "compress",
        corpus.to_str().unwrap(),
        "--method",
        "static-ac",
        "--model",
        model.to_str().unwrap(),
        "--out",
        container.to_str().unwrap(),
    ]));
    let out = run_ok(bin().args([
        "stats",
        container.to_str().unwrap(),
        "--params",
        "25000000",
        "--m1-params",
        "3000000",
    ]));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].starts_with("method,window_bits,token_bits"));
    // Byte-identity baseline row: ratio 1, uniform 8 bits/byte.
    let bytes_row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(bytes_row[0], "bytes");
    assert_eq!(bytes_row[9], "1.000000");
    assert_eq!(bytes_row[11], "8.000000");
    // Method row: flops column equals 2p/ratio + 2*m1.
    let row: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(row[0], "static-ac");
    let token_ratio: f64 = row[9].parse().unwrap();
    let flops: f64 = row[16].parse().unwrap();
    let expected = 2.0 * 25e6 / token_ratio + 2.0 * 3e6;
    // token_ratio is read back from the CSV at 6 decimals, so allow the
    // propagated rounding.
    assert!(
        (flops - expected).abs() / expected < 1e-6,
        "flops {flops} vs {expected}"
    );
}

#[test]
fn entropy_rng_miller_madow_interval_contains_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("kl.csv");
    run_ok(bin().args([
        "entropy",
        "--rng",
        "--n",
        "8",
        "--rng-bits",
        "16000000",
        "--seed",
        "0",
        "--out",
        out_csv.to_str().unwrap(),
    ]));
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    let mut p5 = f64::NAN;
    let mut p95 = f64::NAN;
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(fields[0].starts_with("rng"));
        match fields[3] {
            "5" => p5 = fields[4].parse().unwrap(),
            "95" => p95 = fields[4].parse().unwrap(),
            _ => {}
        }
    }
    assert!(p5 < 0.0 && p95 > 0.0, "interval [{p5}, {p95}] misses 0");
}

#[test]
fn seq2seq_records_have_disjoint_id_spaces() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 20_000, 13);
    let model = dir.path().join("m.eqim");
    run_ok(bin().args([
        "fit",
        corpus.to_str().unwrap(),
        "--order",
        "1",
        "--out",
        model.to_str().unwrap(),
    ]));
    let out_jsonl = dir.path().join("s2s.jsonl");
    run_ok(bin().args([
        "seq2seq",
        corpus.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--direction",
        "both",
        "--token-bits",
        "8",
        "--out",
        out_jsonl.to_str().unwrap(),
    ]));
    let body = std::fs::read_to_string(&out_jsonl).unwrap();
    let mut saw_compress = false;
    let mut saw_decompress = false;
    for line in body.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let inputs = v["inputs"].as_array().unwrap();
        let targets = v["targets"].as_array().unwrap();
        assert!(!targets.is_empty());
        let max_in = inputs.iter().map(|x| x.as_u64().unwrap()).max().unwrap();
        let min_tgt = targets.iter().map(|x| x.as_u64().unwrap()).min().unwrap();
        assert!(max_in < min_tgt, "id spaces overlap: {max_in} vs {min_tgt}");
        match v["direction"].as_str().unwrap() {
            "compress" => saw_compress = true,
            "decompress" => saw_decompress = true,
            other => panic!("unexpected direction {other}"),
        }
    }
    assert!(saw_compress && saw_decompress);
}
