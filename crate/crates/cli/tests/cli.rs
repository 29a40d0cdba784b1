// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn catseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catseg"))
        .args(args)
        .env("CATSEG_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = catseg(args);
    assert!(
        out.status.success(),
        "catseg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn write(p: &str, text: &str) {
    fs::write(p, text).unwrap();
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

/// `retained=` value of the line starting with `label`.
fn retained(stdout: &str, label: &str) -> String {
    stdout
        .lines()
        .find(|l| l.starts_with(label))
        .and_then(|l| l.split('\t').find_map(|f| f.strip_prefix("retained=")))
        .unwrap_or_else(|| panic!("no {label} line in {stdout}"))
        .to_string()
}

#[test]
fn neh_on_constant_input_is_flat() {
    let dir = TempDir::new().unwrap();
    let fasta = path(&dir, "a.fa");
    write(&fasta, &format!(">const\n{}\n", "C".repeat(64)));
    let out = path(&dir, "est.csv");
    ok(&["estimate", "--input", &fasta, "--strategy", "neh", "--out", &out]);
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i,p1,p2,p3,p4"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 64);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(*row, format!("{},0,1,0,0", i + 1));
    }
}

#[test]
fn calibrated_constants_reproduce_hybrid_segments() {
    let dir = TempDir::new().unwrap();
    let fasta = path(&dir, "s1.fa");
    ok(&["simulate", "--signal", "s7", "--n", "1024", "--seed", "5", "--out", &fasta]);

    let internal = path(&dir, "internal.tsv");
    ok(&["segment", "--input", &fasta, "--out", &internal]);

    let cal = path(&dir, "cal.csv");
    let seg_cal = path(&dir, "seg_cal.csv");
    let stdout = ok(&[
        "calibrate",
        "--input",
        &fasta,
        "--target",
        "hybrid",
        "--out",
        &cal,
        "--segment-out",
        &seg_cal,
    ])
    .stdout;
    let stdout = String::from_utf8(stdout).unwrap();
    let haar_c = retained(&stdout, "haar");
    let seg_c = retained(&stdout, "segmentation");

    let external = path(&dir, "external.tsv");
    ok(&[
        "segment", "--input", &fasta, "--c", &haar_c, "--ei-c", &seg_c, "--out", &external,
    ]);
    let (a, b) = (read(&internal), read(&external));
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert!(read(&cal).starts_with("c,dimension\n0,"));
    assert!(read(&seg_cal).starts_with("c,dimension\n0,"));
}

#[test]
fn padding_is_reported_and_cropped() {
    let dir = TempDir::new().unwrap();
    let fasta = path(&dir, "odd.fa");
    let seq: String = (0..1000).map(|i| if (i / 100) % 2 == 0 { 'A' } else { 'G' }).collect();
    write(&fasta, &format!(">odd\n{seq}\n"));
    let out = path(&dir, "est.json");
    let res = ok(&[
        "estimate", "--input", &fasta, "--strategy", "neh", "--c", "1", "--n-policy",
        "pad-repeat-last", "--format", "json", "--out", &out,
    ]);
    let stderr = String::from_utf8(res.stderr).unwrap();
    assert!(stderr.contains("padded sequence from 1000 to 1024"), "{stderr}");
    let text = read(&out);
    assert!(text.contains("\"n\":1000"));
    assert!(text.contains("\"length_action\":\"padded\""));
    assert!(text.contains("\"original_length\":1000"));

    let segs = path(&dir, "segs.tsv");
    ok(&["segment", "--input", &fasta, "--n-policy", "pad-repeat-last", "--out", &segs]);
    let last = read(&segs).lines().last().unwrap().to_string();
    assert!(last.split('\t').nth(1) == Some("1000"), "{last}");

    let trunc = path(&dir, "trunc.csv");
    let res = ok(&["estimate", "--input", &fasta, "--strategy", "eh", "--out", &trunc]);
    assert!(String::from_utf8(res.stderr).unwrap().contains("truncated sequence from 1000 to 512"));
    assert_eq!(read(&trunc).lines().count(), 513);
}

#[test]
fn errors_map_to_distinct_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.fa");
    write(&bad, ">x\nACNT\n");
    let out = path(&dir, "o.csv");

    let res = catseg(&["estimate", "--input", &bad, "--out", &out]);
    let symbol = res.status.code().unwrap();
    let stderr = String::from_utf8(res.stderr).unwrap();
    assert!(stderr.contains("position 3") && stderr.contains('N'), "{stderr}");
    assert_eq!(stderr.lines().count(), 1);

    let odd = path(&dir, "odd.fa");
    write(&odd, ">x\nACGTA\n");
    let dyadic = catseg(&["estimate", "--input", &odd, "--n-policy", "reject", "--out", &out])
        .status
        .code()
        .unwrap();

    let missing = catseg(&["estimate", "--input", &path(&dir, "none.fa"), "--out", &out])
        .status
        .code()
        .unwrap();

    let good = path(&dir, "good.fa");
    write(&good, ">x\nACGTACGT\n");
    let level = catseg(&["estimate", "--input", &good, "--c", "1", "--jmax", "3", "--out", &out])
        .status
        .code()
        .unwrap();
    let penalty = catseg(&["estimate", "--input", &good, "--c=-1", "--out", &out])
        .status
        .code()
        .unwrap();

    let codes = [symbol, dyadic, missing, level, penalty];
    assert!(codes.iter().all(|&c| c != 0 && c != 2), "{codes:?}");
    let mut unique = codes.to_vec();
    unique.sort_unstable();
    unique.dedup();
    assert_eq!(unique.len(), codes.len(), "{codes:?}");

    // dropping invalid symbols instead
    let res = ok(&["estimate", "--input", &bad, "--on-invalid", "drop", "--strategy", "ei", "--out", &out]);
    assert!(String::from_utf8(res.stderr).unwrap().contains("dropped 1"));
    assert_eq!(read(&out).lines().count(), 4);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let fasta = path(&dir, "s.fa");
    ok(&["simulate", "--signal", "s2", "--n", "512", "--seed", "9", "--out", &fasta]);
    let again = path(&dir, "s2.fa");
    ok(&["simulate", "--signal", "s2", "--n", "512", "--seed", "9", "--out", &again]);
    assert_eq!(read(&fasta), read(&again));

    let mut outputs = Vec::new();
    for k in 0..2 {
        let est = path(&dir, &format!("e{k}.json"));
        let crit = path(&dir, &format!("c{k}.csv"));
        ok(&[
            "estimate", "--input", &fasta, "--strategy", "hybrid", "--format", "json", "--out",
            &est, "--criterion-out", &crit,
        ]);
        outputs.push((read(&est), read(&crit)));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].1.starts_with("candidate,dimension,criterion\n"));
}

#[test]
fn risk_table_has_one_row_per_constant() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "risk.csv");
    let res = ok(&[
        "risk", "--signal", "s1", "--n", "64", "--strategy", "neh", "--grid-step", "0.5",
        "--c-max", "2", "--seed", "3", "--out", &out,
    ]);
    let text = read(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "c1,c2,c,risk,replicates,converged");
    assert_eq!(rows.len(), 1 + 5);
    assert!(String::from_utf8(res.stdout).unwrap().starts_with("best\t"));

    let ei = path(&dir, "ei.csv");
    ok(&[
        "risk", "--signal", "s3", "--n", "32", "--strategy", "ei", "--grid-step", "0.5",
        "--c1-max", "0.5", "--c2-max", "1", "--dmax", "8", "--out", &ei,
    ]);
    assert_eq!(read(&ei).lines().count(), 1 + 2 * 3);
}

#[test]
fn segment_with_plain_segmentation() {
    let dir = TempDir::new().unwrap();
    let fasta = path(&dir, "two.fa");
    write(&fasta, &format!(">two\n{}{}\n", "A".repeat(40), "T".repeat(30)));
    let out = path(&dir, "segs.tsv");
    let est = path(&dir, "est.csv");
    ok(&[
        "segment", "--input", &fasta, "--strategy", "ei", "--penalty", "linear", "--c", "2",
        "--out", &out, "--estimate-out", &est,
    ]);
    assert_eq!(read(&out), "1\t40\t1\t0\t0\t0\n41\t70\t0\t0\t0\t1\n");
    assert_eq!(read(&est).lines().count(), 71);
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.fa");
    let res = Command::new(env!("CARGO_BIN_EXE_catseg"))
        .args(["simulate", "--signal", "s1", "--n", "16", "--out", &out])
        .env("CATSEG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn genome_scale_segmentation() {
    let dir = TempDir::new().unwrap();
    let fasta = path(&dir, "big.fa");
    let n = (1usize << 21).to_string();
    ok(&["simulate", "--signal", "s8", "--n", &n, "--seed", "1", "--out", &fasta]);
    let out = path(&dir, "big.tsv");

    // the default grid cannot reach the minimal model on this much signal
    let res = catseg(&["segment", "--input", &fasta, "--out", &out]);
    assert_eq!(res.status.code(), Some(11));
    assert!(String::from_utf8(res.stderr).unwrap().contains("--grid-step"));

    ok(&["segment", "--input", &fasta, "--grid-step", "1", "--out", &out]);
    let text = read(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows.len() > 1);
    assert!(rows[0].starts_with("1\t"));
    assert!(rows.last().unwrap().split('\t').nth(1) == Some(n.as_str()));
}
