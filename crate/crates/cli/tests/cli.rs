use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use depnet_core::format::{parse_bayesnet, parse_dataset, parse_depnet, parse_joint};
use tempfile::TempDir;

fn depnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depnet"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = depnet(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// gen-ising, sample-true, learn-dn, learn-bn and sample into `dir`.
fn pipeline(dir: &TempDir) -> Vec<PathBuf> {
    let truth = path(dir, "truth.txt");
    let train = path(dir, "train.txt");
    let dn = path(dir, "dn.txt");
    let bn = path(dir, "bn.txt");
    let outs = path(dir, "outs.txt");
    ok(&[
        "gen-ising",
        "--rows",
        "2",
        "--cols",
        "2",
        "--out",
        s(&truth),
    ]);
    ok(&[
        "sample-true",
        "--truth",
        s(&truth),
        "--n",
        "4000",
        "--seed",
        "5",
        "--out",
        s(&train),
    ]);
    ok(&["learn-dn", "--data", s(&train), "--out", s(&dn)]);
    ok(&[
        "learn-bn",
        "--data",
        s(&train),
        "--penalty",
        "aic",
        "--out",
        s(&bn),
    ]);
    ok(&[
        "sample",
        "--model",
        s(&dn),
        "--samples",
        "5000",
        "--seed",
        "9",
        "--out",
        s(&outs),
    ]);
    vec![truth, train, dn, bn, outs]
}

#[test]
fn pipeline_files_parse() {
    let dir = TempDir::new().unwrap();
    let files = pipeline(&dir);
    let read = |i: usize| fs::read_to_string(&files[i]).unwrap();
    let truth = parse_joint(&read(0)).unwrap();
    assert_eq!(truth.space().cards(), &[2, 2, 2, 2]);
    assert_eq!(parse_dataset(&read(1)).unwrap().len(), 4000);
    assert_eq!(parse_depnet(&read(2)).unwrap().len(), 4);
    assert_eq!(parse_bayesnet(&read(3)).unwrap().len(), 4);
    assert_eq!(parse_dataset(&read(4)).unwrap().len(), 5000);
}

#[test]
fn reruns_are_bit_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for (x, y) in pipeline(&a).iter().zip(pipeline(&b)) {
        assert_eq!(
            fs::read(x).unwrap(),
            fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }
}

#[test]
fn eval_reports() {
    let dir = TempDir::new().unwrap();
    let files = pipeline(&dir);
    let kl = ok(&["eval", "--truth", s(&files[0]), "--outputs", s(&files[4])]);
    let mut lines = kl.lines();
    assert_eq!(lines.next(), Some("kl"));
    let v: f64 = lines.next().unwrap().parse().unwrap();
    assert!((0.0..0.05).contains(&v));

    let table = ok(&[
        "eval",
        "--truth",
        s(&files[0]),
        "--model",
        s(&files[2]),
        "--data",
        s(&files[1]),
    ]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "node\tinputs\tH\tH_cond\tkl_empirical\tkl_true");
    assert_eq!(lines.len(), 6);
    assert!(lines[5].starts_with("avg\t"));
}

#[test]
fn eval_with_both_inputs_is_rejected() {
    let dir = TempDir::new().unwrap();
    let files = pipeline(&dir);
    let out = depnet(&[
        "eval",
        "--truth",
        s(&files[0]),
        "--outputs",
        s(&files[4]),
        "--model",
        s(&files[2]),
    ]);
    assert!(!out.status.success());
}

#[test]
fn infer_estimates_a_distribution() {
    let dir = TempDir::new().unwrap();
    let files = pipeline(&dir);
    let text = ok(&[
        "infer",
        "--model",
        s(&files[2]),
        "--query",
        "0,3",
        "--clamp",
        "1=1",
        "2=0",
        "--samples",
        "20000",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x0\tx3\tp"));
    let ps: Vec<f64> = lines
        .map(|l| l.rsplit('\t').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ps.len(), 4);
    assert!((ps.iter().sum::<f64>() - 1.0).abs() < 1e-5);
}

#[test]
fn clamped_samples_hold_evidence() {
    let dir = TempDir::new().unwrap();
    let files = pipeline(&dir);
    let text = ok(&[
        "sample",
        "--model",
        s(&files[2]),
        "--samples",
        "200",
        "--mode",
        "ordered",
        "--clamp",
        "3=1",
    ]);
    let d = parse_dataset(&text).unwrap();
    assert!(d.rows().all(|r| r[3] == 1));
}

#[test]
fn bayesnet_files_sample_ancestrally() {
    let dir = TempDir::new().unwrap();
    let bn = path(&dir, "gen.txt");
    ok(&[
        "gen-bn",
        "--nodes",
        "6",
        "--edges",
        "7",
        "--seed",
        "4",
        "--out",
        s(&bn),
    ]);
    let net = parse_bayesnet(&fs::read_to_string(&bn).unwrap()).unwrap();
    assert_eq!(net.edge_count(), 7);
    let d = parse_dataset(&ok(&["sample", "--model", s(&bn), "--samples", "50"])).unwrap();
    assert_eq!(d.len(), 50);
    let joint = parse_joint(&ok(&[
        "gen-bn", "--nodes", "6", "--edges", "7", "--seed", "4", "--joint",
    ]))
    .unwrap();
    assert_eq!(joint.probs().len(), 64);
}

#[test]
fn verify_theorems_tsv() {
    let text = ok(&["verify-theorems", "--trials", "5", "--max-n", "3"]);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("trial\tn\tslack"));
    assert_eq!(lines.len(), 6);
    for l in &lines[1..] {
        let slack: f64 = l.split('\t').nth(2).unwrap().parse().unwrap();
        assert!(slack >= -1e-9);
    }
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = depnet(&["sample", "--model", "/nonexistent/model.txt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    assert!(!depnet(&["sample", "--model", "x", "--clamp", "3"])
        .status
        .success());
    assert!(!depnet(&["learn-dn", "--data", "x", "--penalty", "bic"])
        .status
        .success());
    assert!(!depnet(&["compare", "--bench", "nope"]).status.success());
}
