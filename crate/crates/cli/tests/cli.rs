use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cpmi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpmi"))
        .current_dir(dir)
        .env_remove("CPMI_OUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn read(dir: &Path, rel: &str) -> String {
    fs::read_to_string(dir.join(rel)).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        cpmi(d.path(), &["decode", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(
        cpmi(d.path(), &["decode", "--scores", "x"]).status.code(),
        Some(2)
    );
    assert_eq!(
        cpmi(
            d.path(),
            &["decode", "--mst", "--projective", "--scores", "x"]
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(cpmi(d.path(), &["nope"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_1() {
    let d = tempfile::tempdir().unwrap();
    let o = cpmi(d.path(), &["decode", "--mst", "--scores", "missing.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.jsonl"));

    fs::write(d.path().join("bad.jsonl"), "{\"v\":1}\n").unwrap();
    assert_eq!(
        cpmi(d.path(), &["build-matrix", "--scores", "bad.jsonl"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn released_sentence_scores_half() {
    let d = tempfile::tempdir().unwrap();
    let o = cpmi(
        d.path(),
        &[
            "--out", "ev", "eval", "--pred", "linear", "--gold", "@sample",
        ],
    );
    assert!(o.status.success());
    let sentences = read(d.path(), "ev/sentences.csv");
    assert!(
        sentences.lines().any(|l| l == "s1,7,0.500000,true"),
        "{sentences}"
    );
    let report = read(d.path(), "ev/report.csv");
    assert!(report.starts_with("# cpmi config="));
    assert!(report.contains("model,len1_recall,1.000000"));
    assert!(report.contains("model,len_gt1_precision,-"));
    let json: serde_json::Value = serde_json::from_str(&read(d.path(), "ev/report.json")).unwrap();
    assert_eq!(json["report"]["length_partition_averaging"], "micro");
    assert_eq!(json["seed"], 0);
}

#[test]
fn single_sentence_file() {
    let d = tempfile::tempdir().unwrap();
    let conllu = "1\tResults\t_\tNOUN\t_\t_\t3\tnsubj:pass\t_\t_\n\
                  2\twere\t_\tAUX\t_\t_\t3\taux:pass\t_\t_\n\
                  3\treleased\t_\tVERB\t_\t_\t0\troot\t_\t_\n\
                  4\tafter\t_\tSCONJ\t_\t_\t7\tmark\t_\t_\n\
                  5\tthe\t_\tDET\t_\t_\t6\tdet\t_\t_\n\
                  6\tmarket\t_\tNOUN\t_\t_\t7\tnsubj\t_\t_\n\
                  7\tclosed\t_\tVERB\t_\t_\t3\tadvcl\t_\t_\n";
    fs::write(d.path().join("one.conllu"), conllu).unwrap();
    assert!(cpmi(
        d.path(),
        &[
            "--out",
            "e",
            "eval",
            "--pred",
            "linear",
            "--gold",
            "one.conllu"
        ]
    )
    .status
    .success());
    assert!(read(d.path(), "e/report.csv").contains("model,mean_uuas,0.500000"));
}

#[test]
fn oracle_round_trip() {
    let d = tempfile::tempdir().unwrap();
    assert!(
        cpmi(d.path(), &["--out", "g", "oracle", "gen", "--preset", "l0"])
            .status
            .success()
    );
    let o = cpmi(
        d.path(),
        &["--out", "v", "oracle", "verify", "--lang", "g/L0.lang.json"],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "v/equivalence.json")).unwrap();
    assert_eq!(v["holds"], true);

    assert!(cpmi(
        d.path(),
        &["--out", "s", "oracle", "score", "--lang", "g/L0.lang.json"]
    )
    .status
    .success());
    let o = cpmi(
        d.path(),
        &[
            "--out",
            "val",
            "validate-scores",
            "--scores",
            "s/scores.jsonl",
        ],
    );
    assert!(o.status.success());
    let v = read(d.path(), "val/validation.tsv");
    assert_eq!(v.lines().filter(|l| l.ends_with("\tok")).count(), 3);

    let o = cpmi(
        d.path(),
        &[
            "--out",
            "t",
            "decode",
            "--projective",
            "--variant",
            "abs",
            "--sym",
            "sum",
            "--scores",
            "s/scores.jsonl",
        ],
    );
    assert!(o.status.success());
    let trees = read(d.path(), "t/trees.txt");
    assert!(trees.lines().any(|l| l == "a b\t1-2"));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(d.path(), "t/manifest.json")).unwrap();
    assert_eq!(manifest["inputs"][0]["path"], "s/scores.jsonl");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["artifacts"][0]["path"], "trees.txt");
}

#[test]
fn invalid_records_are_reported() {
    let d = tempfile::tempdir().unwrap();
    let line = r#"{"v":1,"sentence_id":"x","n":2,"mode":"bidirectional","target":"word","base":[-1.0,-1.0],"drop":[[-1.0,-2.0],[-2.0,null]],"provenance":""}"#;
    fs::write(d.path().join("r.jsonl"), format!("{line}\n")).unwrap();
    let o = cpmi(
        d.path(),
        &["--out", "v", "validate-scores", "--scores", "r.jsonl"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(read(d.path(), "v/validation.tsv").contains("diagonal defined"));
}

#[test]
fn out_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cpmi"))
        .current_dir(d.path())
        .env("CPMI_OUT_DIR", "from-env")
        .args(["baseline", "--kind", "linear", "--corpus", "@sample"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let trees = read(d.path(), "from-env/trees.txt");
    assert!(trees.lines().nth(1).unwrap().starts_with("s1\t1-2,2-3"));
}

#[test]
fn seeds_change_random_baselines() {
    let d = tempfile::tempdir().unwrap();
    for (out, seed) in [("a", "1"), ("b", "2"), ("c", "1")] {
        let o = cpmi(
            d.path(),
            &[
                "--out",
                out,
                "--seed",
                seed,
                "baseline",
                "--kind",
                "random-mst",
                "--corpus",
                "@sample",
            ],
        );
        assert!(o.status.success());
    }
    let body = |o: &str| {
        read(d.path(), &format!("{o}/trees.txt"))
            .lines()
            .skip(1)
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_ne!(body("a"), body("b"));
    assert_eq!(read(d.path(), "a/trees.txt"), read(d.path(), "c/trees.txt"));
    assert!(read(d.path(), "a/trees.txt").starts_with("# cpmi config="));
    assert!(read(d.path(), "a/trees.txt")
        .lines()
        .next()
        .unwrap()
        .ends_with("seed=1"));
}

#[test]
fn w2v_pipeline_feeds_report() {
    let d = tempfile::tempdir().unwrap();
    let ok = |args: &[&str]| assert!(cpmi(d.path(), args).status.success(), "{args:?}");
    ok(&[
        "--out", "w", "w2v", "train", "--corpus", "@sample", "--dim", "4", "--epochs", "1",
    ]);
    ok(&[
        "--out",
        "p",
        "w2v",
        "pmi",
        "--embeddings",
        "w/embeddings.bin",
        "--corpus",
        "@sample",
    ]);
    ok(&[
        "--out",
        "t",
        "decode",
        "--mst",
        "--matrices",
        "p/matrices.jsonl",
    ]);
    ok(&[
        "--out",
        "r",
        "report",
        "--gold",
        "@sample",
        "--pred",
        "w2v=t/trees.txt",
        "--pred",
        "linear=linear",
    ]);
    let jac = read(d.path(), "r/jaccard.csv");
    assert!(jac.lines().any(|l| l.starts_with("w2v,linear,")));
    assert!(read(d.path(), "p/matrices.jsonl").contains("\"variant\":\"signed\""));
}

#[test]
fn report_fits_perplexity() {
    let d = tempfile::tempdir().unwrap();
    // Scores for three sample sentences with distinct perplexities.
    let mut lines = String::new();
    for (id, n, base) in [("s2", 7, -1.0), ("s3", 6, -2.0), ("s4", 6, -3.0)] {
        let drop: Vec<Vec<Option<f64>>> = (0..n)
            .map(|i| (0..n).map(|j| (i != j).then_some(base - 0.5)).collect())
            .collect();
        let rec = serde_json::json!({
            "v": 1, "sentence_id": id, "n": n, "mode": "bidirectional", "target": "word",
            "base": vec![base; n], "drop": drop, "provenance": "test"
        });
        lines.push_str(&rec.to_string());
        lines.push('\n');
    }
    fs::write(d.path().join("s.jsonl"), lines).unwrap();
    let o = cpmi(
        d.path(),
        &[
            "--out",
            "r",
            "report",
            "--gold",
            "@sample",
            "--pred",
            "lin=linear",
            "--scores",
            "lin=s.jsonl",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ppl = read(d.path(), "r/ppl.csv");
    assert!(ppl.lines().any(|l| l.starts_with("lin,3,")), "{ppl}");
}
