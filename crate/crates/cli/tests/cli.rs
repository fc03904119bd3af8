use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "--embdims",
    "8",
    "--rnndims",
    "12",
    "--txtlen",
    "12",
    "--astlen",
    "16",
    "--comlen",
    "6",
    "--batch-size",
    "4",
];

fn codesum(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_codesum"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    for (k, _) in std::env::vars() {
        if k.starts_with("CODESUM_") && !envs.iter().any(|(e, _)| *e == k) {
            cmd.env_remove(k);
        }
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = codesum(args, &[]);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(SMALL.iter().copied()).collect()
}

/// Six projects of getters, setters and closers with JavaDoc.
fn java_tree(root: &Path) {
    let fields = [
        "name", "size", "count", "value", "path", "label", "owner", "color",
    ];
    for (pi, project) in ["apple", "birch", "cedar", "daisy", "elm", "fern"]
        .iter()
        .enumerate()
    {
        let mut class = String::from("public class Item {\n");
        for (fi, f) in fields
            .iter()
            .enumerate()
            .filter(|(fi, _)| (fi + pi) % 2 == 0)
        {
            let cap = format!("{}{}", f[..1].to_uppercase(), &f[1..]);
            class.push_str(&format!(
                "  /** Returns the {f} of the item. */\n  public String get{cap}() {{ return {f}; }}\n\
                 \x20 /** Sets the {f} of the item. */\n  public void set{cap}(String {f}) {{ this.{f} = {f}; }}\n"
            ));
            if fi % 3 == 0 {
                class.push_str(&format!(
                    "  /** Closes the {f} stream. */\n  public void close{cap}() {{ try {{ {f}.close(); }} catch (Exception e) {{ }} }}\n"
                ));
            }
        }
        class.push_str("}\n");
        let dir = root.join(project).join("src");
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("Item.java"), class).unwrap();
    }
}

struct Fixture {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        java_tree(&root.join("src"));
        Fixture { _tmp: tmp, root }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn prep(&self, out: &str) -> PathBuf {
        let out = self.path(out);
        ok(&with_small(&[
            "prep",
            "--input",
            p(&self.path("src")),
            "--out",
            p(&out),
        ]));
        out
    }

    fn train(&self, data: &Path, out: &str, extra: &[&str]) -> PathBuf {
        let out = self.path(out);
        let mut args = with_small(&["train", "--dataset", p(data), "--out", p(&out)]);
        if !extra.contains(&"--epochs") {
            args.extend(["--epochs", "2"]);
        }
        args.extend(extra);
        ok(&args);
        out
    }
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn full_pipeline_is_reproducible() {
    let fx = Fixture::new();
    let d1 = fx.prep("data1");
    let d2 = fx.prep("data2");
    for f in [
        "train.tsv",
        "valid.tsv",
        "test.tsv",
        "vocab.txt.tsv",
        "vocab.ast.tsv",
        "vocab.com.tsv",
        "vocab.sbt.tsv",
        "prep_stats.json",
    ] {
        assert_eq!(
            read(&d1.join(f)),
            read(&d2.join(f)),
            "{f} differs between runs"
        );
    }
    let stats: serde_json::Value =
        serde_json::from_slice(&read(&d1.join("prep_stats.json"))).unwrap();
    assert!(stats["records"].as_u64().unwrap() > 50);

    let r1 = fx.train(&d1, "run1", &[]);
    let r2 = fx.train(&d1, "run2", &[]);
    assert_eq!(read(&r1.join("model.ckpt")), read(&r2.join("model.ckpt")));
    assert_eq!(
        read(&r1.join("checkpoints/epoch-002.ckpt")),
        read(&r2.join("checkpoints/epoch-002.ckpt"))
    );
    let report: serde_json::Value = serde_json::from_slice(&read(&r1.join("report.json"))).unwrap();
    assert_eq!(report["epochs"].as_array().unwrap().len(), 2);
    let sel = report["selected_epoch"].as_u64().unwrap();
    assert!((1..=2).contains(&sel));

    let ckpt = r1.join("model.ckpt");
    for out in ["pred1", "pred2"] {
        ok(&[
            "predict",
            "--checkpoint",
            p(&ckpt),
            "--dataset",
            p(&d1),
            "--out",
            p(&fx.path(out)),
        ]);
    }
    let preds = read(&fx.path("pred1/predictions.tsv"));
    assert_eq!(preds, read(&fx.path("pred2/predictions.tsv")));
    let test_rows = String::from_utf8(read(&d1.join("test.tsv")))
        .unwrap()
        .lines()
        .count();
    assert_eq!(String::from_utf8(preds).unwrap().lines().count(), test_rows);

    let e = fx.path("eval");
    ok(&[
        "eval",
        "--predictions",
        p(&fx.path("pred1/predictions.tsv")),
        "--references",
        p(&fx.path("pred1/references.tsv")),
        "--versus",
        p(&fx.path("pred1/references.tsv")),
        "--out",
        p(&e),
    ]);
    let eval: serde_json::Value = serde_json::from_slice(&read(&e.join("eval.json"))).unwrap();
    assert!(eval["composite"].as_f64().unwrap() >= 0.0);
    assert_eq!(eval["bleu"].as_array().unwrap().len(), 4);
    assert_eq!(eval["methods"].as_u64().unwrap() as usize, test_rows);
    assert_eq!(
        eval["versus"]["a_better"].as_u64().unwrap()
            + eval["versus"]["b_better"].as_u64().unwrap()
            + eval["versus"]["ties"].as_u64().unwrap(),
        test_rows as u64
    );
    let per = String::from_utf8(read(&e.join("permethod.tsv"))).unwrap();
    assert_eq!(per.lines().count(), test_rows + 1);
    assert!(e.join("versus.tsv").exists());

    // An ensemble of a model with itself decodes like the model alone.
    let ens = fx.path("ens");
    ok(&[
        "ensemble",
        "--checkpoint",
        p(&ckpt),
        "--checkpoint",
        p(&ckpt),
        "--dataset",
        p(&d1),
        "--out",
        p(&ens),
    ]);
    assert_eq!(
        read(&ens.join("predictions.tsv")),
        read(&fx.path("pred1/predictions.tsv"))
    );

    let run: serde_json::Value = serde_json::from_slice(&read(&r1.join("run.json"))).unwrap();
    assert_eq!(run["command"], "train");
    assert_eq!(run["settings"]["embdims"], 8);
    assert_eq!(run["settings"]["kind"], "ast-attendgru");
}

#[test]
fn attention_export() {
    let fx = Fixture::new();
    let data = fx.prep("data");
    let run = fx.train(&data, "run", &["--epochs", "1"]);
    let test = String::from_utf8(read(&data.join("test.tsv"))).unwrap();
    let id = test
        .lines()
        .next()
        .unwrap()
        .split('\t')
        .next()
        .unwrap()
        .to_string();
    let ckpt = run.join("model.ckpt");
    let mut outputs = Vec::new();
    for out in ["att1", "att2"] {
        let out = fx.path(out);
        ok(&[
            "attention",
            "--checkpoint",
            p(&ckpt),
            "--dataset",
            p(&data),
            "--method-id",
            &id,
            "--out",
            p(&out),
        ]);
        outputs.push(out);
    }
    for (name, width) in [("txt_attn.csv", 12), ("ast_attn.csv", 16)] {
        let text = String::from_utf8(read(&outputs[0].join(name))).unwrap();
        assert_eq!(read(&outputs[0].join(name)), read(&outputs[1].join(name)));
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 6);
        for row in rows {
            let vals: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(vals.len(), width);
            assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-5);
        }
    }

    let bad = codesum(
        &[
            "attention",
            "--checkpoint",
            p(&ckpt),
            "--dataset",
            p(&data),
            "--method-id",
            "999999",
            "--out",
            p(&fx.path("att3")),
        ],
        &[],
    );
    assert!(!bad.status.success());
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("available ids") && err.contains(&id), "{err}");
}

#[test]
fn flags_beat_environment_beats_config_file() {
    let fx = Fixture::new();
    let cfg = fx.path("run.toml");
    std::fs::write(
        &cfg,
        "seed = 11\nepochs = 4\nlr = 0.5\nsmoothing = \"epsilon\"\n",
    )
    .unwrap();
    let refs = fx.path("refs.tsv");
    std::fs::write(&refs, "1\tsets the name\n").unwrap();
    let out = fx.path("e");
    let args = [
        "--config",
        p(&cfg),
        "--seed",
        "13",
        "eval",
        "--predictions",
        p(&refs),
        "--references",
        p(&refs),
        "--out",
        p(&out),
    ];
    let res = codesum(&args, &[("CODESUM_SEED", "12"), ("CODESUM_EPOCHS", "5")]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let run: serde_json::Value = serde_json::from_slice(&read(&out.join("run.json"))).unwrap();
    let s = &run["settings"];
    assert_eq!(
        (s["seed"].as_u64(), s["epochs"].as_u64(), s["lr"].as_f64()),
        (Some(13), Some(5), Some(0.5))
    );
    assert_eq!(s["smoothing"], "epsilon:0.1");
    assert_eq!(s["batch_size"], 32);
}

#[test]
fn failures_exit_nonzero_without_partial_outputs() {
    let fx = Fixture::new();
    let data = fx.prep("data");
    let out = fx.path("run");
    let res = codesum(
        &with_small(&[
            "train",
            "--dataset",
            p(&data),
            "--out",
            p(&out),
            "--epochs",
            "0",
        ]),
        &[],
    );
    assert!(!res.status.success());
    assert!(!out.join("model.ckpt").exists());
    assert!(!out.join("report.json").exists());

    let res = codesum(
        &[
            "prep",
            "--input",
            p(&fx.path("missing.tsv")),
            "--out",
            p(&fx.path("d")),
        ],
        &[],
    );
    assert!(!res.status.success());

    std::fs::write(fx.path("bad.toml"), "sede = 1\n").unwrap();
    let res = codesum(
        &[
            "--config",
            p(&fx.path("bad.toml")),
            "prep",
            "--input",
            p(&fx.path("src")),
            "--out",
            p(&fx.path("d2")),
        ],
        &[],
    );
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("sede"));
}
