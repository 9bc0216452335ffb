use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use synsrl::model::Instance;
use synsrl::synthetic::random_srl_corpus;
use synsrl::treebank::{parse_props, write_conllx, write_props, PropsBlock};

const EXAMPLE_DEPS: &str = "\
1\tMs.\t_\tNNP\tNNP\t_\t2\tnn\t_\t_
2\tHaag\t_\tNNP\tNNP\t_\t3\tnsubj\t_\t_
3\tplays\t_\tVBZ\tVBZ\t_\t0\troot\t_\t_
4\tElianti\t_\tNNP\tNNP\t_\t3\tdobj\t_\t_
5\t.\t_\t.\t.\t_\t3\tpunct\t_\t_

";

const EXAMPLE_PROPS: &str = "-     (A0*\n-     *)\nplays (V*)\n-     (A1*)\n-     *\n\n";

fn synsrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synsrl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_corpus(dir: &Path, stem: &str, corpus: &[Instance]) -> (PathBuf, PathBuf) {
    let deps: Vec<_> = corpus
        .iter()
        .map(|i| (i.sentence.clone(), i.tree.clone().unwrap()))
        .collect();
    let blocks: Vec<_> = corpus
        .iter()
        .map(|i| PropsBlock::from_sentence(&i.sentence, i.frames.clone()).unwrap())
        .collect();
    (
        write(dir, &format!("{stem}.conllx"), &write_conllx(&deps)),
        write(dir, &format!("{stem}.props"), &write_props(&blocks).unwrap()),
    )
}

#[test]
fn features_reproduce_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let deps = write(dir.path(), "example_instance.conllx", EXAMPLE_DEPS);
    let props = write(dir.path(), "example_instance.props", EXAMPLE_PROPS);
    let rows = |mode: &str| -> Vec<String> {
        let o = synsrl(&["features", "--deps", s(&deps), "--props", s(&props), "--mode", mode]);
        assert!(o.status.success());
        stdout(&o).lines().skip(1).map(|l| l.split('\t').nth(4).unwrap().to_string()).collect()
    };
    let tpf = rows("tpf");
    assert_eq!(tpf[0], "(0,2)");
    assert_eq!(tpf[2], "(0,0)");
    let pe = rows("pe");
    assert_eq!(pe[0], "grandchild");
    assert_eq!(pe[2], "self");
    let sdp = rows("sdp");
    assert_eq!(sdp[0], "nn,nsubj,root|root");

    let o = synsrl(&["features", "--deps", s(&deps), "--mode", "tree-gru"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn evaluate_reports_scores() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write(dir.path(), "gold.props", EXAMPLE_PROPS);
    let pred = write(
        dir.path(),
        "pred.props",
        "-     (A0*\n-     *)\nplays (V*)\n-     (A1*\n-     *)\n\n",
    );
    let o = synsrl(&["evaluate", "--gold", s(&gold), "--pred", s(&pred), "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["F1"], 50.0);
    assert_eq!(v["Comp"], 0.0);

    let o = synsrl(&["evaluate", "--gold", s(&gold), "--pred", s(&gold)]);
    assert!(stdout(&o).contains("100.00"));
}

#[test]
fn analyze_writes_json_and_text() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write(dir.path(), "gold.props", EXAMPLE_PROPS);
    let deps = write(dir.path(), "example_instance.conllx", EXAMPLE_DEPS);
    let pred = write(dir.path(), "pred.props", "-     *\n-     (A1*)\nplays (V*)\n-     *\n-     *\n\n");
    let json = dir.path().join("report.json");
    let o = synsrl(&[
        "analyze", "--gold", s(&gold), "--pred", s(&pred), "--deps", s(&deps), "--json-out", s(&json),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("Add Arg."));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let curve = v["oracle_curve"].as_array().unwrap();
    assert_eq!(curve.first().unwrap()["stage"], "Orig");
    assert_eq!(curve.last().unwrap()["F1"], 100.0);
    assert_eq!(v["per_bin"].as_array().unwrap().len(), 4);
}

#[test]
fn data_and_config_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write(dir.path(), "gold.props", EXAMPLE_PROPS);
    let missing = dir.path().join("missing.props");
    let o = synsrl(&["evaluate", "--gold", s(&gold), "--pred", s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.props"));

    let bad = write(dir.path(), "bad.conllx", "1\ta\t_\t_\t_\t_\t2\tx\t_\t_\n2\tb\t_\t_\t_\t_\t1\ty\t_\t_\n\n");
    let o = synsrl(&["features", "--deps", s(&bad), "--mode", "tpf"]);
    assert_eq!(o.status.code(), Some(2));

    // train without --seed
    let o = synsrl(&["train", "--train-deps", "x", "--train-props", "y"]);
    assert_eq!(o.status.code(), Some(3));

    let cfg = write(dir.path(), "cfg.json", r#"{"model": {"hiden": 3}}"#);
    let o = synsrl(&["train", "--seed", "1", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(3));

    let o = synsrl(&[
        "train", "--seed", "1", "--train-deps", s(&missing), "--train-props", s(&gold),
        "--checkpoint-dir", s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.props"));
}

fn train_toy(dir: &Path, deps: &Path, props: &Path, out: &str, extra: &[&str]) -> Output {
    let ckpt = dir.join(out);
    let mut args = vec![
        "train", "--seed", "4", "--train-deps", s(deps), "--train-props", s(props),
        "--dev-deps", s(deps), "--dev-props", s(props), "--checkpoint-dir", s(&ckpt),
        "--syntax", "sdp", "--word-dim", "16", "--predicate-dim", "16", "--hidden", "32",
        "--layers", "2", "--epochs", "40", "--batch-size", "1", "--jobs", "2",
    ];
    args.extend_from_slice(extra);
    synsrl(&args)
}

fn dev_trace(dir: &Path) -> Vec<Option<f64>> {
    std::fs::read_to_string(dir.join("train_log.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["dev_f1"].as_f64())
        .collect()
}

#[test]
fn train_predict_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let corpus = random_srl_corpus(10, &mut rng);
    let (deps, props) = write_corpus(dir.path(), "train", &corpus);
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"model": {"syntax_dims": {"label_dim": 16}, "embed_init": 0.1}}"#,
    );
    let o = train_toy(dir.path(), &deps, &props, "a", &["--config", s(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ckpt = PathBuf::from(stdout(&o).trim());
    assert!(ckpt.is_file());
    assert!(dir.path().join("a/config.json").is_file());

    let again = train_toy(dir.path(), &deps, &props, "b", &["--config", s(&cfg)]);
    assert!(again.status.success());
    assert_eq!(dev_trace(&dir.path().join("a")), dev_trace(&dir.path().join("b")));

    let pred = dir.path().join("pred.props");
    let o = synsrl(&[
        "predict", "--checkpoint", s(&ckpt), "--deps", s(&deps), "--props", s(&props), "--output", s(&pred),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&pred).unwrap();
    assert!(parse_props(&text).is_ok());

    let o = synsrl(&["evaluate", "--gold", s(&props), "--pred", s(&pred), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["F1"].as_f64().unwrap() >= 99.0, "{v}");

    // an ensemble of one checkpoint gives the single-model output
    let o = synsrl(&[
        "predict", "--checkpoint", s(&ckpt), "--checkpoint", s(&ckpt), "--deps", s(&deps), "--props", s(&props),
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), text);

    // checkpoint against a config with other dims
    let other = write(dir.path(), "other.json", r#"{"model": {"hidden": 7}}"#);
    let o = synsrl(&[
        "predict", "--checkpoint", s(&ckpt), "--config", s(&other), "--deps", s(&deps), "--props", s(&props),
    ]);
    assert_eq!(o.status.code(), Some(3));

    let empty = write(dir.path(), "empty.conllx", "");
    let empty_props = write(dir.path(), "empty.props", "");
    let o = synsrl(&[
        "predict", "--checkpoint", s(&ckpt), "--deps", s(&empty), "--props", s(&empty_props),
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "");
}
