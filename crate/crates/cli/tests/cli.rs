use std::path::Path;
use std::process::{Command, Output};

fn rankflow(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankflow"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("experiment.json");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"{
  "model": { "types": [{ "rate": "1+y", "profile": "1-y", "weight": 1 }], "horizon": 1 },
  "simulate": { "n": 200, "seed": 3 },
  "solve": { "m": 40, "k": 40 },
  "study": { "n_list": [20, 80], "seeds": [5, 6] }
}"#;

#[test]
fn subcommands_write_their_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let expect = [
        ("validate", vec!["validation.json"]),
        (
            "simulate",
            vec!["snapshots/empirical.csv", "tagged.csv", "anchors.csv", "manifest.json"],
        ),
        (
            "solve",
            vec![
                "fields/f.csv",
                "fields/g.csv",
                "fields/eta.csv",
                "fields/u.csv",
                "manifest.json",
            ],
        ),
        ("tagged", vec!["tagged_limit.csv", "manifest.json"]),
        ("study", vec!["report.json", "distances.csv", "timing.json"]),
    ];
    for (cmd, files) in expect {
        let out = tmp.path().join(cmd);
        let res = rankflow(&[cmd], &config, &out);
        assert!(res.status.success(), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
        for f in files {
            assert!(out.join(f).is_file(), "{cmd} did not write {f}");
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("simulate/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["generator"], "ChaCha8");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["n"], 200);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("study/report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 4);
}

#[test]
fn flags_override_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    let res = rankflow(
        &["study", "--seed", "42", "--grid", "30,20", "--threads", "2"],
        &config,
        &out,
    );
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seeds"], serde_json::json!([42]));
    assert_eq!(report["grid"]["m"], 30);
    assert_eq!(report["grid"]["k"], 20);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");

    let invalid = write_config(
        tmp.path(),
        r#"{"model":{"types":[{"rate":"1","profile":"1-y","weight":0.7}],"horizon":1}}"#,
    );
    for cmd in ["validate", "simulate", "solve"] {
        assert_eq!(rankflow(&[cmd], &invalid, &out).status.code(), Some(2), "{cmd}");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("validation.json")).unwrap()).unwrap();
    assert_eq!(report["accepted"], false);

    let unknown = write_config(tmp.path(), r#"{"model":{"types":[],"horizon":1},"extra":1}"#);
    assert_eq!(rankflow(&["solve"], &unknown, &out).status.code(), Some(2));
    let syntax = write_config(
        tmp.path(),
        r#"{"model":{"types":[{"rate":"1+","profile":"1-y","weight":1}],"horizon":1}}"#,
    );
    assert_eq!(rankflow(&["validate"], &syntax, &out).status.code(), Some(2));

    let stiff = write_config(
        tmp.path(),
        r#"{"model":{"types":[{"rate":"60","profile":"1-y","weight":1}],"horizon":4},"solve":{"m":10,"k":10}}"#,
    );
    let res = rankflow(&["solve"], &stiff, &out);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));

    let missing = tmp.path().join("nope.json");
    assert_eq!(rankflow(&["solve"], &missing, &out).status.code(), Some(4));

    // output path blocked by a regular file
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let good = write_config(tmp.path(), SMALL);
    assert_eq!(rankflow(&["validate"], &good, &blocker).status.code(), Some(4));
}
