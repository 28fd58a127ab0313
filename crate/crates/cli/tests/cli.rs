use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dirate::quadrature::gauss_radau;

fn dirate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SWEEP: &str = r#"{
    "schema": 1,
    "scenario": {"parties": 2, "outcomes": [[2, 2], [2, 2]]},
    "constraint": {"type": "bell", "expression": "chsh", "bound": 2.7},
    "target": {"kind": "local", "x": 0},
    "quadrature": {"m": 4},
    "relaxation": {"level": 1, "extras": ["AZ", "BZ", "ABZ"]},
    "sweep": {"variable": "chsh_score", "grid": [0.78, 0.8, 0.84]}
}"#;

/// Everything but the timing line.
fn data_lines(csv: &str) -> Vec<String> {
    csv.lines()
        .filter(|l| !l.starts_with("# timing"))
        .map(str::to_owned)
        .collect()
}

#[test]
fn quadrature_m2_prints_the_closed_form_rule() {
    let o = dirate(&["quadrature", "--m", "2"]);
    assert!(o.status.success());
    let rows: Vec<(f64, f64)> = stdout(&o)
        .lines()
        .map(|l| {
            let (t, w) = l.split_once(',').unwrap();
            (t.parse().unwrap(), w.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2);
    let want = [(1.0 / 3.0, 0.75), (1.0, 0.25)];
    for ((t, w), (tw, ww)) in rows.iter().zip(want) {
        assert!((t - tw).abs() < 1e-15 && (w - ww).abs() < 1e-15, "{t} {w}");
    }
}

#[test]
fn level_zero_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        &SWEEP.replace("\"level\": 1", "\"level\": 0"),
    );
    let o = dirate(&["rate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("relaxation.level"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_small_bases_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "typo.json",
        &SWEEP.replace("\"target\"", "\"targte\""),
    );
    let o = dirate(&["rate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("targte"));

    let cfg = write(
        dir.path(),
        "small.json",
        &SWEEP.replace("[\"AZ\", \"BZ\", \"ABZ\"]", "[]"),
    );
    let o = dirate(&["rate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`relaxation`"), "{}", stderr(&o));
}

#[test]
fn rate_csv_reproduces_and_recombines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let o = dirate(&[
        "rate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = dirate(&[
        "rate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read_to_string(a).unwrap();
    let b = std::fs::read_to_string(b).unwrap();
    assert_eq!(data_lines(&a), data_lines(&b));

    let rule = gauss_radau::<f64>(4).unwrap();
    let coef: Vec<f64> = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .take(3)
        .map(|(t, w)| w / (t * std::f64::consts::LN_2))
        .collect();
    let lines = data_lines(&a);
    assert!(lines[0].starts_with("# dirate rate config_sha256="));
    assert!(lines[0].contains("m=4 level=1+AZ+BZ+ABZ"));
    let header: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(
        header[..6],
        ["chsh_score", "bound", "c_m", "s_1", "s_2", "s_3"]
    );
    assert_eq!(header[6..9], ["status_1", "status_2", "status_3"]);
    assert_eq!(lines.len(), 5);
    let mut last = f64::NEG_INFINITY;
    for row in &lines[2..] {
        let f: Vec<&str> = row.split(',').collect();
        let bound: f64 = f[1].parse().unwrap();
        let c_m: f64 = f[2].parse().unwrap();
        let s: Vec<f64> = f[3..6].iter().map(|v| v.parse().unwrap()).collect();
        let sum = coef.iter().zip(&s).fold(c_m, |acc, (c, v)| acc + c * v);
        assert!((sum - bound).abs() <= 1e-12, "{sum} vs {bound}");
        assert!(f[6..9].iter().all(|s| s.contains("optimal")));
        assert!(bound > last);
        last = bound;
    }
}

#[test]
fn several_m_values_write_one_file_each() {
    let dir = tempfile::tempdir().unwrap();
    let text = SWEEP
        .replace("\"m\": 4", "\"m\": [2, 3]")
        .replace("[0.78, 0.8, 0.84]", "[0.8]");
    let cfg = write(dir.path(), "multi.json", &text);
    let out = dir.path().join("curve.csv");
    let o = dirate(&[
        "rate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bound = |m: usize| -> f64 {
        let text = std::fs::read_to_string(dir.path().join(format!("curve_m{m}.csv"))).unwrap();
        let row = text.lines().last().unwrap().to_owned();
        row.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!(bound(2) <= bound(3) + 1e-7);
}

#[test]
fn tradeoff_json_is_tangent_at_the_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        &SWEEP.replace("\"m\": 4", "\"m\": 3"),
    );
    let out = dir.path().join("f.json");
    let o = dirate(&[
        "tradeoff",
        "--config",
        cfg.to_str().unwrap(),
        "--anchor",
        "2.75",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    for key in [
        "alphabet",
        "alpha",
        "lambda",
        "anchor",
        "anchor_value",
        "gap",
    ] {
        assert!(f.get(key).is_some(), "missing {key}");
    }
    assert_eq!(f["anchor"][0].as_f64(), Some(2.75));
    let alpha = f["alpha"].as_f64().unwrap();
    let lambda = f["lambda"][0].as_f64().unwrap();
    assert!((alpha + lambda * 2.75 - f["anchor_value"].as_f64().unwrap()).abs() < 1e-12);

    let o = dirate(&[
        "tradeoff",
        "--config",
        cfg.to_str().unwrap(),
        "--anchor",
        "1,2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_sdp_reads_dumped_instances() {
    let dir = tempfile::tempdir().unwrap();
    // min x1 subject to [[1, x1], [x1, 1]] ⪰ 0, so x1 = -1.
    let text =
        "vars 2\nblocks 2\nsense min\nobj,1,1e0\neqrhs,0,1e0,normalization,one\neq,0,0,1e0\n\
                block,0,0,0,1e0\nblock,1,1,0,1e0\nblock,0,1,1,1e0\n";
    let file = write(dir.path(), "toy.sdp", text);
    let o = dirate(&["solve-sdp", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "optimal");
    assert!((v["dual"].as_f64().unwrap() + 1.0).abs() < 1e-7);

    let bad = write(dir.path(), "bad.sdp", "vars two\n");
    assert_eq!(
        dirate(&["solve-sdp", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            let o = dirate(&["rate", "--dry-run", "--config", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
            n += 1;
        }
    }
    assert!(n >= 4);
}
