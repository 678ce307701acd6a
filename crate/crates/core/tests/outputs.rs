use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use herding::experiments::{execute, ExperimentConfig, RunOptions, MANIFEST_FILE};

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let name = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(name, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn run_into(doc: &str, dir: &Path, threads: usize) -> BTreeMap<String, Vec<u8>> {
    let c = ExperimentConfig::parse(doc).unwrap().with_output_dir(dir.to_path_buf());
    let opts = RunOptions {
        threads,
        dump_trajectories: 2,
    };
    execute(&c, &opts).unwrap();
    let mut files = read_tree(dir);
    let manifest: serde_json::Value = serde_json::from_slice(&files[MANIFEST_FILE]).unwrap();
    assert!(manifest["finished_unix_ms"].as_u64() >= manifest["started_unix_ms"].as_u64());
    let mut m = manifest.as_object().unwrap().clone();
    m.remove("started_unix_ms");
    m.remove("finished_unix_ms");
    files.insert(MANIFEST_FILE.into(), serde_json::to_vec(&m).unwrap());
    files
}

#[test]
fn reruns_and_thread_counts_give_identical_files() {
    let doc = r#"{"experiment":"time-to-learn","model":{"family":"polytail","k":2.0},"horizon":2000,"trials":300,
                  "master_seed":17,"ttl_horizons":[500,2000]}"#;
    let tmp = tempfile::tempdir().unwrap();
    let a = run_into(doc, &tmp.path().join("a"), 1);
    let b = run_into(doc, &tmp.path().join("b"), 1);
    let c = run_into(doc, &tmp.path().join("c"), 3);
    assert!(a.len() > 4);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(a.keys().any(|k| k.starts_with("trajectories")));
}

#[test]
fn changing_the_seed_changes_the_hash_and_results() {
    let doc = r#"{"experiment":"mistake-curve","model":{"family":"gaussian","sigma":1.0},"horizon":300,"trials":200}"#;
    let base = ExperimentConfig::parse(doc).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let m1 = execute(&base.clone().with_seed(1).with_output_dir(tmp.path().join("1")), &RunOptions::default()).unwrap();
    let m2 = execute(&base.with_seed(2).with_output_dir(tmp.path().join("2")), &RunOptions::default()).unwrap();
    assert_ne!(m1.config_sha256, m2.config_sha256);
    assert_ne!(m1.files["mistakes.csv"], m2.files["mistakes.csv"]);
}

#[test]
fn empty_tables_are_written_header_only() {
    // sharp signals and a short horizon: no trial ever errs
    let doc = r#"{"experiment":"time-to-learn","model":{"family":"gaussian","sigma":0.05},"horizon":20,"trials":100}"#;
    let tmp = tempfile::tempdir().unwrap();
    let files = run_into(doc, tmp.path(), 1);
    let runs = String::from_utf8(files["runs.csv"].clone()).unwrap();
    assert_eq!(runs, "length,count,kind\n");
    for (name, body) in &files {
        if name.ends_with(".csv") {
            assert!(String::from_utf8_lossy(body).ends_with('\n'), "{name}");
        }
    }
}
