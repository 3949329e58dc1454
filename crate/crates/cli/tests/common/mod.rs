#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub fn mesd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mesd"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn mesd_ok(args: &[&str]) -> String {
    let out = mesd(args);
    assert!(
        out.status.success(),
        "mesd {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Parsed error document from stderr.
pub fn error_doc(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).expect("stderr ends with an error document")
}

/// A configuration small enough to run in seconds.
pub fn small_config(seed: u64) -> Value {
    json!({
        "version": 1,
        "dataset": {"source": "preset", "name": "planted_instability", "n": 600, "seed": seed},
        "model": {"hp": {"threshold": 0.5, "l2": 1e-4, "learning_rate": 0.05, "epochs": 10, "dropout": 0.1}},
        "explain": {"shapley_permutations": 8, "surrogate": {"n_samples": 16}},
        "perturb": {"k": 5},
        "stability": {"n_max": 60},
        "search": {"population": 8, "generations": 2},
        "master_seed": seed
    })
}

pub fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file in `a` equals the file of the same name in `b`, and both hold
/// the same set of names.
pub fn identical_dirs(a: &Path, b: &Path) -> Result<usize, String> {
    let names = |d: &Path| {
        let mut v: Vec<String> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        v.sort();
        v
    };
    let (na, nb) = (names(a), names(b));
    if na != nb {
        return Err(format!("file sets differ: {na:?} vs {nb:?}"));
    }
    for n in &na {
        if fs::read(a.join(n)).unwrap() != fs::read(b.join(n)).unwrap() {
            return Err(format!("{n} differs"));
        }
    }
    Ok(na.len())
}
