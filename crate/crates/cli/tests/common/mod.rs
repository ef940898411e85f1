#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lpg_core::graph::PropertyGraph;
use lpg_core::ingest::export_jsonl;

pub fn lpg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpg"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("lpg binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_graph(dir: &Path, name: &str, graph: &PropertyGraph) -> PathBuf {
    let path = dir.join(name);
    let mut buf = Vec::new();
    export_jsonl(graph, &mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

pub fn write_config(dir: &Path, name: &str, config: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}
