#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn rcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcp"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().expect("utf-8 path").to_string()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Parses `key=value` pairs from the decompose summary line.
pub fn summary_field(line: &str, key: &str) -> Option<String> {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
        .map(str::to_string)
}
