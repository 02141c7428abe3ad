//! Shared by the CLI tests and the acceptance runner.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub struct RunResult {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the built `treedoc` binary against the store at `dir`.
pub fn run_bin(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> RunResult {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_treedoc"));
    cmd.arg("--dir").arg(dir).args(args);
    for k in ["TREEDOC_DIR", "TREEDOC_GATEWAY_MODE", "TREEDOC_FIXTURES", "TREEDOC_LLM_API_KEY"] {
        cmd.env_remove(k);
    }
    // A closed port, so a stray live call fails fast instead of leaving the box.
    cmd.env("TREEDOC_LLM_BASE_URL", "http://127.0.0.1:9");
    cmd.envs(env.iter().copied());
    let out = cmd.output().expect("run treedoc");
    RunResult {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// The whitespace rule for golden comparisons: trailing blanks dropped,
/// runs of spaces inside a line collapsed (indentation kept), blank-line
/// runs collapsed, and leading or trailing blank lines removed.
pub fn normalize(s: &str) -> String {
    let mut lines: Vec<String> = Vec::new();
    for line in s.lines() {
        let body = line.trim_start();
        let indent = &line[..line.len() - body.len()];
        let body = body.split_whitespace().collect::<Vec<_>>().join(" ");
        let line = if body.is_empty() { String::new() } else { format!("{indent}{body}") };
        if line.is_empty() && lines.last().is_none_or(|l| l.is_empty()) {
            continue;
        }
        lines.push(line);
    }
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

/// Corpus files whose syntax the exporter does not reproduce.
const LOSSY: &[&str] = &["17_variant_syntax", "18_heading_without_body", "19_blockquote_code", "20_html_and_rules"];

pub struct Golden {
    pub name: String,
}

fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

impl Golden {
    pub fn corpus() -> Vec<Golden> {
        let mut names: Vec<String> = std::fs::read_dir(tests_dir().join("corpus"))
            .unwrap()
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".md").map(str::to_string))
            .collect();
        names.sort();
        names.into_iter().map(|name| Golden { name }).collect()
    }

    pub fn file(name: &str) -> String {
        std::fs::read_to_string(tests_dir().join("golden").join(name)).unwrap()
    }

    pub fn input_path(&self) -> PathBuf {
        tests_dir().join("corpus").join(format!("{}.md", self.name))
    }

    pub fn input(&self) -> String {
        std::fs::read_to_string(self.input_path()).unwrap()
    }

    pub fn expected(&self) -> String {
        Golden::file(&format!("{}.md", self.name))
    }

    pub fn canonical(&self) -> bool {
        !LOSSY.contains(&self.name.as_str())
    }

    /// Imports the file into the store at `dir` and exports it back.
    pub fn round_trip(&self, dir: &Path) -> String {
        let doc = format!("c{}", &self.name[..2]);
        let path = self.input_path();
        let imp = run_bin(dir, &["import", path.to_str().unwrap(), "--doc", &doc], &[]);
        assert_eq!(imp.code, 0, "{}: {}", self.name, imp.stderr);
        let exp = run_bin(dir, &["export", "--doc", &doc, "--format", "md", "--headings", "on"], &[]);
        assert_eq!(exp.code, 0, "{}: {}", self.name, exp.stderr);
        exp.stdout
    }
}
