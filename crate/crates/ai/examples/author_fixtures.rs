//! Rewrites the replay fixtures under `fixtures/` by recording the scripted
//! model replies of every scenario.
//!
//!     cargo run -p treedoc-ai --example author_fixtures

#[path = "../tests/common/scenarios.rs"]
mod scenarios;

use std::fs;

use treedoc_llm::{ChatResponse, Recorder, Scripted};

fn main() {
    let dir = scenarios::fixtures_dir();
    fs::create_dir_all(&dir).expect("fixtures dir");
    for case in scenarios::button_cases() {
        let path = case.fixture();
        let _ = fs::remove_file(&path);
        let rec = Recorder::new(Scripted::new([ChatResponse::text(case.reply)]), &path).unwrap();
        let (_, _, result) = scenarios::run_button_case(&case, &rec);
        println!("button {:<28} {}", case.name, if result.is_ok() { "ok" } else { "rejected" });
    }
    for case in scenarios::agent_cases() {
        let path = case.fixture();
        let _ = fs::remove_file(&path);
        let rec = Recorder::new(Scripted::new((case.script)()), &path).unwrap();
        let run = scenarios::run_agent_case(&case, &rec);
        let left = rec.into_inner().remaining();
        assert_eq!(left, 0, "{}: {left} scripted replies unused", case.name);
        println!("agent  {:<28} {} suggestion(s)", case.name, run.doc.suggestions().len());
    }
}
