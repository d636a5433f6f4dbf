//! Bookkeeping for the acceptance run: each criterion reports one verdict
//! line, optionally followed by indented detail lines.

use std::time::{Duration, Instant};

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: &'static str,
    pub pass: bool,
    pub summary: String,
    pub details: Vec<String>,
}

impl Verdict {
    pub fn new(name: &'static str) -> Self {
        Self {
            name,
            pass: true,
            summary: String::new(),
            details: Vec::new(),
        }
    }

    /// Records a sub-check; any failing sub-check fails the criterion.
    pub fn check(&mut self, ok: bool, what: impl Into<String>) -> bool {
        let what = what.into();
        self.details.push(format!("[{}] {what}", if ok { "ok" } else { "x" }));
        self.pass &= ok;
        ok
    }

    /// Adds a line that does not affect the verdict.
    pub fn note(&mut self, what: impl Into<String>) {
        self.details.push(format!("[info] {}", what.into()));
    }

    pub fn summary(mut self, text: impl Into<String>) -> Self {
        self.summary = text.into();
        self
    }
}

/// Runs criteria in order, prints their verdicts and returns how many failed.
pub fn run_all(criteria: &[(&'static str, fn() -> Verdict)], filter: Option<&str>) -> usize {
    let mut failed = 0;
    let mut ran = 0;
    for &(key, criterion) in criteria {
        if filter.is_some_and(|f| !key.contains(f)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let v = criterion();
        print_verdict(&v, start.elapsed());
        if !v.pass {
            failed += 1;
        }
    }
    println!("\nacceptance: {} passed, {failed} failed", ran - failed);
    failed
}

fn print_verdict(v: &Verdict, elapsed: Duration) {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!("{tag} {}: {} ({:.1} s)", v.name, v.summary, elapsed.as_secs_f64());
    for d in &v.details {
        println!("     {d}");
    }
}
