//! Acceptance suite; the criteria live in `tests/acceptance.rs`.
//!
//! Each criterion prints one line straight to stderr, so the verdicts show up in the
//! test log even when the harness captures output.

use std::io::Write;

/// One acceptance verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub criterion: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(criterion: u8, title: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self { criterion, title, passed, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("criterion {:>2} {} {}: {}", self.criterion, if self.passed { "PASS" } else { "FAIL" }, self.title, self.detail)
    }

    /// Writes [`Self::line`] past the harness capture, then fails the test if needed.
    pub fn report(self) {
        let mut err = std::io::stderr().lock();
        let _ = writeln!(err, "{}", self.line());
        drop(err);
        assert!(self.passed, "{}", self.line());
    }
}

/// Combines sub-checks into one verdict; the detail lists every part.
pub fn all(criterion: u8, title: &'static str, parts: &[(&str, bool, String)]) -> Verdict {
    let passed = parts.iter().all(|(_, ok, _)| *ok);
    let detail = parts.iter().map(|(name, ok, d)| format!("{name} {} ({d})", if *ok { "ok" } else { "FAILED" })).collect::<Vec<_>>().join("; ");
    Verdict::new(criterion, title, passed, detail)
}
