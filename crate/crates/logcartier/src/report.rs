//! Line-oriented key-value reports with a stable schema header. Entries are
//! emitted in insertion order and all orderings upstream are deterministic,
//! so identical inputs produce byte-identical reports.

use std::fmt::Display;

pub const SCHEMA: &str = "logcartier-report/1";

#[derive(Default)]
pub struct Report {
    lines: Vec<(String, String)>,
    checks: usize,
    failed: usize,
}

impl Report {
    pub fn new() -> Report {
        Report::default()
    }

    /// Record a plain key-value pair.
    pub fn put(&mut self, key: impl Into<String>, value: impl Display) {
        self.lines.push((key.into(), format!("{}", value)));
    }

    /// Record a pass/fail check under `<key>.pass`.
    pub fn check(&mut self, key: impl Into<String>, ok: bool) {
        let k = key.into();
        self.checks += 1;
        if !ok {
            self.failed += 1;
        }
        self.lines.push((format!("{}.pass", k), format!("{}", ok)));
    }

    pub fn merge(&mut self, prefix: &str, other: Report) {
        for (k, v) in other.lines {
            self.lines.push((format!("{}.{}", prefix, k), v));
        }
        self.checks += other.checks;
        self.failed += other.failed;
    }

    pub fn checks(&self) -> usize {
        self.checks
    }

    pub fn failed(&self) -> usize {
        self.failed
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn render_structured(&self) -> String {
        let mut out = String::new();
        out.push_str(SCHEMA);
        out.push('\n');
        for (k, v) in &self.lines {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out.push_str(&format!("checks.total = {}\n", self.checks));
        out.push_str(&format!("checks.failed = {}\n", self.failed));
        out
    }

    pub fn render_human(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(&format!("{}: {}\n", k, v));
        }
        out.push_str(&format!(
            "{} checks, {} failed\n",
            self.checks, self.failed
        ));
        out
    }

    pub fn render(&self, structured: bool) -> String {
        if structured {
            self.render_structured()
        } else {
            self.render_human()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_output_shape() {
        let mut r = Report::new();
        r.put("chart.p", 3);
        r.check("window.minimal", true);
        r.check("roundtrip", false);
        let s = r.render_structured();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "logcartier-report/1");
        assert_eq!(lines[1], "chart.p = 3");
        assert_eq!(lines[2], "window.minimal.pass = true");
        assert_eq!(lines[3], "roundtrip.pass = false");
        assert_eq!(lines[4], "checks.total = 2");
        assert_eq!(lines[5], "checks.failed = 1");
        assert!(!r.all_passed());
    }

    #[test]
    fn merge_prefixes_and_accumulates() {
        let mut inner = Report::new();
        inner.check("c", true);
        let mut outer = Report::new();
        outer.merge("sub", inner);
        assert_eq!(outer.checks(), 1);
        assert!(outer.render_structured().contains("sub.c.pass = true"));
    }

    #[test]
    fn determinism() {
        let build = || {
            let mut r = Report::new();
            r.put("a", 1);
            r.check("b", true);
            r.render_structured()
        };
        assert_eq!(build(), build());
    }
}
