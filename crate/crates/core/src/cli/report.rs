//! Check bookkeeping and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numfmt::sig12;

/// Process exit statuses.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Errors caused by what the user asked for rather than by the numerics.
pub fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::UnknownFamily(_)
            | Error::NonPositiveParameter { .. }
            | Error::InvalidParameters { .. }
            | Error::InvalidSchedule(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::NonSmoothInput
            | Error::IndexOutOfRange { .. }
    )
}

pub fn exit_code(e: &Error) -> i32 {
    if is_config_error(e) {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

/// Every check of a run; `overall` is their conjunction.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteVerdict {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl SuiteVerdict {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("check,pass,value,threshold\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                c.name,
                c.pass,
                sig12(c.value),
                sig12(c.threshold)
            );
        }
        out
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Checks, suite errors and output files gathered during a run.
#[derive(Debug, Default)]
pub struct Report {
    checks: Vec<Check>,
    files: BTreeMap<String, String>,
    errors: Vec<(String, Error)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pass when `value <= threshold`.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.push(name.into(), value <= threshold, value, threshold);
    }

    /// Pass when `value >= threshold`.
    pub fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.push(name.into(), value >= threshold, value, threshold);
    }

    fn push(&mut self, name: String, pass: bool, value: f64, threshold: f64) {
        self.checks.push(Check {
            name,
            pass,
            value,
            threshold,
        });
    }

    pub fn file(&mut self, name: impl Into<String>, content: String) {
        self.files.insert(name.into(), content);
    }

    /// Record a suite that could not finish; it counts as a failed check.
    pub fn error(&mut self, suite: &str, e: Error) {
        self.push(format!("{suite}/error"), false, f64::NAN, f64::NAN);
        self.errors.push((suite.to_string(), e));
    }

    /// Run `body`, turning an error into a failed check.
    pub fn suite(&mut self, name: &str, body: impl FnOnce(&mut Report) -> Result<()>) {
        if let Err(e) = body(self) {
            self.error(name, e);
        }
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn errors(&self) -> &[(String, Error)] {
        &self.errors
    }

    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    pub fn verdict(&self) -> SuiteVerdict {
        SuiteVerdict {
            overall: self.checks.iter().all(|c| c.pass),
            checks: self.checks.clone(),
        }
    }

    /// Exit status: runtime errors first, then configuration errors, then
    /// failed checks.
    pub fn exit_code(&self) -> i32 {
        if self.errors.iter().any(|(_, e)| !is_config_error(e)) {
            EXIT_RUNTIME
        } else if !self.errors.is_empty() {
            EXIT_CONFIG
        } else if self.checks.iter().all(|c| c.pass) {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }

    /// Write every collected file plus `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, content) in &self.files {
            write_atomic(dir, name, content)?;
        }
        write_atomic(dir, "summary.csv", &self.verdict().summary_csv())
    }
}

/// Create `dir` if needed and make sure files can be created in it.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::Io(format!("{} is not writable: {e}", dir.display())))?;
    fs::remove_file(&probe)?;
    Ok(())
}

/// Write to a temporary sibling, then rename over the target.
pub fn write_atomic(dir: &Path, name: &str, content: &str) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, content).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, dir.join(name)).map_err(|e| Error::Io(format!("{name}: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_is_conjunction() {
        let mut r = Report::new();
        r.at_most("a", 1.0, 2.0);
        r.at_least("b", 1.0, 2.0);
        let v = r.verdict();
        assert!(!v.overall);
        assert_eq!(v.failed().count(), 1);
        assert_eq!(r.exit_code(), EXIT_CHECK_FAILED);
        assert_eq!(
            v.summary_csv(),
            "check,pass,value,threshold\na,true,1,2\nb,false,1,2\n"
        );
    }

    #[test]
    fn errors_set_exit_status() {
        let mut r = Report::new();
        r.suite("x", |_| Err(Error::NonSmoothInput));
        assert_eq!(r.exit_code(), EXIT_CONFIG);
        r.suite("y", |_| Err(Error::ZeroMass));
        assert_eq!(r.exit_code(), EXIT_RUNTIME);
        assert!(!r.verdict().overall);
    }

    #[test]
    fn nan_fails_both_directions() {
        let mut r = Report::new();
        r.at_most("a", f64::NAN, 1.0);
        r.at_least("b", f64::NAN, 1.0);
        assert!(r.checks().iter().all(|c| !c.pass));
    }
}
