//! Comparison of a produced CSV table against a frozen one. Columns named
//! `seconds` are wall-clock measurements and are skipped.

use std::fs;
use std::path::Path;

use crate::CliError;

const IGNORED: &[&str] = &["seconds"];

/// `Ok(None)` on a match, `Ok(Some(description))` on the first difference.
pub fn compare_csv(expected: &str, actual: &str) -> Option<String> {
    let exp: Vec<&str> = expected.lines().filter(|l| !l.trim().is_empty()).collect();
    let act: Vec<&str> = actual.lines().filter(|l| !l.trim().is_empty()).collect();
    let (Some(eh), Some(ah)) = (exp.first(), act.first()) else {
        return Some("empty table".to_string());
    };
    if eh != ah {
        return Some(format!("header differs: expected {eh:?}, got {ah:?}"));
    }
    let keep: Vec<bool> = eh.split(',').map(|c| !IGNORED.contains(&c)).collect();
    let project = |line: &str| -> Vec<String> {
        line.splitn(keep.len(), ',')
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(f, _)| f.to_string())
            .collect()
    };
    for (i, (e, a)) in exp.iter().zip(&act).enumerate().skip(1) {
        if project(e) != project(a) {
            return Some(format!("row {i} differs: expected {e:?}, got {a:?}"));
        }
    }
    if exp.len() != act.len() {
        return Some(format!(
            "expected {} rows, got {}",
            exp.len() - 1,
            act.len() - 1
        ));
    }
    None
}

pub fn check_fixture(path: &Path, actual: &str) -> Result<(), CliError> {
    let expected = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match compare_csv(&expected, actual) {
        None => Ok(()),
        Some(diff) => Err(CliError::FixtureMismatch(format!(
            "{}: {diff}",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seconds_are_ignored() {
        let a = "D,hit,seconds\n2,10,0.5\n3,38,1.0\n";
        let b = "D,hit,seconds\n2,10,0.1\n3,38,9.0\n";
        assert_eq!(compare_csv(a, b), None);
        assert!(compare_csv(a, "D,hit,seconds\n2,11,0.5\n3,38,1.0\n").is_some());
        assert!(compare_csv(a, "D,hit,seconds\n2,10,0.5\n").is_some());
        assert!(compare_csv(a, "D,hits,seconds\n2,10,0.5\n3,38,1.0\n").is_some());
        assert!(compare_csv("", a).is_some());
    }
}
