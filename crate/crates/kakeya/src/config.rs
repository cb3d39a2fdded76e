//! Run configuration: defaults, a `key=value` file, the environment and
//! command-line flags, resolved in that order (later wins) and validated in
//! one pass.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use kakeya_core::families::builtin;
use kakeya_core::measure::{Budget, DEFAULT_CELL_BUDGET, DEFAULT_PAIR_BUDGET};
use kakeya_core::phi::PhiVariant;
use kakeya_core::ring::{Mode, RingSpec};

use crate::CliError;

pub const BUDGET_ENV: &str = "KAKEYA_BUDGET_CELLS";

/// Keys accepted in a config file.
pub const KEYS: &[&str] = &[
    "ring",
    "ell",
    "phi",
    "family",
    "dmin",
    "dmax",
    "depth",
    "format",
    "out",
    "fixture",
    "threads",
    "timing",
    "budget_cells",
    "budget_pairs",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub ring: RingSpec,
    pub phi: PhiVariant,
    pub family: String,
    pub d_min: i64,
    pub d_max: i64,
    pub depth: i64,
    pub budget: Budget,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub fixture: Option<PathBuf>,
    pub threads: Option<usize>,
    pub timing: bool,
}

/// Raw string settings, one layer at a time.
#[derive(Debug, Clone, Default)]
pub struct Layers {
    values: BTreeMap<&'static str, String>,
}

impl Layers {
    pub fn defaults() -> Layers {
        let mut l = Layers::default();
        for (k, v) in [
            ("ring", "fq".to_string()),
            ("ell", "2".to_string()),
            ("phi", "sawyer".to_string()),
            ("family", "kakeya".to_string()),
            ("dmin", "2".to_string()),
            ("dmax", "10".to_string()),
            ("depth", "6".to_string()),
            ("format", "csv".to_string()),
            ("timing", "true".to_string()),
            ("budget_cells", DEFAULT_CELL_BUDGET.to_string()),
            ("budget_pairs", DEFAULT_PAIR_BUDGET.to_string()),
        ] {
            l.values.insert(k, v);
        }
        l
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        let key = KEYS
            .iter()
            .find(|&&k| k == key)
            .ok_or_else(|| CliError::Usage(format!("unknown setting {key:?}")))?;
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn set_opt<T: ToString>(&mut self, key: &str, value: Option<T>) -> Result<(), CliError> {
        match value {
            Some(v) => self.set(key, v.to_string()),
            None => Ok(()),
        }
    }

    /// Applies a `key=value` file; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let mut errors = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(format!("{origin}:{}: expected key=value", no + 1));
                continue;
            };
            let k = k.trim().replace('-', "_");
            if let Err(e) = self.set(&k, v.trim()) {
                errors.push(format!("{origin}:{}: {e}", no + 1));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(errors.join("; ")))
        }
    }

    pub fn apply_env(&mut self, env: &dyn Fn(&str) -> Option<String>) -> Result<(), CliError> {
        self.set_opt("budget_cells", env(BUDGET_ENV))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parses every setting, reporting all problems in one message.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut errors: Vec<String> = Vec::new();
        fn num<T: std::str::FromStr>(l: &Layers, key: &str, errors: &mut Vec<String>) -> Option<T> {
            let raw = l.get(key)?;
            match raw.parse() {
                Ok(v) => Some(v),
                Err(_) => {
                    errors.push(format!("{key}: cannot parse {raw:?}"));
                    None
                }
            }
        }
        let mode = match self.get("ring").map(Mode::from_token) {
            Some(Some(m)) => Some(m),
            _ => {
                errors.push(format!(
                    "ring: expected zp or fq, got {:?}",
                    self.get("ring").unwrap_or("")
                ));
                None
            }
        };
        let ell: Option<u32> = num(self, "ell", &mut errors);
        let ring = match (mode, ell) {
            (Some(m), Some(e)) => match RingSpec::new(e, m) {
                Ok(r) => Some(r),
                Err(err) => {
                    errors.push(format!("ell: {err}"));
                    None
                }
            },
            _ => None,
        };
        let phi = self.get("phi").and_then(PhiVariant::from_name);
        if phi.is_none() {
            errors.push(format!(
                "phi: expected sawyer or dh, got {:?}",
                self.get("phi").unwrap_or("")
            ));
        }
        let family = self.get("family").unwrap_or_default().to_string();
        if let Some(r) = ring {
            if let Err(e) = builtin(&family, r) {
                errors.push(format!("family: {e}"));
            }
        }
        let d_min: Option<i64> = num(self, "dmin", &mut errors);
        let d_max: Option<i64> = num(self, "dmax", &mut errors);
        let depth: Option<i64> = num(self, "depth", &mut errors);
        if let (Some(lo), Some(hi)) = (d_min, d_max) {
            if lo < 1 {
                errors.push(format!("dmin: must be at least 1, got {lo}"));
            }
            if hi < lo {
                errors.push(format!("dmax: {hi} is below dmin {lo}"));
            }
        }
        if matches!(depth, Some(d) if d < 1) {
            errors.push("depth: must be at least 1".to_string());
        }
        let format = match self.get("format") {
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            other => {
                errors.push(format!(
                    "format: expected csv or json, got {:?}",
                    other.unwrap_or("")
                ));
                None
            }
        };
        let threads: Option<usize> = num(self, "threads", &mut errors);
        if threads == Some(0) {
            errors.push("threads: must be at least 1".to_string());
        }
        let timing: Option<bool> = num(self, "timing", &mut errors);
        let cells: Option<u64> = num(self, "budget_cells", &mut errors);
        let pairs: Option<u64> = num(self, "budget_pairs", &mut errors);
        if !errors.is_empty() {
            return Err(CliError::Usage(errors.join("; ")));
        }
        let missing = || CliError::Usage("incomplete configuration".to_string());
        Ok(RunConfig {
            ring: ring.ok_or_else(missing)?,
            phi: phi.ok_or_else(missing)?,
            family,
            d_min: d_min.ok_or_else(missing)?,
            d_max: d_max.ok_or_else(missing)?,
            depth: depth.ok_or_else(missing)?,
            budget: Budget {
                cells: cells.ok_or_else(missing)?,
                pairs: pairs.ok_or_else(missing)?,
            },
            format: format.ok_or_else(missing)?,
            out: self.get("out").map(PathBuf::from),
            fixture: self.get("fixture").map(PathBuf::from),
            threads,
            timing: timing.unwrap_or(true),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = Layers::defaults().resolve().unwrap();
        assert_eq!(cfg.ring, RingSpec::power_series(2).unwrap());
        assert_eq!(cfg.phi, PhiVariant::Series);
        assert_eq!((cfg.d_min, cfg.d_max), (2, 10));
        assert_eq!(cfg.budget, Budget::default());
        assert!(cfg.timing);
    }

    #[test]
    fn later_layers_win() {
        let mut l = Layers::defaults();
        l.apply_text("# comment\nell = 3\nbudget-cells=100\n\nring=zp", "cfg")
            .unwrap();
        l.apply_env(&|k| (k == BUDGET_ENV).then(|| "200".to_string()))
            .unwrap();
        l.set_opt("ell", Some(5)).unwrap();
        let cfg = l.resolve().unwrap();
        assert_eq!(cfg.ring, RingSpec::padic(5).unwrap());
        assert_eq!(cfg.budget.cells, 200);
    }

    #[test]
    fn errors_are_aggregated() {
        let mut l = Layers::defaults();
        l.apply_text("ell=4\nphi=nope\ndmin=5\ndmax=3\nformat=xml", "cfg")
            .unwrap();
        let CliError::Usage(msg) = l.resolve().unwrap_err() else {
            panic!()
        };
        for needle in ["ell:", "phi:", "dmax:", "format:"] {
            assert!(msg.contains(needle), "{msg}");
        }
        assert!(Layers::defaults()
            .apply_text("bogus=1\nnoequals", "cfg")
            .is_err());
    }
}
