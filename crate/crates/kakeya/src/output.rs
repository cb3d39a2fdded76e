//! Text renderings of reports and atomic file output.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use serde_json::{json, Value};
use tempfile::NamedTempFile;

use kakeya_core::analysis::{CertificateReport, DefectReport, LogGapScan, TermDecomposition};
use kakeya_core::measure::{CoverageReport, DecayReport};
use kakeya_core::phi::PhiVariant;
use kakeya_core::ring::{Mode, Vector};

use crate::CliError;

pub const MEASURE_HEADER: &str =
    "D,hit_cells,total_cells,estimate_rational,estimate_decimal,input_depth,seconds";
pub const CERTIFICATE_HEADER: &str = "lemma,A,B,N,holds,inequality";
pub const DEFECT_HEADER: &str = "scale,defect_valuation,margin";

/// `num/den`, always with a denominator.
pub fn rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn small_rational(r: &Ratio<i64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal rounded half away from zero to `places` places.
pub fn decimal(r: &BigRational, places: usize) -> String {
    let scale = BigInt::from(10u32).pow(places as u32);
    let num = r.numer().magnitude() * scale.magnitude() * 2u32 + r.denom().magnitude();
    let q = num.div_floor(&(r.denom().magnitude() * 2u32));
    let digits = format!("{:0>width$}", q.to_string(), width = places + 1);
    let (int, frac) = digits.split_at(digits.len() - places);
    let sign = if r.numer().sign() == Sign::Minus && q.bits() > 0 {
        "-"
    } else {
        ""
    };
    if places == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Whether a measure table is flagged experimental: the digit-shift map over
/// `Z_l`, which is not additive.
pub fn experimental(report: &DecayReport) -> bool {
    report.variant == PhiVariant::DigitShift && report.ring.mode() == Mode::Padic
}

pub fn decay_csv(report: &DecayReport) -> String {
    let mut s = String::from(MEASURE_HEADER);
    s.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:.3}",
            r.depth,
            r.hit_cells,
            r.total_cells,
            rational(&r.estimate),
            decimal(&r.estimate, 6),
            r.input_depth,
            r.seconds
        );
    }
    s
}

pub fn decay_json(report: &DecayReport) -> String {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "D": r.depth,
                "hit_cells": r.hit_cells,
                "total_cells": r.total_cells,
                "estimate_rational": rational(&r.estimate),
                "estimate_decimal": decimal(&r.estimate, 6),
                "input_depth": r.input_depth,
                "seconds": (r.seconds * 1000.0).round() / 1000.0,
            })
        })
        .collect();
    pretty(json!({
        "family": report.family,
        "phi": report.variant.name(),
        "ring": report.ring.mode().token(),
        "ell": report.ring.ell(),
        "experimental": experimental(report),
        "non_increasing": report.is_non_increasing(),
        "rows": rows,
    }))
}

fn pretty(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("json values always serialize");
    s.push('\n');
    s
}

pub fn coverage_text(family: &str, phi: PhiVariant, r: &CoverageReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "family:{family}");
    let _ = writeln!(s, "phi:{}", phi.name());
    let _ = writeln!(s, "depth:{}", r.depth);
    let _ = writeln!(s, "directions:{}", r.directions);
    let _ = writeln!(s, "w_cells:{}", r.w_cells);
    let _ = writeln!(s, "checked_pairs:{}", r.directions * r.w_cells);
    let _ = writeln!(s, "missing:{}", r.missing_count());
    if r.vertical_excluded {
        s.push_str("vertical:excluded\n");
    }
    for (d, w) in &r.missing {
        let _ = writeln!(s, "missing_pair:{d},{w}");
    }
    s
}

pub fn coverage_json(family: &str, phi: PhiVariant, r: &CoverageReport) -> String {
    pretty(json!({
        "family": family,
        "phi": phi.name(),
        "depth": r.depth,
        "directions": r.directions,
        "w_cells": r.w_cells,
        "checked_pairs": r.directions * r.w_cells,
        "missing": r.missing_count(),
        "vertical_excluded": r.vertical_excluded,
        "missing_pairs": r.missing.iter().map(|(d, w)| json!([d, w])).collect::<Vec<_>>(),
    }))
}

pub fn certificate_csv(r: &CertificateReport) -> String {
    let mut s = String::from(CERTIFICATE_HEADER);
    s.push('\n');
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            row.lemma, row.a, row.b, row.n, row.holds, row.inequality
        );
    }
    s
}

pub fn certificate_json(r: &CertificateReport) -> String {
    pretty(json!({
        "ell": r.ell,
        "A": r.a,
        "B": r.b,
        "n_min": r.n_lo,
        "n_max": r.n_hi,
        "lemmas": r.summaries.iter().map(|s| json!({
            "lemma": s.lemma.to_string(),
            "min_n": s.min_n,
            "monotone": s.monotone,
            "implication_ok": s.implication_ok,
        })).collect::<Vec<_>>(),
        "rows": r.rows.iter().map(|row| json!({
            "lemma": row.lemma.to_string(),
            "A": row.a,
            "B": row.b,
            "N": row.n,
            "holds": row.holds,
            "inequality": row.inequality,
        })).collect::<Vec<_>>(),
    }))
}

fn opt_i64(v: Option<i64>) -> String {
    v.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

pub fn defect_csv(r: &DefectReport) -> String {
    let mut s = String::from(DEFECT_HEADER);
    s.push('\n');
    for row in &r.rows {
        let margin = row
            .margin
            .as_ref()
            .map_or_else(|| "inf".to_string(), small_rational);
        let _ = writeln!(
            s,
            "{},{},{}",
            row.scale,
            opt_i64(row.defect_valuation),
            margin
        );
    }
    s
}

/// Rows `scale,defect_valuation,margin,strict_quotient` with `scale = k`
/// and the very strong quotient as margin.
pub fn log_gap_csv(scan: &LogGapScan) -> String {
    let mut s = format!("{DEFECT_HEADER},strict_quotient\n");
    for r in &scan.rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.k,
            r.defect_valuation,
            small_rational(&r.very_strong_quotient),
            r.strict_quotient
        );
    }
    s
}

pub fn log_gap_json(scan: &LogGapScan) -> String {
    pretty(json!({
        "p": scan.p,
        "alpha": small_rational(&scan.alpha),
        "crossover": scan.crossover,
        "strict_nondecreasing": scan.strict_nondecreasing(),
        "final_strict_quotient": scan.final_strict(),
        "rows": scan.rows.iter().map(|r| json!({
            "scale": r.k,
            "defect_valuation": r.defect_valuation,
            "margin": small_rational(&r.very_strong_quotient),
            "strict_quotient": r.strict_quotient,
        })).collect::<Vec<_>>(),
    }))
}

/// Components as canonical digit strings, `;`-separated.
pub fn vector_text(v: &Vector) -> String {
    v.iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

const TERM_NAMES: [&str; 6] = ["I", "II", "III", "IV", "V", "VI"];

pub fn decomposition_text(t: &TermDecomposition) -> Result<String, CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "N:{}", t.n);
    let _ = writeln!(s, "depth:{}", t.depth);
    for (name, term) in TERM_NAMES.iter().zip(&t.terms) {
        let _ = writeln!(s, "{name}:{}", vector_text(term));
    }
    let _ = writeln!(s, "sum:{}", vector_text(&t.sum()?));
    let _ = writeln!(s, "value:{}", vector_text(&t.value));
    let _ = writeln!(s, "identity:{}", t.identity_holds()?);
    Ok(s)
}

pub fn decomposition_json(t: &TermDecomposition) -> Result<String, CliError> {
    let mut terms = serde_json::Map::new();
    for (name, term) in TERM_NAMES.iter().zip(&t.terms) {
        terms.insert(name.to_string(), json!(vector_text(term)));
    }
    Ok(pretty(json!({
        "N": t.n,
        "depth": t.depth,
        "terms": terms,
        "sum": vector_text(&t.sum()?),
        "value": vector_text(&t.value),
        "identity": t.identity_holds()?,
    })))
}

/// Writes `content` to `path` through a temporary file in the same
/// directory, so the path holds either the old file or the whole new one.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(content.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimals() {
        assert_eq!(decimal(&q(5, 8), 6), "0.625000");
        assert_eq!(decimal(&q(1, 3), 6), "0.333333");
        assert_eq!(decimal(&q(2, 3), 6), "0.666667");
        assert_eq!(decimal(&q(1, 1), 6), "1.000000");
        assert_eq!(decimal(&q(0, 1), 6), "0.000000");
        assert_eq!(decimal(&q(1, 2_000_000), 6), "0.000001");
        assert_eq!(decimal(&q(-1, 4), 2), "-0.25");
        assert_eq!(rational(&q(10, 16)), "5/8");
        assert_eq!(rational(&q(1, 1)), "1/1");
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, "a\n").unwrap();
        write_atomic(&p, "bb\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "bb\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/x.csv"), "a").is_err());
    }
}
