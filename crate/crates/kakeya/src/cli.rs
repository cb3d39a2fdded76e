//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;

use kakeya_core::analysis::{certify_lemma_bounds, log_gap_defect_scan, term_decomposition};
use kakeya_core::families::builtin;
use kakeya_core::measure::direction_coverage;
use kakeya_core::phi::{alpha, digit_shift_eval, PhiConfig, PhiEvaluator, PhiVariant};
use kakeya_core::ring::{DigitString, Element, RingSpec, Vector};

use crate::config::{Format, Layers, RunConfig};
use crate::output::{self, write_atomic};
use crate::parallel::{decay_report_parallel, with_threads};
use crate::{fixture, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "kakeya",
    version,
    about = "Exact finite-depth experiments on measure-zero Kakeya-type sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Ring mode: `zp` (carries) or `fq` (no carries).
    #[arg(long)]
    pub ring: Option<String>,
    /// Residue field size (a prime).
    #[arg(long)]
    pub ell: Option<u32>,
    /// `csv` or `json`.
    #[arg(long)]
    pub format: Option<String>,
    /// Write the result here (atomically) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plain-text `key=value` settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for hit-set builds.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Report zero seconds instead of wall time.
    #[arg(long)]
    pub no_timing: bool,
    /// Maximum number of cells in a hit set.
    #[arg(long)]
    pub budget_cells: Option<u64>,
    /// Maximum number of enumerated (direction, w) pairs.
    #[arg(long)]
    pub budget_pairs: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the series phi at a point.
    PhiEval {
        #[command(flatten)]
        common: Common,
        /// One digit string per component of x.
        #[arg(long = "x", required = true)]
        x: Vec<String>,
        /// Output digits.
        #[arg(long)]
        depth: Option<i64>,
        /// Treat x as known only to this many digits (default: exact).
        #[arg(long)]
        input_depth: Option<i64>,
        /// Output dimension (default: number of components of x).
        #[arg(long)]
        q: Option<usize>,
    },
    /// Evaluate the digit-shift map at a point.
    PhiDhEval {
        #[command(flatten)]
        common: Common,
        #[arg(long = "x", required = true)]
        x: Vec<String>,
        #[arg(long)]
        depth: Option<i64>,
        #[arg(long)]
        input_depth: Option<i64>,
    },
    /// Covering-estimate decay table over a range of depths.
    Measure {
        #[command(flatten)]
        common: Common,
        /// `sawyer` (the enumerated series) or `dh` (digit shift).
        #[arg(long)]
        phi: Option<String>,
        /// `kakeya` or `nikodym`.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        dmin: Option<i64>,
        #[arg(long)]
        dmax: Option<i64>,
        /// Frozen CSV table to compare against; a mismatch exits with 3.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Audit that every direction cell carries a full line.
    Coverage {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        depth: Option<i64>,
    },
    /// Integer certificates for the term bounds.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long = "A", default_value_t = 1)]
        a: u64,
        #[arg(long = "B", default_value_t = 0)]
        b: u64,
        #[arg(long, default_value_t = 1)]
        nmin: u64,
        #[arg(long, default_value_t = 1000)]
        nmax: u64,
    },
    /// Defect scan of a strictly but not very strongly differentiable map.
    DiffExample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 10_000)]
        kmax: u64,
        /// Exponent as `num/den`.
        #[arg(long, default_value = "1/10")]
        alpha: String,
    },
    /// The six-term decomposition of f(x, phi(x), w).
    Decompose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: Option<String>,
        #[arg(long = "x", required = true)]
        x: String,
        #[arg(long = "w", required = true)]
        w: String,
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long)]
        depth: Option<i64>,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. `env` looks up environment variables.
pub fn run<I, T>(
    args: I,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, env, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn layers(common: &Common, env: &dyn Fn(&str) -> Option<String>) -> Result<Layers, CliError> {
    let mut l = Layers::defaults();
    if let Some(path) = &common.config {
        l.apply_file(path)?;
    }
    l.apply_env(env)?;
    l.set_opt("ring", common.ring.as_ref())?;
    l.set_opt("ell", common.ell)?;
    l.set_opt("format", common.format.as_ref())?;
    l.set_opt("out", common.out.as_ref().map(|p| p.display().to_string()))?;
    l.set_opt("threads", common.threads)?;
    if common.no_timing {
        l.set("timing", "false")?;
    }
    l.set_opt("budget_cells", common.budget_cells)?;
    l.set_opt("budget_pairs", common.budget_pairs)?;
    Ok(l)
}

fn emit(cfg: &RunConfig, content: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => write_atomic(path, content),
        None => out
            .write_all(content.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".to_string(),
                source,
            }),
    }
}

fn parse_points(xs: &[String]) -> Result<Vec<DigitString>, CliError> {
    Ok(xs
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<DigitString>, _>>()?)
}

/// Takes ring settings from the digit strings unless given explicitly.
fn ring_from_points(
    l: &mut Layers,
    common: &Common,
    points: &[&DigitString],
) -> Result<(), CliError> {
    if let Some(first) = points.first() {
        if common.ring.is_none() {
            l.set("ring", first.ring.mode().token())?;
        }
        if common.ell.is_none() {
            l.set("ell", first.ring.ell().to_string())?;
        }
    }
    Ok(())
}

fn check_rings(ring: RingSpec, points: &[&DigitString]) -> Result<(), CliError> {
    for p in points {
        if p.ring != ring {
            return Err(CliError::Usage(format!(
                "digit string {p} is not in ring {ring}"
            )));
        }
    }
    Ok(())
}

/// The written digits as an element: exact (zero beyond the written digits)
/// unless `input_depth` limits what is known.
fn point(ds: &DigitString, input_depth: Option<i64>, needed: i64) -> Result<Element, CliError> {
    let depth = input_depth.unwrap_or_else(|| ds.written_depth().max(needed).max(1));
    Ok(ds.to_element(depth)?)
}

/// Digits of degrees `0..depth`, written out in full.
fn fixed_width(e: &Element, depth: i64) -> String {
    DigitString {
        ring: e.ring(),
        lowest_degree: 0,
        digits: (0..depth).map(|j| e.digit(j)).collect(),
    }
    .to_string()
}

fn point_output(cfg: &RunConfig, depth: i64, input_depth: i64, values: &[Element]) -> String {
    let lines: Vec<String> = values.iter().map(|e| fixed_width(e, depth)).collect();
    match cfg.format {
        Format::Csv => {
            let mut s = lines.join("\n");
            s.push('\n');
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({
                "depth": depth,
                "input_depth": input_depth,
                "value": lines,
            }))
            .expect("json values always serialize");
            s.push('\n');
            s
        }
    }
}

fn execute(
    cmd: Command,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match cmd {
        Command::PhiEval {
            common,
            x,
            depth,
            input_depth,
            q,
        } => {
            let pts = parse_points(&x)?;
            let mut l = layers(&common, env)?;
            ring_from_points(&mut l, &common, &pts.iter().collect::<Vec<_>>())?;
            l.set_opt("depth", depth)?;
            let cfg = l.resolve()?;
            check_rings(cfg.ring, &pts.iter().collect::<Vec<_>>())?;
            let p = pts.len();
            let phi = PhiEvaluator::new(
                PhiConfig::new(cfg.ring, p, q.unwrap_or(p))?,
                PhiVariant::Series,
                cfg.depth,
            )?;
            let xv = Vector::new(
                pts.iter()
                    .map(|d| point(d, input_depth, phi.input_depth()))
                    .collect::<Result<Vec<_>, _>>()?,
            )?;
            let y = phi.eval(&xv)?;
            let text = point_output(&cfg, cfg.depth, phi.input_depth(), y.entries());
            emit(&cfg, &text, out)
        }
        Command::PhiDhEval {
            common,
            x,
            depth,
            input_depth,
        } => {
            let pts = parse_points(&x)?;
            let mut l = layers(&common, env)?;
            ring_from_points(&mut l, &common, &pts.iter().collect::<Vec<_>>())?;
            l.set_opt("depth", depth)?;
            let cfg = l.resolve()?;
            check_rings(cfg.ring, &pts.iter().collect::<Vec<_>>())?;
            let values = pts
                .iter()
                .map(|d| {
                    Ok(digit_shift_eval(
                        &point(d, input_depth, cfg.depth + 1)?,
                        cfg.depth,
                    )?)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let text = point_output(&cfg, cfg.depth, cfg.depth + 1, &values);
            emit(&cfg, &text, out)
        }
        Command::Measure {
            common,
            phi,
            family,
            dmin,
            dmax,
            fixture,
        } => {
            let mut l = layers(&common, env)?;
            l.set_opt("phi", phi)?;
            l.set_opt("family", family)?;
            l.set_opt("dmin", dmin)?;
            l.set_opt("dmax", dmax)?;
            l.set_opt("fixture", fixture.map(|p| p.display().to_string()))?;
            let cfg = l.resolve()?;
            let fam = builtin(&cfg.family, cfg.ring)?;
            let report = with_threads(cfg.threads, || {
                decay_report_parallel(
                    fam.as_ref(),
                    cfg.phi,
                    cfg.d_min,
                    cfg.d_max,
                    cfg.budget,
                    cfg.timing,
                )
            })??;
            let csv = output::decay_csv(&report);
            let text = match cfg.format {
                Format::Csv => csv.clone(),
                Format::Json => output::decay_json(&report),
            };
            emit(&cfg, &text, out)?;
            match &cfg.fixture {
                Some(path) => fixture::check_fixture(path, &csv),
                None => Ok(()),
            }
        }
        Command::Coverage {
            common,
            phi,
            family,
            depth,
        } => {
            let mut l = layers(&common, env)?;
            l.set_opt("phi", phi)?;
            l.set_opt("family", family)?;
            l.set_opt("depth", depth)?;
            let cfg = l.resolve()?;
            let fam = builtin(&cfg.family, cfg.ring)?;
            let report = with_threads(cfg.threads, || {
                direction_coverage(fam.as_ref(), cfg.phi, cfg.depth, cfg.budget)
            })??;
            let text = match cfg.format {
                Format::Csv => output::coverage_text(&cfg.family, cfg.phi, &report),
                Format::Json => output::coverage_json(&cfg.family, cfg.phi, &report),
            };
            emit(&cfg, &text, out)
        }
        Command::Certify {
            common,
            a,
            b,
            nmin,
            nmax,
        } => {
            let cfg = layers(&common, env)?.resolve()?;
            let report = certify_lemma_bounds(a, b, nmin, nmax, cfg.ring.ell())?;
            let text = match cfg.format {
                Format::Csv => output::certificate_csv(&report),
                Format::Json => output::certificate_json(&report),
            };
            emit(&cfg, &text, out)
        }
        Command::DiffExample {
            common,
            p,
            kmax,
            alpha,
        } => {
            let cfg = layers(&common, env)?.resolve()?;
            let alpha = parse_ratio(&alpha)?;
            let scan = log_gap_defect_scan(p, kmax, alpha)?;
            let text = match cfg.format {
                Format::Csv => output::log_gap_csv(&scan),
                Format::Json => output::log_gap_json(&scan),
            };
            emit(&cfg, &text, out)
        }
        Command::Decompose {
            common,
            family,
            x,
            w,
            n,
            depth,
        } => {
            let xs: DigitString = x.parse()?;
            let ws: DigitString = w.parse()?;
            let mut l = layers(&common, env)?;
            ring_from_points(&mut l, &common, &[&xs, &ws])?;
            l.set_opt("family", family)?;
            l.set("depth", depth.unwrap_or(12).to_string())?;
            let cfg = l.resolve()?;
            check_rings(cfg.ring, &[&xs, &ws])?;
            let fam = builtin(&cfg.family, cfg.ring)?;
            let dims = fam.dims();
            let phi = PhiEvaluator::new(
                PhiConfig::new(cfg.ring, dims.p, dims.q)?,
                PhiVariant::Series,
                cfg.depth,
            )?;
            let need = phi.input_depth().max(alpha(n + 1) as i64);
            let xv = Vector::new(vec![point(&xs, None, need)?])?;
            let wv = Vector::new(vec![point(&ws, None, cfg.depth)?])?;
            let t = term_decomposition(fam.as_ref(), &xv, &wv, n, cfg.depth)?;
            let text = match cfg.format {
                Format::Csv => output::decomposition_text(&t)?,
                Format::Json => output::decomposition_json(&t)?,
            };
            emit(&cfg, &text, out)
        }
    }
}

fn parse_ratio(s: &str) -> Result<Ratio<i64>, CliError> {
    let bad = || CliError::Usage(format!("alpha: expected num/den, got {s:?}"));
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: i64 = n.trim().parse().map_err(|_| bad())?;
    let d: i64 = d.trim().parse().map_err(|_| bad())?;
    if d == 0 {
        return Err(bad());
    }
    Ok(Ratio::new(n, d))
}
