use std::process::{Command, Output};

fn kakeya(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kakeya"))
        .args(args)
        .env_remove("KAKEYA_BUDGET_CELLS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn in_process(args: &[&str], env: &[(&str, &str)]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let lookup = |k: &str| {
        env.iter()
            .find(|(key, _)| *key == k)
            .map(|(_, v)| v.to_string())
    };
    let argv: Vec<&str> = std::iter::once("kakeya")
        .chain(args.iter().copied())
        .collect();
    let code = kakeya::cli::run(argv, &lookup, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn phi_of_zero_is_zero() {
    let o = kakeya(&[
        "phi-eval", "--ring", "fq", "--ell", "2", "--x", "fq:2:0:0", "--depth", "6",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "fq:2:0:0,0,0,0,0,0\n");
}

#[test]
fn phi_outputs_are_prefix_consistent() {
    for x in ["zp:2:0:1,0,1,1,0,1", "fq:2:0:1,1,1", "zp:3:0:2,1"] {
        let short = kakeya(&["phi-eval", "--x", x, "--depth", "5"]);
        let long = kakeya(&["phi-eval", "--x", x, "--depth", "8"]);
        assert!(short.status.success() && long.status.success());
        let (s, l) = (stdout(&short), stdout(&long));
        let s_digits = s.trim().rsplit(':').next().unwrap();
        let l_digits = l.trim().rsplit(':').next().unwrap();
        assert!(l_digits.starts_with(s_digits), "{x}: {s} vs {l}");
    }
}

#[test]
fn digit_shift_cli() {
    let o = kakeya(&["phi-dh-eval", "--x", "fq:2:0:0,1,1,1,1", "--depth", "4"]);
    assert!(o.status.success());
    // output digit j is 0 when j + 2 is a power of two, else input digit j + 1
    assert_eq!(stdout(&o), "fq:2:0:0,1,0,1\n");
}

#[test]
fn malformed_input_exits_one_without_output() {
    for args in [
        &["phi-eval", "--x", "fq:2:0:5"][..],
        &["phi-eval", "--x", "nonsense"],
        &["measure", "--phi", "bogus"],
        &["measure", "--dmin", "4", "--dmax", "2"],
        &["no-such-command"],
    ] {
        let o = kakeya(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn help_exits_zero() {
    let o = kakeya(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("measure"));
}

#[test]
fn oversized_measure_exits_two_with_counts() {
    let o = kakeya(&["measure", "--dmax", "30", "--ell", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("cells") && err.contains("pairs"), "{err}");
}

#[test]
fn budget_from_environment_applies_below_flags() {
    let args = ["measure", "--dmin", "2", "--dmax", "3"];
    let (code, _, err) = in_process(&args, &[("KAKEYA_BUDGET_CELLS", "10")]);
    assert_eq!(code, 2, "{err}");
    let mut with_flag = args.to_vec();
    with_flag.extend(["--budget-cells", "1000"]);
    let (code, out, _) = in_process(&with_flag, &[("KAKEYA_BUDGET_CELLS", "10")]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3);
}

#[test]
fn config_file_sits_below_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test\nphi=dh\ndmin=2\ndmax=3\ntiming=false\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let (code, out, _) = in_process(&["measure", "--config", cfg], &[]);
    assert_eq!(code, 0);
    assert!(out.contains("\n2,12,16,"), "{out}");
    let (_, out, _) = in_process(&["measure", "--config", cfg, "--phi", "sawyer"], &[]);
    assert!(out.contains("\n2,10,16,"), "{out}");
}

#[test]
fn coverage_reports_no_missing_pairs() {
    for family in ["kakeya", "nikodym"] {
        let o = kakeya(&["coverage", "--depth", "6", "--family", family]);
        assert!(o.status.success());
        let text = stdout(&o);
        assert!(text.contains("missing:0\n"), "{text}");
        assert!(text.contains("vertical:excluded\n"), "{text}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["measure", "--dmax", "6", "--no-timing", "--threads", "2"];
    let (_, a, _) = in_process(&args, &[]);
    let (_, b, _) = in_process(&args, &[]);
    assert_eq!(a, b);
    let (_, c, _) = in_process(
        &["measure", "--dmax", "6", "--no-timing", "--threads", "1"],
        &[],
    );
    assert_eq!(a, c);
    let (_, j1, _) = in_process(
        &["certify", "--A", "2", "--B", "1", "--format", "json"],
        &[],
    );
    let (_, j2, _) = in_process(
        &["certify", "--A", "2", "--B", "1", "--format", "json"],
        &[],
    );
    assert_eq!(j1, j2);
}

#[test]
fn out_file_is_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let p = path.to_str().unwrap();
    let (code, out, _) = in_process(&["measure", "--dmax", "4", "--out", p, "--no-timing"], &[]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("D,hit_cells,"));
    assert_eq!(written.lines().count(), 4);

    // a failing run leaves the previous file untouched
    let (code, _, _) = in_process(&["measure", "--dmax", "30", "--ell", "3", "--out", p], &[]);
    assert_eq!(code, 2);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), written);
}

#[test]
fn fixture_mismatch_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    let (code, table, _) = in_process(&["measure", "--dmax", "4"], &[]);
    assert_eq!(code, 0);
    std::fs::write(&good, &table).unwrap();
    let (code, _, _) = in_process(
        &[
            "measure",
            "--dmax",
            "4",
            "--fixture",
            good.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code, 0);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, table.replace("\n3,38,", "\n3,39,")).unwrap();
    let (code, _, err) = in_process(
        &["measure", "--dmax", "4", "--fixture", bad.to_str().unwrap()],
        &[],
    );
    assert_eq!(code, 3, "{err}");
}

#[test]
fn json_measure_flags_experimental_tables() {
    let (_, out, _) = in_process(
        &[
            "measure", "--ring", "zp", "--phi", "dh", "--dmax", "3", "--format", "json",
        ],
        &[],
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["experimental"], true);
    let (_, out, _) = in_process(
        &["measure", "--phi", "dh", "--dmax", "3", "--format", "json"],
        &[],
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["experimental"], false);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn decomposition_identity_from_cli() {
    let (code, out, err) = in_process(
        &[
            "decompose",
            "--x",
            "zp:2:0:1,1,0,1",
            "--w",
            "zp:2:0:1,0,1",
            "--n",
            "3",
            "--depth",
            "8",
        ],
        &[],
    );
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("identity:true"), "{out}");
}

#[test]
fn log_gap_example_from_cli() {
    let (code, out, _) = in_process(&["diff-example", "--kmax", "200", "--format", "json"], &[]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["crossover"], 71);
    assert_eq!(v["strict_nondecreasing"], true);
}

#[test]
fn short_input_exits_two_with_required_depth() {
    let o = kakeya(&[
        "phi-eval",
        "--x",
        "zp:2:0:1,1",
        "--depth",
        "10",
        "--input-depth",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("15 digits required"));
}
