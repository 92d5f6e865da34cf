mod support;

use std::fs;
use std::path::Path;
use std::process::Command;

use towerplex_cli::{cmd_build, cmd_export, cmd_resume, cmd_stats, load_chain, CliError, RunConfig};
use towerplex_core::exact::{parse_rat, to_decimal};
use towerplex_core::stats::weight_sequence;

const SMALL: &str = r#"
starter.kind = "odometer"
starter.depth = 10
chain.stages = 3
stats.rigidity = [2, 4, 8]
stats.sweep_horizon = 32
"#;

fn snapshots(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "snap"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn resume_reproduces_a_fresh_build() {
    let fresh = tempfile::tempdir().unwrap();
    support::build(SMALL, fresh.path());

    let resumed = tempfile::tempdir().unwrap();
    let short = RunConfig::from_toml_str(SMALL).unwrap().with_flags(Some(2), None, None);
    cmd_build(&short, resumed.path()).unwrap();
    assert_eq!(snapshots(resumed.path()).len(), 2);
    cmd_resume(&RunConfig::from_toml_str(SMALL).unwrap(), resumed.path()).unwrap();

    assert_eq!(snapshots(resumed.path()), snapshots(fresh.path()));
    assert_eq!(snapshots(fresh.path()).len(), 3);
}

#[test]
fn stats_csvs_hold_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml_str(SMALL).unwrap();
    let chain = support::build(SMALL, dir.path());
    cmd_stats(&cfg, &chain, dir.path()).unwrap();

    let t = chain.stage(3).unwrap().t().unwrap();
    let w = weight_sequence(&t, &chain.starter.space, 10).unwrap();
    let mut r = csv::Reader::from_path(dir.path().join("weights.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["k", "u_k", "u_k_approx", "a_k", "a_k_approx"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 10);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), k);
        let u = parse_rat(&row[1]).unwrap();
        assert_eq!(u, w.u[k]);
        assert_eq!(row[2], to_decimal(&u, 12));
        assert_eq!(parse_rat(&row[3]).unwrap(), w.a_n(k + 1));
    }

    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 33);
    let rigidity = fs::read_to_string(dir.path().join("rigidity.csv")).unwrap();
    assert_eq!(rigidity.lines().next(), Some("rho,deviation,deviation_approx"));
    assert_eq!(rigidity.lines().count(), 4);

    let written = cmd_export(dir.path()).unwrap();
    let names: Vec<String> = written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["weights.dat", "rwm.dat", "rigidity.dat", "power_1_m1.dat", "power_2.dat", "sweep.dat"]);
    let weights = fs::read_to_string(dir.path().join("plot/weights.dat")).unwrap();
    assert_eq!(weights.lines().count(), 11);
}

#[test]
fn export_of_empty_tables_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let files = [
        ("weights.csv", "k,u_k,u_k_approx,a_k,a_k_approx\n"),
        ("rwm.csv", "i,term,term_approx,partial_sum,partial_sum_approx,normalizer,normalizer_approx\n"),
        ("rigidity.csv", "rho,deviation,deviation_approx\n"),
        ("power.csv", "v,i,term,term_approx,partial_sum,partial_sum_approx,normalizer,normalizer_approx\n"),
        ("sweep.csv", "N,unswept,unswept_approx\n"),
    ];
    for (name, text) in files {
        fs::write(dir.path().join(name), text).unwrap();
    }
    let written = cmd_export(dir.path()).unwrap();
    let names: Vec<String> = written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    // No rows means no vectors, hence no per-vector power files.
    assert_eq!(names, ["weights.dat", "rwm.dat", "rigidity.dat", "sweep.dat"]);
    for p in written {
        assert_eq!(fs::read_to_string(p).unwrap(), "# x y (y approximate, 12 significant digits)\n");
    }
}

#[test]
fn export_without_inputs_names_the_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_export(dir.path()).unwrap_err();
    assert!(matches!(err, CliError::MissingInput(ref p) if p.ends_with("weights.csv")), "{err}");
}

#[test]
fn corrupt_snapshot_is_reported_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml_str(SMALL).unwrap().with_flags(Some(2), None, None);
    cmd_build(&cfg, dir.path()).unwrap();
    let victim = dir.path().join("stage_002.snap");
    let text = fs::read_to_string(&victim).unwrap();
    fs::write(&victim, &text[..text.len() / 3]).unwrap();

    let err = load_chain(&cfg, dir.path()).unwrap_err();
    assert_eq!(err.code(), "CorruptSnapshot");
    assert_eq!(err.stage(), Some(2));
    let line = err.error_line();
    assert!(line.starts_with("ERROR CorruptSnapshot 2 "), "{line}");
    assert!(line.contains(&victim.display().to_string()), "{line}");
}

#[test]
fn snapshots_of_another_starter_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml_str(SMALL).unwrap().with_flags(Some(1), None, None);
    cmd_build(&cfg, dir.path()).unwrap();
    let other = RunConfig::from_toml_str("starter.kind = \"odometer\"\nstarter.depth = 9\n").unwrap();
    assert_eq!(load_chain(&other, dir.path()).unwrap_err().code(), "CorruptSnapshot");
}

fn towerplex(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_towerplex")).args(args).output().unwrap()
}

#[test]
fn binary_reports_missing_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = towerplex(&["stats", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("ERROR MissingSnapshot - "), "{stderr}");
    assert_eq!(stderr.lines().count(), 1);
}

#[test]
fn binary_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "chain.stagez = 3\n").unwrap();
    let out = towerplex(&["build", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("ERROR InvalidConfig - "), "{stderr}");
}

#[test]
fn binary_builds_one_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "starter.depth = 6\n").unwrap();
    let out = towerplex(&["build", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--stages", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "stage 1 b=2 h=4 eps=1/4 M=2\n");
    assert!(dir.path().join("stage_001.snap").exists());
    assert!(!dir.path().join("stage_002.snap").exists());
}

proptest::proptest! {
    #[test]
    fn csv_cells_round_trip_rationals(p in -1_000_000_000i64..1_000_000_000, q in 1i64..1_000_000_000) {
        let x = towerplex_core::exact::rat(p, q);
        let mut t = towerplex_cli::report::Table::new(&[("k", false), ("x", true)]);
        t.push(&["0".into()], &[&x]);
        let text = t.to_csv();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let row = r.records().next().unwrap().unwrap();
        proptest::prop_assert_eq!(parse_rat(&row[1]).unwrap(), x.clone());
        let approx = to_decimal(&x, 12);
        proptest::prop_assert_eq!(&row[2], approx.as_str());
    }
}
