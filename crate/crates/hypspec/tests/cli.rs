use std::path::Path;
use std::process::{Command, Output};

const GAMMA2: &str = r#"{"label": "Gamma(2)", "signature": {"g": 0, "n": 3},
  "generators": [[[1, 2], [0, 1]], [[1, 0], [2, 1]]]}"#;

fn hypspec(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypspec"))
        .args(args)
        .env("HYPSPEC_CACHE_DIR", cache)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(out: &str, key: &str) -> f64 {
    let line = out.lines().find(|l| l.starts_with(&format!("{key} "))).unwrap_or_else(|| panic!("no {key} in {out}"));
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

fn setup() -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("gamma2.json");
    std::fs::write(&g, GAMMA2).unwrap();
    (dir, g.to_str().unwrap().to_owned())
}

#[test]
fn spectrum_reports_systole_and_fills_cache() {
    let (dir, g) = setup();
    let cache = dir.path().join("cache");
    let o = hypspec(&["spectrum", &g, "--cutoff", "4", "--workers", "2"], &cache);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("systole 3.52549434807817e0 (2*arccosh(3))"), "{out}");
    assert_eq!(field(&out, "classes"), 3.0);
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
    // Second run is served from the cache with the same summary.
    let again = hypspec(&["spectrum", &g, "--cutoff", "4"], &cache);
    assert_eq!(stdout(&again), out);
}

#[test]
fn tiny_cutoff_is_empty() {
    let (dir, g) = setup();
    let o = hypspec(&["spectrum", &g, "--cutoff", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("classes 0"));
}

#[test]
fn bad_inputs_exit_2() {
    let (dir, _) = setup();
    let missing = dir.path().join("missing.json");
    assert_eq!(hypspec(&["spectrum", missing.to_str().unwrap(), "--cutoff", "4"], dir.path()).status.code(), Some(2));
    let elliptic = dir.path().join("elliptic.json");
    std::fs::write(&elliptic, r#"{"label": "e", "signature": {"g": 0, "n": 3}, "generators": [[[0, -1], [1, 0]]]}"#)
        .unwrap();
    assert_eq!(hypspec(&["spectrum", elliptic.to_str().unwrap(), "--cutoff", "4"], dir.path()).status.code(), Some(2));
    assert_eq!(hypspec(&["constants", "--g", "0", "--n", "2"], dir.path()).status.code(), Some(2));
    assert_eq!(hypspec(&["degenerate", "--k", "1"], dir.path()).status.code(), Some(2));
}

#[test]
fn budget_exhaustion_writes_partial_file() {
    let (dir, g) = setup();
    let part = dir.path().join("partial.spectrum");
    let o =
        hypspec(&["spectrum", &g, "--cutoff", "9", "--max-nodes", "2000", "--out", part.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let text = std::fs::read_to_string(&part).unwrap();
    assert!(text.contains("status PARTIAL"));
    assert!(text.contains("# manifest "));
}

#[test]
fn zeta_on_spectrum_files() {
    let (dir, g) = setup();
    let empty = dir.path().join("empty.spectrum");
    hypspec(&["spectrum", &g, "--cutoff", "0.1", "--out", empty.to_str().unwrap()], dir.path());
    let o = hypspec(&["zeta", empty.to_str().unwrap(), "--s", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "log_Z"), 0.0);
    assert_eq!(hypspec(&["zeta", empty.to_str().unwrap(), "--s", "1"], dir.path()).status.code(), Some(2));

    let mut values = Vec::new();
    for cutoff in ["7", "9"] {
        let f = dir.path().join(format!("g{cutoff}.spectrum"));
        hypspec(&["spectrum", &g, "--cutoff", cutoff, "--out", f.to_str().unwrap()], dir.path());
        let o = hypspec(&["zeta", f.to_str().unwrap(), "--s", "2", "--group", &g], dir.path());
        assert_eq!(o.status.code(), Some(0));
        let out = stdout(&o);
        assert!(out.contains("heuristic"));
        values.push(field(&out, "log_Z"));
    }
    assert!(values.iter().all(|&v| v < 0.0));
    assert!((values[0] - values[1]).abs() < 1e-3);

    let other = dir.path().join("other.json");
    std::fs::write(&other, r#"{"label": "c", "signature": {"g": 0, "n": 2}, "generators": [[[2, 0], [0, 0.5]]]}"#)
        .unwrap();
    let f = dir.path().join("g7.spectrum");
    let o = hypspec(&["zeta", f.to_str().unwrap(), "--s", "2", "--group", other.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fingerprint"));
}

#[test]
fn constants_table_and_clutching() {
    let dir = tempfile::tempdir().unwrap();
    let run = |g: &str, n: &str| {
        let o = hypspec(&["constants", "--g", g, "--n", n, "--k", "1"], dir.path());
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
    };
    let unit = run("1", "1");
    for key in ["log_C", "log_E2", "C_k"] {
        assert!(field(&unit, key).is_finite());
    }
    // Printed to 15 significant digits.
    assert!(unit.contains("log_C 2.48505372440541e0"));
    let sphere = run("0", "3");
    let closed = run("3", "0");
    let k = 1.0f64;
    let node = (k + 1.0) * 2f64.ln() + 2f64.ln() + (2.0 * k + 1.0) * std::f64::consts::PI.ln();
    let rhs = 3.0 * node + field(&sphere, "log_E2") + 3.0 * field(&unit, "log_E2");
    let lhs = field(&closed, "log_E2");
    assert!((lhs - rhs).abs() / lhs.abs() < 1e-12, "{lhs} vs {rhs}");
}

#[test]
fn degenerate_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv.csv");
    let args = ["degenerate", "--k", "1", "--L-grid", "100,1000,10000", "--seed", "42", "--out", out.to_str().unwrap()];
    assert_eq!(hypspec(&args, dir.path()).status.code(), Some(0));
    let first = std::fs::read(&out).unwrap();
    assert_eq!(hypspec(&args, dir.path()).status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), first, "reruns are byte-identical");

    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(first.as_slice());
    let ratios: Vec<f64> = r.records().map(|x| x.unwrap()[5].parse().unwrap()).collect();
    assert_eq!(ratios.len(), 3);
    assert!(ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));

    let o = hypspec(&["degenerate", "--n-nodes", "0", "--seed", "1", "--L-grid", "100,1000"], dir.path());
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(o.stdout.as_slice());
    for rec in r.records() {
        let rec = rec.unwrap();
        for col in [5, 8, 10] {
            assert_eq!(rec[col].parse::<f64>().unwrap(), 1.0);
        }
    }
}

#[test]
fn collar_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypspec(&["collar", "--k", "2", "--L-grid", "9.21034037197618,13.815510557964274"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(o.stdout.as_slice());
    let errs: Vec<f64> = r.records().map(|x| x.unwrap()[6].parse().unwrap()).collect();
    assert_eq!(errs.len(), 2);
    assert!(errs.iter().all(|&e| e < 1e-6));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypspec(&["verify", "--suite", "constants"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("FAIL"));

    let o = hypspec(&["verify", "--suite", "constants", "--inject-zeta-prime-delta", "1e-6"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("relation_C_anchored_max_residual"));
    assert!(out.lines().any(|l| l.starts_with("constants,relation_C_anchored_max_residual,") && l.ends_with("FAIL")));
    assert!(out.lines().any(|l| l.starts_with("constants,zeta_prime_minus1_cross_validation,") && l.ends_with("FAIL")));
}

#[test]
fn verify_all_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypspec(&["verify", "--suite", "all", "--workers", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().nth(1).unwrap() == "suite,check,measured,threshold,status");
}
