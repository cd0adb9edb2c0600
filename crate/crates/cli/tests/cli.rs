use std::fs;
use std::path::Path;

use ststore_cli::run;
use tempfile::TempDir;

fn ststore(args: &[&str]) -> i32 {
    run(std::iter::once("ststore").chain(args.iter().copied()))
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

/// Data lines (no `#` provenance) split into cells.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn out(dir: &TempDir) -> String {
    dir.path().to_str().unwrap().to_string()
}

#[test]
fn golden_headers() {
    let d = TempDir::new().unwrap();
    let o = out(&d);
    assert_eq!(ststore(&["dmt", "--out", &o]), 0);
    assert_eq!(ststore(&["outage", "--out", &o, "--trials", "500", "--snr-db", "0:5:5"]), 0);
    assert_eq!(ststore(&["simulate", "--out", &o, "--trials", "20", "--snr-db", "10"]), 0);
    assert_eq!(ststore(&["repair", "--out", &o, "--trials", "2", "--snr-db", "20", "--file-bytes", "12"]), 0);
    let header = |name: &str| rows(&read(d.path(), name))[0].join(",");
    assert_eq!(
        header("dmt.csv"),
        "r,d_optimal,d_proposed,d_tdma,r_exact,d_optimal_exact,d_proposed_exact,d_tdma_exact"
    );
    assert_eq!(header("outage.csv"), "scheme,K,r,offset,snr_db,trials,outages,p_hat,ci_lo,ci_hi");
    assert_eq!(
        header("simulate.csv"),
        "snr_db,users,m,decoder,trials,frame_errors,fer,symbol_errors,ser,visited_nodes_mean,fallbacks"
    );
    assert_eq!(
        header("repair.csv"),
        "snr_db,trials,session_err_rate,share_fail_rate,repair_fail_rate,scheme,sessions,session_errors,\
         pair_sessions,pair_session_errors,shares,share_failures,repair_failures,visited_nodes_mean"
    );
    let csv = read(d.path(), "outage.csv");
    let prov: Vec<&str> = csv.lines().take(4).collect();
    assert_eq!(prov[0], format!("# ststore {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(prov[1], "# command: outage");
    assert_eq!(prov[2], "# seed: 0");
    assert!(prov[3].starts_with("# config: {"));
}

#[test]
fn dmt_table_and_chart() {
    let d = TempDir::new().unwrap();
    let o = out(&d);
    assert_eq!(ststore(&["dmt", "--K", "10", "--grid", "41", "--out", &o]), 0);
    let first = read(d.path(), "dmt.csv");
    let table = rows(&first);
    assert_eq!(table.len(), 1 + 41);
    assert_eq!(table[1][..4], ["0", "2", "2", "2"]);
    assert_eq!(table[41][4], "1/5");
    let svg = read(d.path(), "dmt.svg");
    assert_eq!(svg.matches("<polyline").count(), 3);
    assert_eq!(ststore(&["dmt", "--K", "10", "--grid", "41", "--out", &o]), 0);
    assert_eq!(read(d.path(), "dmt.csv"), first);
}

#[test]
fn outage_is_reproducible_across_workers() {
    let d = TempDir::new().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let base = ["outage", "--scheme", "pair", "--r", "1/20", "--trials", "1000", "--snr-db", "0:10:5", "--seed", "9"];
    let with = |dir: &Path, w: &str| {
        let mut v: Vec<&str> = base.to_vec();
        v.extend(["--workers", w, "--out", dir.to_str().unwrap()]);
        ststore(&v.iter().map(|s| &**s).collect::<Vec<_>>())
    };
    assert_eq!(with(&a, "1"), 0);
    assert_eq!(with(&b, "4"), 0);
    assert_eq!(read(&a, "outage.csv"), read(&b, "outage.csv"));
    assert_eq!(read(&a, "outage_summary.json"), read(&b, "outage_summary.json"));
    let table = rows(&read(&a, "outage.csv"));
    assert_eq!(table.len(), 4);
    for r in &table[1..] {
        assert_eq!(r[0], "pair");
        assert_eq!(r[5], "1000");
        let p: f64 = r[7].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn provenance_config_reruns_identically() {
    let d = TempDir::new().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let a_s = a.to_str().unwrap();
    assert_eq!(
        ststore(&["outage", "--scheme", "tdma", "--trials", "800", "--snr-db", "0,3", "--seed", "4", "--out", a_s]),
        0
    );
    let csv = read(&a, "outage.csv");
    let cfg_line = csv.lines().find_map(|l| l.strip_prefix("# config: ")).unwrap();
    let cfg_path = d.path().join("cfg.json");
    fs::write(&cfg_path, cfg_line).unwrap();
    assert_eq!(
        ststore(&["outage", "--config", cfg_path.to_str().unwrap(), "--out", b.to_str().unwrap()]),
        0
    );
    assert_eq!(read(&b, "outage.csv"), csv);
}

#[test]
fn flags_override_config_file() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"K": 4, "grid": 5, "seed": 3}"#).unwrap();
    let o = out(&d);
    assert_eq!(ststore(&["dmt", "--config", cfg.to_str().unwrap(), "--grid", "3", "--out", &o]), 0);
    let csv = read(d.path(), "dmt.csv");
    assert!(csv.contains(r#""K":4"#) && csv.contains(r#""grid":3"#) && csv.contains("# seed: 3"));
    assert_eq!(rows(&csv).len(), 4);
    fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(ststore(&["dmt", "--config", cfg.to_str().unwrap(), "--out", &o]), 2);
}

#[test]
fn simulate_ml_matches_sphere() {
    let d = TempDir::new().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let go = |dec: &str, dir: &Path| {
        ststore(&[
            "simulate", "--m", "2", "--decoder", dec, "--trials", "100", "--snr-db", "0:10:5", "--seed", "2", "--out",
            dir.to_str().unwrap(),
        ])
    };
    assert_eq!(go("sphere", &a), 0);
    assert_eq!(go("ml", &b), 0);
    let (x, y) = (rows(&read(&a, "simulate.csv")), rows(&read(&b, "simulate.csv")));
    for (p, q) in x[1..].iter().zip(&y[1..]) {
        assert_eq!(p[5], q[5], "frame errors");
        assert_eq!(p[7], q[7], "symbol errors");
    }
}

#[test]
fn repair_at_absurd_snr_never_fails() {
    let d = TempDir::new().unwrap();
    let o = out(&d);
    assert_eq!(
        ststore(&["repair", "--snr-db", "1000", "--trials", "20", "--file-bytes", "30", "--scheme", "both", "--out", &o]),
        0
    );
    let table = rows(&read(d.path(), "repair.csv"));
    assert_eq!(table.len(), 3);
    for r in &table[1..] {
        assert_eq!(&r[2..5], ["0", "0", "0"]);
    }
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    let o = out(&d);
    assert_eq!(ststore(&["outage", "--snr-db", "10:5:1", "--out", &o]), 2);
    assert_eq!(ststore(&["outage", "--scheme", "full-mac", "--K", "13", "--out", &o]), 2);
    assert_eq!(ststore(&["repair", "--n", "3", "--k", "3", "--d", "3", "--out", &o]), 2);
    assert_eq!(ststore(&["simulate", "--m", "3", "--out", &o]), 2);
    assert_eq!(ststore(&["nonsense"]), 2);
    // no outage events at 60 dB with 50 trials: the slope cannot be fitted
    assert_eq!(ststore(&["outage", "--scheme", "tdma", "--snr-db", "60,70", "--trials", "50", "--out", &o]), 4);
    assert!(d.path().join("outage.csv").exists());
    let blocker = d.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert_eq!(ststore(&["dmt", "--out", blocker.join("sub").to_str().unwrap()]), 3);
}

#[test]
fn json_format() {
    let d = TempDir::new().unwrap();
    let o = out(&d);
    assert_eq!(ststore(&["dmt", "--format", "json", "--grid", "3", "--out", &o]), 0);
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "dmt.json")).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["rows"][0]["d_tdma"], serde_json::json!(2.0));
    assert_eq!(v["provenance"]["command"], "dmt");
}

#[test]
fn selftest_passes() {
    assert_eq!(ststore(&["selftest"]), 0);
}
