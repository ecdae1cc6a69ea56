use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mipt");

fn mipt(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn simulate(out: &Path, n: &str, p: &str, shard: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate",
        "--n",
        n,
        "--p",
        p,
        "--periods-multiplier",
        "0.5",
        "--circuits",
        "60",
        "--seed",
        "11",
        "--shard",
        shard,
        "--checkpoint-every",
        "7",
        "--observables",
        "mi:k=2;tmi:ewg;half",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    mipt(&args)
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

#[test]
fn shards_merge_to_the_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let whole = dir.path().join("whole");
    assert_ok(&simulate(&whole, "8", "0.2", "1/1", &[]));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_ok(&simulate(&b, "8", "0.2", "2/2", &[]));
    assert_ok(&simulate(&a, "8", "0.2", "1/2", &[]));
    let merged = dir.path().join("merged");
    assert_ok(&mipt(&[
        "merge",
        b.join("aggregate.mipt").to_str().unwrap(),
        a.join("aggregate.mipt").to_str().unwrap(),
        "--out",
        merged.to_str().unwrap(),
    ]));
    for file in ["aggregate.mipt", "stats.csv", "decay.csv", "histogram.csv", "run.json", "ewg_TMI_QUARTERS_k4_quarters_x0.json"] {
        assert_eq!(fs::read(whole.join(file)).unwrap(), fs::read(merged.join(file)).unwrap(), "{file}");
    }
    assert!(!whole.join("checkpoint.mipt").exists());
    let decay = fs::read_to_string(whole.join("decay.csv")).unwrap();
    assert!(decay.starts_with("N,p,metric,k,config,x,d,mean,stderr,count,nonzero_count\n"));
    assert_eq!(decay.lines().count(), 1 + 4);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    for (n, obs) in [("8", "gmn:k=5"), ("7", "half"), ("8", "bogus")] {
        let o = mipt(&["simulate", "--n", n, "--p", "0.1", "--circuits", "3", "--observables", obs, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{n} {obs}");
    }
    let o = mipt(&["simulate", "--n", "8"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.mipt");
    let o = mipt(&["merge", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let junk = dir.path().join("junk.mipt");
    fs::write(&junk, b"not an aggregate").unwrap();
    let o = mipt(&["ewg", junk.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn overlapping_shards_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    assert_ok(&simulate(&a, "8", "0.2", "1/2", &[]));
    let agg = a.join("aggregate.mipt");
    let o = mipt(&["merge", agg.to_str().unwrap(), agg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analysis_subcommands_consume_exports() {
    let dir = tempfile::tempdir().unwrap();
    let mut stats = Vec::new();
    let mut raw = Vec::new();
    for n in ["8", "12"] {
        for p in ["0.1", "0.2", "0.3", "0.4"] {
            let out = dir.path().join(format!("n{n}_p{p}"));
            assert_ok(&simulate(&out, n, p, "1/1", &["--keep-raw"]));
            stats.push(out.join("stats.csv"));
            raw.push(out.join("raw.csv"));
        }
    }
    let report = dir.path().join("collapse.json");
    let mut args = vec!["collapse".to_string()];
    args.extend(stats.iter().map(|p| p.display().to_string()));
    args.extend(["--out".into(), report.display().to_string()]);
    let o = mipt(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_ok(&o);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["pairs"].as_array().unwrap().len(), 1);
    assert_eq!(json["pairs"][0]["n1"], 8);

    let decay = dir.path().join("n12_p0.2").join("decay.csv");
    let o = mipt(&["analyze", decay.to_str().unwrap(), "--tail", "3"]);
    assert_ok(&o);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["fits"][0]["n_qubits"], 12);

    let ewg_dir = dir.path().join("ewg");
    let agg = dir.path().join("n12_p0.2").join("aggregate.mipt");
    assert_ok(&mipt(&["ewg", agg.to_str().unwrap(), "--out", ewg_dir.to_str().unwrap()]));
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ewg_dir.join("ewg_TMI_QUARTERS_k4_quarters_x0.json")).unwrap()).unwrap();
    assert_eq!(sidecar["realization_count"], 60 * 3);
    assert_eq!(sidecar["final_layer"], 12);
    let baseline = fs::read_to_string(ewg_dir.join("ewg_TMI_QUARTERS_k4_quarters_x0_baseline.csv")).unwrap();
    assert_eq!(baseline.lines().count(), 13);
    assert!(baseline.lines().all(|l| l.split(',').count() == 12));
}
