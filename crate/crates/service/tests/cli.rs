mod common;

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::process::Stdio;

use common::{cli, stderr_json, stdout_json};

#[test]
fn validate_names_a_missing_curve_file() {
    let dir = tempfile::tempdir().unwrap();
    let project = common::demo(dir.path());
    assert_eq!(stdout_json(&cli(&project, &["validate"]))["valid"], true);
    fs::remove_file(dir.path().join("curves/residential.csv")).unwrap();
    let o = cli(&project, &["validate"]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr_json(&o);
    assert_eq!(e["schema_version"], 1);
    assert_eq!(e["error"]["kind"], "missing_file");
    assert!(e["error"]["message"].as_str().unwrap().contains("residential.csv"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let project = common::demo(dir.path());
    for args in [&["baseline", "--rp", "ten"][..], &["capture-scan", "--tiles", "1,x"], &["report"], &["bogus"]] {
        let o = cli(&project, args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr_json(&o)["error"]["kind"], "usage");
    }
    let o = cli(&project, &["baseline", "--rp", "7"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn capture_scan_then_rank_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let project = common::demo(dir.path());
    let scan = stdout_json(&cli(&project, &["capture-scan", "--rp", "10,100", "--workers", "2", "--seed", "7"]));
    assert_eq!(scan["scheduled"], 2 + 2 * 9);
    assert_eq!(scan["solver_runs"], 20);
    let again = stdout_json(&cli(&project, &["capture-scan", "--rp", "10,100"]));
    assert_eq!(again["solver_runs"], 0);
    assert_eq!(again["runs"], scan["runs"]);

    let o = cli(&project, &["rank", "--rp", "10,100"]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<String>> = csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 18);
    for block in rows.chunks(9) {
        let scores: Vec<f64> = block.iter().map(|r| r[8].parse().unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]), "{scores:?}");
        assert_eq!(scores[0], scores.iter().cloned().fold(f64::MIN, f64::max));
        assert_eq!(block[0][1], "5");
    }

    let spec = dir.path().join("pave.json");
    fs::write(
        &spec,
        r#"{"specs": [{"id": "district", "type": "permeable_pavement",
            "geometry": {"type": "Polygon", "coordinates": [[[340,300],[460,300],[460,600],[340,600],[340,300]]]}}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let iv = stdout_json(&cli(&project, &["intervene", "--spec", spec.to_str().unwrap(), "--set-id", "pave", "--rp", "10", "--out", out.to_str().unwrap()]));
    assert_eq!(iv["installation"], 1_080_000.0);
    assert!(iv["rows"][0]["benefit"].as_f64().unwrap() > 0.0);
    assert!(out.join("intervention_pave.csv").exists());

    let rep = stdout_json(&cli(&project, &["report", "--out", out.to_str().unwrap()]));
    assert_eq!(rep["runs"].as_array().unwrap().len(), 21);
    for f in ["counts.csv", "totals.csv", "ranking_rp10.csv", "ranking_rp100.json", "interventions.csv",
              "results/baseline_rp10/depth.png", "results/capture_5_1_rp100/exposure.geojson",
              "results/intervention_pave_rp10/damages.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let totals = fs::read_to_string(out.join("totals.csv")).unwrap();
    assert_eq!(totals.lines().count(), 22);
    let counts = fs::read_to_string(out.join("counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 3);
}

#[test]
fn serve_reads_its_port_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let project = common::demo(dir.path());
    let mut child = common::bin()
        .arg("--project")
        .arg(&project)
        .arg("serve")
        .env("BLUEGREEN_PORT", "0")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    let addr = v["listening"].as_str().unwrap().to_string();
    let mut s = std::net::TcpStream::connect(&addr).unwrap();
    use std::io::Write;
    write!(s, "GET /project HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"synthetic-valley\""));

    let o = common::bin().arg("--project").arg(&project).arg("serve").env("BLUEGREEN_PORT", "http").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
