use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use r2g_cli::protocol::{decode_cloud, Response};

fn r2g(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_r2g")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = r2g(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_every_subcommand_and_unknown_flags_fail() {
    let help = ok(&["--help"]);
    for cmd in ["align", "grasps", "generate", "eval", "serve", "report", "stats"] {
        assert!(help.contains(cmd), "{cmd} missing");
    }
    let out = r2g(&["stats", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = r2g(&["generate", "--task", "no_such_task", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_descriptor_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["align", "fixture", "--out", s(d), "--seed", "1"]);
    let missing = d.join("views/block/view_03.json");
    std::fs::remove_file(&missing).unwrap();
    let out = r2g(&[
        "align",
        "run",
        "--mesh",
        s(&d.join("meshes/block.obj")),
        "--views-root",
        s(&d.join("views")),
        "--reference",
        s(&d.join("reference/block/reference.json")),
        "--out",
        s(&d.join("aligned")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("view_03.json"), "{err}");
}

#[test]
fn fixture_aligns_and_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["align", "fixture", "--out", s(d), "--seed", "2"]);
    let out = d.join("aligned");
    ok(&[
        "align",
        "run",
        "--mesh",
        s(&d.join("meshes/can.obj")),
        "--views-root",
        s(&d.join("views")),
        "--reference",
        s(&d.join("reference/can/reference.json")),
        "--out",
        s(&out),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("alignment_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["matched"].as_array().unwrap().len(), 1);
    assert!(out.join("can.obj").exists());

    // grasps on the aligned metric mesh
    let grasps = d.join("grasps");
    let text = ok(&["grasps", "--mesh", s(&out.join("can.obj")), "--out", s(&grasps), "--samples", "400"]);
    assert!(text.contains("can:"));
    assert!(grasps.join("can.grasps.json").exists());
}

#[test]
fn generate_stats_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = d.join("a");
    let b = d.join("b");
    for out in [&a, &b] {
        ok(&["generate", "--task", "box_on_tray", "--out", s(out), "--demos", "2", "--seed", "40"]);
    }
    for name in ["episode_000000", "episode_000001"] {
        for f in ["frames.bin", "meta.json"] {
            assert_eq!(std::fs::read(a.join(name).join(f)).unwrap(), std::fs::read(b.join(name).join(f)).unwrap());
        }
    }
    // refuses to overwrite
    let again = r2g(&["generate", "--task", "box_on_tray", "--out", s(&a), "--demos", "1"]);
    assert_eq!(again.status.code(), Some(2));

    let stats: serde_json::Value = serde_json::from_str(&ok(&["stats", "--dataset", s(&a)])).unwrap();
    assert_eq!(stats["episodes"], 2);
    assert_eq!(stats["points_per_cloud"], 4096);

    let csv = d.join("eval.csv");
    ok(&["eval", "--task", "box_on_tray", "--seeds", "0,1,2", "--episodes", "3", "--csv", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "task,controller,seed,episodes,success_rate,std");
    assert!(lines[4].starts_with("box_on_tray,scripted,aggregate,9,"));

    let noop = d.join("noop.csv");
    ok(&["eval", "--task", "box_on_tray", "--controller", "noop", "--seeds", "5", "--episodes", "1", "--csv", s(&noop)]);
    assert!(std::fs::read_to_string(&noop).unwrap().contains("noop,aggregate,1,0,0"));
}

#[test]
fn report_orders_ablation_points() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut runs = Vec::new();
    for (demos, rate) in [(800, 0.9), (200, 0.4), (600, 0.7)] {
        let p = d.join(format!("eval_{demos}.csv"));
        std::fs::write(
            &p,
            format!("task,controller,seed,episodes,success_rate,std\nt,policy,0,10,{rate},\nt,policy,aggregate,10,{rate},0.05\n"),
        )
        .unwrap();
        runs.push(format!("{demos}={}", p.display()));
    }
    let out = d.join("report");
    let mut args = vec!["report", "--out", s(&out), "--axis", "demos"];
    for r in &runs {
        args.extend(["--run", r.as_str()]);
    }
    ok(&args);
    let ablation = std::fs::read_to_string(out.join("ablation.csv")).unwrap();
    let xs: Vec<&str> = ablation.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(xs, ["200", "600", "800"]);
    for f in ["summary.csv", "summary.svg", "ablation.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let svg = std::fs::read_to_string(out.join("ablation.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

fn check_obs(r: &Response) {
    let obs = r.obs.as_ref().expect("obs");
    assert_eq!(decode_cloud(&obs.cloud_b64).unwrap().len(), 4096);
    assert_eq!(obs.ee_pose.len(), 7);
    assert!(obs.gripper == 0.0 || obs.gripper == 1.0);
}

#[test]
fn serve_transcript_matches_schema() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_r2g"))
        .args(["serve", "--task", "box_on_tray"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    let mut ask = |req: &str| -> serde_json::Value {
        writeln!(stdin, "{req}").unwrap();
        stdin.flush().unwrap();
        let mut line = String::new();
        stdout.read_line(&mut line).unwrap();
        serde_json::from_str(&line).unwrap()
    };
    let reset = ask(r#"{"cmd":"reset","seed":4}"#);
    assert_eq!(reset.as_object().unwrap().keys().collect::<Vec<_>>(), ["obs"]);
    check_obs(&serde_json::from_value(reset.clone()).unwrap());
    let pose = &reset["obs"]["ee_pose"];
    let step = ask(&format!(r#"{{"cmd":"step","ee_pose":{pose},"gripper":1.0}}"#));
    let mut keys: Vec<_> = step.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(keys, ["done", "obs", "success"]);
    check_obs(&serde_json::from_value(step.clone()).unwrap());
    assert_eq!(step["done"], false);
    let bad = ask(r#"{"cmd":"step","ee_pose":[0,0,0,0,0,0,0],"gripper":1.0}"#);
    assert!(bad["error"].is_string());
    assert_eq!(bad["episode"], 0);
    let closed = ask(r#"{"cmd":"close"}"#);
    assert_eq!(closed["closed"], true);
    assert!(child.wait().unwrap().success());
}

#[test]
fn serve_over_tcp() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_r2g"))
        .args(["serve", "--task", "box_shift", "--tcp", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut out = BufReader::new(child.stdout.take().unwrap());
    let mut line = String::new();
    out.read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let stream = std::net::TcpStream::connect(addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut w = stream;
    writeln!(w, r#"{{"cmd":"reset","seed":1}}"#).unwrap();
    let mut resp = String::new();
    reader.read_line(&mut resp).unwrap();
    check_obs(&serde_json::from_str(&resp).unwrap());
    writeln!(w, r#"{{"cmd":"close"}}"#).unwrap();
    resp.clear();
    reader.read_line(&mut resp).unwrap();
    assert!(resp.contains("closed"));
    assert!(child.wait().unwrap().success());
}
