use std::process::{Command, Output};

fn advsample(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advsample")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(advsample(&["dim", "--family", "thresholds:7"]).status.code(), Some(0));
    assert_eq!(advsample(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(advsample(&["dim"]).status.code(), Some(2));
    let bad = advsample(&["dim", "--family", "nonsense:3"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(!bad.stderr.is_empty());
}

#[test]
fn dim_report_fields() {
    let out = advsample(&["dim", "--family", "thresholds:7"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ldim"], 3);
    assert_eq!(v["vcdim"], 1);
    assert!(out.stdout.ends_with(b"\n"));
}

#[test]
fn out_flag_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["couple", "uni-ber", "--k", "4", "--trials", "50"];
    let stdout = advsample(&args).stdout;
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let quiet = advsample(&with_out);
    assert!(quiet.status.success());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
}

#[test]
fn sweep_csv_rows() {
    let out = advsample(&[
        "sweep", "--sampler", "uni:k=8", "--adversary", "bsearch", "--n", "32", "--trials", "5", "--format", "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,seed,metric,value"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn stream_file_argument() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stream.txt");
    std::fs::write(&path, "0 1\n2").unwrap();
    let at = format!("@{}", path.display());
    let from_file = advsample(&["cover", "traces", "--family", "powerset:3", "--stream", &at]);
    let inline = advsample(&["cover", "traces", "--family", "powerset:3", "--stream", "0,1,2"]);
    assert!(from_file.status.success());
    let parse = |o: &Output| serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap();
    let (a, b) = (parse(&from_file), parse(&inline));
    assert_eq!(a["traces"], 8);
    assert_eq!(a["traces"], b["traces"]);
    assert_eq!(a["n"], b["n"]);
}
