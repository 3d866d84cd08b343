use std::process::Command;

fn sessio(args: &[&str]) -> (bool, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sessio")).args(args).output().unwrap();
    (out.status.success(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn tak_prints_value_or_cancellation() {
    assert_eq!(sessio(&["tak", "--x", "4", "--y", "2", "--z", "0"]), (true, "Tak(4,2,0) = 4\n".into()));
    let (ok, out) = sessio(&["tak", "--x", "20", "--y", "10", "--z", "0", "--timeout-ms", "50"]);
    assert!(ok);
    assert_eq!(out, "Cancelled\n");
}

#[test]
fn clip_reads_polygon_files() {
    let dir = std::env::temp_dir().join(format!("sessio-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (s, c) = (dir.join("subject"), dir.join("clipper"));
    std::fs::write(&s, "0 0\n1 0\n1 1\n0 1\n").unwrap();
    std::fs::write(&c, "-1 -1\n5 -1\n5 5\n-1 5\n").unwrap();
    let (ok, out) = sessio(&["clip", "--subject-file", s.to_str().unwrap(), "--clipper-file", c.to_str().unwrap()]);
    assert!(ok);
    assert_eq!(out.lines().count(), 4);
    assert!(out.lines().all(|l| l.split_whitespace().count() == 2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn miner_reports_each_block() {
    let (ok, out) = sessio(&["miner", "--threads", "2", "--difficulty", "4"]);
    assert!(ok);
    assert_eq!(out.lines().filter(|l| l.starts_with("block ")).count(), 2);
}

#[test]
fn invalid_arguments_fail() {
    assert!(!sessio(&["tak", "--x", "1", "--y", "1", "--z", "1", "--timeout-ms", "0"]).0);
    assert!(!sessio(&["miner", "--difficulty", "40"]).0);
    assert!(!sessio(&["travel", "--role", "pilot"]).0);
}
