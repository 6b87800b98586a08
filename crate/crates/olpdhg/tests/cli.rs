use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_olpdhg"))
}

fn afiro() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/afiro.mps")
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn optimal_solve_exits_zero_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let out = bin()
        .args(["solve", "--mode", "pdlp", "--trace"])
        .arg(&trace)
        .arg(afiro())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("OPTIMAL"), "{stdout}");
    let rows = olpdhg::trace::read_trace(std::fs::File::open(&trace).unwrap()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| w[0].iter < w[1].iter));
}

#[test]
fn iteration_limit_exits_two() {
    assert_eq!(code(bin().args(["solve", "--iter-limit", "10"]).arg(afiro())), 2);
}

#[test]
fn input_errors_exit_three() {
    assert_eq!(code(bin().args(["solve", "/nonexistent/file.mps"])), 3);
    assert_eq!(code(bin().args(["solve", "--tol", "-1"]).arg(afiro())), 3);
    assert_eq!(code(bin().args(["solve", "--mode", "nonsense"]).arg(afiro())), 3);
    assert_eq!(code(bin().arg("frobnicate")), 3);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mps");
    std::fs::write(&bad, "NAME X\nROWS\n N OBJ\nCOLUMNS\n X1 NOPE 1\nENDATA\n").unwrap();
    assert_eq!(code(bin().arg("solve").arg(&bad)), 3);
}

#[test]
fn gzip_input_is_accepted() {
    use std::io::Write;
    let dir = tempfile::tempdir().unwrap();
    let gz = dir.path().join("afiro.mps.gz");
    let mut enc = flate2::write::GzEncoder::new(std::fs::File::create(&gz).unwrap(), flate2::Compression::default());
    enc.write_all(&std::fs::read(afiro()).unwrap()).unwrap();
    enc.finish().unwrap();
    assert_eq!(code(bin().args(["solve", "--mode", "pdlp"]).arg(&gz)), 0);
}

#[test]
fn bench_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.toml");
    std::fs::write(
        &manifest,
        format!(
            "[settings]\niteration_limit = 20000\n\n[[instance]]\npath = {:?}\n\n[[generated]]\nname = \"g\"\nrows = 3\ncols = 5\nseed = 4\n\n[[variant]]\nname = \"plain\"\nmode = \"pdlp\"\n\n[[variant]]\nname = \"online\"\nmode = \"pdlp\"\nlr = [0.01]\n",
            afiro()
        ),
    )
    .unwrap();
    let out = dir.path().join("report");
    assert_eq!(
        code(
            bin()
                .args(["bench", "--manifest"])
                .arg(&manifest)
                .arg("--out")
                .arg(&out)
        ),
        0
    );
    for f in [
        "results.csv",
        "grid.csv",
        "aggregate.json",
        "traces/afiro_plain.csv",
        "traces/g_online.csv",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert_eq!(code(bin().args(["bench", "--manifest", "/nonexistent.toml"])), 3);
}
