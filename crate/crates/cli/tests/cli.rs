use std::path::Path;
use std::process::{Command, Output};

fn qram(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qram"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_FIG5: &str = "[grid]\nfig5_max_depth = 4\nfig4_couplings = [0.98]\n";

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(code(&qram(&["fig9"], &[])), 2);
    assert_eq!(code(&qram(&["verify", "slow"], &[])), 2);
    assert_eq!(code(&qram(&["query-demo", "--address", "middle"], &[])), 2);
}

#[test]
fn over_coupled_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[cavity]\nkappa_wg_over_kappa = 1.2\n");
    let o = qram(&["--config", &cfg, "figS1"], &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("kappa_wg <= kappa"));

    let cfg = write_config(dir.path(), "[cavity]\nkappa_ghz = 20.0\ncolour = 3\n");
    assert_eq!(code(&qram(&["--config", &cfg, "figS1"], &[])), 2);
}

#[test]
fn env_override_is_validated_too() {
    let o = qram(
        &["print-config"],
        &[("QRAM__CAVITY__KAPPA_WG_OVER_KAPPA", "1.5")],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn unwritable_output_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    assert_eq!(
        code(&qram(&["--out", out.to_str().unwrap(), "figS1"], &[])),
        1
    );
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_FIG5);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = qram(
            &[
                "--config",
                &cfg,
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "11",
                "fig5",
            ],
            &[],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let o = qram(
            &["--out", out.to_str().unwrap(), "query-demo", "--depth", "3"],
            &[],
        );
        assert_eq!(code(&o), 0);
        outputs.push(
            ["fig5.csv", "fig5.json", "query_demo.csv"]
                .map(|f| std::fs::read(out.join(f)).unwrap()),
        );
    }
    assert_eq!(outputs[0], outputs[1]);

    let other = dir.path().join("c");
    qram(
        &[
            "--config",
            &cfg,
            "--out",
            other.to_str().unwrap(),
            "--seed",
            "12",
            "fig5",
        ],
        &[],
    );
    assert_ne!(
        std::fs::read(other.join("fig5.csv")).unwrap(),
        outputs[0][0]
    );
}

#[test]
fn csv_carries_metadata_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = qram(
        &["--out", dir.path().to_str().unwrap(), "figS7"],
        &[("QRAM__RUN__SEED", "99")],
    );
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("figS7.csv")).unwrap();
    let first = text.lines().next().unwrap();
    assert!(
        first.starts_with("# experiment=figS7 config_sha256="),
        "{first}"
    );
    assert!(first.contains("seed=99"));
}

#[test]
fn hash_ignores_output_directory() {
    let hash = |out: &str| {
        let o = qram(&["--out", out, "print-config"], &[]);
        assert_eq!(code(&o), 0);
        let text = String::from_utf8(o.stdout).unwrap();
        text.lines()
            .find(|l| l.contains("config_sha256"))
            .unwrap()
            .to_string()
    };
    assert_eq!(hash("/tmp/x"), hash("/tmp/y"));
    let o = qram(&["--seed", "3", "print-config"], &[]);
    assert!(!String::from_utf8(o.stdout)
        .unwrap()
        .contains(&hash("/tmp/x")));
}

#[test]
fn verify_fast_passes() {
    let o = qram(&["verify", "fast"], &[]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!text.contains("FAIL"));
}
