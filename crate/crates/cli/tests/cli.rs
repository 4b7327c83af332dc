//! End-to-end runs of the `nscost` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn nscost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nscost"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nscost-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// The CSV without its timing column.
fn strip_timing(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            l.rsplit_once(',')
                .map(|(head, _)| head.to_string())
                .unwrap_or_default()
        })
        .collect()
}

#[test]
fn swap_costs_two_bits() {
    let o = nscost(&["cost", "--kind", "swap_alpha", "--alpha", "1", "--p", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("2.000000 bits"), "{out}");
    assert!(out.contains("raw_scalar: 4.0000"), "{out}");
}

#[test]
fn lower_bound_is_labelled_as_a_bound() {
    let o = nscost(&[
        "cost",
        "--kind",
        "swap_alpha",
        "--alpha",
        "1",
        "--quantity",
        "lower-bound",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("lower bound"), "{}", stdout(&o));
}

#[test]
fn classical_min_entropy_from_the_command_line() {
    let o = nscost(&[
        "cost",
        "--kind",
        "classical_noiseless",
        "--symbols",
        "2",
        "--quantity",
        "hmin-ab",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("-1.000000 bits"), "{}", stdout(&o));
}

#[test]
fn simulation_error_of_swap() {
    let o = nscost(&["simerr", "--kind", "swap_alpha", "--alpha", "1", "--m", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("0.750000"), "{}", stdout(&o));
}

#[test]
fn channel_files_are_accepted_and_errors_are_reported() {
    let path = scratch("swap.toml");
    std::fs::write(&path, "kind = \"swap_alpha\"\n[params]\nalpha = 1.0\n").unwrap();
    let o = nscost(&[
        "cost",
        "--channel",
        path.to_str().unwrap(),
        "--quantity",
        "dmax",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("2.000000 bits"), "{}", stdout(&o));

    let bad = scratch("bad.toml");
    std::fs::write(&bad, "kind = \"partial_swap\"\n[params]\na = 1.5\n").unwrap();
    let o = nscost(&["cost", "--channel", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("params.a"), "{}", stderr(&o));

    let o = nscost(&["cost", "--channel", "/nonexistent/channel.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("/nonexistent/channel.toml"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        &["cost"][..],
        &["cost", "--kind", "teleport"],
        &["cost", "--kind", "swap_alpha", "--alpha", "1", "--p", "1.5"],
        &[
            "sweep",
            "--family",
            "swap_alpha",
            "--grid",
            "0,1,1",
            "--out",
            "/dev/null",
        ],
        &["frobnicate"],
    ] {
        let o = nscost(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(nscost(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_output_does_not_depend_on_the_worker_count() {
    let a = scratch("sweep1.csv");
    let b = scratch("sweep2.csv");
    for (path, jobs) in [(&a, "1"), (&b, "2")] {
        let o = nscost(&[
            "sweep",
            "--family",
            "swap_alpha",
            "--grid",
            "0,1,3",
            "--p",
            "0,0.4",
            "--jobs",
            jobs,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = std::fs::read_to_string(a).unwrap();
    let b = std::fs::read_to_string(b).unwrap();
    assert_eq!(strip_timing(&a), strip_timing(&b));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(
        lines[0],
        "family,param,p,quantity,value_bits,raw_scalar,status,solve_ms"
    );
    assert_eq!(lines.len(), 1 + 3 * 2 * 3);
    assert!(lines[1..].iter().all(|l| l.contains(",optimal,")), "{a}");
}

#[test]
fn verify_passes_and_perturbation_fails() {
    let o = nscost(&["verify", "--seed", "1", "--cases", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    assert!(
        stdout(&o).contains("12 of 12 checks passed"),
        "{}",
        stdout(&o)
    );

    let o = nscost(&["verify", "--seed", "1", "--cases", "4", "--perturb"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"), "{}", stdout(&o));

    let o = nscost(&["verify", "--cases", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
