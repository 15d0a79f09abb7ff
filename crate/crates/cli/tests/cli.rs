use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ramified-dirac"))
        .args(&args[..1])
        .arg("-c")
        .arg(&cfg)
        .arg("-o")
        .arg(dir.join("out"))
        .args(&args[1..])
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "[model]\nlambda_cut = 3/2\nmu_cut = 3\n[solver]\nkappa_max = 10\nheat_times = 0.5, 1\n";

#[test]
fn verify_green_on_defaults_writes_residuals() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), "[model]\n", &["verify", "--suite", "green"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("PASS  1 green"));
    let csv = fs::read_to_string(dir.path().join("out/verify-green.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# version: ramified-dirac"));
    assert!(lines[3].starts_with("# property: Green's form"));
    assert_eq!(lines[4], "mu,pair,g_quad_re,g_quad_im,g_res_re,g_res_im,error,tolerance");
    assert!(lines.len() > 100);
}

#[test]
fn aps_index_at_trivial_holonomy_is_minus_d() {
    let dir = TempDir::new().unwrap();
    for d in [1, 2] {
        let o = run(dir.path(), &format!("[model]\nfiber_dim = {d}\n"), &["index"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), format!("-{d}"));
    }
}

#[test]
fn over_determined_spectrum_is_a_configuration_error() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), SMALL, &["spectrum", "--set", "condition.kind=maximal"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dimension mismatch"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    for (cfg, args, needle) in [
        ("[model]\nlambda_cut = 1\n", vec!["index"], "type mismatch"),
        ("[model]\nmu_cutoff = 3\n", vec!["index"], "unknown key 'model.mu_cutoff' on line 2"),
        ("[model]\nmu_cut 3\n", vec!["index"], "line 2"),
        ("[model]\n", vec!["index", "--set", "solver.nope=1"], "unknown key"),
        ("[model]\n", vec!["verify", "--suite", "nope"], "type mismatch"),
    ] {
        let o = run(dir.path(), cfg, &args);
        assert_eq!(o.status.code(), Some(2), "{cfg:?} {args:?}");
        assert!(stderr(&o).contains(needle), "{}", stderr(&o));
    }
}

#[test]
fn spectrum_output_is_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let o = run(d.path(), SMALL, &["spectrum", "--set", "condition.kind=local", "--set", "condition.angle=0.3"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["spectrum.csv", "counting.csv"] {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let names: Vec<String> =
        fs::read_dir(a.path().join("out")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().all(|n| !n.ends_with(".tmp")), "{names:?}");
}

#[test]
fn equivalent_configs_share_a_hash() {
    let dir = TempDir::new().unwrap();
    let hash = |cfg: &str| {
        let o = run(dir.path(), cfg, &["hardy"]);
        assert_eq!(o.status.code(), Some(0));
        let csv = fs::read_to_string(dir.path().join("out/hardy.csv")).unwrap();
        csv.lines().nth(2).unwrap().to_string()
    };
    assert_eq!(hash("[model]\nmu_cut = 3\n"), hash("# comment\nmodel.mu_cut = 3\n"));
    assert_ne!(hash("[model]\nmu_cut = 3\n"), hash("[model]\nmu_cut = 4\n"));
}

#[test]
fn remaining_commands_write_their_tables() {
    let dir = TempDir::new().unwrap();
    for (cmd, file, header) in [
        ("weyl", "weyl.csv", "Lambda,N,ratio"),
        ("heat", "heat.csv", "t,supertrace,tail"),
        ("hardy", "hardy.csv", "fourier_cut,periodic,ratio,best_constant,bounded"),
        ("expand", "expand.csv", "kappa,eigenfunction,slot,fiber,k,l,re,im"),
        ("green", "green.csv", "mu,pair,g_quad_re,g_quad_im,g_res_re,g_res_im,error,tolerance"),
    ] {
        let o = run(dir.path(), SMALL, &[cmd]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        let csv = fs::read_to_string(dir.path().join("out").join(file)).unwrap();
        assert_eq!(csv.lines().nth(4), Some(header), "{cmd}");
        assert!(csv.lines().count() > 5, "{cmd}");
    }
}
