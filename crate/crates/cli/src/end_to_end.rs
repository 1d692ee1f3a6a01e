use std::path::Path;

use vemrcp::mesh::{generate_mesh, save_mesh};
use vemrcp::report::read_csv;
use vemrcp::{MeshFamily, StressMethod};

use super::*;

struct Output {
    code: u8,
    stdout: String,
    stderr: String,
}

fn invoke_with(args: &[&str], out: &Path, threads: Option<&str>) -> Output {
    let argv = ["vemrcp"]
        .into_iter()
        .map(String::from)
        .chain(args.iter().map(|a| a.to_string()))
        .chain(["--out".to_string(), out.display().to_string()]);
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    let code = run_main(argv, threads, &mut stdout, &mut stderr);
    Output {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn invoke(args: &[&str], out: &Path) -> Output {
    invoke_with(args, out, None)
}

#[test]
fn test_a_quad_study() {
    let dir = tempfile::tempdir().unwrap();
    let out = invoke(&["--test", "a", "--family", "quad-s", "--levels", "4", "--base-subdivisions", "4"], dir.path());
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let records = read_csv(&dir.path().join("test_a.csv")).unwrap();
    assert_eq!(records.len(), 4);
    for w in records.windows(2) {
        for m in StressMethod::ALL {
            assert!(w[1].error(m).unwrap() < w[0].error(m).unwrap());
        }
    }
    assert!(records.iter().all(|r| r.time_s == 0.0));
    assert!(out.stdout.contains("observed rates"));
    assert!(dir.path().join("test_a.dat").exists());
}

#[test]
fn timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let out = invoke(&["--test", "b", "--family", "tri-s", "--levels", "1", "--timing"], dir.path());
    assert_eq!(out.code, EXIT_OK);
    let records = read_csv(&dir.path().join("test_b.csv")).unwrap();
    assert!(records[0].time_s > 0.0);
}

#[test]
fn method_subset_leaves_columns_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = invoke(&["--test", "c", "--family", "hex-s", "--levels", "1", "--methods", "rcp1"], dir.path());
    assert_eq!(out.code, EXIT_OK);
    let text = std::fs::read_to_string(dir.path().join("test_c.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("c,hex-s,0,"));
    assert!(row.contains(",,,"), "{row}");
}

#[test]
fn patch_test_mode_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = invoke(&["--patch-test"], dir.path());
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(out.stdout.lines().count(), 9);
    assert_eq!(out.stdout.lines().last(), Some("PASS"));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--test", "a", "--family", ""][..],
        &["--test", "z"],
        &["--test", "a", "--levels", "x"],
        &["--frobnicate"],
    ] {
        let out = invoke(args, dir.path());
        assert_eq!(out.code, EXIT_USAGE, "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn help_goes_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = invoke(&["--help"], dir.path());
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("--mesh-file"));
    assert!(out.stderr.is_empty());
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = invoke_with(&["--test", "a", "--family", "quad-s", "--levels", "1"], dir.path(), Some("lots"));
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains(THREADS_ENV));
}

#[test]
fn single_thread_matches_default() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "vemrcp", "--test", "b", "--family", "poly-u", "--levels", "2", "--base-subdivisions", "4", "--out",
    ];
    let config = |sub: &str| parse_config(args.iter().copied().chain([dir.path().join(sub).to_str().unwrap()])).unwrap();
    let (serial, parallel) = (config("serial"), config("parallel"));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| run(&serial)).unwrap();
    run(&parallel).unwrap();
    let read = |c: &StudyConfig| std::fs::read(csv_path(c, TestId::B)).unwrap();
    assert_eq!(read(&serial), read(&parallel));
}

#[test]
fn external_mesh_file() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("hex.pmesh");
    save_mesh(&generate_mesh(MeshFamily::HexS, 5, 0).unwrap(), &mesh_path).unwrap();
    let out = invoke(&["--test", "b", "--mesh-file", mesh_path.to_str().unwrap(), "--vtk"], dir.path());
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let records = read_csv(&dir.path().join("test_b.csv")).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].family, MeshFamily::External);
    assert!(dir.path().join("test_b_external_level0.vtk").exists());
}

#[test]
fn missing_mesh_file_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.pmesh");
    let out = invoke(&["--test", "a", "--mesh-file", missing.to_str().unwrap()], dir.path());
    assert_eq!(out.code, EXIT_FAILURE);
    assert!(out.stderr.contains("failed"));
    // The table is still written, just empty.
    let records = read_csv(&dir.path().join("test_a.csv")).unwrap();
    assert!(records.is_empty());
}

#[test]
fn vtk_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = invoke(
        &["--test", "a", "--family", "conc-u", "--levels", "1", "--base-subdivisions", "3", "--vtk"],
        dir.path(),
    );
    assert_eq!(out.code, EXIT_OK);
    let text = std::fs::read_to_string(dir.path().join("test_a_conc-u_level0.vtk")).unwrap();
    let mesh = generate_mesh(MeshFamily::ConcU, 3, 0).unwrap();
    assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(text.contains(&format!("POINTS {} double", mesh.num_vertices())));
    assert!(text.contains(&format!("CELL_DATA {}", mesh.num_cells())));
    for name in ["vm_vem", "vm_rcp0", "vm_rcp1", "vm_exact"] {
        assert!(text.contains(&format!("SCALARS {name} double 1")), "{name}");
    }
    assert_eq!(text.matches("\n6 ").count(), mesh.num_cells());
}
