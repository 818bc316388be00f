use std::path::PathBuf;
use std::process::{Command, Output};

fn ycoupler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ycoupler"))
        .args(args)
        .env_remove("YCOUPLER_TOL")
        .output()
        .expect("binary runs")
}

fn netlist(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "netlists", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn symmetric_y_device() {
    let o = ycoupler(&["device", "--type", "symmetric_y"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).take(3).collect();
    assert_eq!(
        rows,
        [
            "0+0i  0.707106781187+0i  0.707106781187+0i",
            "0.707106781187+0i  -0.5+0i  0.5+0i",
            "0.707106781187+0i  0.5+0i  -0.5+0i",
        ]
    );
    assert!(text.contains("unitary: true"));
    assert!(text.contains("reciprocal: true"));
    assert!(text.contains("feed_forward_ports: [1]"));
}

#[test]
fn compose_grover4() {
    let o = ycoupler(&["compose", "--netlist", &netlist("grover4.json")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("externals: Y1.2 Y1.3 Y2.2 Y2.3\n"));
    let rows: Vec<&str> = text.lines().skip(1).take(4).collect();
    assert_eq!(rows[0], "-0.5+0i  0.5+0i  0.5+0i  0.5+0i");
    assert_eq!(rows[3], "0.5+0i  0.5+0i  0.5+0i  -0.5+0i");
}

#[test]
fn every_fixture_composes_to_a_unitary() {
    for name in [
        "grover4.json",
        "loop_mirror.json",
        "michelson.json",
        "resonator.json",
    ] {
        let o = ycoupler(&["compose", "--netlist", &netlist(name)]);
        assert!(o.status.success(), "{name}");
        assert!(stdout(&o).contains("unitary: true"), "{name}");
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = [
        "sweep",
        "--arm1",
        "1.5,0.001",
        "--arm2",
        "1.51,0.001",
        "--kmin",
        "1e7",
        "--kmax",
        "1.01e7",
        "--points",
        "257",
    ];
    let a = ycoupler(&args);
    let b = ycoupler(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("k,lambda,R,T\n"));
    assert_eq!(text.lines().count(), 258);
}

#[test]
fn sweep_solver_matches_closed_form() {
    let common = [
        "--arm1",
        "1.5,0.001",
        "--arm2",
        "1.51,0.001",
        "--kmin",
        "1e7",
        "--kmax",
        "1.0001e7",
        "--points",
        "33",
    ];
    let closed = ycoupler(&[&["sweep"][..], &common].concat());
    let solved = ycoupler(
        &[
            &["sweep", "--netlist", &netlist("resonator.json")][..],
            &common,
        ]
        .concat(),
    );
    assert!(solved.status.success());
    for (a, b) in stdout(&closed).lines().zip(stdout(&solved).lines()).skip(1) {
        let fa: Vec<f64> = a.split(',').map(|x| x.parse().unwrap()).collect();
        let fb: Vec<f64> = b.split(',').map(|x| x.parse().unwrap()).collect();
        for (x, y) in fa.iter().zip(&fb) {
            assert!((x - y).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn hom_and_verify() {
    let o = ycoupler(&["hom", "--points", "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("r_mag,probability"));

    let o = ycoupler(&["verify"]);
    assert!(o.status.success());
    assert!(stdout(&o).trim_end().ends_with("passed, 0 failed"));
}

#[test]
fn exit_codes() {
    assert_eq!(ycoupler(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        ycoupler(&["device", "--type", "y_pm", "--r", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ycoupler(&["compose", "--netlist", "/nonexistent/net.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn closed_cavity_mode_is_reported_not_fatal() {
    // Two mirrors at pi behind a symmetric coupler trap a lossless mode that
    // the input never reaches.
    let p: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "fuzz",
        "corpus",
        "netlist_solve",
        "dark_cavity.json",
    ]
    .iter()
    .collect();
    let o = ycoupler(&["compose", "--netlist", p.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert!(text.contains("dark_state_unexcited: true"));
}

#[test]
fn tolerance_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_ycoupler"))
        .args(["device", "--type", "symmetric_y"])
        .env("YCOUPLER_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    // A loose tolerance from the environment makes the coupler "circulant";
    // an explicit flag wins over it.
    let run = |extra: &[&str]| {
        let o = Command::new(env!("CARGO_BIN_EXE_ycoupler"))
            .args(extra)
            .args(["device", "--type", "symmetric_y"])
            .env("YCOUPLER_TOL", "0.6")
            .output()
            .unwrap();
        assert!(o.status.success());
        stdout(&o)
    };
    assert!(run(&[]).contains("circulant: true"));
    assert!(run(&["--tol", "1e-10"]).contains("circulant: false"));
}
