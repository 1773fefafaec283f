use std::path::Path;
use std::process::{Command, Output};

fn toa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toa")).args(args).output().unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn times_for_the_delta_barrier() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("times");
    let o = toa(&["times", "--potential", "delta:kappa=1", "--k0", "1", "--M", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let times = read_json(&out.join("times.json"));
    let t_tun = times["times"]["t_tun"].as_f64().unwrap();
    assert!((t_tun - 0.5).abs() < 1e-6, "{t_tun}");
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["pipeline"], "times");
    assert!(manifest["thresholds"]["closed_form_small_parameter"].is_number());
}

#[test]
fn scatter_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o =
            toa(&["scatter", "--potential", "square:V0=2,d=1", "--k", "0.5:2.5:200", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["scatter.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let csv = std::fs::read_to_string(a.join("scatter.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,abs_t2,arg_t,abs_r2,residual"));
    assert_eq!(lines.count(), 200);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[physics]\nmass = 1.0\nwidth = 3.0\n").unwrap();
    let o = toa(&["scatter", "--config", bad.to_str().unwrap(), "--k", "1:2:3"]);
    assert_eq!(o.status.code(), Some(2));

    // A tiny marginal width violates the sequential regime conditions.
    let out = dir.path().join("seq");
    let args = [
        "sequential",
        "--potential",
        "square:V0=2,d=1",
        "--x0",
        "-100",
        "--k0",
        "0.8",
        "--sigma",
        "0.15",
        "--seq-sigma",
        "1",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(toa(&args).status.code(), Some(1));
    let mut forced = args.to_vec();
    forced.push("--force");
    let o = toa(&forced);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for file in ["delay.csv", "tunnelling.csv", "ideal_delay.csv", "ideal_tunnelling.csv", "sequential.json"] {
        assert!(out.join(file).exists(), "{file}");
    }
}

#[test]
fn sweep_writes_points_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        "[potential]\nkind = \"square\"\nv0 = 2.0\nd = 3.0\n\
         [state]\nx0 = -100.0\nk0 = 1.0\nsigma = 0.05\n\
         [sweep]\npipeline = \"times\"\n\
         [[sweep.axis]]\npath = \"potential.d\"\nvalues = [3.0, 6.0, 12.0]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = toa(&["sweep", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let agg = std::fs::read_to_string(out.join("aggregate.csv")).unwrap();
    let header: Vec<&str> = agg.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "t_tun").unwrap();
    let t_tun: Vec<f64> = agg.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(t_tun.len(), 3);
    let expected = 2.0 / 3f64.sqrt();
    assert!(t_tun.iter().all(|t| (t - expected).abs() < 0.01 * expected), "{t_tun:?}");
    assert!(out.join("point_0002").join("times.json").exists());

    std::fs::write(
        &config,
        "[sweep]\npipeline = \"scatter\"\n\
         [[sweep.axis]]\npath = \"physics.mass\"\nvalues = [1.0]\n\
         [[sweep.axis]]\npath = \"physics.detector\"\nvalues = [1.0]\n\
         [[sweep.axis]]\npath = \"potential.v0\"\nvalues = [1.0]\n\
         [[sweep.axis]]\npath = \"potential.d\"\nvalues = [1.0]\n",
    )
    .unwrap();
    let o = toa(&["sweep", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
