use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use p2scatter::diagram::Diagram;
use p2scatter::exactalg::RatFuncQ;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_p2scatter"));
    c.env_remove("P2SCATTER_CACHE_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("p2scatter-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn ints(v: &Value) -> Vec<i64> {
    v.as_array().unwrap().iter().map(|x| x.as_i64().unwrap()).collect()
}

#[test]
fn betti_line_class() {
    let o = run(&["betti", "--class", "0,1,1"]);
    assert!(o.status.success());
    let v = json_out(&o);
    assert_eq!(ints(&v["poincare"]), vec![1, 1, 1]);
    assert_eq!(v["dim"], 2);
    assert_eq!(v["euler"]["real"], 1);
    assert_eq!(v["gamma"], serde_json::json!([0, 1, 1]));
}

#[test]
fn betti_cubic() {
    let v = json_out(&run(&["betti", "--class", "0,3,1"]));
    assert_eq!(ints(&v["poincare"]), vec![1, 2, 3, 3, 3, 3, 3, 3, 3, 2, 1]);
}

#[test]
fn betti_without_stable_objects() {
    let o = run(&["betti", "--class", "0,0,2"]);
    assert!(o.status.success());
    let v = json_out(&o);
    assert_eq!(ints(&v["poincare"]), vec![0]);
    assert_eq!(v["note"], "no stable objects");
}

#[test]
fn errors_are_machine_readable() {
    let o = run(&["betti", "--class", "0,-1,1"]);
    assert!(!o.status.success());
    assert_eq!(json_out(&o)["error"], "empty ray locus");

    let o = run(&["betti", "--class", "0,1,1/2"]);
    assert!(!o.status.success());
    assert_eq!(json_out(&o)["kind"], "config");

    let o = run(&["betti"]);
    assert!(!o.status.success());
    assert!(json_out(&o)["error"].as_str().unwrap().contains("--class"));

    let o = run(&["betti", "--no-such-flag"]);
    assert!(!o.status.success());
    assert_eq!(json_out(&o)["kind"], "usage");
}

fn pieces(v: &Value) -> Vec<(Value, Vec<i64>)> {
    v["pieces"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p["leaves"].clone(), ints(&p["poly"])))
        .collect()
}

#[test]
fn trees_small_classes() {
    let v = json_out(&run(&["trees", "--class", "0,3,3"]));
    assert_eq!(pieces(&v).len(), 2);
    assert_eq!(ints(&v["total"]), vec![1, 2, 3, 3, 3, 3, 3, 3, 3, 2, 1]);
    let v = json_out(&run(&["trees", "--class", "0,1,1"]));
    assert_eq!(pieces(&v), vec![(serde_json::json!({"-1": 1, "0": 1}), vec![1, 1, 1])]);
}

#[test]
fn trees_quartic() {
    let v = json_out(&run(&["trees", "--class", "0,4,1"]));
    let mut got: Vec<Vec<i64>> = pieces(&v).into_iter().map(|p| p.1).collect();
    got.sort();
    // [12]_q·[3]_q·q² and [12]_q·(1+q+3q²+3q³+3q⁴+q⁵+q⁶)
    let mut want = vec![
        vec![0, 0, 1, 2, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 2, 1],
        vec![1, 2, 5, 8, 11, 12, 13, 13, 13, 13, 13, 13, 12, 11, 8, 5, 2, 1],
    ];
    want.sort();
    assert_eq!(got, want);
}

/// `(class, init)` attributes of every drawn line of the given kind.
fn lines(svg: &str, kind: &str) -> BTreeSet<(String, String)> {
    let attr = |l: &str, name: &str| {
        let key = format!("{name}=\"");
        let start = l.find(&key).unwrap() + key.len();
        l[start..].split('"').next().unwrap().to_string()
    };
    svg.lines()
        .filter(|l| l.starts_with(&format!("<line class=\"{kind}\"")))
        .map(|l| (attr(l, "data-class"), attr(l, "data-init")))
        .collect()
}

fn scatter(dir: &Path, tag: &str, region: &str, order: &str) -> (String, String) {
    let svg = dir.join(format!("{tag}.svg"));
    let json = dir.join(format!("{tag}.json"));
    let o = run(&[
        "scatter",
        "--region",
        region,
        "--order",
        order,
        "--svg",
        svg.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    (
        std::fs::read_to_string(svg).unwrap(),
        std::fs::read_to_string(json).unwrap(),
    )
}

#[test]
fn scatter_low_orders_draw_initial_segments_only() {
    let dir = scratch("low");
    for order in ["0.5", "1"] {
        let (svg, _) = scatter(&dir, order, "-1.5,1.5,4", order);
        assert!(svg.contains(r#"<polyline id="boundary""#));
        assert!(lines(&svg, "ray").is_empty(), "order {order}");
        let initial = lines(&svg, "initial");
        // s_{-1}, s_0, s_1 inside the strip, both directions each
        let inits: BTreeSet<&str> = initial.iter().map(|(_, i)| i.as_str()).collect();
        assert_eq!(inits, BTreeSet::from(["-1,-1/2", "0,0", "1,-1/2"]));
        assert_eq!(initial.len(), 6);
    }
}

#[test]
fn scatter_order_two_has_vertical_rays() {
    let dir = scratch("two");
    let (svg, _) = scatter(&dir, "o2", "-1.5,1.5,4", "2");
    let vertical: BTreeSet<String> = lines(&svg, "ray")
        .into_iter()
        .filter(|(c, _)| c == "0,-1")
        .map(|(_, i)| i)
        .collect();
    assert!(vertical.contains("-1/2,0") && vertical.contains("1/2,0"));
    assert!(vertical.iter().all(|i| i.ends_with(",0") || i.ends_with(",-1")));
}

#[test]
fn scatter_is_deterministic_and_round_trips() {
    let dir = scratch("det");
    let a = scatter(&dir, "a", "-1,2,5", "5/2");
    let b = scatter(&dir, "b", "-1,2,5", "5/2");
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a.1).unwrap();
    let d: Diagram<RatFuncQ> = Diagram::from_json(&v).unwrap();
    assert_eq!(d.to_json(), v);
}

/// `ψ(1)`: `(x, y) ↦ (x + 1, y − x − ½)`, classes `(a, b) ↦ (a, b − a)`.
fn psi(line: &(String, String)) -> (String, String) {
    use p2scatter::exactalg::{parse_q, q_frac, q_int};
    let c: Vec<i64> = line.0.split(',').map(|p| p.parse().unwrap()).collect();
    let p: Vec<_> = line.1.split(',').map(|s| parse_q(s).unwrap()).collect();
    let x = &p[0] + q_int(1);
    let y = &p[1] - &p[0] - q_frac(1, 2);
    (format!("{},{}", c[0], c[1] - c[0]), format!("{x},{y}"))
}

#[test]
fn scatter_psi_translated_region() {
    let dir = scratch("psi");
    let (base, _) = scatter(&dir, "base", "-1,1,5", "3");
    let (moved, _) = scatter(&dir, "moved", "0,2,5", "3");
    for kind in ["initial", "ray"] {
        let mapped: BTreeSet<_> = lines(&base, kind).iter().map(psi).collect();
        assert_eq!(mapped, lines(&moved, kind), "{kind}");
    }
}

#[test]
fn scatter_unwritable_path() {
    let o = run(&["scatter", "--order", "1", "--svg", "/nonexistent-dir/x.svg"]);
    assert!(!o.status.success());
    let v = json_out(&o);
    assert_eq!(v["kind"], "io");
    assert!(v["error"].as_str().unwrap().contains("/nonexistent-dir/x.svg"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = scratch("cfg");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# line class\nclass = 0,2,1\nretries = 4\n").unwrap();
    let path = cfg.to_str().unwrap();
    let v = json_out(&run(&["betti", "--config", path]));
    assert_eq!(ints(&v["poincare"]), vec![1; 6]);
    assert_eq!(v["config"]["retries"], "4");
    let v = json_out(&run(&["betti", "--config", path, "--class", "0,1,1"]));
    assert_eq!(ints(&v["poincare"]), vec![1, 1, 1]);

    // the echoed config reproduces the run
    let echo: String = v["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, x)| format!("{k} = {}\n", x.as_str().unwrap()))
        .collect();
    let again = dir.join("echo.cfg");
    std::fs::write(&again, echo).unwrap();
    let w = json_out(&run(&["betti", "--config", again.to_str().unwrap()]));
    assert_eq!(v, w);
}

#[test]
fn cache_directory_from_environment() {
    let dir = scratch("cache");
    let go = || {
        bin()
            .args(["betti", "--class", "0,2,1"])
            .env("P2SCATTER_CACHE_DIR", &dir)
            .output()
            .unwrap()
    };
    let first = go();
    assert!(first.status.success());
    assert!(std::fs::read_dir(&dir).unwrap().count() > 0);
    assert_eq!(first.stdout, go().stdout);
}

#[test]
fn verify_detects_corrupted_golden_value() {
    let o = run(&["verify", "--suite", "paper", "--criteria", "1,12", "--corrupt", "12"]);
    assert!(!o.status.success());
    let v = json_out(&o);
    assert_eq!(v["kind"], "verification");
    assert!(v["error"].as_str().unwrap().contains("12 Hilbert scheme"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("criterion 12 [FAIL]"));
}

#[test]
fn verify_properties_deterministic() {
    let outcome = |o: &Output| -> Vec<(u64, bool, String)> {
        json_out(o)["results"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| (r["id"].as_u64().unwrap(), r["pass"].as_bool().unwrap(), r["detail"].to_string()))
            .collect()
    };
    let a = run(&["verify", "--suite", "properties", "--seed", "7"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&["verify", "--suite", "properties", "--seed", "7"]);
    assert_eq!(outcome(&a), outcome(&b));
}
