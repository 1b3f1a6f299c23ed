use hofv_web::{convergence_json, heatmap, stability_json};
use serde_json::Value;

const SINE: &str = r#"{
    "domain": {"a": 0, "b": 1, "c": 0, "d": 1},
    "order": 2,
    "alpha": {"constant": 1},
    "f": "2*pi^2*sin(pi*x)*sin(pi*y)",
    "u_exact": "sin(pi*x)*sin(pi*y)",
    "mesh": {"uniform": {"m": 4, "n": 4}},
    "seed": 1
}"#;

#[test]
fn heatmap_samples_the_solution() {
    let h = heatmap(SINE, 9).unwrap();
    assert_eq!(h.values.len(), 81);
    assert_eq!(h.dofs, 49);
    // the centre pixel sits at (0.5, 0.5), where u = 1
    assert!((h.values[40] - 1.0).abs() < 1e-2);
    assert!(h.max <= 1.01 && h.min >= 0.0);
    assert!(h.error_report.unwrap().err_l2 < 1e-2);
    assert!(heatmap(SINE, 0).is_err());
    assert!(heatmap("{}", 4).is_err());
}

#[test]
fn convergence_and_stability_json() {
    let v: Value = serde_json::from_str(&convergence_json(SINE, "4, 8", "t").unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    let order = v["orders"]["h1"][0].as_f64().unwrap();
    assert!((order - 2.0).abs() < 0.1);
    assert!(convergence_json(SINE, "4,x", "t").is_err());

    let v: Value = serde_json::from_str(&stability_json(SINE, "2,4", 5, "t").unwrap()).unwrap();
    assert_eq!(v["schema_version"], "1");
    assert!(v["rows"][1]["coercivity_ratio"].as_f64().unwrap() >= 1.0 - 1e-9);
}
