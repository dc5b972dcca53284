//! The test-side schema checker must reject what it is meant to reject.

mod common;

use common::{schema, validate};
use serde_json::json;

#[test]
fn segmentation_schema_accepts_and_rejects() {
    let s = schema("segmentation.schema.json");
    let good = json!({
        "n": 3, "x_out": [{"t": 1, "score": 0.2}], "x_in": [], "x_eq": [],
        "threshold": 0.01, "objectives": {"out": 0.3, "in": 0.0, "eq": 0.1}
    });
    assert_eq!(validate(&s, &good), Ok(()));
    let mut derived = good.clone();
    derived["objectives"] = json!(null);
    assert_eq!(validate(&s, &derived), Ok(()));

    for (key, bad) in [
        ("x_out", json!([{"t": 0, "score": 0.2}])),
        ("x_out", json!([{"t": 1, "score": -0.2}])),
        ("x_in", json!([{"t": 1.5, "score": 0.2}])),
        ("objectives", json!({"out": 1.0})),
        ("threshold", json!("0.1")),
    ] {
        let mut v = good.clone();
        v[key] = bad;
        assert!(validate(&s, &v).is_err(), "{v}");
    }
    let mut extra = good.clone();
    extra["surplus"] = json!(1);
    assert!(validate(&s, &extra).is_err());
}

#[test]
fn bipartite_schema_accepts_and_rejects() {
    let s = schema("bipartite.schema.json");
    let good = json!({
        "n": 4, "arrows_x_to_y": [[1, 3, 0.2]], "arrows_y_to_x": [], "couplings": [[2, 0.1, 0.0]], "threshold": 0.0
    });
    assert_eq!(validate(&s, &good), Ok(()));
    for (key, bad) in [
        ("arrows_x_to_y", json!([[1, 3]])),
        ("arrows_x_to_y", json!([[1, 3, 0.2, 4]])),
        ("arrows_y_to_x", json!([[1, 1, 0.2]])),
        ("couplings", json!([[0, 0.1, 0.1]])),
    ] {
        let mut v = good.clone();
        v[key] = bad;
        assert!(validate(&s, &v).is_err(), "{v}");
    }
}

#[test]
fn linkspec_schema_matches_the_library() {
    let s = schema("linkspec.schema.json");
    let fixture: serde_json::Value =
        serde_json::from_str(&causal_compression::LinkSpec::default_fixture().to_json()).unwrap();
    assert_eq!(validate(&s, &fixture), Ok(()));
    assert!(validate(&s, &json!({"n": 4, "sigma": 0.0})).is_err());
    assert!(validate(&s, &json!({"links_x_to_y": []})).is_err());
}
