// SPDX-License-Identifier: Apache-2.0

use cpabe_demo::{abe_round_trip, det_vs_rnd, explore_policy};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn policy_explorer() {
    let v = parse(explore_policy("admin or (analyst AND eu)", "analyst, eu"));
    assert_eq!(v["policy"], "admin or (analyst and eu)");
    assert_eq!(v["satisfied"], true);
    assert_eq!(v["used"], serde_json::json!(["analyst", "eu"]));

    let v = parse(explore_policy("2 of (a, b, c)", "a"));
    assert_eq!(v["satisfied"], false);
    assert_eq!(v["used"].as_array().unwrap().len(), 0);

    assert!(parse(explore_policy("a and", "a"))["error"].as_str().unwrap().contains("syntax"));
}

#[test]
fn round_trip() {
    let v = parse(abe_round_trip("a and b", "a,b", "hi"));
    assert_eq!(v["opened"], true);
    assert_eq!(v["plaintext"], "hi");
    let v = parse(abe_round_trip("a and b", "a", "hi"));
    assert_eq!(v["opened"], false);
    assert!(v.get("plaintext").is_none());
    assert!(parse(abe_round_trip("a", "", "hi"))["error"].is_string());
}

#[test]
fn det_rnd_table() {
    let v = parse(det_vs_rnd("Alice\nBob\nAlice\n\n"));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["det"], rows[2]["det"]);
    assert_ne!(rows[0]["rnd"], rows[2]["rnd"]);
    assert_eq!(rows[2]["det_group"], 0);
    assert_eq!(v["det_distinct"], 2);
    assert_eq!(v["rnd_distinct"], 3);
}
