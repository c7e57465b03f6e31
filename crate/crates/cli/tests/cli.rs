use serde_json::Value;
use std::process::{Command, Output};

fn fi(args: &[&str]) -> Output {
    let dir = std::env::temp_dir().join("fi-cli-tests");
    Command::new(env!("CARGO_BIN_EXE_fi"))
        .args(args)
        .env("FI_CACHE_DIR", dir)
        .output()
        .expect("spawn fi")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let o = fi(&full);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn xi_text_output() {
    let o = fi(&["xi", "--q", "4", "--a", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0\n");
    let o = fi(&["xi", "--q", "3", "--a", "2"]);
    assert!(stdout(&o).starts_with("4/3 1.333"));
    let a = json(&["xi", "--q", "45", "--a", "7"]);
    let b = json(&["xi", "--q", "45", "--a", "7", "--brute-force"]);
    assert_eq!(a["exact"], b["exact"]);
}

#[test]
fn constants_json() {
    let j = json(&["constants"]);
    assert_eq!(j["schema"], "fi/1");
    let a = j["alpha_plus"].as_f64().unwrap();
    assert!(a > 2.85 && a <= 2.9739, "{a}");
    for k in ["c1", "c2", "c3", "margin"] {
        assert!(j[k].is_number(), "{k}");
    }
}

#[test]
fn constants_with_custom_parameters_skip_the_band() {
    let o = fi(&["constants", "--xi1", "0.2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_ternary_to_100() {
    let j = json(&["verify-ternary", "--limit", "100"]);
    let ex: Vec<u64> = j["exceptions"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(ex, vec![3, 7, 11, 19, 27, 35, 43]);
    let rows = j["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 25);
    for r in rows {
        let x = r["x"].as_u64().unwrap();
        if ex.contains(&x) {
            assert_eq!(r["status"], "exception");
            assert!(r.get("p1").is_none());
        } else {
            let s: u64 = ["p1", "p2", "p3"].iter().map(|k| r[k].as_u64().unwrap()).sum();
            assert_eq!(s, x);
        }
    }
    let csv = stdout(&fi(&["--csv", "verify-ternary", "--limit", "20", "--exceptions-only"]));
    assert_eq!(csv, "x,p1,p2,p3,status\n3,-,-,-,exception\n7,-,-,-,exception\n11,-,-,-,exception\n19,-,-,-,exception\n");
}

#[test]
fn enumerate_and_3ap() {
    let csv = stdout(&fi(&["--csv", "enumerate", "--limit", "50"]));
    assert_eq!(csv, "p,k,l\n5,1,2\n13,3,2\n29,5,2\n41,4,5\n");
    let j = json(&["3ap", "--limit", "100"]);
    assert_eq!(j["count"], 2);
    assert_eq!(j["rows"][0]["p"], 5);
    assert_eq!(j["rows"][0]["r"], 53);
}

#[test]
fn exit_codes() {
    assert_eq!(fi(&["bogus"]).status.code(), Some(1));
    assert_eq!(fi(&["--help"]).status.code(), Some(0));
    assert_eq!(fi(&["xi", "--q", "0", "--a", "1"]).status.code(), Some(1));
    assert_eq!(fi(&["--json", "--csv", "xi", "--q", "3", "--a", "1"]).status.code(), Some(1));
    assert_eq!(fi(&["lattice", "--l1", "1,1", "--d1", "0", "--l2", "1,0", "--d2", "1"]).status.code(), Some(1));
    assert_eq!(fi(&["--threads", "0", "buchstab", "--u", "2"]).status.code(), Some(1));
    assert_eq!(fi(&["expsum", "dfi"]).status.code(), Some(0));
}

#[test]
fn json_round_trips() {
    let cases: &[&[&str]] = &[
        &["buchstab", "--u", "2.5"],
        &["rough", "--limit", "10000", "--z", "10"],
        &["sieve", "--x", "1e6", "--n", "997"],
        &["lattice", "--l1", "1,1", "--d1", "2", "--l2", "2,1", "--d2", "5", "--annulus", "0,1000"],
        &["expsum", "s0", "--gamma", "0.1", "--n", "100"],
        &["expsum", "minsum", "--gamma", "0.25", "--j", "100", "--k", "50"],
        &["expsum", "type1", "--gamma", "0.3", "--d-i", "50", "--x", "10000"],
        &["expsum", "type2", "--l1", "1,1", "--d1", "2", "--l2", "1,-1", "--d2", "2", "--xi", "0.1", "--m", "100", "--m-hi", "1000"],
        &["lq", "--x", "20000"],
        &["arcs", "--x", "1e8", "--gamma", "0.3333333333"],
    ];
    for args in cases {
        let mut full = vec!["--json"];
        full.extend_from_slice(args);
        let text = stdout(&fi(&full));
        let v: Value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{args:?}: {e}: {text}"));
        assert_eq!(v["schema"], "fi/1");
        assert_eq!(v.to_string() + "\n", text, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let cases: &[&[&str]] = &[
        &["constants"],
        &["verify-ternary", "--limit", "2000"],
        &["3ap", "--limit", "3000"],
        &["lq", "--x", "50000"],
        &["expsum", "type1", "--gamma", "0.123", "--d-i", "100", "--x", "100000", "--log-weight"],
        &["expsum", "dfi"],
        &["enumerate", "--limit", "10000", "--count"],
    ];
    for args in cases {
        let run = |t: &str| {
            let mut full = vec!["--json", "--threads", t];
            full.extend_from_slice(args);
            let o = fi(&full);
            assert_eq!(o.status.code(), Some(0), "{args:?}");
            let mut v: Value = serde_json::from_str(&stdout(&o)).unwrap();
            // Timings are the only nondeterministic fields.
            if let Some(m) = v.as_object_mut() {
                m.retain(|k, _| !k.ends_with("_secs"));
            }
            v
        };
        assert_eq!(run("1"), run("4"), "{args:?}");
    }
}
