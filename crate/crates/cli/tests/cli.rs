use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn lp(args: &[&str]) -> Output {
    let resolved: Vec<String> = args
        .iter()
        .map(|a| match a.strip_prefix('@') {
            Some(name) => fixture(name).display().to_string(),
            None => a.to_string(),
        })
        .collect();
    Command::new(env!("CARGO_BIN_EXE_lp"))
        .args(&resolved)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn keys(v: &Value) -> Vec<String> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| {
            x.as_array()
                .unwrap()
                .iter()
                .map(|o| o.as_str().unwrap())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect()
}

fn key(v: &Value) -> String {
    keys(&Value::Array(vec![v.clone()])).remove(0)
}

#[test]
fn school_trace_has_five_rounds() {
    let out = lp(&[
        "run",
        "--constraint",
        "@school.json",
        "--alpha",
        "@da_alpha.json",
        "--profile",
        "@da_profile.json",
        "--trace",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["status"], "final");
    assert_eq!(key(&v["allocation"]), "b,c,a");
    let steps: Vec<Value> = v["trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["allocation"].clone())
        .collect();
    assert_eq!(
        keys(&Value::Array(steps)),
        ["a,a,b", "a,b,b", "a,b,a", "b,b,a", "b,c,a"]
    );
}

#[test]
fn school_assignment_derives_to_checked_in_file() {
    let out = lp(&[
        "derive",
        "--mechanism",
        "da",
        "--constraint",
        "@school.json",
        "--spec",
        "@da_spec.json",
    ]);
    assert_eq!(code(&out), 0);
    let expected = std::fs::read(fixture("da_alpha.json")).unwrap();
    assert_eq!(out.stdout, expected);
}

#[test]
fn trading_cycles_trace() {
    let out = lp(&[
        "run",
        "--constraint",
        "@house.json",
        "--alpha",
        "@ttc_alpha.json",
        "--profile",
        "@ttc_profile.json",
        "--trace",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let steps: Vec<Value> = v["trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["allocation"].clone())
        .collect();
    assert_eq!(keys(&Value::Array(steps)), ["a,b,a", "c,b,a"]);

    let direct = lp(&[
        "mechanisms",
        "--name",
        "ttc",
        "--constraint",
        "@house.json",
        "--spec",
        "@endowment.json",
        "--profile",
        "@ttc_profile.json",
    ]);
    assert_eq!(key(&json(&direct)["allocation"]), "c,b,a");
}

#[test]
fn immediate_acceptance_fails_invariance() {
    for source in [
        vec!["--table", "@ia_table.json"],
        vec!["--mechanism", "ia", "--constraint", "@school.json", "--spec", "@ia_spec.json"],
    ] {
        let mut args = vec!["check"];
        args.extend(source);
        args.extend(["--props", "invariance"]);
        let out = lp(&args);
        assert_eq!(code(&out), 1);
        let w = &json(&out)["props"]["invariance"]["witness"];
        assert_eq!(w["kind"], "compromiser_invariance");
        assert_eq!(key(&w["mu"]), "a,a,b");
    }
}

#[test]
fn immediate_acceptance_fixture_outcomes() {
    for (profile, expected) in [("@ia_profile.json", "c,a,b"), ("@ia_deviation.json", "b,a,c")] {
        let out = lp(&[
            "mechanisms",
            "--name",
            "ia",
            "--constraint",
            "@school.json",
            "--spec",
            "@ia_spec.json",
            "--profile",
            profile,
        ]);
        assert_eq!(code(&out), 0);
        assert_eq!(key(&json(&out)["allocation"]), expected);
    }
}

#[test]
fn marriage_profiles() {
    let partners = |v: &Value| {
        let a = v["allocation"].as_array().unwrap();
        (0..3)
            .map(|m| format!("m{}{}", m + 1, a[m].as_str().unwrap()))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for (profile, expected) in [
        ("@marriage_profile_1.json", "m1w1 m2w2 m3w3"),
        ("@marriage_profile_2.json", "m1w1 m2w3 m3w2"),
        ("@marriage_profile_3.json", "m1w2 m2w3 m3w1"),
    ] {
        let out = lp(&[
            "mechanisms",
            "--name",
            "marriage",
            "--constraint",
            "@marriage.json",
            "--spec",
            "@marriage_spec.json",
            "--profile",
            profile,
        ]);
        assert_eq!(code(&out), 0);
        assert_eq!(partners(&json(&out)), expected);
    }
}

#[test]
fn statics_outcomes_at_common_profile() {
    for (alpha, expected) in [
        ("@statics_alpha_prime.json", "b,b,a"),
        ("@statics_alpha.json", "c,b,b"),
    ] {
        let out = lp(&["run", "--alpha", alpha, "--profile", "@abc_profile.json"]);
        assert_eq!(code(&out), 0);
        assert_eq!(key(&json(&out)["allocation"]), expected);
    }
}

#[test]
fn pointwise_comparison_flags_missing_forward_consistency() {
    let out = lp(&[
        "compare",
        "--alpha",
        "@statics_alpha.json",
        "--alpha2",
        "@statics_alpha_prime.json",
    ]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["mode"], "pointwise");
    let failed: Vec<&str> = v["hypotheses"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|h| h["verdict"]["holds"] == false)
        .map(|h| h["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["forward_consistent"]);
    assert_eq!(v["conclusion"]["witness"]["kind"], "dominance");
}

#[test]
fn shrinking_a_cell_can_hurt_the_excluded_agent() {
    for (alpha, expected) in [("@nonmonotonic_alpha1.json", "b"), ("@nonmonotonic_alpha2.json", "c")] {
        let out = lp(&["run", "--alpha", alpha, "--profile", "@abc_profile_2.json"]);
        assert_eq!(code(&out), 0);
        assert_eq!(json(&out)["allocation"][0], expected);
    }
}

#[test]
fn efficient_but_bossy() {
    let out = lp(&[
        "check",
        "--alpha",
        "@pe_not_gsp_alpha.json",
        "--props",
        "pe,nonbossy,gsp",
    ]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["props"]["pe"]["holds"], true);
    assert_eq!(v["props"]["nonbossy"]["holds"], false);
    assert_eq!(v["props"]["gsp"]["holds"], false);

    let truthful = lp(&["run", "--alpha", "@pe_not_gsp_alpha.json", "--profile", "@abc_profile.json"]);
    let report = lp(&["run", "--alpha", "@pe_not_gsp_alpha.json", "--profile", "@bossy_report.json"]);
    assert_eq!(key(&json(&truthful)["allocation"]), "b,b,a");
    let after = json(&report)["allocation"].clone();
    assert_eq!(after[0], "a");
    assert_eq!(after[1], "b");
}

#[test]
fn consistency_fixtures() {
    let out = lp(&["check", "--alpha", "@forward_alpha.json", "--props", "forward"]);
    assert_eq!(code(&out), 1);
    let w = &json(&out)["props"]["forward"]["witness"];
    assert_eq!(key(&w["y"]), "b,a,a");

    let out = lp(&["check", "--alpha", "@backward_alpha.json", "--props", "forward,backward"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["props"]["backward"]["witness"]["kind"], "backward");

    let out = lp(&[
        "check",
        "--alpha",
        "@ttc_alpha.json",
        "--constraint",
        "@house.json",
        "--props",
        "forward,backward,implementable,gsp,pe",
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn relaxed_reading_accepts_a_manipulable_assignment() {
    let args = |reading: &'static str| {
        [
            "check",
            "--alpha",
            "@relaxed_counterexample_alpha.json",
            "--props",
            "forward,backward",
            "--reading",
            reading,
        ]
    };
    assert_eq!(code(&lp(&args("relaxed"))), 0);
    assert_eq!(code(&lp(&args("strict"))), 1);
    let out = lp(&["check", "--alpha", "@relaxed_counterexample_alpha.json", "--props", "gsp"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn golden_renders() {
    for (args, golden) in [
        (
            vec!["render", "--alpha", "@da_alpha.json", "--constraint", "@school.json"],
            "golden/da_alpha.txt",
        ),
        (
            vec!["render", "--alpha", "@ttc_alpha.json", "--constraint", "@house.json"],
            "golden/ttc_alpha.txt",
        ),
        (vec!["render", "--alpha", "@nonuniqueness_alpha_i.json"], "golden/nonuniqueness.txt"),
    ] {
        let out = lp(&args);
        assert_eq!(code(&out), 0);
        let expected = std::fs::read_to_string(fixture(golden)).unwrap();
        assert_eq!(String::from_utf8(out.stdout).unwrap(), expected, "{golden}");
    }
}

#[test]
fn school_render_corner_cell() {
    let out = lp(&["render", "--alpha", "@da_alpha.json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row_a = text.lines().nth(2).unwrap();
    assert!(row_a.starts_with("a   [1 2]"), "{row_a}");
}

#[test]
fn svg_render_is_stable() {
    let a = lp(&["render", "--constraint", "@house.json", "--format", "svg"]);
    let b = lp(&["render", "--constraint", "@house.json", "--format", "svg"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8(a.stdout).unwrap().contains("#c8c8c8"));
}

#[test]
fn enumerate_streams_assignments_then_summary() {
    let out = lp(&["enumerate", "--constraint", "@social_2x2.json"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let (summary, alphas) = lines.split_last().unwrap();
    assert_eq!(summary["summary"]["count"], alphas.len());
    assert_eq!(summary["summary"]["complete"], true);
    for agent in ["1", "2"] {
        let dictator = serde_json::json!({ "a,b": [agent], "b,a": [agent] });
        assert!(alphas.iter().any(|a| a["cells"] == dictator), "dictatorship of {agent}");
    }
}

#[test]
fn enumerate_quotient_and_budget() {
    let out = lp(&["enumerate", "--constraint", "@social_2x2.json", "--quotient"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let summary: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(text.lines().count() as u64 - 1, summary["summary"]["orbit_count"].as_u64().unwrap());

    let out = lp(&["enumerate", "--constraint", "@house.json", "--budget", "3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let summary: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(summary["summary"]["complete"], false);
}

#[test]
fn input_errors_exit_two() {
    let missing = lp(&[
        "run",
        "--constraint",
        "@house.json",
        "--alpha",
        "@missing_cell_alpha.json",
        "--profile",
        "@abc_profile.json",
    ]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing_cell_alpha.json"));

    let dir = std::env::temp_dir().join(format!("lp-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    };
    let malformed = write("malformed.json", "{\"cells\": ");
    let unknown_agent = write(
        "unknown.json",
        r#"{"agents":["1","2"],"objects":["a","b"],"cells":{"a,a":["7"]}}"#,
    );
    let on_feasible = write("feasible.json", r#"{"cells":{"a,b":["1"],"b,a":["1"],"a,a":["1"]}}"#);
    let five = write(
        "five.json",
        r#"{"agents":["1","2","3","4","5"],"objects":["a","b"],"kind":"unconstrained"}"#,
    );
    let house = fixture("house.json").display().to_string();
    let social = fixture("social_2x2.json").display().to_string();
    let profile = fixture("abc_profile.json").display().to_string();
    for args in [
        vec!["run", "--alpha", &malformed, "--constraint", &house, "--profile", &profile],
        vec!["render", "--alpha", &unknown_agent],
        vec!["render", "--alpha", &on_feasible, "--constraint", &social],
        vec!["render", "--constraint", &five],
        vec!["check", "--alpha", &on_feasible, "--props", "nonsense"],
        vec!["frobnicate"],
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_lp")).args(&args).output().unwrap();
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&lp(&["--help"])), 0);
}
