use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn freewords(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freewords")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json_of(args: &[&str]) -> Value {
    let out = freewords(args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    serde_json::from_str(&stdout(&out)).expect("stdout is JSON")
}

/// CSV data rows, skipping the header comment and the column line.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn trw_x3y2_is_one_plus_one_over_n_minus_one() {
    let out = freewords(&["measure", "trw", "--word", "x^3 y^2", "--n", "3..6", "--exact"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 4);
    for (row, n) in rows.iter().zip(3..=6u64) {
        assert_eq!(row[0], n.to_string());
        assert_eq!((row[1].as_str(), row[2].as_str()), (n.to_string().as_str(), (n - 1).to_string().as_str()));
    }
}

#[test]
fn ext_pi_of_commutator() {
    let v = json_of(&["ext", "pi", "--word", "[x,y]"]);
    assert_eq!(v["pi"], 2);
    assert_eq!(v["C"], 1);
    let ext = v["extensions"].as_array().unwrap();
    assert_eq!(ext.len(), 2);
    assert!(ext.iter().any(|e| e["proper"] == true && e["rank"] == 2));
}

#[test]
fn ext_pi_of_primitive_is_infinite() {
    let v = json_of(&["ext", "pi", "--word", "xyy"]);
    assert_eq!(v["pi"], "inf");
    assert_eq!(v["C"], 0);
}

#[test]
fn compare_commutator_with_xyxy_inverse_on_s5() {
    let v = json_of(&["measure", "compare", "--w1", "[x,y]", "--w2", "xyxY", "--group", "S5", "--exact"]);
    assert_eq!(v["verdict"], "equal");
}

#[test]
fn compare_x_with_x_squared_on_s3() {
    let v = json_of(&["measure", "compare", "--w1", "x", "--w2", "x^2", "--group", "S3"]);
    assert_eq!(v["verdict"], "unequal");
    assert_eq!(v["class"], "2+1");
}

#[test]
fn json_artifacts_carry_meta() {
    let v = json_of(&["perm", "obstruction", "--word", "[x,y]", "--d", "2", "--n", "2..6", "--seed", "11"]);
    assert_eq!(v["_meta"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["_meta"]["seed"], 11);
    assert_eq!(v["_meta"]["command"], "perm obstruction");
    assert_eq!(v["_meta"]["config"]["word"], "[x,y]");
    assert_eq!(v["witness"]["n"], 6);
}

#[test]
fn csv_artifacts_carry_header() {
    let out = freewords(&["measure", "trw", "--word", "xy", "--n", "2", "--mc", "--samples", "1000", "--seed", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let header: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert_eq!(header[0], format!("# freewords {}", env!("CARGO_PKG_VERSION")));
    assert!(header.contains(&"# command: measure trw"));
    assert!(header.contains(&"# mode: mc"));
    assert!(header.contains(&"# samples: 1000"));
    assert!(header.contains(&"# seed: 5"));
}

fn artifact(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.extend(["--out", p.as_str()]);
    let out = freewords(&full);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("wrote"));
    std::fs::read(path).unwrap()
}

#[test]
fn artifacts_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["measure", "trw", "--word", "[x,y]", "--n", "3..6", "--exact"],
        &["measure", "trw", "--word", "x^2 y^3 X", "--n", "5..8", "--mc", "--samples", "40000", "--seed", "3"],
        &["measure", "table", "--word", "[x,y]", "--group", "S4"],
        &["perm", "moments", "--b", "1", "--t", "2", "--n", "4..8"],
        &["mobius", "derive", "--gen", "x^2 y^2", "--n", "3..4", "--format", "csv"],
        &["perm", "obstruction", "--word", "x^2 y^2", "--d", "2", "--n", "2..7", "--seed", "9", "--samples", "5000"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let mut one = args.to_vec();
        one.extend(["--workers", "1"]);
        let mut four = args.to_vec();
        four.extend(["--workers", "4"]);
        let a = artifact(dir.path(), &format!("a{i}"), &one);
        let b = artifact(dir.path(), &format!("b{i}"), &four);
        assert_eq!(a, b, "case {args:?}");
        let again = artifact(dir.path(), &format!("c{i}"), &four);
        assert_eq!(b, again, "rerun of {args:?}");
    }
}

#[test]
fn mc_agrees_with_exact() {
    let exact = json_of(&["measure", "trw", "--word", "[x,y]", "--n", "5", "--format", "json"]);
    let mc = json_of(&["measure", "trw", "--word", "[x,y]", "--n", "5", "--mc", "--samples", "200000", "--seed", "1", "--format", "json"]);
    assert_eq!(exact["values"][0]["value"], "5/4");
    let est = mc["values"][0]["estimate"].as_f64().unwrap();
    let se = mc["values"][0]["standard_error"].as_f64().unwrap();
    assert!((est - 1.25).abs() <= 5.0 * se, "{est} +- {se}");
}

#[test]
fn usage_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["measure", "trw", "--word", "x(", "--n", "3"],
        &["measure", "trw", "--word", "x", "--n", "5..3"],
        &["measure", "trw", "--word", "x", "--n", ""],
        &["measure", "trw", "--word", "x", "--n", "3,3"],
        &["measure", "trw", "--word", "x", "--n", "3", "--seed", "1"],
        &["measure", "trw", "--word", "x", "--n", "3", "--exact", "--samples", "10"],
        &["measure", "trw", "--word", "x", "--n", "3", "--mc", "--samples", "10"],
        &["measure", "trw", "--word", "x", "--n", "3", "--format", "dot"],
        &["measure", "table", "--word", "x", "--group", "Q8"],
        &["measure", "table", "--word", "x", "--group", "cayley:/nonexistent/table.json"],
        &["perm", "obstruction", "--word", "x", "--d", "2", "--n", "3"],
        &["perm", "root", "--perm", "(1 2", "--degree", "3", "--d", "2"],
        &["word", "root", "--word", "1"],
        &["nonsense"],
    ];
    for args in cases {
        let out = freewords(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn hypothesis_violations_exit_3_and_name_the_hypothesis() {
    let out = freewords(&["mobius", "thm14", "--word", "xy", "--image", "a^3", "--image", "b", "--n", "5..6"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("w algebraic in F_k"), "{}", stderr(&out));

    let out = freewords(&["mobius", "thm14", "--word", "[x,y]", "--image", "a", "--image", "b", "--n", "5"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("images not a free factor"), "{}", stderr(&out));

    let out = freewords(&["perm", "moments", "--b", "2", "--t", "3", "--n", "6"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("b divides t"));

    let out = freewords(&["mobius", "power-gap", "--word", "x^2", "--d", "2", "--n", "3"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("u is not a proper power"));
}

#[test]
fn budget_overruns_exit_4() {
    let out = freewords(&["measure", "trw", "--word", "[x,y]", "--n", "8", "--budget", "1000"]);
    assert_eq!(code(&out), 4);
    let out = freewords(&["perm", "moments", "--b", "1", "--t", "1", "--n", "13"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn cayley_tables_load_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c3.json");
    std::fs::write(&path, r#"{"order": 3, "table": [[0,1,2],[1,2,0],[2,0,1]], "names": ["e","a","b"]}"#).unwrap();
    let spec = format!("cayley:{}", path.display());
    let v = json_of(&["measure", "table", "--word", "x^3", "--group", &spec, "--format", "json"]);
    let classes = v["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 3);
    assert_eq!(classes[0]["probability"], "1");

    std::fs::write(&path, r#"{"order": 2, "table": [[0,1],[1,1]]}"#).unwrap();
    let out = freewords(&["measure", "table", "--word", "x", "--group", &spec]);
    assert_eq!(code(&out), 2);
}

#[test]
fn every_subcommand_names_its_statement() {
    let leaves: &[&[&str]] = &[
        &["word", "parse"],
        &["word", "reduce"],
        &["word", "root"],
        &["word", "substitute"],
        &["graph", "fold"],
        &["graph", "quotients"],
        &["ext", "list"],
        &["ext", "pi"],
        &["ext", "pi-iota"],
        &["ext", "ff-closure"],
        &["measure", "trw"],
        &["measure", "phi"],
        &["measure", "table"],
        &["measure", "compare"],
        &["measure", "epiim"],
        &["mobius", "derive"],
        &["mobius", "via-expansion"],
        &["mobius", "fit"],
        &["mobius", "thm14"],
        &["mobius", "power-gap"],
        &["perm", "cycle-type"],
        &["perm", "is-power"],
        &["perm", "root"],
        &["perm", "moments"],
        &["perm", "obstruction"],
    ];
    for leaf in leaves {
        let mut args = leaf.to_vec();
        args.push("--help");
        let out = freewords(&args);
        assert_eq!(code(&out), 0, "{leaf:?}");
        assert!(stdout(&out).contains("Statement exercised:"), "{leaf:?}");
    }
}

#[test]
fn subcommands_produce_expected_values() {
    let v = json_of(&["word", "root", "--word", "[x,y]^3"]);
    assert_eq!((v["root"].as_str().unwrap(), v["exponent"].as_u64().unwrap()), ("xyXY", 3));

    let v = json_of(&["word", "substitute", "--word", "[x,y]", "--image", "a^2", "--image", "b"]);
    assert_eq!(v["result"], "xxyXXY");

    let v = json_of(&["graph", "fold", "--gen", "x^2", "--gen", "xy", "--format", "json"]);
    assert_eq!((v["rank"].as_u64(), v["vertices"].as_u64()), (Some(2), Some(2)));

    let out = freewords(&["graph", "export", "--gen", "[x,y]"]);
    assert!(stdout(&out).contains("digraph core"));

    let v = json_of(&["ext", "ff-closure", "--gen", "x^2", "--over", "x", "--over", "y"]);
    assert_eq!(v["closure"], serde_json::json!(["x"]));

    let v = json_of(&["ext", "pi-iota", "--gen", "[x,y]", "--image", "a^2", "--image", "b"]);
    assert_eq!(v["pi_iota"], 2);
    assert_eq!(v["image_is_free_factor"], false);

    let v = json_of(&["mobius", "fit", "--word", "[x,y]", "--n", "4..7"]);
    assert_eq!(v["fit"]["pi_estimate"], 2);
    assert!((v["fit"]["c_estimate"].as_f64().unwrap() - 1.0).abs() <= 0.2);

    let out = freewords(&["mobius", "thm14", "--word", "[x,y]", "--image", "a^2", "--image", "b", "--n", "5..7"]);
    assert_eq!(code(&out), 0);
    assert!(csv_rows(&stdout(&out)).iter().all(|r| r[5] == "strict"));

    let out = freewords(&["mobius", "power-gap", "--word", "x", "--d", "4", "--n", "4..7"]);
    assert!(csv_rows(&stdout(&out)).iter().all(|r| r[1] == "2" && r[5] == "equal"));

    let out = freewords(&["mobius", "via-expansion", "--gen", "[x,y]", "--n", "3..5"]);
    assert_eq!(code(&out), 0);
    assert!(csv_rows(&stdout(&out)).iter().all(|r| r[5] == "equal"));

    let v = json_of(&["perm", "root", "--perm", "(1 2)(3 4)", "--degree", "4", "--d", "2"]);
    assert!(v["root"].is_string());
    let v = json_of(&["perm", "root", "--perm", "(1 2)", "--degree", "3", "--d", "2"]);
    assert!(v["root"].is_null());

    let v = json_of(&["perm", "is-power", "--perm", "(1 2 3 4)(5 6 7 8)", "--degree", "8", "--d", "2"]);
    assert_eq!(v["is_power"], true);

    let v = json_of(&["perm", "cycle-type", "--perm", "(1 2)(3 4 5)", "--degree", "6"]);
    assert_eq!(v["cycle_type"], "3+2+1");

    let v = json_of(&["measure", "epiim", "--word", "x", "--group", "C4"]);
    assert_eq!(v["image"].as_array().unwrap().len(), 2);

    let out = freewords(&["measure", "phi", "--gen", "x^2", "--n", "3..5"]);
    assert!(csv_rows(&stdout(&out)).iter().all(|r| r[1] == "2" && r[2] == "1"));

    let out = freewords(&["perm", "moments", "--b", "1", "--t", "2", "--n", "4..6"]);
    assert!(csv_rows(&stdout(&out)).iter().all(|r| r[7] == "true" && r[8] == "true"));
}
