use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_redundarith"));
    c.env_remove("REDUNDARITH_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

#[test]
fn reduce_text_output_reparses() {
    let p = scratch("four.mrc", "mrc 4 4 2 0\n0111\n1011\n1101\n1110\n");
    let o = run(&["reduce", p.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("mrc 2 "), "{out}");
    assert!(out.contains("# value 45"));
    let back = scratch("four_out.mrc", &out);
    let again = run(&["--json", "reduce", back.to_str().unwrap()]);
    assert_eq!(json(&again)["result"]["value"], "45");
}

#[test]
fn reduce_reads_json_codes() {
    let p = scratch("four.mrc.json", "");
    let o = run(&[
        "--json",
        "reduce",
        scratch("seed.mrc", "mrc 3 3 2 0\n111\n111\n111\n")
            .to_str()
            .unwrap(),
    ]);
    let code = json(&o)["input"]["code"].to_string();
    fs::write(&p, code).unwrap();
    let o = run(&["--json", "reduce", p.to_str().unwrap()]);
    assert!(o.status.success());
    let j = json(&o);
    assert_eq!(j["result"]["value"], "21");
    assert_eq!(j["row_counts"], serde_json::json!([3, 2]));
}

#[test]
fn add_and_mul_values() {
    let o = run(&["--json", "add", "--a", "7", "--b", "9.5"]);
    assert_eq!(json(&o)["sum"]["value"], "33/2");
    let o = run(&["--json", "mul", "--a", "13", "--b", "11", "--timing"]);
    let j = json(&o);
    assert_eq!(j["value"], "143");
    assert!(j["delay"].as_u64().unwrap() > 0);
    let o = run(&["--json", "mul", "--signed", "--a", "-3", "--b", "5"]);
    assert_eq!(json(&o)["value"], "-15");
    let o = run(&["--json", "mul", "--a", "0.75", "--b", "0.5"]);
    assert_eq!(json(&o)["value"], "3/8");
}

#[test]
fn mul_timing_for_63_bits() {
    let big = "9223372036854775807";
    let o = run(&[
        "--json", "mul", "--a", big, "--b", "1", "--width", "63", "--timing",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["delay"], 14);
}

#[test]
fn mac_stream_total() {
    let p = scratch("pairs.txt", "3 4\n5 6\n# comment\n-2 7\n");
    let o = run(&["--json", "mac", "--signed", "--stream", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["total"], "28");
}

#[test]
fn div_digits() {
    let o = run(&[
        "--json", "div", "--x", "5", "--z", "7", "--k", "4", "--iters", "4",
    ]);
    let j = json(&o);
    assert_eq!(j["digits"], serde_json::json!([11, 6, 13, 11]));
    assert_eq!(j["quotient"], "46811/65536");
}

#[test]
fn accumulate_stream() {
    let p = scratch("values.txt", "1\n2.5\n7\n");
    let o = run(&["--json", "accumulate", "--stream", p.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(json(&o)["total"], "21/2");
}

#[test]
fn map_accumulate_mode() {
    let cfg = scratch(
        "map.json",
        r#"{"width":8,"mode":"accumulate","signedness":"unsigned"}"#,
    );
    let tuples = scratch(
        "tuples.jsonl",
        "{\"a\":3,\"b\":4,\"c\":5,\"d\":6}\n{\"a\":1,\"b\":1}\n",
    );
    let o = run(&[
        "--json",
        "map",
        "--config",
        cfg.to_str().unwrap(),
        "--stream",
        tuples.to_str().unwrap(),
        "--timing",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&o);
    assert_eq!(j["state"]["total"], "24");
    assert!(j["timing"]["total"].as_u64().is_some());
}

#[test]
fn map_signed_one_shot() {
    let cfg = scratch(
        "map_signed.json",
        r#"{"width":8,"mode":"one-shot","signedness":"twos-complement"}"#,
    );
    let tuples = scratch(
        "tuples_signed.jsonl",
        "{\"a\":-3,\"b\":4,\"c\":\"-5\",\"d\":6}\n",
    );
    let o = run(&[
        "--json",
        "map",
        "--config",
        cfg.to_str().unwrap(),
        "--stream",
        tuples.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["states"][0]["total"], "-11");
}

#[test]
fn report_all_passes() {
    let o = run(&["report", "--table", "all"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("result: pass"));
    let o = run(&["--json", "report", "--table", "3.2"]);
    assert_eq!(json(&o)["pass"], true);
}

#[test]
fn fuzz_is_seeded() {
    let a = bin()
        .args(["--json", "fuzz", "--trials", "10", "--scope", "mul,div"])
        .env("REDUNDARITH_SEED", "7")
        .output()
        .unwrap();
    let b = run(&[
        "--json", "--seed", "7", "fuzz", "--trials", "10", "--scope", "mul,div",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn eval_and_errors() {
    let o = run(&["eval", "2+3*4"]);
    assert!(stdout(&o).starts_with("14\n"));
    let o = run(&["eval", "2+"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains('^'));
    assert_eq!(run(&["report", "--table", "9.9"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    let p = scratch("extra.mrc", "mrc 1 2 2 0\n01\n10\n");
    assert_eq!(run(&["reduce", p.to_str().unwrap()]).status.code(), Some(2));
}
