use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread;

use slice_lineage::corpus::{load_gold, PredictionRecord};
use slice_lineage::response::wrap_as_answer;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus() -> PathBuf {
    root().join("data/mini_corpus")
}

fn slice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slice")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn trial(k: usize) -> PathBuf {
    corpus().join(format!("predictions/trial-{k}.jsonl"))
}

fn score(out: &Path, strategy: &str, config: Option<&Path>, preds: &[PathBuf]) -> Output {
    let corpus = corpus();
    let mut args = vec![
        "score",
        "--corpus",
        p(&corpus),
        "--out",
        p(out),
        "--model",
        "m",
        "--strategy",
        strategy,
    ];
    if let Some(c) = config {
        args.extend(["--config", p(c)]);
    }
    for pred in preds {
        args.extend(["--pred", p(pred)]);
    }
    slice(&args)
}

#[test]
fn self_scoring_gives_one() {
    let dir = tempfile::tempdir().unwrap();
    let gold = load_gold(&corpus().join("gold.jsonl")).unwrap();
    let lines: String = gold
        .records()
        .iter()
        .map(|g| {
            PredictionRecord {
                script_id: g.task.script_id.clone(),
                target_schema: g.task.target_schema.clone(),
                trial_id: "0".into(),
                raw_response: wrap_as_answer(&g.lineage),
                seed: None,
                note: None,
            }
            .to_line()
                + "\n"
        })
        .collect();
    let pred = dir.path().join("self.jsonl");
    fs::write(&pred, lines).unwrap();
    let out = dir.path().join("out");
    let o = score(&out, "base", None, &[pred]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["corpus"]["mean"], 1.0);
    for name in [
        "report.json",
        "records.jsonl",
        "scores.tsv",
        "summary.txt",
        "manifest.json",
    ] {
        assert!(out.join(name).is_file(), "{name}");
    }
}

#[test]
fn two_trials_report_mean_and_std_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = score(
            out,
            "base",
            Some(&root().join("configs/default.toml")),
            &[trial(0), trial(1)],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(
            stdout(&o).contains("\nmean ") && stdout(&o).contains("\nstd "),
            "{}",
            stdout(&o)
        );
    }
    for name in ["report.json", "records.jsonl", "scores.tsv", "summary.txt"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["predictions"].as_array().unwrap().len(), 2);
    assert!(manifest["emitted_at"].is_string() && manifest["tool_version"].is_string());
}

#[test]
fn config_and_input_failures_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(root().join("configs/default.toml")).unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, text.replace("omega_agg = 0.2\n", "")).unwrap();
    let o = score(&dir.path().join("o"), "base", Some(&config), &[trial(0)]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("omega_agg"), "{}", stderr(&o));

    let o = score(&dir.path().join("o"), "base", None, &[dir.path().join("absent.jsonl")]);
    assert_eq!(o.status.code(), Some(3));

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"script_id\":1}\n").unwrap();
    let o = score(&dir.path().join("o"), "base", None, &[bad]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains(":1:"), "{}", stderr(&o));

    let o = score(&dir.path().join("o"), "cot-1", None, &[trial(0)]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn report_builds_table_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for strategy in ["base", "one-shot", "two-shot"] {
        let out = dir.path().join(strategy);
        assert!(score(&out, strategy, None, &[trial(0), trial(1), trial(2)])
            .status
            .success());
        outs.push(out);
    }
    let table_dir = dir.path().join("table");
    let mut args = vec!["report", "--out", p(&table_dir)];
    args.extend(outs.iter().map(|o| p(o)));
    let o = slice(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let tsv = fs::read_to_string(table_dir.join("table.tsv")).unwrap();
    let rows: Vec<&str> = tsv.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(
        rows[0].split('\t').collect::<Vec<_>>(),
        ["model", "base", "one-shot", "two-shot"]
    );
    let series = fs::read_to_string(table_dir.join("strata/m__base.tsv")).unwrap();
    assert_eq!(series.lines().count(), 4);

    // different weights cannot share a table
    let text = fs::read_to_string(root().join("configs/default.toml")).unwrap();
    let config = dir.path().join("c.toml");
    fs::write(
        &config,
        text.replace("omega_tbl = 0.4", "omega_tbl = 0.5")
            .replace("omega_trf = 0.4", "omega_trf = 0.3"),
    )
    .unwrap();
    let odd = dir.path().join("odd");
    assert!(score(&odd, "three-shot", Some(&config), &[trial(0)]).status.success());
    let o = slice(&["report", "--out", p(&dir.path().join("t2")), p(&outs[0]), p(&odd)]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("not comparable"), "{}", stderr(&o));
}

#[test]
fn validate_reports_findings_by_line() {
    let o = slice(&[
        "validate",
        "--gold",
        p(&corpus().join("gold.jsonl")),
        "--corpus",
        p(&corpus()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0 findings");

    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.jsonl");
    let good = fs::read_to_string(corpus().join("gold.jsonl")).unwrap();
    let first = good.lines().next().unwrap();
    let split = r#"{"script_id":"x","target_schema":"Y","lineage":{"source_schema":["a"],"source_table":["t"],"transformation":["a<CODEEND>AS Y"],"aggregation":[]}}"#;
    fs::write(&gold, format!("{first}\n{split}\n")).unwrap();
    let o = slice(&["validate", "--gold", p(&gold)]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains(":line 2:") && text.contains("<CODEEND>"), "{text}");
    assert!(text.trim_end().ends_with("1 findings"));
}

#[test]
fn difficulty_and_prompt_commands() {
    let o = slice(&["difficulty", "--corpus", p(&corpus())]);
    assert!(o.status.success());
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("bank_customer_activity"))
        .unwrap()
        .to_owned();
    assert!(
        line.split_whitespace().nth(1) == Some("hard") && line.trim_end().ends_with("hard"),
        "{line}"
    );

    let dir = tempfile::tempdir().unwrap();
    let o = slice(&[
        "prompt",
        "--corpus",
        p(&corpus()),
        "--strategy",
        "cot-3",
        "--out",
        p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 5);
    let text = fs::read_to_string(dir.path().join("daily_sales.txt")).unwrap();
    assert_eq!(text.matches("<think>").count(), 4);
}

/// Answers every chat request with a fixed answer; ignores bare connections.
fn serve() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = None;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let lower = line.trim_end().to_ascii_lowercase();
                if lower.is_empty() {
                    length = length.or(Some(0));
                    break;
                }
                if let Some(v) = lower.strip_prefix("content-length:") {
                    length = Some(v.trim().parse().unwrap());
                }
            }
            let Some(length) = length else { continue };
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let reply = serde_json::json!({"choices": [{"message": {"content": "<answer> {} </answer>"}}]}).to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    format!("http://{addr}")
}

#[test]
fn extract_writes_one_record_per_task() {
    let dir = tempfile::tempdir().unwrap();
    let endpoint = dir.path().join("endpoint.toml");
    fs::write(
        &endpoint,
        format!("base_url = \"{}\"\nmodel = \"m\"\nworkers = 2\n", serve()),
    )
    .unwrap();
    let out = dir.path().join("preds/trial-0.jsonl");
    let o = slice(&[
        "extract",
        "--corpus",
        p(&corpus()),
        "--endpoint",
        p(&endpoint),
        "--strategy",
        "two-shot",
        "--trial-id",
        "t0",
        "--seed",
        "5",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let gold = load_gold(&corpus().join("gold.jsonl")).unwrap();
    assert_eq!(text.lines().count(), gold.len());
    let first: PredictionRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first.task(), gold.records()[0].task);
    assert_eq!(first.seed, Some(5));

    // extracted predictions score without errors
    let o = slice(&[
        "score",
        "--gold",
        p(&corpus().join("gold.jsonl")),
        "--pred",
        p(&out),
        "--out",
        p(&dir.path().join("s")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn unreachable_endpoint_fails_before_writing() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let endpoint = dir.path().join("endpoint.toml");
    fs::write(
        &endpoint,
        format!("base_url = \"http://127.0.0.1:{port}\"\nmodel = \"m\"\n"),
    )
    .unwrap();
    let out = dir.path().join("out.jsonl");
    let extract = |out: &Path| {
        slice(&[
            "extract",
            "--corpus",
            p(&corpus()),
            "--endpoint",
            p(&endpoint),
            "--strategy",
            "base",
            "--out",
            p(out),
        ])
    };
    let o = extract(&out);
    assert_eq!(o.status.code(), Some(6), "{}", stderr(&o));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);

    fs::write(
        &endpoint,
        "base_url = \"http://h\"\nmodel = \"m\"\napi_key = \"inline\"\n",
    )
    .unwrap();
    assert_eq!(extract(&out).status.code(), Some(5));
}
