//! Writes perturbed prediction trials for a corpus gold file.
//!
//! ```text
//! cargo run -p slice-lineage --example perturb_predictions -- <gold.jsonl> <out-dir> [trials] [seed]
//! ```
//!
//! Each gold record gets one edit drawn from a fixed menu (exact copy,
//! dropped or extra column, qualified table name, dropped snippet, keyword
//! case change, dropped aggregation, and several format breakages). The
//! output depends only on the gold file, the trial count and the seed.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slice_lineage::corpus::{load_gold, PredictionRecord};
use slice_lineage::response::wrap_as_answer;
use slice_lineage::SchemaLineage;

fn rebuild(
    l: &SchemaLineage,
    schema: Vec<String>,
    table: Vec<String>,
    trf: Vec<String>,
    agg: Vec<String>,
) -> SchemaLineage {
    SchemaLineage::new(schema, table, trf, agg).unwrap_or_else(|_| l.clone())
}

fn parts(l: &SchemaLineage) -> (Vec<String>, Vec<String>, Vec<String>, Vec<String>) {
    (
        l.source_schema().iter().cloned().collect(),
        l.source_table().iter().cloned().collect(),
        l.transformation().to_vec(),
        l.aggregation().to_vec(),
    )
}

fn perturb(l: &SchemaLineage, rng: &mut ChaCha8Rng) -> String {
    let (mut schema, mut table, mut trf, mut agg) = parts(l);
    let kind = rng.gen_range(0..12);
    match kind {
        0 | 1 => wrap_as_answer(l),
        2 => {
            if schema.len() > 1 {
                let i = rng.gen_range(0..schema.len());
                schema.remove(i);
            } else {
                schema.push("row_id".into());
            }
            wrap_as_answer(&rebuild(l, schema, table, trf, agg))
        }
        3 => {
            if let Some(t) = table.choose_mut(rng) {
                *t = format!("dbo.{}", t.rsplit('/').next().unwrap_or(t));
            }
            wrap_as_answer(&rebuild(l, schema, table, trf, agg))
        }
        4 => {
            if trf.len() > 1 {
                let i = rng.gen_range(0..trf.len());
                trf.remove(i);
            } else if let Some(s) = trf.first_mut() {
                *s = s.replace(" AS ", " ");
            }
            wrap_as_answer(&rebuild(l, schema, table, trf, agg))
        }
        5 => {
            for s in trf.iter_mut().chain(agg.iter_mut()) {
                *s = s.replace(" AS ", " as ").replace("GROUP BY", "group by");
            }
            wrap_as_answer(&rebuild(l, schema, table, trf, agg))
        }
        6 => {
            agg.clear();
            if let Some(s) = trf.last_mut() {
                *s = s.replace("(T.", "(");
            }
            wrap_as_answer(&rebuild(l, schema, table, trf, agg))
        }
        7 => format!("Here is the lineage you asked for.\n{}", wrap_as_answer(l))
            .replace("source_table", "source_tables"),
        8 => format!("<think>trace the column upward</think>\n{}", wrap_as_answer(l)),
        9 => String::new(),
        10 => format!("<answer>\n```json\n{}\n```\n</answer>", l.canonical_serialize()),
        _ => {
            table.push("staging.tmp_lookup".into());
            trf.reverse();
            wrap_as_answer(&rebuild(l, schema, table, trf, agg))
        }
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        eprintln!("usage: perturb_predictions <gold.jsonl> <out-dir> [trials] [seed]");
        std::process::exit(2);
    }
    let gold = load_gold(&PathBuf::from(&args[0]))?;
    let out = PathBuf::from(&args[1]);
    let trials: u64 = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let seed: u64 = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(2024);
    std::fs::create_dir_all(&out)?;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + trial);
        let mut text = String::new();
        for g in gold.records() {
            let raw = perturb(&g.lineage, &mut rng);
            let rec = PredictionRecord {
                script_id: g.task.script_id.clone(),
                target_schema: g.task.target_schema.clone(),
                trial_id: format!("trial-{trial}"),
                raw_response: raw,
                seed: Some(seed + trial),
                note: None,
            };
            text.push_str(&rec.to_line());
            text.push('\n');
        }
        std::fs::write(out.join(format!("trial-{trial}.jsonl")), text)?;
    }
    Ok(())
}
