//! Extraction runs: one prompt per script, one request per task.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use slice_lineage::corpus::{build_prompt, task_prompt, Corpus, GoldSet, PredictionRecord, PromptSpec, Strategy};

use crate::config::RetryPolicy;
use crate::{ChatBackend, ClientError};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub strategy: Strategy,
    pub trial_id: String,
    pub seed: u64,
    pub workers: usize,
    pub requests_per_second: Option<f64>,
    pub retry: RetryPolicy,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub records: usize,
    pub failed: usize,
    pub prefixes_built: usize,
}

/// Spaces request starts at a fixed interval shared by all workers.
struct RateLimiter {
    interval: Option<Duration>,
    next: Mutex<Instant>,
}

impl RateLimiter {
    fn new(per_second: Option<f64>) -> Self {
        Self {
            interval: per_second.map(|r| Duration::from_secs_f64(1.0 / r)),
            next: Mutex::new(Instant::now()),
        }
    }

    fn wait(&self) {
        let Some(interval) = self.interval else {
            return;
        };
        let slot = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + interval;
            slot
        };
        let now = Instant::now();
        if slot > now {
            thread::sleep(slot - now);
        }
    }
}

struct Job {
    index: usize,
    script_id: String,
    target_schema: String,
    prompt: String,
}

/// Runs every gold task through `backend` and writes one prediction line per
/// task to `sink`, in gold order.
///
/// The endpoint is checked before anything is written. Requests that still
/// fail after the retry budget become records with an empty response and a
/// note, so the record count always equals the gold task count.
pub fn run_extraction(
    corpus: &Corpus,
    gold: &GoldSet,
    backend: &dyn ChatBackend,
    options: &RunOptions,
    sink: &mut dyn Write,
) -> Result<RunSummary, ClientError> {
    backend.preflight()?;

    let mut summary = RunSummary::default();
    let mut prefixes: BTreeMap<&str, String> = BTreeMap::new();
    for id in gold.script_ids() {
        let script = corpus
            .script(id)
            .ok_or_else(|| ClientError::UnknownScript(id.to_owned()))?;
        let spec = PromptSpec::from_pool(options.strategy, script, &corpus.examples)?;
        prefixes.insert(id, build_prompt(&spec)?);
        summary.prefixes_built += 1;
    }
    let jobs: Vec<Job> = gold
        .records()
        .iter()
        .enumerate()
        .map(|(index, g)| Job {
            index,
            script_id: g.task.script_id.clone(),
            target_schema: g.task.target_schema.clone(),
            prompt: task_prompt(&prefixes[g.task.script_id.as_str()], &g.task.target_schema),
        })
        .collect();

    let limiter = RateLimiter::new(options.requests_per_second);
    let cursor = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<String, String>)>();
    let workers = options.workers.max(1).min(jobs.len().max(1));

    thread::scope(|scope| -> Result<(), ClientError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, cursor, limiter) = (&jobs, &cursor, &limiter);
            scope.spawn(move || loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else {
                    break;
                };
                let outcome = request_with_retry(backend, &job.prompt, options, limiter);
                if tx.send((job.index, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // single writer: emit in gold order as results arrive
        let mut pending: BTreeMap<usize, Result<String, String>> = BTreeMap::new();
        let mut next = 0;
        for (index, outcome) in rx {
            pending.insert(index, outcome);
            while let Some(outcome) = pending.remove(&next) {
                let job = &jobs[next];
                let (raw_response, note) = match outcome {
                    Ok(text) => (text, None),
                    Err(reason) => {
                        summary.failed += 1;
                        (String::new(), Some(reason))
                    }
                };
                let record = PredictionRecord {
                    script_id: job.script_id.clone(),
                    target_schema: job.target_schema.clone(),
                    trial_id: options.trial_id.clone(),
                    raw_response,
                    seed: Some(options.seed),
                    note,
                };
                writeln!(sink, "{}", record.to_line()).map_err(ClientError::Io)?;
                summary.records += 1;
                next += 1;
            }
        }
        Ok(())
    })?;
    sink.flush().map_err(ClientError::Io)?;
    Ok(summary)
}

fn request_with_retry(
    backend: &dyn ChatBackend,
    prompt: &str,
    options: &RunOptions,
    limiter: &RateLimiter,
) -> Result<String, String> {
    let attempts = options.retry.max_attempts.max(1);
    let mut last = String::new();
    for attempt in 1..=attempts {
        thread::sleep(options.retry.delay_before(attempt));
        limiter.wait();
        match backend.complete(prompt, options.seed) {
            Ok(text) => return Ok(text),
            Err(e) => last = e.to_string(),
        }
    }
    Err(format!("request failed after {attempts} attempt(s): {last}"))
}
