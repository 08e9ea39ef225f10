//! Evaluation through a child process speaking newline-delimited JSON.
//!
//! The command runs under `sh -c` and stays alive across batches. Each
//! request is one line on its stdin:
//!
//! ```json
//! {"id":7,"genome":[...],"architecture":{...},"budget":{"epochs":10,"batch_size":128,"dropout":0.7}}
//! ```
//!
//! and each reply is one line on its stdout, in any order:
//!
//! ```json
//! {"id":7,"status":"ok","accuracy":0.91}
//! {"id":8,"status":"error","message":"diverged"}
//! ```
//!
//! `status` may be omitted when `accuracy` is present. Stderr is passed
//! through untouched.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use cellspace_core::{
    EvalStatus, EvaluationRequest, EvaluationResult, Evaluator, EvaluatorError, GenomeLayout,
    TrainingBudget,
};
use serde::{Deserialize, Serialize};

use crate::export::ArchitectureExport;

#[derive(Serialize)]
struct RequestLine<'a> {
    id: u64,
    genome: &'a [u32],
    architecture: &'a ArchitectureExport,
    budget: &'a TrainingBudget,
}

#[derive(Deserialize)]
struct ReplyLine {
    id: u64,
    #[serde(default)]
    status: Option<EvalStatus>,
    #[serde(default)]
    accuracy: Option<f64>,
    #[serde(default)]
    message: Option<String>,
}

impl ReplyLine {
    fn into_result(self) -> EvaluationResult {
        match (self.status, self.accuracy) {
            (Some(EvalStatus::Error), _) => EvaluationResult::error(
                self.id,
                self.message
                    .unwrap_or_else(|| "evaluator reported an error".into()),
            ),
            (_, Some(a)) if (0.0..=1.0).contains(&a) => EvaluationResult::ok(self.id, a),
            (_, Some(a)) => {
                EvaluationResult::error(self.id, format!("accuracy {a} outside [0, 1]"))
            }
            (_, None) => EvaluationResult::error(self.id, "reply has no accuracy"),
        }
    }
}

/// Pulls the `id` out of a line that failed to parse as a full reply.
fn salvage_id(line: &str) -> Option<u64> {
    serde_json::from_str::<serde_json::Value>(line)
        .ok()?
        .get("id")?
        .as_u64()
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    answered: bool,
}

impl Worker {
    fn spawn(command: &str) -> Result<Self, EvaluatorError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| EvaluatorError::Spawn(format!("{command}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        log::debug!("spawned evaluator pid {}", child.id());
        Ok(Worker {
            child,
            stdin,
            lines,
            answered: false,
        })
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Evaluator backed by a long-running subprocess.
///
/// A reply that does not arrive within the timeout of the previous reply
/// (or of the batch start) turns every outstanding request into an error
/// and the child is killed. A child that exits mid-batch is replaced on the
/// next batch, unless it never produced a valid reply, which is fatal.
pub struct ExternalEvaluator {
    command: String,
    timeout: Duration,
    layout: GenomeLayout,
    config_fingerprint: String,
    worker: Option<Worker>,
}

impl ExternalEvaluator {
    pub fn new(
        command: impl Into<String>,
        timeout: Duration,
        layout: GenomeLayout,
        config_fingerprint: String,
    ) -> Self {
        ExternalEvaluator {
            command: command.into(),
            timeout,
            layout,
            config_fingerprint,
            worker: None,
        }
    }

    fn request_line(&self, r: &EvaluationRequest) -> Result<String, EvaluatorError> {
        let architecture = ArchitectureExport::from_graph(
            &r.genome,
            r.graph.clone(),
            &self.layout,
            self.config_fingerprint.clone(),
        )
        .map_err(|e| EvaluatorError::Fatal(format!("request {}: {e}", r.id)))?;
        let line = RequestLine {
            id: r.id,
            genome: r.genome.digits(),
            architecture: &architecture,
            budget: &r.budget,
        };
        let mut text = serde_json::to_string(&line).expect("request serializes");
        text.push('\n');
        Ok(text)
    }
}

impl Drop for ExternalEvaluator {
    fn drop(&mut self) {
        if let Some(mut w) = self.worker.take() {
            // Closing stdin lets a well-behaved child exit on its own.
            drop(w.stdin);
            let deadline = Instant::now() + Duration::from_millis(500);
            while Instant::now() < deadline {
                if matches!(w.child.try_wait(), Ok(Some(_))) {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = w.child.kill();
            let _ = w.child.wait();
        }
    }
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(
        &mut self,
        requests: &[EvaluationRequest],
    ) -> Result<Vec<EvaluationResult>, EvaluatorError> {
        if requests.is_empty() {
            return Ok(Vec::new());
        }
        let lines = requests
            .iter()
            .map(|r| self.request_line(r))
            .collect::<Result<Vec<_>, _>>()?;
        let mut worker = match self.worker.take() {
            Some(mut w) => {
                if matches!(w.child.try_wait(), Ok(None)) {
                    w
                } else {
                    w.kill();
                    Worker::spawn(&self.command)?
                }
            }
            None => Worker::spawn(&self.command)?,
        };

        let mut results: Vec<Option<EvaluationResult>> = vec![None; requests.len()];
        let slot = |id: u64| requests.iter().position(|r| r.id == id);

        // A dead child shows up as a write error here and as EOF below.
        for line in &lines {
            if worker.stdin.write_all(line.as_bytes()).is_err() {
                break;
            }
        }
        let _ = worker.stdin.flush();

        let mut outstanding = requests.len();
        let mut deadline = Instant::now() + self.timeout;
        let mut alive = true;
        while outstanding > 0 {
            let wait = deadline.saturating_duration_since(Instant::now());
            match worker.lines.recv_timeout(wait) {
                Ok(line) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let result = match serde_json::from_str::<ReplyLine>(&line) {
                        Ok(reply) => {
                            worker.answered = true;
                            reply.into_result()
                        }
                        Err(e) => match salvage_id(&line) {
                            Some(id) => {
                                EvaluationResult::error(id, format!("malformed reply: {e}"))
                            }
                            None => {
                                log::warn!("evaluator: ignoring unattributable line: {line}");
                                continue;
                            }
                        },
                    };
                    match slot(result.id) {
                        Some(i) if results[i].is_none() => {
                            results[i] = Some(result);
                            outstanding -= 1;
                            deadline = Instant::now() + self.timeout;
                        }
                        Some(_) => log::warn!("evaluator: duplicate reply for id {}", result.id),
                        None => log::warn!("evaluator: reply for unknown id {}", result.id),
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    log::warn!(
                        "evaluator: {outstanding} request(s) timed out after {:?}",
                        self.timeout
                    );
                    for (r, slot) in requests.iter().zip(results.iter_mut()) {
                        slot.get_or_insert_with(|| EvaluationResult::error(r.id, "timed out"));
                    }
                    alive = false;
                    break;
                }
                Err(RecvTimeoutError::Disconnected) => {
                    let status = worker.child.wait().ok();
                    if !worker.answered {
                        return Err(EvaluatorError::Fatal(format!(
                            "evaluator exited ({}) without a valid reply",
                            status.map_or_else(|| "unknown status".to_string(), |s| s.to_string())
                        )));
                    }
                    log::warn!("evaluator exited mid-batch; it will be restarted");
                    for (r, slot) in requests.iter().zip(results.iter_mut()) {
                        slot.get_or_insert_with(|| {
                            EvaluationResult::error(r.id, "evaluator exited")
                        });
                    }
                    alive = false;
                    break;
                }
            }
        }
        if alive {
            self.worker = Some(worker);
        } else {
            worker.kill();
        }
        Ok(results
            .into_iter()
            .map(|r| r.expect("every slot is filled"))
            .collect())
    }
}
