//! Benchmark runs over QA files and their aggregate metrics.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{run_episode, ChatClient, ChatRequest, DecodingOptions, Environment, Message, Trajectory};
use crate::reward::{token_f1, trajectory_answer};

/// One benchmark question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaItem {
    pub id: String,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<String>,
}

/// A solved question: the trajectory plus the bookkeeping needed to score
/// it later. Serializes as a trajectory object with extra fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedItem {
    pub id: String,
    pub gold: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<String>,
    pub wall_time_s: f64,
    #[serde(flatten)]
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub gold: String,
    pub predicted: Option<String>,
    pub f1: f64,
    pub judge_correct: Option<bool>,
    pub output_tokens: usize,
    pub tool_calls: usize,
    pub failed_tool_calls: usize,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<String>,
    #[serde(default)]
    pub budget_exhausted: bool,
    /// Set when the episode could not run to completion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Applies `f` to every item on up to `workers` threads; results keep input
/// order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                out.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
            });
        }
    });
    out.into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|r| r.expect("every item is processed"))
        .collect()
}

/// Runs the agent on every question. A client failure marks that
/// trajectory aborted and does not stop the batch.
pub fn solve_all(
    items: &[QaItem],
    client: &dyn ChatClient,
    env: &Environment,
    budget: usize,
    system_prompt: &str,
    options: DecodingOptions,
    concurrency: usize,
) -> Vec<SolvedItem> {
    parallel_map(items, concurrency, |item| {
        let start = Instant::now();
        let trajectory = run_episode(client, env, &item.question, budget.max(1), system_prompt, options)
            .expect("budget is at least 1");
        SolvedItem {
            id: item.id.clone(),
            gold: item.answer.clone(),
            difficulty: item.difficulty.clone(),
            wall_time_s: start.elapsed().as_secs_f64(),
            trajectory,
        }
    })
}

pub fn score_solved(solved: &SolvedItem, judge: Option<&dyn Judge>) -> EvalRecord {
    let t = &solved.trajectory;
    let predicted = trajectory_answer(t);
    let f1 = predicted.as_deref().map_or(0.0, |p| token_f1(p, &solved.gold));
    let judge_correct = judge.and_then(|j| match &predicted {
        None => Some(false),
        Some(p) => j.judge(&t.question, p, &solved.gold),
    });
    EvalRecord {
        id: solved.id.clone(),
        gold: solved.gold.clone(),
        predicted,
        f1,
        judge_correct,
        output_tokens: t.output_tokens(),
        tool_calls: t.tool_calls(),
        failed_tool_calls: t.failed_tool_calls(),
        wall_time_s: solved.wall_time_s,
        difficulty: solved.difficulty.clone(),
        budget_exhausted: t.budget_exhausted,
        error: t.abort_reason.clone(),
    }
}

/// Solves and scores every question. Records come back sorted by id.
#[allow(clippy::too_many_arguments)]
pub fn run_benchmark(
    items: &[QaItem],
    client: &dyn ChatClient,
    env: &Environment,
    budget: usize,
    system_prompt: &str,
    options: DecodingOptions,
    concurrency: usize,
    judge: Option<&dyn Judge>,
) -> Vec<EvalRecord> {
    let solved = solve_all(items, client, env, budget, system_prompt, options, concurrency);
    let mut records = parallel_map(&solved, concurrency, |s| score_solved(s, judge));
    records.sort_by(|a, b| a.id.cmp(&b.id));
    records
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean_f1: f64,
    pub judged: usize,
    pub judged_correct: usize,
    /// Correct over judged records; zero when nothing was judged.
    pub judge_accuracy: f64,
    pub mean_output_tokens: f64,
    pub mean_tool_calls: f64,
    pub tool_calls: usize,
    pub failed_tool_calls: usize,
    /// Failed over all tool calls; zero when no call was made.
    pub failure_rate: f64,
    pub unanswered: usize,
    pub budget_exhausted: usize,
}

fn summarize<'a>(records: impl Iterator<Item = &'a EvalRecord>) -> Summary {
    let mut s = Summary::default();
    let (mut f1, mut tokens) = (0.0, 0usize);
    for r in records {
        s.count += 1;
        f1 += r.f1;
        tokens += r.output_tokens;
        s.tool_calls += r.tool_calls;
        s.failed_tool_calls += r.failed_tool_calls;
        if let Some(c) = r.judge_correct {
            s.judged += 1;
            s.judged_correct += c as usize;
        }
        s.unanswered += r.predicted.is_none() as usize;
        s.budget_exhausted += r.budget_exhausted as usize;
    }
    if s.count > 0 {
        let n = s.count as f64;
        s.mean_f1 = f1 / n;
        s.mean_output_tokens = tokens as f64 / n;
        s.mean_tool_calls = s.tool_calls as f64 / n;
    }
    if s.judged > 0 {
        s.judge_accuracy = s.judged_correct as f64 / s.judged as f64;
    }
    if s.tool_calls > 0 {
        s.failure_rate = s.failed_tool_calls as f64 / s.tool_calls as f64;
    }
    s
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: Summary,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub by_difficulty: BTreeMap<String, Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_prompt_sha256: Option<String>,
}

/// Aggregates records, optionally split by difficulty tag. Records without
/// a tag are grouped under `untagged` when splitting.
pub fn aggregate(records: &[EvalRecord], by_difficulty: bool) -> EvalReport {
    let mut report = EvalReport {
        overall: summarize(records.iter()),
        ..Default::default()
    };
    if by_difficulty && records.iter().any(|r| r.difficulty.is_some()) {
        let mut groups: BTreeMap<String, Vec<&EvalRecord>> = BTreeMap::new();
        for r in records {
            groups
                .entry(r.difficulty.clone().unwrap_or_else(|| "untagged".into()))
                .or_default()
                .push(r);
        }
        report.by_difficulty = groups
            .into_iter()
            .map(|(k, v)| (k, summarize(v.into_iter())))
            .collect();
    }
    report
}

pub fn format_percent(rate: f64) -> String {
    format!("{:.1}%", rate * 100.0)
}

impl EvalReport {
    /// Aligned text table, one row per group.
    pub fn render_table(&self) -> String {
        let header = [
            "group", "n", "mean_f1", "judge_acc", "judged", "tokens", "tool_calls", "failed", "fail_rate",
        ];
        let row = |name: &str, s: &Summary| -> Vec<String> {
            vec![
                name.to_string(),
                s.count.to_string(),
                format!("{:.4}", s.mean_f1),
                if s.judged > 0 { format_percent(s.judge_accuracy) } else { "-".into() },
                s.judged.to_string(),
                format!("{:.1}", s.mean_output_tokens),
                s.tool_calls.to_string(),
                s.failed_tool_calls.to_string(),
                format_percent(s.failure_rate),
            ]
        };
        let mut rows = vec![header.iter().map(|h| h.to_string()).collect::<Vec<_>>(), row("all", &self.overall)];
        rows.extend(self.by_difficulty.iter().map(|(k, s)| row(k, s)));
        let widths: Vec<usize> = (0..header.len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &rows {
            let cells: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (cell, w))| if i == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Decides whether a prediction matches the reference. `None` means the
/// verdict could not be obtained.
pub trait Judge: Send + Sync {
    fn judge(&self, question: &str, prediction: &str, gold: &str) -> Option<bool>;

    /// Hash of the prompt behind the verdicts, when there is one.
    fn prompt_hash(&self) -> Option<String> {
        None
    }
}

/// Offline judge: equal after F1 normalization.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatchJudge;

impl Judge for ExactMatchJudge {
    fn judge(&self, _question: &str, prediction: &str, gold: &str) -> Option<bool> {
        Some(token_f1(prediction, gold) == 1.0)
    }
}

pub const JUDGE_PROMPT: &str = include_str!("../resources/judge/judge_v1.txt");
pub const JUDGE_PROMPT_VERSION: &str = "judge_v1";

pub fn judge_prompt_sha256() -> String {
    Sha256::digest(JUDGE_PROMPT.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn fill_judge_prompt(question: &str, prediction: &str, gold: &str) -> String {
    JUDGE_PROMPT
        .replace("{question}", question)
        .replace("{gold}", gold)
        .replace("{prediction}", prediction)
}

/// Reads a CORRECT / INCORRECT verdict. Replies naming both or neither are
/// unparseable.
pub fn parse_verdict(reply: &str) -> Option<bool> {
    let upper = reply.to_uppercase();
    let words: Vec<&str> = upper
        .split(|c: char| !c.is_ascii_alphabetic())
        .filter(|w| !w.is_empty())
        .collect();
    let correct = words.contains(&"CORRECT");
    let incorrect = words.contains(&"INCORRECT");
    match (correct, incorrect) {
        (true, false) => Some(true),
        (false, true) => Some(false),
        _ => None,
    }
}

/// Judge backed by a chat model. One retry on an unparseable verdict or a
/// client failure, then the record is left unjudged.
pub struct LlmJudge<C> {
    pub client: C,
    pub options: DecodingOptions,
}

impl<C: ChatClient> LlmJudge<C> {
    pub fn new(client: C) -> Self {
        Self {
            client,
            options: DecodingOptions {
                temperature: 0.0,
                max_tokens: 16,
            },
        }
    }
}

impl<C: ChatClient> Judge for LlmJudge<C> {
    fn judge(&self, question: &str, prediction: &str, gold: &str) -> Option<bool> {
        let messages = [Message::user(fill_judge_prompt(question, prediction, gold))];
        let request = ChatRequest {
            system: "You are a careful grader.",
            messages: &messages,
            tools: &[],
            options: self.options,
        };
        (0..2).find_map(|_| self.client.complete(&request).ok().and_then(|r| parse_verdict(&r)))
    }

    fn prompt_hash(&self) -> Option<String> {
        Some(judge_prompt_sha256())
    }
}
