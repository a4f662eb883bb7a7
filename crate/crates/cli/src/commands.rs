//! Subcommands. Each loads what it needs, does its work, and writes any
//! output file atomically before printing a summary on stdout.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgprobe::agent::{
    build_system_prompt, default_code_examples, ChatClient, Environment, GraphDescription, ScriptEnd,
    ScriptedClient, Trajectory,
};
use kgprobe::config::HarnessConfig;
use kgprobe::eval::{aggregate, parallel_map, score_solved, solve_all, ExactMatchJudge, Judge, LlmJudge, QaItem, SolvedItem};
use kgprobe::gql::Params;
use kgprobe::graph::{load_graph, PropertyGraph};
use kgprobe::jsonl::{read_jsonl, to_jsonl};
use kgprobe::quizzer::{
    dataset_stats, dedup_exact, filter_leakage, generate_dataset, read_dataset, read_id_list, write_dataset,
    DatasetError, ObjectiveWeights, QuizConfig, QuizError, SupervisionTuple,
};
use kgprobe::retriever::{build_index, index_fingerprint, render_hits, retrieve, IndexCache, DEFAULT_TOPK};
use kgprobe::reward::{combined_reward, export_training_batch, RewardBreakdown};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::{write_atomic, write_json_pretty, write_string};
use crate::service::{query_response, ServiceState};

#[derive(Debug, Parser)]
#[command(name = "kgprobe", version, about = "Knowledge-graph agent harness")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every command. Flags override the config file.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Node records, one JSON object per line.
    #[arg(long, global = true)]
    pub nodes: Option<PathBuf>,
    /// Edge records, one JSON object per line.
    #[arg(long, global = true)]
    pub edges: Option<PathBuf>,
    #[arg(long, global = true)]
    pub domain_label: Option<String>,
    /// Cached index written by `ingest`.
    #[arg(long, global = true)]
    pub index: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tool calls allowed per episode.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    #[arg(long, global = true)]
    pub response_cap: Option<usize>,
    #[arg(long, global = true)]
    pub concurrency: Option<usize>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub group_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JudgeKind {
    None,
    Exact,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EndKind {
    Exhaust,
    RepeatLast,
    Cycle,
}

/// Scripted replies in place of a chat endpoint.
#[derive(Debug, Args)]
pub struct ScriptArgs {
    /// JSON array of assistant messages, replayed by turn.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// What the script does after its last message.
    #[arg(long, value_enum, default_value = "exhaust")]
    pub script_end: EndKind,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the graph, build the retrieval index and cache it.
    Ingest {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one query and print the rendered rows.
    Query {
        query: String,
        /// JSON object of query parameters.
        #[arg(long)]
        params: Option<String>,
    },
    /// Print the nearest nodes for each query text.
    Retrieve {
        #[arg(required = true)]
        queries: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_TOPK)]
        topk: usize,
    },
    /// Generate supervision tuples by graph exploration.
    Quiz {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        /// Node ids of the test split; tuples citing them are dropped.
        #[arg(long)]
        test_nodes: Option<PathBuf>,
        /// Drop repeated questions.
        #[arg(long)]
        dedup: bool,
        #[arg(long)]
        max_attempts: Option<usize>,
        /// JSON file with objective sampling weights.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        failures: Option<PathBuf>,
        #[arg(long)]
        trajectories: Option<PathBuf>,
        #[command(flatten)]
        script: ScriptArgs,
    },
    /// Run the agent over a QA file or a dataset.
    Solve {
        #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
        questions: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Episodes per question.
        #[arg(long, default_value_t = 1)]
        rollouts: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        script: ScriptArgs,
    },
    /// Score solved trajectories and print the report table.
    Eval {
        #[arg(long)]
        solved: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        judge: JudgeKind,
        #[arg(long)]
        by_difficulty: bool,
        /// Report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-question records as JSON lines.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Score solved trajectories against their supervision tuples.
    Reward {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        solved: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the training batch: rewards and group advantages per tuple.
    Export {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        solved: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the environment over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

fn load_config(common: &CommonArgs) -> CliResult<HarnessConfig> {
    let mut cfg = match &common.config {
        Some(p) => HarnessConfig::load(p)?,
        None => HarnessConfig::default(),
    };
    if let Some(p) = &common.nodes {
        cfg.nodes = Some(p.clone());
    }
    if let Some(p) = &common.edges {
        cfg.edges = Some(p.clone());
    }
    if let Some(l) = &common.domain_label {
        cfg.domain_label = Some(l.clone());
    }
    cfg.seed = common.seed.unwrap_or(cfg.seed);
    cfg.tool_budget = common.budget.unwrap_or(cfg.tool_budget);
    cfg.response_cap = common.response_cap.unwrap_or(cfg.response_cap);
    cfg.concurrency = common.concurrency.unwrap_or(cfg.concurrency);
    cfg.delta = common.delta.unwrap_or(cfg.delta);
    cfg.group_size = common.group_size.unwrap_or(cfg.group_size);
    cfg.validate()?;
    Ok(cfg)
}

fn load_graph_from(cfg: &HarnessConfig) -> CliResult<PropertyGraph> {
    let (Some(nodes), Some(edges)) = (&cfg.nodes, &cfg.edges) else {
        return Err(usage("graph files not set: pass --nodes and --edges or set them in the config"));
    };
    let graph = load_graph(nodes, edges)?;
    Ok(match &cfg.domain_label {
        Some(l) => graph.with_domain_label(l.clone()),
        None => graph,
    })
}

fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn load_env(cfg: &HarnessConfig, index_path: Option<&Path>) -> CliResult<Environment> {
    let graph = load_graph_from(cfg)?;
    let embedder = cfg.build_embedder()?;
    let index = match index_path {
        Some(p) => {
            let cache: IndexCache = read_json_file(p)?;
            if cache.fingerprint != index_fingerprint(&graph, &cfg.embedder_id()) {
                return Err(data(format!(
                    "{}: stale index, built from a different graph or embedder; rerun ingest",
                    p.display()
                )));
            }
            cache.index
        }
        None => build_index(&graph, embedder.as_ref())?,
    };
    Ok(Environment::new(Arc::new(graph), Arc::new(index), Arc::from(embedder)).with_response_cap(cfg.response_cap))
}

fn chat_client(cfg: &HarnessConfig, script: &ScriptArgs) -> CliResult<Box<dyn ChatClient>> {
    if let Some(p) = &script.script {
        let replies: Vec<String> = read_json_file(p)?;
        let end = match script.script_end {
            EndKind::Exhaust => ScriptEnd::Exhaust,
            EndKind::RepeatLast => ScriptEnd::RepeatLast,
            EndKind::Cycle => ScriptEnd::Cycle,
        };
        return Ok(Box::new(ScriptedClient::new(replies).with_end(end)));
    }
    match cfg.build_chat_client()? {
        Some(c) => Ok(Box::new(c)),
        None => Err(usage("no chat endpoint: set `chat` in the config or pass --script")),
    }
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| data(e.to_string()))?;
    println!("{text}");
    Ok(())
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let cfg = load_config(&cli.common)?;
    let index = cli.common.index.as_deref();
    match cli.command {
        Command::Ingest { out } => ingest(&cfg, &out),
        Command::Query { query, params } => {
            let params: Params = match params {
                Some(text) => serde_json::from_str(&text).map_err(|e| usage(format!("--params: {e}")))?,
                None => Params::new(),
            };
            let graph = load_graph_from(&cfg)?;
            let resp = query_response(&graph, &query, &params, cfg.response_cap);
            if resp.failed {
                return Err(data(resp.result));
            }
            println!("{}", resp.result);
            Ok(())
        }
        Command::Retrieve { queries, topk } => {
            let env = load_env(&cfg, index)?;
            let hits = retrieve(&env.index, &queries, topk, env.embedder.as_ref())?;
            println!("{}", render_hits(topk, &hits));
            Ok(())
        }
        Command::Quiz {
            count,
            out,
            test_nodes,
            dedup,
            max_attempts,
            weights,
            failures,
            trajectories,
            script,
        } => {
            let opts = QuizOpts {
                count,
                test_nodes,
                dedup,
                max_attempts,
                weights,
                failures,
                trajectories,
            };
            quiz(&cfg, index, &out, opts, &script)
        }
        Command::Solve {
            questions,
            dataset,
            rollouts,
            out,
            script,
        } => solve(&cfg, index, questions.as_deref(), dataset.as_deref(), rollouts, &out, &script),
        Command::Eval {
            solved,
            judge,
            by_difficulty,
            out,
            records,
        } => eval(&cfg, &solved, judge, by_difficulty, out.as_deref(), records.as_deref()),
        Command::Reward { dataset, solved, out } => reward(&cfg, &dataset, &solved, out.as_deref()),
        Command::Export { dataset, solved, out } => export(&cfg, &dataset, &solved, &out),
        Command::Serve { addr } => serve(&cfg, index, addr),
    }
}

fn ingest(cfg: &HarnessConfig, out: &Path) -> CliResult<()> {
    let graph = load_graph_from(cfg)?;
    let embedder = cfg.build_embedder()?;
    let index = build_index(&graph, embedder.as_ref())?;
    let cache = IndexCache {
        fingerprint: index_fingerprint(&graph, &cfg.embedder_id()),
        index,
    };
    write_atomic(out, |w| {
        serde_json::to_writer(&mut *w, &cache).map_err(|e| data(e.to_string()))?;
        Ok(w.write_all(b"\n")?)
    })?;
    print_json(&json!({
        "stats": graph.stats(),
        "index_entries": cache.index.len(),
        "dimension": cache.index.dimension,
        "fingerprint": cache.fingerprint,
    }))
}

struct QuizOpts {
    count: usize,
    test_nodes: Option<PathBuf>,
    dedup: bool,
    max_attempts: Option<usize>,
    weights: Option<PathBuf>,
    failures: Option<PathBuf>,
    trajectories: Option<PathBuf>,
}

#[derive(Serialize)]
struct TrajectoryRecord<'a> {
    trajectory_ref: &'a str,
    trajectory: &'a Trajectory,
}

fn quiz(cfg: &HarnessConfig, index: Option<&Path>, out: &Path, opts: QuizOpts, script: &ScriptArgs) -> CliResult<()> {
    let test_nodes: HashSet<String> = match &opts.test_nodes {
        Some(p) => read_id_list(p)?.into_iter().collect(),
        None => HashSet::new(),
    };
    let weights: Option<ObjectiveWeights> = opts.weights.as_deref().map(read_json_file).transpose()?;
    let env = load_env(cfg, index)?;
    let client = chat_client(cfg, script)?;
    let mut qc = QuizConfig::new(opts.count, cfg.seed);
    qc.budget = cfg.tool_budget;
    qc.weights = weights;
    qc.concurrency = cfg.concurrency;
    qc.options = cfg.decoding_options();
    if let Some(n) = opts.max_attempts {
        qc.max_attempts = n;
    }
    let run = generate_dataset(&*client, &env, &qc).map_err(|e| match e {
        // a script running out is a problem with the script file, not the network
        DatasetError::Quiz(QuizError::Aborted(m)) if script.script.is_some() => data(format!("episode aborted: {m}")),
        e => e.into(),
    })?;
    let generated = run.tuples.len();
    let (kept, leaked) = filter_leakage(run.tuples, &test_nodes);
    let before_dedup = kept.len();
    let kept = if opts.dedup { dedup_exact(kept) } else { kept };
    let duplicates = before_dedup - kept.len();

    write_string(out, &write_dataset(&kept))?;
    if let Some(p) = &opts.failures {
        write_string(p, &to_jsonl(&run.failures))?;
    }
    if let Some(p) = &opts.trajectories {
        let records: Vec<_> = run
            .trajectories
            .iter()
            .map(|(r, t)| TrajectoryRecord {
                trajectory_ref: r,
                trajectory: t,
            })
            .collect();
        write_string(p, &to_jsonl(&records))?;
    }
    let mut failure_reasons: BTreeMap<String, usize> = BTreeMap::new();
    for f in &run.failures {
        let key = serde_json::to_value(f.reason)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        *failure_reasons.entry(key).or_default() += 1;
    }
    print_json(&json!({
        "requested": opts.count,
        "episodes": run.draws.len(),
        "generated": generated,
        "leaked": leaked.len(),
        "duplicates": duplicates,
        "written": kept.len(),
        "failures": failure_reasons,
        "stats": dataset_stats(&kept),
    }))
}

fn tuple_item(t: &SupervisionTuple) -> QaItem {
    QaItem {
        id: t.trajectory_ref.clone(),
        question: t.question.clone(),
        answer: t.answer.clone(),
        difficulty: Some(t.objective.difficulty.to_string()),
    }
}

fn solve(
    cfg: &HarnessConfig,
    index: Option<&Path>,
    questions: Option<&Path>,
    dataset: Option<&Path>,
    rollouts: usize,
    out: &Path,
    script: &ScriptArgs,
) -> CliResult<()> {
    if rollouts == 0 {
        return Err(usage("--rollouts must be at least 1"));
    }
    let env = load_env(cfg, index)?;
    let items: Vec<QaItem> = match (questions, dataset) {
        (Some(q), _) => read_jsonl(q)?,
        (None, Some(d)) => read_dataset(d, &env.graph)?.iter().map(tuple_item).collect(),
        (None, None) => return Err(usage("pass --questions or --dataset")),
    };
    let expanded: Vec<QaItem> = items
        .iter()
        .flat_map(|i| std::iter::repeat_n(i.clone(), rollouts))
        .collect();
    let client = chat_client(cfg, script)?;
    let desc = GraphDescription::from_graph(&env.graph);
    let prompt = build_system_prompt(&desc, &default_code_examples(desc.domain_label.as_deref()));
    let solved = solve_all(
        &expanded,
        &*client,
        &env,
        cfg.tool_budget,
        &prompt,
        cfg.decoding_options(),
        cfg.concurrency,
    );
    write_string(out, &to_jsonl(&solved))?;
    let aborted: Vec<&SolvedItem> = solved.iter().filter(|s| s.trajectory.aborted).collect();
    let answered = solved.iter().filter(|s| s.trajectory.final_answer.is_some()).count();
    print_json(&json!({
        "questions": items.len(),
        "episodes": solved.len(),
        "answered": answered,
        "aborted": aborted.len(),
    }))?;
    if !solved.is_empty() && aborted.len() == solved.len() {
        let reason = aborted[0].trajectory.abort_reason.clone().unwrap_or_default();
        let msg = format!("all {} episodes aborted; first: {reason}", solved.len());
        return Err(if script.script.is_some() { data(msg) } else { CliError::Transport(msg) });
    }
    Ok(())
}

fn eval(
    cfg: &HarnessConfig,
    solved_path: &Path,
    judge: JudgeKind,
    by_difficulty: bool,
    out: Option<&Path>,
    records_out: Option<&Path>,
) -> CliResult<()> {
    let solved: Vec<SolvedItem> = read_jsonl(solved_path)?;
    let judge: Option<Box<dyn Judge>> = match judge {
        JudgeKind::None => None,
        JudgeKind::Exact => Some(Box::new(ExactMatchJudge)),
        JudgeKind::Llm => match cfg.build_chat_client()? {
            Some(c) => Some(Box::new(LlmJudge::new(c))),
            None => return Err(usage("--judge llm needs `chat` in the config")),
        },
    };
    let mut records = parallel_map(&solved, cfg.concurrency, |s| score_solved(s, judge.as_deref()));
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let mut report = aggregate(&records, by_difficulty);
    report.judge_prompt_sha256 = judge.as_ref().and_then(|j| j.prompt_hash());
    if let Some(p) = records_out {
        write_string(p, &to_jsonl(&records))?;
    }
    if let Some(p) = out {
        write_json_pretty(p, &report)?;
    }
    print!("{}", report.render_table());
    Ok(())
}

fn group_solved(solved: Vec<SolvedItem>) -> HashMap<String, Vec<Trajectory>> {
    let mut groups: HashMap<String, Vec<Trajectory>> = HashMap::new();
    for s in solved {
        groups.entry(s.id).or_default().push(s.trajectory);
    }
    groups
}

#[derive(Serialize)]
struct RewardRecord<'a> {
    trajectory_ref: &'a str,
    rollout: usize,
    #[serde(flatten)]
    reward: RewardBreakdown,
}

fn reward(cfg: &HarnessConfig, dataset: &Path, solved_path: &Path, out: Option<&Path>) -> CliResult<()> {
    let graph = load_graph_from(cfg)?;
    let tuples = read_dataset(dataset, &graph)?;
    let groups = group_solved(read_jsonl(solved_path)?);
    let mut lines = Vec::new();
    for t in &tuples {
        let Some(trajs) = groups.get(&t.trajectory_ref) else {
            return Err(data(format!("no solved trajectory for {}", t.trajectory_ref)));
        };
        for (i, traj) in trajs.iter().enumerate() {
            let reward = combined_reward(traj, &t.answer, &t.clue_nodes, cfg.delta, &graph)?;
            lines.push(RewardRecord {
                trajectory_ref: &t.trajectory_ref,
                rollout: i,
                reward,
            });
        }
    }
    let text = to_jsonl(&lines);
    match out {
        Some(p) => {
            write_string(p, &text)?;
            let n = lines.len().max(1) as f64;
            print_json(&json!({
                "scored": lines.len(),
                "mean_r_final": lines.iter().map(|l| l.reward.r_final).sum::<f64>() / n,
                "gated": lines.iter().filter(|l| l.reward.gated).count(),
            }))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn export(cfg: &HarnessConfig, dataset: &Path, solved_path: &Path, out: &Path) -> CliResult<()> {
    let graph = load_graph_from(cfg)?;
    let tuples = read_dataset(dataset, &graph)?;
    let groups = group_solved(read_jsonl(solved_path)?);
    let mut header = None;
    write_atomic(out, |mut w| {
        header = Some(export_training_batch(&mut w, &tuples, &groups, cfg.group_size, cfg.delta, &graph)?);
        Ok(())
    })?;
    print_json(&header)
}

fn serve(cfg: &HarnessConfig, index: Option<&Path>, addr: SocketAddr) -> CliResult<()> {
    // Everything is loaded before the socket is bound.
    let env = load_env(cfg, index)?;
    let state = Arc::new(ServiceState { env, delta: cfg.delta });
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Transport(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Transport(format!("bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Transport(e.to_string()))?;
        eprintln!("{}", json!({ "listening": local.to_string() }));
        crate::service::serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Transport(e.to_string()))
    })
}
