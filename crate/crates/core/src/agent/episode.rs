//! The multi-turn episode loop and its recorded trajectory.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reward::extract_answer;

use super::client::{ChatClient, ChatRequest, DecodingOptions, Message};
use super::protocol::{malformed_call_response, parse_tool_call, tool_schemas, ParsedCall, ToolCall};
use super::tools::{execute_tool, Environment};

pub const DEFAULT_TOOL_BUDGET: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRole {
    Observation,
    Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub role: StepRole,
    pub text: String,
    #[serde(default)]
    pub tool_call: Option<ToolCall>,
    #[serde(default)]
    pub tool_response: Option<String>,
    #[serde(default)]
    pub token_count: usize,
    #[serde(default)]
    pub failed: bool,
}

impl TrajectoryStep {
    pub fn observation(text: impl Into<String>) -> Self {
        Self {
            role: StepRole::Observation,
            text: text.into(),
            tool_call: None,
            tool_response: None,
            token_count: 0,
            failed: false,
        }
    }

    fn tool_observation(response: String, failed: bool) -> Self {
        Self {
            tool_response: Some(response.clone()),
            failed,
            ..Self::observation(response)
        }
    }

    pub fn action(text: impl Into<String>, tool_call: Option<ToolCall>) -> Self {
        let text = text.into();
        Self {
            role: StepRole::Action,
            token_count: whitespace_tokens(&text),
            text,
            tool_call,
            tool_response: None,
            failed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub question: String,
    pub steps: Vec<TrajectoryStep>,
    pub final_answer: Option<String>,
    pub budget_exhausted: bool,
    #[serde(default)]
    pub aborted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
}

impl Trajectory {
    /// Tool invocations, malformed ones included.
    pub fn tool_calls(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.role == StepRole::Observation && s.tool_response.is_some())
            .count()
    }

    pub fn failed_tool_calls(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.role == StepRole::Observation && s.failed)
            .count()
    }

    pub fn output_tokens(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.role == StepRole::Action)
            .map(|s| s.token_count)
            .sum()
    }

    pub fn last_action(&self) -> Option<&TrajectoryStep> {
        self.steps.iter().rev().find(|s| s.role == StepRole::Action)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EpisodeError {
    #[error("tool budget must be at least 1")]
    ZeroBudget,
}

pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Runs one episode. The loop ends on an answer, on an action with neither
/// answer nor tool call, when `tool_budget` calls have been made, or when
/// the client fails; the last case returns a partial trajectory marked
/// `aborted`.
pub fn run_episode(
    client: &dyn ChatClient,
    env: &Environment,
    question: &str,
    tool_budget: usize,
    system_prompt: &str,
    options: DecodingOptions,
) -> Result<Trajectory, EpisodeError> {
    if tool_budget == 0 {
        return Err(EpisodeError::ZeroBudget);
    }
    let tools = tool_schemas();
    let mut traj = Trajectory {
        question: question.to_string(),
        steps: vec![TrajectoryStep::observation(question)],
        final_answer: None,
        budget_exhausted: false,
        aborted: false,
        abort_reason: None,
    };
    let mut history = vec![Message::user(question)];
    let mut calls = 0;

    loop {
        let request = ChatRequest {
            system: system_prompt,
            messages: &history,
            tools: &tools,
            options,
        };
        let reply = match client.complete(&request) {
            Ok(r) => r,
            Err(e) => {
                traj.aborted = true;
                traj.abort_reason = Some(e.to_string());
                break;
            }
        };
        let parsed = parse_tool_call(&reply);
        let call = match &parsed {
            ParsedCall::Call(c) => Some(c.clone()),
            _ => None,
        };
        traj.steps.push(TrajectoryStep::action(reply.clone(), call.clone()));

        if let Some(answer) = extract_answer(&reply) {
            traj.final_answer = Some(answer);
            break;
        }
        let (response, failed) = match parsed {
            ParsedCall::None => break,
            ParsedCall::Call(c) => {
                let outcome = execute_tool(&c, env);
                (outcome.response, outcome.failed)
            }
            ParsedCall::Malformed(reason) => (malformed_call_response(&reason), true),
        };
        history.push(Message::assistant(reply));
        history.push(Message::tool(response.clone()));
        traj.steps.push(TrajectoryStep::tool_observation(response, failed));
        calls += 1;
        if calls >= tool_budget {
            traj.budget_exhausted = true;
            break;
        }
    }
    Ok(traj)
}
