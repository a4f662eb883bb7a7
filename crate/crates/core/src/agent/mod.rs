//! Episode runtime: tool-call protocol, tools, script interpreter, chat
//! clients and the episode loop.

pub mod client;
pub mod episode;
pub mod prompt;
pub mod protocol;
pub mod script;
pub mod tools;

pub use client::{
    ChatClient, ChatRequest, ClientError, DecodingOptions, FnClient, HttpChatClient, Message, RecordingClient, Role,
    ScriptEnd, ScriptedClient,
};
pub use episode::{run_episode, EpisodeError, StepRole, Trajectory, TrajectoryStep, DEFAULT_TOOL_BUDGET};
pub use prompt::{build_system_prompt, default_code_examples, describe_graph, GraphDescription};
pub use protocol::{parse_tool_call, tool_schemas, ParsedCall, ToolCall, CODE_INTERPRETER, NODE_RETRIEVER};
pub use script::{run_script, ScriptOutput};
pub use tools::{execute_tool, Environment, ToolOutcome, DEFAULT_RESPONSE_CAP};
