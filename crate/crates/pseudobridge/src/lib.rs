//! Std companion of `pseudobridge-core`: corpus files, checkpoints and
//! indexes on disk, the remote chat-completions backend, the concurrent
//! synthesis pipeline, parallel search, the experiment runner, and the CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod pipeline;
pub mod remote;
pub mod search;
pub mod templates;

pub use config::ToolConfig;
pub use error::ToolError;
pub use io::{load_jsonl, save_jsonl};
pub use remote::{Backend, RemoteBackend, RemoteConfig};
