//! Event-sourced storage, the HTTP API and the instructor CLI.

pub mod api;
pub mod auth;
pub mod catalog;
pub mod cli;
pub mod config;
pub mod error;
pub mod eventlog;
pub mod server;
pub mod storage;
pub mod store;

pub use api::{router, AppState, Clock, SharedState};
pub use auth::{issue_token, verify_token, AuthError, Claims, Role, SessionToken};
pub use catalog::Catalog;
pub use config::Config;
pub use error::{PlatformError, Result};
pub use eventlog::{parse_log, EventLog, EventRecord, Payload};
pub use storage::{load_store, Storage};
pub use store::Store;
