//! HTTP service and command-line front end for prompt exploration sessions.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod explorer;
pub mod store;

pub use api::{router, AppState};
pub use config::Config;
pub use error::{ApiError, ErrorCode};
pub use explorer::Explorer;
pub use store::SessionStore;
