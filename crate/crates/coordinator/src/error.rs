use thiserror::Error;

use crate::AgentId;

#[derive(Debug, Error)]
pub enum CoordinatorError {
    #[error("script rejected at enqueue: {0}")]
    ScriptRejected(#[from] tracemap_penny::PennyError),
    #[error("replication count must be >= 1")]
    BadReplication,
    #[error("agent `{0}` must register first")]
    RegistrationRequired(AgentId),
    #[error("authentication failed for agent `{0}`")]
    AuthFailed(AgentId),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("remote error [{code}]: {message}")]
    Remote { code: String, message: String },
}
