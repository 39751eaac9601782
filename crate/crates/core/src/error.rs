use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("self-loop observation on node {0}")]
    SelfLoop(String),
    #[error("invalid IPv4 address `{0}`")]
    ParseIp(String),
    #[error("invalid prefix `{0}`: {1}")]
    ParsePrefix(String, String),
    #[error("prefix base {base} has bits set below /{len}")]
    UnalignedPrefix { base: String, len: u8 },
    #[error("AS number must be positive")]
    ZeroAsId,
    #[error("unknown capability `{0}`")]
    ParseCapability(String),
    #[error("graph parse error at line {line}: {reason}")]
    ParseGraph { line: usize, reason: String },
}
