use thiserror::Error;
use tracemap_core::Ip;

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error("unsatisfiable generation parameters: {0}")]
    Generation(String),
    #[error("topology invariant violated: {0}")]
    Validation(String),
    #[error("unknown source interface {0}")]
    UnknownInterface(Ip),
    #[error("topology file error: {0}")]
    Format(String),
}
