use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PennyError {
    #[error("lex error at {line}:{col}: {msg}")]
    Lex { line: usize, col: usize, msg: String },
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("variable `{0}` used before assignment")]
    UseBeforeAssign(String),
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("command `{0}` already registered")]
    DuplicateCommand(String),
    #[error("command `{name}` expects {expected} arguments, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("command `{name}` requires the {capability} capability")]
    CapabilityDenied { name: String, capability: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("division by zero")]
    DivideByZero,
    #[error("IP arithmetic overflow past 255.255.255.255")]
    IpOverflow,
    #[error("time {0} precedes the simulation epoch")]
    TimeBeforeEpoch(String),
    #[error("invalid calendar date {0}")]
    BadDate(String),
    #[error("step budget exhausted; non-terminating script?")]
    StepLimit,
    #[error("bad regular expression: {0}")]
    BadRegex(String),
}
