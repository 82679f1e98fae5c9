use agent_graph::engine::EngineError;
use agent_graph::graph::GraphError;
use agent_graph::oracle::OracleError;
use agent_graph::partition::PartitionError;
use agent_graph::programs::ProgramError;
use agent_graph::rmat::RmatError;

/// Process exit codes. Usage errors reported by the argument parser also
/// exit with [`EXIT_PARAM`].
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_PARAM: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_FORMAT: u8 = 4;
pub const EXIT_CONFIG: u8 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("bad input format: {0}")]
    Format(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Param(_) => EXIT_PARAM,
            CliError::Io(_) => EXIT_IO,
            CliError::Format(_) => EXIT_FORMAT,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Format(e.to_string())
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Io(e) => e.into(),
            other => CliError::Format(other.to_string()),
        }
    }
}

impl From<RmatError> for CliError {
    fn from(e: RmatError) -> Self {
        CliError::Param(e.to_string())
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::Io(e) => e.into(),
            PartitionError::Graph(g) => g.into(),
            PartitionError::ZeroPartitions | PartitionError::ZeroLoaders => CliError::Param(e.to_string()),
            PartitionError::UndefinedMetrics => CliError::Config(e.to_string()),
            other => CliError::Format(other.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Io(e) => e.into(),
            EngineError::Config(_) | EngineError::Compatibility(_) => CliError::Config(e.to_string()),
            EngineError::Checkpoint(_) => CliError::Format(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ProgramError> for CliError {
    fn from(e: ProgramError) -> Self {
        match e {
            ProgramError::Damping(_) => CliError::Param(e.to_string()),
            ProgramError::MissingWeights | ProgramError::UnknownSource(_) => CliError::Config(e.to_string()),
            ProgramError::Engine(e) => e.into(),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Io(e) => e.into(),
            OracleError::Graph(g) => g.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}
