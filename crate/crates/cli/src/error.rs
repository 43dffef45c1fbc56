use std::path::Path;

use tgdp_core::audit::AuditError;
use tgdp_core::bounds::BoundsError;
use tgdp_core::{GraphError, LpError, ProtocolError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Solver(String),
    /// Already reported; carries no message.
    #[error("audit failed")]
    AuditFailed,
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Parse(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::AuditFailed => 1,
            CliError::Usage(_) | CliError::Parse(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<LpError> for CliError {
    fn from(e: LpError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::InvalidParameter(_) | ProtocolError::InputLength { .. } | ProtocolError::InputOutOfRange { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::TooLarge { .. } => CliError::Usage(format!("{e}; pass --force to run anyway")),
            BoundsError::InvalidAlpha(_) => CliError::Usage(e.to_string()),
            BoundsError::Graph(g) => g.into(),
            BoundsError::Lp(l) => l.into(),
        }
    }
}

impl From<AuditError> for CliError {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::Protocol(p) => p.into(),
            AuditError::Lp(l) => l.into(),
            AuditError::Graph(g) => g.into(),
            AuditError::Noise(n) => CliError::Usage(n.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}
