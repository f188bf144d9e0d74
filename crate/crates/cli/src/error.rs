use std::io;
use std::path::PathBuf;

use scatlip::bounds::BoundsError;
use scatlip::filters::FilterError;
use scatlip::network::NetworkError;
use scatlip::propagate::PropagateError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", .path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", .path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("{origin}: {source}")]
    Network { origin: String, source: NetworkError },
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 1 usage, 2 parse or validation, 3 unmet precondition.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Read { .. } | CliError::Write { .. } | CliError::Csv(_) => 1,
            CliError::Network { .. } | CliError::Filter(_) => 2,
            CliError::Bounds(b) => match b {
                BoundsError::InvalidConfig(_) => 1,
                BoundsError::NotBandLimited { .. }
                | BoundsError::DeformationTooSteep(_)
                | BoundsError::Propagate(PropagateError::RadiusViolated { .. }) => 3,
                _ => 2,
            },
        }
    }
}
