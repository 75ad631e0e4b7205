use std::path::PathBuf;

use thiserror::Error;
use twinphoton::config::ConfigError;
use twinphoton::efficiency::EfficiencyError;
use twinphoton::hom::HomError;
use twinphoton::materials::MaterialError;
use twinphoton::modes::ModeError;
use twinphoton::phasematch::PhaseMatchError;
use twinphoton::spectra::SpectrumError;
use twinphoton::stack::StackError;

/// Exit status for bad configuration, arguments or input files.
pub const EXIT_INPUT: i32 = 2;
/// Exit status for solver and fit failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

fn input(e: impl ToString) -> CliError {
    CliError::Input(e.to_string())
}

fn numerical(e: impl ToString) -> CliError {
    CliError::Numerical(e.to_string())
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Stack(s) => s.into(),
            other => input(other),
        }
    }
}

impl From<MaterialError> for CliError {
    fn from(e: MaterialError) -> Self {
        input(e)
    }
}

impl From<StackError> for CliError {
    fn from(e: StackError) -> Self {
        match e {
            StackError::Material(_)
            | StackError::InvalidDesignParams(_)
            | StackError::InvalidStack(_)
            | StackError::MissingRegion(_) => input(e),
            _ => numerical(e),
        }
    }
}

impl From<ModeError> for CliError {
    fn from(e: ModeError) -> Self {
        match e {
            ModeError::Material(_) | ModeError::NonGuidingStack => input(e),
            _ => numerical(e),
        }
    }
}

impl From<PhaseMatchError> for CliError {
    fn from(e: PhaseMatchError) -> Self {
        match e {
            PhaseMatchError::Mode(m) => m.into(),
            PhaseMatchError::InvalidAngle(_) | PhaseMatchError::InvalidWavelength(_) => input(e),
            _ => numerical(e),
        }
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::PhaseMatch(p) => p.into(),
            SpectrumError::InvalidGrid(_) | SpectrumError::InvalidParameter(_) => input(e),
            _ => numerical(e),
        }
    }
}

impl From<HomError> for CliError {
    fn from(e: HomError) -> Self {
        match e {
            HomError::InvalidModel(_) | HomError::InvalidScan(_) => input(e),
            _ => numerical(e),
        }
    }
}

impl From<EfficiencyError> for CliError {
    fn from(e: EfficiencyError) -> Self {
        match e {
            EfficiencyError::DivisionDomain => numerical(e),
            _ => input(e),
        }
    }
}
