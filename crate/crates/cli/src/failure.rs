//! Error classification into the documented exit codes.

use std::fmt;
use std::process::ExitCode;

use miemph::dsp::DspError;
use miemph::eeg::DataError;
use miemph::eval::EvalError;
use miemph::net::NetError;
use miemph::pipeline::PipelineError;
use miemph::synth::SynthError;

/// Exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    /// Reading or writing a file failed.
    Io = 1,
    /// Bad arguments, config file or manifest.
    Config = 2,
    /// Invalid input data, including train/test leakage.
    Data = 3,
    /// Training produced a non-finite loss or parameters.
    Diverged = 4,
}

#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(exit: Exit, error: impl Into<anyhow::Error>) -> Self {
        Self { exit, error: error.into() }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        Self::new(Exit::Config, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self::new(Exit::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn context(mut self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        self.error = self.error.context(ctx);
        self
    }

    pub fn code(&self) -> ExitCode {
        ExitCode::from(self.exit as u8)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(Exit::Io, e)
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        let exit = if matches!(e, DataError::Io(_)) { Exit::Io } else { Exit::Data };
        Self::new(exit, e)
    }
}

impl From<NetError> for Failure {
    fn from(e: NetError) -> Self {
        let exit = match e {
            NetError::Diverged { .. } => Exit::Diverged,
            NetError::InvalidConfig(_) => Exit::Config,
            _ => Exit::Data,
        };
        Self::new(exit, e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Net(n) => n.into(),
            EvalError::InvalidConfig(_) => Self::new(Exit::Config, e),
            e => Self::new(Exit::Data, e),
        }
    }
}

impl From<DspError> for Failure {
    fn from(e: DspError) -> Self {
        match e {
            DspError::InvalidFilter(_) | DspError::InvalidBand { .. } | DspError::InvalidWindow(_) => {
                Self::new(Exit::Config, e)
            }
            e => Self::new(Exit::Data, e),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Data(d) => d.into(),
            e => Self::new(Exit::Data, e),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Data(d) => d.into(),
            e => Self::new(Exit::Config, e),
        }
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;
