use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input of length {len} exceeds the {capacity}-slot capacity")]
    Capacity { len: usize, capacity: usize },

    #[error("operands were produced under different parameter sets")]
    Incompatible,

    #[error("depth budget exhausted at `{op}`{}: needs {needed} level(s), {available} left", stage_suffix(.stage))]
    DepthExhausted {
        op: &'static str,
        stage: Option<&'static str>,
        needed: u32,
        available: u32,
    },

    #[error("polynomial fit failed: {0}")]
    Fit(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("index {index} out of range for dimension {dim}")]
    Index { index: usize, dim: usize },
}

fn stage_suffix(stage: &Option<&'static str>) -> String {
    match stage {
        Some(s) => format!(" (stage `{s}`)"),
        None => String::new(),
    }
}

impl Error {
    pub fn is_depth(&self) -> bool {
        matches!(self, Error::DepthExhausted { .. })
    }
}

/// Tags depth-budget failures with the pipeline stage they occurred in.
pub trait StageExt<T> {
    fn stage(self, name: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, name: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            Error::DepthExhausted {
                op,
                stage: None,
                needed,
                available,
            } => Error::DepthExhausted {
                op,
                stage: Some(name),
                needed,
                available,
            },
            other => other,
        })
    }
}
