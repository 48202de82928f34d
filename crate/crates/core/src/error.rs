use std::path::Path;

use thiserror::Error;

use crate::instance::Solution;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Neighbor table built for a different number of circles.
    #[error("neighbor table covers {table} circles but the layout has {layout}")]
    NeighborSize { table: usize, layout: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Container adjustment ended with a layout that still violates the
    /// constraints; carries the best point reached.
    #[error("container adjustment did not reach a feasible layout (pair violation {pair:.3e}, container violation {container:.3e})")]
    NotConverged {
        best: Box<Solution>,
        pair: f64,
        container: f64,
    },

    #[error("no feasible solution found before the cutoff")]
    NoFeasibleSolution,
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
