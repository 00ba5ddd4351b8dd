use alloc::string::String;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate kernel: row {row} has no off-diagonal mass at eps = {epsilon:e}")]
    DegenerateKernel { row: usize, epsilon: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("scale selection failed: {0}")]
    SelectionFailed(String),
}

pub type Result<T> = core::result::Result<T, Error>;

/// Non-fatal conditions recorded alongside a result.
#[derive(Debug, Clone, PartialEq)]
pub enum Flag {
    /// A feature had zero variance; its scale was replaced by 1.
    ZeroVarianceFeature { feature: usize },
    /// A point coincided with its neighbours; the derived quantity was patched.
    DuplicatePoint { index: usize },
    /// A normalized distance hit 1 (tied neighbour distances) and was pulled below it.
    TiedNeighbourDistance { index: usize },
    /// The likelihood maximum sits on the search boundary.
    BoundaryMaximum { value: f64 },
    /// Angle concentration saturated and was capped.
    ConcentrationCapped { index: Option<usize> },
    /// A neighbour angle was undefined (zero-length centred vector) and skipped.
    SkippedAngle { index: usize },
    /// All kernel pairs coincide; the kernel-implied dimension is zero.
    NoDistinctPairs,
    /// Within-class scatter vanished; the scatter ratio is infinite.
    ZeroScatter,
    /// A row lost all of its mass after removing the diagonal and was excluded.
    IsolatedRow { row: usize },
    /// A cross-validation fold lacked a class in its training part and was skipped.
    FoldExcluded { fold: usize },
    /// The alignment source was degenerate; identity rotation used.
    DegenerateAlignment,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flag::ZeroVarianceFeature { feature } => {
                write!(f, "feature {feature} has zero variance; scale set to 1")
            }
            Flag::DuplicatePoint { index } => write!(f, "point {index} duplicates its neighbours"),
            Flag::TiedNeighbourDistance { index } => {
                write!(f, "point {index} has tied nearest and farthest neighbour distances")
            }
            Flag::BoundaryMaximum { value } => write!(f, "likelihood maximum on boundary at {value}"),
            Flag::ConcentrationCapped { index: Some(i) } => {
                write!(f, "von Mises concentration capped at point {i}")
            }
            Flag::ConcentrationCapped { index: None } => write!(f, "von Mises concentration capped"),
            Flag::SkippedAngle { index } => write!(f, "zero-length neighbour vector at point {index}"),
            Flag::NoDistinctPairs => write!(f, "all points coincide"),
            Flag::ZeroScatter => write!(f, "zero within-class scatter"),
            Flag::IsolatedRow { row } => write!(f, "row {row} isolated after diagonal removal"),
            Flag::FoldExcluded { fold } => write!(f, "fold {fold} excluded: class missing from training part"),
            Flag::DegenerateAlignment => write!(f, "degenerate alignment source"),
        }
    }
}
