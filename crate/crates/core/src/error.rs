//! Error types shared across the crate.

use alloc::string::String;
use core::fmt;

/// Failure in a tensor operation or a backward pass.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorError {
    /// Operand shapes do not satisfy the operation's contract.
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    /// Shape does not match the provided data length.
    BadShape { rows: usize, cols: usize, len: usize },
    /// Kernel longer than the signal, or a zero stride.
    InvalidKernel { signal: usize, kernel: usize, stride: usize },
    /// Every row of a train-mode batch is masked out.
    DegenerateBatch,
    /// `backward` called on a tensor that is not 1x1.
    NonScalarLoss { rows: usize, cols: usize },
    /// A normalizer underflowed; the approximation needs more features.
    NumericalDegeneracy { what: &'static str, value: f64 },
    /// Zero or negative step passed to the finite-difference checker.
    BadStep,
    /// Anything else with context.
    Invalid(String),
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::ShapeMismatch { op, lhs, rhs } => {
                write!(f, "{op}: incompatible shapes {}x{} and {}x{}", lhs.0, lhs.1, rhs.0, rhs.1)
            }
            TensorError::BadShape { rows, cols, len } => {
                write!(f, "shape {rows}x{cols} does not match data length {len}")
            }
            TensorError::InvalidKernel { signal, kernel, stride } => {
                write!(f, "invalid kernel: length {kernel} on signal {signal} with stride {stride}")
            }
            TensorError::DegenerateBatch => write!(f, "batch norm: all rows masked in train mode"),
            TensorError::NonScalarLoss { rows, cols } => {
                write!(f, "backward requires a scalar loss, got {rows}x{cols}")
            }
            TensorError::NumericalDegeneracy { what, value } => {
                write!(f, "numerical degeneracy in {what}: {value:e} (try more random features)")
            }
            TensorError::BadStep => write!(f, "finite-difference step must be positive"),
            TensorError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

/// Violation of the graph data model.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    EmptyGraph { id: usize },
    SelfLoop { id: usize, node: usize },
    DuplicateEdge { id: usize, u: usize, v: usize },
    EdgeOutOfRange { id: usize, u: usize, v: usize, n: usize },
    LabelCountMismatch { id: usize, labels: usize, n: usize },
    UnknownLabel { label: String },
    UnknownGraphId { id: usize },
    DuplicateGraphId { id: usize },
    /// A pair carries either an edit distance or a class label, never both.
    BadSupervision { i: usize, j: usize },
    NoFeasibleEdit,
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::EmptyGraph { id } => write!(f, "graph {id}: must have at least one node"),
            GraphError::SelfLoop { id, node } => write!(f, "graph {id}: self-loop at node {node}"),
            GraphError::DuplicateEdge { id, u, v } => {
                write!(f, "graph {id}: duplicate edge ({u},{v})")
            }
            GraphError::EdgeOutOfRange { id, u, v, n } => {
                write!(f, "graph {id}: edge ({u},{v}) out of range for {n} nodes")
            }
            GraphError::LabelCountMismatch { id, labels, n } => {
                write!(f, "graph {id}: {labels} labels for {n} nodes")
            }
            GraphError::UnknownLabel { label } => write!(f, "unknown node label {label:?}"),
            GraphError::UnknownGraphId { id } => write!(f, "unknown graph id {id}"),
            GraphError::DuplicateGraphId { id } => write!(f, "duplicate graph id {id}"),
            GraphError::BadSupervision { i, j } => {
                write!(f, "pair ({i},{j}): exactly one of ged / class label required")
            }
            GraphError::NoFeasibleEdit => write!(f, "no feasible edit kind for this graph"),
        }
    }
}

/// Failure in a graph edit distance computation.
#[derive(Debug, Clone, PartialEq)]
pub enum GedError {
    /// Combined node count exceeds the exact-search cap.
    SizeLimit { combined: usize, cap: usize },
    NonSquare { rows: usize, cols: usize },
    NoMethods,
}

impl fmt::Display for GedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GedError::SizeLimit { combined, cap } => write!(
                f,
                "exact search limited to {cap} combined nodes, got {combined}; use an approximate method"
            ),
            GedError::NonSquare { rows, cols } => {
                write!(f, "assignment solver needs a square matrix, got {rows}x{cols}")
            }
            GedError::NoMethods => write!(f, "at least one method required"),
        }
    }
}

/// Failure while assembling or running the model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Both similarity heads disabled.
    NoHeads,
    /// Zero random features requested for the linear attention path.
    BadFeatureCount,
    Tensor(TensorError),
    Graph(GraphError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NoHeads => {
                write!(f, "at least one of the similarity heads must stay enabled")
            }
            ModelError::BadFeatureCount => write!(f, "random feature count must be at least 1"),
            ModelError::Tensor(e) => write!(f, "{e}"),
            ModelError::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl From<TensorError> for ModelError {
    fn from(e: TensorError) -> Self {
        ModelError::Tensor(e)
    }
}

impl From<GraphError> for ModelError {
    fn from(e: GraphError) -> Self {
        ModelError::Graph(e)
    }
}

/// Failure in training or evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    /// No pair in the training split carries the configured supervision kind.
    TaskMismatch { task: &'static str },
    BadSplit { train: f64, val: f64, test: f64 },
    BadConfig(String),
    Model(ModelError),
    Ged(GedError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::TaskMismatch { task } => {
                write!(f, "dataset has no usable pairs for task {task}")
            }
            TrainError::BadSplit { train, val, test } => {
                write!(f, "split ratios {train}/{val}/{test} must sum to 1")
            }
            TrainError::BadConfig(msg) => write!(f, "{msg}"),
            TrainError::Model(e) => write!(f, "{e}"),
            TrainError::Ged(e) => write!(f, "{e}"),
        }
    }
}

impl From<ModelError> for TrainError {
    fn from(e: ModelError) -> Self {
        TrainError::Model(e)
    }
}

impl From<TensorError> for TrainError {
    fn from(e: TensorError) -> Self {
        TrainError::Model(ModelError::Tensor(e))
    }
}

impl From<GedError> for TrainError {
    fn from(e: GedError) -> Self {
        TrainError::Ged(e)
    }
}
