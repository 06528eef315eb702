//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("dangling-node: edge `{edge}` references undeclared node `{node}`")]
    DanglingNode { edge: String, node: String },
    #[error("dangling-class: edge `{edge}` references undeclared segment class `{class}`")]
    DanglingClass { edge: String, class: String },
    #[error("edge `{0}` has non-positive length {1} km")]
    NonPositiveLength(String, f64),
    #[error("edge `{0}` endpoints are not distinct")]
    SelfLoop(String),
    #[error("parallel edge between `{0}` and `{1}`; split it with a junction node")]
    ParallelEdge(String, String),
    #[error("grid graph is disconnected (node `{0}` unreachable)")]
    Disconnected(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("fault-at-node: d_f = {d_f} km must lie strictly inside (0, {length}) on edge `{edge}`")]
    FaultAtNode { edge: String, d_f: f64, length: f64 },
    #[error("dc-pole: quantity is singular at s = 0; use the DC-limit convention")]
    DcPole,
    #[error("singular-node: total admittance at the node is zero")]
    SingularNode,
    #[error("path-explosion: enumeration exceeded the expansion cap of {0}")]
    PathExplosion(usize),
    #[error("window-overflow: response aliases past the synthesis window even after zero-padding")]
    WindowOverflow,
    #[error("extrapolation-refused: {axis} = {value} outside table range [{min}, {max}]")]
    ExtrapolationRefused {
        axis: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("insufficient-data: window needs {needed} samples from the detection index, record has {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("gradient-singularity: the fault-resistance gradient has a 1/R_f factor; clamp R_f above R_min")]
    GradientSingularity,
    #[error("config error: {0}")]
    Config(String),
    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
