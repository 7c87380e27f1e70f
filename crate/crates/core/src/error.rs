use thiserror::Error;

/// Errors produced anywhere in the planning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid food spec: {0}")]
    InvalidSpec(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh is not watertight: {0}")]
    Topology(String),

    #[error("invalid plane: normal has zero length")]
    InvalidPlane,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "no collision-free goal pose found ({attempts} candidates in {batches} batches{})",
        if *.timed_out { ", timed out" } else { "" }
    )]
    InfeasibleGoal {
        attempts: usize,
        batches: usize,
        timed_out: bool,
    },

    #[error("start pose is in collision with the mouth model")]
    InvalidStart,

    #[error("no trajectory reached any goal")]
    NoTrajectory,

    #[error("insufficient calibration data: need at least 3 samples, got {0}")]
    InsufficientData(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
