use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("attitude out of range (pitch={pitch}, roll={roll})")]
    InvalidAttitude { pitch: f64, roll: f64 },
    #[error("raster {width}x{height} does not match {len} samples")]
    RasterSize {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("invalid depth sample {0}")]
    InvalidDepth(f64),
    #[error("principal point ({u0}, {v0}) outside {width}x{height} frame")]
    DimensionMismatch {
        width: usize,
        height: usize,
        u0: f64,
        v0: f64,
    },
    #[error("point is behind the camera (z_c={z})")]
    BehindCamera { z: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundError {
    #[error("too few points: {got} < {need}")]
    TooFewPoints { got: usize, need: usize },
    #[error("degenerate height histogram (all heights equal)")]
    DegenerateHistogram,
    #[error("every RANSAC hypothesis was degenerate")]
    DegenerateSamples,
    #[error("refinement left no ground points")]
    EmptyRefinement,
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("slope {0:.1} deg exceeds the walkable band")]
    TooSteep(f64),
    #[error("invalid ground config: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirectionError {
    #[error("no ground available for direction search")]
    EmptyGround,
    #[error("invalid direction config: {0}")]
    Config(String),
    #[error("award vector has {got} entries, expected {expected}")]
    AwardLength { got: usize, expected: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("ground removal needs a detected ground plane")]
    NonGround,
    #[error("region has zero area")]
    ZeroArea,
    #[error("region has no valid depth")]
    NoValidDepth,
    #[error("centroid ({x}, {y}) outside the frame")]
    OutsideFrame { x: f64, y: f64 },
    #[error("mapped detection falls entirely outside the depth frame")]
    OffFrame,
    #[error("mask is {got:?}, expected {expected:?}")]
    MaskSize {
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("invalid fusion config: {0}")]
    Config(String),
    #[error("extrinsic rotation is not orthonormal")]
    BadExtrinsics,
}

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("detector timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed detector response: {0}")]
    MalformedResponse(String),
    #[error("detection source is not a remote endpoint")]
    NotRemote,
    #[error("invalid detection source: {0}")]
    InvalidSource(String),
    #[error("image encoding failed: {0}")]
    Encode(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("mask dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("missing truth mask for frame {0}")]
    MissingTruth(u64),
    #[error("unsatisfiable scene: {0}")]
    Unsatisfiable(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

impl EvalError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for failures caused by bad user input (exit code 1).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Self::Config { .. }
                | Self::Parse { .. }
                | Self::Unsatisfiable(_)
                | Self::Detector(DetectorError::InvalidSource(_))
        )
    }
}
