//! Dataset I/O, synthetic scenes, ground-truth scoring, latency benchmarks
//! and the pipeline driver behind the command-line tool.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod metrics;
pub mod pipeline;
pub mod synth;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::eval::bench::BenchReport;
use crate::eval::config::Config;
use crate::eval::dataset::Dataset;
use crate::eval::metrics::{ground_iou, ground_mask, precision_curve, world_forward_distance, FrameMasks, PrecisionTable};
use crate::geometry::reconstruct_pointcloud;
use crate::ground::{detect_ground, detect_ground_memoryless, GroundState};


/// Ground scores of one frame for both methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEval {
    pub frame: u64,
    pub temporal_iou: f64,
    pub baseline_iou: f64,
    pub temporal_height: Option<f64>,
    pub baseline_height: Option<f64>,
    pub truth_height: Option<f64>,
}

impl FrameEval {
    fn error(h: Option<f64>, truth: Option<f64>) -> Option<f64> {
        Some(match h {
            Some(h) => (h - truth?).abs(),
            None => f64::INFINITY,
        })
    }

    pub fn temporal_height_error(&self) -> Option<f64> {
        Self::error(self.temporal_height, self.truth_height)
    }

    pub fn baseline_height_error(&self) -> Option<f64> {
        Self::error(self.baseline_height, self.truth_height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub frames: Vec<FrameEval>,
    pub precision: PrecisionTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency: Option<BenchReport>,
}

impl EvalReport {
    /// Share of frames with truth where the temporal method's height error is
    /// strictly below the baseline's.
    pub fn temporal_win_rate(&self) -> Option<f64> {
        let pairs: Vec<(f64, f64)> = self
            .frames
            .iter()
            .filter_map(|f| Some((f.temporal_height_error()?, f.baseline_height_error()?)))
            .collect();
        if pairs.is_empty() {
            return None;
        }
        Some(pairs.iter().filter(|(t, b)| t < b).count() as f64 / pairs.len() as f64)
    }
}

/// Runs the temporal detector and the memoryless baseline over `dataset`
/// and scores both against the truth masks.
pub fn evaluate_ground(dataset: &Dataset, config: &Config) -> Result<EvalReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let truth_heights = dataset.load_ground_truth()?;
    let (w, h) = (dataset.width, dataset.height);
    let mut state = GroundState::default();
    let mut frames = Vec::with_capacity(dataset.len());
    let mut masks = Vec::with_capacity(dataset.len());
    for frame in &dataset.frames {
        let truth = dataset.load_truth(frame.frame_index)?;
        let depth = dataset.load_depth(frame)?;
        let cloud = reconstruct_pointcloud(&depth, &dataset.intrinsics, &frame.attitude)?;
        let seed = config.seed.wrapping_add(frame.frame_index);
        let temporal = detect_ground(&cloud, &mut state, &config.ground, seed);
        let baseline = detect_ground_memoryless(&cloud, &config.ground, seed);
        let tm = ground_mask(&temporal, w, h);
        let bm = ground_mask(&baseline, w, h);
        frames.push(FrameEval {
            frame: frame.frame_index,
            temporal_iou: ground_iou(&tm, &truth)?,
            baseline_iou: ground_iou(&bm, &truth)?,
            temporal_height: temporal.height,
            baseline_height: baseline.height,
            truth_height: truth_heights
                .as_ref()
                .and_then(|m| m.get(&frame.frame_index))
                .map(|g| g.height),
        });
        masks.push(FrameMasks {
            frame_index: frame.frame_index,
            distance: world_forward_distance(&depth, &dataset.intrinsics, &frame.attitude),
            truth,
            temporal: tm,
            baseline: bm,
        });
    }
    let precision = precision_curve(&masks, &config.eval.bands, &config.eval.iou_thresholds)?;
    Ok(EvalReport {
        frames,
        precision,
        latency: None,
    })
}
