//! Per-stage latency statistics laid out like the reference timing table.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::eval::config::Config;
use crate::eval::dataset::Dataset;
use crate::eval::pipeline::{Detections, FrameProcessor};

pub const ROW_ACQUISITION: &str = "Image acquisition";
pub const ROW_GROUND: &str = "Ground detection";
pub const ROW_DIRECTION: &str = "Optimal walkable direction search";
pub const ROW_DETECTION: &str = "2.5-D object detection";
pub const ROW_TOTAL: &str = "Total (except 2.5-D object detection)";

/// Reference per-frame latencies measured on a phone, milliseconds.
pub const REFERENCE_MS: [(&str, f64); 5] = [
    (ROW_ACQUISITION, 0.66),
    (ROW_GROUND, 13.53),
    (ROW_DIRECTION, 7.19),
    (ROW_DETECTION, 114.13),
    (ROW_TOTAL, 22.17),
];

pub const TOTAL_FOOTNOTE: &str =
    "reference total is the table value 22.17 ms; the accompanying text quotes about 27.17 ms";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimes {
    pub acquisition_us: u64,
    pub ground_us: u64,
    pub direction_us: u64,
    /// Present only on frames where fusion ran.
    pub detection_us: Option<u64>,
}

impl StageTimes {
    pub fn total_us(&self) -> u64 {
        self.acquisition_us + self.ground_us + self.direction_us
    }
}

/// Non-timing result of one frame, kept so repeated runs can be compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutcome {
    pub frame: u64,
    pub ground: String,
    pub height: Option<f64>,
    pub action: Option<String>,
    pub sector: Option<usize>,
    pub objects: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: String,
    pub reference_ms: f64,
    pub samples: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
}

impl StageStats {
    fn from_us(stage: &str, reference_ms: f64, us: &[u64]) -> Self {
        let mut ms: Vec<f64> = us.iter().map(|&u| u as f64 / 1000.0).collect();
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let (mean, median, p95) = if n == 0 {
            (0.0, 0.0, 0.0)
        } else {
            let median = if n % 2 == 1 {
                ms[n / 2]
            } else {
                (ms[n / 2 - 1] + ms[n / 2]) / 2.0
            };
            // nearest rank
            let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
            (ms.iter().sum::<f64>() / n as f64, median, ms[rank - 1])
        };
        Self {
            stage: stage.to_string(),
            reference_ms,
            samples: n,
            mean_ms: mean,
            median_ms: median,
            p95_ms: p95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub frames: usize,
    pub repetitions: usize,
    pub timing: bool,
    pub rows: Vec<StageStats>,
    pub footnotes: Vec<String>,
    /// Outcomes of the first repetition.
    pub outcomes: Vec<FrameOutcome>,
}

impl BenchReport {
    pub fn from_samples(times: &[StageTimes], outcomes: Vec<FrameOutcome>, repetitions: usize, timing: bool) -> Self {
        let col = |f: fn(&StageTimes) -> Option<u64>| -> Vec<u64> { times.iter().filter_map(f).collect() };
        let series = [
            col(|t| Some(t.acquisition_us)),
            col(|t| Some(t.ground_us)),
            col(|t| Some(t.direction_us)),
            col(|t| t.detection_us),
            col(|t| Some(t.total_us())),
        ];
        let rows = REFERENCE_MS
            .iter()
            .zip(series.iter())
            .map(|(&(name, reference), us)| StageStats::from_us(name, reference, us))
            .collect();
        let mut footnotes = vec![TOTAL_FOOTNOTE.to_string()];
        if !timing {
            footnotes.push("timing disabled; all latencies read 0".to_string());
        }
        Self {
            frames: outcomes.len(),
            repetitions,
            timing,
            rows,
            footnotes,
            outcomes,
        }
    }

    pub fn row(&self, stage: &str) -> Option<&StageStats> {
        self.rows.iter().find(|r| r.stage == stage)
    }

    /// Mean of ground detection plus direction search per frame, milliseconds.
    pub fn ground_and_direction_mean_ms(&self) -> f64 {
        self.row(ROW_GROUND).map_or(0.0, |r| r.mean_ms) + self.row(ROW_DIRECTION).map_or(0.0, |r| r.mean_ms)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} frames x {} repetition(s)",
            self.frames, self.repetitions
        )?;
        writeln!(
            f,
            "{:<40} {:>8} {:>10} {:>10} {:>10} {:>14}",
            "Stage", "samples", "mean ms", "median ms", "p95 ms", "reference ms"
        )?;
        for r in &self.rows {
            let mark = if r.stage == ROW_TOTAL { " *" } else { "" };
            writeln!(
                f,
                "{:<40} {:>8} {:>10.3} {:>10.3} {:>10.3} {:>12.2}{mark}",
                r.stage, r.samples, r.mean_ms, r.median_ms, r.p95_ms, r.reference_ms
            )?;
        }
        for (i, note) in self.footnotes.iter().enumerate() {
            let tag = if i == 0 { "*" } else { "-" };
            writeln!(f, "{tag} {note}")?;
        }
        Ok(())
    }
}

/// Runs the full frame sequence `repetitions` times from a fresh state. The
/// detection stage runs on `triggers`.
pub fn benchmark(
    dataset: &Dataset,
    config: &Config,
    detections: &Detections,
    triggers: &BTreeSet<u64>,
    repetitions: usize,
    timing: bool,
) -> Result<BenchReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let reps = repetitions.max(1);
    let mut times = Vec::with_capacity(dataset.len() * reps);
    let mut outcomes = Vec::new();
    for rep in 0..reps {
        let mut proc = FrameProcessor::new(dataset, config, timing);
        for frame in &dataset.frames {
            let out = proc.process(frame, triggers.contains(&frame.frame_index), detections)?;
            times.push(out.times);
            if rep == 0 {
                outcomes.push(out.outcome);
            }
        }
    }
    Ok(BenchReport::from_samples(&times, outcomes, reps, timing))
}
