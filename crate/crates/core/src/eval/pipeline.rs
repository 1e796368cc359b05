//! Frame-by-frame driver: ground detection, direction search and feedback on
//! every frame, plus object fusion and speech on triggered frames.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::detector::{load_detections, DetectionMap, DetectionSource};
use crate::direction::{search_direction, WalkAction};
use crate::error::EvalError;
use crate::eval::bench::{BenchReport, FrameOutcome, StageTimes};
use crate::eval::config::Config;
use crate::eval::dataset::{Dataset, DatasetFrame};
use crate::feedback::{describe_objects, navigation_feedback, non_ground_feedback, EventKind, FeedbackEvent, FeedbackState};
use crate::fusion::{
    close_and_extract_contours, fuse_detections, map_detection_to_depth, remove_ground, Detection2D, FusionConfig,
};
use crate::geometry::{reconstruct_pointcloud, DepthFrame};
use crate::ground::{detect_ground, GroundResult, GroundState};

/// Microseconds spent per stage on the frame an event belongs to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageElapsed {
    pub acquisition: u64,
    pub ground: u64,
    pub direction: u64,
    pub detection: u64,
}

/// One line of the run output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub frame: u64,
    pub kind: EventKind,
    pub payload: String,
    pub elapsed_us: StageElapsed,
}

impl EventRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("event serialization cannot fail")
    }
}

/// Where triggered frames get their detections from.
pub enum Detections {
    Replay(DetectionMap),
    Remote(DetectionSource),
}

impl Detections {
    pub fn from_source(source: &DetectionSource, dataset: &Dataset) -> Result<Self, EvalError> {
        source.validate()?;
        match source {
            DetectionSource::Replay(path) => {
                let (w, h) = rgb_dims(dataset);
                Ok(Self::Replay(load_detections(path, w, h)?))
            }
            DetectionSource::Remote { .. } => Ok(Self::Remote(source.clone())),
        }
    }

    /// Replay from the dataset's own detection file, or nothing if absent.
    pub fn dataset_default(dataset: &Dataset) -> Result<Self, EvalError> {
        let path = dataset.detections_path();
        if !path.exists() {
            return Ok(Self::Replay(DetectionMap::new()));
        }
        Self::from_source(&DetectionSource::Replay(path), dataset)
    }

    fn fetch(&self, dataset: &Dataset, frame: &DatasetFrame) -> Result<Vec<Detection2D>, EvalError> {
        match self {
            Self::Replay(map) => Ok(map.get(&frame.frame_index).cloned().unwrap_or_default()),
            Self::Remote(source) => {
                #[cfg(feature = "remote")]
                {
                    let rgb = dataset.load_rgb(frame)?;
                    Ok(crate::detector::query_remote_detector(&rgb, source)?)
                }
                #[cfg(not(feature = "remote"))]
                {
                    let _ = (dataset, source);
                    Err(crate::error::DetectorError::InvalidSource("built without remote support".into()).into())
                }
            }
        }
    }
}

fn rgb_dims(dataset: &Dataset) -> (usize, usize) {
    dataset
        .frames
        .first()
        .and_then(|f| image::image_dimensions(&f.rgb_path).ok())
        .map_or((dataset.width, dataset.height), |(w, h)| (w as usize, h as usize))
}

/// Runs `f`, returning its value and elapsed microseconds (0 when `timing` is off).
pub fn timed<T>(timing: bool, f: impl FnOnce() -> T) -> (T, u64) {
    if !timing {
        return (f(), 0);
    }
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_micros() as u64)
}

/// Everything produced for one frame.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub events: Vec<FeedbackEvent>,
    pub times: StageTimes,
    pub outcome: FrameOutcome,
    pub ground: GroundResult,
}

/// Per-stream state carried between frames.
pub struct FrameProcessor<'a> {
    pub dataset: &'a Dataset,
    pub config: &'a Config,
    pub timing: bool,
    ground_state: GroundState,
    feedback: FeedbackState,
    fusion: FusionConfig,
}

impl<'a> FrameProcessor<'a> {
    pub fn new(dataset: &'a Dataset, config: &'a Config, timing: bool) -> Self {
        let mut fusion = config.fusion;
        fusion.min_contour_area = fusion.min_area_for(dataset.width, dataset.height);
        Self {
            dataset,
            config,
            timing,
            ground_state: GroundState::default(),
            feedback: FeedbackState::default(),
            fusion,
        }
    }

    pub fn feedback_state(&self) -> &FeedbackState {
        &self.feedback
    }

    pub fn process(
        &mut self,
        frame: &DatasetFrame,
        trigger: bool,
        detections: &Detections,
    ) -> Result<FrameOutput, EvalError> {
        let ds = self.dataset;
        let cfg = self.config;
        let k = &ds.intrinsics;
        let (depth, t_acq) = timed(self.timing, || ds.load_depth(frame));
        let depth = depth?;
        let ts = frame.meta.timestamp_us;
        let idx = frame.frame_index;

        let (res, t_ground) = timed(self.timing, || -> Result<_, EvalError> {
            let cloud = reconstruct_pointcloud(&depth, k, &frame.attitude)?;
            let seed = cfg.seed.wrapping_add(idx);
            let ground = detect_ground(&cloud, &mut self.ground_state, &cfg.ground, seed);
            Ok((cloud, ground))
        });
        let (cloud, ground) = res?;

        let mut events = Vec::new();
        let mut outcome = FrameOutcome {
            frame: idx,
            ground: ground.class.as_str().to_string(),
            height: ground.height,
            action: None,
            sector: None,
            objects: None,
        };
        let mut t_dir = 0;
        if ground.is_ground() {
            let (res, t) = timed(self.timing, || {
                search_direction(&cloud, &ground, &cfg.direction, cfg.ground.tz)
                    .map(|(_, _, d)| (d, navigation_feedback(&d, &mut self.feedback, idx, ts)))
            });
            t_dir = t;
            match res {
                Ok((decision, evs)) => {
                    outcome.action = Some(action_name(decision.action));
                    outcome.sector = Some(decision.sector);
                    events.extend(evs);
                }
                Err(e) => warn!("frame {idx}: direction search skipped: {e}"),
            }
        } else {
            events.push(non_ground_feedback(idx, ts));
        }

        let mut t_det = None;
        if trigger {
            if ground.is_ground() {
                let (res, t) = timed(self.timing, || self.detect_objects(frame, &depth, &ground, detections));
                t_det = Some(t);
                match res {
                    Ok(evs) => {
                        outcome.objects = Some(evs.iter().filter(|e| e.payload != crate::feedback::NO_OBJECTS).count());
                        events.extend(evs);
                    }
                    Err(e) => warn!("frame {idx}: object detection failed: {e}"),
                }
            } else {
                warn!("frame {idx}: triggered without ground, object detection skipped");
            }
        }

        Ok(FrameOutput {
            events,
            times: StageTimes {
                acquisition_us: t_acq,
                ground_us: t_ground,
                direction_us: t_dir,
                detection_us: t_det,
            },
            outcome,
            ground,
        })
    }

    fn detect_objects(
        &self,
        frame: &DatasetFrame,
        depth: &DepthFrame,
        ground: &GroundResult,
        detections: &Detections,
    ) -> Result<Vec<FeedbackEvent>, EvalError> {
        let ds = self.dataset;
        let dets = detections.fetch(ds, frame)?;
        let mask = remove_ground(depth, ground, &ds.intrinsics, &frame.attitude, self.config.ground.sigma)?;
        let contours = close_and_extract_contours(&mask, depth, &self.fusion)?;
        let regions: Vec<_> = dets
            .into_iter()
            .filter_map(|d| {
                map_detection_to_depth(&d, &ds.extrinsics, &ds.rgb_intrinsics, &ds.intrinsics, depth)
                    .ok()
                    .map(|r| (d, r))
            })
            .collect();
        let objects = fuse_detections(&regions, &contours, depth, &self.fusion, &ds.intrinsics);
        Ok(describe_objects(&objects, frame.frame_index, frame.meta.timestamp_us))
    }
}

pub fn action_name(action: WalkAction) -> String {
    match action {
        WalkAction::Blocked => "blocked".into(),
        WalkAction::Straight => "straight".into(),
        WalkAction::Turn(g) => format!("turn {g:.1}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub frames: usize,
    pub non_ground_frames: usize,
    pub events: usize,
    pub latency: BenchReport,
}

/// Processes every frame in order and writes one event record per line to
/// `out`. Speech is produced only on frames listed in `triggers`.
pub fn run_pipeline(
    dataset: &Dataset,
    config: &Config,
    detections: &Detections,
    triggers: &BTreeSet<u64>,
    timing: bool,
    out: &mut dyn Write,
) -> Result<RunSummary, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut proc = FrameProcessor::new(dataset, config, timing);
    let mut times = Vec::with_capacity(dataset.len());
    let mut outcomes = Vec::with_capacity(dataset.len());
    let (mut events, mut non_ground) = (0, 0);
    let io = |e| EvalError::io("<output>", e);
    for frame in &dataset.frames {
        let fo = proc.process(frame, triggers.contains(&frame.frame_index), detections)?;
        let elapsed = StageElapsed {
            acquisition: fo.times.acquisition_us,
            ground: fo.times.ground_us,
            direction: fo.times.direction_us,
            detection: fo.times.detection_us.unwrap_or(0),
        };
        for e in &fo.events {
            let rec = EventRecord {
                frame: e.frame_index,
                kind: e.kind,
                payload: e.payload.clone(),
                elapsed_us: elapsed,
            };
            writeln!(out, "{}", rec.to_line()).map_err(io)?;
        }
        events += fo.events.len();
        non_ground += usize::from(!fo.ground.is_ground());
        times.push(fo.times);
        outcomes.push(fo.outcome);
    }
    out.flush().map_err(io)?;
    Ok(RunSummary {
        frames: dataset.len(),
        non_ground_frames: non_ground,
        events,
        latency: BenchReport::from_samples(&times, outcomes, 1, timing),
    })
}

/// Convenience wrapper writing the event stream to a file.
pub fn run_pipeline_to_file(
    dataset: &Dataset,
    config: &Config,
    detections: &Detections,
    triggers: &BTreeSet<u64>,
    timing: bool,
    path: &Path,
) -> Result<RunSummary, EvalError> {
    let file = std::fs::File::create(path).map_err(|e| EvalError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    run_pipeline(dataset, config, detections, triggers, timing, &mut w)
}
