//! Analytic RGB-D scene renderer used as a ground-truth source.
//!
//! Scenes are described in TOML. The camera starts at the scene origin and
//! walks along +Z at `walk_speed` meters per frame; the floor keeps a fixed
//! height below the camera and may be inclined along +Z. Obstacles are
//! axis-aligned primitives in scene coordinates:
//!
//! ```toml
//! width = 320
//! height = 240
//! frames = 60
//! ground_height = -1.5
//!
//! [[attitude]]
//! frame = 0
//! pitch_deg = 30.0
//!
//! [[objects]]
//! kind = "box"
//! label = "chair"
//! min = [-0.3, -1.5, 2.0]
//! max = [0.3, -0.6, 2.5]
//! ```
//!
//! `kind` is one of `box`, `slab` (a box that hangs above the floor), `plane`
//! (a horizontal rectangle, `min[1] == max[1]`) or `decal` (a patch painted on
//! the floor, visible only in RGB).

use std::path::Path;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::detector::DetectionRecord;
use crate::error::EvalError;
use crate::eval::dataset::{
    self, frame_stem, FrameMeta, GroundTruth, DETECTIONS_FILE, EXTRINSICS_FILE, FRAMES_DIR,
    GROUND_TRUTH_FILE, INTRINSICS_FILE, OBJECTS_TRUTH_FILE, TRUTH_DIR,
};
use crate::fusion::Extrinsics;
use crate::geometry::{attitude_rotation, Attitude, CameraIntrinsics, DepthFrame, RgbFrame};
use crate::mask::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Box,
    Slab,
    Plane,
    Decal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    /// Objects without a label are not reported by the synthetic detector.
    #[serde(default)]
    pub label: Option<String>,
    pub min: [f64; 3],
    pub max: [f64; 3],
    #[serde(default)]
    pub color: Option<[u8; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeKey {
    pub frame: usize,
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub roll_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    pub frames: usize,
    pub fps: f64,
    /// Floor height relative to the camera, meters (negative below).
    pub ground_height: f64,
    /// Floor inclination along +Z, degrees.
    pub ground_slope_deg: f64,
    /// Forward camera motion per frame, meters.
    pub walk_speed: f64,
    /// Rays travelling farther than this return no depth, meters.
    pub max_range: f64,
    /// Standard deviation of additive depth noise, meters.
    pub noise_sigma: f64,
    /// Attitude keyframes, linearly interpolated.
    pub attitude: Vec<AttitudeKey>,
    pub objects: Vec<Primitive>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            hfov_deg: 60.0,
            frames: 1,
            fps: 30.0,
            ground_height: -1.5,
            ground_slope_deg: 0.0,
            walk_speed: 0.0,
            max_range: 8.0,
            noise_sigma: 0.0,
            attitude: Vec::new(),
            objects: Vec::new(),
        }
    }
}

impl SceneSpec {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        toml::from_str(text).map_err(|e| EvalError::config("scene", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics::from_fov(self.width, self.height, self.hfov_deg)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |k: &str, m: &str| Err(EvalError::config(format!("scene.{k}"), m));
        if self.width == 0 || self.height == 0 {
            return bad("width", "resolution must be positive");
        }
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return bad("hfov_deg", "must lie in (0, 180)");
        }
        if self.frames == 0 {
            return bad("frames", "must be >= 1");
        }
        if !(self.fps > 0.0) {
            return bad("fps", "must be > 0");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise_sigma", "must be >= 0");
        }
        if !(self.max_range > 0.0 && self.max_range <= 65.0) {
            return bad("max_range", "must lie in (0, 65] meters");
        }
        if !(self.ground_slope_deg.abs() < 80.0) {
            return bad("ground_slope_deg", "must lie in (-80, 80)");
        }
        if !self.walk_speed.is_finite() {
            return bad("walk_speed", "must be finite");
        }
        for (i, o) in self.objects.iter().enumerate() {
            if (0..3).any(|a| !(o.min[a] <= o.max[a])) {
                return Err(EvalError::config(format!("scene.objects[{i}]"), "min must not exceed max"));
            }
            if o.kind == PrimitiveKind::Plane && o.min[1] != o.max[1] {
                return Err(EvalError::config(format!("scene.objects[{i}]"), "a plane needs min[1] == max[1]"));
            }
        }
        if !(self.ground_height < 0.0) {
            return Err(EvalError::Unsatisfiable("the camera must be above the floor".into()));
        }
        for i in 0..self.frames {
            let c = self.camera_position(i);
            for (k, o) in self.objects.iter().enumerate() {
                let solid = matches!(o.kind, PrimitiveKind::Box | PrimitiveKind::Slab);
                if solid && (0..3).all(|a| c[a] > o.min[a] && c[a] < o.max[a]) {
                    return Err(EvalError::Unsatisfiable(format!(
                        "camera is inside object {k} at frame {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn camera_position(&self, frame: usize) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.walk_speed * frame as f64)
    }

    /// Attitude at `frame`, degrees.
    pub fn attitude_deg(&self, frame: usize) -> (f64, f64) {
        let mut keys = self.attitude.clone();
        keys.sort_by_key(|k| k.frame);
        let Some(first) = keys.first() else {
            return (0.0, 0.0);
        };
        if frame <= first.frame {
            return (first.pitch_deg, first.roll_deg);
        }
        for pair in keys.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if frame <= b.frame {
                if a.frame == b.frame {
                    return (b.pitch_deg, b.roll_deg);
                }
                let t = (frame - a.frame) as f64 / (b.frame - a.frame) as f64;
                return (
                    a.pitch_deg + t * (b.pitch_deg - a.pitch_deg),
                    a.roll_deg + t * (b.roll_deg - a.roll_deg),
                );
            }
        }
        let last = keys[keys.len() - 1];
        (last.pitch_deg, last.roll_deg)
    }
}

/// What a pixel's ray hit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hit {
    Nothing,
    Floor,
    Object(usize),
}

/// Per-frame record of a visible labeled object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTruth {
    pub frame: u64,
    pub label: String,
    pub kind: PrimitiveKind,
    /// Visible pixels `[x, y, w, h]`.
    pub bbox: [i64; 4],
    pub pixels: usize,
    /// Smallest noise-free depth over the visible pixels, meters.
    pub distance: f64,
    /// Scene-frame corners relative to the camera.
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct RenderedFrame {
    pub frame_index: u64,
    pub meta: FrameMeta,
    pub attitude: Attitude,
    /// Noise-free, unquantized depth.
    pub exact_depth: DepthFrame,
    /// Depth as stored: noisy and quantized to the raster unit.
    pub depth: DepthFrame,
    pub raw: Vec<u16>,
    pub rgb: RgbFrame,
    pub hits: Vec<Hit>,
    pub ground_truth: Mask,
    pub obstacle_truth: Mask,
    pub objects: Vec<ObjectTruth>,
    pub detections: Vec<DetectionRecord>,
    pub truth: GroundTruth,
}

const PALETTE: [[u8; 3]; 6] = [
    [200, 60, 50],
    [60, 160, 70],
    [50, 90, 200],
    [210, 170, 40],
    [150, 70, 170],
    [40, 170, 170],
];
const FLOOR_RGB: [u8; 3] = [120, 120, 120];

/// Ray parameter where `dir` enters the box `[lo, hi]`, if ahead of the origin.
fn ray_box(dir: &Vector3<f64>, lo: &Vector3<f64>, hi: &Vector3<f64>) -> Option<f64> {
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for a in 0..3 {
        if dir[a].abs() < 1e-15 {
            if 0.0 < lo[a] || 0.0 > hi[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[a];
        let (mut ta, mut tb) = (lo[a] * inv, hi[a] * inv);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return None;
        }
    }
    (t0 > 0.0).then_some(t0)
}

/// Frame-by-frame renderer; frames come out in order and share one noise stream.
pub struct Renderer {
    spec: SceneSpec,
    k: CameraIntrinsics,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    next: usize,
}

impl Renderer {
    pub fn new(spec: &SceneSpec, seed: u64) -> Result<Self, EvalError> {
        spec.validate()?;
        let noise = (spec.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, spec.noise_sigma).expect("sigma checked"));
        Ok(Self {
            spec: spec.clone(),
            k: spec.intrinsics(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise,
            next: 0,
        })
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        self.k
    }

    fn render(&mut self, i: usize) -> Result<RenderedFrame, EvalError> {
        let spec = &self.spec;
        let (w, h) = (spec.width, spec.height);
        let (pitch_deg, roll_deg) = spec.attitude_deg(i);
        let attitude = Attitude::from_degrees(pitch_deg, roll_deg)?;
        let e = attitude_rotation(&attitude);
        let cam = spec.camera_position(i);
        let slope = spec.ground_slope_deg.to_radians().tan();
        let boxes: Vec<(Vector3<f64>, Vector3<f64>)> = spec
            .objects
            .iter()
            .map(|o| {
                (
                    Vector3::from(o.min) - cam,
                    Vector3::from(o.max) - cam,
                )
            })
            .collect();

        let n = w * h;
        let mut exact = vec![0.0; n];
        let mut hits = vec![Hit::Nothing; n];
        let mut rgb = vec![0u8; n * 3];
        for v in 0..h {
            for u in 0..w {
                let dir = e * self.k.lift(u as f64, v as f64);
                let mut best = (f64::INFINITY, Hit::Nothing);
                let denom = dir.y - slope * dir.z;
                if denom < 0.0 {
                    best = (spec.ground_height / denom, Hit::Floor);
                }
                for (j, (o, (lo, hi))) in spec.objects.iter().zip(&boxes).enumerate() {
                    if o.kind == PrimitiveKind::Decal {
                        continue;
                    }
                    if let Some(t) = ray_box(&dir, lo, hi) {
                        if t < best.0 {
                            best = (t, Hit::Object(j));
                        }
                    }
                }
                let (t, mut hit) = best;
                if !(t <= spec.max_range) {
                    hit = Hit::Nothing;
                }
                let idx = v * w + u;
                hits[idx] = hit;
                let color = match hit {
                    Hit::Nothing => [0, 0, 0],
                    Hit::Floor => {
                        exact[idx] = t;
                        let p = dir * t + cam;
                        spec.objects
                            .iter()
                            .enumerate()
                            .filter(|(_, o)| o.kind == PrimitiveKind::Decal)
                            .find(|(_, o)| p.x >= o.min[0] && p.x <= o.max[0] && p.z >= o.min[2] && p.z <= o.max[2])
                            .map_or(FLOOR_RGB, |(j, o)| o.color.unwrap_or(PALETTE[j % PALETTE.len()]))
                    }
                    Hit::Object(j) => {
                        exact[idx] = t;
                        spec.objects[j].color.unwrap_or(PALETTE[j % PALETTE.len()])
                    }
                };
                rgb[idx * 3..idx * 3 + 3].copy_from_slice(&color);
            }
        }

        let scale = self.k.depth_scale;
        let raw: Vec<u16> = exact
            .iter()
            .map(|&z| {
                if z <= 0.0 {
                    return 0;
                }
                let noisy = match &self.noise {
                    Some(d) => z + d.sample(&mut self.rng),
                    None => z,
                };
                let q = (noisy / scale).round();
                if q >= 1.0 && q <= u16::MAX as f64 {
                    q as u16
                } else {
                    0
                }
            })
            .collect();

        let frame_index = i as u64;
        let ground_truth = Mask::from_bits(w, h, hits.iter().map(|&x| x == Hit::Floor).collect()).expect("size");
        let obstacle_truth =
            Mask::from_bits(w, h, hits.iter().map(|&x| matches!(x, Hit::Object(_))).collect()).expect("size");

        let mut objects = Vec::new();
        let mut detections = Vec::new();
        for (j, o) in spec.objects.iter().enumerate() {
            let Some(label) = &o.label else {
                continue;
            };
            let visible = |idx: usize| match (o.kind, hits[idx]) {
                (PrimitiveKind::Decal, Hit::Floor) => {
                    let (u, v) = ((idx % w) as f64, (idx / w) as f64);
                    let dir = e * self.k.lift(u, v);
                    let p = dir * exact[idx] + cam;
                    p.x >= o.min[0] && p.x <= o.max[0] && p.z >= o.min[2] && p.z <= o.max[2]
                }
                (_, Hit::Object(k)) => k == j,
                _ => false,
            };
            let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
            let mut count = 0;
            let mut nearest = f64::INFINITY;
            for (idx, &z) in exact.iter().enumerate() {
                if visible(idx) {
                    let (x, y) = (idx % w, idx / w);
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                    count += 1;
                    nearest = nearest.min(z);
                }
            }
            if count == 0 {
                continue;
            }
            let bbox = [x0 as i64, y0 as i64, (x1 - x0 + 1) as i64, (y1 - y0 + 1) as i64];
            let (lo, hi) = boxes[j];
            objects.push(ObjectTruth {
                frame: frame_index,
                label: label.clone(),
                kind: o.kind,
                bbox,
                pixels: count,
                distance: nearest,
                min: lo.into(),
                max: hi.into(),
            });
            detections.push(DetectionRecord {
                frame: frame_index,
                label: label.clone(),
                score: 1.0,
                bbox,
            });
        }

        let meta = FrameMeta {
            timestamp_us: (i as f64 * 1e6 / spec.fps).round() as u64,
            pitch_deg,
            roll_deg,
        };
        Ok(RenderedFrame {
            frame_index,
            meta,
            attitude,
            exact_depth: DepthFrame::new(w, h, exact, frame_index)?,
            depth: DepthFrame::from_raw(w, h, &raw, scale, frame_index)?,
            raw,
            rgb: RgbFrame::new(w, h, rgb, frame_index)?,
            hits,
            ground_truth,
            obstacle_truth,
            objects,
            detections,
            truth: GroundTruth {
                frame: frame_index,
                height: spec.ground_height,
                slope_deg: spec.ground_slope_deg,
            },
        })
    }
}

impl Iterator for Renderer {
    type Item = Result<RenderedFrame, EvalError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.spec.frames {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(self.render(i))
    }
}

/// Renders every frame of `spec` into `out`, laid out as a dataset directory
/// with truth masks and per-frame object records. Returns the frame count.
pub fn generate_synthetic_scene(spec: &SceneSpec, seed: u64, out: &Path) -> Result<usize, EvalError> {
    let renderer = Renderer::new(spec, seed)?;
    let k = renderer.intrinsics();
    dataset::write_text(&out.join(INTRINSICS_FILE), &dataset::intrinsics_text(&k))?;
    dataset::write_text(&out.join(EXTRINSICS_FILE), &dataset::extrinsics_text(&Extrinsics::identity()))?;
    let frames_dir = out.join(FRAMES_DIR);
    let truth_dir = out.join(TRUTH_DIR);
    let (mut detections, mut objects, mut ground) = (String::new(), String::new(), String::new());
    let mut count = 0;
    for frame in renderer {
        let f = frame?;
        let stem = frame_stem(f.frame_index);
        dataset::write_depth_png(
            &frames_dir.join(format!("{stem}.depth.png")),
            spec.width,
            spec.height,
            f.raw.clone(),
        )?;
        dataset::write_rgb_png(&frames_dir.join(format!("{stem}.rgb.png")), &f.rgb)?;
        dataset::write_text(&frames_dir.join(format!("{stem}.meta")), &f.meta.to_text())?;
        dataset::write_mask_png(&truth_dir.join(format!("{stem}.mask.png")), &f.ground_truth)?;
        for d in &f.detections {
            detections.push_str(&d.to_line());
            detections.push('\n');
        }
        for o in &f.objects {
            objects.push_str(&serde_json::to_string(o).expect("serializable"));
            objects.push('\n');
        }
        ground.push_str(&serde_json::to_string(&f.truth).expect("serializable"));
        ground.push('\n');
        count += 1;
    }
    dataset::write_text(&out.join(DETECTIONS_FILE), &detections)?;
    dataset::write_text(&truth_dir.join(OBJECTS_TRUTH_FILE), &objects)?;
    dataset::write_text(&truth_dir.join(GROUND_TRUTH_FILE), &ground)?;
    Ok(count)
}
