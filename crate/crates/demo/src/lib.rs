//! Browser demo. Renders a synthetic RGB-D view of a floor with one box and
//! a painted rug, then exposes three operations to the page: ground
//! segmentation, walkable-direction search and the fusion overlap gate.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use wayfind_core::direction::{search_direction, DirectionConfig, WalkAction};
use wayfind_core::eval::synth::{AttitudeKey, Primitive, PrimitiveKind, Renderer, SceneSpec};
use wayfind_core::feedback::{turn_text, CANNOT_MOVE_ON, SEARCH_HINT};
use wayfind_core::fusion::{intersection_ratio, remove_ground};
use wayfind_core::geometry::{reconstruct_pointcloud, PointCloud};
use wayfind_core::ground::{detect_ground, GroundConfig, GroundResult, GroundState};
use wayfind_core::mask::{Mask, Region};

pub const WIDTH: usize = 160;
pub const HEIGHT: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewParams {
    pub pitch_deg: f64,
    pub roll_deg: f64,
    pub slope_deg: f64,
    /// Box center, meters right of the camera.
    pub box_x: f64,
    /// Distance to the near face of the box, meters.
    pub box_z: f64,
}

impl Default for ViewParams {
    fn default() -> Self {
        Self {
            pitch_deg: 40.0,
            roll_deg: 0.0,
            slope_deg: 0.0,
            box_x: 0.0,
            box_z: 1.8,
        }
    }
}

pub fn scene(p: &ViewParams) -> SceneSpec {
    SceneSpec {
        width: WIDTH,
        height: HEIGHT,
        ground_height: -1.4,
        ground_slope_deg: p.slope_deg,
        noise_sigma: 0.003,
        attitude: vec![AttitudeKey {
            frame: 0,
            pitch_deg: p.pitch_deg,
            roll_deg: p.roll_deg,
        }],
        objects: vec![
            Primitive {
                kind: PrimitiveKind::Box,
                label: Some("box".into()),
                min: [p.box_x - 0.3, -1.4, p.box_z],
                max: [p.box_x + 0.3, -0.8, p.box_z + 0.5],
                color: Some([90, 120, 200]),
            },
            Primitive {
                kind: PrimitiveKind::Decal,
                label: Some("rug".into()),
                min: [-0.9, -1.4, 1.0],
                max: [-0.4, -1.4, 1.5],
                color: Some([190, 40, 40]),
            },
        ],
        ..Default::default()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundSummary {
    pub class: String,
    pub height: Option<f64>,
    pub slope_deg: Option<f64>,
    pub ground_pixels: usize,
    pub obstacle_pixels: usize,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionSummary {
    pub action: String,
    pub text: String,
    pub sector: Option<usize>,
    pub theta: f64,
    pub nearest: Vec<f64>,
    pub awards: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OverlapSummary {
    pub ratio: f64,
    pub fused: bool,
}

/// One rendered and analyzed view.
pub struct View {
    pub rgb: Vec<u8>,
    pub cloud: PointCloud,
    pub ground: GroundResult,
    pub ground_mask: Mask,
    pub obstacle_mask: Mask,
}

impl View {
    pub fn render(p: &ViewParams, seed: u64) -> Result<Self, String> {
        let spec = scene(p);
        let k = spec.intrinsics();
        let frame = Renderer::new(&spec, seed)
            .map_err(|e| e.to_string())?
            .next()
            .ok_or("scene has no frames")?
            .map_err(|e| e.to_string())?;
        let cloud = reconstruct_pointcloud(&frame.depth, &k, &frame.attitude).map_err(|e| e.to_string())?;
        let cfg = GroundConfig::default();
        let ground = detect_ground(&cloud, &mut GroundState::default(), &cfg, seed);
        let mut ground_mask = Mask::new(WIDTH, HEIGHT);
        for pt in &ground.refined {
            if let Some((u, v)) = pt.pixel {
                ground_mask.set(u as usize, v as usize, true);
            }
        }
        let obstacle_mask = if ground.is_ground() {
            remove_ground(&frame.depth, &ground, &k, &frame.attitude, cfg.sigma).map_err(|e| e.to_string())?
        } else {
            Mask::new(WIDTH, HEIGHT)
        };
        Ok(Self {
            rgb: frame.rgb.data,
            cloud,
            ground,
            ground_mask,
            obstacle_mask,
        })
    }

    pub fn summary(&self) -> GroundSummary {
        GroundSummary {
            class: self.ground.class.as_str().to_string(),
            height: self.ground.height,
            slope_deg: self.ground.plane.map(|p| wayfind_core::ground::ground_pitch_angle(&p)),
            ground_pixels: self.ground_mask.count(),
            obstacle_pixels: self.obstacle_mask.count(),
            reason: self.ground.reason.as_ref().map(|r| r.to_string()),
        }
    }

    /// RGBA image: the RGB view dimmed, ground tinted green, obstacles red.
    pub fn overlay(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(WIDTH * HEIGHT * 4);
        for i in 0..WIDTH * HEIGHT {
            let (u, v) = (i % WIDTH, i / WIDTH);
            let px = &self.rgb[3 * i..3 * i + 3];
            let dim = |c: u8| (c as u16 * 3 / 5) as u8;
            let rgb = if self.ground_mask.get(u, v) {
                [dim(px[0]), dim(px[1]) / 2 + 110, dim(px[2])]
            } else if self.obstacle_mask.get(u, v) {
                [dim(px[0]) / 2 + 120, dim(px[1]), dim(px[2])]
            } else {
                [dim(px[0]), dim(px[1]), dim(px[2])]
            };
            out.extend_from_slice(&[rgb[0], rgb[1], rgb[2], 255]);
        }
        out
    }

    pub fn direction(&self, cfg: &DirectionConfig) -> Result<DirectionSummary, String> {
        cfg.validate().map_err(|(k, m)| format!("{k}: {m}"))?;
        if !self.ground.is_ground() {
            return Ok(DirectionSummary {
                action: "none".into(),
                text: CANNOT_MOVE_ON.into(),
                sector: None,
                theta: cfg.theta,
                nearest: Vec::new(),
                awards: Vec::new(),
            });
        }
        let tz = GroundConfig::default().tz;
        let (scan, awards, d) = search_direction(&self.cloud, &self.ground, cfg, tz).map_err(|e| e.to_string())?;
        let (action, text) = match d.action {
            WalkAction::Blocked => ("blocked", SEARCH_HINT.to_string()),
            WalkAction::Straight => ("straight", "go straight".to_string()),
            WalkAction::Turn(g) => ("turn", turn_text(g)),
        };
        Ok(DirectionSummary {
            action: action.into(),
            text,
            sector: Some(d.sector),
            theta: cfg.theta,
            nearest: scan.nearest,
            awards,
        })
    }
}

/// Overlap gate between two axis-aligned boxes on a 200×200 grid.
pub fn overlap(a: [i64; 4], b: [i64; 4], zeta: f64) -> OverlapSummary {
    let ra = Region::rect(200, 200, a[0], a[1], a[2], a[3]);
    let rb = Region::rect(200, 200, b[0], b[1], b[2], b[3]);
    let (ratio, _) = intersection_ratio(&ra, &rb);
    OverlapSummary {
        ratio,
        fused: ratio >= zeta,
    }
}

fn to_js<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("summary serialization cannot fail")
}

#[wasm_bindgen]
pub struct Demo {
    view: View,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Demo, JsError> {
        let view = View::render(&ViewParams::default(), 1).map_err(|e| JsError::new(&e))?;
        Ok(Demo { view })
    }

    pub fn width(&self) -> usize {
        WIDTH
    }

    pub fn height(&self) -> usize {
        HEIGHT
    }

    /// Re-renders the view and segments the ground. Returns a JSON summary.
    pub fn segment(
        &mut self,
        pitch_deg: f64,
        roll_deg: f64,
        slope_deg: f64,
        box_x: f64,
        box_z: f64,
        seed: u32,
    ) -> Result<String, JsError> {
        let p = ViewParams {
            pitch_deg,
            roll_deg,
            slope_deg,
            box_x,
            box_z,
        };
        self.view = View::render(&p, seed as u64).map_err(|e| JsError::new(&e))?;
        Ok(to_js(&self.view.summary()))
    }

    /// RGBA pixels of the current view with ground and obstacles tinted.
    pub fn overlay(&self) -> Vec<u8> {
        self.view.overlay()
    }

    /// Walkable-direction search on the current view. Returns JSON.
    pub fn direction(&self, w_sw: f64, tau: f64, centered: bool) -> Result<String, JsError> {
        let cfg = DirectionConfig {
            w_sw,
            tau,
            centered_window: centered,
            ..Default::default()
        };
        self.view.direction(&cfg).map(|d| to_js(&d)).map_err(|e| JsError::new(&e))
    }
}

/// Overlap ratio of a detection box `a` and a contour box `b`, each given as
/// `x, y, w, h`, and whether it clears `zeta`. Returns JSON.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn fusion_overlap(ax: i32, ay: i32, aw: i32, ah: i32, bx: i32, by: i32, bw: i32, bh: i32, zeta: f64) -> String {
    let a = [ax, ay, aw, ah].map(i64::from);
    let b = [bx, by, bw, bh].map(i64::from);
    to_js(&overlap(a, b, zeta))
}
