//! 2.5-D object detection: obstacles segmented from the depth image above the
//! ground plane, matched against 2-D category detections by overlap.

pub mod contours;
pub mod morphology;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::FusionError;
use crate::geometry::{attitude_rotation, Attitude, CameraIntrinsics, DepthFrame};
use crate::ground::GroundResult;
use crate::mask::{Mask, Region};

pub use contours::{contour_centroid, extract_contours, min_nonzero_depth, ObstacleContour};

/// Label given to depth contours that no detection claimed.
pub const UNLABELED: &str = "obstacle";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Contour area threshold `S` at the reference resolution, pixels².
    pub min_contour_area: usize,
    /// Overlap ratio needed to fuse a detection with a contour.
    pub zeta: f64,
    /// Closing radius, pixels.
    pub close_kernel: usize,
    /// Half-width of the "front" bucket, degrees.
    pub direction_band: f64,
    /// Resolution `min_contour_area` is expressed at.
    pub reference_width: usize,
    pub reference_height: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            min_contour_area: 300,
            zeta: 0.7,
            close_kernel: 2,
            direction_band: 5.0,
            reference_width: 640,
            reference_height: 480,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.min_contour_area == 0 {
            return Err(("min_contour_area", "must be > 0".into()));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(("zeta", "must lie in (0, 1]".into()));
        }
        if self.close_kernel == 0 {
            return Err(("close_kernel", "must be >= 1".into()));
        }
        if !(self.direction_band >= 0.0) {
            return Err(("direction_band", "must be >= 0".into()));
        }
        if self.reference_width == 0 || self.reference_height == 0 {
            return Err(("reference_width", "reference resolution must be positive".into()));
        }
        Ok(())
    }

    /// `min_contour_area` rescaled to a `width`×`height` frame.
    pub fn min_area_for(&self, width: usize, height: usize) -> usize {
        let ratio = (width * height) as f64 / (self.reference_width * self.reference_height) as f64;
        ((self.min_contour_area as f64 * ratio).round() as usize).max(1)
    }
}

/// Rigid transform from the RGB optical frame to the depth optical frame:
/// `p_depth = r · p_rgb + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsics {
    pub r: Matrix3<f64>,
    pub t: Vector3<f64>,
}

impl Extrinsics {
    pub fn identity() -> Self {
        Self {
            r: Matrix3::identity(),
            t: Vector3::zeros(),
        }
    }

    pub fn new(r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self, FusionError> {
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(err < 1e-6) || !t.iter().all(|v| v.is_finite()) {
            return Err(FusionError::BadExtrinsics);
        }
        Ok(Self { r, t })
    }
}

/// Axis-aligned box in RGB pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl BBox {
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.x as f64 && v >= self.y as f64 && u < (self.x + self.w) as f64 && v < (self.y + self.h) as f64
    }

    /// Clips to `[0, width) × [0, height)`; `None` when nothing is left.
    pub fn clip(&self, width: usize, height: usize) -> Option<BBox> {
        let x0 = self.x.clamp(0, width as i64);
        let y0 = self.y.clamp(0, height as i64);
        let x1 = (self.x + self.w).clamp(0, width as i64);
        let y1 = (self.y + self.h).clamp(0, height as i64);
        (x1 > x0 && y1 > y0).then_some(BBox {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection2D {
    pub label: String,
    pub score: f64,
    pub bbox: BBox,
    pub frame_index: u64,
}

/// Angular position of an obstacle, degrees, plus its distance in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObstacleLocation {
    /// From the x offset; positive to the right of the optical axis.
    pub theta_h: f64,
    /// From the y offset; positive below the optical axis.
    pub theta_v: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DirectionBucket {
    #[serde(rename = "left-front")]
    LeftFront,
    #[serde(rename = "front")]
    Front,
    #[serde(rename = "right-front")]
    RightFront,
}

impl DirectionBucket {
    /// `band` is closed: `±band` itself maps to front.
    pub fn from_angle(theta_h: f64, band: f64) -> Self {
        if theta_h < -band {
            Self::LeftFront
        } else if theta_h > band {
            Self::RightFront
        } else {
            Self::Front
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LeftFront => "left-front",
            Self::Front => "front",
            Self::RightFront => "right-front",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedObject {
    pub label: String,
    pub distance: f64,
    pub location: ObstacleLocation,
    pub direction_bucket: DirectionBucket,
    /// `S_C / max(S_A, S_B)` of the matched pair; `None` for unlabeled contours.
    pub intersection_ratio: Option<f64>,
}

/// Obstacle mask: valid pixels more than `sigma` above the ground plane.
pub fn remove_ground(
    depth: &DepthFrame,
    ground: &GroundResult,
    k: &CameraIntrinsics,
    att: &Attitude,
    sigma: f64,
) -> Result<Mask, FusionError> {
    let plane = ground.plane.ok_or(FusionError::NonGround)?;
    let e = attitude_rotation(att);
    // plane normal pulled back into the camera frame
    let n_cam = e.transpose() * plane.normal();
    let mut mask = Mask::new(depth.width, depth.height);
    for v in 0..depth.height {
        for u in 0..depth.width {
            let z = depth.get(u, v);
            if z <= 0.0 {
                continue;
            }
            let height = z * n_cam.dot(&k.lift(u as f64, v as f64)) + plane.d;
            if height > sigma {
                mask.set(u, v, true);
            }
        }
    }
    Ok(mask)
}

/// Morphological closing followed by contour extraction. The area filter is
/// `cfg.min_contour_area` as given; see [`FusionConfig::min_area_for`].
pub fn close_and_extract_contours(
    mask: &Mask,
    depth: &DepthFrame,
    cfg: &FusionConfig,
) -> Result<Vec<ObstacleContour>, FusionError> {
    if mask.dims() != (depth.width, depth.height) {
        return Err(FusionError::MaskSize {
            got: mask.dims(),
            expected: (depth.width, depth.height),
        });
    }
    let closed = morphology::close(mask, cfg.close_kernel);
    Ok(extract_contours(&closed, depth, cfg.min_contour_area, cfg.close_kernel))
}

/// Angles of the centroid off the optical axis and the distance at it.
pub fn locate_obstacle(
    centroid: (f64, f64),
    region: &Region,
    depth: &DepthFrame,
    k: &CameraIntrinsics,
) -> Result<ObstacleLocation, FusionError> {
    let (x, y) = centroid;
    if !(x >= 0.0 && y >= 0.0 && x < depth.width as f64 && y < depth.height as f64) {
        return Err(FusionError::OutsideFrame { x, y });
    }
    let z = contours::region_depth(centroid, region, depth).ok_or(FusionError::NoValidDepth)?;
    Ok(ObstacleLocation {
        theta_h: ((x - k.u0) / k.fx).atan().to_degrees(),
        theta_v: ((y - k.v0) / k.fy).atan().to_degrees(),
        z,
    })
}

/// Depth pixels whose 3-D point projects inside the detection box in the
/// RGB image.
pub fn map_detection_to_depth(
    det: &Detection2D,
    ext: &Extrinsics,
    k_rgb: &CameraIntrinsics,
    k_depth: &CameraIntrinsics,
    depth: &DepthFrame,
) -> Result<Region, FusionError> {
    let rt = ext.r.transpose();
    let mut pixels = Vec::new();
    for v in 0..depth.height {
        for u in 0..depth.width {
            let z = depth.get(u, v);
            if z <= 0.0 {
                continue;
            }
            let p_depth = Vector3::new(
                (u as f64 - k_depth.u0) / k_depth.fx * z,
                (v as f64 - k_depth.v0) / k_depth.fy * z,
                z,
            );
            let p_rgb = rt * (p_depth - ext.t);
            if p_rgb.z <= 0.0 {
                continue;
            }
            let ur = k_rgb.u0 + k_rgb.fx * p_rgb.x / p_rgb.z;
            let vr = k_rgb.v0 + k_rgb.fy * p_rgb.y / p_rgb.z;
            if det.bbox.contains(ur.round(), vr.round()) {
                pixels.push((v * depth.width + u) as u32);
            }
        }
    }
    if pixels.is_empty() {
        return Err(FusionError::OffFrame);
    }
    Ok(Region {
        width: depth.width,
        height: depth.height,
        pixels,
    })
}

/// `S_C / max(S_A, S_B)` with `C = A ∩ B`.
pub fn intersection_ratio(a: &Region, b: &Region) -> (f64, Region) {
    let c = a.intersection(b);
    let denom = a.area().max(b.area());
    let ratio = if denom == 0 { 0.0 } else { c.area() as f64 / denom as f64 };
    (ratio, c)
}

/// One-to-one matching of mapped detections to depth contours, greedily by
/// descending overlap ratio. Contours nobody claims are reported with the
/// label [`UNLABELED`]; detections without a contour are dropped.
pub fn fuse_detections(
    regions: &[(Detection2D, Region)],
    contours: &[ObstacleContour],
    depth: &DepthFrame,
    cfg: &FusionConfig,
    k: &CameraIntrinsics,
) -> Vec<FusedObject> {
    let mut pairs = Vec::new();
    for (di, (det, a)) in regions.iter().enumerate() {
        if det.frame_index != depth.frame_index {
            continue;
        }
        for (ci, contour) in contours.iter().enumerate() {
            let (ratio, c) = intersection_ratio(a, &contour.region);
            if ratio >= cfg.zeta {
                pairs.push((ratio, di, ci, c));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut det_used = vec![false; regions.len()];
    let mut contour_used = vec![false; contours.len()];
    let mut out = Vec::new();
    for (ratio, di, ci, c) in pairs {
        if det_used[di] || contour_used[ci] {
            continue;
        }
        let Some(distance) = min_nonzero_depth(&c, depth) else {
            continue;
        };
        let Ok(centroid) = contour_centroid(&c) else {
            continue;
        };
        let Ok(mut location) = locate_obstacle(centroid, &c, depth, k) else {
            continue;
        };
        det_used[di] = true;
        contour_used[ci] = true;
        location.z = distance;
        out.push(FusedObject {
            label: regions[di].0.label.clone(),
            distance,
            direction_bucket: DirectionBucket::from_angle(location.theta_h, cfg.direction_band),
            location,
            intersection_ratio: Some(ratio),
        });
    }
    for (ci, contour) in contours.iter().enumerate() {
        if contour_used[ci] {
            continue;
        }
        let Some(distance) = min_nonzero_depth(&contour.region, depth) else {
            continue;
        };
        let Ok(location) = locate_obstacle(contour.centroid, &contour.region, depth, k) else {
            continue;
        };
        out.push(FusedObject {
            label: UNLABELED.to_string(),
            distance,
            direction_bucket: DirectionBucket::from_angle(location.theta_h, cfg.direction_band),
            location,
            intersection_ratio: None,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{reconstruct_pointcloud, Point3, PointCloud};
    use crate::ground::{GroundClass, GroundPlane};

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 50.0, 40.0).unwrap()
    }

    fn floor_ground() -> GroundResult {
        GroundResult {
            class: GroundClass::Horizontal,
            plane: Some(GroundPlane::horizontal(-1.0)),
            refined: PointCloud::new(vec![Point3::new(0.0, -1.0, 1.0)]),
            height: Some(-1.0),
            ty_used: None,
            reason: None,
        }
    }

    fn contour_of(region: Region, depth: &DepthFrame) -> ObstacleContour {
        let centroid = contour_centroid(&region).unwrap();
        ObstacleContour {
            area: region.area(),
            boundary: contours::trace_boundary(&region),
            z_center: contours::region_depth(centroid, &region, depth).unwrap(),
            centroid,
            region,
        }
    }

    fn det(label: &str, frame: u64) -> Detection2D {
        Detection2D {
            label: label.into(),
            score: 0.9,
            bbox: BBox { x: 0, y: 0, w: 1, h: 1 },
            frame_index: frame,
        }
    }

    /// Depth of a horizontal floor 1 m below a level camera.
    fn floor_depth(k: &CameraIntrinsics, w: usize, h: usize) -> DepthFrame {
        let mut d = DepthFrame::zeros(w, h, 0);
        for v in 0..h {
            let dy = (v as f64 - k.v0) / k.fy;
            if dy > 0.0 {
                for u in 0..w {
                    d.values[v * w + u] = 1.0 / dy;
                }
            }
        }
        d
    }

    #[test]
    fn floor_only_gives_empty_mask() {
        let k = k();
        let d = floor_depth(&k, 100, 80);
        let m = remove_ground(&d, &floor_ground(), &k, &Attitude::default(), 0.03).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn holes_and_non_ground() {
        let k = k();
        let d = DepthFrame::zeros(100, 80, 0);
        let m = remove_ground(&d, &floor_ground(), &k, &Attitude::default(), 0.03).unwrap();
        assert!(m.is_empty());
        let ng = GroundResult::non_ground(None, crate::error::GroundError::EmptyCloud);
        assert_eq!(
            remove_ground(&d, &ng, &k, &Attitude::default(), 0.03),
            Err(FusionError::NonGround)
        );
    }

    #[test]
    fn obstacle_pixels_are_disjoint_from_refined_ground() {
        let k = k();
        let mut d = floor_depth(&k, 100, 80);
        for v in 10..50 {
            for u in 30..60 {
                d.values[v * 100 + u] = 1.5;
            }
        }
        let att = Attitude::default();
        let cloud = reconstruct_pointcloud(&d, &k, &att).unwrap();
        let plane = GroundPlane::horizontal(-1.0);
        let mask = remove_ground(&d, &floor_ground(), &k, &att, 0.03).unwrap();
        assert!(!mask.is_empty());
        for p in cloud.iter().filter(|p| plane.distance_to(p) <= 0.03) {
            let (u, v) = p.pixel.unwrap();
            assert!(!mask.get(u as usize, v as usize));
        }
    }

    #[test]
    fn on_axis_and_45_degrees() {
        let k = k();
        let d = DepthFrame::new(100, 80, vec![2.0; 8000], 0).unwrap();
        let r = Region::rect(100, 80, 50, 40, 1, 1);
        let loc = locate_obstacle((50.0, 40.0), &r, &d, &k).unwrap();
        assert_eq!((loc.theta_h, loc.theta_v, loc.z), (0.0, 0.0, 2.0));
        let k2 = CameraIntrinsics::new(40.0, 40.0, 50.0, 40.0).unwrap();
        let loc = locate_obstacle((90.0, 40.0), &r, &d, &k2).unwrap();
        assert!((loc.theta_h - 45.0).abs() < 1e-12);
    }

    #[test]
    fn centroid_hole_falls_back_to_min_depth() {
        let k = k();
        let mut d = DepthFrame::zeros(100, 80, 0);
        let r = Region::rect(100, 80, 40, 30, 21, 21);
        for (x, y) in r.iter_xy() {
            d.values[y * 100 + x] = 2.0;
        }
        d.values[40 * 100 + 50] = 0.0;
        d.values[31 * 100 + 41] = 1.7;
        let loc = locate_obstacle((50.0, 40.0), &r, &d, &k).unwrap();
        assert_eq!(loc.z, 1.7);
        let empty = DepthFrame::zeros(100, 80, 0);
        assert_eq!(
            locate_obstacle((50.0, 40.0), &r, &empty, &k),
            Err(FusionError::NoValidDepth)
        );
    }

    #[test]
    fn identity_mapping_keeps_bbox() {
        let k = k();
        let d = DepthFrame::new(100, 80, vec![2.0; 8000], 0).unwrap();
        let mut dt = det("chair", 0);
        dt.bbox = BBox { x: 10, y: 20, w: 30, h: 15 };
        let a = map_detection_to_depth(&dt, &Extrinsics::identity(), &k, &k, &d).unwrap();
        assert_eq!(a, Region::rect(100, 80, 10, 20, 30, 15));
    }

    #[test]
    fn translation_shifts_bbox() {
        let k = k();
        let z = 2.0;
        let d = DepthFrame::new(100, 80, vec![z; 8000], 0).unwrap();
        let mut dt = det("chair", 0);
        dt.bbox = BBox { x: 10, y: 20, w: 30, h: 15 };
        let ext = Extrinsics::new(Matrix3::identity(), Vector3::new(0.1, 0.0, 0.0)).unwrap();
        // fx·tx/z = 100·0.1/2 = 5 px
        let a = map_detection_to_depth(&dt, &ext, &k, &k, &d).unwrap();
        assert_eq!(a, Region::rect(100, 80, 15, 20, 30, 15));
    }

    #[test]
    fn off_frame_detection_errors() {
        let k = k();
        let d = DepthFrame::new(100, 80, vec![2.0; 8000], 0).unwrap();
        let mut dt = det("chair", 0);
        dt.bbox = BBox { x: 500, y: 500, w: 30, h: 15 };
        assert_eq!(
            map_detection_to_depth(&dt, &Extrinsics::identity(), &k, &k, &d),
            Err(FusionError::OffFrame)
        );
    }

    #[test]
    fn ratio_gate_at_zeta() {
        let k = k();
        let d = DepthFrame::new(100, 80, vec![2.0; 8000], 0).unwrap();
        let cfg = FusionConfig::default();
        // S_A = 100, S_B = 80, S_C = 75
        let a = Region::rect(100, 80, 0, 0, 10, 10);
        let b = Region::from_pixels(
            100,
            80,
            Region::rect(100, 80, 0, 0, 10, 7)
                .pixels
                .into_iter()
                .chain(Region::rect(100, 80, 0, 7, 5, 1).pixels)
                .chain(Region::rect(100, 80, 20, 20, 5, 1).pixels)
                .collect(),
        );
        assert_eq!((a.area(), b.area(), a.intersection(&b).area()), (100, 80, 75));
        let fused = fuse_detections(&[(det("chair", 0), a)], &[contour_of(b, &d)], &d, &cfg, &k);
        assert_eq!(fused.len(), 1);
        assert_eq!(fused[0].label, "chair");
        assert_eq!(fused[0].intersection_ratio, Some(0.75));

        // S_C / max = 0.5
        let a = Region::rect(100, 80, 0, 0, 10, 10);
        let b = Region::rect(100, 80, 5, 0, 10, 10);
        let fused = fuse_detections(&[(det("chair", 0), a)], &[contour_of(b, &d)], &d, &cfg, &k);
        assert_eq!(fused.len(), 1);
        assert_eq!(fused[0].label, UNLABELED);
        assert_eq!(fused[0].intersection_ratio, None);
    }

    #[test]
    fn fused_distance_is_min_nonzero_in_intersection() {
        let k = k();
        let mut d = DepthFrame::new(100, 80, vec![3.0; 8000], 0).unwrap();
        let a = Region::rect(100, 80, 10, 10, 2, 2);
        for (i, z) in [0.0, 1.9, 1.8, 2.4].into_iter().enumerate() {
            let (x, y) = (10 + i % 2, 10 + i / 2);
            d.values[y * 100 + x] = z;
        }
        let fused = fuse_detections(
            &[(det("box", 0), a.clone())],
            &[contour_of(a, &d)],
            &d,
            &FusionConfig::default(),
            &k,
        );
        assert_eq!(fused[0].distance, 1.8);
        assert_eq!(fused[0].location.z, 1.8);
    }

    #[test]
    fn highest_ratio_wins_and_stale_detections_drop() {
        let k = k();
        let d = DepthFrame::new(100, 80, vec![2.0; 8000], 0).unwrap();
        let b = Region::rect(100, 80, 0, 0, 10, 10);
        let near = Region::rect(100, 80, 0, 0, 10, 9);
        let exact = Region::rect(100, 80, 0, 0, 10, 10);
        let dets = [(det("a", 0), near), (det("b", 0), exact.clone()), (det("c", 7), exact)];
        let fused = fuse_detections(&dets, &[contour_of(b, &d)], &d, &FusionConfig::default(), &k);
        assert_eq!(fused.len(), 1);
        assert_eq!(fused[0].label, "b");
    }

    #[test]
    fn buckets_are_closed_at_band() {
        assert_eq!(DirectionBucket::from_angle(-5.0, 5.0), DirectionBucket::Front);
        assert_eq!(DirectionBucket::from_angle(5.0, 5.0), DirectionBucket::Front);
        assert_eq!(DirectionBucket::from_angle(-5.01, 5.0), DirectionBucket::LeftFront);
        assert_eq!(DirectionBucket::from_angle(5.01, 5.0), DirectionBucket::RightFront);
    }

    #[test]
    fn area_scales_with_resolution() {
        let c = FusionConfig::default();
        assert_eq!(c.min_area_for(640, 480), 300);
        assert_eq!(c.min_area_for(320, 240), 75);
    }

    #[test]
    fn closing_then_contours_on_mask() {
        let mut m = Mask::new(20, 12);
        for (x0, y0) in [(4usize, 5usize), (7, 5)] {
            for y in y0..y0 + 2 {
                for x in x0..x0 + 2 {
                    m.set(x, y, true);
                }
            }
        }
        let d = DepthFrame::new(20, 12, vec![1.0; 240], 0).unwrap();
        let cfg = FusionConfig {
            min_contour_area: 1,
            close_kernel: 1,
            ..Default::default()
        };
        let cs = close_and_extract_contours(&m, &d, &cfg).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].area, 10);
        assert!(close_and_extract_contours(&Mask::new(20, 12), &d, &cfg).unwrap().is_empty());
        assert!(close_and_extract_contours(&Mask::new(3, 3), &d, &cfg).is_err());
    }
}
