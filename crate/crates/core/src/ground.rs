//! Time-dependent adaptive ground detection.
//!
//! Per frame: an OTSU split of point heights gives a current-frame threshold,
//! which is blended with the threshold carried over from the previous frame.
//! Points below the blended threshold and inside the trusted range are fitted
//! with RANSAC, the plane is classified by its slope, refined with an
//! unevenness tolerance, and the mean refined height seeds the next frame.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_bigint::BigUint;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GroundError;
use crate::geometry::{Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundConfig {
    /// Weight of the current-frame OTSU threshold.
    pub lambda: f64,
    /// Weight of the previous-frame threshold.
    pub mu: f64,
    /// Max trusted forward range, meters.
    pub tz: f64,
    /// Unevenness tolerance, meters.
    pub sigma: f64,
    /// Walkable slope band, degrees.
    pub slope_min: f64,
    pub slope_max: f64,
    pub ransac_iters: usize,
    pub ransac_inlier_tol: f64,
    pub otsu_bins: usize,
    pub min_ground_points: usize,
    /// Added to the refined height before it is carried to the next frame.
    pub height_margin: f64,
}

impl Default for GroundConfig {
    fn default() -> Self {
        Self {
            lambda: 0.6,
            mu: 0.4,
            tz: 3.0,
            sigma: 0.03,
            slope_min: 3.0,
            slope_max: 15.0,
            ransac_iters: 200,
            ransac_inlier_tol: 0.02,
            otsu_bins: 64,
            min_ground_points: 100,
            height_margin: 0.15,
        }
    }
}

impl GroundConfig {
    /// Returns the offending field name on failure.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.lambda >= 0.0) {
            return Err(("lambda", "must be >= 0".into()));
        }
        if !(self.mu >= 0.0) {
            return Err(("mu", "must be >= 0".into()));
        }
        if (self.lambda + self.mu - 1.0).abs() > 1e-9 {
            return Err(("lambda", "lambda + mu must equal 1".into()));
        }
        if !(self.tz > 0.0) {
            return Err(("tz", "must be > 0".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(("sigma", "must be > 0".into()));
        }
        if !(self.slope_min > 0.0) {
            return Err(("slope_min", "must be > 0".into()));
        }
        if !(self.slope_max > self.slope_min && self.slope_max < 90.0) {
            return Err(("slope_max", "must lie in (slope_min, 90)".into()));
        }
        if self.ransac_iters == 0 {
            return Err(("ransac_iters", "must be >= 1".into()));
        }
        if !(self.ransac_inlier_tol > 0.0) {
            return Err(("ransac_inlier_tol", "must be > 0".into()));
        }
        if self.otsu_bins < 16 {
            return Err(("otsu_bins", "must be >= 16".into()));
        }
        if self.min_ground_points < 3 {
            return Err(("min_ground_points", "must be >= 3".into()));
        }
        if !self.height_margin.is_finite() {
            return Err(("height_margin", "must be finite".into()));
        }
        Ok(())
    }
}

/// Threshold carried between frames of one stream.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GroundState {
    pub ty_pre: Option<f64>,
}

impl GroundState {
    pub fn is_initialized(&self) -> bool {
        self.ty_pre.is_some()
    }
}

/// `a·x + b·y + c·z + d = 0` with a unit, up-facing normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl GroundPlane {
    /// Normalizes `(normal, d)` to unit length with `b >= 0`.
    pub fn from_normal(normal: Vector3<f64>, d: f64) -> Option<Self> {
        let norm = normal.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        let s = if normal.y < 0.0 { -1.0 / norm } else { 1.0 / norm };
        Some(Self {
            a: normal.x * s,
            b: normal.y * s,
            c: normal.z * s,
            d: d * s,
        })
    }

    /// Horizontal plane at height `y`.
    pub fn horizontal(y: f64) -> Self {
        Self {
            a: 0.0,
            b: 1.0,
            c: 0.0,
            d: -y,
        }
    }

    pub fn normal(&self) -> Vector3<f64> {
        Vector3::new(self.a, self.b, self.c)
    }

    /// Signed distance, positive above the plane.
    #[inline]
    pub fn signed_distance(&self, x: f64, y: f64, z: f64) -> f64 {
        self.a * x + self.b * y + self.c * z + self.d
    }

    #[inline]
    pub fn distance_to(&self, p: &Point3) -> f64 {
        self.signed_distance(p.x, p.y, p.z).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundClass {
    Horizontal,
    Upslope,
    Downslope,
    NonGround,
}

impl GroundClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Horizontal => "horizontal",
            Self::Upslope => "upslope",
            Self::Downslope => "downslope",
            Self::NonGround => "non_ground",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundResult {
    pub class: GroundClass,
    /// Absent for `NonGround`.
    pub plane: Option<GroundPlane>,
    /// Refined ground cloud `F`.
    pub refined: PointCloud,
    /// Mean height of `refined`.
    pub height: Option<f64>,
    /// Blended threshold used for candidate selection.
    pub ty_used: Option<f64>,
    /// Why the frame was reported as non-ground.
    pub reason: Option<GroundError>,
}

impl GroundResult {
    pub fn non_ground(ty_used: Option<f64>, reason: GroundError) -> Self {
        Self {
            class: GroundClass::NonGround,
            plane: None,
            refined: PointCloud::default(),
            height: None,
            ty_used,
            reason: Some(reason),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.class != GroundClass::NonGround
    }
}

fn in_range(p: &Point3, tz: f64) -> bool {
    p.z > 0.0 && p.z < tz
}

/// Boundary index `k` in `1..bins` maximizing between-class variance, where
/// the lower class is `hist[..k]`. Ties go to the smallest `k`.
///
/// Scores are compared exactly as rationals `(S0·w1 − S1·w0)² / (w0·w1)`
/// using integer bin moments.
pub fn otsu_split(hist: &[u64]) -> Option<usize> {
    if hist.len() < 2 {
        return None;
    }
    let total: u128 = hist.iter().map(|&h| h as u128).sum();
    let total_moment: u128 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| i as u128 * h as u128)
        .sum();

    let mut best: Option<(usize, BigUint, BigUint)> = None;
    let mut w0: u128 = 0;
    let mut s0: u128 = 0;
    for k in 1..hist.len() {
        w0 += hist[k - 1] as u128;
        s0 += (k as u128 - 1) * hist[k - 1] as u128;
        let w1 = total - w0;
        let s1 = total_moment - s0;
        let (num, den) = if w0 == 0 || w1 == 0 {
            (BigUint::ZERO, BigUint::from(1u8))
        } else {
            let diff = (s0 * w1).abs_diff(s1 * w0);
            let diff = BigUint::from(diff);
            (&diff * &diff, BigUint::from(w0) * BigUint::from(w1))
        };
        let better = match &best {
            None => true,
            Some((_, bn, bd)) => &num * bd > bn * &den,
        };
        if better {
            best = Some((k, num, den));
        }
    }
    best.map(|(k, _, _)| k)
}

/// Histogram of `values` over `[lo, hi]` with `bins` equal-width bins.
pub fn height_histogram(values: impl Iterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let mut hist = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for y in values {
        let b = ((y - lo) / width).floor();
        let b = if b < 0.0 { 0 } else { (b as usize).min(bins - 1) };
        hist[b] += 1;
    }
    hist
}

/// Current-frame ground height threshold `TY_roi` from the y-histogram of
/// the range-limited cloud.
pub fn otsu_height_threshold(cloud: &PointCloud, cfg: &GroundConfig) -> Result<f64, GroundError> {
    let ys: Vec<f64> = cloud
        .iter()
        .filter(|p| in_range(p, cfg.tz))
        .map(|p| p.y)
        .collect();
    if ys.len() < cfg.min_ground_points {
        return Err(GroundError::TooFewPoints {
            got: ys.len(),
            need: cfg.min_ground_points,
        });
    }
    let (lo, hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
            (lo.min(y), hi.max(y))
        });
    if !(hi > lo) {
        return Err(GroundError::DegenerateHistogram);
    }
    let hist = height_histogram(ys.iter().copied(), lo, hi, cfg.otsu_bins);
    let k = otsu_split(&hist).ok_or(GroundError::DegenerateHistogram)?;
    Ok(lo + k as f64 * (hi - lo) / cfg.otsu_bins as f64)
}

/// Blends the current threshold with the carried one; the first frame uses
/// `ty_roi` alone.
pub fn blend_threshold(ty_roi: f64, state: &GroundState, cfg: &GroundConfig) -> f64 {
    match state.ty_pre {
        None => ty_roi,
        Some(pre) => cfg.lambda * ty_roi + cfg.mu * pre,
    }
}

/// Coarse-ground candidates: below `ty` and within `(0, tz)` forward.
pub fn select_candidates(cloud: &PointCloud, ty: f64, cfg: &GroundConfig) -> PointCloud {
    cloud
        .iter()
        .filter(|p| p.y < ty && in_range(p, cfg.tz))
        .copied()
        .collect()
}

/// Total least-squares plane through `points`.
pub fn fit_plane_least_squares(points: &[Vector3<f64>]) -> Option<GroundPlane> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let q = p - centroid;
        cov += q * q.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let normal: Vector3<f64> = eig.eigenvectors.column(imin).into_owned();
    GroundPlane::from_normal(normal, -normal.dot(&centroid))
}

/// Points within `tol` of `plane`. Single precision over split coordinate
/// arrays, with a wrapping count so the loop vectorizes even when overflow
/// checks are on.
fn consensus(xs: &[f32], ys: &[f32], zs: &[f32], plane: &GroundPlane, tol: f64) -> usize {
    let (a, b, c, d) = (plane.a as f32, plane.b as f32, plane.c as f32, plane.d as f32);
    let tol = tol as f32;
    xs.iter()
        .zip(ys)
        .zip(zs)
        .fold(0u32, |n, ((&x, &y), &z)| {
            n.wrapping_add(u32::from((a * x + b * y + c * z + d).abs() <= tol))
        }) as usize
}

/// RANSAC over 3-point hypotheses, then a least-squares refit on the best
/// consensus set. Deterministic for a given `seed`.
pub fn fit_plane_ransac(
    f_init: &PointCloud,
    cfg: &GroundConfig,
    seed: u64,
) -> Result<GroundPlane, GroundError> {
    let need = cfg.min_ground_points.max(3);
    if f_init.len() < need {
        return Err(GroundError::TooFewPoints {
            got: f_init.len(),
            need,
        });
    }
    let pts: Vec<Vector3<f64>> = f_init.iter().map(Point3::vector).collect();
    let xs: Vec<f32> = pts.iter().map(|p| p.x as f32).collect();
    let ys: Vec<f32> = pts.iter().map(|p| p.y as f32).collect();
    let zs: Vec<f32> = pts.iter().map(|p| p.z as f32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pts.len();
    let tol = cfg.ransac_inlier_tol;

    let mut best: Option<(usize, GroundPlane)> = None;
    for _ in 0..cfg.ransac_iters {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let mut k = rng.random_range(0..n - 2);
        for m in [i.min(j), i.max(j)] {
            if k >= m {
                k += 1;
            }
        }
        let (p0, p1, p2) = (pts[i], pts[j], pts[k]);
        let e1 = p1 - p0;
        let e2 = p2 - p0;
        let normal = e1.cross(&e2);
        if normal.norm() <= 1e-9 * e1.norm() * e2.norm() || normal.norm() == 0.0 {
            continue;
        }
        let Some(plane) = GroundPlane::from_normal(normal, -normal.dot(&p0)) else {
            continue;
        };
        let count = consensus(&xs, &ys, &zs, &plane, tol);
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, plane));
        }
    }
    let (_, coarse) = best.ok_or(GroundError::DegenerateSamples)?;
    let inliers: Vec<Vector3<f64>> = pts
        .iter()
        .filter(|p| coarse.signed_distance(p.x, p.y, p.z).abs() <= tol)
        .copied()
        .collect();
    Ok(fit_plane_least_squares(&inliers).unwrap_or(coarse))
}

/// Angle between the plane normal and the world up axis, degrees in `[0, 90]`.
pub fn ground_pitch_angle(plane: &GroundPlane) -> f64 {
    let n = plane.normal();
    let cos = (n.y.abs() / n.norm()).clamp(0.0, 1.0);
    cos.acos().to_degrees()
}

pub fn classify_ground(plane: &GroundPlane, cfg: &GroundConfig) -> GroundClass {
    let phi = ground_pitch_angle(plane);
    if phi < cfg.slope_min {
        GroundClass::Horizontal
    } else if phi <= cfg.slope_max {
        // grade dy/dz along the walking direction
        if plane.b > 0.0 && -plane.c / plane.b > 0.0 {
            GroundClass::Upslope
        } else {
            GroundClass::Downslope
        }
    } else {
        GroundClass::NonGround
    }
}

/// Points of `f_init` within `sigma` of the coarse plane.
pub fn refine_ground(f_init: &PointCloud, plane: &GroundPlane, cfg: &GroundConfig) -> PointCloud {
    f_init
        .iter()
        .filter(|p| plane.distance_to(p) <= cfg.sigma)
        .copied()
        .collect()
}

/// Mean height of the refined ground.
pub fn ground_height(f: &PointCloud) -> Result<f64, GroundError> {
    if f.is_empty() {
        return Err(GroundError::EmptyCloud);
    }
    Ok(f.iter().map(|p| p.y).sum::<f64>() / f.len() as f64)
}

#[allow(clippy::result_large_err)]
fn finish(
    f_init: &PointCloud,
    cfg: &GroundConfig,
    seed: u64,
    ty: Option<f64>,
) -> Result<GroundResult, GroundResult> {
    let fail = |e| GroundResult::non_ground(ty, e);
    let plane = fit_plane_ransac(f_init, cfg, seed).map_err(fail)?;
    let class = classify_ground(&plane, cfg);
    if class == GroundClass::NonGround {
        return Err(fail(GroundError::TooSteep(ground_pitch_angle(&plane))));
    }
    let refined = refine_ground(f_init, &plane, cfg);
    if refined.is_empty() {
        return Err(fail(GroundError::EmptyRefinement));
    }
    let h = ground_height(&refined).map_err(fail)?;
    Ok(GroundResult {
        class,
        plane: Some(plane),
        refined,
        height: Some(h),
        ty_used: ty,
        reason: None,
    })
}

/// Full per-frame ground detection. On success the carried threshold becomes
/// `H + height_margin`; on failure `state` is left untouched.
pub fn detect_ground(
    cloud: &PointCloud,
    state: &mut GroundState,
    cfg: &GroundConfig,
    seed: u64,
) -> GroundResult {
    let ty_roi = match otsu_height_threshold(cloud, cfg) {
        Ok(t) => t,
        Err(e) => return GroundResult::non_ground(None, e),
    };
    let ty = blend_threshold(ty_roi, state, cfg);
    let f_init = select_candidates(cloud, ty, cfg);
    match finish(&f_init, cfg, seed, Some(ty)) {
        Ok(res) => {
            state.ty_pre = res.height.map(|h| h + cfg.height_margin);
            res
        }
        Err(res) => res,
    }
}

/// Memoryless reference: RANSAC over the whole range-limited cloud with no
/// height threshold and no state.
pub fn detect_ground_memoryless(cloud: &PointCloud, cfg: &GroundConfig, seed: u64) -> GroundResult {
    let candidates: PointCloud = cloud.iter().filter(|p| in_range(p, cfg.tz)).copied().collect();
    finish(&candidates, cfg, seed, None).unwrap_or_else(|r| r)
}
