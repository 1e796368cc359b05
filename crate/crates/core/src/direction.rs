//! Polar-sector walkable direction search.
//!
//! Points above the detected ground and below head height are projected onto
//! the horizontal plane and binned into narrow angular sectors. Each sector is
//! scored by how little the user has to turn plus how far they can walk through
//! a corridor of width `w_sw` starting at that sector.

use serde::{Deserialize, Serialize};

use crate::error::DirectionError;
use crate::geometry::PointCloud;
use crate::ground::GroundResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectionConfig {
    /// Sector width, degrees.
    pub theta: f64,
    /// Total sector count `N` (even).
    pub n_sectors: usize,
    /// Passable width, meters.
    pub w_sw: f64,
    /// Overhead clearance above camera height, meters.
    pub epsilon: f64,
    /// Weight of the turn-angle term (per degree).
    pub award_angle_weight: f64,
    /// Weight of the traversable-distance term (per meter).
    pub award_dist_weight: f64,
    /// Blocked-distance threshold, meters.
    pub tau: f64,
    /// Turns of at most this many degrees are reported as straight.
    pub straight_band: f64,
    /// Use a window centered on the sector instead of the forward-only one.
    pub centered_window: bool,
    /// Points closer than this to the ground plane count as ground, meters.
    pub ground_clearance: f64,
}

impl Default for DirectionConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            n_sectors: 116,
            w_sw: 0.7,
            epsilon: 0.2,
            award_angle_weight: 1.0,
            award_dist_weight: 30.0,
            tau: 0.8,
            straight_band: 5.0,
            centered_window: false,
            ground_clearance: 0.05,
        }
    }
}

impl DirectionConfig {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.theta > 0.0) {
            return Err(("theta", "must be > 0".into()));
        }
        if self.n_sectors < 2 || !self.n_sectors.is_multiple_of(2) {
            return Err(("n_sectors", "must be even and >= 2".into()));
        }
        if !(self.w_sw > 0.0) {
            return Err(("w_sw", "must be > 0".into()));
        }
        if !(self.tau > 0.0) {
            return Err(("tau", "must be > 0".into()));
        }
        if !(self.award_angle_weight >= 0.0) {
            return Err(("award_angle_weight", "must be >= 0".into()));
        }
        if !(self.award_dist_weight >= 0.0) {
            return Err(("award_dist_weight", "must be >= 0".into()));
        }
        if self.award_angle_weight == 0.0 && self.award_dist_weight == 0.0 {
            return Err(("award_angle_weight", "weights cannot both be zero".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(("epsilon", "must be >= 0".into()));
        }
        if !(self.straight_band >= 0.0) {
            return Err(("straight_band", "must be >= 0".into()));
        }
        if !(self.ground_clearance >= 0.0) {
            return Err(("ground_clearance", "must be >= 0".into()));
        }
        Ok(())
    }

    pub fn center(&self) -> usize {
        self.n_sectors / 2
    }

    /// Signed turn angle of sector `i`, degrees.
    pub fn sector_angle(&self, i: usize) -> f64 {
        self.theta * (i as f64 - self.center() as f64)
    }
}

/// Nearest forward distance per sector; empty sectors hold `tz`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorScan {
    pub nearest: Vec<f64>,
    pub tz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WalkAction {
    Blocked,
    Straight,
    Turn(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionDecision {
    pub action: WalkAction,
    pub sector: usize,
    pub award: f64,
    /// Nearest distance in the chosen sector.
    pub nearest: f64,
}

impl DirectionDecision {
    pub fn turn_angle(&self) -> Option<f64> {
        match self.action {
            WalkAction::Turn(a) => Some(a),
            _ => None,
        }
    }
}

/// Points above the ground (beyond `ground_clearance`), below head height
/// plus `epsilon`, and inside the x/z footprint of the refined ground.
pub fn select_walkable_points(
    cloud: &PointCloud,
    ground: &GroundResult,
    cfg: &DirectionConfig,
) -> Result<PointCloud, DirectionError> {
    let (Some(plane), Some(h)) = (ground.plane, ground.height) else {
        return Err(DirectionError::EmptyGround);
    };
    if ground.refined.is_empty() {
        return Err(DirectionError::EmptyGround);
    }
    let (mut xmin, mut xmax, mut zmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &ground.refined {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        zmax = zmax.max(p.z);
    }
    let top = h + plane.d.abs() / plane.normal().norm() + cfg.epsilon;
    Ok(cloud
        .iter()
        .filter(|p| {
            p.x >= xmin
                && p.x <= xmax
                && p.y >= h
                && p.y <= top
                && p.z >= 0.0
                && p.z <= zmax
                && plane.signed_distance(p.x, p.y, p.z) > cfg.ground_clearance
        })
        .copied()
        .collect())
}

/// Sector index of a point at `(x, z)` on the horizontal plane.
pub fn sector_of(x: f64, z: f64, cfg: &DirectionConfig) -> Option<usize> {
    let azimuth = x.atan2(z).to_degrees();
    let i = (azimuth / cfg.theta).floor() + cfg.center() as f64;
    (i >= 0.0 && i < cfg.n_sectors as f64).then_some(i as usize)
}

pub fn sector_nearest(points: &PointCloud, cfg: &DirectionConfig, tz: f64) -> SectorScan {
    let mut nearest = vec![tz; cfg.n_sectors];
    for p in points {
        if !(p.z > 0.0) {
            continue;
        }
        if let Some(i) = sector_of(p.x, p.z, cfg) {
            nearest[i] = nearest[i].min(p.z);
        }
    }
    SectorScan { nearest, tz }
}

/// Number of extra sectors a corridor of width `w_sw` spans at distance `z`.
pub fn window_span(z: f64, cfg: &DirectionConfig) -> usize {
    let ratio = (cfg.w_sw / z).min(1.0);
    (ratio.asin().to_degrees() / cfg.theta).floor() as usize
}

/// Inclusive sector window `[lo, hi]` scored for sector `i`.
pub fn award_window(i: usize, span: usize, cfg: &DirectionConfig) -> (usize, usize) {
    let last = cfg.n_sectors - 1;
    if cfg.centered_window {
        let half = span.div_ceil(2);
        (i.saturating_sub(half), (i + half).min(last))
    } else {
        (i, (i + span).min(last))
    }
}

pub fn sector_awards(scan: &SectorScan, cfg: &DirectionConfig) -> Vec<f64> {
    let z = &scan.nearest;
    (0..z.len())
        .map(|i| {
            let span = window_span(z[i], cfg);
            let (lo, hi) = award_window(i, span, cfg);
            let reach = z[lo..=hi].iter().copied().fold(f64::INFINITY, f64::min);
            let angle = 90.0 - cfg.theta * (i as f64 - cfg.center() as f64).abs();
            cfg.award_angle_weight * angle + cfg.award_dist_weight * reach
        })
        .collect()
}

/// Picks the best-scoring sector; ties favor the sector nearest straight
/// ahead, then the lower index.
pub fn optimal_direction(
    scan: &SectorScan,
    awards: &[f64],
    cfg: &DirectionConfig,
) -> Result<DirectionDecision, DirectionError> {
    if awards.len() != cfg.n_sectors || scan.nearest.len() != cfg.n_sectors {
        return Err(DirectionError::AwardLength {
            got: awards.len(),
            expected: cfg.n_sectors,
        });
    }
    let center = cfg.center();
    let mut best = 0;
    for i in 1..awards.len() {
        let better = awards[i] > awards[best]
            || (awards[i] == awards[best] && i.abs_diff(center) < best.abs_diff(center));
        if better {
            best = i;
        }
    }
    let nearest = scan.nearest[best];
    let action = if nearest < cfg.tau {
        WalkAction::Blocked
    } else {
        let gamma = cfg.sector_angle(best);
        if gamma.abs() <= cfg.straight_band {
            WalkAction::Straight
        } else {
            WalkAction::Turn(gamma)
        }
    };
    Ok(DirectionDecision {
        action,
        sector: best,
        award: awards[best],
        nearest,
    })
}

/// Walkable selection, sector scan, awards and decision in one call.
pub fn search_direction(
    cloud: &PointCloud,
    ground: &GroundResult,
    cfg: &DirectionConfig,
    tz: f64,
) -> Result<(SectorScan, Vec<f64>, DirectionDecision), DirectionError> {
    let points = select_walkable_points(cloud, ground, cfg)?;
    let scan = sector_nearest(&points, cfg, tz);
    let awards = sector_awards(&scan, cfg);
    let decision = optimal_direction(&scan, &awards, cfg)?;
    Ok((scan, awards, decision))
}
