//! Camera and world frames, IMU attitude, and depth-to-world reconstruction.
//!
//! World frame: origin at the camera center, Y up, Z along the user's facing
//! direction. Pixel `v` grows downward, so the second row of `K⁻¹` is negated
//! when lifting a pixel into the up-positive frame. `x` grows with `u`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Pinhole intrinsics of the depth (or RGB) camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
    /// Raw raster unit to meters (0.001 for millimeter PNGs).
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    pub const DEFAULT_DEPTH_SCALE: f64 = 0.001;

    pub fn new(fx: f64, fy: f64, u0: f64, v0: f64) -> Result<Self, GeometryError> {
        Self::with_scale(fx, fy, u0, v0, Self::DEFAULT_DEPTH_SCALE)
    }

    pub fn with_scale(
        fx: f64,
        fy: f64,
        u0: f64,
        v0: f64,
        depth_scale: f64,
    ) -> Result<Self, GeometryError> {
        let k = Self {
            fx,
            fy,
            u0,
            v0,
            depth_scale,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.fx, self.fy, self.u0, self.v0, self.depth_scale]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics(
                "focal lengths must be finite and positive".into(),
            ));
        }
        if self.depth_scale <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics(
                "depth_scale must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Checks that the principal point lies inside a `width`×`height` raster.
    pub fn check_frame(&self, width: usize, height: usize) -> Result<(), GeometryError> {
        let inside = self.u0 >= 0.0
            && self.v0 >= 0.0
            && self.u0 < width as f64
            && self.v0 < height as f64;
        if inside {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch {
                width,
                height,
                u0: self.u0,
                v0: self.v0,
            })
        }
    }

    /// Intrinsics for a `width`×`height` raster with the given horizontal
    /// field of view and square pixels.
    pub fn from_fov(width: usize, height: usize, hfov_deg: f64) -> Self {
        let fx = (width as f64 / 2.0) / (hfov_deg.to_radians() / 2.0).tan();
        Self {
            fx,
            fy: fx,
            u0: (width as f64 - 1.0) / 2.0,
            v0: (height as f64 - 1.0) / 2.0,
            depth_scale: Self::DEFAULT_DEPTH_SCALE,
        }
    }

    /// Half of the horizontal field of view covered by a raster of `width`, degrees.
    pub fn half_hfov_deg(&self, width: usize) -> f64 {
        let reach = self.u0.max(width as f64 - 1.0 - self.u0);
        (reach / self.fx).atan().to_degrees()
    }

    /// Camera-frame ray (up-positive Y) through pixel `(u, v)` with unit depth.
    #[inline]
    pub fn lift(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.u0) / self.fx, -(v - self.v0) / self.fy, 1.0)
    }
}

/// Camera attitude from the IMU, radians.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Attitude {
    pub pitch: f64,
    pub roll: f64,
}

impl Attitude {
    pub fn new(pitch: f64, roll: f64) -> Result<Self, GeometryError> {
        let ok = |a: f64| a.is_finite() && a.abs() <= std::f64::consts::PI;
        if !ok(pitch) || !ok(roll) {
            return Err(GeometryError::InvalidAttitude { pitch, roll });
        }
        Ok(Self { pitch, roll })
    }

    pub fn from_degrees(pitch_deg: f64, roll_deg: f64) -> Result<Self, GeometryError> {
        Self::new(pitch_deg.to_radians(), roll_deg.to_radians())
    }

    /// `E = Rz(roll) · Rx(pitch)`.
    pub fn rotation(&self) -> Matrix3<f64> {
        attitude_rotation(self)
    }
}

/// Rotation taking camera-frame vectors into the world frame, `Rz(roll)·Rx(pitch)`.
pub fn attitude_rotation(att: &Attitude) -> Matrix3<f64> {
    let (sg, cg) = att.roll.sin_cos();
    let (sa, ca) = att.pitch.sin_cos();
    let rz = Matrix3::new(cg, -sg, 0.0, sg, cg, 0.0, 0.0, 0.0, 1.0);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, ca, -sa, 0.0, sa, ca);
    rz * rx
}

/// Row-major depth raster in meters. `0.0` marks a missing sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub frame_index: u64,
}

impl DepthFrame {
    pub fn new(
        width: usize,
        height: usize,
        values: Vec<f64>,
        frame_index: u64,
    ) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 || width * height != values.len() {
            return Err(GeometryError::RasterSize {
                width,
                height,
                len: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(GeometryError::InvalidDepth(*bad));
        }
        Ok(Self {
            width,
            height,
            values,
            frame_index,
        })
    }

    /// Builds a frame from raw sensor units (e.g. 16-bit millimeters).
    pub fn from_raw(
        width: usize,
        height: usize,
        raw: &[u16],
        depth_scale: f64,
        frame_index: u64,
    ) -> Result<Self, GeometryError> {
        let values = raw.iter().map(|&r| r as f64 * depth_scale).collect();
        Self::new(width, height, values, frame_index)
    }

    pub fn zeros(width: usize, height: usize, frame_index: u64) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
            frame_index,
        }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
    pub frame_index: u64,
}

impl RgbFrame {
    pub fn new(
        width: usize,
        height: usize,
        data: Vec<u8>,
        frame_index: u64,
    ) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 || width * height * 3 != data.len() {
            return Err(GeometryError::RasterSize {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
            frame_index,
        })
    }
}

/// World-frame point, meters, optionally tagged with the pixel it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub pixel: Option<(u32, u32)>,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            x,
            y,
            z,
            pixel: None,
        }
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }
}

impl FromIterator<Point3> for PointCloud {
    fn from_iter<T: IntoIterator<Item = Point3>>(iter: T) -> Self {
        Self {
            points: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a PointCloud {
    type Item = &'a Point3;
    type IntoIter = std::slice::Iter<'a, Point3>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// World point seen at pixel `(u, v)` with depth `z`, given a precomputed `E`.
#[inline]
pub fn reconstruct_with(
    rotation: &Matrix3<f64>,
    k: &CameraIntrinsics,
    u: f64,
    v: f64,
    z: f64,
) -> Vector3<f64> {
    rotation * (k.lift(u, v) * z)
}

/// Single-pixel reconstruction `z·E·K⁻¹·(u, v, 1)ᵀ`.
pub fn reconstruct_pixel(
    u: f64,
    v: f64,
    z: f64,
    k: &CameraIntrinsics,
    att: &Attitude,
) -> Vector3<f64> {
    reconstruct_with(&attitude_rotation(att), k, u, v, z)
}

/// Lifts every valid depth sample into the world frame, in raster order.
pub fn reconstruct_pointcloud(
    depth: &DepthFrame,
    k: &CameraIntrinsics,
    att: &Attitude,
) -> Result<PointCloud, GeometryError> {
    k.check_frame(depth.width, depth.height)?;
    let e = attitude_rotation(att);
    let mut points = Vec::with_capacity(depth.len());
    for v in 0..depth.height {
        let row = &depth.values[v * depth.width..(v + 1) * depth.width];
        for (u, &z) in row.iter().enumerate() {
            if z <= 0.0 {
                continue;
            }
            let p = reconstruct_with(&e, k, u as f64, v as f64, z);
            points.push(Point3 {
                x: p.x,
                y: p.y,
                z: p.z,
                pixel: Some((u as u32, v as u32)),
            });
        }
    }
    Ok(PointCloud { points })
}

/// Image position and camera depth of a world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelDepth {
    pub u: f64,
    pub v: f64,
    pub z: f64,
}

/// Inverse of [`reconstruct_pixel`].
pub fn project_pixel(
    p: &Point3,
    k: &CameraIntrinsics,
    att: &Attitude,
) -> Result<PixelDepth, GeometryError> {
    project_with(&attitude_rotation(att), k, &p.vector())
}

#[inline]
pub fn project_with(
    rotation: &Matrix3<f64>,
    k: &CameraIntrinsics,
    p: &Vector3<f64>,
) -> Result<PixelDepth, GeometryError> {
    let c = rotation.transpose() * p;
    if !(c.z > 0.0) {
        return Err(GeometryError::BehindCamera { z: c.z });
    }
    Ok(PixelDepth {
        u: k.u0 + k.fx * c.x / c.z,
        v: k.v0 - k.fy * c.y / c.z,
        z: c.z,
    })
}
