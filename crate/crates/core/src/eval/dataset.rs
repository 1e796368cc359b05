//! On-disk dataset layout:
//!
//! ```text
//! intrinsics.txt            fx=…, fy=…, u0=…, v0=…, depth_scale=… (one per line)
//! extrinsics.txt            R row-major then t, 12 numbers (RGB → depth)
//! frames/NNNNNN.depth.png   16-bit single channel, raw sensor units
//! frames/NNNNNN.rgb.png     8-bit RGB
//! frames/NNNNNN.meta        timestamp_us=…, pitch_deg=…, roll_deg=…
//! detections.ndrec          one detection record per line
//! truth/NNNNNN.mask.png     8-bit, non-zero marks ground
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, ImageFormat, Luma, Rgb};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::fusion::Extrinsics;
use crate::geometry::{Attitude, CameraIntrinsics, DepthFrame, RgbFrame};
use crate::mask::Mask;

pub const INTRINSICS_FILE: &str = "intrinsics.txt";
pub const EXTRINSICS_FILE: &str = "extrinsics.txt";
pub const DETECTIONS_FILE: &str = "detections.ndrec";
pub const FRAMES_DIR: &str = "frames";
pub const TRUTH_DIR: &str = "truth";
/// Per-frame ground truth height, written by the synthesizer.
pub const GROUND_TRUTH_FILE: &str = "ground.ndjson";
/// Per-frame visible objects, written by the synthesizer.
pub const OBJECTS_TRUTH_FILE: &str = "objects.ndjson";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMeta {
    pub timestamp_us: u64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl FrameMeta {
    pub fn attitude(&self) -> Result<Attitude, EvalError> {
        Ok(Attitude::from_degrees(self.pitch_deg, self.roll_deg)?)
    }

    pub fn to_text(&self) -> String {
        format!(
            "timestamp_us={}\npitch_deg={}\nroll_deg={}\n",
            self.timestamp_us, self.pitch_deg, self.roll_deg
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFrame {
    pub frame_index: u64,
    pub meta: FrameMeta,
    pub attitude: Attitude,
    pub depth_path: PathBuf,
    pub rgb_path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub frame: u64,
    /// Floor height below the camera, world Y, meters.
    pub height: f64,
    pub slope_deg: f64,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub intrinsics: CameraIntrinsics,
    /// RGB camera intrinsics; the depth intrinsics unless `rgb_*` keys are given.
    pub rgb_intrinsics: CameraIntrinsics,
    pub extrinsics: Extrinsics,
    pub width: usize,
    pub height: usize,
    pub frames: Vec<DatasetFrame>,
}

pub fn frame_stem(index: u64) -> String {
    format!("{index:06}")
}

fn key_values(path: &Path) -> Result<BTreeMap<String, String>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| EvalError::parse(path, format!("line {}: expected key=value", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str, path: &Path) -> Result<T, EvalError> {
    let raw = map
        .get(key)
        .ok_or_else(|| EvalError::parse(path, format!("missing key `{key}`")))?;
    raw.parse()
        .map_err(|_| EvalError::parse(path, format!("`{key}`: cannot parse {raw:?}")))
}

pub fn read_intrinsics(path: &Path) -> Result<(CameraIntrinsics, CameraIntrinsics), EvalError> {
    let map = key_values(path)?;
    let bad = |e: crate::error::GeometryError| EvalError::parse(path, e.to_string());
    let depth = CameraIntrinsics::with_scale(
        number(&map, "fx", path)?,
        number(&map, "fy", path)?,
        number(&map, "u0", path)?,
        number(&map, "v0", path)?,
        number(&map, "depth_scale", path)?,
    )
    .map_err(bad)?;
    let rgb = if map.contains_key("rgb_fx") {
        CameraIntrinsics::with_scale(
            number(&map, "rgb_fx", path)?,
            number(&map, "rgb_fy", path)?,
            number(&map, "rgb_u0", path)?,
            number(&map, "rgb_v0", path)?,
            depth.depth_scale,
        )
        .map_err(bad)?
    } else {
        depth
    };
    Ok((depth, rgb))
}

pub fn intrinsics_text(k: &CameraIntrinsics) -> String {
    format!(
        "fx={}\nfy={}\nu0={}\nv0={}\ndepth_scale={}\n",
        k.fx, k.fy, k.u0, k.v0, k.depth_scale
    )
}

pub fn read_extrinsics(path: &Path) -> Result<Extrinsics, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
    let values: Vec<f64> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
        .map(|t| t.parse().map_err(|_| EvalError::parse(path, format!("not a number: {t:?}"))))
        .collect::<Result<_, _>>()?;
    if values.len() != 12 {
        return Err(EvalError::parse(path, format!("expected 12 numbers, found {}", values.len())));
    }
    let r = Matrix3::from_row_slice(&values[..9]);
    let t = Vector3::new(values[9], values[10], values[11]);
    Extrinsics::new(r, t).map_err(|e| EvalError::parse(path, e.to_string()))
}

pub fn extrinsics_text(ext: &Extrinsics) -> String {
    let r = &ext.r;
    let mut s = String::new();
    for i in 0..3 {
        s.push_str(&format!("{} {} {}\n", r[(i, 0)], r[(i, 1)], r[(i, 2)]));
    }
    s.push_str(&format!("{} {} {}\n", ext.t.x, ext.t.y, ext.t.z));
    s
}

pub fn read_meta(path: &Path) -> Result<FrameMeta, EvalError> {
    let map = key_values(path)?;
    Ok(FrameMeta {
        timestamp_us: number(&map, "timestamp_us", path)?,
        pitch_deg: number(&map, "pitch_deg", path)?,
        roll_deg: number(&map, "roll_deg", path)?,
    })
}

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> EvalError + '_ {
    move |source| EvalError::Image {
        path: path.to_path_buf(),
        source,
    }
}

fn open_image(path: &Path) -> Result<image::DynamicImage, EvalError> {
    let bytes = fs::read(path).map_err(|e| EvalError::io(path, e))?;
    image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(image_err(path))
}

pub fn read_depth_png(path: &Path) -> Result<(usize, usize, Vec<u16>), EvalError> {
    match open_image(path)? {
        image::DynamicImage::ImageLuma16(buf) => {
            Ok((buf.width() as usize, buf.height() as usize, buf.into_raw()))
        }
        other => Err(EvalError::parse(
            path,
            format!("depth must be 16-bit single channel, found {:?}", other.color()),
        )),
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), EvalError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| EvalError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| EvalError::io(path, e))
}

fn png_bytes<P, C>(path: &Path, img: &ImageBuffer<P, C>) -> Result<Vec<u8>, EvalError>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).map_err(image_err(path))?;
    Ok(out.into_inner())
}

pub fn write_depth_png(path: &Path, width: usize, height: usize, raw: Vec<u16>) -> Result<(), EvalError> {
    let img = ImageBuffer::<Luma<u16>, _>::from_raw(width as u32, height as u32, raw)
        .ok_or_else(|| EvalError::parse(path, "depth buffer size mismatch"))?;
    write_bytes(path, &png_bytes(path, &img)?)
}

pub fn write_rgb_png(path: &Path, rgb: &RgbFrame) -> Result<(), EvalError> {
    let img = ImageBuffer::<Rgb<u8>, _>::from_raw(rgb.width as u32, rgb.height as u32, rgb.data.clone())
        .ok_or_else(|| EvalError::parse(path, "rgb buffer size mismatch"))?;
    write_bytes(path, &png_bytes(path, &img)?)
}

pub fn write_mask_png(path: &Path, mask: &Mask) -> Result<(), EvalError> {
    let raw = mask.bits.iter().map(|&b| if b { 255u8 } else { 0 }).collect();
    let img = ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(mask.width as u32, mask.height as u32, raw)
        .ok_or_else(|| EvalError::parse(path, "mask buffer size mismatch"))?;
    write_bytes(path, &png_bytes(path, &img)?)
}

pub fn read_mask_png(path: &Path) -> Result<Mask, EvalError> {
    let img = open_image(path)?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let bits = img.into_raw().into_iter().map(|p| p != 0).collect();
    Ok(Mask::from_bits(w, h, bits).expect("decoded size matches"))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), EvalError> {
    write_bytes(path, text.as_bytes())
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self, EvalError> {
        let (intrinsics, rgb_intrinsics) = read_intrinsics(&root.join(INTRINSICS_FILE))?;
        let ext_path = root.join(EXTRINSICS_FILE);
        let extrinsics = if ext_path.exists() {
            read_extrinsics(&ext_path)?
        } else {
            Extrinsics::identity()
        };
        let frames_dir = root.join(FRAMES_DIR);
        let entries = fs::read_dir(&frames_dir).map_err(|e| EvalError::io(&frames_dir, e))?;
        let mut indices = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| EvalError::io(&frames_dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(stem) = name.strip_suffix(".depth.png") {
                let idx: u64 = stem
                    .parse()
                    .map_err(|_| EvalError::parse(entry.path(), "frame name must be a number"))?;
                indices.push(idx);
            }
        }
        if indices.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        indices.sort_unstable();
        let mut frames = Vec::with_capacity(indices.len());
        for idx in indices {
            let stem = frame_stem(idx);
            let meta = read_meta(&frames_dir.join(format!("{stem}.meta")))?;
            frames.push(DatasetFrame {
                frame_index: idx,
                attitude: meta.attitude()?,
                meta,
                depth_path: frames_dir.join(format!("{stem}.depth.png")),
                rgb_path: frames_dir.join(format!("{stem}.rgb.png")),
            });
        }
        let first = &frames[0].depth_path;
        let (w, h) = image::image_dimensions(first).map_err(image_err(first))?;
        let (width, height) = (w as usize, h as usize);
        intrinsics
            .check_frame(width, height)
            .map_err(|e| EvalError::parse(root.join(INTRINSICS_FILE), e.to_string()))?;
        Ok(Self {
            root: root.to_path_buf(),
            intrinsics,
            rgb_intrinsics,
            extrinsics,
            width,
            height,
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn load_depth(&self, frame: &DatasetFrame) -> Result<DepthFrame, EvalError> {
        let (w, h, raw) = read_depth_png(&frame.depth_path)?;
        if (w, h) != (self.width, self.height) {
            return Err(EvalError::DimensionMismatch {
                a: (self.width, self.height),
                b: (w, h),
            });
        }
        Ok(DepthFrame::from_raw(w, h, &raw, self.intrinsics.depth_scale, frame.frame_index)?)
    }

    pub fn load_rgb(&self, frame: &DatasetFrame) -> Result<RgbFrame, EvalError> {
        let img = open_image(&frame.rgb_path)?.into_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        Ok(RgbFrame::new(w, h, img.into_raw(), frame.frame_index)?)
    }

    pub fn truth_path(&self, frame_index: u64) -> PathBuf {
        self.root
            .join(TRUTH_DIR)
            .join(format!("{}.mask.png", frame_stem(frame_index)))
    }

    pub fn load_truth(&self, frame_index: u64) -> Result<Mask, EvalError> {
        let path = self.truth_path(frame_index);
        if !path.exists() {
            return Err(EvalError::MissingTruth(frame_index));
        }
        let mask = read_mask_png(&path)?;
        if mask.dims() != (self.width, self.height) {
            return Err(EvalError::DimensionMismatch {
                a: (self.width, self.height),
                b: mask.dims(),
            });
        }
        Ok(mask)
    }

    pub fn detections_path(&self) -> PathBuf {
        self.root.join(DETECTIONS_FILE)
    }

    /// Synthesizer ground truth, if present.
    pub fn load_ground_truth(&self) -> Result<Option<BTreeMap<u64, GroundTruth>>, EvalError> {
        let path = self.root.join(TRUTH_DIR).join(GROUND_TRUTH_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| EvalError::io(&path, e))?;
        let mut out = BTreeMap::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let g: GroundTruth = serde_json::from_str(line)
                .map_err(|e| EvalError::parse(&path, format!("line {}: {e}", n + 1)))?;
            out.insert(g.frame, g);
        }
        Ok(Some(out))
    }
}
