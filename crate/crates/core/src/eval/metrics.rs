//! Ground segmentation scoring: intersection over sum of pixel counts, and
//! the fraction of frames clearing an overlap threshold per distance band.

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::geometry::{attitude_rotation, Attitude, CameraIntrinsics, DepthFrame};
use crate::ground::GroundResult;
use crate::mask::Mask;

/// `N∩ / (N_detected + N_truth)`; 0.5 for identical non-empty masks, 0 when
/// both are empty.
pub fn ground_iou(detected: &Mask, truth: &Mask) -> Result<f64, EvalError> {
    if detected.dims() != truth.dims() {
        return Err(EvalError::DimensionMismatch {
            a: detected.dims(),
            b: truth.dims(),
        });
    }
    let (n_int, n_sum) = overlap_counts(detected, truth, None);
    Ok(if n_sum == 0 { 0.0 } else { n_int as f64 / n_sum as f64 })
}

fn overlap_counts(a: &Mask, b: &Mask, keep: Option<&[bool]>) -> (usize, usize) {
    let (mut n_int, mut n_sum) = (0, 0);
    for i in 0..a.bits.len() {
        if keep.is_some_and(|k| !k[i]) {
            continue;
        }
        let (x, y) = (a.bits[i], b.bits[i]);
        n_int += (x && y) as usize;
        n_sum += x as usize + y as usize;
    }
    (n_int, n_sum)
}

/// Pixels of the refined ground points.
pub fn ground_mask(result: &GroundResult, width: usize, height: usize) -> Mask {
    let mut m = Mask::new(width, height);
    for p in &result.refined {
        if let Some((u, v)) = p.pixel {
            if (u as usize) < width && (v as usize) < height {
                m.set(u as usize, v as usize, true);
            }
        }
    }
    m
}

/// World-frame forward distance of every pixel; NaN where depth is missing.
pub fn world_forward_distance(depth: &DepthFrame, k: &CameraIntrinsics, att: &Attitude) -> Vec<f64> {
    let e = attitude_rotation(att);
    let mut out = Vec::with_capacity(depth.len());
    for v in 0..depth.height {
        for u in 0..depth.width {
            let z = depth.get(u, v);
            out.push(if z > 0.0 {
                (e * k.lift(u as f64, v as f64)).z * z
            } else {
                f64::NAN
            });
        }
    }
    out
}

/// Everything needed to score one frame.
#[derive(Debug, Clone)]
pub struct FrameMasks {
    pub frame_index: u64,
    pub truth: Mask,
    pub temporal: Mask,
    pub baseline: Mask,
    /// Per-pixel world forward distance, as from [`world_forward_distance`].
    pub distance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionTable {
    pub bands: Vec<[f64; 2]>,
    pub thresholds: Vec<f64>,
    /// `[band][threshold]` fraction of scored frames at or above the threshold.
    pub temporal: Vec<Vec<f64>>,
    pub baseline: Vec<Vec<f64>>,
    /// Frames scored per band; frames whose truth mask is empty in the band are skipped.
    pub frames: Vec<usize>,
}

impl PrecisionTable {
    /// Temporal precision is at least the baseline's in every band at `threshold`.
    pub fn temporal_dominates_at(&self, threshold: f64) -> Option<bool> {
        let t = self.thresholds.iter().position(|&x| x == threshold)?;
        Some((0..self.bands.len()).all(|b| self.temporal[b][t] >= self.baseline[b][t]))
    }
}

pub fn precision_curve(
    frames: &[FrameMasks],
    bands: &[[f64; 2]],
    thresholds: &[f64],
) -> Result<PrecisionTable, EvalError> {
    let nb = bands.len();
    let nt = thresholds.len();
    let mut hits_t = vec![vec![0usize; nt]; nb];
    let mut hits_b = vec![vec![0usize; nt]; nb];
    let mut scored = vec![0usize; nb];
    for f in frames {
        for m in [&f.temporal, &f.baseline] {
            if m.dims() != f.truth.dims() {
                return Err(EvalError::DimensionMismatch {
                    a: m.dims(),
                    b: f.truth.dims(),
                });
            }
        }
        if f.distance.len() != f.truth.bits.len() {
            return Err(EvalError::DimensionMismatch {
                a: f.truth.dims(),
                b: (f.distance.len(), 1),
            });
        }
        for (b, band) in bands.iter().enumerate() {
            let keep: Vec<bool> = f.distance.iter().map(|&d| d >= band[0] && d < band[1]).collect();
            let truth_here = f.truth.bits.iter().zip(&keep).any(|(&t, &k)| t && k);
            if !truth_here {
                continue;
            }
            scored[b] += 1;
            for (m, hits) in [(&f.temporal, &mut hits_t), (&f.baseline, &mut hits_b)] {
                let (n_int, n_sum) = overlap_counts(m, &f.truth, Some(&keep));
                for (t, &thr) in thresholds.iter().enumerate() {
                    // n_int / n_sum >= thr without dividing
                    if n_int as f64 >= thr * n_sum as f64 {
                        hits[b][t] += 1;
                    }
                }
            }
        }
    }
    let frac = |hits: Vec<Vec<usize>>| -> Vec<Vec<f64>> {
        hits.into_iter()
            .zip(&scored)
            .map(|(row, &n)| {
                row.into_iter()
                    .map(|h| if n == 0 { 0.0 } else { h as f64 / n as f64 })
                    .collect()
            })
            .collect()
    };
    Ok(PrecisionTable {
        bands: bands.to_vec(),
        thresholds: thresholds.to_vec(),
        temporal: frac(hits_t),
        baseline: frac(hits_b),
        frames: scored,
    })
}
