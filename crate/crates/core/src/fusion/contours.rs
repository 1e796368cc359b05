//! Connected components, filled external contours and moment centroids.

use std::collections::VecDeque;

use crate::error::FusionError;
use crate::mask::{Mask, Region};

const NEIGHBORS8: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

/// 8-connected component labels; `0` is background, components count from 1.
pub fn label_components(mask: &Mask) -> (Vec<u32>, u32) {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for (dx, dy) in NEIGHBORS8 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask.bits[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    (labels, next)
}

/// Component pixels plus every hole they enclose.
fn filled(labels: &[u32], w: usize, h: usize, id: u32, bbox: (usize, usize, usize, usize)) -> Vec<u32> {
    let (x0, y0, x1, y1) = bbox;
    // padded window so the flood can go around the component
    let px0 = x0 as i64 - 1;
    let py0 = y0 as i64 - 1;
    let pw = (x1 - x0 + 3) as i64;
    let ph = (y1 - y0 + 3) as i64;
    let is_comp = |lx: i64, ly: i64| {
        let (x, y) = (px0 + lx, py0 + ly);
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && labels[y as usize * w + x as usize] == id
    };
    let mut outside = vec![false; (pw * ph) as usize];
    let mut queue = VecDeque::from([(0i64, 0i64)]);
    outside[0] = true;
    while let Some((lx, ly)) = queue.pop_front() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (lx + dx, ly + dy);
            if nx < 0 || ny < 0 || nx >= pw || ny >= ph {
                continue;
            }
            let k = (ny * pw + nx) as usize;
            if !outside[k] && !is_comp(nx, ny) {
                outside[k] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    let mut out = Vec::new();
    for ly in 1..ph - 1 {
        for lx in 1..pw - 1 {
            if !outside[(ly * pw + lx) as usize] {
                let (x, y) = ((px0 + lx) as usize, (py0 + ly) as usize);
                out.push((y * w + x) as u32);
            }
        }
    }
    out
}

/// Moore-neighbor trace of the outer boundary, starting at the first pixel
/// in raster order and walking clockwise.
pub fn trace_boundary(region: &Region) -> Vec<(u32, u32)> {
    let Some(&first) = region.pixels.first() else {
        return Vec::new();
    };
    let inside = |x: i64, y: i64| {
        x >= 0
            && y >= 0
            && (x as usize) < region.width
            && (y as usize) < region.height
            && region.contains(x as usize, y as usize)
    };
    let (sx, sy) = region.coords(first);
    let start = (sx as i64, sy as i64);
    let mut boundary = vec![(sx as u32, sy as u32)];
    let mut cur = start;
    // entered from the west; the west neighbor of the first pixel is outside
    let mut back = 0usize;
    let start_back = back;
    let limit = 4 * region.area() + 8;
    for _ in 0..limit {
        let found = (1..=8)
            .map(|k| (back + k) % 8)
            .find(|&d| inside(cur.0 + NEIGHBORS8[d].0, cur.1 + NEIGHBORS8[d].1));
        let Some(d) = found else {
            break;
        };
        let next = (cur.0 + NEIGHBORS8[d].0, cur.1 + NEIGHBORS8[d].1);
        let prev_checked = (cur.0 + NEIGHBORS8[(d + 7) % 8].0, cur.1 + NEIGHBORS8[(d + 7) % 8].1);
        let rel = (prev_checked.0 - next.0, prev_checked.1 - next.1);
        back = NEIGHBORS8.iter().position(|&v| v == rel).unwrap_or(0);
        if next == start && back == start_back {
            break;
        }
        cur = next;
        boundary.push((cur.0 as u32, cur.1 as u32));
    }
    if boundary.len() > 1 && boundary.last() == boundary.first() {
        boundary.pop();
    }
    boundary
}

/// Zero- and first-order moments accumulated over horizontal runs.
pub fn contour_centroid(region: &Region) -> Result<(f64, f64), FusionError> {
    if region.is_empty() {
        return Err(FusionError::ZeroArea);
    }
    let (mut m00, mut m10, mut m01) = (0.0f64, 0.0f64, 0.0f64);
    let mut run: Option<(usize, usize, usize)> = None;
    let mut flush = |(y, xa, xb): (usize, usize, usize)| {
        let len = (xb - xa + 1) as f64;
        m00 += len;
        m10 += (xa + xb) as f64 * len / 2.0;
        m01 += y as f64 * len;
    };
    for (x, y) in region.iter_xy() {
        run = match run {
            Some((ry, xa, xb)) if ry == y && xb + 1 == x => Some((ry, xa, x)),
            Some(r) => {
                flush(r);
                Some((y, x, x))
            }
            None => Some((y, x, x)),
        };
    }
    if let Some(r) = run {
        flush(r);
    }
    Ok((m10 / m00, m01 / m00))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleContour {
    /// Filled region, including merged fragments.
    pub region: Region,
    /// Outer boundary pixels in tracing order.
    pub boundary: Vec<(u32, u32)>,
    pub area: usize,
    pub centroid: (f64, f64),
    pub z_center: f64,
}

/// Depth at the rounded centroid, else the smallest non-zero depth in `region`.
pub fn region_depth(
    centroid: (f64, f64),
    region: &Region,
    depth: &crate::geometry::DepthFrame,
) -> Option<f64> {
    let cx = centroid.0.round();
    let cy = centroid.1.round();
    if cx >= 0.0 && cy >= 0.0 && (cx as usize) < depth.width && (cy as usize) < depth.height {
        let z = depth.get(cx as usize, cy as usize);
        if z > 0.0 {
            return Some(z);
        }
    }
    min_nonzero_depth(region, depth)
}

pub fn min_nonzero_depth(region: &Region, depth: &crate::geometry::DepthFrame) -> Option<f64> {
    region
        .pixels
        .iter()
        .map(|&i| depth.values[i as usize])
        .filter(|&z| z > 0.0)
        .min_by(f64::total_cmp)
}

struct Component {
    pixels: Vec<u32>,
    filled: Vec<u32>,
    nested: bool,
}

/// Splits `mask` into external contours, keeps those of at least
/// `min_area` pixels, and folds smaller fragments into the nearest kept
/// contour when the gap between them is at most `merge_gap` pixels.
/// Fragments with no such neighbor are dropped as noise, as are regions
/// without any valid depth.
pub fn extract_contours(
    mask: &Mask,
    depth: &crate::geometry::DepthFrame,
    min_area: usize,
    merge_gap: usize,
) -> Vec<ObstacleContour> {
    let (w, h) = mask.dims();
    let (labels, n) = label_components(mask);
    if n == 0 {
        return Vec::new();
    }
    let mut comps: Vec<Component> = (0..n)
        .map(|_| Component {
            pixels: Vec::new(),
            filled: Vec::new(),
            nested: false,
        })
        .collect();
    for (i, &l) in labels.iter().enumerate() {
        if l > 0 {
            comps[l as usize - 1].pixels.push(i as u32);
        }
    }
    for (k, c) in comps.iter_mut().enumerate() {
        let r = Region {
            width: w,
            height: h,
            pixels: std::mem::take(&mut c.pixels),
        };
        let bbox = r.bbox().expect("component is non-empty");
        c.filled = filled(&labels, w, h, k as u32 + 1, bbox);
        c.pixels = r.pixels;
    }
    // components sitting inside another one's holes are not external
    for k in 0..comps.len() {
        let nested: Vec<usize> = comps[k]
            .filled
            .iter()
            .map(|&p| labels[p as usize])
            .filter(|&l| l != 0 && l as usize != k + 1)
            .map(|l| l as usize - 1)
            .collect();
        for j in nested {
            comps[j].nested = true;
        }
    }

    let mut owner = vec![0u32; w * h];
    let mut kept: Vec<(usize, Region)> = Vec::new();
    for (k, c) in comps.iter().enumerate() {
        if !c.nested && c.filled.len() >= min_area {
            for &p in &c.filled {
                owner[p as usize] = kept.len() as u32 + 1;
            }
            kept.push((
                k,
                Region {
                    width: w,
                    height: h,
                    pixels: c.filled.clone(),
                },
            ));
        }
    }
    let reach = merge_gap as i64 + 1;
    let mut merged: Vec<Vec<u32>> = vec![Vec::new(); kept.len()];
    for c in comps.iter().filter(|c| !c.nested && c.filled.len() < min_area) {
        let mut best: Option<(i64, u32)> = None;
        for &p in &c.filled {
            let (x, y) = ((p as usize % w) as i64, (p as usize / w) as i64);
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let o = owner[ny as usize * w + nx as usize];
                    if o == 0 {
                        continue;
                    }
                    let d = dx.abs().max(dy.abs());
                    if best.is_none_or(|(bd, bo)| d < bd || (d == bd && o < bo)) {
                        best = Some((d, o));
                    }
                }
            }
        }
        if let Some((_, o)) = best {
            merged[o as usize - 1].extend_from_slice(&c.filled);
        }
    }

    let mut out = Vec::with_capacity(kept.len());
    for ((_, region), extra) in kept.into_iter().zip(merged) {
        let boundary = trace_boundary(&region);
        let region = if extra.is_empty() {
            region
        } else {
            let mut px = region.pixels;
            px.extend(extra);
            Region::from_pixels(w, h, px)
        };
        let centroid = contour_centroid(&region).expect("kept regions are non-empty");
        let Some(z_center) = region_depth(centroid, &region, depth) else {
            continue;
        };
        out.push(ObstacleContour {
            area: region.area(),
            boundary,
            region,
            centroid,
            z_center,
        });
    }
    out
}
