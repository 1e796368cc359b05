//! Square-element binary morphology. Pixels outside the frame never
//! influence the result, which keeps dilation and erosion adjoint so that
//! closing stays idempotent at the borders.

use crate::mask::Mask;

fn pass(src: &Mask, radius: usize, horizontal: bool, want: bool) -> Mask {
    let (w, h) = src.dims();
    let mut out = Mask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let (lo, hi, fixed) = if horizontal {
                (x.saturating_sub(radius), (x + radius).min(w - 1), y)
            } else {
                (y.saturating_sub(radius), (y + radius).min(h - 1), x)
            };
            let hit = (lo..=hi).any(|t| {
                let v = if horizontal { src.get(t, fixed) } else { src.get(fixed, t) };
                v == want
            });
            // dilation: any set neighbor; erosion: no unset neighbor
            out.set(x, y, if want { hit } else { !hit });
        }
    }
    out
}

pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    if radius == 0 || mask.bits.is_empty() {
        return mask.clone();
    }
    pass(&pass(mask, radius, true, true), radius, false, true)
}

pub fn erode(mask: &Mask, radius: usize) -> Mask {
    if radius == 0 || mask.bits.is_empty() {
        return mask.clone();
    }
    pass(&pass(mask, radius, true, false), radius, false, false)
}

/// Dilation followed by erosion with a `(2r+1)²` square.
pub fn close(mask: &Mask, radius: usize) -> Mask {
    erode(&dilate(mask, radius), radius)
}
