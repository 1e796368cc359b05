//! Binary rasters and sparse pixel regions.

use std::cmp::Ordering;

/// Row-major binary raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Option<Self> {
        (bits.len() == width * height).then_some(Self {
            width,
            height,
            bits,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn to_region(&self) -> Region {
        let pixels = self
            .bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u32)
            .collect();
        Region {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// Pixels set in both masks.
    pub fn and(&self, other: &Mask) -> Mask {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect();
        Mask {
            width: self.width,
            height: self.height,
            bits,
        }
    }
}

/// Set of pixels in a `width`×`height` frame, stored as sorted linear indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Region {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u32>,
}

impl Region {
    pub fn from_pixels(width: usize, height: usize, mut pixels: Vec<u32>) -> Self {
        pixels.sort_unstable();
        pixels.dedup();
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Axis-aligned rectangle `[x0, x0+w) × [y0, y0+h)`, clipped to the frame.
    pub fn rect(width: usize, height: usize, x0: i64, y0: i64, w: i64, h: i64) -> Self {
        let xa = x0.clamp(0, width as i64) as usize;
        let xb = (x0 + w).clamp(0, width as i64) as usize;
        let ya = y0.clamp(0, height as i64) as usize;
        let yb = (y0 + h).clamp(0, height as i64) as usize;
        let mut pixels = Vec::with_capacity((xb - xa) * (yb - ya));
        for y in ya..yb {
            for x in xa..xb {
                pixels.push((y * width + x) as u32);
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn coords(&self, idx: u32) -> (usize, usize) {
        let i = idx as usize;
        (i % self.width, i / self.width)
    }

    pub fn iter_xy(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixels.iter().map(|&i| self.coords(i))
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pixels.binary_search(&((y * self.width + x) as u32)).is_ok()
    }

    pub fn intersection(&self, other: &Region) -> Region {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pixels.len() && j < other.pixels.len() {
            match self.pixels[i].cmp(&other.pixels[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push(self.pixels[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Region {
            width: self.width,
            height: self.height,
            pixels: out,
        }
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut pixels = Vec::with_capacity(self.pixels.len() + other.pixels.len());
        pixels.extend_from_slice(&self.pixels);
        pixels.extend_from_slice(&other.pixels);
        Region::from_pixels(self.width, self.height, pixels)
    }

    pub fn to_mask(&self) -> Mask {
        let mut m = Mask::new(self.width, self.height);
        for &i in &self.pixels {
            m.bits[i as usize] = true;
        }
        m
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)`.
    pub fn bbox(&self) -> Option<(usize, usize, usize, usize)> {
        let mut it = self.iter_xy();
        let (x, y) = it.next()?;
        Some(it.fold((x, y, x, y), |(x0, y0, x1, y1), (x, y)| {
            (x0.min(x), y0.min(y), x1.max(x), y1.max(y))
        }))
    }
}
