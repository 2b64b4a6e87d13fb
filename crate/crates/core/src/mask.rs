use crate::error::{Error, Result};

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0 + 1
    }
}

/// One bit per pixel, row-major, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryMask {}x{} ({} set)", self.width, self.height, self.count())?;
        if self.width <= 64 && self.height <= 64 {
            for y in 0..self.height {
                let row: String = (0..self.width)
                    .map(|x| if self.get(x, y) { '#' } else { '.' })
                    .collect();
                writeln!(f, "{row}")?;
            }
        }
        Ok(())
    }
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        let mut m = Self::new(width, height);
        for w in &mut m.words {
            *w = u64::MAX;
        }
        m.clear_tail();
        m
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    /// Row-major flags, `true` = foreground.
    pub fn from_bools(width: u32, height: u32, bits: &[bool]) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::ShapeMismatch(format!(
                "{} flags for a {width}x{height} mask",
                bits.len()
            )));
        }
        let mut m = Self::new(width, height);
        for (i, &b) in bits.iter().enumerate() {
            if b {
                m.words[i / 64] |= 1 << (i % 64);
            }
        }
        Ok(m)
    }

    fn clear_tail(&mut self) {
        let n = self.width as usize * self.height as usize;
        if n % 64 != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (n % 64)) - 1;
            }
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        let i = self.index(x, y);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Like [`get`](Self::get) but treats out-of-canvas coordinates as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64 && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let i = self.index(x, y);
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch(format!(
                "mask {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    pub fn intersection_count(&self, other: &Self) -> Result<u64> {
        self.same_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum())
    }

    pub fn union_count(&self, other: &Self) -> Result<u64> {
        self.same_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as u64)
            .sum())
    }

    pub fn union_with(&mut self, other: &Self) -> Result<()> {
        self.same_dims(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    /// Clears every pixel that is set in `other`.
    pub fn subtract(&mut self, other: &Self) -> Result<()> {
        self.same_dims(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
        Ok(())
    }

    pub fn bbox(&self) -> Option<BBox> {
        let w = self.width as usize;
        let mut bb: Option<BBox> = None;
        let mut add = |i: usize| {
            let (x, y) = ((i % w) as u32, (i / w) as u32);
            bb = Some(match bb {
                None => BBox { x0: x, y0: y, x1: x, y1: y },
                Some(b) => BBox {
                    x0: b.x0.min(x),
                    y0: b.y0.min(y),
                    x1: b.x1.max(x),
                    y1: b.y1.max(y),
                },
            });
        };
        for (wi, &word) in self.words.iter().enumerate().filter(|(_, w)| **w != 0) {
            let lo = wi * 64 + word.trailing_zeros() as usize;
            let hi = wi * 64 + 63 - word.leading_zeros() as usize;
            if lo / w == hi / w {
                add(lo);
                add(hi);
            } else {
                // the word wraps a row end, so its extreme columns may be anywhere
                let mut bits = word;
                while bits != 0 {
                    add(wi * 64 + bits.trailing_zeros() as usize);
                    bits &= bits - 1;
                }
            }
        }
        bb
    }

    /// Copies a window that must lie inside the mask.
    pub fn crop(&self, x0: u32, y0: u32, width: u32, height: u32) -> Result<BinaryMask> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::ShapeMismatch(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        Ok(BinaryMask::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y)))
    }

    /// Iterates foreground coordinates in raster order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let i = wi * 64 + tz;
                Some(((i % w) as u32, (i / w) as u32))
            })
        })
    }

    /// Serialises to one byte per pixel: 255 foreground, 0 background.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.width as usize * self.height as usize;
        (0..n)
            .map(|i| if self.words[i / 64] >> (i % 64) & 1 == 1 { 255 } else { 0 })
            .collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        let n = self.width as usize * self.height as usize;
        (0..n).map(|i| self.words[i / 64] >> (i % 64) & 1 == 1).collect()
    }
}

/// Intersection over union of two same-sized masks. Two empty masks score 0.
pub fn mask_iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let union = a.union_count(b)?;
    if union == 0 {
        return Ok(0.0);
    }
    let inter = a.intersection_count(b)?;
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(w: u32, h: u32, x0: u32, y0: u32, s: u32) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| x >= x0 && x < x0 + s && y >= y0 && y < y0 + s)
    }

    #[test]
    fn iou_examples() {
        let a = square(8, 8, 0, 0, 4);
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        let far = square(8, 8, 4, 4, 4);
        assert_eq!(mask_iou(&a, &far).unwrap(), 0.0);
        let b = square(8, 8, 2, 2, 4);
        assert!((mask_iou(&a, &b).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        let e = BinaryMask::new(8, 8);
        assert_eq!(mask_iou(&e, &e).unwrap(), 0.0);
        assert!(matches!(
            mask_iou(&a, &BinaryMask::new(8, 9)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn full_and_tail_bits() {
        let m = BinaryMask::full(5, 3);
        assert_eq!(m.count(), 15);
        assert_eq!(m.to_bytes(), vec![255; 15]);
        assert_eq!(m.iter_ones().count(), 15);
    }

    #[test]
    fn bbox_and_crop() {
        let m = square(10, 10, 3, 4, 3);
        let bb = m.bbox().unwrap();
        assert_eq!(bb, BBox { x0: 3, y0: 4, x1: 5, y1: 6 });
        let c = m.crop(bb.x0, bb.y0, bb.width(), bb.height()).unwrap();
        assert_eq!(c.count(), 9);
        assert!(BinaryMask::new(3, 3).bbox().is_none());
    }

    fn arb_pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
        (1u32..20, 1u32..20).prop_flat_map(|(w, h)| {
            let n = (w * h) as usize;
            (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(any::<bool>(), n),
            )
                .prop_map(move |(a, b)| {
                    (
                        BinaryMask::from_bools(w, h, &a).unwrap(),
                        BinaryMask::from_bools(w, h, &b).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn bbox_matches_pixel_scan((a, _) in arb_pair()) {
            let ones: Vec<(u32, u32)> = (0..a.height())
                .flat_map(|y| (0..a.width()).map(move |x| (x, y)))
                .filter(|&(x, y)| a.get(x, y))
                .collect();
            let want = (!ones.is_empty()).then(|| BBox {
                x0: ones.iter().map(|p| p.0).min().unwrap(),
                y0: ones.iter().map(|p| p.1).min().unwrap(),
                x1: ones.iter().map(|p| p.0).max().unwrap(),
                y1: ones.iter().map(|p| p.1).max().unwrap(),
            });
            prop_assert_eq!(a.bbox(), want);
        }

        #[test]
        fn iou_symmetric_and_bounded((a, b) in arb_pair()) {
            let ab = mask_iou(&a, &b).unwrap();
            let ba = mask_iou(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            if !a.is_empty() {
                prop_assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
            }
        }

        #[test]
        fn iter_ones_matches_get((a, _b) in arb_pair()) {
            let ones: Vec<_> = a.iter_ones().collect();
            let mut expected = Vec::new();
            for y in 0..a.height() {
                for x in 0..a.width() {
                    if a.get(x, y) {
                        expected.push((x, y));
                    }
                }
            }
            prop_assert_eq!(ones, expected);
        }
    }
}
