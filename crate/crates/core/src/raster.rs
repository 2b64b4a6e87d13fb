use crate::error::{Error, Result};

/// Row-major 8-bit image buffer with 1 or 3 interleaved channels.
#[derive(Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl std::fmt::Debug for Raster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Raster")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

fn check_dims(width: u32, height: u32, channels: u8) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ShapeMismatch(format!(
            "raster dimensions must be positive, got {width}x{height}"
        )));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::ShapeMismatch(format!(
            "raster must have 1 or 3 channels, got {channels}"
        )));
    }
    Ok(())
}

impl Raster {
    pub fn new(width: u32, height: u32, channels: u8) -> Result<Self> {
        Self::filled(width, height, channels, 0)
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        check_dims(width, height, channels)?;
        let len = width as usize * height as usize * channels as usize;
        Ok(Self {
            width,
            height,
            channels,
            data: vec![value; len],
        })
    }

    pub fn from_vec(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, channels)?;
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "buffer of {} bytes does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds a raster by evaluating `f(x, y)` for every pixel.
    pub fn from_fn<const C: usize>(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> [u8; C],
    ) -> Result<Self> {
        let channels = u8::try_from(C).unwrap_or(0);
        check_dims(width, height, channels)?;
        let mut data = Vec::with_capacity(width as usize * height as usize * C);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels as usize]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        &mut self.data[o..o + c]
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u8) -> u8 {
        self.data[self.offset(x, y) + c as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: u8, v: u8) {
        let o = self.offset(x, y) + c as usize;
        self.data[o] = v;
    }

    /// Extracts one channel as a single-channel raster.
    pub fn channel(&self, c: u8) -> Result<Raster> {
        if c >= self.channels {
            return Err(Error::ShapeMismatch(format!(
                "channel {c} requested from {}-channel raster",
                self.channels
            )));
        }
        let data = self
            .data
            .chunks_exact(self.channels as usize)
            .map(|p| p[c as usize])
            .collect();
        Raster::from_vec(self.width, self.height, 1, data)
    }

    /// Interleaves three single-channel planes of equal size.
    pub fn stack3(planes: [&Raster; 3]) -> Result<Raster> {
        let (w, h) = planes[0].dims();
        for p in planes {
            if p.channels != 1 || p.dims() != (w, h) {
                return Err(Error::ShapeMismatch(
                    "stack3 needs three single-channel planes of equal size".into(),
                ));
            }
        }
        let mut data = Vec::with_capacity(w as usize * h as usize * 3);
        for i in 0..(w as usize * h as usize) {
            data.push(planes[0].data[i]);
            data.push(planes[1].data[i]);
            data.push(planes[2].data[i]);
        }
        Raster::from_vec(w, h, 3, data)
    }

    /// Copies the `width`x`height` window at (`x0`, `y0`); the window must lie inside.
    pub fn crop(&self, x0: u32, y0: u32, width: u32, height: u32) -> Result<Raster> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::ShapeMismatch(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let c = self.channels as usize;
        let mut data = Vec::with_capacity(width as usize * height as usize * c);
        for y in y0..y0 + height {
            let start = self.offset(x0, y);
            data.extend_from_slice(&self.data[start..start + width as usize * c]);
        }
        Raster::from_vec(width, height, self.channels, data)
    }

    pub fn require_channels(&self, channels: u8) -> Result<()> {
        if self.channels != channels {
            return Err(Error::ShapeMismatch(format!(
                "expected {channels}-channel raster, got {}",
                self.channels
            )));
        }
        Ok(())
    }
}
