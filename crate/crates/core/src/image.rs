use crate::error::{Error, Result};

/// Number of color channels of every image.
pub const CHANNELS: usize = 3;

/// An 8-bit RGB image stored channel-planar: all red bytes row-major, then
/// green, then blue.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        let expected = width * height * CHANNELS;
        if pixels.len() != expected {
            return Err(Error::LengthMismatch { expected, found: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let plane = width * height;
        let mut pixels = Vec::with_capacity(plane * CHANNELS);
        for c in rgb {
            pixels.extend(std::iter::repeat(c).take(plane));
        }
        Self { width, height, pixels }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0, 0, 0])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        c * self.width * self.height + y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        let i = self.index(x, y, c);
        self.pixels[i] = v;
    }

    pub fn plane(&self, c: usize) -> &[u8] {
        let n = self.width * self.height;
        &self.pixels[c * n..(c + 1) * n]
    }

    /// Mean of each channel in `[0, 255]`.
    pub fn mean_rgb(&self) -> [f64; 3] {
        let n = (self.width * self.height) as f64;
        std::array::from_fn(|c| self.plane(c).iter().map(|&v| v as u64).sum::<u64>() as f64 / n)
    }

    pub fn same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(self.width, self.height, other.width, other.height));
        }
        Ok(())
    }
}

/// Rounds half-to-even and clamps into a byte.
#[inline]
pub fn to_byte(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round_ties_even() as u8
}
