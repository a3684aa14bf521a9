//! In-memory rasters: 8-bit grayscale images, RGB images, binary masks.
//!
//! All rasters are row-major with the origin at the top-left corner;
//! coordinates are `(x, y)` = (column, row). Masks store `{0, 1}` per pixel
//! internally and are serialized as `{0, 255}` by the io module.

use crate::error::{Error, Result};

fn checked_len(width: u32, height: u32, channels: usize) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster(format!(
            "dimensions must be >= 1, got {width}x{height}"
        )));
    }
    (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::InvalidRaster(format!("dimensions overflow: {width}x{height}")))
}

/// 8-bit single-channel image.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    /// All-zero image of the given dimensions.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        let len = checked_len(width, height, 1)?;
        Ok(Self { width, height, data: vec![0; len] })
    }

    /// Wraps an existing row-major buffer; `data.len()` must equal
    /// `width * height`.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let len = checked_len(width, height, 1)?;
        if data.len() != len {
            return Err(Error::InvalidRaster(format!(
                "buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    /// Row-major pixel buffer.
    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }
}

/// 8-bit RGB image, interleaved row-major (`r g b r g b ...`).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ColorImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ColorImage {
    /// Wraps an interleaved RGB buffer; `data.len()` must equal
    /// `width * height * 3`.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let len = checked_len(width, height, 3)?;
        if data.len() != len {
            return Err(Error::InvalidRaster(format!(
                "buffer length {} does not match {width}x{height} rgb",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        debug_assert!(x < self.width && y < self.height);
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Interleaved RGB buffer.
    pub fn pixels(&self) -> &[u8] {
        &self.data
    }
}

/// Binary mask; pixel values are `0` (background) or `1` (white).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl BinaryMask {
    /// All-background mask of the given dimensions.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        let len = checked_len(width, height, 1)?;
        Ok(Self { width, height, data: vec![0; len] })
    }

    /// Wraps a `{0, 1}` buffer; any other value is rejected.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let len = checked_len(width, height, 1)?;
        if data.len() != len {
            return Err(Error::InvalidRaster(format!(
                "buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::InvalidRaster(
                "mask buffer contains values other than {0, 1}".into(),
            ));
        }
        Ok(Self { width, height, data })
    }

    /// Interprets a grayscale image as a mask. Accepts images whose pixels
    /// are all in `{0, 255}` or all in `{0, 1}` (nonzero becomes white);
    /// anything else is a type mismatch.
    pub fn from_gray(img: &GrayImage) -> Result<Self> {
        let px = img.pixels();
        let ok_255 = px.iter().all(|&v| v == 0 || v == 255);
        let ok_1 = px.iter().all(|&v| v <= 1);
        if !ok_255 && !ok_1 {
            return Err(Error::NotBinary { path: None });
        }
        let data = px.iter().map(|&v| u8::from(v != 0)).collect();
        Ok(Self { width: img.width(), height: img.height(), data })
    }

    /// Renders the mask as a grayscale image with white = 255.
    pub fn to_gray(&self) -> GrayImage {
        let data = self.data.iter().map(|&v| if v != 0 { 255 } else { 0 }).collect();
        GrayImage { width: self.width, height: self.height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn is_white(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize] != 0
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, white: bool) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize] = u8::from(white);
    }

    /// Row-major `{0, 1}` buffer.
    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    pub fn count_white(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }
}

/// Binarizes a grayscale image: white where intensity is strictly greater
/// than `t`. With `t = 255` the result is all background.
pub fn threshold(img: &GrayImage, t: u8) -> BinaryMask {
    let data = img.pixels().iter().map(|&v| u8::from(v > t)).collect();
    BinaryMask { width: img.width(), height: img.height(), data }
}

/// Extracts the green channel, the highest-contrast channel of fundus
/// photographs.
pub fn green_channel(img: &ColorImage) -> GrayImage {
    let data = img.pixels().chunks_exact(3).map(|rgb| rgb[1]).collect();
    GrayImage { width: img.width(), height: img.height(), data }
}
