//! File i/o: raster images and 16-bit PGM score maps.
//!
//! Readable inputs: PNG, binary PGM/PPM, TIFF, GIF, and JPEG in 8/16-bit
//! grayscale or RGB(A); alpha channels are dropped (the public fundus
//! datasets ship as TIFF and GIF). Outputs are always PNG or PGM. 16-bit
//! sources are reduced to 8 bits by integer division by 257
//! (65535/257 = 255 exactly). Masks are serialized as `{0, 255}` grayscale
//! files. Score maps persist as 16-bit binary PGM (maxval 65535) so the
//! counts survive a stage boundary losslessly; counts above 65535 saturate
//! in the file (the in-memory representation is u32 and unaffected).

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::connectivity::ScoreMap;
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ColorImage, GrayImage};

/// A decoded image: single-channel or RGB.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LoadedImage {
    Gray(GrayImage),
    Color(ColorImage),
}

impl LoadedImage {
    /// Reduces to a single channel: grayscale inputs pass through
    /// unchanged, color inputs contribute their green channel (the
    /// highest-contrast channel of fundus photographs).
    pub fn into_gray(self) -> GrayImage {
        match self {
            LoadedImage::Gray(g) => g,
            LoadedImage::Color(c) => crate::raster::green_channel(&c),
        }
    }

    pub fn dimensions(&self) -> (u32, u32) {
        match self {
            LoadedImage::Gray(g) => g.dimensions(),
            LoadedImage::Color(c) => c.dimensions(),
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn decode_err(path: &Path, err: image::ImageError) -> Error {
    Error::Decode { path: path.to_path_buf(), reason: err.to_string() }
}

/// Loads a PNG or PGM/PPM file. 16-bit samples are divided by 257.
pub fn load_image(path: impl AsRef<Path>) -> Result<LoadedImage> {
    let path = path.as_ref();
    let dynimg = image::ImageReader::open(path)
        .map_err(|e| io_err(path, e))?
        .decode()
        .map_err(|e| decode_err(path, e))?;
    let (w, h) = (dynimg.width(), dynimg.height());
    let narrow = |v: u16| (v / 257) as u8;
    let drop_alpha = |data: Vec<u8>, stride: usize| -> Vec<u8> {
        data.chunks_exact(stride).flat_map(|px| px[..stride - 1].to_vec()).collect()
    };
    match dynimg {
        image::DynamicImage::ImageLuma8(buf) => {
            Ok(LoadedImage::Gray(GrayImage::from_raw(w, h, buf.into_raw())?))
        }
        image::DynamicImage::ImageRgb8(buf) => {
            Ok(LoadedImage::Color(ColorImage::from_raw(w, h, buf.into_raw())?))
        }
        image::DynamicImage::ImageLumaA8(buf) => {
            let data = drop_alpha(buf.into_raw(), 2);
            Ok(LoadedImage::Gray(GrayImage::from_raw(w, h, data)?))
        }
        image::DynamicImage::ImageRgba8(buf) => {
            let data = drop_alpha(buf.into_raw(), 4);
            Ok(LoadedImage::Color(ColorImage::from_raw(w, h, data)?))
        }
        image::DynamicImage::ImageLuma16(buf) => {
            let data = buf.into_raw().into_iter().map(narrow).collect();
            Ok(LoadedImage::Gray(GrayImage::from_raw(w, h, data)?))
        }
        image::DynamicImage::ImageRgb16(buf) => {
            let data = buf.into_raw().into_iter().map(narrow).collect();
            Ok(LoadedImage::Color(ColorImage::from_raw(w, h, data)?))
        }
        image::DynamicImage::ImageRgba16(buf) => {
            let gray: Vec<u8> = buf.into_raw().into_iter().map(narrow).collect();
            Ok(LoadedImage::Color(ColorImage::from_raw(w, h, drop_alpha(gray, 4))?))
        }
        other => Err(Error::Unsupported {
            path: path.to_path_buf(),
            detail: format!("pixel format {:?} (expected 8/16-bit grayscale or RGB)", other.color()),
        }),
    }
}

/// Loads a grayscale raster; color inputs are reduced to their green
/// channel.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    Ok(load_image(path)?.into_gray())
}

/// Loads a binary mask from a `{0, 255}` (or `{0, 1}`) grayscale file.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    match load_image(path)? {
        LoadedImage::Gray(g) => BinaryMask::from_gray(&g).map_err(|e| match e {
            Error::NotBinary { .. } => Error::NotBinary { path: Some(path.to_path_buf()) },
            other => other,
        }),
        LoadedImage::Color(_) => Err(Error::NotBinary { path: Some(path.to_path_buf()) }),
    }
}

/// Saves a grayscale image; the format follows the extension
/// (`.png` or `.pgm`).
pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("png") => image::save_buffer(
            path,
            img.pixels(),
            img.width(),
            img.height(),
            image::ExtendedColorType::L8,
        )
        .map_err(|e| decode_err(path, e)),
        Some("pgm") => {
            let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
            out.extend_from_slice(img.pixels());
            fs::write(path, out).map_err(|e| io_err(path, e))
        }
        _ => Err(Error::Unsupported {
            path: path.to_path_buf(),
            detail: "writable extensions are .png and .pgm".into(),
        }),
    }
}

/// Saves a mask as a `{0, 255}` grayscale file.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    save_gray(&mask.to_gray(), path)
}

/// Saves a score map as 16-bit binary PGM (maxval 65535, big-endian);
/// counts above 65535 saturate.
pub fn save_scores(scores: &ScoreMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out =
        format!("P5\n{} {}\n65535\n", scores.width(), scores.height()).into_bytes();
    out.reserve(scores.data().len() * 2);
    for &s in scores.data() {
        let v = s.min(65535) as u16;
        out.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Loads a score map written by [`save_scores`]: a PGM with maxval above
/// 255. Plain 8-bit images are rejected so that score maps and rasters
/// cannot be confused.
pub fn load_scores(path: impl AsRef<Path>) -> Result<ScoreMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let (w, h, maxval, data_off) = parse_pgm_header(&bytes)
        .ok_or_else(|| Error::Decode { path: path.to_path_buf(), reason: "not a binary PGM".into() })?;
    if maxval <= 255 {
        return Err(Error::Unsupported {
            path: path.to_path_buf(),
            detail: "expected a 16-bit score map (PGM maxval > 255)".into(),
        });
    }
    let n = w as usize * h as usize;
    let payload = &bytes[data_off..];
    if payload.len() < n * 2 {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: format!("truncated: need {} sample bytes, have {}", n * 2, payload.len()),
        });
    }
    let data: Vec<u32> = payload[..n * 2]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as u32)
        .collect();
    ScoreMap::from_raw(w, h, data)
}

/// True if the file starts with a PGM header whose maxval is above 255,
/// i.e. a persisted score map.
pub fn is_score_file(path: impl AsRef<Path>) -> bool {
    let mut head = [0u8; 64];
    let n = match fs::File::open(path.as_ref()).and_then(|mut f| f.read(&mut head)) {
        Ok(n) => n,
        Err(_) => return false,
    };
    matches!(parse_pgm_header(&head[..n]), Some((_, _, maxval, _)) if maxval > 255)
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

/// Parses a binary PGM (`P5`) header: returns (width, height, maxval,
/// offset of the first sample byte). Handles `#` comments and arbitrary
/// whitespace between tokens, per the PNM specification.
fn parse_pgm_header(bytes: &[u8]) -> Option<(u32, u32, u32, usize)> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return None;
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos)? {
                b'#' => {
                    while *bytes.get(pos)? != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| c.is_ascii_digit()) {
            pos += 1;
        }
        if pos == start {
            return None;
        }
        *field = std::str::from_utf8(&bytes[start..pos]).ok()?.parse().ok()?;
    }
    // Exactly one whitespace byte separates the maxval from the samples.
    if !bytes.get(pos)?.is_ascii_whitespace() {
        return None;
    }
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return None;
    }
    Some((w, h, maxval, pos + 1))
}
