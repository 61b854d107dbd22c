//! Linear-reflectance RGB images and their 8-bit sRGB export.

use std::io::Write;

use ::image::codecs::png::PngEncoder;
use ::image::{ExtendedColorType, ImageEncoder};

use crate::color::{apply_filter, ColorRgb, FilterKind};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<ColorRgb>,
}

impl CompositeImage {
    pub fn new(width: usize, height: usize, fill: ColorRgb) -> Self {
        CompositeImage {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn white(width: usize, height: usize) -> Self {
        Self::new(width, height, ColorRgb::WHITE)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> ColorRgb {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: ColorRgb) {
        self.pixels[y * self.width + x] = c;
    }

    /// Average of `factor x factor` pixel blocks.
    pub fn box_downsample(&self, factor: usize) -> CompositeImage {
        let w = self.width / factor;
        let h = self.height / factor;
        let mut out = CompositeImage::white(w, h);
        let norm = 1.0 / (factor * factor) as f64;
        for y in 0..h {
            for x in 0..w {
                let mut acc = [0.0; 3];
                for dy in 0..factor {
                    for dx in 0..factor {
                        let c = self.get(x * factor + dx, y * factor + dy).channels();
                        for k in 0..3 {
                            acc[k] += c[k];
                        }
                    }
                }
                out.set(x, y, ColorRgb::new(acc[0] * norm, acc[1] * norm, acc[2] * norm));
            }
        }
        out
    }

    pub fn mean_abs_diff(&self, other: &CompositeImage) -> f64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let total: f64 = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a.r - b.r).abs() + (a.g - b.g).abs() + (a.b - b.b).abs())
            .sum();
        total / (3 * self.pixels.len()).max(1) as f64
    }

    /// 8-bit sRGB bytes, row-major RGB.
    pub fn to_srgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|c| c.channels().map(encode_srgb))
            .collect()
    }

    pub fn write_png<W: Write>(&self, writer: W) -> Result<()> {
        let bytes = self.to_srgb8();
        PngEncoder::new(writer).write_image(
            &bytes,
            self.width as u32,
            self.height as u32,
            ExtendedColorType::Rgb8,
        )?;
        Ok(())
    }

    pub fn png_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_png(&mut buf)?;
        Ok(buf)
    }

    /// Decodes an 8-bit sRGB PNG back into linear reflectance.
    pub fn from_png_bytes(bytes: &[u8]) -> Result<CompositeImage> {
        let img = ::image::load_from_memory(bytes)?.to_rgb8();
        let (w, h) = img.dimensions();
        let pixels = img
            .pixels()
            .map(|p| ColorRgb::new(decode_srgb(p[0]), decode_srgb(p[1]), decode_srgb(p[2])))
            .collect();
        Ok(CompositeImage {
            width: w as usize,
            height: h as usize,
            pixels,
        })
    }
}

/// Packs ids into 24-bit RGB (`r` most significant) and encodes them as a
/// PNG without any transfer curve.
pub fn id_map_png(width: usize, height: usize, ids: &[u32]) -> Result<Vec<u8>> {
    if ids.len() != width * height {
        return Err(invalid(format!(
            "{} ids for a {width}x{height} image",
            ids.len()
        )));
    }
    if let Some(big) = ids.iter().find(|&&id| id >= 1 << 24) {
        return Err(invalid(format!("id {big} does not fit in 24 bits")));
    }
    let bytes: Vec<u8> = ids
        .iter()
        .flat_map(|&id| [(id >> 16) as u8, (id >> 8) as u8, id as u8])
        .collect();
    let mut buf = Vec::new();
    PngEncoder::new(&mut buf).write_image(
        &bytes,
        width as u32,
        height as u32,
        ExtendedColorType::Rgb8,
    )?;
    Ok(buf)
}

/// Inverse of [`id_map_png`].
pub fn decode_id_map_png(bytes: &[u8]) -> Result<(usize, usize, Vec<u32>)> {
    let img = ::image::load_from_memory(bytes)?.to_rgb8();
    let (w, h) = img.dimensions();
    let ids = img
        .pixels()
        .map(|p| (p[0] as u32) << 16 | (p[1] as u32) << 8 | p[2] as u32)
        .collect();
    Ok((w as usize, h as usize, ids))
}

pub fn encode_srgb(linear: f64) -> u8 {
    let l = linear.clamp(0.0, 1.0);
    let s = if l <= 0.003_130_8 {
        12.92 * l
    } else {
        1.055 * l.powf(1.0 / 2.4) - 0.055
    };
    (s * 255.0).round() as u8
}

pub fn decode_srgb(v: u8) -> f64 {
    let s = v as f64 / 255.0;
    if s <= 0.040_45 {
        s / 12.92
    } else {
        ((s + 0.055) / 1.055).powf(2.4)
    }
}

pub fn filter_image(image: &CompositeImage, filter: FilterKind) -> CompositeImage {
    CompositeImage {
        width: image.width,
        height: image.height,
        pixels: image.pixels.iter().map(|c| apply_filter(*c, filter)).collect(),
    }
}

/// Rescales all ink densities so the densest channel in the image reaches at
/// most `target_max_density`. Per-pixel ink ratios are preserved.
pub fn brighten(image: &CompositeImage, target_max_density: f64) -> Result<CompositeImage> {
    if !(target_max_density > 0.0 && target_max_density <= 1.0) {
        return Err(invalid(format!(
            "brighten target {target_max_density} outside (0, 1]"
        )));
    }
    let max_ink = image
        .pixels
        .iter()
        .flat_map(|c| c.ink())
        .fold(0.0f64, f64::max);
    if max_ink <= target_max_density {
        return Ok(image.clone());
    }
    let k = target_max_density / max_ink;
    let pixels = image
        .pixels
        .iter()
        .map(|c| {
            let ink = c.ink();
            ColorRgb::new(1.0 - ink[0] * k, 1.0 - ink[1] * k, 1.0 - ink[2] * k)
        })
        .collect();
    Ok(CompositeImage {
        width: image.width,
        height: image.height,
        pixels,
    })
}

/// Nearest of {cyan, magenta, yellow, white, black}; used to compare renders
/// by perceived ink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HueClass {
    Cyan,
    Magenta,
    Yellow,
    White,
    Black,
}

pub fn classify_hue(c: &ColorRgb) -> HueClass {
    let candidates = [
        (HueClass::Cyan, [0.0, 1.0, 1.0]),
        (HueClass::Magenta, [1.0, 0.0, 1.0]),
        (HueClass::Yellow, [1.0, 1.0, 0.0]),
        (HueClass::White, [1.0, 1.0, 1.0]),
        (HueClass::Black, [0.0, 0.0, 0.0]),
    ];
    let ch = c.channels();
    candidates
        .iter()
        .map(|(class, ref_c)| {
            let d: f64 = (0..3).map(|k| (ch[k] - ref_c[k]).powi(2)).sum();
            (*class, d)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}
