//! Image, mask and trimap containers plus the pixel-level primitives the rest
//! of the crate is built on: decoding, polygon fill, run-length coding and IoU.

use std::fmt;
use std::io::Cursor;

use image::{ColorType, ImageDecoder, ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rgb = [f64; 3];

/// Integer pixel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: usize,
    pub y: usize,
}

impl Point {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned pixel rectangle, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    /// Box spanning two corners given in any order.
    pub fn from_corners(a: Point, b: Point) -> Self {
        Self {
            x0: a.x.min(b.x),
            y0: a.y.min(b.y),
            x1: a.x.max(b.x),
            y1: a.y.max(b.y),
        }
    }

    pub fn bounding(points: &[Point]) -> Option<Self> {
        let first = points.first()?;
        let mut r = Self::from_corners(*first, *first);
        for p in &points[1..] {
            r.x0 = r.x0.min(p.x);
            r.y0 = r.y0.min(p.y);
            r.x1 = r.x1.max(p.x);
            r.y1 = r.y1.max(p.y);
        }
        Some(r)
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// True when the rectangle lies on the outer ring of pixels.
    pub fn on_border(&self, p: Point) -> bool {
        self.contains(p) && (p.x == self.x0 || p.x == self.x1 || p.y == self.y0 || p.y == self.y1)
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x0 <= self.x1 && self.y0 <= self.y1 && self.x1 < width && self.y1 < height
    }
}

/// RGB image with channels stored as reals in `[0, 255]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidDimensions { width, height });
        }
        if pixels
            .iter()
            .flatten()
            .any(|c| !c.is_finite() || *c < 0.0 || *c > 255.0)
        {
            return Err(Error::MalformedImage("channel outside [0, 255]".into()));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with a single color.
    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let pixels = bytes
            .chunks_exact(3)
            .map(|c| [c[0] as f64, c[1] as f64, c[2] as f64])
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Channels rounded and clamped to bytes, row-major RGB.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flatten()
            .map(|c| c.round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    /// Binary (P6) PPM encoding.
    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_rgb8());
        out
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.to_rgb8())
            .ok_or(Error::InvalidDimensions {
                width: self.width,
                height: self.height,
            })?;
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Io(e.to_string()))?;
        Ok(out.into_inner())
    }
}

fn reader(bytes: &[u8]) -> Result<ImageReader<Cursor<&[u8]>>> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::MalformedImage(e.to_string()))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => Ok(reader),
        Some(other) => Err(Error::UnsupportedFormat(format!("{other:?}"))),
        None => Err(Error::MalformedImage("unrecognized image signature".into())),
    }
}

/// Reads only the header and returns `(width, height)`.
pub fn probe_dimensions(bytes: &[u8]) -> Result<(usize, usize)> {
    let (w, h) = reader(bytes)?
        .into_dimensions()
        .map_err(|e| Error::MalformedImage(e.to_string()))?;
    Ok((w as usize, h as usize))
}

/// Decodes an 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) or a binary PPM.
/// Grayscale is replicated into three channels and alpha is dropped.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    let decoder = reader(bytes)?
        .into_decoder()
        .map_err(|e| Error::MalformedImage(e.to_string()))?;
    match decoder.color_type() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => {}
        other => return Err(Error::UnsupportedFormat(format!("{other:?}"))),
    }
    let dynamic =
        image::DynamicImage::from_decoder(decoder).map_err(|e| Error::MalformedImage(e.to_string()))?;
    let rgb = dynamic.to_rgb8();
    let (w, h) = rgb.dimensions();
    RasterImage::from_rgb8(w as usize, h as usize, rgb.as_raw())
}

/// Luma `0.299 R + 0.587 G + 0.114 B` per pixel, row-major.
pub fn to_grayscale(image: &RasterImage) -> Vec<f64> {
    image
        .pixels
        .iter()
        .map(|[r, g, b]| 0.299 * r + 0.587 * g + 0.114 * b)
        .collect()
}

/// Row-major boolean occupancy grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_rect(width: usize, height: usize, rect: PixelRect) -> Self {
        let mut m = Self::new(width, height);
        for y in rect.y0..=rect.y1.min(height.saturating_sub(1)) {
            for x in rect.x0..=rect.x1.min(width.saturating_sub(1)) {
                m.set(x, y, true);
            }
        }
        m
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

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| Point::new(i % w, i / w))
    }

    /// Tight bounding box of the set pixels.
    pub fn bounding_box(&self) -> Option<PixelRect> {
        let pts: Vec<Point> = self.points().collect();
        PixelRect::bounding(&pts)
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }

    /// 8-bit grayscale PNG, foreground 255 and background 0.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let raw: Vec<u8> = self.bits.iter().map(|b| if *b { 255 } else { 0 }).collect();
        let buf = image::GrayImage::from_raw(self.width as u32, self.height as u32, raw).ok_or(
            Error::InvalidDimensions {
                width: self.width,
                height: self.height,
            },
        )?;
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Io(e.to_string()))?;
        Ok(out.into_inner())
    }

    /// Reads a mask image; any pixel with luma above 127 is foreground.
    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes).map_err(|e| Error::MalformedImage(e.to_string()))?;
        let gray = img.to_luma8();
        let (w, h) = gray.dimensions();
        let bits = gray.as_raw().iter().map(|v| *v > 127).collect();
        Self::from_bits(w as usize, h as usize, bits)
    }
}

/// Per-pixel prior label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrimapLabel {
    DefiniteBg,
    DefiniteFg,
    ProbableBg,
    ProbableFg,
}

impl TrimapLabel {
    pub fn is_definite(self) -> bool {
        matches!(self, TrimapLabel::DefiniteBg | TrimapLabel::DefiniteFg)
    }

    /// Whether the label currently leans foreground.
    pub fn is_fg(self) -> bool {
        matches!(self, TrimapLabel::DefiniteFg | TrimapLabel::ProbableFg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trimap {
    width: usize,
    height: usize,
    labels: Vec<TrimapLabel>,
}

impl Trimap {
    pub fn new(width: usize, height: usize, fill: TrimapLabel) -> Self {
        Self {
            width,
            height,
            labels: vec![fill; width * height],
        }
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<TrimapLabel>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
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

    pub fn labels(&self) -> &[TrimapLabel] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> TrimapLabel {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: TrimapLabel) {
        self.labels[y * self.width + x] = label;
    }

    pub fn count(&self, label: TrimapLabel) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

/// Alternating zero/one run counts in row-major order, starting with zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLength {
    pub width: usize,
    pub height: usize,
    pub runs: Vec<usize>,
}

pub fn rle_encode(mask: &BinaryMask) -> RunLength {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0usize;
    for &b in &mask.bits {
        if b != current {
            runs.push(len);
            len = 0;
            current = b;
        }
        len += 1;
    }
    runs.push(len);
    RunLength {
        width: mask.width,
        height: mask.height,
        runs,
    }
}

pub fn rle_decode(rle: &RunLength) -> Result<BinaryMask> {
    let expected = rle.width * rle.height;
    let actual: usize = rle.runs.iter().sum();
    if actual != expected {
        return Err(Error::RunSumMismatch { expected, actual });
    }
    let mut bits = Vec::with_capacity(expected);
    for (i, &run) in rle.runs.iter().enumerate() {
        bits.extend(std::iter::repeat_n(i % 2 == 1, run));
    }
    BinaryMask::from_bits(rle.width, rle.height, bits)
}

impl fmt::Display for RunLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}:", self.width, self.height)?;
        for (i, r) in self.runs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for RunLength {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedRunLength(s.chars().take(64).collect());
        let (dims, runs) = s.split_once(':').ok_or_else(bad)?;
        let (w, h) = dims.split_once(',').ok_or_else(bad)?;
        let width = w.trim().parse().map_err(|_| bad())?;
        let height = h.trim().parse().map_err(|_| bad())?;
        let runs = if runs.trim().is_empty() {
            Vec::new()
        } else {
            runs.split(',')
                .map(|r| r.trim().parse().map_err(|_| bad()))
                .collect::<Result<Vec<usize>>>()?
        };
        Ok(RunLength {
            width,
            height,
            runs,
        })
    }
}

/// Even-odd scanline fill sampled at pixel centers `(x + 0.5, y + 0.5)`.
pub fn rasterize_polygon(vertices: &[(f64, f64)], width: usize, height: usize) -> Result<BinaryMask> {
    if vertices.len() < 3 {
        return Err(Error::DegeneratePolygon(vertices.len()));
    }
    if vertices.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::DegeneratePolygon(vertices.len()));
    }
    let mut mask = BinaryMask::new(width, height);
    let mut crossings = Vec::new();
    for y in 0..height {
        let yc = y as f64 + 0.5;
        crossings.clear();
        for i in 0..vertices.len() {
            let (x0, y0) = vertices[i];
            let (x1, y1) = vertices[(i + 1) % vertices.len()];
            if (y0 > yc) != (y1 > yc) {
                crossings.push(x0 + (yc - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        crossings.sort_by(f64::total_cmp);
        for span in crossings.chunks_exact(2) {
            // centers in [a, b)
            let start = (span[0] - 0.5).ceil().max(0.0);
            let end = (span[1] - 0.5).ceil().min(width as f64);
            if end <= start {
                continue;
            }
            for x in start as usize..end as usize {
                mask.set(x, y, true);
            }
        }
    }
    Ok(mask)
}

/// Intersection over union; two empty masks score 1.0.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.bits.iter().zip(&b.bits) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from_str(w: usize, h: usize, s: &str) -> BinaryMask {
        let bits = s.chars().filter(|c| !c.is_whitespace()).map(|c| c == '1').collect();
        BinaryMask::from_bits(w, h, bits).unwrap()
    }

    #[test]
    fn ppm_decodes_byte_for_byte() {
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend([255, 0, 0, 0, 0, 255]);
        let img = decode_image(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.pixels(), &[[255.0, 0.0, 0.0], [0.0, 0.0, 255.0]]);
    }

    #[test]
    fn grayscale_png_replicates_channels() {
        let gray = image::GrayImage::from_raw(1, 1, vec![7]).unwrap();
        let mut out = Cursor::new(Vec::new());
        gray.write_to(&mut out, ImageFormat::Png).unwrap();
        let img = decode_image(out.get_ref()).unwrap();
        assert_eq!(img.pixels(), &[[7.0, 7.0, 7.0]]);
    }

    #[test]
    fn truncated_png_is_malformed() {
        let img = RasterImage::filled(3, 3, [1.0, 2.0, 3.0]).unwrap();
        let png = img.encode_png().unwrap();
        for cut in [4, 12, 30] {
            assert!(matches!(decode_image(&png[..cut]), Err(Error::MalformedImage(_))));
        }
    }

    #[test]
    fn sixteen_bit_png_is_unsupported() {
        let buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(1, 1, vec![1000]).unwrap();
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png).unwrap();
        assert!(matches!(decode_image(out.get_ref()), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn rgba_png_drops_alpha() {
        let buf = image::RgbaImage::from_raw(1, 1, vec![10, 20, 30, 40]).unwrap();
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png).unwrap();
        assert_eq!(decode_image(out.get_ref()).unwrap().pixels(), &[[10.0, 20.0, 30.0]]);
    }

    #[test]
    fn probe_reads_header_only() {
        let png = RasterImage::filled(5, 2, [0.0; 3]).unwrap().encode_png().unwrap();
        assert_eq!(probe_dimensions(&png).unwrap(), (5, 2));
    }

    #[test]
    fn luma_weights() {
        let img = RasterImage::new(3, 1, vec![[255.0; 3], [255.0, 0.0, 0.0], [0.0; 3]]).unwrap();
        let g = to_grayscale(&img);
        assert!((g[0] - 255.0).abs() < 1e-9);
        assert!((g[1] - 76.245).abs() < 1e-9);
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn square_polygon_fills_three_by_three() {
        let m = rasterize_polygon(&[(1.0, 1.0), (4.0, 1.0), (4.0, 4.0), (1.0, 4.0)], 6, 6).unwrap();
        let expected = mask_from_str(
            6,
            6,
            "000000 011100 011100 011100 000000 000000",
        );
        assert_eq!(m, expected);
    }

    #[test]
    fn polygon_validation_and_clipping() {
        assert_eq!(
            rasterize_polygon(&[(0.0, 0.0), (1.0, 1.0)], 4, 4),
            Err(Error::DegeneratePolygon(2))
        );
        let outside = rasterize_polygon(&[(10.0, 10.0), (20.0, 10.0), (20.0, 20.0)], 5, 5).unwrap();
        assert!(outside.is_empty());
        let partial = rasterize_polygon(&[(-5.0, -5.0), (2.0, -5.0), (2.0, 2.0), (-5.0, 2.0)], 4, 4).unwrap();
        assert_eq!(partial, BinaryMask::from_rect(4, 4, PixelRect { x0: 0, y0: 0, x1: 1, y1: 1 }));
    }

    #[test]
    fn iou_examples() {
        let a = BinaryMask::from_rect(4, 4, PixelRect { x0: 0, y0: 0, x1: 1, y1: 1 });
        let b = BinaryMask::from_rect(4, 4, PixelRect { x0: 1, y0: 0, x1: 2, y1: 1 });
        let c = BinaryMask::from_rect(4, 4, PixelRect { x0: 2, y0: 2, x1: 3, y1: 3 });
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &c).unwrap(), 0.0);
        assert!((iou(&a, &b).unwrap() - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(iou(&BinaryMask::new(3, 3), &BinaryMask::new(3, 3)).unwrap(), 1.0);
        assert!(matches!(
            iou(&a, &BinaryMask::new(3, 4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rle_examples() {
        assert_eq!(rle_encode(&mask_from_str(4, 1, "0110")).runs, vec![1, 2, 1]);
        assert_eq!(rle_encode(&mask_from_str(2, 2, "11 11")).runs, vec![0, 4]);
        assert_eq!(rle_encode(&BinaryMask::new(2, 2)).runs, vec![4]);
        let bad = RunLength { width: 2, height: 2, runs: vec![2, 3] };
        assert_eq!(
            rle_decode(&bad),
            Err(Error::RunSumMismatch { expected: 4, actual: 5 })
        );
    }

    #[test]
    fn rle_token_round_trip() {
        let rle = rle_encode(&mask_from_str(4, 1, "0110"));
        let token = rle.to_string();
        assert_eq!(token, "4,1:1,2,1");
        assert_eq!(token.parse::<RunLength>().unwrap(), rle);
        assert!("4;1:1".parse::<RunLength>().is_err());
        assert!("4,1:1,x".parse::<RunLength>().is_err());
    }

    #[test]
    fn mask_png_is_gray_0_255() {
        let m = mask_from_str(3, 1, "101");
        let png = m.encode_png().unwrap();
        let img = image::load_from_memory(&png).unwrap();
        assert_eq!(img.color(), ColorType::L8);
        assert_eq!(img.to_luma8().as_raw(), &vec![255, 0, 255]);
        assert_eq!(BinaryMask::decode_png(&png).unwrap(), m);
    }
}
