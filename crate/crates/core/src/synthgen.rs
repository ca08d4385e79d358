//! Deterministic synthetic traffic-light crops with known generative factors.
//!
//! Each crop shows a dark housing with a single lit bulb on a flat background.
//! The factors (bulb size, background brightness, colour shade, blur, inlay)
//! are recorded alongside the pixels so latent dimensions can be checked
//! against the property that actually varied.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detect_eval::{Annotation, BoundingBox};
use crate::error::{Error, Result};
use crate::rng;

pub const BULB_RADIUS_RANGE: (f64, f64) = (0.05, 0.45);
pub const HUE_SHIFT_RANGE: (f64, f64) = (-0.1, 0.1);
const HOUSING_LEVEL: f64 = 0.01;
const UNLIT_LEVEL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorClass {
    Red,
    Yellow,
    Green,
}

impl ColorClass {
    pub const ALL: [ColorClass; 3] = [ColorClass::Red, ColorClass::Yellow, ColorClass::Green];

    pub fn as_str(self) -> &'static str {
        match self {
            ColorClass::Red => "red",
            ColorClass::Yellow => "yellow",
            ColorClass::Green => "green",
        }
    }

    fn base_rgb(self) -> [f64; 3] {
        match self {
            ColorClass::Red => [1.0, 0.06, 0.02],
            ColorClass::Yellow => [1.0, 0.85, 0.02],
            ColorClass::Green => [0.02, 1.0, 0.25],
        }
    }
}

impl std::fmt::Display for ColorClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ColorClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "red" => Ok(ColorClass::Red),
            "yellow" => Ok(ColorClass::Yellow),
            "green" => Ok(ColorClass::Green),
            other => Err(Error::invalid("color_class", format!("unknown colour `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Inlay {
    Circle,
    /// Left-pointing arrow.
    Arrow,
}

impl Inlay {
    pub fn as_str(self) -> &'static str {
        match self {
            Inlay::Circle => "circle",
            Inlay::Arrow => "arrow",
        }
    }
}

/// Generative factors of one crop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropFactors {
    pub color_class: ColorClass,
    /// Bulb radius as a fraction of the crop height.
    pub bulb_radius: f64,
    pub background_brightness: f64,
    /// Gaussian blur standard deviation in pixels.
    pub blur_sigma: f64,
    pub inlay: Inlay,
    /// Hue rotation of the bulb colour, in turns.
    pub hue_shift: f64,
}

impl CropFactors {
    pub fn validate(&self) -> Result<()> {
        check_range("bulb_radius", self.bulb_radius, BULB_RADIUS_RANGE)?;
        check_range("background_brightness", self.background_brightness, (0.0, 1.0))?;
        check_range("hue_shift", self.hue_shift, HUE_SHIFT_RANGE)?;
        if !(self.blur_sigma.is_finite() && self.blur_sigma >= 0.0) {
            return Err(Error::invalid("blur_sigma", format!("{} must be >= 0", self.blur_sigma)));
        }
        Ok(())
    }
}

fn check_range(field: &'static str, v: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo..=hi).contains(&v) {
        return Err(Error::invalid(field, format!("{v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// RGB image with channel intensities in [0, 1], stored row-major as H×W×3.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCrop {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageCrop {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width < 4 || height < 4 {
            return Err(Error::invalid("size", format!("{width}x{height}: both sides must be >= 4")));
        }
        if pixels.len() != width * height * 3 {
            return Err(Error::shape(width * height * 3, pixels.len()));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid("pixels", format!("intensity {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Flattened H×W×3 intensities.
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn mean_intensity(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    /// Binary PPM (P6, 8-bit, value = round(255·v)).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|v| (v * 255.0).round() as u8));
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::invalid("ppm", "truncated header"));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        if fields[0] != "P6" {
            return Err(Error::invalid("ppm", format!("magic `{}` is not P6", fields[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::invalid("ppm", format!("bad header field `{s}`")))
        };
        let (w, h, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval != 255 {
            return Err(Error::invalid("ppm", format!("maxval {maxval} unsupported")));
        }
        let raster = bytes.get(pos..).unwrap_or(&[]);
        if raster.len() != w * h * 3 {
            return Err(Error::shape(w * h * 3, raster.len()));
        }
        Self::new(w, h, raster.iter().map(|&b| b as f64 / 255.0).collect())
    }

    /// Concatenates equally sized tiles left to right.
    pub fn hstack(tiles: &[ImageCrop]) -> Result<ImageCrop> {
        let first = tiles
            .first()
            .ok_or_else(|| Error::InsufficientData("no tiles to stack".into()))?;
        let (w, h) = (first.width, first.height);
        if tiles.iter().any(|t| t.width != w || t.height != h) {
            return Err(Error::shape(format!("{w}x{h} tiles"), "mixed tile sizes"));
        }
        let total_w = w * tiles.len();
        let mut pixels = vec![0.0; total_w * h * 3];
        for (k, t) in tiles.iter().enumerate() {
            for y in 0..h {
                let dst = (y * total_w + k * w) * 3;
                let src = y * w * 3;
                pixels[dst..dst + w * 3].copy_from_slice(&t.pixels[src..src + w * 3]);
            }
        }
        Ok(ImageCrop {
            width: total_w,
            height: h,
            pixels,
        })
    }
}

pub fn render_crop(factors: &CropFactors, size: usize) -> Result<ImageCrop> {
    factors.validate()?;
    if size < 8 {
        return Err(Error::invalid("size", format!("{size} must be >= 8")));
    }
    let s = size as f64;
    let r = factors.bulb_radius * s;
    let (cx, cy) = (0.5 * s, 0.5 * s);
    let half_w = (0.2 * s).max(r + 0.1 * s).min(0.5 * s);
    let (top, bottom) = (0.05 * s, 0.95 * s);
    let lit = shift_hue(factors.color_class.base_rgb(), factors.hue_shift);
    let bg = factors.background_brightness;

    let mut pixels = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        let py = y as f64 + 0.5;
        for x in 0..size {
            let px = x as f64 + 0.5;
            let (dx, dy) = (px - cx, py - cy);
            let rgb = if dx * dx + dy * dy <= r * r {
                if inlay_contains(factors.inlay, dx, dy, r) {
                    lit
                } else {
                    lit.map(|c| UNLIT_LEVEL * c)
                }
            } else if dx.abs() <= half_w && (top..=bottom).contains(&py) {
                [HOUSING_LEVEL; 3]
            } else {
                [bg; 3]
            };
            pixels.extend_from_slice(&rgb);
        }
    }
    gaussian_blur(&mut pixels, size, size, factors.blur_sigma);
    pixels.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    ImageCrop::new(size, size, pixels)
}

/// Whether the offset (dx, dy) from the bulb centre lies on the lit inlay.
fn inlay_contains(inlay: Inlay, dx: f64, dy: f64, r: f64) -> bool {
    match inlay {
        Inlay::Circle => true,
        Inlay::Arrow => {
            // Isoceles triangle: tip at (-0.8r, 0), base at x = 0.6r spanning ±0.7r.
            let (tip, base, half) = (-0.8 * r, 0.6 * r, 0.7 * r);
            if dx < tip || dx > base {
                return false;
            }
            let t = (dx - tip) / (base - tip);
            dy.abs() <= half * t
        }
    }
}

fn shift_hue(rgb: [f64; 3], shift: f64) -> [f64; 3] {
    if shift == 0.0 {
        return rgb;
    }
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta == 0.0 {
        return rgb;
    }
    let sat = delta / max;
    let mut hue = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    } / 6.0;
    hue = (hue + shift).rem_euclid(1.0);

    let h6 = hue * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let (p, q, t) = (
        max * (1.0 - sat),
        max * (1.0 - sat * f),
        max * (1.0 - sat * (1.0 - f)),
    );
    match sector as u8 % 6 {
        0 => [max, t, p],
        1 => [q, max, p],
        2 => [p, max, t],
        3 => [p, q, max],
        4 => [t, p, max],
        _ => [max, p, q],
    }
}

/// Reflect-101 index into [0, n).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m < n as isize { m } else { period - m }) as usize
}

/// Separable Gaussian blur with kernel radius ⌈3σ⌉ and reflect padding.
pub(crate) fn gaussian_blur(pixels: &mut [f64], width: usize, height: usize, sigma: f64) {
    if sigma <= 0.0 {
        return;
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let mut tmp = vec![0.0; pixels.len()];
    for y in 0..height {
        for x in 0..width {
            for c in 0..3 {
                let mut acc = 0.0;
                for (ki, w) in kernel.iter().enumerate() {
                    let sx = reflect(x as isize + ki as isize - radius, width);
                    acc += w * pixels[(y * width + sx) * 3 + c];
                }
                tmp[(y * width + x) * 3 + c] = acc;
            }
        }
    }
    for y in 0..height {
        for x in 0..width {
            for c in 0..3 {
                let mut acc = 0.0;
                for (ki, w) in kernel.iter().enumerate() {
                    let sy = reflect(y as isize + ki as isize - radius, height);
                    acc += w * tmp[(sy * width + x) * 3 + c];
                }
                pixels[(y * width + x) * 3 + c] = acc;
            }
        }
    }
}

/// Sampling ranges for each factor. Every range must sit inside the factor's
/// valid range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorRanges {
    pub bulb_radius: (f64, f64),
    pub background_brightness: (f64, f64),
    pub blur_sigma: (f64, f64),
    pub hue_shift: (f64, f64),
    /// Probability that a crop carries the arrow inlay.
    pub arrow_probability: f64,
}

impl Default for FactorRanges {
    fn default() -> Self {
        Self {
            bulb_radius: (0.15, 0.35),
            background_brightness: (0.0, 1.0),
            blur_sigma: (0.0, 0.6),
            hue_shift: (-0.05, 0.05),
            arrow_probability: 0.25,
        }
    }
}

impl FactorRanges {
    pub fn validate(&self) -> Result<()> {
        let within = |field: &'static str, (lo, hi): (f64, f64), (vlo, vhi): (f64, f64)| {
            if !(lo <= hi && lo >= vlo && hi <= vhi) {
                return Err(Error::invalid(
                    field,
                    format!("range [{lo}, {hi}] must be ordered and inside [{vlo}, {vhi}]"),
                ));
            }
            Ok(())
        };
        within("bulb_radius", self.bulb_radius, BULB_RADIUS_RANGE)?;
        within("background_brightness", self.background_brightness, (0.0, 1.0))?;
        within("blur_sigma", self.blur_sigma, (0.0, f64::MAX))?;
        within("hue_shift", self.hue_shift, HUE_SHIFT_RANGE)?;
        within("arrow_probability", (self.arrow_probability, self.arrow_probability), (0.0, 1.0))?;
        Ok(())
    }

    fn sample(&self, color_class: ColorClass, rng: &mut impl Rng) -> CropFactors {
        let mut uniform = |(lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
        let bulb_radius = uniform(self.bulb_radius);
        let background_brightness = uniform(self.background_brightness);
        let blur_sigma = uniform(self.blur_sigma);
        let hue_shift = uniform(self.hue_shift);
        let inlay = if rng.random::<f64>() < self.arrow_probability {
            Inlay::Arrow
        } else {
            Inlay::Circle
        };
        CropFactors {
            color_class,
            bulb_radius,
            background_brightness,
            blur_sigma,
            inlay,
            hue_shift,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_per_class: usize,
    /// Crop edge length in pixels.
    pub size: usize,
    #[serde(default)]
    pub factor_ranges: FactorRanges,
    #[serde(default)]
    pub exclude: Vec<ColorClass>,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n_per_class: 100,
            size: 16,
            factor_ranges: FactorRanges::default(),
            exclude: Vec::new(),
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class < 1 {
            return Err(Error::invalid("n_per_class", "must be >= 1"));
        }
        if self.size < 8 {
            return Err(Error::invalid("size", format!("{} must be >= 8", self.size)));
        }
        self.factor_ranges.validate()
    }
}

/// Crops, their factors and their full-frame annotations, index-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub ids: Vec<String>,
    pub crops: Vec<ImageCrop>,
    pub factors: Vec<CropFactors>,
    pub annotations: Vec<Annotation>,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.crops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crops.is_empty()
    }
}

/// Generates `n_per_class` crops per colour class, class-blocked in
/// red/yellow/green order.
///
/// Each crop draws from its own stream keyed by its position in the full
/// (unfiltered) dataset, so excluding a class leaves the other crops unchanged.
/// Every crop is also placed at a random position inside a scene four times
/// its size, and the resulting box becomes its annotation.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut out = SyntheticDataset {
        ids: Vec::new(),
        crops: Vec::new(),
        factors: Vec::new(),
        annotations: Vec::new(),
    };
    let scene = (4 * spec.size) as f64;
    for (ci, class) in ColorClass::ALL.into_iter().enumerate() {
        if spec.exclude.contains(&class) {
            continue;
        }
        for j in 0..spec.n_per_class {
            let key = (ci * spec.n_per_class + j) as u64;
            let mut rng = rng::stream(spec.seed, &[0xC0_0F, key]);
            let factors = spec.factor_ranges.sample(class, &mut rng);
            let crop = render_crop(&factors, spec.size)?;
            let x0 = rng.random_range(0..=3 * spec.size) as f64;
            let y0 = rng.random_range(0..=3 * spec.size) as f64;
            let size = spec.size as f64;
            let id = format!("{:06}", out.ids.len());
            out.annotations.push(Annotation {
                image_id: id.clone(),
                object_id: id.clone(),
                bbox: BoundingBox::new(x0 / scene, y0 / scene, (x0 + size) / scene, (y0 + size) / scene)?,
            });
            out.ids.push(id);
            out.crops.push(crop);
            out.factors.push(factors);
        }
    }
    Ok(out)
}
