//! Frame sequences: loading from image directories or `.y4m` files,
//! validation, and the grayscale/crop/range conversions every measure uses.

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgproc::Plane;

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueRange {
    /// Samples in [0, 1].
    Unit,
    /// Samples in [0, 255].
    Byte,
}

impl ValueRange {
    pub fn max(self) -> f64 {
        match self {
            ValueRange::Unit => 1.0,
            ValueRange::Byte => 255.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    Rgb,
    Gray,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Rgb => 3,
            ColorSpace::Gray => 1,
        }
    }
}

/// One H×W×C frame, samples interleaved row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::InvalidSequence(format!(
                "frame buffer holds {} samples, {}x{}x{} expected",
                data.len(),
                height,
                width,
                channels
            )));
        }
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
            return Err(Error::InvalidSequence(format!(
                "unsupported frame shape {height}x{width}x{channels}"
            )));
        }
        Ok(Frame {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_plane(plane: &Plane) -> Self {
        Frame {
            width: plane.width(),
            height: plane.height(),
            channels: 1,
            data: plane.data().to_vec(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    /// Luminance plane (the frame itself when already single-channel).
    pub fn luma(&self) -> Plane {
        if self.channels == 1 {
            return Plane::new(self.width, self.height, self.data.clone());
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2])
            .collect();
        Plane::new(self.width, self.height, data)
    }

    pub fn crop(&self, top: usize, left: usize, h: usize, w: usize) -> Frame {
        let c = self.channels;
        let mut data = Vec::with_capacity(h * w * c);
        for y in top..top + h {
            let start = (y * self.width + left) * c;
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Frame {
            width: w,
            height: h,
            channels: c,
            data,
        }
    }

    /// Pixel row `y`, `width * channels` samples.
    pub fn row(&self, y: usize) -> &[f64] {
        let n = self.width * self.channels;
        &self.data[y * n..(y + 1) * n]
    }

    fn scaled(&self, factor: f64) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

/// An ordered, validated, immutable list of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    value_range: ValueRange,
    color: ColorSpace,
    name: String,
}

impl FrameSequence {
    pub fn new(
        frames: Vec<Frame>,
        value_range: ValueRange,
        color: ColorSpace,
        name: impl Into<String>,
    ) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidSequence("a sequence needs at least one frame".into()))?;
        if first.channels != color.channels() {
            return Err(Error::InvalidSequence(format!(
                "{} channels do not match color {:?}",
                first.channels, color
            )));
        }
        let shape = first.shape();
        let max = value_range.max();
        for (i, f) in frames.iter().enumerate() {
            if f.shape() != shape {
                return Err(Error::InvalidSequence(format!(
                    "frame {i} is {:?}, frame 0 is {:?}",
                    f.shape(),
                    shape
                )));
            }
            if let Some(v) = f.data.iter().find(|v| !(0.0..=max).contains(*v)) {
                return Err(Error::InvalidSequence(format!(
                    "frame {i} sample {v} outside [0, {max}]"
                )));
            }
        }
        Ok(FrameSequence {
            frames,
            value_range,
            color,
            name: name.into(),
        })
    }

    /// Single-channel sequence from planes.
    pub fn from_planes(planes: &[Plane], value_range: ValueRange, name: &str) -> Result<Self> {
        let frames = planes.iter().map(Frame::from_plane).collect();
        FrameSequence::new(frames, value_range, ColorSpace::Gray, name)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn channels(&self) -> usize {
        self.frames[0].channels
    }

    pub fn value_range(&self) -> ValueRange {
        self.value_range
    }

    pub fn color(&self) -> ColorSpace {
        self.color
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// New sequence from a subrange of frames.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::FrameRangeOutOfBounds {
                start: range.start,
                end: range.end,
                len: self.len(),
            });
        }
        Ok(FrameSequence {
            frames: self.frames[range].to_vec(),
            ..self.clone_meta()
        })
    }

    /// Reorder frames; `order` must be a permutation (or selection) of indices.
    pub fn reordered(&self, order: &[usize]) -> Self {
        FrameSequence {
            frames: order.iter().map(|&i| self.frames[i].clone()).collect(),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Self {
        FrameSequence {
            frames: Vec::new(),
            value_range: self.value_range,
            color: self.color,
            name: self.name.clone(),
        }
    }

    /// Same content expressed in `range`.
    pub fn to_range(&self, range: ValueRange) -> Self {
        if range == self.value_range {
            return self.clone();
        }
        let factor = range.max() / self.value_range.max();
        FrameSequence {
            frames: self.frames.iter().map(|f| f.scaled(factor)).collect(),
            value_range: range,
            ..self.clone_meta()
        }
    }

    /// BT.601 luminance; identity on gray input.
    pub fn to_gray(&self) -> Self {
        if self.color == ColorSpace::Gray {
            return self.clone();
        }
        FrameSequence {
            frames: self
                .frames
                .iter()
                .map(|f| Frame::from_plane(&f.luma()))
                .collect(),
            color: ColorSpace::Gray,
            ..self.clone_meta()
        }
    }

    /// Crop every frame to the centered `h`×`w` window.
    pub fn center_crop(&self, h: usize, w: usize) -> Result<Self> {
        let (top, left) = center_offset(self.height(), self.width(), h, w)?;
        Ok(FrameSequence {
            frames: self.frames.iter().map(|f| f.crop(top, left, h, w)).collect(),
            ..self.clone_meta()
        })
    }

    /// Luminance planes in the requested range.
    pub fn luma_planes(&self, range: ValueRange) -> Vec<Plane> {
        let factor = range.max() / self.value_range.max();
        self.frames
            .par_iter()
            .map(|f| {
                let p = f.luma();
                if factor == 1.0 {
                    p
                } else {
                    p.map(|v| v * factor)
                }
            })
            .collect()
    }
}

/// Top-left offset of a centered `h`×`w` window.
pub fn center_offset(height: usize, width: usize, h: usize, w: usize) -> Result<(usize, usize)> {
    if h > height || w > width || h == 0 || w == 0 {
        return Err(Error::CropTooLarge {
            crop_h: h,
            crop_w: w,
            frame_h: height,
            frame_w: width,
        });
    }
    Ok(((height - h) / 2, (width - w) / 2))
}

/// Aligned reference/test sequences for full-reference measures.
#[derive(Debug, Clone)]
pub struct SequencePair {
    reference: FrameSequence,
    test: FrameSequence,
}

impl SequencePair {
    pub fn new(reference: FrameSequence, test: FrameSequence) -> Result<Self> {
        let describe = |s: &FrameSequence| {
            format!(
                "{} frames of {}x{}x{} ({:?})",
                s.len(),
                s.height(),
                s.width(),
                s.channels(),
                s.value_range()
            )
        };
        if reference.len() != test.len()
            || reference.height() != test.height()
            || reference.width() != test.width()
            || reference.channels() != test.channels()
            || reference.value_range() != test.value_range()
        {
            return Err(Error::SequenceMismatch(format!(
                "reference has {}, test has {}",
                describe(&reference),
                describe(&test)
            )));
        }
        Ok(SequencePair { reference, test })
    }

    pub fn reference(&self) -> &FrameSequence {
        &self.reference
    }

    pub fn test(&self) -> &FrameSequence {
        &self.test
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }
}

/// `printf`-style frame filename pattern with one decimal field, e.g. `%08d.png`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePattern {
    prefix: String,
    width: usize,
    suffix: String,
}

impl Default for FramePattern {
    fn default() -> Self {
        FramePattern {
            prefix: String::new(),
            width: 8,
            suffix: ".png".into(),
        }
    }
}

impl FramePattern {
    pub fn parse(pattern: &str) -> Result<Self> {
        let bad = || Error::BadPattern(pattern.to_string());
        let start = pattern.find('%').ok_or_else(bad)?;
        let rest = &pattern[start + 1..];
        let d = rest.find('d').ok_or_else(bad)?;
        let spec = &rest[..d];
        let width = if spec.is_empty() {
            0
        } else if let Some(digits) = spec.strip_prefix('0') {
            digits.parse().map_err(|_| bad())?
        } else {
            spec.parse().map_err(|_| bad())?
        };
        let suffix = &rest[d + 1..];
        if suffix.contains('%') {
            return Err(bad());
        }
        Ok(FramePattern {
            prefix: pattern[..start].to_string(),
            width,
            suffix: suffix.to_string(),
        })
    }

    pub fn format(&self, index: usize) -> String {
        format!(
            "{}{:0width$}{}",
            self.prefix,
            index,
            self.suffix,
            width = self.width
        )
    }

    /// Frame index encoded in `name`, if it matches.
    pub fn matches(&self, name: &str) -> Option<u64> {
        let digits = name
            .strip_prefix(self.prefix.as_str())?
            .strip_suffix(self.suffix.as_str())?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if digits.len() < self.width {
            return None;
        }
        digits.parse().ok()
    }
}

/// Frames whose stem is a decimal index and extension is PNG or BMP.
fn default_match(name: &str) -> Option<u64> {
    let (stem, ext) = name.rsplit_once('.')?;
    let ext = ext.to_ascii_lowercase();
    if ext != "png" && ext != "bmp" {
        return None;
    }
    if stem.is_empty() || !stem.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    stem.parse().ok()
}

/// Load a directory of numbered frames, or a `.y4m` file.
///
/// Without a pattern any `<digits>.png` / `<digits>.bmp` file is accepted.
/// Frames are ordered by numeric index.
pub fn load_sequence(path: &Path, pattern: Option<&FramePattern>) -> Result<FrameSequence> {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if path.is_file() {
        return read_y4m(path).map(|s| s.with_name(name));
    }
    let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut indexed: Vec<(u64, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let file_name = entry.file_name();
        let Some(file_name) = file_name.to_str() else {
            continue;
        };
        let index = match pattern {
            Some(p) => p.matches(file_name),
            None => default_match(file_name),
        };
        if let Some(index) = index {
            indexed.push((index, entry.path()));
        }
    }
    if indexed.is_empty() {
        return Err(Error::NoFramesFound(path.to_path_buf()));
    }
    indexed.sort();
    for w in indexed.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateFrameIndex {
                index: w[1].0,
                file: w[1].1.clone(),
            });
        }
    }

    let decoded: Vec<Result<(Frame, ColorSpace)>> =
        indexed.par_iter().map(|(_, p)| decode_image(p)).collect();
    let mut frames = Vec::with_capacity(decoded.len());
    let mut color = None;
    for (res, (_, file)) in decoded.into_iter().zip(&indexed) {
        let (frame, c) = res?;
        if let (Some(first), Some(c0)) = (frames.first(), color) {
            let first: &Frame = first;
            if frame.shape() != first.shape() || c != c0 {
                return Err(Error::InconsistentDimensions {
                    file: file.clone(),
                    expected: format!("{}x{}x{}", first.height, first.width, first.channels),
                    found: format!("{}x{}x{}", frame.height, frame.width, frame.channels),
                });
            }
        }
        color.get_or_insert(c);
        frames.push(frame);
    }
    FrameSequence::new(frames, ValueRange::Byte, color.unwrap(), name)
}

fn decode_image(path: &Path) -> Result<(Frame, ColorSpace)> {
    let err = |reason: String| Error::DecodeError {
        file: path.to_path_buf(),
        reason,
    };
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| err(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    use image::DynamicImage::*;
    let (data, color): (Vec<u8>, _) = match img {
        ImageLuma8(b) => (b.into_raw(), ColorSpace::Gray),
        ImageLumaA8(_) => (img.to_luma8().into_raw(), ColorSpace::Gray),
        ImageRgb8(b) => (b.into_raw(), ColorSpace::Rgb),
        ImageRgba8(_) => (img.to_rgb8().into_raw(), ColorSpace::Rgb),
        other => return Err(err(format!("unsupported pixel format {:?}", other.color()))),
    };
    let frame = Frame::new(
        w,
        h,
        color.channels(),
        data.into_iter().map(f64::from).collect(),
    )?;
    Ok((frame, color))
}

/// Quantize a sample to 8 bits.
#[inline]
pub fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Write every frame as an 8-bit PNG named by `pattern`.
pub fn save_sequence(seq: &FrameSequence, dir: &Path, pattern: &FramePattern) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let seq = seq.to_range(ValueRange::Byte);
    seq.frames()
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let path = dir.join(pattern.format(i));
            write_frame_png(f, &path)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Write one byte-range frame as PNG.
pub fn write_frame_png(frame: &Frame, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = frame.data.iter().map(|&v| to_u8(v)).collect();
    let color = if frame.channels == 1 {
        image::ExtendedColorType::L8
    } else {
        image::ExtendedColorType::Rgb8
    };
    image::save_buffer(
        path,
        &bytes,
        frame.width as u32,
        frame.height as u32,
        color,
    )
    .map_err(|e| Error::DecodeError {
        file: path.to_path_buf(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chroma {
    C420,
    C444,
}

/// Read an 8-bit 4:2:0 or 4:4:4 YUV4MPEG2 stream, converting to RGB with
/// limited-range BT.601.
pub fn read_y4m(path: &Path) -> Result<FrameSequence> {
    let err = |reason: &str| Error::DecodeError {
        file: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = Vec::new();
    reader
        .read_until(b'\n', &mut header)
        .map_err(|e| Error::io(path, e))?;
    let header = String::from_utf8_lossy(&header);
    let mut tokens = header.trim_end().split(' ');
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(err("missing YUV4MPEG2 signature"));
    }
    let (mut width, mut height, mut chroma) = (0usize, 0usize, Chroma::C420);
    for tok in tokens {
        let (tag, value) = tok.split_at(tok.len().min(1));
        match tag {
            "W" => width = value.parse().map_err(|_| err("bad width"))?,
            "H" => height = value.parse().map_err(|_| err("bad height"))?,
            "C" => {
                chroma = match value {
                    "420" | "420jpeg" | "420paldv" | "420mpeg2" => Chroma::C420,
                    "444" => Chroma::C444,
                    other => return Err(err(&format!("unsupported colorspace C{other}"))),
                }
            }
            _ => {}
        }
    }
    if width == 0 || height == 0 {
        return Err(err("missing frame size"));
    }
    let (cw, ch) = match chroma {
        Chroma::C420 => (width.div_ceil(2), height.div_ceil(2)),
        Chroma::C444 => (width, height),
    };
    let luma_len = width * height;
    let chroma_len = cw * ch;
    let mut buf = vec![0u8; luma_len + 2 * chroma_len];
    let mut frames = Vec::new();
    loop {
        let mut line = Vec::new();
        let n = reader
            .read_until(b'\n', &mut line)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        if !line.starts_with(b"FRAME") {
            return Err(err("expected FRAME marker"));
        }
        reader
            .read_exact(&mut buf)
            .map_err(|_| err("truncated frame"))?;
        let (y, uv) = buf.split_at(luma_len);
        let (u, v) = uv.split_at(chroma_len);
        let mut data = Vec::with_capacity(luma_len * 3);
        for row in 0..height {
            for col in 0..width {
                let ci = match chroma {
                    Chroma::C420 => (row / 2) * cw + col / 2,
                    Chroma::C444 => row * cw + col,
                };
                let rgb = yuv_to_rgb(y[row * width + col], u[ci], v[ci]);
                data.extend_from_slice(&rgb);
            }
        }
        frames.push(Frame::new(width, height, 3, data)?);
    }
    if frames.is_empty() {
        return Err(Error::NoFramesFound(path.to_path_buf()));
    }
    FrameSequence::new(frames, ValueRange::Byte, ColorSpace::Rgb, "")
}

fn yuv_to_rgb(y: u8, u: u8, v: u8) -> [f64; 3] {
    let c = 1.164_383_561_643_835_6 * (f64::from(y) - 16.0);
    let d = f64::from(u) - 128.0;
    let e = f64::from(v) - 128.0;
    let r = c + 1.596_026_785_714_285_7 * e;
    let g = c - 0.391_762_290_094_914_3 * d - 0.812_967_647_237_771 * e;
    let b = c + 2.017_232_142_857_143 * d;
    [r, g, b].map(|x| x.round().clamp(0.0, 255.0))
}
