//! Grayscale rasters and the PGM (P2/P5) codec.
//!
//! Only 8-bit files are accepted (`maxval <= 255`). Header comments are allowed
//! anywhere whitespace is.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("pgm parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("invalid image: {0}")]
    Invalid(String),
    #[error("crop {rect:?} exceeds {width}x{height} image")]
    Bounds {
        rect: CropRect,
        width: usize,
        height: usize,
    },
    #[error("pixel ({x},{y}) value {value} is not a multiple of scale {scale}")]
    Scale {
        x: usize,
        y: usize,
        value: u8,
        scale: u32,
    },
}

/// Row-major 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Invalid(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(ImageError::Invalid(format!(
                "{} pixels supplied for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Intensity at column `x`, row `y`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Sub-rectangle of an image: offset `(x0, y0)`, extent `w` x `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CropRect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl CropRect {
    pub fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Self { x0, y0, w, h }
    }

    pub fn full(img: &GrayImage) -> Self {
        Self::new(0, 0, img.width(), img.height())
    }

    /// `inner` expressed relative to this rectangle, mapped back to source coordinates.
    pub fn compose(&self, inner: &CropRect) -> CropRect {
        CropRect::new(self.x0 + inner.x0, self.y0 + inner.y0, inner.w, inner.h)
    }

    fn fits(&self, width: usize, height: usize) -> bool {
        self.w > 0
            && self.h > 0
            && self.x0.checked_add(self.w).is_some_and(|e| e <= width)
            && self.y0.checked_add(self.h).is_some_and(|e| e <= height)
    }
}

impl std::str::FromStr for CropRect {
    type Err = String;

    /// Parses `x0,y0,w,h`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("bad crop rectangle {s:?}: {e}"))?;
        match parts.as_slice() {
            [x0, y0, w, h] => Ok(CropRect::new(*x0, *y0, *w, *h)),
            _ => Err(format!("crop rectangle needs x0,y0,w,h, got {s:?}")),
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, reason: impl Into<String>) -> ImageError {
        ImageError::Parse {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn skip_ws_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64, ImageError> {
        self.skip_ws_and_comments();
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or_else(|| self.err(format!("{what} overflows")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(match self.bytes.get(self.pos) {
                None => self.err(format!("unexpected end of data, expected {what}")),
                Some(&b) => self.err(format!("expected {what}, found byte 0x{b:02x}")),
            });
        }
        Ok(value)
    }
}

/// Decodes a P2 (ASCII) or P5 (binary) graymap.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(cur.err("missing P2/P5 magic number")),
    };
    cur.pos = 2;
    match bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        None => return Err(cur.err("unexpected end of data after magic number")),
        Some(_) => return Err(cur.err("magic number must be followed by whitespace")),
    }

    let width = cur.number("width")?;
    let height = cur.number("height")?;
    cur.skip_ws_and_comments();
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.err(format!("dimensions must be positive, got {width}x{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(ImageError::Parse {
            offset: maxval_at,
            reason: format!("maxval {maxval} unsupported (must be 1..=255)"),
        });
    }
    let count = usize::try_from(width.saturating_mul(height))
        .map_err(|_| cur.err("image dimensions too large"))?;
    let (width, height) = (width as usize, height as usize);

    let mut pixels = Vec::with_capacity(count.min(bytes.len()));
    if binary {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(cur.err("expected single whitespace before binary raster")),
        }
        let end = cur.pos.saturating_add(count);
        if end > bytes.len() {
            return Err(ImageError::Parse {
                offset: bytes.len(),
                reason: format!(
                    "truncated raster: expected {count} bytes, found {}",
                    bytes.len() - cur.pos
                ),
            });
        }
        for (k, &b) in bytes[cur.pos..end].iter().enumerate() {
            if u64::from(b) > maxval {
                return Err(ImageError::Parse {
                    offset: cur.pos + k,
                    reason: format!("sample {b} exceeds maxval {maxval}"),
                });
            }
        }
        pixels.extend_from_slice(&bytes[cur.pos..end]);
    } else {
        for _ in 0..count {
            let at = {
                cur.skip_ws_and_comments();
                cur.pos
            };
            let v = cur.number("sample")?;
            if v > maxval {
                return Err(ImageError::Parse {
                    offset: at,
                    reason: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            pixels.push(v as u8);
        }
    }
    GrayImage::new(width, height, pixels)
}

/// Encodes with `maxval` 255, as P5 when `binary` is set and P2 otherwise.
pub fn write_pgm(img: &GrayImage, binary: bool) -> Vec<u8> {
    let magic = if binary { "P5" } else { "P2" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    if binary {
        out.extend_from_slice(&img.pixels);
    } else {
        for row in img.pixels.chunks(img.width) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    out
}

pub fn crop(img: &GrayImage, r: &CropRect) -> Result<GrayImage, ImageError> {
    if !r.fits(img.width, img.height) {
        return Err(ImageError::Bounds {
            rect: *r,
            width: img.width,
            height: img.height,
        });
    }
    let mut pixels = Vec::with_capacity(r.w * r.h);
    for y in r.y0..r.y0 + r.h {
        let row = y * img.width;
        pixels.extend_from_slice(&img.pixels[row + r.x0..row + r.x0 + r.w]);
    }
    GrayImage::new(r.w, r.h, pixels)
}

/// Integer disparity grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispMatrix {
    width: usize,
    height: usize,
    values: Vec<i64>,
}

impl DispMatrix {
    pub fn new(width: usize, height: usize, values: Vec<i64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(ImageError::Invalid(format!(
                "{} values for a {width}x{height} disparity matrix",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> i64 {
        self.values[y * self.width + x]
    }

    /// Drops the leftmost `cols` columns.
    pub fn skip_columns(&self, cols: usize) -> Result<Self, ImageError> {
        if cols >= self.width {
            return Err(ImageError::Invalid(format!(
                "cannot skip {cols} columns of a {}-wide matrix",
                self.width
            )));
        }
        let w = self.width - cols;
        let values = self
            .values
            .chunks(self.width)
            .flat_map(|row| row[cols..].iter().copied())
            .collect();
        Self::new(w, self.height, values)
    }

    /// Renders `value * scale` as an 8-bit raster.
    pub fn to_image(&self, scale: u32) -> Result<GrayImage, ImageError> {
        let pixels = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let scaled = v.checked_mul(i64::from(scale)).unwrap_or(i64::MAX);
                u8::try_from(scaled).map_err(|_| {
                    ImageError::Invalid(format!(
                        "disparity {v} at ({},{}) times scale {scale} does not fit in 8 bits",
                        k % self.width,
                        k / self.width
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        GrayImage::new(self.width, self.height, pixels)
    }
}

/// Converts a disparity raster stored as `disparity * scale` into disparities.
pub fn load_ground_truth(img: &GrayImage, scale: u32) -> Result<DispMatrix, ImageError> {
    if scale == 0 {
        return Err(ImageError::Invalid("ground-truth scale must be positive".into()));
    }
    let mut values = Vec::with_capacity(img.pixels.len());
    for (k, &p) in img.pixels.iter().enumerate() {
        if u32::from(p) % scale != 0 {
            return Err(ImageError::Scale {
                x: k % img.width,
                y: k / img.width,
                value: p,
                scale,
            });
        }
        values.push(i64::from(u32::from(p) / scale));
    }
    DispMatrix::new(img.width, img.height, values)
}
