//! File formats: 8-bit binary PGM frames (PNG with the `png` feature),
//! Middlebury `.flo` flow files, raw dynamic-image sidecars and classifier
//! model files. Every multi-byte value is little-endian.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::FcClassifier;
use crate::image::{FlowField, GrayImage};
use crate::rankpool::DynamicImage;

/// `"PIEH"` read as a little-endian f32.
pub const FLO_MAGIC: f32 = 202021.25;
pub const SIDECAR_MAGIC: [u8; 4] = *b"FPDI";
pub const MODEL_MAGIC: [u8; 4] = *b"FPFC";
pub const MODEL_VERSION: u32 = 1;

/// Extensions accepted as frames, lower case.
pub fn frame_extensions() -> &'static [&'static str] {
    if cfg!(feature = "png") {
        &["pgm", "png"]
    } else {
        &["pgm"]
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Quantizes `[0, 1]` intensities to bytes (clamped, rounded).
pub fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

// ---------------------------------------------------------------- PGM

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format("pgm", "truncated header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::format("pgm", "non-ASCII header"))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::format("pgm", format!("bad {what} '{tok}'")))
    }
}

/// Parses a binary (P5) 8-bit graymap; intensities are scaled to `[0, 1]`.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    if cur.token()? != "P5" {
        return Err(Error::format("pgm", "not a binary graymap (P5)"));
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(
            "pgm",
            format!("only maxval 255 is supported, got {maxval}"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(Error::format("pgm", "missing raster"));
    }
    let raster = &bytes[cur.pos + 1..];
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::format("pgm", "dimensions overflow"))?;
    if raster.len() < n {
        return Err(Error::format(
            "pgm",
            format!("raster has {} bytes, expected {n}", raster.len()),
        ));
    }
    let data = raster[..n].iter().map(|&b| b as f64 / 255.0).collect();
    GrayImage::new(width, height, data)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.as_slice().iter().map(|&v| to_u8(v)));
    out
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    decode_pgm(&read_bytes(path)?).map_err(|e| with_path(e, path))
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    write_bytes(path, &encode_pgm(img))
}

fn with_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Format { kind, reason } => Error::Format {
            kind,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    }
}

// ---------------------------------------------------------------- PNG

#[cfg(feature = "png")]
pub fn read_png(path: &Path) -> Result<GrayImage> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(std::io::BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format("png", format!("{}: {e}", path.display())))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format("png", format!("{}: {e}", path.display())))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let stride = info.color_type.samples();
    let bytes = &buf[..info.buffer_size()];
    let data = match info.color_type {
        png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => bytes
            .chunks(stride)
            .map(|px| px[0] as f64 / 255.0)
            .collect(),
        png::ColorType::Rgb | png::ColorType::Rgba => bytes
            .chunks(stride)
            .map(|px| (0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64) / 255.0)
            .collect(),
        png::ColorType::Indexed => {
            return Err(Error::format("png", "palette images are not supported"))
        }
    };
    GrayImage::new(w, h, data)
}

#[cfg(feature = "png")]
pub fn write_png(path: &Path, img: &GrayImage) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(
        std::io::BufWriter::new(file),
        img.width() as u32,
        img.height() as u32,
    );
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let bytes: Vec<u8> = img.as_slice().iter().map(|&v| to_u8(v)).collect();
    let io_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(source) => Error::io(path, source),
        other => Error::format("png", other.to_string()),
    };
    let mut writer = enc.write_header().map_err(io_err)?;
    writer.write_image_data(&bytes).map_err(io_err)?;
    writer.finish().map_err(io_err)
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

/// Reads one frame, dispatching on the file extension.
pub fn read_frame(path: &Path) -> Result<GrayImage> {
    match extension(path).as_deref() {
        Some("pgm") => read_pgm(path),
        #[cfg(feature = "png")]
        Some("png") => read_png(path),
        _ => Err(Error::format(
            "frame",
            format!("{}: unsupported frame format", path.display()),
        )),
    }
}

pub fn write_frame(path: &Path, img: &GrayImage) -> Result<()> {
    match extension(path).as_deref() {
        Some("pgm") => write_pgm(path, img),
        #[cfg(feature = "png")]
        Some("png") => write_png(path, img),
        _ => Err(Error::format(
            "frame",
            format!("{}: unsupported frame format", path.display()),
        )),
    }
}

// ---------------------------------------------------------------- frame directories

#[derive(Debug, PartialEq, Eq)]
enum Chunk<'a> {
    Text(&'a str),
    Number(&'a str),
}

fn chunks(name: &str) -> Vec<Chunk<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = name.as_bytes();
    while start < bytes.len() {
        let digit = bytes[start].is_ascii_digit();
        let mut end = start;
        while end < bytes.len() && bytes[end].is_ascii_digit() == digit {
            end += 1;
        }
        let s = &name[start..end];
        out.push(if digit {
            Chunk::Number(s)
        } else {
            Chunk::Text(s)
        });
        start = end;
    }
    out
}

fn cmp_chunk(a: &Chunk, b: &Chunk) -> Ordering {
    match (a, b) {
        (Chunk::Number(x), Chunk::Number(y)) => {
            let (x, y) = (x.trim_start_matches('0'), y.trim_start_matches('0'));
            x.len().cmp(&y.len()).then_with(|| x.cmp(y))
        }
        (Chunk::Number(_), Chunk::Text(_)) => Ordering::Less,
        (Chunk::Text(_), Chunk::Number(_)) => Ordering::Greater,
        (Chunk::Text(x), Chunk::Text(y)) => x.cmp(y),
    }
}

/// Orders names so that digit runs compare numerically: `f2` before `f10`.
/// Ties (e.g. `f02` vs `f2`) fall back to plain byte order, so the result
/// never depends on the input order.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let o = cmp_chunk(x, y);
        if o != Ordering::Equal {
            return o;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

/// Frame files of a directory in natural numeric order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let exts = frame_extensions();
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && extension(&path).is_some_and(|e| exts.contains(&e.as_str())) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| {
        let name = |p: &PathBuf| p.file_name().map(|n| n.to_string_lossy().into_owned());
        natural_cmp(&name(a).unwrap_or_default(), &name(b).unwrap_or_default())
    });
    Ok(paths)
}

/// Reads every frame of a directory; all frames must share one size.
pub fn read_frame_dir(dir: &Path) -> Result<(Vec<PathBuf>, Vec<GrayImage>)> {
    let paths = list_frames(dir)?;
    if paths.is_empty() {
        return Err(Error::input(format!(
            "no frames found in {}",
            dir.display()
        )));
    }
    let mut frames: Vec<GrayImage> = Vec::with_capacity(paths.len());
    for path in &paths {
        let img = read_frame(path)?;
        if let Some(first) = frames.first() {
            if first.dims() != img.dims() {
                return Err(Error::input(format!(
                    "{} is {}x{} but earlier frames are {}x{}",
                    path.display(),
                    img.width(),
                    img.height(),
                    first.width(),
                    first.height()
                )));
            }
        }
        frames.push(img);
    }
    Ok((paths, frames))
}

// ---------------------------------------------------------------- little-endian helpers

struct Reader<'a> {
    kind: &'static str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(kind: &'static str, bytes: &'a [u8]) -> Self {
        Self {
            kind,
            bytes,
            pos: 0,
        }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::format(self.kind, "unexpected end of data"))?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    /// Fails unless exactly `len` bytes remain.
    fn expect_remaining(&self, len: usize) -> Result<()> {
        let rest = self.bytes.len() - self.pos;
        if rest != len {
            return Err(Error::format(
                self.kind,
                format!("payload is {rest} bytes, expected {len}"),
            ));
        }
        Ok(())
    }
}

fn positive_dim(kind: &'static str, v: i64, what: &str) -> Result<usize> {
    if v <= 0 {
        return Err(Error::format(
            kind,
            format!("{what} must be positive, got {v}"),
        ));
    }
    Ok(v as usize)
}

// ---------------------------------------------------------------- .flo

/// Middlebury layout: magic, i32 width, i32 height, interleaved f32 (u1, u2)
/// row-major. Components are stored as f32.
pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let (w, h) = flow.dims();
    let mut out = Vec::with_capacity(12 + w * h * 8);
    out.extend(FLO_MAGIC.to_le_bytes());
    out.extend((w as i32).to_le_bytes());
    out.extend((h as i32).to_le_bytes());
    for (a, b) in flow.u1().iter().zip(flow.u2()) {
        out.extend((*a as f32).to_le_bytes());
        out.extend((*b as f32).to_le_bytes());
    }
    out
}

pub fn decode_flo(bytes: &[u8]) -> Result<FlowField> {
    let mut r = Reader::new("flo", bytes);
    let magic = r.f32()?;
    if magic.to_bits() != FLO_MAGIC.to_bits() {
        return Err(Error::format("flo", "bad magic number"));
    }
    let w = positive_dim("flo", r.i32()? as i64, "width")?;
    let h = positive_dim("flo", r.i32()? as i64, "height")?;
    r.expect_remaining(w * h * 8)?;
    let (mut u1, mut u2) = (Vec::with_capacity(w * h), Vec::with_capacity(w * h));
    for _ in 0..w * h {
        u1.push(r.f32()? as f64);
        u2.push(r.f32()? as f64);
    }
    FlowField::new(w, h, u1, u2).map_err(|e| Error::format("flo", e.to_string()))
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    decode_flo(&read_bytes(path)?).map_err(|e| with_path(e, path))
}

pub fn write_flo(path: &Path, flow: &FlowField) -> Result<()> {
    write_bytes(path, &encode_flo(flow))
}

// ---------------------------------------------------------------- dynamic-image sidecar

/// Magic, u32 width, u32 height, u32 channel count, then the raw
/// (unnormalized) values as f32, channel-major and row-major within a channel.
pub fn encode_sidecar(img: &DynamicImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + img.values().len() * 4);
    out.extend(SIDECAR_MAGIC);
    for v in [img.width(), img.height(), img.channels()] {
        out.extend((v as u32).to_le_bytes());
    }
    for v in img.values() {
        out.extend((*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_sidecar(bytes: &[u8]) -> Result<DynamicImage> {
    let mut r = Reader::new("sidecar", bytes);
    if r.take::<4>()? != SIDECAR_MAGIC {
        return Err(Error::format("sidecar", "bad magic"));
    }
    let w = positive_dim("sidecar", r.u32()? as i64, "width")?;
    let h = positive_dim("sidecar", r.u32()? as i64, "height")?;
    let c = positive_dim("sidecar", r.u32()? as i64, "channel count")?;
    let n = w * h * c;
    r.expect_remaining(n * 4)?;
    let values = (0..n)
        .map(|_| r.f32().map(f64::from))
        .collect::<Result<Vec<_>>>()?;
    DynamicImage::new(w, h, c, values).map_err(|e| Error::format("sidecar", e.to_string()))
}

pub fn read_sidecar(path: &Path) -> Result<DynamicImage> {
    decode_sidecar(&read_bytes(path)?).map_err(|e| with_path(e, path))
}

pub fn write_sidecar(path: &Path, img: &DynamicImage) -> Result<()> {
    write_bytes(path, &encode_sidecar(img))
}

/// One channel min-max scaled to `[0, 1]` for viewing; a flat channel is 0.5.
pub fn channel_display(img: &DynamicImage, c: usize) -> Result<GrayImage> {
    if c >= img.channels() {
        return Err(Error::input(format!(
            "channel {c} out of range for {} channels",
            img.channels()
        )));
    }
    let plane = img.channel(c);
    let (lo, hi) = plane
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let data = if hi > lo {
        plane.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.5; plane.len()]
    };
    GrayImage::new(img.width(), img.height(), data)
}

// ---------------------------------------------------------------- model file

/// Magic, u32 version, u64 feature length, f64 weights, f64 bias.
pub fn encode_model(clf: &FcClassifier) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + (clf.weights.len() + 1) * 8);
    out.extend(MODEL_MAGIC);
    out.extend(MODEL_VERSION.to_le_bytes());
    out.extend((clf.weights.len() as u64).to_le_bytes());
    for w in &clf.weights {
        out.extend(w.to_le_bytes());
    }
    out.extend(clf.bias.to_le_bytes());
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<FcClassifier> {
    let mut r = Reader::new("model", bytes);
    if r.take::<4>()? != MODEL_MAGIC {
        return Err(Error::format("model", "bad magic"));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::format(
            "model",
            format!("unsupported version {version}"),
        ));
    }
    let len = r.u64()?;
    let len = usize::try_from(len)
        .ok()
        .filter(|&n| n > 0 && n.checked_add(1).and_then(|k| k.checked_mul(8)).is_some())
        .ok_or_else(|| Error::format("model", format!("bad feature length {len}")))?;
    r.expect_remaining((len + 1) * 8)?;
    let weights = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let bias = r.f64()?;
    if weights.iter().chain([&bias]).any(|v| !v.is_finite()) {
        return Err(Error::format("model", "non-finite parameter"));
    }
    Ok(FcClassifier {
        weights,
        bias,
        trained: true,
    })
}

pub fn read_model(path: &Path) -> Result<FcClassifier> {
    decode_model(&read_bytes(path)?).map_err(|e| with_path(e, path))
}

pub fn write_model(path: &Path, clf: &FcClassifier) -> Result<()> {
    write_bytes(path, &encode_model(clf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pgm_header_with_comments() {
        let mut bytes = b"P5\n# made by hand\n3 # width\n2\n255\n".to_vec();
        bytes.extend([0, 51, 255, 102, 153, 204]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img.dims(), (3, 2));
        assert_eq!(img.get(1, 0), 0.2);
        assert_eq!(img.get(2, 1), 0.8);
        assert_eq!(
            encode_pgm(&img)[..],
            b"P5\n3 2\n255\n\x00\x33\xff\x66\x99\xcc"[..]
        );
    }

    #[test]
    fn pgm_rejects_bad_input() {
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00\x01").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(decode_pgm(b"P5\n1").is_err());
    }

    #[test]
    fn natural_order() {
        let mut names = vec![
            "f10.pgm", "f2.pgm", "f1.pgm", "f02.pgm", "a.pgm", "f100.pgm",
        ];
        names.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(
            names,
            ["a.pgm", "f1.pgm", "f02.pgm", "f2.pgm", "f10.pgm", "f100.pgm"]
        );
    }

    #[test]
    fn flo_layout() {
        let f = FlowField::new(2, 1, vec![1.0, -0.5], vec![2.0, 0.25]).unwrap();
        let bytes = encode_flo(&f);
        assert_eq!(&bytes[..4], b"PIEH");
        assert_eq!(&bytes[4..12], &[2, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[16..20], &2.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 16);
        assert_eq!(decode_flo(&bytes).unwrap(), f);
    }

    #[test]
    fn flo_rejects_corruption() {
        let f = FlowField::constant(3, 2, 0.5, -1.0).unwrap();
        let mut bytes = encode_flo(&f);
        assert!(decode_flo(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] ^= 1;
        assert!(decode_flo(&bytes).is_err());
        let mut neg = encode_flo(&f);
        neg[4..8].copy_from_slice(&(-3i32).to_le_bytes());
        assert!(decode_flo(&neg).is_err());
    }

    #[test]
    fn model_layout() {
        let clf = FcClassifier {
            weights: vec![0.5, -2.0],
            bias: 0.125,
            trained: true,
        };
        let bytes = encode_model(&clf);
        assert_eq!(&bytes[..4], b"FPFC");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(decode_model(&bytes).unwrap(), clf);
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(decode_model(&bad).is_err());
        assert!(decode_model(&bytes[..30]).is_err());
    }

    #[test]
    fn channel_display_spans_full_range() {
        let img = DynamicImage::new(2, 1, 2, vec![-3.0, 1.0, 4.0, 4.0]).unwrap();
        assert_eq!(channel_display(&img, 0).unwrap().as_slice(), &[0.0, 1.0]);
        assert_eq!(channel_display(&img, 1).unwrap().as_slice(), &[0.5, 0.5]);
        assert!(channel_display(&img, 2).is_err());
    }

    #[cfg(feature = "png")]
    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 3 + y * 40) as f64 / 255.0).unwrap();
        let path = dir.path().join("f.png");
        write_frame(&path, &img).unwrap();
        let back = read_frame(&path).unwrap();
        assert_eq!(encode_pgm(&back), encode_pgm(&img));
    }

    proptest! {
        #[test]
        fn pgm_bytes_round_trip(w in 1usize..6, h in 1usize..6, seed in any::<u64>()) {
            let raster: Vec<u8> = (0..w * h).map(|i| (seed.rotate_left(i as u32) & 0xff) as u8).collect();
            let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
            bytes.extend(&raster);
            let img = decode_pgm(&bytes).unwrap();
            prop_assert_eq!(encode_pgm(&img), bytes);
        }

        #[test]
        fn flo_round_trips(vals in proptest::collection::vec(-100.0f32..100.0, 12)) {
            let u1 = vals[..6].iter().map(|&v| v as f64).collect();
            let u2 = vals[6..].iter().map(|&v| v as f64).collect();
            let f = FlowField::new(3, 2, u1, u2).unwrap();
            let bytes = encode_flo(&f);
            let back = decode_flo(&bytes).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(encode_flo(&back), bytes);
        }

        #[test]
        fn sidecar_round_trips(vals in proptest::collection::vec(-1e3f32..1e3, 24)) {
            let img = DynamicImage::new(3, 4, 2, vals.iter().map(|&v| v as f64).collect()).unwrap();
            let bytes = encode_sidecar(&img);
            let back = decode_sidecar(&bytes).unwrap();
            prop_assert_eq!(&back, &img);
            prop_assert_eq!(encode_sidecar(&back), bytes);
        }

        #[test]
        fn model_round_trips(w in proptest::collection::vec(-1e6f64..1e6, 1..20), b in -10.0f64..10.0) {
            let clf = FcClassifier { weights: w, bias: b, trained: true };
            let bytes = encode_model(&clf);
            prop_assert_eq!(decode_model(&bytes).unwrap(), clf);
        }
    }
}
