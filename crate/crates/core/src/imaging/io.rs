//! Single-channel PGM (P5) and PNG input, PGM output.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Unnormalized samples as stored in the image file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u32>,
    /// 8 or 16.
    pub bit_depth: u8,
}

impl RawImage {
    /// Full-scale value for the storage depth: 255 or 65535.
    pub fn default_source_max(&self) -> u32 {
        if self.bit_depth > 8 {
            65535
        } else {
            255
        }
    }
}

/// Reads a grayscale PGM or PNG, chosen by magic bytes.
pub fn read_image(path: &Path) -> Result<RawImage> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        parse_pgm(&bytes).map_err(|m| Error::parse(path, m))
    } else if bytes.starts_with(b"\x89PNG") {
        parse_png(&bytes).map_err(|m| Error::parse(path, m))
    } else {
        Err(Error::parse(path, "not a binary PGM (P5) or PNG file"))
    }
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<RawImage, String> {
    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in &mut header {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err("truncated PGM header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *slot = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed PGM header")?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let [width, height, maxval] = header;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(format!(
            "unsupported PGM geometry {width}x{height} maxval {maxval}"
        ));
    }
    let n = width * height;
    let data = bytes.get(pos..).unwrap_or_default();
    let (samples, bit_depth) = if maxval < 256 {
        if data.len() < n {
            return Err("truncated PGM raster".into());
        }
        (
            data[..n].iter().map(|&b| u32::from(b)).collect::<Vec<_>>(),
            8,
        )
    } else {
        if data.len() < 2 * n {
            return Err("truncated PGM raster".into());
        }
        let s = data[..2 * n]
            .chunks_exact(2)
            .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]])))
            .collect::<Vec<_>>();
        (s, 16)
    };
    if let Some(v) = samples.iter().find(|&&v| v as usize > maxval) {
        return Err(format!("sample {v} exceeds PGM maxval {maxval}"));
    }
    Ok(RawImage {
        width,
        height,
        samples,
        bit_depth,
    })
}

fn parse_png(bytes: &[u8]) -> std::result::Result<RawImage, String> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or("PNG too large")?];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(format!(
            "expected single-channel grayscale PNG, got {:?}",
            info.color_type
        ));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let data = &buf[..info.buffer_size()];
    let (samples, bit_depth) = match info.bit_depth {
        png::BitDepth::Sixteen => (
            data.chunks_exact(2)
                .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]])))
                .collect(),
            16,
        ),
        _ => (data.iter().map(|&b| u32::from(b)).collect(), 8),
    };
    Ok(RawImage {
        width,
        height,
        samples,
        bit_depth,
    })
}

/// Writes an 8-bit binary PGM.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::DimensionMismatch {
            expected: format!("{} pixels", width * height),
            actual: format!("{} pixels", pixels.len()),
        });
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write!(out, "P5\n{width} {height}\n255\n")
        .and_then(|_| out.write_all(pixels))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_8bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_pgm(&path, 3, 2, &[0, 1, 2, 250, 254, 255]).unwrap();
        let img = read_image(&path).unwrap();
        assert_eq!((img.width, img.height, img.bit_depth), (3, 2, 8));
        assert_eq!(img.samples, vec![0, 1, 2, 250, 254, 255]);
        assert_eq!(img.default_source_max(), 255);
    }

    #[test]
    fn pgm_16bit_with_comment() {
        let mut bytes = b"P5\n# scanner export\n2 1\n4095\n".to_vec();
        bytes.extend_from_slice(&[0x0f, 0xff, 0x08, 0x00]);
        let img = parse_pgm(&bytes).unwrap();
        assert_eq!(img.samples, vec![4095, 2048]);
        assert_eq!(img.default_source_max(), 65535);
    }

    #[test]
    fn pgm_truncated() {
        assert!(parse_pgm(b"P5\n4 4\n255\n\x00\x01").is_err());
    }

    #[test]
    fn png_16bit_gray() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        {
            let file = File::create(&path).unwrap();
            let mut enc = png::Encoder::new(std::io::BufWriter::new(file), 2, 2);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0, 0, 0, 1, 0xff, 0xff, 0x10, 0x00])
                .unwrap();
        }
        let img = read_image(&path).unwrap();
        assert_eq!(img.samples, vec![0, 1, 65535, 4096]);
        assert_eq!(img.bit_depth, 16);
    }

    #[test]
    fn unknown_format_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bin");
        std::fs::write(&path, b"GIF89a").unwrap();
        assert!(matches!(read_image(&path), Err(Error::Parse { .. })));
        assert!(matches!(
            read_image(&dir.path().join("missing.pgm")),
            Err(Error::Io { .. })
        ));
    }
}
