//! Portable graymap (PGM) reading and writing.
//!
//! Reads binary (P5) and ASCII (P2) graymaps with any maxval up to 65535;
//! intensities are returned as read, without rescaling. Writes 8-bit P5.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Raster;
use crate::{Error, Result};

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(io_err)?)
        .read_to_end(&mut bytes)
        .map_err(io_err)?;
    read_pgm(&bytes)
}

/// Decodes a PGM image held in memory.
pub fn read_pgm(bytes: &[u8]) -> Result<Raster> {
    let mut cursor = Cursor { bytes, pos: 0 };
    let binary = match cursor.take(2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(other) => {
            return Err(Error::MalformedHeader(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(Error::MalformedHeader("missing magic number".into())),
    };

    let width = cursor.header_field("width")?;
    let height = cursor.header_field("height")?;
    let maxval = cursor.header_field("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!(
            "maxval {maxval} outside 1..=65535"
        )));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;

    let data = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match cursor.next() {
            Some(b) if b.is_ascii_whitespace() => {}
            _ => {
                return Err(Error::MalformedHeader(
                    "missing whitespace after maxval".into(),
                ))
            }
        }
        let payload = &bytes[cursor.pos..];
        if maxval < 256 {
            if payload.len() < expected {
                return Err(Error::Truncated {
                    expected,
                    found: payload.len(),
                });
            }
            payload[..expected]
                .iter()
                .map(|&b| f64::from(b))
                .collect::<Vec<_>>()
        } else {
            let found = payload.len() / 2;
            if found < expected {
                return Err(Error::Truncated { expected, found });
            }
            payload[..expected * 2]
                .chunks_exact(2)
                .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
                .collect()
        }
    } else {
        let mut data = Vec::with_capacity(expected);
        while data.len() < expected {
            match cursor.number()? {
                Some(v) => data.push(v as f64),
                None => {
                    return Err(Error::Truncated {
                        expected,
                        found: data.len(),
                    })
                }
            }
        }
        data
    };

    if let Some((index, &value)) = data.iter().enumerate().find(|(_, &v)| v > maxval as f64) {
        return Err(Error::MalformedHeader(format!(
            "sample {value} at index {index} exceeds maxval {maxval}"
        )));
    }
    Raster::new(width, height, data)
}

/// Writes `r` as an 8-bit binary PGM. Values are rounded; anything that does
/// not round into `[0, 255]` is rejected before the file is created.
pub fn save_pgm(r: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(r)?;
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    out.write_all(&bytes).map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Encodes `r` as 8-bit binary PGM into any writer.
pub fn write_pgm<W: Write>(r: &Raster, mut w: W) -> Result<()> {
    let bytes = encode(r)?;
    w.write_all(&bytes).map_err(|source| Error::Io {
        path: "<writer>".into(),
        source,
    })
}

fn encode(r: &Raster) -> Result<Vec<u8>> {
    let header = format!("P5\n{} {}\n255\n", r.width(), r.height());
    let mut bytes = Vec::with_capacity(header.len() + r.len());
    bytes.extend_from_slice(header.as_bytes());
    for (index, &value) in r.pixels().iter().enumerate() {
        let rounded = value.round();
        if !(0.0..=255.0).contains(&rounded) {
            return Err(Error::OutOfRange { index, value });
        }
        bytes.push(rounded as u8);
    }
    Ok(bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let slice = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(slice)
    }

    fn next(&mut self) -> Option<u8> {
        let b = *self.bytes.get(self.pos)?;
        self.pos += 1;
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(c) = self.next() {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Next unsigned decimal token, or `None` at end of input.
    fn number(&mut self) -> Result<Option<usize>> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.peek() {
                None => Ok(None),
                Some(b) => Err(Error::MalformedHeader(format!("unexpected byte 0x{b:02x}"))),
            };
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse()
            .map(Some)
            .map_err(|_| Error::MalformedHeader(format!("number {text} out of range")))
    }

    fn header_field(&mut self, name: &str) -> Result<usize> {
        self.number()?
            .ok_or_else(|| Error::MalformedHeader(format!("missing {name}")))
    }
}
