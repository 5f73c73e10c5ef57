//! Binary PGM (P5) read/write. Intensities map linearly between [0, 1] and
//! the integer sample range; 16-bit samples are big-endian per the format.

use crate::error::{Error, Result};
use crate::linalg::ImageMatrix;
use std::fs;
use std::path::Path;

pub fn write_pgm(img: &ImageMatrix, path: &Path, maxval: u16) -> Result<()> {
    if maxval == 0 {
        return Err(Error::Configuration("pgm maxval must be >= 1".into()));
    }
    let mut out = format!("P5\n{} {}\n{}\n", img.cols(), img.rows(), maxval).into_bytes();
    let scale = maxval as f64;
    for &v in img.data() {
        let q = (v.clamp(0.0, 1.0) * scale).round() as u32;
        let q = q.min(maxval as u32) as u16;
        if maxval > 255 {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<ImageMatrix> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;

    fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
        // skip whitespace and '#' comment lines
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                break;
            }
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::Format("unexpected end of pgm header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    }

    let magic = next_token(&bytes, &mut pos)?;
    if magic != "P5" {
        return Err(Error::Format(format!("not a binary pgm (magic {magic:?})")));
    }
    let cols: usize = next_token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::Format("bad pgm width".into()))?;
    let rows: usize = next_token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::Format("bad pgm height".into()))?;
    let maxval: u32 = next_token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::Format("bad pgm maxval".into()))?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("pgm maxval {maxval} out of range")));
    }
    pos += 1; // exactly one whitespace byte after the header

    let n = rows * cols;
    let wide = maxval > 255;
    let needed = n * if wide { 2 } else { 1 };
    if bytes.len() < pos + needed {
        return Err(Error::Format("pgm truncated".into()));
    }
    let scale = 1.0 / maxval as f64;
    let mut data = Vec::with_capacity(n);
    if wide {
        for i in 0..n {
            let v = u16::from_be_bytes([bytes[pos + 2 * i], bytes[pos + 2 * i + 1]]);
            data.push(v as f64 * scale);
        }
    } else {
        for i in 0..n {
            data.push(bytes[pos + i] as f64 * scale);
        }
    }
    ImageMatrix::new(rows, cols, data)
}
