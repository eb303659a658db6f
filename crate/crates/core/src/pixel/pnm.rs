//! Binary PGM (P5) and PPM (P6) with maxval 255.

use std::io::{Read, Write};
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

pub fn encode(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(&img.to_interleaved());
    out
}

pub fn decode(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(Error::Format("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let channels = match token()?.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::Format(format!("unsupported magic {other:?}"))),
    };
    let mut num = |what: &str| -> Result<usize> { token()?.parse().map_err(|_| Error::Format(format!("bad {what}"))) };
    let (w, h, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if maxval != 255 {
        return Err(Error::Format(format!("only maxval 255 is supported, got {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let need = w * h * channels;
    let raster = bytes.get(start..start + need).ok_or_else(|| Error::Format(format!("raster needs {need} bytes")))?;
    Image::from_interleaved(w, h, channels, raster)
}

pub fn read(path: impl AsRef<Path>) -> Result<Image> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    decode(&buf)
}

pub fn write(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    std::fs::File::create(path)?.write_all(&encode(img))?;
    Ok(())
}
