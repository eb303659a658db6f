//! Baseline JPEG with explicit control of chroma subsampling and the IJG
//! quantization tables, plus header inspection and quality estimation.

mod rd;
mod sns;

use jpeg_encoder::{ChromaSubsamplingMethod, ColorType, Encoder, QuantizationTableType, SamplingFactor};
use serde::{Deserialize, Serialize};
use zune_core::bytestream::ZCursor;
use zune_core::colorspace::ColorSpace;
use zune_core::options::DecoderOptions;
use zune_jpeg::JpegDecoder;

use crate::error::{Error, Result};
use crate::pixel::Image;

pub use rd::{rd_curve, roundtrip, RdPipeline, RdPoint, Roundtrip};
pub use sns::{sns_emulate, SnsAction, SnsProfile, SnsRule, FACEBOOK_DEFAULT_QFD};

/// IJG luminance table, natural (row-major) order.
pub const IJG_LUMINANCE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// IJG chrominance table, natural order.
pub const IJG_CHROMINANCE: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// Position in natural order of the k-th coefficient in zigzag order.
const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21,
    28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54,
    47, 55, 62, 63,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsampling {
    #[serde(rename = "444")]
    S444,
    #[serde(rename = "420")]
    S420,
    #[serde(rename = "gray")]
    Gray,
}

impl std::str::FromStr for Subsampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "444" | "4:4:4" => Ok(Self::S444),
            "420" | "4:2:0" => Ok(Self::S420),
            "gray" | "grayscale" => Ok(Self::Gray),
            other => Err(Error::Config(format!("unknown subsampling {other:?}"))),
        }
    }
}

impl std::fmt::Display for Subsampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::S444 => "444",
            Self::S420 => "420",
            Self::Gray => "gray",
        })
    }
}

/// Which IJG base table a grayscale image is quantized with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableChoice {
    #[serde(alias = "lum")]
    Luminance,
    #[serde(alias = "chrom")]
    Chrominance,
}

impl TableChoice {
    pub fn base(self) -> &'static [u16; 64] {
        match self {
            Self::Luminance => &IJG_LUMINANCE,
            Self::Chrominance => &IJG_CHROMINANCE,
        }
    }
}

impl std::str::FromStr for TableChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lum" | "luminance" => Ok(Self::Luminance),
            "chrom" | "chrominance" => Ok(Self::Chrominance),
            other => Err(Error::Config(format!("unknown table {other:?}"))),
        }
    }
}

/// Scales an IJG base table for quality `qf` (1..=100).
pub fn scaled_table(base: &[u16; 64], qf: u8) -> [u16; 64] {
    let q = qf.clamp(1, 100) as u32;
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    base.map(|v| ((v as u32 * scale + 50) / 100).clamp(1, 255) as u16)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JpegParams {
    pub quality: u8,
    pub subsampling: Subsampling,
    /// Grayscale only; `None` means luminance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableChoice>,
}

impl JpegParams {
    pub fn color(quality: u8, subsampling: Subsampling) -> Self {
        Self { quality, subsampling, table: None }
    }

    pub fn gray(quality: u8, table: TableChoice) -> Self {
        Self { quality, subsampling: Subsampling::Gray, table: Some(table) }
    }

    /// Checks the parameters against an image with `channels` channels.
    pub fn validate(&self, channels: usize) -> Result<()> {
        if !(1..=100).contains(&self.quality) {
            return Err(Error::Config(format!("quality {} outside 1..=100", self.quality)));
        }
        match (channels, self.subsampling) {
            (3, Subsampling::Gray) => Err(Error::Config("3-channel input needs 444 or 420 subsampling".into())),
            (3, _) if self.table.is_some() => Err(Error::Config("table choice applies to grayscale input only".into())),
            (1, Subsampling::S444 | Subsampling::S420) => {
                Err(Error::Config("1-channel input is always encoded as grayscale".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Encodes a baseline JFIF stream with standard Huffman tables.
pub fn encode(img: &Image, params: &JpegParams) -> Result<Vec<u8>> {
    params.validate(img.channels())?;
    let (w, h) = img.dims();
    let too_big = |v: usize| u16::try_from(v).map_err(|_| Error::Encode(format!("dimension {v} exceeds 65535")));
    let (w16, h16) = (too_big(w)?, too_big(h)?);
    let mut out = Vec::new();
    let mut enc = Encoder::new(&mut out, params.quality);
    let (data, color) = if img.channels() == 3 {
        enc.set_sampling_factor(match params.subsampling {
            Subsampling::S420 => SamplingFactor::F_2_2,
            _ => SamplingFactor::F_1_1,
        });
        enc.set_chroma_subsampling_method(ChromaSubsamplingMethod::Average);
        enc.set_quantization_tables(QuantizationTableType::Default, QuantizationTableType::Default);
        (img.to_interleaved(), ColorType::Rgb)
    } else {
        let choice = params.table.unwrap_or(TableChoice::Luminance);
        let table = scaled_table(choice.base(), params.quality);
        enc.set_quantization_tables(QuantizationTableType::Custom(Box::new(table)), QuantizationTableType::Default);
        (img.samples().to_vec(), ColorType::Luma)
    };
    enc.encode(&data, w16, h16, color).map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentInfo {
    pub id: u8,
    pub h: u8,
    pub v: u8,
    pub table: u8,
}

/// What the frame header and quantization tables of a stream say.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JpegHeader {
    pub width: usize,
    pub height: usize,
    pub components: Vec<ComponentInfo>,
    /// Quantization tables by slot, natural order.
    pub tables: [Option<[u16; 64]>; 4],
    pub progressive: bool,
}

impl JpegHeader {
    pub fn subsampling(&self) -> Result<Subsampling> {
        let c = &self.components;
        match c.len() {
            1 => Ok(Subsampling::Gray),
            3 if c.iter().all(|k| (k.h, k.v) == (c[0].h, c[0].v)) => Ok(Subsampling::S444),
            3 if (c[0].h, c[0].v) == (2, 2) && c[1..].iter().all(|k| (k.h, k.v) == (1, 1)) => Ok(Subsampling::S420),
            n => Err(Error::Decode(format!("unsupported sampling layout over {n} components"))),
        }
    }

    /// The table quantizing the first (luma or gray) component.
    pub fn primary_table(&self) -> Result<&[u16; 64]> {
        let slot = self.components.first().ok_or_else(|| Error::Decode("no components".into()))?.table;
        self.tables
            .get(slot as usize)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Decode(format!("missing quantization table {slot}")))
    }
}

fn be16(b: &[u8], at: usize) -> Result<usize> {
    b.get(at..at + 2)
        .map(|s| u16::from_be_bytes([s[0], s[1]]) as usize)
        .ok_or_else(|| Error::Decode("truncated marker segment".into()))
}

/// Reads markers up to the first scan.
pub fn parse_header(bytes: &[u8]) -> Result<JpegHeader> {
    if bytes.get(..2) != Some(&[0xFF, 0xD8]) {
        return Err(Error::Decode("missing SOI marker".into()));
    }
    let mut tables = [None; 4];
    let mut frame = None;
    let mut pos = 2;
    loop {
        while bytes.get(pos) == Some(&0xFF) && bytes.get(pos + 1) == Some(&0xFF) {
            pos += 1;
        }
        let (Some(&0xFF), Some(&marker)) = (bytes.get(pos), bytes.get(pos + 1)) else {
            return Err(Error::Decode(format!("expected a marker at byte {pos}")));
        };
        pos += 2;
        if marker == 0xDA {
            break;
        }
        if marker == 0xD9 {
            return Err(Error::Decode("no scan before EOI".into()));
        }
        if (0xD0..=0xD7).contains(&marker) || marker == 0x01 {
            continue;
        }
        let len = be16(bytes, pos)?;
        let seg = bytes.get(pos + 2..pos + len).ok_or_else(|| Error::Decode("truncated marker segment".into()))?;
        match marker {
            0xDB => {
                let mut i = 0;
                while i < seg.len() {
                    let (precision, slot) = (seg[i] >> 4, (seg[i] & 0x0F) as usize);
                    let width = if precision == 0 { 1 } else { 2 };
                    let raw = seg.get(i + 1..i + 1 + 64 * width).ok_or_else(|| Error::Decode("short DQT".into()))?;
                    let mut t = [0u16; 64];
                    for (k, &natural) in ZIGZAG.iter().enumerate() {
                        t[natural] =
                            if width == 1 { raw[k] as u16 } else { u16::from_be_bytes([raw[2 * k], raw[2 * k + 1]]) };
                    }
                    *tables.get_mut(slot).ok_or_else(|| Error::Decode(format!("table slot {slot}")))? = Some(t);
                    i += 1 + 64 * width;
                }
            }
            0xC0..=0xC2 => {
                if seg.len() < 6 {
                    return Err(Error::Decode("short SOF".into()));
                }
                let height = be16(seg, 1)?;
                let width = be16(seg, 3)?;
                let n = seg[5] as usize;
                let comps = seg.get(6..6 + 3 * n).ok_or_else(|| Error::Decode("short SOF".into()))?;
                let components = comps
                    .chunks_exact(3)
                    .map(|c| ComponentInfo { id: c[0], h: c[1] >> 4, v: c[1] & 0x0F, table: c[2] })
                    .collect();
                frame = Some((width, height, components, marker == 0xC2));
            }
            0xC3 | 0xC5..=0xC7 | 0xC9..=0xCB | 0xCD..=0xCF => {
                return Err(Error::Decode(format!("unsupported frame type 0x{marker:02X}")));
            }
            _ => {}
        }
        pos += len;
    }
    let (width, height, components, progressive) = frame.ok_or_else(|| Error::Decode("no frame header".into()))?;
    Ok(JpegHeader { width, height, components, tables, progressive })
}

/// Best-matching IJG quality for a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityEstimate {
    pub quality: u8,
    pub table: TableChoice,
    /// The table is exactly the scaled IJG table.
    pub exact: bool,
}

/// Matches `table` against every Qf-scaled IJG table in `candidates`.
/// Ties go to the higher quality.
pub fn estimate_quality(table: &[u16; 64], candidates: &[TableChoice]) -> QualityEstimate {
    let mut best: Option<(u32, QualityEstimate)> = None;
    for &choice in candidates {
        for q in (1..=100u8).rev() {
            let err: u32 = scaled_table(choice.base(), q).iter().zip(table).map(|(&a, &b)| a.abs_diff(b) as u32).sum();
            if best.is_none_or(|(e, _)| err < e) {
                best = Some((err, QualityEstimate { quality: q, table: choice, exact: err == 0 }));
            }
        }
    }
    best.expect("at least one candidate").1
}

/// Subsampling and estimated quality of a stream.
pub fn detect(bytes: &[u8]) -> Result<(JpegHeader, JpegParams, QualityEstimate)> {
    let header = parse_header(bytes)?;
    let subsampling = header.subsampling()?;
    let table = header.primary_table()?;
    let (est, params) = if subsampling == Subsampling::Gray {
        let est = estimate_quality(table, &[TableChoice::Luminance, TableChoice::Chrominance]);
        (est, JpegParams::gray(est.quality, est.table))
    } else {
        let est = estimate_quality(table, &[TableChoice::Luminance]);
        (est, JpegParams::color(est.quality, subsampling))
    };
    Ok((header, params, est))
}

/// Decodes a stream to RGB (3 components) or gray (1 component) and reports
/// the detected parameters.
pub fn decode(bytes: &[u8]) -> Result<(Image, JpegParams)> {
    let (header, params, _) = detect(bytes)?;
    if header.progressive {
        return Err(Error::Decode("progressive streams are not supported".into()));
    }
    let channels = header.components.len();
    let space = if channels == 1 { ColorSpace::Luma } else { ColorSpace::RGB };
    let options =
        DecoderOptions::default().jpeg_set_out_colorspace(space).set_max_width(1 << 16).set_max_height(1 << 16);
    let mut dec = JpegDecoder::new_with_options(ZCursor::new(bytes), options);
    let pixels = dec.decode().map_err(|e| Error::Decode(format!("{e:?}")))?;
    let img = Image::from_interleaved(header.width, header.height, channels, &pixels)?;
    Ok((img, params))
}
