//! Rate-distortion measurement over an encrypt, compress, (upload), decompress, decrypt chain.

use serde::{Deserialize, Serialize};

use super::{decode, encode, sns_emulate, JpegParams, SnsProfile, Subsampling, TableChoice};
use crate::analysis::psnr;
use crate::cipher::{decrypt, encrypt, CipherConfig, Scheme};
use crate::error::{Error, Result};
use crate::keys::{derive_step_keys, SecretKey};
use crate::pixel::Image;

/// How an image travels: optionally encrypted, then JPEG-compressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdPipeline {
    pub cipher: Option<CipherConfig>,
    pub subsampling: Subsampling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableChoice>,
}

impl RdPipeline {
    pub fn plain(subsampling: Subsampling) -> Self {
        Self { cipher: None, subsampling, table: None }
    }

    pub fn conventional(cfg: CipherConfig, subsampling: Subsampling) -> Self {
        Self { cipher: Some(cfg), subsampling, table: None }
    }

    pub fn proposed(cfg: CipherConfig, table: TableChoice) -> Self {
        Self { cipher: Some(cfg), subsampling: Subsampling::Gray, table: Some(table) }
    }

    pub fn label(&self) -> String {
        match self.cipher.map(|c| c.scheme) {
            None => format!("plain-{}", self.subsampling),
            Some(Scheme::Conventional) => format!("conventional-{}", self.subsampling),
            Some(Scheme::Grayscale) => "proposed".into(),
        }
    }

    pub fn params(&self, qf: u8) -> JpegParams {
        JpegParams { quality: qf, subsampling: self.subsampling, table: self.table }
    }
}

#[derive(Clone, Debug)]
pub struct Roundtrip {
    pub decoded: Image,
    /// Size of the stream that was finally decoded.
    pub bytes: usize,
    pub bpp: f64,
    pub psnr: f64,
    pub detected: JpegParams,
}

/// Runs one image through `pipeline` at quality `qf`, optionally via a service.
pub fn roundtrip(
    img: &Image,
    pipeline: &RdPipeline,
    qf: u8,
    key: &SecretKey,
    sns: Option<&SnsProfile>,
) -> Result<Roundtrip> {
    if img.channels() != 3 {
        return Err(Error::ChannelCount { expected: "3", got: img.channels() });
    }
    let keys = pipeline.cipher.map(|_| derive_step_keys(key));
    let sent = match (&pipeline.cipher, &keys) {
        (Some(cfg), Some(k)) => encrypt(img, k, cfg)?.0,
        _ => img.clone(),
    };
    let mut stream = encode(&sent, &pipeline.params(qf))?;
    if let Some(profile) = sns {
        stream = sns_emulate(&stream, profile)?;
    }
    let (received, detected) = decode(&stream)?;
    let decoded = match (&pipeline.cipher, &keys) {
        (Some(cfg), Some(k)) => decrypt(&received, k, cfg)?,
        _ => received,
    };
    let bpp = stream.len() as f64 * 8.0 / (img.width() * img.height()) as f64;
    Ok(Roundtrip { psnr: psnr(img, &decoded)?, decoded, bytes: stream.len(), bpp, detected })
}

/// Corpus-average bit rate and PSNR at one quality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub qf: u8,
    pub bpp: f64,
    pub psnr_db: f64,
}

impl RdPoint {
    pub const CSV_HEADER: &'static str = "qf,bpp,psnr_db";

    pub fn to_csv(&self) -> String {
        format!("{},{:.4},{}", self.qf, self.bpp, crate::analysis::format_db(self.psnr_db))
    }
}

/// Image `i` of the corpus is encrypted with `key.for_image(i)`.
pub fn rd_curve(
    corpus: &[Image],
    pipeline: &RdPipeline,
    qfs: &[u8],
    key: &SecretKey,
    sns: Option<&SnsProfile>,
) -> Result<Vec<RdPoint>> {
    if corpus.is_empty() {
        return Err(Error::Config("empty corpus".into()));
    }
    qfs.iter()
        .map(|&qf| {
            let mut bpp = 0.0;
            let mut db = 0.0;
            for (i, img) in corpus.iter().enumerate() {
                let r = roundtrip(img, pipeline, qf, &key.for_image(i as u64), sns)?;
                bpp += r.bpp;
                db += r.psnr;
            }
            let n = corpus.len() as f64;
            Ok(RdPoint { qf, bpp: bpp / n, psnr_db: db / n })
        })
        .collect()
}
