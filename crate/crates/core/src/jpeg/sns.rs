//! Recompression behavior of photo-sharing services, emulated offline.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{decode, detect, encode, JpegParams, Subsampling, TableChoice};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SnsAction {
    /// The uploaded bytes are served unchanged.
    PassThrough,
    /// Decoded and re-encoded; grayscale output uses the luminance table.
    Recompress { subsampling: Subsampling, quality: u8 },
}

/// Matches uploads whose subsampling is in `inputs` and whose estimated
/// quality lies in `qf_min..=qf_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnsRule {
    pub inputs: Vec<Subsampling>,
    pub qf_min: u8,
    pub qf_max: u8,
    pub action: SnsAction,
}

impl SnsRule {
    fn new(inputs: &[Subsampling], qf: std::ops::RangeInclusive<u8>, action: SnsAction) -> Self {
        Self { inputs: inputs.to_vec(), qf_min: *qf.start(), qf_max: *qf.end(), action }
    }

    pub fn matches(&self, sub: Subsampling, qf: u8) -> bool {
        self.inputs.contains(&sub) && (self.qf_min..=self.qf_max).contains(&qf)
    }
}

/// A service's upload limit and ordered recompression rules; the first matching rule applies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnsProfile {
    pub name: String,
    /// `None` means no limit is known.
    pub max_w: Option<usize>,
    pub max_h: Option<usize>,
    pub rules: Vec<SnsRule>,
}

const COLOR: [Subsampling; 2] = [Subsampling::S444, Subsampling::S420];
const ALL: [Subsampling; 3] = [Subsampling::S444, Subsampling::S420, Subsampling::Gray];

/// Quality Facebook re-encodes at unless configured otherwise.
pub const FACEBOOK_DEFAULT_QFD: u8 = 85;

impl SnsProfile {
    pub const BUILTIN: [&'static str; 6] = ["twitter", "facebook_hq", "facebook_lq", "tumblr", "googleplus", "flickr"];

    pub fn builtin(name: &str) -> Result<Self> {
        let pass = |name: &str, max: Option<usize>| Self {
            name: name.into(),
            max_w: max,
            max_h: max,
            rules: vec![SnsRule::new(&ALL, 1..=100, SnsAction::PassThrough)],
        };
        match name {
            "twitter" => {
                let to = |subsampling| SnsAction::Recompress { subsampling, quality: 85 };
                Ok(Self {
                    name: name.into(),
                    max_w: Some(4096),
                    max_h: Some(4096),
                    rules: vec![
                        SnsRule::new(&ALL, 1..=84, SnsAction::PassThrough),
                        SnsRule::new(&COLOR, 85..=100, to(Subsampling::S420)),
                        SnsRule::new(&[Subsampling::Gray], 85..=100, to(Subsampling::Gray)),
                    ],
                })
            }
            "facebook_hq" => Self::facebook(name, 2048, FACEBOOK_DEFAULT_QFD),
            "facebook_lq" => Self::facebook(name, 960, FACEBOOK_DEFAULT_QFD),
            "tumblr" => Ok(pass(name, Some(1280))),
            "googleplus" | "flickr" => Ok(pass(name, None)),
            other => Err(Error::Config(format!("unknown SNS profile {other:?}"))),
        }
    }

    /// Facebook recompresses every upload at `qfd`, which must lie in 71..=85.
    pub fn facebook(name: &str, max: usize, qfd: u8) -> Result<Self> {
        if !(71..=85).contains(&qfd) {
            return Err(Error::Config(format!("facebook Qfd {qfd} outside 71..=85")));
        }
        let to = |subsampling| SnsAction::Recompress { subsampling, quality: qfd };
        Ok(Self {
            name: name.into(),
            max_w: Some(max),
            max_h: Some(max),
            rules: vec![
                SnsRule::new(&COLOR, 1..=100, to(Subsampling::S420)),
                SnsRule::new(&[Subsampling::Gray], 1..=100, to(Subsampling::Gray)),
            ],
        })
    }

    /// A policy file `<dir>/<name>.json` if present, else the built-in profile.
    pub fn resolve(name: &str, dir: Option<&Path>) -> Result<Self> {
        if let Some(path) = dir.map(|d| d.join(format!("{name}.json"))).filter(|p| p.is_file()) {
            return Self::load(path);
        }
        Self::builtin(name)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }

    /// Every (subsampling, quality) pair must be covered by some rule, and
    /// recompression must be able to produce its declared output.
    pub fn validate(&self) -> Result<()> {
        for rule in &self.rules {
            if rule.qf_min > rule.qf_max || rule.qf_min == 0 || rule.qf_max > 100 {
                return Err(Error::Config(format!(
                    "{}: bad quality range {}..={}",
                    self.name, rule.qf_min, rule.qf_max
                )));
            }
            if let SnsAction::Recompress { subsampling, quality } = rule.action {
                let gray_in = rule.inputs.contains(&Subsampling::Gray);
                let color_in = rule.inputs.iter().any(|s| *s != Subsampling::Gray);
                if (gray_in && subsampling != Subsampling::Gray) || (color_in && subsampling == Subsampling::Gray) {
                    return Err(Error::Config(format!("{}: rule mixes color and grayscale", self.name)));
                }
                if !(1..=100).contains(&quality) {
                    return Err(Error::Config(format!("{}: output quality {quality}", self.name)));
                }
            }
        }
        for sub in ALL {
            if let Some(q) = (1..=100).find(|&q| self.rule_for(sub, q).is_none()) {
                return Err(Error::Config(format!("{}: no rule for {sub} at quality {q}", self.name)));
            }
        }
        Ok(())
    }

    pub fn rule_for(&self, sub: Subsampling, qf: u8) -> Option<&SnsRule> {
        self.rules.iter().find(|r| r.matches(sub, qf))
    }
}

/// What the service would serve back for an upload.
pub fn sns_emulate(bytes: &[u8], profile: &SnsProfile) -> Result<Vec<u8>> {
    let (header, params, _) = detect(bytes)?;
    let over = |max: Option<usize>, v: usize| max.is_some_and(|m| v > m);
    if over(profile.max_w, header.width) || over(profile.max_h, header.height) {
        return Err(Error::Resolution {
            profile: profile.name.clone(),
            w: header.width,
            h: header.height,
            max_w: profile.max_w.unwrap_or(usize::MAX),
            max_h: profile.max_h.unwrap_or(usize::MAX),
        });
    }
    let rule = profile.rule_for(params.subsampling, params.quality).ok_or_else(|| {
        Error::Config(format!("{}: no rule for {} at {}", profile.name, params.subsampling, params.quality))
    })?;
    match rule.action {
        SnsAction::PassThrough => Ok(bytes.to_vec()),
        SnsAction::Recompress { subsampling, quality } => {
            let (img, _) = decode(bytes)?;
            let out = if subsampling == Subsampling::Gray {
                JpegParams::gray(quality, TableChoice::Luminance)
            } else {
                JpegParams::color(quality, subsampling)
            };
            encode(&img, &out)
        }
    }
}
