//! Key derivation and the per-block random draws of each encryption step.
//!
//! A 256-bit master secret and a 96-bit per-image nonce feed ChaCha20
//! (RFC 8439). The first 128 keystream bytes become the four step keys.
//! Each step key then drives its own ChaCha20 stream (all-zero nonce) from
//! which little-endian `u32` words are drawn. Bounded integers use plain
//! rejection sampling, so every draw is exactly uniform.

use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use chacha20::cipher::{KeyIvInit, StreamCipher};
use chacha20::ChaCha20;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cipher::{CipherConfig, D4Pose, Scheme};
use crate::error::{Error, Result};
use crate::pixel::LayoutKind;

pub const MASTER_LEN: usize = 32;
pub const NONCE_LEN: usize = 12;

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    pub master: [u8; MASTER_LEN],
    pub image_nonce: [u8; NONCE_LEN],
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecretKey")
            .field("master", &"<redacted>")
            .field("image_nonce", &hex::encode(self.image_nonce))
            .finish()
    }
}

impl SecretKey {
    pub fn new(master: [u8; MASTER_LEN], image_nonce: [u8; NONCE_LEN]) -> Self {
        Self { master, image_nonce }
    }

    /// Fresh master secret and nonce from the operating system.
    pub fn generate() -> Result<Self> {
        let mut master = [0u8; MASTER_LEN];
        let mut nonce = [0u8; NONCE_LEN];
        getrandom::fill(&mut master).map_err(|e| Error::Key(format!("entropy source: {e}")))?;
        getrandom::fill(&mut nonce).map_err(|e| Error::Key(format!("entropy source: {e}")))?;
        Ok(Self::new(master, nonce))
    }

    /// Reproducible key material from a seed (fixtures, experiments).
    pub fn from_seed(seed: &[u8]) -> Self {
        let digest = Sha256::digest(seed);
        let mut bytes = [0u8; MASTER_LEN + NONCE_LEN];
        keystream(digest.as_slice().try_into().expect("sha256 is 32 bytes"), &[0; NONCE_LEN], &mut bytes);
        let mut master = [0u8; MASTER_LEN];
        let mut nonce = [0u8; NONCE_LEN];
        master.copy_from_slice(&bytes[..MASTER_LEN]);
        nonce.copy_from_slice(&bytes[MASTER_LEN..]);
        Self::new(master, nonce)
    }

    /// Same master secret, nonce replaced by a counter (one key per image).
    pub fn for_image(&self, index: u64) -> Self {
        let mut nonce = [0u8; NONCE_LEN];
        nonce[NONCE_LEN - 8..].copy_from_slice(&index.to_be_bytes());
        Self::new(self.master, nonce)
    }
}

fn keystream(key: &[u8; 32], nonce: &[u8; NONCE_LEN], out: &mut [u8]) {
    out.fill(0);
    let mut cipher = ChaCha20::new(key.into(), nonce.into());
    cipher.apply_keystream(out);
}

#[derive(Clone, PartialEq, Eq)]
pub struct StepKeys {
    pub k1: [u8; 32],
    pub k2: [u8; 32],
    pub k3: [u8; 32],
    pub k4: [u8; 32],
}

impl std::fmt::Debug for StepKeys {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("StepKeys(<redacted>)")
    }
}

pub fn derive_step_keys(sk: &SecretKey) -> StepKeys {
    let mut raw = [0u8; 128];
    keystream(&sk.master, &sk.image_nonce, &mut raw);
    let part = |i: usize| -> [u8; 32] { raw[32 * i..32 * (i + 1)].try_into().expect("32-byte slice") };
    StepKeys { k1: part(0), k2: part(1), k3: part(2), k4: part(3) }
}

/// Deterministic stream of uniform draws keyed by one step key.
pub struct DrawStream {
    cipher: ChaCha20,
    buf: [u8; 64],
    pos: usize,
}

impl DrawStream {
    pub fn new(key: &[u8; 32]) -> Self {
        Self { cipher: ChaCha20::new(key.into(), (&[0u8; NONCE_LEN]).into()), buf: [0; 64], pos: 64 }
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.pos == self.buf.len() {
            self.buf = [0; 64];
            self.cipher.apply_keystream(&mut self.buf);
            self.pos = 0;
        }
        let v = u32::from_le_bytes(self.buf[self.pos..self.pos + 4].try_into().expect("4 bytes"));
        self.pos += 4;
        v
    }

    /// Uniform integer in `[0, bound)`; words at or above the largest
    /// multiple of `bound` are discarded and redrawn.
    pub fn below(&mut self, bound: u32) -> Result<u32> {
        if bound == 0 {
            return Err(Error::EmptyDomain);
        }
        let zone = (1u64 << 32) / bound as u64 * bound as u64;
        loop {
            let x = self.next_u32();
            if (x as u64) < zone {
                return Ok(x % bound);
            }
        }
    }
}

/// Fisher-Yates shuffle; entry `i` is the source block placed at position `i`.
pub fn gen_permutation(k1: &[u8; 32], n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    u32::try_from(n).map_err(|_| Error::Config(format!("{n} blocks is too many")))?;
    let mut stream = DrawStream::new(k1);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = stream.below(i as u32 + 1)? as usize;
        perm.swap(i, j);
    }
    Ok(perm)
}

pub fn gen_poses(k2: &[u8; 32], n: usize) -> Vec<D4Pose> {
    let mut stream = DrawStream::new(k2);
    (0..n).map(|_| D4Pose::from_index(stream.below(8).expect("nonzero bound") as u8)).collect()
}

/// Bits are taken from successive words, least significant bit first.
pub fn gen_polarity(k3: &[u8; 32], n: usize) -> Vec<bool> {
    let mut stream = DrawStream::new(k3);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let word = stream.next_u32();
        for b in 0..32 {
            if out.len() == n {
                break;
            }
            out.push(word >> b & 1 == 1);
        }
    }
    out
}

/// The six orderings of three channels, lexicographic.
pub const CHANNEL_PERMS: [[u8; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

pub fn channel_perm_index(perm: [u8; 3]) -> usize {
    CHANNEL_PERMS.iter().position(|p| *p == perm).expect("valid channel permutation")
}

pub fn invert_channel_perm(perm: [u8; 3]) -> [u8; 3] {
    let mut inv = [0u8; 3];
    for (i, &p) in perm.iter().enumerate() {
        inv[p as usize] = i as u8;
    }
    inv
}

pub fn gen_channel_perms(k4: &[u8; 32], n: usize) -> Vec<[u8; 3]> {
    let mut stream = DrawStream::new(k4);
    (0..n).map(|_| CHANNEL_PERMS[stream.below(6).expect("nonzero bound") as usize]).collect()
}

/// Ground truth of one encryption: what happened to every block.
///
/// Position `i` refers to the scrambled grid: the encrypted block at `i`
/// came from original block `permutation[i]`, was posed by `poses[i]`,
/// complemented if `polarity[i]`, and (conventional scheme only) had its
/// channels reordered so that output channel `c` is input channel
/// `channel_perm[i][c]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub cols: usize,
    pub rows: usize,
    pub permutation: Vec<usize>,
    pub poses: Vec<D4Pose>,
    pub polarity: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_perm: Option<Vec<[u8; 3]>>,
}

impl TransformRecord {
    pub fn generate(keys: &StepKeys, cols: usize, rows: usize, with_channels: bool) -> Result<Self> {
        let n = cols * rows;
        Ok(Self {
            cols,
            rows,
            permutation: gen_permutation(&keys.k1, n)?,
            poses: gen_poses(&keys.k2, n),
            polarity: gen_polarity(&keys.k3, n),
            channel_perm: with_channels.then(|| gen_channel_perms(&keys.k4, n)),
        })
    }

    /// Permutation-only scrambling: every block keeps its pose, polarity and channels.
    pub fn permutation_only(permutation: Vec<usize>, cols: usize, rows: usize) -> Self {
        let n = permutation.len();
        Self { cols, rows, permutation, poses: vec![D4Pose::IDENTITY; n], polarity: vec![false; n], channel_perm: None }
    }

    pub fn identity(cols: usize, rows: usize) -> Self {
        Self::permutation_only((0..cols * rows).collect(), cols, rows)
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cols * self.rows;
        let lens_ok = self.permutation.len() == n
            && self.poses.len() == n
            && self.polarity.len() == n
            && self.channel_perm.as_ref().is_none_or(|c| c.len() == n);
        if !lens_ok {
            return Err(Error::Key(format!(
                "transform record lengths do not match a {}x{} grid",
                self.cols, self.rows
            )));
        }
        let mut seen = vec![false; n];
        for &p in &self.permutation {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Key("permutation is not a bijection".into()));
            }
        }
        if self.poses.iter().any(|p| p.rotation > 3) {
            return Err(Error::Key("pose rotation out of range".into()));
        }
        if let Some(perms) = &self.channel_perm {
            if perms.iter().any(|p| !CHANNEL_PERMS.contains(p)) {
                return Err(Error::Key("invalid channel permutation".into()));
            }
        }
        Ok(())
    }
}

/// On-disk key file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFile {
    pub master_b64: String,
    pub nonce_b64: String,
    pub scheme: Scheme,
    pub block: [usize; 2],
    pub layout: LayoutKind,
    pub original_size: [usize; 2],
}

impl KeyFile {
    pub fn new(sk: &SecretKey, cfg: &CipherConfig, original_size: [usize; 2]) -> Self {
        Self {
            master_b64: B64.encode(sk.master),
            nonce_b64: B64.encode(sk.image_nonce),
            scheme: cfg.scheme,
            block: [cfg.block_w, cfg.block_h],
            layout: cfg.layout,
            original_size,
        }
    }

    pub fn secret(&self) -> Result<SecretKey> {
        let decode = |s: &str, what: &str, len: usize| -> Result<Vec<u8>> {
            let v = B64.decode(s).map_err(|e| Error::Key(format!("{what}: {e}")))?;
            if v.len() != len {
                return Err(Error::Key(format!("{what} must be {len} bytes, got {}", v.len())));
            }
            Ok(v)
        };
        let master = decode(&self.master_b64, "master", MASTER_LEN)?;
        let nonce = decode(&self.nonce_b64, "nonce", NONCE_LEN)?;
        Ok(SecretKey::new(master.try_into().expect("checked length"), nonce.try_into().expect("checked length")))
    }

    /// Cipher settings recorded in the file. Sizes outside the recommended
    /// minimum are accepted here, since whoever created the key opted in.
    pub fn config(&self) -> Result<CipherConfig> {
        let cfg = CipherConfig::new(self.scheme, self.block[0], self.block[1], self.layout).allow_nonstandard();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let kf: KeyFile = serde_json::from_str(s)?;
        kf.secret()?;
        kf.config()?;
        Ok(kf)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Writes the file readable by its owner only (where the platform has modes).
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if path.exists() {
            // an earlier key may be read-only
            std::fs::remove_file(path)?;
        }
        std::fs::write(path, self.to_json()? + "\n")?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o400))?;
        }
        Ok(())
    }
}
