//! Jigsaw-puzzle attack on block-scrambled images.
//!
//! The solver treats every block as a square piece that may have been
//! turned, mirrored, complemented and (for color pieces) had its channels
//! reordered, and grows an assembly greedily from the most confident join.

mod edges;
mod solver;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::analysis::{score, AssemblyScore, PuzzleAssembly};
use crate::cipher::{apply_channel_perm, apply_negpos, apply_pose, encrypt, CipherConfig, D4Pose};
use crate::error::{Error, Result};
use crate::keys::{derive_step_keys, SecretKey, TransformRecord, CHANNEL_PERMS};
use crate::pixel::{split_blocks, Image};

/// One way a piece may be displayed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceVariant {
    pub piece_id: usize,
    pub pose: D4Pose,
    pub polarity: bool,
    pub channel_perm: [u8; 3],
    pub pixels: Image,
}

fn variant(piece_id: usize, tile: &Image, pose: D4Pose, polarity: bool, channel_perm: [u8; 3]) -> Result<PieceVariant> {
    let mut pixels = apply_negpos(&apply_pose(tile, pose)?, polarity);
    if tile.channels() == 3 {
        pixels = apply_channel_perm(&pixels, channel_perm)?;
    }
    Ok(PieceVariant { piece_id, pose, polarity, channel_perm, pixels })
}

fn require_square(tile: &Image) -> Result<()> {
    if tile.width() != tile.height() {
        return Err(Error::Shape { w: tile.width(), h: tile.height() });
    }
    Ok(())
}

/// The 16 pose and polarity variants of a square tile.
pub fn expand_variants(piece_id: usize, tile: &Image) -> Result<Vec<PieceVariant>> {
    require_square(tile)?;
    let mut out = Vec::with_capacity(16);
    for polarity in [false, true] {
        for pose in D4Pose::all() {
            out.push(variant(piece_id, tile, pose, polarity, [0, 1, 2])?);
        }
    }
    Ok(out)
}

/// All 96 variants of a color tile, adding the six channel orders.
pub fn expand_variants_with_channels(piece_id: usize, tile: &Image) -> Result<Vec<PieceVariant>> {
    require_square(tile)?;
    if tile.channels() != 3 {
        return Err(Error::ChannelCount { expected: "3", got: tile.channels() });
    }
    let mut out = Vec::with_capacity(96);
    for polarity in [false, true] {
        for pose in D4Pose::all() {
            for perm in CHANNEL_PERMS {
                out.push(variant(piece_id, tile, pose, polarity, perm)?);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compatibility {
    /// Mahalanobis gradient compatibility.
    #[default]
    Mgc,
    /// Sum of squared differences across the seam.
    Ssd,
}

impl std::str::FromStr for Compatibility {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mgc" => Ok(Self::Mgc),
            "ssd" => Ok(Self::Ssd),
            other => Err(Error::Config(format!("unknown compatibility {other:?}"))),
        }
    }
}

/// Where the second tile sits relative to the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Right,
    Down,
}

fn transpose(img: &Image) -> Image {
    let (w, h) = img.dims();
    let mut out = Image::filled(h, w, img.channels(), 0).expect("same sample count");
    for c in 0..img.channels() {
        for y in 0..h {
            for x in 0..w {
                out.set(y, x, c, img.get(x, y, c));
            }
        }
    }
    out
}

/// Seam cost between two displayed tiles; lower is more compatible.
pub fn compatibility(a: &PieceVariant, b: &PieceVariant, side: Side, metric: Compatibility) -> f64 {
    let (a, b) = match side {
        Side::Right => (a.pixels.clone(), b.pixels.clone()),
        Side::Down => (transpose(&a.pixels), transpose(&b.pixels)),
    };
    seam_cost(&a, &b, metric)
}

/// `a` on the left, `b` on the right, compared across the shared vertical seam.
fn seam_cost(a: &Image, b: &Image, metric: Compatibility) -> f64 {
    let (w, h) = a.dims();
    let c = a.channels();
    let px = |img: &Image, x: usize, y: usize, ch: usize| img.get(x, y, ch) as f32;
    match metric {
        Compatibility::Ssd => (0..h)
            .flat_map(|y| (0..c).map(move |ch| (y, ch)))
            .map(|(y, ch)| {
                let d = (px(a, w - 1, y, ch) - px(b, 0, y, ch)) as f64;
                d * d
            })
            .sum(),
        Compatibility::Mgc => {
            let inner = 1.min(w - 1);
            // one direction: statistics of `own`'s gradient toward the seam,
            // scored against the step into `other`
            let half = |own_edge: usize, own_inner: usize, own: &Image, other_edge: usize, other: &Image| -> f64 {
                let mut g = vec![0f32; h * c];
                for y in 0..h {
                    for ch in 0..c {
                        g[y * c + ch] = px(own, own_edge, y, ch) - px(own, own_inner, y, ch);
                    }
                }
                let (mu, sinv) = edges::gradient_stats(&g, h, c);
                let mut total = 0f64;
                for y in 0..h {
                    let d: Vec<f32> =
                        (0..c).map(|ch| px(other, other_edge, y, ch) - px(own, own_edge, y, ch) - mu[ch]).collect();
                    for i in 0..c {
                        for j in 0..c {
                            total += (d[i] * sinv[i * c + j] * d[j]) as f64;
                        }
                    }
                }
                total
            };
            half(w - 1, w - 1 - inner, a, 0, b) + half(0, inner, b, w - 1, a)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(default)]
    pub compatibility: Compatibility,
    /// Consider turned, mirrored and complemented pieces. Off gives a plain square-jigsaw solver.
    #[serde(default = "yes")]
    pub variant_search: bool,
    /// Also consider reordered channels on color pieces.
    #[serde(default = "yes")]
    pub channel_search: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget", with = "seconds")]
    pub time_budget: Duration,
    /// Partners remembered per piece side.
    #[serde(default = "default_candidates")]
    pub candidates: usize,
}

fn yes() -> bool {
    true
}

fn default_budget() -> Duration {
    Duration::from_secs(30 * 60)
}

fn default_candidates() -> usize {
    16
}

mod seconds {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Duration::try_from_secs_f64(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            compatibility: Compatibility::Mgc,
            variant_search: true,
            channel_search: true,
            seed: 0,
            time_budget: default_budget(),
            candidates: default_candidates(),
        }
    }
}

impl SolverConfig {
    pub fn plain() -> Self {
        Self { variant_search: false, channel_search: false, ..Self::default() }
    }
}

/// Reassembles `tiles` (row-major encrypted blocks) into a `cols x rows` grid.
pub fn solve(tiles: &[Image], cols: usize, rows: usize, cfg: &SolverConfig) -> Result<PuzzleAssembly> {
    let n = tiles.len();
    if n == 0 || n != cols * rows {
        return Err(Error::Grid(format!("{n} pieces cannot fill a {cols}x{rows} grid")));
    }
    let first = &tiles[0];
    require_square(first)?;
    if let Some(t) = tiles.iter().find(|t| t.dims() != first.dims() || t.channels() != first.channels()) {
        return Err(Error::Grid(format!(
            "piece of {}x{}x{} among {}x{}x{}",
            t.width(),
            t.height(),
            t.channels(),
            first.width(),
            first.height(),
            first.channels()
        )));
    }
    if n == 1 {
        return Ok(PuzzleAssembly::identity(1, 1));
    }
    let table = edges::EdgeTable::new(tiles, cfg.compatibility);
    Ok(solver::assemble(&table, n, cols, rows, cfg))
}

/// Splits an encrypted image into its pieces and solves it.
pub fn solve_image(enc: &Image, block: usize, cfg: &SolverConfig) -> Result<PuzzleAssembly> {
    let grid = split_blocks(enc, block, block)?;
    solve(&grid.blocks, grid.cols, grid.rows, cfg)
}

/// Draws the assembly: each slot shows its piece in the chosen variant.
pub fn render_assembly(tiles: &[Image], asm: &PuzzleAssembly) -> Result<Image> {
    asm.validate()?;
    if tiles.len() != asm.len() {
        return Err(Error::Grid(format!("{} tiles for {} slots", tiles.len(), asm.len())));
    }
    let (bw, bh) = tiles[0].dims();
    let mut out = Image::filled(asm.cols * bw, asm.rows * bh, tiles[0].channels(), 0)?;
    for (s, p) in asm.slots.iter().enumerate() {
        let v = variant(p.piece, &tiles[p.piece], p.pose, p.polarity, p.channel_perm)?;
        out.paste(&v.pixels, (s % asm.cols) * bw, (s / asm.cols) * bh)?;
    }
    Ok(out)
}

/// Outcome of attacking several independently keyed encryptions of one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    /// The trial with the highest `Dc + Nc + Lc`.
    pub best: AssemblyScore,
    pub best_trial: usize,
    pub trials: Vec<AssemblyScore>,
}

/// Encrypts `img` once per trial (trial `t` uses `key.for_image(t)`), attacks
/// each ciphertext, and keeps the best-scoring trial.
pub fn evaluate_attack(
    img: &Image,
    cipher: &CipherConfig,
    solver: &SolverConfig,
    trials: usize,
    key: &SecretKey,
) -> Result<AttackReport> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is needed".into()));
    }
    let mut scores = Vec::with_capacity(trials);
    for t in 0..trials {
        let keys = derive_step_keys(&key.for_image(t as u64));
        let (enc, truth) = encrypt(img, &keys, cipher)?;
        scores.push(attack_once(&enc, &truth, cipher.block_w, solver)?);
    }
    let best_trial =
        (0..trials).max_by(|&a, &b| scores[a].sum().total_cmp(&scores[b].sum()).then(b.cmp(&a))).expect("nonempty");
    Ok(AttackReport { best: scores[best_trial], best_trial, trials: scores })
}

/// Solves one ciphertext and scores it against the truth.
pub fn attack_once(enc: &Image, truth: &TransformRecord, block: usize, solver: &SolverConfig) -> Result<AssemblyScore> {
    score(&solve_image(enc, block, solver)?, truth)
}
