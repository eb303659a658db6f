//! Key-space arithmetic, PSNR, and jigsaw reassembly scores.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cipher::{D4Pose, BOTTOM, RIGHT};
use crate::error::{Error, Result};
use crate::keys::TransformRecord;
use crate::pixel::Image;

/// Number of whole blocks: `floor(x / bx) * floor(y / by)`.
pub fn block_count(x: usize, y: usize, bx: usize, by: usize) -> usize {
    (x / bx) * (y / by)
}

fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

fn pow(base: u32, exp: u64) -> BigUint {
    BigUint::from(base).pow(u32::try_from(exp).expect("exponent fits in u32"))
}

/// `log2` of an arbitrarily large integer, accurate to double precision.
pub fn log2_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().expect("fits in 64 bits").to_f64().expect("finite").log2();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    (top.to_u64().expect("64 bits") as f64).log2() + shift as f64
}

/// Conventional scheme: `n! * 8^n * 2^n * 6^n`.
pub fn keyspace_conventional(n: u64) -> BigUint {
    factorial(n) * pow(8, n) * pow(2, n) * pow(6, n)
}

/// Grayscale scheme over an image whose RGB form has `n` blocks:
/// `(3n)! * 8^(3n) * 2^(3n)`.
pub fn keyspace_proposed(n: u64) -> BigUint {
    factorial(3 * n) * pow(8, 3 * n) * pow(2, 3 * n)
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| serde::de::Error::custom("not a decimal integer"))
    }
}

/// Exact key-space sizes for `n` blocks. Large integers serialize as decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeySpaceReport {
    pub n: u64,
    /// Block permutations, `n!`.
    #[serde(with = "decimal")]
    pub n_s: BigUint,
    /// Rotation and inversion, `8^n`.
    #[serde(with = "decimal")]
    pub n_ri: BigUint,
    /// Negative-positive transformation, `2^n`.
    #[serde(with = "decimal")]
    pub n_n: BigUint,
    /// Color component shuffling, `6^n`.
    #[serde(with = "decimal")]
    pub n_c: BigUint,
    #[serde(with = "decimal")]
    pub n_a: BigUint,
    #[serde(with = "decimal")]
    pub n_b: BigUint,
    pub log2_n_a: f64,
    pub log2_n_b: f64,
}

impl KeySpaceReport {
    pub fn new(n: u64) -> Self {
        let n_a = keyspace_conventional(n);
        let n_b = keyspace_proposed(n);
        Self {
            n,
            n_s: factorial(n),
            n_ri: pow(8, n),
            n_n: pow(2, n),
            n_c: pow(6, n),
            log2_n_a: round3(log2_big(&n_a)),
            log2_n_b: round3(log2_big(&n_b)),
            n_a,
            n_b,
        }
    }
}

/// PSNR over all samples of all channels; `+inf` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if a.dims() != b.dims() || a.channels() != b.channels() {
        return Err(Error::Dimension(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let sse: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum();
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / a.samples().len() as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

/// Decibels for reports: infinity is written as `inf`.
pub fn format_db(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{db:.3}")
    }
}

/// A transform made of a pose, a complement flag and a channel order.
/// Output channel `c` takes input channel `channels[c]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockTransform {
    pub pose: D4Pose,
    pub polarity: bool,
    pub channels: [u8; 3],
}

impl BlockTransform {
    pub const IDENTITY: BlockTransform =
        BlockTransform { pose: D4Pose::IDENTITY, polarity: false, channels: [0, 1, 2] };

    /// `self` first, then `next`.
    pub fn then(self, next: BlockTransform) -> BlockTransform {
        BlockTransform {
            pose: self.pose.then(next.pose),
            polarity: self.polarity ^ next.polarity,
            channels: next.channels.map(|c| self.channels[c as usize]),
        }
    }
}

/// Where the solver put one encrypted piece, and how it undid the piece's transform.
///
/// The displayed tile is the encrypted tile posed, then complemented if
/// `polarity`, then channel-reordered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub piece: usize,
    pub pose: D4Pose,
    pub polarity: bool,
    #[serde(default = "identity_channels")]
    pub channel_perm: [u8; 3],
}

fn identity_channels() -> [u8; 3] {
    [0, 1, 2]
}

impl Placement {
    pub fn plain(piece: usize) -> Self {
        Self { piece, pose: D4Pose::IDENTITY, polarity: false, channel_perm: [0, 1, 2] }
    }

    pub fn transform(&self) -> BlockTransform {
        BlockTransform { pose: self.pose, polarity: self.polarity, channels: self.channel_perm }
    }
}

/// A solver's answer: `slots[s]` (row-major over `cols x rows`) holds one placement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuzzleAssembly {
    pub cols: usize,
    pub rows: usize,
    pub slots: Vec<Placement>,
}

impl PuzzleAssembly {
    pub fn identity(cols: usize, rows: usize) -> Self {
        Self { cols, rows, slots: (0..cols * rows).map(Placement::plain).collect() }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cols * self.rows;
        if self.slots.len() != n {
            return Err(Error::Grid(format!("{} placements for a {}x{} grid", self.slots.len(), self.cols, self.rows)));
        }
        let mut seen = vec![false; n];
        for p in &self.slots {
            if p.piece >= n || std::mem::replace(&mut seen[p.piece], true) {
                return Err(Error::Grid("placement is not a bijection".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssemblyScore {
    pub dc: f64,
    pub nc: f64,
    pub lc: f64,
}

impl AssemblyScore {
    pub fn sum(&self) -> f64 {
        self.dc + self.nc + self.lc
    }

    pub fn mean(scores: &[AssemblyScore]) -> AssemblyScore {
        let n = scores.len().max(1) as f64;
        AssemblyScore {
            dc: scores.iter().map(|s| s.dc).sum::<f64>() / n,
            nc: scores.iter().map(|s| s.nc).sum::<f64>() / n,
            lc: scores.iter().map(|s| s.lc).sum::<f64>() / n,
        }
    }
}

/// Per-slot view of an assembly against the ground truth.
struct Judged {
    cols: usize,
    rows: usize,
    /// original grid position of the piece in each slot
    origin: Vec<(usize, usize)>,
    /// original block -> displayed tile, per slot
    total: Vec<BlockTransform>,
    single_channel: bool,
}

impl Judged {
    fn new(asm: &PuzzleAssembly, truth: &TransformRecord) -> Result<Self> {
        asm.validate()?;
        truth.validate()?;
        if (asm.cols, asm.rows) != (truth.cols, truth.rows) {
            return Err(Error::Dimension(format!(
                "assembly is {}x{}, truth is {}x{}",
                asm.cols, asm.rows, truth.cols, truth.rows
            )));
        }
        let mut origin = Vec::with_capacity(asm.len());
        let mut total = Vec::with_capacity(asm.len());
        for p in &asm.slots {
            let src = truth.permutation[p.piece];
            origin.push((src % truth.cols, src / truth.cols));
            let enc = BlockTransform {
                pose: truth.poses[p.piece],
                polarity: truth.polarity[p.piece],
                channels: truth.channel_perm.as_ref().map_or([0, 1, 2], |c| c[p.piece]),
            };
            total.push(enc.then(p.transform()));
        }
        Ok(Self { cols: asm.cols, rows: asm.rows, origin, total, single_channel: truth.channel_perm.is_none() })
    }

    fn same(&self, a: BlockTransform, b: BlockTransform) -> bool {
        a.pose == b.pose && a.polarity == b.polarity && (self.single_channel || a.channels == b.channels)
    }

    fn restored(&self, s: usize) -> bool {
        let t = self.total[s];
        t.pose.is_identity() && !t.polarity && (self.single_channel || t.channels == [0, 1, 2])
    }

    /// Slot `t` lies in direction `dir` from slot `s`. The boundary is right
    /// when both pieces carry the same overall transform and, under that
    /// transform's pose, their original offset points the same way.
    fn joined(&self, s: usize, t: usize, dir: usize) -> bool {
        if !self.same(self.total[s], self.total[t]) {
            return false;
        }
        let ((ax, ay), (bx, by)) = (self.origin[s], self.origin[t]);
        let original_dir = match (bx as isize - ax as isize, by as isize - ay as isize) {
            (0, -1) => 0,
            (1, 0) => 1,
            (0, 1) => 2,
            (-1, 0) => 3,
            _ => return false,
        };
        self.total[s].pose.map_side(original_dir) == dir
    }

    /// Every internal boundary as (slot, neighbor, direction).
    fn boundaries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.rows).flat_map(move |y| {
            (0..self.cols).flat_map(move |x| {
                let s = y * self.cols + x;
                let right = (x + 1 < self.cols).then_some((s, s + 1, RIGHT));
                let down = (y + 1 < self.rows).then_some((s, s + self.cols, BOTTOM));
                right.into_iter().chain(down)
            })
        })
    }
}

/// Fraction of pieces sitting at their original position, fully restored.
pub fn direct_comparison(asm: &PuzzleAssembly, truth: &TransformRecord) -> Result<f64> {
    let j = Judged::new(asm, truth)?;
    let hits = (0..asm.len()).filter(|&s| j.origin[s] == (s % j.cols, s / j.cols) && j.restored(s)).count();
    Ok(hits as f64 / asm.len() as f64)
}

/// Number of internal boundaries of a `u x v` grid.
pub fn boundary_count(u: usize, v: usize) -> usize {
    (2 * u * v).saturating_sub(u + v)
}

/// Fraction of internal boundaries joining true neighbors in the right relative orientation.
pub fn neighbor_comparison(asm: &PuzzleAssembly, truth: &TransformRecord) -> Result<f64> {
    let j = Judged::new(asm, truth)?;
    let b = boundary_count(j.cols, j.rows);
    if b == 0 {
        // a single piece has no boundaries to get wrong
        return Ok(1.0);
    }
    let good = j.boundaries().filter(|&(s, t, d)| j.joined(s, t, d)).count();
    Ok(good as f64 / b as f64)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Size of the largest correctly joined region, as a fraction of all pieces.
pub fn largest_component(asm: &PuzzleAssembly, truth: &TransformRecord) -> Result<f64> {
    let j = Judged::new(asm, truth)?;
    let n = asm.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    for (s, t, d) in j.boundaries().collect::<Vec<_>>() {
        if j.joined(s, t, d) {
            let (a, b) = (find(&mut parent, s), find(&mut parent, t));
            if a != b {
                let (big, small) = if size[a] >= size[b] { (a, b) } else { (b, a) };
                parent[small] = big;
                size[big] += size[small];
            }
        }
    }
    let best = (0..n).filter(|&i| find(&mut parent, i) == i).map(|i| size[i]).max().unwrap_or(0);
    Ok(best as f64 / n as f64)
}

pub fn score(asm: &PuzzleAssembly, truth: &TransformRecord) -> Result<AssemblyScore> {
    Ok(AssemblyScore {
        dc: direct_comparison(asm, truth)?,
        nc: neighbor_comparison(asm, truth)?,
        lc: largest_component(asm, truth)?,
    })
}

/// One line of an experiment report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub image_id: String,
    pub scheme: String,
    pub block: usize,
    #[serde(rename = "Dc")]
    pub dc: Option<f64>,
    #[serde(rename = "Nc")]
    pub nc: Option<f64>,
    #[serde(rename = "Lc")]
    pub lc: Option<f64>,
    /// Decibels, or `"inf"`.
    pub psnr_db: Option<String>,
}

impl ReportRow {
    pub const CSV_HEADER: &'static str = "image_id,scheme,block,Dc,Nc,Lc,psnr_db";

    pub fn to_csv(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.image_id,
            self.scheme,
            self.block,
            f(self.dc),
            f(self.nc),
            f(self.lc),
            self.psnr_db.clone().unwrap_or_default()
        )
    }
}
