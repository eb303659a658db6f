//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::path::PathBuf;

use etc_scramble::analysis::{Placement, PuzzleAssembly};
use etc_scramble::cipher::{apply_channel_perm, apply_negpos, apply_pose, D4Pose};
use etc_scramble::keys::{DrawStream, TransformRecord, CHANNEL_PERMS};
use etc_scramble::pixel::pnm;
use etc_scramble::Image;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

/// The 20 fixture photographs, 256x192 RGB.
pub fn corpus() -> Vec<Image> {
    (0..20).map(|i| pnm::read(corpus_dir().join(format!("img{i:02}.ppm"))).expect("fixture")).collect()
}

pub fn rng(tag: u8) -> DrawStream {
    DrawStream::new(&[tag; 32])
}

pub fn random_image(r: &mut DrawStream, w: usize, h: usize, c: usize) -> Image {
    let data = (0..w * h * c).map(|_| r.next_u32() as u8).collect();
    Image::new(w, h, c, data).unwrap()
}

/// Every permutation of `0..n`, lexicographic.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in permutations(n - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|x| if x >= first { x + 1 } else { x }));
            out.push(p);
        }
    }
    out
}

fn rotate_cw(img: &Image) -> Image {
    let (w, h) = img.dims();
    let mut out = Image::filled(h, w, img.channels(), 0).unwrap();
    for c in 0..img.channels() {
        for y in 0..h {
            for x in 0..w {
                out.set(h - 1 - y, x, c, img.get(x, y, c));
            }
        }
    }
    out
}

fn mirror(img: &Image) -> Image {
    let (w, h) = img.dims();
    let mut out = img.clone();
    for c in 0..img.channels() {
        for y in 0..h {
            for x in 0..w {
                out.set(w - 1 - x, y, c, img.get(x, y, c));
            }
        }
    }
    out
}

/// Transforms a whole picture (any aspect ratio): turn, mirror, complement, reorder channels.
fn transform_picture(img: &Image, pose: D4Pose, polarity: bool, channels: [u8; 3]) -> Image {
    let mut out = img.clone();
    for _ in 0..pose.rotation {
        out = rotate_cw(&out);
    }
    if pose.flip_h {
        out = mirror(&out);
    }
    let mut out = apply_negpos(&out, polarity);
    if img.channels() == 3 {
        out = apply_channel_perm(&out, channels).unwrap();
    }
    out
}

fn globals(channels: usize) -> Vec<(D4Pose, bool, [u8; 3])> {
    let chs: Vec<[u8; 3]> = if channels == 3 { CHANNEL_PERMS.to_vec() } else { vec![[0, 1, 2]] };
    let mut out = Vec::new();
    for pose in D4Pose::all() {
        for pol in [false, true] {
            for &ch in &chs {
                out.push((pose, pol, ch));
            }
        }
    }
    out
}

fn side_by_side(a: &Image, b: &Image, horizontal: bool) -> Image {
    let (w, h) = a.dims();
    let mut out = if horizontal {
        Image::filled(2 * w, h, a.channels(), 0).unwrap()
    } else {
        Image::filled(w, 2 * h, a.channels(), 0).unwrap()
    };
    out.paste(a, 0, 0).unwrap();
    if horizontal {
        out.paste(b, w, 0).unwrap();
    } else {
        out.paste(b, 0, h).unwrap();
    }
    out
}

fn key(img: &Image) -> (usize, usize, Vec<u8>) {
    (img.width(), img.height(), img.samples().to_vec())
}

/// Scores assemblies by rendering pixels, without any knowledge of how
/// sides map under a pose.
pub struct PixelOracle {
    cols: usize,
    rows: usize,
    originals: Vec<Image>,
    encrypted: Vec<Image>,
    /// encrypted piece holding each original block
    piece_of: Vec<usize>,
    /// every original domino under every global transform
    good_pairs: HashSet<(usize, usize, Vec<u8>)>,
}

impl PixelOracle {
    pub fn new(truth: &TransformRecord, tile: usize, channels: usize, seed: u8) -> Self {
        let mut r = rng(seed);
        let n = truth.len();
        let originals: Vec<Image> = (0..n).map(|_| random_image(&mut r, tile, tile, channels)).collect();
        let encrypted = (0..n)
            .map(|i| {
                let t = apply_pose(&originals[truth.permutation[i]], truth.poses[i]).unwrap();
                let t = apply_negpos(&t, truth.polarity[i]);
                match &truth.channel_perm {
                    Some(c) => apply_channel_perm(&t, c[i]).unwrap(),
                    None => t,
                }
            })
            .collect();
        let mut good_pairs = HashSet::new();
        let (cols, rows) = (truth.cols, truth.rows);
        for y in 0..rows {
            for x in 0..cols {
                let a = &originals[y * cols + x];
                let mut dominoes = Vec::new();
                if x + 1 < cols {
                    dominoes.push(side_by_side(a, &originals[y * cols + x + 1], true));
                }
                if y + 1 < rows {
                    dominoes.push(side_by_side(a, &originals[(y + 1) * cols + x], false));
                }
                for d in dominoes {
                    for (p, pol, ch) in globals(channels) {
                        good_pairs.insert(key(&transform_picture(&d, p, pol, ch)));
                    }
                }
            }
        }
        let mut piece_of = vec![0; n];
        for (i, &src) in truth.permutation.iter().enumerate() {
            piece_of[src] = i;
        }
        Self { cols, rows, originals, encrypted, piece_of, good_pairs }
    }

    pub fn displayed(&self, p: &Placement) -> Image {
        let t = apply_pose(&self.encrypted[p.piece], p.pose).unwrap();
        let t = apply_negpos(&t, p.polarity);
        if t.channels() == 3 {
            apply_channel_perm(&t, p.channel_perm).unwrap()
        } else {
            t
        }
    }

    /// A placement for `piece` whose displayed tile is `original` under the given global transform.
    pub fn placement_showing(&self, piece: usize, slot_original: usize, g: (D4Pose, bool, [u8; 3])) -> Placement {
        let want = transform_picture(&self.originals[slot_original], g.0, g.1, g.2);
        for (pose, polarity, channel_perm) in globals(self.originals[0].channels()) {
            let p = Placement { piece, pose, polarity, channel_perm };
            if self.displayed(&p) == want {
                return p;
            }
        }
        panic!("no variant of piece {piece} shows block {slot_original}");
    }

    fn edges(&self, asm: &PuzzleAssembly) -> Vec<(usize, usize)> {
        let shown: Vec<Image> = asm.slots.iter().map(|p| self.displayed(p)).collect();
        let mut out = Vec::new();
        for y in 0..self.rows {
            for x in 0..self.cols {
                let s = y * self.cols + x;
                if x + 1 < self.cols && self.good_pairs.contains(&key(&side_by_side(&shown[s], &shown[s + 1], true))) {
                    out.push((s, s + 1));
                }
                let t = s + self.cols;
                if y + 1 < self.rows && self.good_pairs.contains(&key(&side_by_side(&shown[s], &shown[t], false))) {
                    out.push((s, t));
                }
            }
        }
        out
    }

    /// (Dc, Nc, Lc) by brute force.
    pub fn score(&self, asm: &PuzzleAssembly) -> (f64, f64, f64) {
        let n = asm.slots.len();
        let dc = (0..n).filter(|&s| self.displayed(&asm.slots[s]) == self.originals[s]).count();
        let edges = self.edges(asm);
        let boundaries = self.cols * (self.rows - 1) + self.rows * (self.cols - 1);
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut best = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            let mut size = 0;
            while let Some(v) = queue.pop_front() {
                size += 1;
                for &w in &adj[v] {
                    if !std::mem::replace(&mut seen[w], true) {
                        queue.push_back(w);
                    }
                }
            }
            best = best.max(size);
        }
        (dc as f64 / n as f64, edges.len() as f64 / boundaries as f64, best as f64 / n as f64)
    }

    /// Assemblies covering every slot arrangement: plain variants, a shared
    /// global transform per arrangement, and independent random variants.
    pub fn assemblies(&self, r: &mut DrawStream) -> Vec<PuzzleAssembly> {
        let n = self.cols * self.rows;
        let channels = self.originals[0].channels();
        let all = globals(channels);
        let mut out = Vec::new();
        for arrangement in permutations(n) {
            let plain = arrangement.iter().map(|&p| Placement::plain(p)).collect();
            out.push(PuzzleAssembly { cols: self.cols, rows: self.rows, slots: plain });

            // Shows original block arrangement[s] at slot s, all under one transform.
            let g = all[r.below(all.len() as u32).unwrap() as usize];
            let shown: Vec<Placement> =
                arrangement.iter().map(|&orig| self.placement_showing(self.piece_of[orig], orig, g)).collect();
            out.push(PuzzleAssembly { cols: self.cols, rows: self.rows, slots: shown });

            let random = arrangement
                .iter()
                .map(|&p| {
                    let (pose, polarity, channel_perm) = all[r.below(all.len() as u32).unwrap() as usize];
                    Placement { piece: p, pose, polarity, channel_perm }
                })
                .collect();
            out.push(PuzzleAssembly { cols: self.cols, rows: self.rows, slots: random });
        }
        // the whole picture turned, mirrored, complemented or recolored
        let index_map = Image::new(self.cols, self.rows, 1, (0..n as u8).collect()).unwrap();
        for g in all {
            let moved = transform_picture(&index_map, g.0, false, [0, 1, 2]);
            if moved.dims() != (self.cols, self.rows) {
                continue;
            }
            let slots = moved
                .samples()
                .iter()
                .map(|&orig| self.placement_showing(self.piece_of[orig as usize], orig as usize, g))
                .collect();
            out.push(PuzzleAssembly { cols: self.cols, rows: self.rows, slots });
        }
        out
    }
}
