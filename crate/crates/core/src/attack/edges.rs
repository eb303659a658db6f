//! Boundary statistics of untransformed pieces and the pairwise cost of
//! joining two of their sides under a relative transform.
//!
//! Each side is read clockwise around its tile. When two displayed tiles
//! abut, their touching sides read clockwise run in opposite directions, so
//! whether the native strips pair up reversed or straight depends only on
//! whether exactly one of the two tiles is mirrored. Complementing both tiles
//! or reordering both tiles' channels the same way leaves every cost
//! unchanged, so only relative polarity and relative channel order matter.

use super::Compatibility;
use crate::cipher::{BOTTOM, RIGHT, TOP};
use crate::keys::{invert_channel_perm, CHANNEL_PERMS};
use crate::pixel::Image;

/// Ridge added to the gradient covariance so flat strips stay invertible.
const RIDGE: f32 = 1.0;

/// How the second side of a join relates to the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Relation {
    /// Exactly one of the two tiles is mirrored.
    pub mirrored: bool,
    /// The two tiles have opposite polarity.
    pub complemented: bool,
    /// Channel `i` of the first tile meets channel `channels[i]` of the second.
    pub channels: [u8; 3],
}

pub struct EdgeTable {
    pub len: usize,
    pub channels: usize,
    metric: Compatibility,
    /// `[piece][side][k][c]`, clockwise
    edge: Vec<f32>,
    /// `[piece][side][c]`
    mu: Vec<f32>,
    /// `[piece][side][c][c]`
    sinv: Vec<f32>,
}

/// Clockwise position `k` on `side`, `depth` pixels inward.
fn side_coord(side: usize, k: usize, depth: usize, l: usize) -> (usize, usize) {
    match side {
        TOP => (k, depth),
        RIGHT => (l - 1 - depth, k),
        BOTTOM => (l - 1 - k, l - 1 - depth),
        _ => (depth, l - 1 - k),
    }
}

fn invert(m: &[f32], c: usize) -> Vec<f32> {
    if c == 1 {
        return vec![1.0 / m[0]];
    }
    let m = |i: usize, j: usize| m[i * 3 + j] as f64;
    let cof = [
        m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1),
        m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2),
        m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1),
        m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2),
        m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0),
        m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2),
        m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0),
        m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1),
        m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0),
    ];
    let det = m(0, 0) * cof[0] + m(0, 1) * cof[3] + m(0, 2) * cof[6];
    cof.iter().map(|v| (v / det) as f32).collect()
}

/// Mean and ridge-regularized inverse covariance of `g` (`l` rows of `c` values).
pub(crate) fn gradient_stats(g: &[f32], l: usize, c: usize) -> (Vec<f32>, Vec<f32>) {
    let mut mu = vec![0f32; c];
    for k in 0..l {
        for i in 0..c {
            mu[i] += g[k * c + i];
        }
    }
    mu.iter_mut().for_each(|m| *m /= l as f32);
    let mut cov = vec![0f32; c * c];
    for k in 0..l {
        for i in 0..c {
            for j in 0..c {
                cov[i * c + j] += (g[k * c + i] - mu[i]) * (g[k * c + j] - mu[j]);
            }
        }
    }
    for i in 0..c {
        for j in 0..c {
            cov[i * c + j] /= l as f32;
        }
        cov[i * c + i] += RIDGE;
    }
    (mu, invert(&cov, c))
}

impl EdgeTable {
    pub fn new(tiles: &[Image], metric: Compatibility) -> Self {
        let l = tiles[0].width();
        let c = tiles[0].channels();
        let mut edge = Vec::with_capacity(tiles.len() * 4 * l * c);
        let mut mu = Vec::with_capacity(tiles.len() * 4 * c);
        let mut sinv = Vec::with_capacity(tiles.len() * 4 * c * c);
        let mut grad = vec![0f32; l * c];
        for t in tiles {
            for side in 0..4 {
                for k in 0..l {
                    let (ex, ey) = side_coord(side, k, 0, l);
                    let (ix, iy) = side_coord(side, k, 1.min(l - 1), l);
                    for ch in 0..c {
                        let e = t.get(ex, ey, ch) as f32;
                        edge.push(e);
                        grad[k * c + ch] = e - t.get(ix, iy, ch) as f32;
                    }
                }
                let (m, s) = gradient_stats(&grad, l, c);
                mu.extend(m);
                sinv.extend(s);
            }
        }
        Self { len: l, channels: c, metric, edge, mu, sinv }
    }

    fn edge(&self, piece: usize, side: usize) -> &[f32] {
        let n = self.len * self.channels;
        let at = (piece * 4 + side) * n;
        &self.edge[at..at + n]
    }

    /// Cost of joining side `a` of piece `p` to side `b` of piece `q`.
    pub fn cost(&self, p: usize, a: usize, q: usize, b: usize, rel: Relation) -> f32 {
        match self.channels {
            1 => self.cost_c::<1>(p, a, q, b, rel),
            _ => self.cost_c::<3>(p, a, q, b, rel),
        }
    }

    fn cost_c<const C: usize>(&self, p: usize, a: usize, q: usize, b: usize, rel: Relation) -> f32 {
        let (ea, eb) = (self.edge(p, a), self.edge(q, b));
        let fwd = rel.channels.map(usize::from);
        match self.metric {
            Compatibility::Ssd => ssd::<C>(ea, eb, self.len, !rel.mirrored, rel.complemented, fwd),
            Compatibility::Mgc => {
                let back = invert_channel_perm(rel.channels).map(usize::from);
                let (sa, sb) = (p * 4 + a, q * 4 + b);
                let ha = half_mgc::<C>(
                    ea,
                    &self.mu[sa * C..(sa + 1) * C],
                    &self.sinv[sa * C * C..(sa + 1) * C * C],
                    eb,
                    self.len,
                    !rel.mirrored,
                    rel.complemented,
                    fwd,
                );
                let hb = half_mgc::<C>(
                    eb,
                    &self.mu[sb * C..(sb + 1) * C],
                    &self.sinv[sb * C * C..(sb + 1) * C * C],
                    ea,
                    self.len,
                    !rel.mirrored,
                    rel.complemented,
                    back,
                );
                ha + hb
            }
        }
    }

    /// Relative channel orders worth trying.
    pub fn channel_hypotheses(&self, search: bool) -> &'static [[u8; 3]] {
        if self.channels == 3 && search {
            &CHANNEL_PERMS
        } else {
            &CHANNEL_PERMS[..1]
        }
    }
}

/// Squared distance of the predicted continuation of `own` to the strip of `other`.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn half_mgc<const C: usize>(
    own: &[f32],
    mu: &[f32],
    sinv: &[f32],
    other: &[f32],
    l: usize,
    reversed: bool,
    complemented: bool,
    map: [usize; 3],
) -> f32 {
    let mut total = 0f32;
    for k in 0..l {
        let ko = if reversed { l - 1 - k } else { k };
        let mut d = [0f32; C];
        for i in 0..C {
            let mut v = other[ko * C + map[i]];
            if complemented {
                v = 255.0 - v;
            }
            d[i] = v - own[k * C + i] - mu[i];
        }
        for i in 0..C {
            let mut row = 0f32;
            for j in 0..C {
                row += sinv[i * C + j] * d[j];
            }
            total += d[i] * row;
        }
    }
    total
}

#[inline(always)]
fn ssd<const C: usize>(a: &[f32], b: &[f32], l: usize, reversed: bool, complemented: bool, map: [usize; 3]) -> f32 {
    let mut total = 0f32;
    for k in 0..l {
        let kb = if reversed { l - 1 - k } else { k };
        for i in 0..C {
            let mut v = b[kb * C + map[i]];
            if complemented {
                v = 255.0 - v;
            }
            let d = v - a[k * C + i];
            total += d * d;
        }
    }
    total
}
