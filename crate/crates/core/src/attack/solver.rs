//! Greedy best-first placement over precomputed candidate joins.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::edges::{EdgeTable, Relation};
use super::SolverConfig;
use crate::analysis::{Placement, PuzzleAssembly};
use crate::cipher::D4Pose;
use crate::keys::invert_channel_perm;

#[derive(Clone, Copy, Debug)]
struct Cand {
    cost: f32,
    other: u32,
    other_side: u8,
    rel: Relation,
}

/// The displayed form of a placed piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Variant {
    pose: D4Pose,
    polarity: bool,
    channels: [u8; 3],
}

const IDENTITY: Variant = Variant { pose: D4Pose::IDENTITY, polarity: false, channels: [0, 1, 2] };

fn opposite(dir: usize) -> usize {
    (dir + 2) % 4
}

fn step(x: i32, y: i32, dir: usize) -> (i32, i32) {
    match dir {
        0 => (x, y - 1),
        1 => (x + 1, y),
        2 => (x, y + 1),
        _ => (x - 1, y),
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sorted, bounded candidate list.
fn offer(list: &mut Vec<Cand>, k: usize, c: Cand) {
    if list.len() == k && list.last().is_some_and(|l| l.cost <= c.cost) {
        return;
    }
    let at = list.partition_point(|e| e.cost <= c.cost);
    list.insert(at, c);
    list.truncate(k);
}

struct Hypotheses {
    mirrored: &'static [bool],
    complemented: &'static [bool],
    channels: &'static [[u8; 3]],
    any_side: bool,
}

impl Hypotheses {
    fn new(table: &EdgeTable, cfg: &SolverConfig) -> Self {
        let v = cfg.variant_search;
        Self {
            mirrored: if v { &[false, true] } else { &[false] },
            complemented: if v { &[false, true] } else { &[false] },
            channels: table.channel_hypotheses(v && cfg.channel_search),
            any_side: v,
        }
    }

    fn sides(&self, a: usize) -> std::ops::Range<usize> {
        if self.any_side {
            0..4
        } else {
            opposite(a)..opposite(a) + 1
        }
    }

    /// Cheapest relation for joining `(p, a)` to `(q, b)` for each mirroring.
    fn best(&self, t: &EdgeTable, p: usize, a: usize, q: usize, b: usize, mirrored: bool) -> (f32, Relation) {
        let mut best = (f32::INFINITY, Relation { mirrored, complemented: false, channels: [0, 1, 2] });
        for &complemented in self.complemented {
            for &channels in self.channels {
                let rel = Relation { mirrored, complemented, channels };
                let c = t.cost(p, a, q, b, rel);
                if c < best.0 {
                    best = (c, rel);
                }
            }
        }
        best
    }
}

fn reversed(rel: Relation) -> Relation {
    Relation { channels: invert_channel_perm(rel.channels), ..rel }
}

fn build_lists(t: &EdgeTable, h: &Hypotheses, n: usize, k: usize) -> Vec<Vec<Cand>> {
    let mut lists = vec![Vec::with_capacity(k + 1); n * 4];
    for p in 0..n {
        for q in p + 1..n {
            for a in 0..4 {
                for b in h.sides(a) {
                    for &m in h.mirrored {
                        let (cost, rel) = h.best(t, p, a, q, b, m);
                        offer(&mut lists[p * 4 + a], k, Cand { cost, other: q as u32, other_side: b as u8, rel });
                        offer(
                            &mut lists[q * 4 + b],
                            k,
                            Cand { cost, other: p as u32, other_side: a as u8, rel: reversed(rel) },
                        );
                    }
                }
            }
        }
    }
    lists
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    priority: f32,
    tie: u64,
    piece: u32,
    dir: u8,
    at: u32,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Entry {
    /// Reversed so the max-heap pops the most confident entry first.
    fn cmp(&self, o: &Self) -> Ordering {
        o.priority.total_cmp(&self.priority).then(o.tie.cmp(&self.tie))
    }
}

/// Ratio of a candidate's cost to the best alternative piece; small is confident.
fn confidence(list: &[Cand], at: usize) -> f32 {
    let c = list[at];
    let second = list[at + 1..].iter().find(|e| e.other != c.other).map_or(c.cost * 4.0 + 1.0, |e| e.cost);
    (c.cost + 1e-3) / (second + 1e-3)
}

struct Board {
    cols: usize,
    rows: usize,
    half: i32,
    side: usize,
    cells: Vec<Option<u32>>,
    at: Vec<Option<(i32, i32, Variant)>>,
    bbox: Option<(i32, i32, i32, i32)>,
    count: usize,
}

impl Board {
    fn new(n: usize, cols: usize, rows: usize) -> Self {
        let half = cols.max(rows) as i32;
        let side = (2 * half + 1) as usize;
        Self { cols, rows, half, side, cells: vec![None; side * side], at: vec![None; n], bbox: None, count: 0 }
    }

    fn index(&self, x: i32, y: i32) -> Option<usize> {
        let (i, j) = (x + self.half, y + self.half);
        (i >= 0 && j >= 0 && (i as usize) < self.side && (j as usize) < self.side)
            .then(|| j as usize * self.side + i as usize)
    }

    fn grown(&self, x: i32, y: i32) -> (i32, i32, i32, i32) {
        match self.bbox {
            None => (x, x, y, y),
            Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
        }
    }

    fn fits(&self, x: i32, y: i32) -> bool {
        let (x0, x1, y0, y1) = self.grown(x, y);
        let (w, h) = ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
        (w <= self.cols && h <= self.rows) || (w <= self.rows && h <= self.cols)
    }

    fn free(&self, x: i32, y: i32) -> bool {
        self.index(x, y).is_some_and(|i| self.cells[i].is_none()) && self.fits(x, y)
    }

    fn put(&mut self, piece: usize, x: i32, y: i32, v: Variant) {
        let i = self.index(x, y).expect("placement inside the board");
        self.cells[i] = Some(piece as u32);
        self.at[piece] = Some((x, y, v));
        self.bbox = Some(self.grown(x, y));
        self.count += 1;
    }
}

pub(super) fn assemble(table: &EdgeTable, n: usize, cols: usize, rows: usize, cfg: &SolverConfig) -> PuzzleAssembly {
    let start = Instant::now();
    let hyp = Hypotheses::new(table, cfg);
    let k = cfg.candidates.max(2);
    let mut lists = build_lists(table, &hyp, n, k);
    let mut board = Board::new(n, cols, rows);
    let tie = |piece: usize, dir: usize, at: usize| {
        splitmix(cfg.seed ^ ((piece as u64) << 20 | (dir as u64) << 16 | at as u64))
    };

    // seed with the most confident join overall
    let seed = (0..n * 4)
        .filter(|&i| !lists[i].is_empty())
        .min_by(|&i, &j| {
            confidence(&lists[i], 0)
                .total_cmp(&confidence(&lists[j], 0))
                .then(lists[i][0].cost.total_cmp(&lists[j][0].cost))
                .then(tie(i / 4, i % 4, 0).cmp(&tie(j / 4, j % 4, 0)))
        })
        .expect("at least two pieces");
    let (p0, a0) = (seed / 4, seed % 4);
    board.put(p0, 0, 0, IDENTITY);
    let mut heap = BinaryHeap::new();
    let derive = |va: Variant, dir: usize, c: &Cand| Variant {
        pose: D4Pose::turning(c.other_side as usize, opposite(dir), va.pose.flip_h ^ c.rel.mirrored),
        polarity: va.polarity ^ c.rel.complemented,
        channels: va.channels.map(|ch| c.rel.channels[ch as usize]),
    };
    let first = lists[seed][0];
    let (x1, y1) = step(0, 0, a0);
    board.put(first.other as usize, x1, y1, derive(IDENTITY, a0, &first));

    let push_frontier = |board: &Board, lists: &[Vec<Cand>], heap: &mut BinaryHeap<Entry>, piece: usize| {
        let (x, y, v) = board.at[piece].expect("placed");
        for dir in 0..4 {
            let (nx, ny) = step(x, y, dir);
            let list = &lists[piece * 4 + v.pose.side_facing(dir)];
            if board.free(nx, ny) && !list.is_empty() {
                heap.push(Entry {
                    priority: confidence(list, 0),
                    tie: tie(piece, dir, 0),
                    piece: piece as u32,
                    dir: dir as u8,
                    at: 0,
                });
            }
        }
    };
    push_frontier(&board, &lists, &mut heap, p0);
    push_frontier(&board, &lists, &mut heap, first.other as usize);

    let mut steps = 0u64;
    while board.count < n {
        steps += 1;
        if steps.is_multiple_of(256) && start.elapsed() > cfg.time_budget {
            break;
        }
        let Some(e) = heap.pop() else { break };
        let piece = e.piece as usize;
        let dir = e.dir as usize;
        let (x, y, v) = board.at[piece].expect("frontier pieces are placed");
        let (nx, ny) = step(x, y, dir);
        if !board.free(nx, ny) {
            continue;
        }
        let li = piece * 4 + v.pose.side_facing(dir);
        let mut at = e.at as usize;
        while at < lists[li].len() && board.at[lists[li][at].other as usize].is_some() {
            at += 1;
        }
        if at >= lists[li].len() {
            // every listed partner is taken; look again among the rest
            let side = li % 4;
            let mut fresh = Vec::with_capacity(k + 1);
            for q in (0..n).filter(|&q| board.at[q].is_none()) {
                for b in hyp.sides(side) {
                    for &m in hyp.mirrored {
                        let (cost, rel) = hyp.best(table, piece, side, q, b, m);
                        offer(&mut fresh, k, Cand { cost, other: q as u32, other_side: b as u8, rel });
                    }
                }
            }
            lists[li] = fresh;
            if lists[li].is_empty() {
                continue;
            }
            at = 0;
        }
        if at != e.at as usize {
            // re-queue with the confidence of the next live candidate
            heap.push(Entry { priority: confidence(&lists[li], at), tie: tie(piece, dir, at), at: at as u32, ..e });
            continue;
        }
        let c = lists[li][at];
        board.put(c.other as usize, nx, ny, derive(v, dir, &c));
        push_frontier(&board, &lists, &mut heap, c.other as usize);
    }
    finish(board, n)
}

/// Lays the grown region into the `cols x rows` grid, fills any holes, and
/// turns a transposed result upright.
fn finish(board: Board, n: usize) -> PuzzleAssembly {
    let (cols, rows) = (board.cols, board.rows);
    let (x0, x1, y0, y1) = board.bbox.expect("seeded board");
    let (w, h) = ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
    let transposed = !(w <= cols && h <= rows);
    let (gw, gh) = if transposed { (rows, cols) } else { (cols, rows) };
    let mut grid: Vec<Option<(usize, Variant)>> = vec![None; gw * gh];
    for (piece, slot) in board.at.iter().enumerate() {
        if let Some((x, y, v)) = slot {
            grid[(y - y0) as usize * gw + (x - x0) as usize] = Some((piece, *v));
        }
    }
    let mut spare = (0..n).filter(|&p| board.at[p].is_none());
    for cell in grid.iter_mut().filter(|c| c.is_none()) {
        *cell = Some((spare.next().expect("one piece per cell"), IDENTITY));
    }
    let quarter = D4Pose::new(1, false);
    let mut slots = vec![Placement::plain(0); n];
    for y in 0..gh {
        for x in 0..gw {
            let (piece, v) = grid[y * gw + x].expect("filled");
            let (tx, ty, pose) = if transposed { (gh - 1 - y, x, v.pose.then(quarter)) } else { (x, y, v.pose) };
            slots[ty * cols + tx] = Placement { piece, pose, polarity: v.polarity, channel_perm: v.channels };
        }
    }
    PuzzleAssembly { cols, rows, slots }
}
