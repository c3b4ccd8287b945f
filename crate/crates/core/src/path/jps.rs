//! Jump point search on the 26-connected voxel lattice.
//!
//! A neighbour is pruned when the local 3x3x3 neighbourhood offers a path
//! from the parent that avoids the current node and is no longer (straight
//! arrival) or strictly shorter (diagonal arrival). Pruning sets are cached
//! per (arrival direction, neighbourhood occupancy mask).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rustc_hash::FxHashMap;

const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT3: f64 = 1.732_050_807_568_877_2;

pub type Cell = [i64; 3];

/// All 26 unit moves, ordered by index `(dx+1) + 3(dy+1) + 9(dz+1)` minus the centre.
pub fn directions() -> &'static [Cell; 26] {
    static DIRS: std::sync::OnceLock<[Cell; 26]> = std::sync::OnceLock::new();
    DIRS.get_or_init(|| {
        let mut out = [[0; 3]; 26];
        let mut n = 0;
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if (dx, dy, dz) != (0, 0, 0) {
                        out[n] = [dx, dy, dz];
                        n += 1;
                    }
                }
            }
        }
        out
    })
}

fn cube_index(d: Cell) -> usize {
    ((d[0] + 1) + 3 * (d[1] + 1) + 9 * (d[2] + 1)) as usize
}

pub fn move_cost(d: Cell) -> f64 {
    match d.iter().filter(|&&c| c != 0).count() {
        0 => 0.0,
        1 => 1.0,
        2 => SQRT2,
        _ => SQRT3,
    }
}

/// Octile distance in 3-D: the obstacle-free 26-connected path length.
pub fn octile(a: Cell, b: Cell) -> f64 {
    let mut d = [(a[0] - b[0]).abs(), (a[1] - b[1]).abs(), (a[2] - b[2]).abs()];
    d.sort_unstable();
    let (lo, mid, hi) = (d[0] as f64, d[1] as f64, d[2] as f64);
    lo * SQRT3 + (mid - lo) * SQRT2 + (hi - mid)
}

fn add(a: Cell, b: Cell) -> Cell {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Directions whose non-zero components are a subset of `d`'s, same signs.
fn sub_directions(d: Cell) -> &'static [Cell] {
    static SUBS: std::sync::OnceLock<Vec<Vec<Cell>>> = std::sync::OnceLock::new();
    let table = SUBS.get_or_init(|| {
        (0..27)
            .map(|i| {
                let d = [(i % 3) as i64 - 1, ((i / 3) % 3) as i64 - 1, (i / 9) as i64 - 1];
                directions().iter().copied().filter(|e| (0..3).all(|k| e[k] == 0 || e[k] == d[k])).collect()
            })
            .collect()
    });
    &table[cube_index(d)]
}

/// Blocked-cell oracle plus the grid bounds.
pub trait Lattice {
    fn dims(&self) -> [usize; 3];
    fn blocked_index(&self, i: usize) -> bool;

    fn index(&self, c: Cell) -> Option<usize> {
        let d = self.dims();
        if (0..3).any(|k| c[k] < 0 || c[k] as usize >= d[k]) {
            return None;
        }
        Some(c[0] as usize + d[0] * (c[1] as usize + d[1] * c[2] as usize))
    }

    fn open(&self, c: Cell) -> bool {
        self.index(c).is_some_and(|i| !self.blocked_index(i))
    }
}

/// Dense blocked mask.
pub struct Mask<'a> {
    pub dims: [usize; 3],
    pub blocked: &'a [bool],
}

impl Lattice for Mask<'_> {
    fn dims(&self) -> [usize; 3] {
        self.dims
    }
    fn blocked_index(&self, i: usize) -> bool {
        self.blocked[i]
    }
}

struct Pruner {
    cache: FxHashMap<(usize, u32), Vec<Cell>>,
}

impl Pruner {
    fn new() -> Self {
        Self { cache: FxHashMap::default() }
    }

    /// Forced (non-natural) successor directions at `n` when arriving along `d`.
    fn forced(&mut self, lat: &impl Lattice, n: Cell, d: Cell) -> &[Cell] {
        let mut mask = 0u32;
        for (bit, e) in directions().iter().enumerate() {
            if lat.open(add(n, *e)) {
                mask |= 1 << bit;
            }
        }
        let key = (cube_index(d), mask);
        self.cache.entry(key).or_insert_with(|| compute_forced(d, mask))
    }
}

/// Local shortest-path test inside the 3x3x3 cube around the node (at the origin).
fn compute_forced(d: Cell, mask: u32) -> Vec<Cell> {
    let open = |c: Cell| -> bool {
        if c == [0, 0, 0] {
            return false;
        }
        if c.iter().any(|v| v.abs() > 1) {
            return false;
        }
        let bit = directions().iter().position(|e| *e == c).unwrap();
        mask & (1 << bit) != 0
    };
    let parent = [-d[0], -d[1], -d[2]];
    // Dijkstra from the parent over the cube excluding the node.
    let mut dist = [f64::INFINITY; 27];
    let mut done = [false; 27];
    dist[cube_index(parent)] = 0.0;
    loop {
        let mut best = None;
        for i in 0..27 {
            if !done[i] && dist[i].is_finite() && best.is_none_or(|b: usize| dist[i] < dist[b]) {
                best = Some(i);
            }
        }
        let Some(u) = best else { break };
        done[u] = true;
        let uc = [(u % 3) as i64 - 1, ((u / 3) % 3) as i64 - 1, (u / 9) as i64 - 1];
        for e in directions() {
            let v = add(uc, *e);
            if !open(v) {
                continue;
            }
            let vi = cube_index(v);
            let nd = dist[u] + move_cost(*e);
            if nd < dist[vi] {
                dist[vi] = nd;
            }
        }
    }
    let natural = sub_directions(d);
    let straight = move_cost(d) == 1.0;
    let mut out = Vec::new();
    for e in directions() {
        if natural.contains(e) || !open(*e) {
            continue;
        }
        let via_node = move_cost(d) + move_cost(*e);
        let alt = dist[cube_index(*e)];
        let pruned = if straight { alt <= via_node + 1e-12 } else { alt < via_node - 1e-12 };
        if !pruned {
            out.push(*e);
        }
    }
    out
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    seq: u64,
    cell: Cell,
    dir: Option<Cell>,
}

impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f).then(self.g.total_cmp(&o.g)).then(o.seq.cmp(&self.seq))
    }
}

struct Search<'a, L: Lattice> {
    lat: &'a L,
    goal: Cell,
    pruner: Pruner,
}

impl<L: Lattice> Search<'_, L> {
    fn jump(&mut self, from: Cell, d: Cell) -> Option<Cell> {
        let mut n = from;
        loop {
            n = add(n, d);
            if !self.lat.open(n) {
                return None;
            }
            if n == self.goal {
                return Some(n);
            }
            if !self.pruner.forced(self.lat, n, d).is_empty() {
                return Some(n);
            }
            if move_cost(d) > 1.0 {
                for &e in sub_directions(d) {
                    if e != d && self.jump(n, e).is_some() {
                        return Some(n);
                    }
                }
            }
        }
    }
}

/// Jump point search between two open cells. Returns the jump points from
/// `start` to `goal` inclusive, or `None` if the goal is unreachable.
pub fn search(lat: &impl Lattice, start: Cell, goal: Cell) -> Option<Vec<Cell>> {
    if !lat.open(start) || !lat.open(goal) {
        return None;
    }
    if start == goal {
        return Some(vec![start]);
    }
    let mut s = Search { lat, goal, pruner: Pruner::new() };
    let [nx, ny, nz] = lat.dims();
    let total = nx * ny * nz;
    let idx = |c: Cell| lat.index(c).expect("open cells are in bounds");
    let mut g = vec![f64::INFINITY; total];
    let mut parent: Vec<Option<Cell>> = vec![None; total];
    let mut closed = vec![false; total];
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    g[idx(start)] = 0.0;
    heap.push(Open { f: octile(start, goal), g: 0.0, seq, cell: start, dir: None });
    while let Some(Open { g: gc, cell, dir, .. }) = heap.pop() {
        let ci = idx(cell);
        if closed[ci] || gc > g[ci] + 1e-12 {
            continue;
        }
        closed[ci] = true;
        if cell == goal {
            let mut out = vec![cell];
            let mut c = cell;
            while let Some(p) = parent[idx(c)] {
                out.push(p);
                c = p;
            }
            out.reverse();
            return Some(out);
        }
        let succ: Vec<Cell> = match dir {
            None => directions().to_vec(),
            Some(d) => {
                let mut v = sub_directions(d).to_vec();
                v.extend_from_slice(s.pruner.forced(lat, cell, d));
                v
            }
        };
        for e in succ {
            let Some(j) = s.jump(cell, e) else { continue };
            let steps = (0..3).map(|k| (j[k] - cell[k]).abs()).max().unwrap_or(0) as f64;
            let ng = gc + steps * move_cost(e);
            let ji = idx(j);
            if ng < g[ji] - 1e-12 {
                g[ji] = ng;
                parent[ji] = Some(cell);
                seq += 1;
                heap.push(Open { f: ng + octile(j, goal), g: ng, seq, cell: j, dir: Some(e) });
            }
        }
    }
    None
}

/// 26-connected Dijkstra path length (in voxel units), for checking JPS.
pub fn dijkstra_length(lat: &impl Lattice, start: Cell, goal: Cell) -> Option<f64> {
    if !lat.open(start) || !lat.open(goal) {
        return None;
    }
    let mut dist: HashMap<Cell, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(start, 0.0);
    let mut seq = 0;
    heap.push(Open { f: 0.0, g: 0.0, seq, cell: start, dir: None });
    while let Some(Open { g: gc, cell, .. }) = heap.pop() {
        if gc > dist[&cell] + 1e-12 {
            continue;
        }
        if cell == goal {
            return Some(gc);
        }
        for e in directions() {
            let n = add(cell, *e);
            if !lat.open(n) {
                continue;
            }
            let nd = gc + move_cost(*e);
            if dist.get(&n).is_none_or(|&o| nd < o - 1e-12) {
                dist.insert(n, nd);
                seq += 1;
                heap.push(Open { f: nd, g: nd, seq, cell: n, dir: None });
            }
        }
    }
    None
}
