//! Graph approximation of the length metric on `X'`.
//!
//! Every rectangle carries a lattice with spacing at most `h` (at least its
//! four corners). Rows only meet along `C × D`, so vertically consecutive
//! rectangles are stitched by vertical edges at a fixed set of Cantor
//! abscissas, with extra snap vertices on the horizontal edges where needed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cantor::{self, IntervalAddress};
use crate::space::{self, Point, Rect, SpaceApprox};
use crate::{Error, Result};

pub const DEFAULT_VERTEX_BUDGET: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    Lattice,
    Stitch,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    pub len: f64,
    /// Transverse width the edge stands for when densities are integrated.
    pub cell: f64,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug)]
struct Block {
    rect: Rect,
    nx: usize,
    ny: usize,
    base: u32,
}

#[derive(Clone, Debug)]
struct BucketIndex {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl BucketIndex {
    fn new(pos: &[Point], cell_hint: f64) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in pos {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-300);
        let cap = (4 * pos.len()).max(16) as f64;
        let mut cell = cell_hint.max(span / 4096.0);
        while ((x1 - x0) / cell + 1.0) * ((y1 - y0) / cell + 1.0) > cap {
            cell *= 2.0;
        }
        let nx = ((x1 - x0) / cell) as usize + 1;
        let ny = ((y1 - y0) / cell) as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, p) in pos.iter().enumerate() {
            let bx = (((p.x - x0) / cell) as usize).min(nx - 1);
            let by = (((p.y - y0) / cell) as usize).min(ny - 1);
            buckets[by * nx + bx].push(i as u32);
        }
        BucketIndex { x0, y0, cell, nx, ny, buckets }
    }

    fn nearest(&self, pos: &[Point], p: &Point) -> (u32, f64) {
        let cx = ((p.x - self.x0) / self.cell).floor() as i64;
        let cy = ((p.y - self.y0) / self.cell).floor() as i64;
        let cx = cx.clamp(0, self.nx as i64 - 1);
        let cy = cy.clamp(0, self.ny as i64 - 1);
        let mut best = (u32::MAX, f64::INFINITY);
        let max_ring = self.nx.max(self.ny) as i64;
        for ring in 0..=max_ring {
            for by in (cy - ring)..=(cy + ring) {
                if by < 0 || by >= self.ny as i64 {
                    continue;
                }
                for bx in (cx - ring)..=(cx + ring) {
                    if bx < 0 || bx >= self.nx as i64 {
                        continue;
                    }
                    if (by - cy).abs() != ring && (bx - cx).abs() != ring {
                        continue;
                    }
                    for &v in &self.buckets[by as usize * self.nx + bx as usize] {
                        let d = pos[v as usize].dist(p);
                        if d < best.1 || (d == best.1 && v < best.0) {
                            best = (v, d);
                        }
                    }
                }
            }
            if best.0 != u32::MAX && best.1 <= ring as f64 * self.cell {
                break;
            }
        }
        best
    }
}

#[derive(Clone, Debug)]
pub struct GridGraph {
    pub h: f64,
    pub pos: Vec<Point>,
    pub edges: Vec<Edge>,
    adj_start: Vec<u32>,
    adj: Vec<(u32, u32)>,
    blocks: Vec<Block>,
    index: BucketIndex,
}

#[derive(PartialEq)]
struct State(f64, u32);

impl Eq for State {}

impl PartialOrd for State {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for State {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

struct Builder {
    pos: Vec<Point>,
    edges: Vec<Edge>,
}

impl Builder {
    fn vertex(&mut self, p: Point) -> u32 {
        self.pos.push(p);
        (self.pos.len() - 1) as u32
    }

    fn edge(&mut self, a: u32, b: u32, cell: f64, kind: EdgeKind) {
        let len = self.pos[a as usize].dist(&self.pos[b as usize]);
        self.edges.push(Edge { a, b, len, cell, kind });
    }
}

fn lattice_dims(r: &Rect, h: f64) -> (usize, usize) {
    let nx = ((r.width() / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let ny = ((r.height() / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (nx, ny)
}

/// Graph on an arbitrary list of pairwise disjoint rectangles. Vertical
/// stitches at each abscissa in `stitch_xs` join every pair of consecutive
/// rectangles (in `y`) whose horizontal span contains it; callers must only
/// pass abscissas whose vertical lines lie in the space between them.
pub fn build_from_rects(rects: &[Rect], h: f64, stitch_xs: &[f64], vertex_budget: usize) -> Result<GridGraph> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("resolution h = {h} must be positive")));
    }
    let mut estimate = 0usize;
    for r in rects {
        let (nx, ny) = lattice_dims(r, h);
        estimate = estimate.saturating_add((nx + 1).saturating_mul(ny + 1));
    }
    if estimate > vertex_budget {
        return Err(Error::Resource {
            what: format!("graph lattice at h = {h}"),
            count: estimate as u64,
            cap: vertex_budget as u64,
        });
    }
    let mut b = Builder { pos: Vec::with_capacity(estimate), edges: Vec::new() };
    let mut blocks = Vec::with_capacity(rects.len());
    for r in rects {
        let (nx, ny) = lattice_dims(r, h);
        let hx = r.width() / nx as f64;
        let hy = r.height() / ny as f64;
        let base = b.pos.len() as u32;
        for j in 0..=ny {
            let y = if j == ny { r.y_hi } else { r.y_lo + j as f64 * hy };
            for i in 0..=nx {
                let x = if i == nx { r.x_hi } else { r.x_lo + i as f64 * hx };
                b.vertex(Point::new(x, y));
            }
        }
        let id = |i: usize, j: usize| base + (j * (nx + 1) + i) as u32;
        let diag_cell = hx * hy / hx.hypot(hy);
        for j in 0..=ny {
            for i in 0..=nx {
                // edges on the rectangle boundary own half a cell
                if i < nx {
                    let c = if j == 0 || j == ny { hy / 2.0 } else { hy };
                    b.edge(id(i, j), id(i + 1, j), c, EdgeKind::Lattice);
                }
                if j < ny {
                    let c = if i == 0 || i == nx { hx / 2.0 } else { hx };
                    b.edge(id(i, j), id(i, j + 1), c, EdgeKind::Lattice);
                }
                if i < nx && j < ny {
                    b.edge(id(i, j), id(i + 1, j + 1), diag_cell, EdgeKind::Lattice);
                    b.edge(id(i + 1, j), id(i, j + 1), diag_cell, EdgeKind::Lattice);
                }
            }
        }
        blocks.push(Block { rect: *r, nx, ny, base });
    }

    let mut xs: Vec<f64> = stitch_xs.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    // (bottom, top) snap vertices per block, sorted by x
    let mut snaps: Vec<(Vec<(f64, u32)>, Vec<(f64, u32)>)> = vec![(Vec::new(), Vec::new()); blocks.len()];
    for (bi, blk) in blocks.iter().enumerate() {
        let r = blk.rect;
        let eps = 1e-12 * r.width().max(1e-300);
        let lo = xs.partition_point(|&x| x < r.x_lo - eps);
        let hi = xs.partition_point(|&x| x <= r.x_hi + eps);
        if lo >= hi {
            continue;
        }
        let hx = r.width() / blk.nx as f64;
        for side in 0..2 {
            let (j, j_in) = if side == 0 { (0, 1) } else { (blk.ny, blk.ny - 1) };
            let y = if side == 0 { r.y_lo } else { r.y_hi };
            let id = |i: usize, jj: usize| blk.base + (jj * (blk.nx + 1) + i) as u32;
            let mut list = Vec::new();
            // (column, vertex) of the last off-lattice snap vertex
            let mut prev: Option<(usize, u32)> = None;
            let cell = hx.min(h);
            for &x in &xs[lo..hi] {
                let x = x.clamp(r.x_lo, r.x_hi);
                let i = (((x - r.x_lo) / hx).floor() as usize).min(blk.nx - 1);
                let xi = b.pos[id(i, j) as usize].x;
                let xi1 = b.pos[id(i + 1, j) as usize].x;
                let v = if (x - xi).abs() <= eps {
                    id(i, j)
                } else if (x - xi1).abs() <= eps {
                    id(i + 1, j)
                } else {
                    let v = b.vertex(Point::new(x, y));
                    match prev {
                        Some((pi, pv)) if pi == i => b.edge(pv, v, cell, EdgeKind::Lattice),
                        Some((pi, pv)) => {
                            b.edge(pv, id(pi + 1, j), cell, EdgeKind::Lattice);
                            b.edge(id(i, j), v, cell, EdgeKind::Lattice);
                        }
                        None => b.edge(id(i, j), v, cell, EdgeKind::Lattice),
                    }
                    b.edge(v, id(i, j_in), cell, EdgeKind::Lattice);
                    b.edge(v, id(i + 1, j_in), cell, EdgeKind::Lattice);
                    prev = Some((i, v));
                    v
                };
                list.push((x, v));
            }
            if let Some((pi, pv)) = prev {
                b.edge(pv, id(pi + 1, j), cell, EdgeKind::Lattice);
            }
            if side == 0 {
                snaps[bi].0 = list;
            } else {
                snaps[bi].1 = list;
            }
        }
    }

    // stitch consecutive rectangles along each abscissa
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by(|&a, &b2| blocks[a].rect.y_lo.total_cmp(&blocks[b2].rect.y_lo));
    for &x in &xs {
        let mut column: Vec<usize> = Vec::new();
        for &bi in &order {
            let r = blocks[bi].rect;
            let eps = 1e-12 * r.width().max(1e-300);
            if x >= r.x_lo - eps && x <= r.x_hi + eps {
                column.push(bi);
            }
        }
        for w in column.windows(2) {
            let (lower, upper) = (w[0], w[1]);
            let top = find_snap(&snaps[lower].1, x);
            let bot = find_snap(&snaps[upper].0, x);
            let (Some(top), Some(bot)) = (top, bot) else { continue };
            let gap = b.pos[bot as usize].y - b.pos[top as usize].y;
            if gap < 0.0 {
                continue;
            }
            let pieces = ((gap / h).ceil() as usize).max(1);
            let mut prev = top;
            for k in 1..pieces {
                let y = b.pos[top as usize].y + gap * k as f64 / pieces as f64;
                let v = b.vertex(Point::new(x, y));
                b.edge(prev, v, h, EdgeKind::Stitch);
                prev = v;
            }
            b.edge(prev, bot, h, EdgeKind::Stitch);
        }
    }

    let n = b.pos.len();
    let mut deg = vec![0u32; n + 1];
    for e in &b.edges {
        deg[e.a as usize] += 1;
        deg[e.b as usize] += 1;
    }
    let mut adj_start = vec![0u32; n + 1];
    for v in 0..n {
        adj_start[v + 1] = adj_start[v] + deg[v];
    }
    let mut fill = adj_start.clone();
    let mut adj = vec![(0u32, 0u32); b.edges.len() * 2];
    for (k, e) in b.edges.iter().enumerate() {
        adj[fill[e.a as usize] as usize] = (e.b, k as u32);
        fill[e.a as usize] += 1;
        adj[fill[e.b as usize] as usize] = (e.a, k as u32);
        fill[e.b as usize] += 1;
    }
    let index = BucketIndex::new(&b.pos, h);
    Ok(GridGraph { h, pos: b.pos, edges: b.edges, adj_start, adj, blocks, index })
}

fn find_snap(list: &[(f64, u32)], x: f64) -> Option<u32> {
    list.iter()
        .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
        .filter(|(xs, _)| (xs - x).abs() <= 1e-9)
        .map(|&(_, v)| v)
}

/// Endpoints of all level-`level` intervals of `C` inside `within`.
pub fn cantor_endpoints(params: cantor::SpaceParams, within: IntervalAddress, level: u32) -> Vec<f64> {
    let depth = level - within.level;
    let first = (within.index - 1) << depth;
    let mut xs = Vec::with_capacity(2usize << depth);
    for k in 0..(1u64 << depth) {
        let a = IntervalAddress { level, index: first + k + 1 };
        let (lo, hi) = cantor::surviving_interval(params, a).expect("valid descendant");
        xs.push(lo);
        xs.push(hi);
    }
    xs
}

/// Graph of the whole truncated complex, stitched at the endpoints of the
/// level-`νG` intervals of `C`.
pub fn build_graph(space: &SpaceApprox, h: f64) -> Result<GridGraph> {
    build_graph_with_budget(space, h, DEFAULT_VERTEX_BUDGET)
}

pub fn build_graph_with_budget(space: &SpaceApprox, h: f64, budget: usize) -> Result<GridGraph> {
    let rects: Vec<Rect> = space.cubes.iter().map(|c| c.rect).collect();
    let level = space.params.nu * space.max_generation;
    let xs = cantor_endpoints(space.params, IntervalAddress::root(), level);
    build_from_rects(&rects, h, &xs, budget)
}

impl GridGraph {
    pub fn vertex_count(&self) -> usize {
        self.pos.len()
    }

    pub fn neighbors(&self, v: u32) -> &[(u32, u32)] {
        &self.adj[self.adj_start[v as usize] as usize..self.adj_start[v as usize + 1] as usize]
    }

    /// Rectangles the lattice was built on.
    pub fn rects(&self) -> Vec<Rect> {
        self.blocks.iter().map(|b| b.rect).collect()
    }

    /// Nearest vertex and its distance.
    pub fn nearest(&self, p: &Point) -> (u32, f64) {
        self.index.nearest(&self.pos, p)
    }

    pub fn is_connected(&self) -> bool {
        if self.pos.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.pos.len()];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in self.neighbors(v) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.pos.len()
    }

    /// Single-source shortest path lengths, optionally stopping at `target`
    /// or once distances exceed `cutoff`.
    pub fn dijkstra(&self, src: u32, target: Option<u32>, cutoff: f64) -> (Vec<f64>, Vec<u32>) {
        let n = self.pos.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut via = vec![u32::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[src as usize] = 0.0;
        heap.push(State(0.0, src));
        while let Some(State(d, v)) = heap.pop() {
            if d > dist[v as usize] {
                continue;
            }
            if Some(v) == target || d > cutoff {
                break;
            }
            for &(w, e) in self.neighbors(v) {
                let nd = d + self.edges[e as usize].len;
                if nd < dist[w as usize] {
                    dist[w as usize] = nd;
                    via[w as usize] = e;
                    heap.push(State(nd, w));
                }
            }
        }
        (dist, via)
    }

    pub fn vertex_distance(&self, a: u32, b: u32) -> Option<f64> {
        let (d, _) = self.dijkstra(a, Some(b), f64::INFINITY);
        let v = d[b as usize];
        v.is_finite().then_some(v)
    }

    /// Edge ids of a shortest path from `a` to `b`.
    pub fn shortest_path_edges(&self, a: u32, b: u32) -> Option<Vec<u32>> {
        if a == b {
            return Some(Vec::new());
        }
        let (d, via) = self.dijkstra(a, Some(b), f64::INFINITY);
        if !d[b as usize].is_finite() {
            return None;
        }
        let mut out = Vec::new();
        let mut v = b;
        while v != a {
            let e = via[v as usize];
            out.push(e);
            let ed = &self.edges[e as usize];
            v = if ed.a == v { ed.b } else { ed.a };
        }
        out.reverse();
        Some(out)
    }

    /// Snap a point to the graph, failing if it is farther than `h`.
    pub fn snap(&self, p: &Point) -> Result<u32> {
        let (v, d) = self.nearest(p);
        if v == u32::MAX || d > self.h * 1.000001 {
            return Err(Error::Classification(format!(
                "point ({}, {}) is {d:.3e} from the graph (h = {})",
                p.x, p.y, self.h
            )));
        }
        Ok(v)
    }

    /// Same topology, vertices moved by `f`. Lattice edges take the new
    /// Euclidean length; stitch edges take the `l1` length, which is the
    /// length of the image of a vertical segment under a monotone shear.
    pub fn mapped(&self, f: impl Fn(Point) -> Point) -> GridGraph {
        let pos: Vec<Point> = self.pos.iter().map(|&p| f(p)).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let (p, q) = (pos[e.a as usize], pos[e.b as usize]);
                let len = match e.kind {
                    EdgeKind::Lattice => p.dist(&q),
                    EdgeKind::Stitch => (p.x - q.x).abs() + (p.y - q.y).abs(),
                };
                Edge { len, ..*e }
            })
            .collect();
        let index = BucketIndex::new(&pos, self.h);
        GridGraph {
            h: self.h,
            pos,
            edges,
            adj_start: self.adj_start.clone(),
            adj: self.adj.clone(),
            blocks: self.blocks.clone(),
            index,
        }
    }

    pub fn vertices_csv(&self) -> String {
        let mut s = String::from("id,x,y\n");
        for (i, p) in self.pos.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{}", p.x, p.y);
        }
        s
    }

    pub fn edges_csv(&self) -> String {
        let mut s = String::from("a,b,weight,kind\n");
        for e in &self.edges {
            let k = match e.kind {
                EdgeKind::Lattice => "lattice",
                EdgeKind::Stitch => "stitch",
            };
            let _ = writeln!(s, "{},{},{},{k}", e.a, e.b, e.len);
        }
        s
    }
}

/// Graph distance between the vertices nearest to `p` and `q`.
pub fn intrinsic_distance(graph: &GridGraph, p: Point, q: Point) -> Result<f64> {
    if p == q {
        return Ok(0.0);
    }
    let a = graph.snap(&p)?;
    let b = graph.snap(&q)?;
    graph.vertex_distance(a, b).ok_or_else(|| {
        Error::Connectivity(format!("no path between ({}, {}) and ({}, {})", p.x, p.y, q.x, q.y))
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PairRatio {
    pub p: Point,
    pub q: Point,
    pub intrinsic: f64,
    pub euclidean: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiconvexityReport {
    pub max_ratio: f64,
    pub argmax: PairRatio,
    pub pairs: Vec<PairRatio>,
}

/// `max d/‖·‖` over random vertex pairs. Points are drawn uniformly from
/// `X'` (one random stream per pair) and snapped to the graph.
pub fn quasiconvexity_ratio(space: &SpaceApprox, graph: &GridGraph, n_pairs: usize, seed: u64) -> Result<QuasiconvexityReport> {
    use rayon::prelude::*;
    let pairs: Vec<Result<PairRatio>> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (p, _) = space::sample_point(space, &mut rng);
            let (q, _) = space::sample_point(space, &mut rng);
            let a = graph.snap(&p)?;
            let b = graph.snap(&q)?;
            let (pa, pb) = (graph.pos[a as usize], graph.pos[b as usize]);
            let euclid = pa.dist(&pb);
            let d = if a == b {
                0.0
            } else {
                graph.vertex_distance(a, b).ok_or_else(|| {
                    Error::Connectivity(format!("vertices {a} and {b} are not connected"))
                })?
            };
            let ratio = if euclid > 0.0 { d / euclid } else { 1.0 };
            Ok(PairRatio { p: pa, q: pb, intrinsic: d, euclidean: euclid, ratio })
        })
        .collect();
    let pairs: Vec<PairRatio> = pairs.into_iter().collect::<Result<_>>()?;
    let argmax = pairs
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .cloned()
        .ok_or_else(|| Error::Precondition("n_pairs must be at least 1".into()))?;
    Ok(QuasiconvexityReport { max_ratio: argmax.ratio, argmax, pairs })
}
