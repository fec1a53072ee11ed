//! Discrete `p`-modulus of a finite family of edge chains.
//!
//! The primal problem `min Σ c_e ρ_e^p` subject to `Σ_{e∈γ} ℓ_e ρ_e ≥ 1`
//! is solved through its dual: one multiplier per path, raised by exact
//! coordinate ascent, with `ρ_e = (s_e / (p c_e))^{1/(p-1)}` where `s_e`
//! collects the multipliers of the paths through `e`. After every sweep `ρ`
//! is rescaled to be admissible, which gives an upper bound; the dual value
//! is a lower bound, and the sweep stops once the two agree to `tol`.

use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;

use crate::cantor::{IntervalAddress, RowAddress, SpaceParams};
use crate::metric::{self, GridGraph};
use crate::pencils::{self, paths::rows_in, PolylinePath};
use crate::space::{self, Cube, Point, Rect};
use crate::{fit_slope, Error, Result};

pub struct ModulusProblem {
    pub graph: GridGraph,
    /// Each path as a chain of edge ids.
    pub paths: Vec<Vec<u32>>,
    pub p: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulusResult {
    /// Energy of the rescaled admissible density (an upper bound).
    pub modulus: f64,
    /// Dual value (a lower bound).
    pub dual: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Smallest `∫_γ ρ ds` over the family for the returned density.
    pub min_constraint: f64,
    /// Density per graph edge.
    #[serde(skip)]
    pub density: Vec<f64>,
}

fn edge_between(g: &GridGraph, a: u32, b: u32) -> Option<u32> {
    g.neighbors(a).iter().filter(|&&(w, _)| w == b).map(|&(_, e)| e).min_by(|&x, &y| {
        g.edges[x as usize].len.total_cmp(&g.edges[y as usize].len)
    })
}

#[derive(PartialEq)]
struct Item(f64, u32);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

/// Shortest chain from `a` to `b` exploring only vertices within `cutoff`.
fn local_path(g: &GridGraph, a: u32, b: u32, cutoff: f64) -> Option<Vec<u32>> {
    let mut dist: HashMap<u32, (f64, u32)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(a, (0.0, u32::MAX));
    heap.push(Item(0.0, a));
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[&v].0 {
            continue;
        }
        if v == b {
            break;
        }
        if d > cutoff {
            return None;
        }
        for &(w, e) in g.neighbors(v) {
            let nd = d + g.edges[e as usize].len;
            if dist.get(&w).map_or(true, |&(old, _)| nd < old) {
                dist.insert(w, (nd, e));
                heap.push(Item(nd, w));
            }
        }
    }
    dist.get(&b)?;
    let mut out = Vec::new();
    let mut v = b;
    while v != a {
        let e = dist[&v].1;
        out.push(e);
        let ed = &g.edges[e as usize];
        v = if ed.a == v { ed.b } else { ed.a };
    }
    out.reverse();
    Some(out)
}

/// Edge chain following a polyline: points every `h/2` along the path are
/// snapped to their nearest vertices, which are joined by local shortest
/// paths.
pub fn snap_polyline(g: &GridGraph, path: &PolylinePath) -> Result<Vec<u32>> {
    snap_points(g, &path.vertices)
}

fn snap_points(g: &GridGraph, pts: &[Point]) -> Result<Vec<u32>> {
    let h = g.h;
    let mut verts: Vec<u32> = Vec::new();
    let mut push = |p: Point| -> Result<()> {
        let (v, d) = g.nearest(&p);
        if d > 2.0 * h {
            return Err(Error::Classification(format!("path point ({}, {}) is {d:.3e} from the graph", p.x, p.y)));
        }
        if verts.last() != Some(&v) {
            verts.push(v);
        }
        Ok(())
    };
    push(pts[0])?;
    for w in pts.windows(2) {
        let n = (w[0].dist(&w[1]) / (h / 2.0)).ceil().max(1.0) as usize;
        for k in 1..=n {
            push(w[0].lerp(&w[1], k as f64 / n as f64))?;
        }
    }
    let mut chain = Vec::new();
    for w in verts.windows(2) {
        if let Some(e) = edge_between(g, w[0], w[1]) {
            chain.push(e);
            continue;
        }
        let gap = g.pos[w[0] as usize].dist(&g.pos[w[1] as usize]);
        let sub = local_path(g, w[0], w[1], 4.0 * gap + 4.0 * h)
            .ok_or_else(|| Error::Connectivity(format!("vertices {} and {} not joined locally", w[0], w[1])))?;
        chain.extend(sub);
    }
    Ok(chain)
}

impl ModulusProblem {
    pub fn new(graph: GridGraph, paths: Vec<Vec<u32>>, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Domain(format!("p = {p} must exceed 1")));
        }
        if paths.is_empty() {
            return Err(Error::Precondition("empty family".into()));
        }
        for (i, c) in paths.iter().enumerate() {
            let len: f64 = c.iter().map(|&e| graph.edges[e as usize].len).sum();
            if !(len > 0.0) {
                return Err(Error::Precondition(format!("path {i} has zero graph length")));
            }
        }
        Ok(ModulusProblem { graph, paths, p })
    }

    pub fn from_polylines(graph: GridGraph, family: &[PolylinePath], p: f64) -> Result<Self> {
        let paths = family.iter().map(|f| snap_polyline(&graph, f)).collect::<Result<Vec<_>>>()?;
        Self::new(graph, paths, p)
    }
}

fn solve_multiplier(terms: &[(usize, f64)], base: &[f64], cost: &[f64], p: f64) -> f64 {
    let q = 1.0 / (p - 1.0);
    let f = |m: f64| -> (f64, f64) {
        let (mut v, mut d) = (-1.0, 0.0);
        for &(e, a) in terms {
            let z = (base[e] + m * a) / (p * cost[e]);
            if z > 0.0 {
                let zq = z.powf(q);
                v += a * zq;
                d += a * a * q / (p * cost[e]) * zq / z;
            }
        }
        (v, d)
    };
    if f(0.0).0 >= 0.0 {
        return 0.0;
    }
    // root with every base term dropped bounds the true root from above
    let k: f64 = terms.iter().map(|&(e, a)| a * (a / (p * cost[e])).powf(q)).sum();
    let (mut lo, mut hi) = (0.0, k.powf(-(p - 1.0)));
    let mut x = hi;
    for _ in 0..200 {
        let (v, d) = f(x);
        if v.abs() < 1e-15 {
            return x;
        }
        if v > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let nx = x - v / d;
        x = if d > 0.0 && nx > lo && nx < hi { nx } else { 0.5 * (lo + hi) };
    }
    x
}

/// Minimizes `Σ c_e ρ_e^p` (`c_e` = edge length times cell width) over
/// densities admissible for every chain of the family.
pub fn discrete_modulus(problem: &ModulusProblem, tol: f64, max_iter: usize) -> Result<ModulusResult> {
    let g = &problem.graph;
    let p = problem.p;
    let mut local = vec![usize::MAX; g.edges.len()];
    let mut used: Vec<u32> = Vec::new();
    let mut terms: Vec<Vec<(usize, f64)>> = Vec::with_capacity(problem.paths.len());
    for chain in &problem.paths {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for &e in chain {
            let ed = &g.edges[e as usize];
            if ed.len == 0.0 {
                continue;
            }
            if local[e as usize] == usize::MAX {
                local[e as usize] = used.len();
                used.push(e);
            }
            *acc.entry(local[e as usize]).or_default() += ed.len;
        }
        let mut t: Vec<(usize, f64)> = acc.into_iter().collect();
        t.sort_by_key(|&(e, _)| e);
        terms.push(t);
    }
    let cost: Vec<f64> = used.iter().map(|&e| g.edges[e as usize].len * g.edges[e as usize].cell).collect();
    let n = cost.len();
    let q = 1.0 / (p - 1.0);
    let mut mu = vec![0.0; terms.len()];
    let mut s = vec![0.0; n];
    let mut last = (f64::INFINITY, f64::NAN, f64::NAN, 0.0);
    for it in 1..=max_iter {
        for (k, t) in terms.iter().enumerate() {
            let old = mu[k];
            for &(e, a) in t {
                s[e] = (s[e] - old * a).max(0.0);
            }
            let m = solve_multiplier(t, &s, &cost, p);
            for &(e, a) in t {
                s[e] += m * a;
            }
            mu[k] = m;
        }
        s.iter_mut().for_each(|v| *v = 0.0);
        for (k, t) in terms.iter().enumerate() {
            for &(e, a) in t {
                s[e] += mu[k] * a;
            }
        }
        let rho: Vec<f64> = (0..n).map(|e| (s[e] / (p * cost[e])).powf(q)).collect();
        let min_len = terms
            .iter()
            .map(|t| t.iter().map(|&(e, a)| a * rho[e]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let energy: f64 = (0..n).map(|e| cost[e] * rho[e].powf(p)).sum();
        let upper = energy / min_len.powf(p);
        let dual = mu.iter().sum::<f64>() - (p - 1.0) * energy;
        let gap = (upper - dual) / upper;
        last = (upper, dual, gap, min_len);
        if gap < tol {
            let mut density = vec![0.0; g.edges.len()];
            for (i, &e) in used.iter().enumerate() {
                density[e as usize] = rho[i] / min_len;
            }
            return Ok(ModulusResult { modulus: upper, dual, gap, iterations: it, min_constraint: 1.0, density });
        }
    }
    Err(Error::Convergence { iterations: max_iter, gap: last.2, min_constraint: last.3 })
}

/// Horizontal crossings of `[0, long] × [0, width]`, one per lattice row.
pub fn rectangle_problem(long: f64, width: f64, h: f64, p: f64) -> Result<ModulusProblem> {
    let g = metric::build_from_rects(&[Rect::new(0.0, long, 0.0, width)], h, &[], usize::MAX)?;
    let nx = (0..).take_while(|&i| g.pos[i].y == 0.0).count() - 1;
    let ny = g.vertex_count() / (nx + 1) - 1;
    let mut paths = Vec::with_capacity(ny + 1);
    for j in 0..=ny {
        let id = |i: usize| (j * (nx + 1) + i) as u32;
        let chain = (0..nx)
            .map(|i| edge_between(&g, id(i), id(i + 1)).expect("lattice edge"))
            .collect();
        paths.push(chain);
    }
    ModulusProblem::new(g, paths, p)
}

/// Lines across `[-1, 1]²` through the pinch `{0} × [-ℓ/2, ℓ/2]`:
/// `n_mid` crossing heights times `n_slope` slopes in `[-1/2, 1/2]`. As
/// `ℓ → 0` the modulus tends to zero for `p ≤ 2` and stays positive for
/// `p > 2`.
pub fn bowtie_problem(ell: f64, h: f64, n_mid: usize, n_slope: usize, p: f64) -> Result<ModulusProblem> {
    if !(ell > 0.0 && ell <= 1.0) || n_mid == 0 || n_slope == 0 {
        return Err(Error::Precondition(format!("need 0 < ell <= 1 and nonempty grids (ell = {ell})")));
    }
    let g = metric::build_from_rects(&[Rect::new(-1.0, 1.0, -1.0, 1.0)], h, &[], usize::MAX)?;
    let mut paths = Vec::with_capacity(n_mid * n_slope);
    for i in 0..n_mid {
        let m = ell * ((i as f64 + 0.5) / n_mid as f64 - 0.5);
        for j in 0..n_slope {
            let s = (j as f64 + 0.5) / n_slope as f64 - 0.5;
            paths.push(snap_points(&g, &[Point::new(-1.0, m - s), Point::new(1.0, m + s)])?);
        }
    }
    ModulusProblem::new(g, paths, p)
}

/// `Q₁` on row `(g, 2)` over the leftmost column, and its first large cube
/// below. Consecutive `g` give scaled copies of the same configuration.
pub fn scaling_configuration(params: SpaceParams, g: u32) -> Result<(Cube, Cube)> {
    let q1 = Cube::new(params, RowAddress::new(g, 2)?, IntervalAddress::new(params.nu * g, 1)?)?;
    let q2 = space::first_large_cube_below(params, &q1)?;
    Ok((q1, q2))
}

/// Graph around `Γ(Q₁,Q₂)`: thin slabs of `Q₁` and `Q₂` over `I₁` and the
/// cubes over `I₁` on rows at most `rel_rows` generations below `Q₁`'s.
pub fn local_q1q2_graph(params: SpaceParams, q1: &Cube, q2: &Cube, h: f64, rel_rows: u32) -> Result<GridGraph> {
    if q2.rect.y_hi > q1.rect.y_lo {
        return Err(Error::Precondition("Q_2 must lie below Q_1".into()));
    }
    let nu = params.nu;
    let r1 = q1.rect;
    let slab = r1.width() / 8.0;
    let mut rects = vec![
        Rect::new(r1.x_lo, r1.x_hi, q2.rect.y_hi - slab, q2.rect.y_hi),
        Rect::new(r1.x_lo, r1.x_hi, r1.y_lo, r1.y_lo + slab),
    ];
    let g1 = q1.generation();
    for g in (g1 + 1)..=(g1 + rel_rows) {
        let depth = nu * (g - g1);
        for row in rows_in(params, g, q2.rect.y_hi, r1.y_lo) {
            for k in 0..(1u64 << depth) {
                let col = IntervalAddress { level: nu * g, index: ((q1.col.index - 1) << depth) + k + 1 };
                rects.push(Cube::new(params, row, col)?.rect);
            }
        }
    }
    let xs = metric::cantor_endpoints(params, q1.col, nu * (g1 + rel_rows));
    metric::build_from_rects(&rects, h, &xs, metric::DEFAULT_VERTEX_BUDGET)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingOptions {
    /// `h = |I₁| / h_rel`.
    pub h_rel: f64,
    pub n_paths: usize,
    pub rel_rows: u32,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions { h_rel: 64.0, n_paths: 128, rel_rows: 2, tol: 1e-4, max_iter: 20_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub generation: u32,
    pub side: f64,
    pub modulus: f64,
    pub dual: f64,
    pub iterations: usize,
    pub vertices: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub p: f64,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log modulus` against `log |I₁|`.
    pub slope: f64,
    pub expected_slope: f64,
}

/// Modulus of `Γ(Q₁,Q₂)` on the self-similar configuration at each
/// generation in `gens`, with a resolution proportional to `|I₁|`.
pub fn modulus_scaling_check(params: SpaceParams, p: f64, gens: &[u32], opts: &ScalingOptions) -> Result<ScalingReport> {
    use rayon::prelude::*;
    let rows: Vec<Result<ScalingRow>> = gens
        .par_iter()
        .map(|&g| {
            let (q1, q2) = scaling_configuration(params, g)?;
            let side = q1.side();
            let graph = local_q1q2_graph(params, &q1, &q2, side / opts.h_rel, opts.rel_rows)?;
            let depth = params.nu * opts.rel_rows;
            let family = (0..opts.n_paths)
                .map(|k| {
                    let t = q1.rect.x_lo + side * (k as f64 + 0.381966) / opts.n_paths as f64;
                    pencils::gamma_q1q2(params, &q1, &q2, t, depth)
                })
                .collect::<Result<Vec<_>>>()?;
            let vertices = graph.vertex_count();
            let problem = ModulusProblem::from_polylines(graph, &family, p)?;
            let res = discrete_modulus(&problem, opts.tol, opts.max_iter)?;
            Ok(ScalingRow { generation: g, side, modulus: res.modulus, dual: res.dual, iterations: res.iterations, vertices })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.side.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.modulus.ln()).collect();
    let slope = if rows.len() >= 2 { fit_slope(&xs, &ys) } else { f64::NAN };
    Ok(ScalingReport { p, rows, slope, expected_slope: 2.0 - p })
}
