//! The shear `f(x, y) = (x + φ(y), y)` with `φ` the Cantor–Vitali function
//! of `D`, its dilatation, the failure of absolute continuity along
//! `Γ(Q₁,Q₂)`, the box dimension of `E = C × D`, and the parameter solver.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cantor::{self, SpaceParams};
use crate::metric::GridGraph;
use crate::pencils::{self, PolylinePath};
use crate::space::{self, Cube, Point, SpaceApprox};
use crate::{fit_slope, Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MapEvaluation {
    pub input: Point,
    pub image: Point,
    pub in_cube: bool,
}

/// `f(p)` with `φ` resolved to `depth` binary digits. Points outside the
/// ambient box are rejected.
pub fn apply_f(params: SpaceParams, p: Point, depth: u32) -> Result<Point> {
    if !(0.0..=1.0).contains(&p.x) {
        return Err(Error::Domain(format!("x = {} outside [0, 1]", p.x)));
    }
    let phi = cantor::vitali(params, p.y, depth)?;
    Ok(Point::new(p.x + phi, p.y))
}

pub fn evaluate(space: &SpaceApprox, p: Point, depth: u32) -> Result<MapEvaluation> {
    let image = apply_f(space.params, p, depth)?;
    let in_cube = matches!(space.classify(p, 0.0), space::Classification::InCube(_));
    Ok(MapEvaluation { input: p, image, in_cube })
}

/// Largest `|‖f(p)-f(q)‖/‖p-q‖ - 1|` over random pairs drawn in one cube.
pub fn same_cube_isometry(space: &SpaceApprox, n_pairs: usize, seed: u64, depth: u32) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..n_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let (p, c) = space::sample_point(space, &mut rng);
        let r = c.rect;
        let q = Point::new(r.x_lo + rng.gen::<f64>() * r.width(), r.y_lo + rng.gen::<f64>() * r.height());
        let d = p.dist(&q);
        if d == 0.0 {
            continue;
        }
        let (fp, fq) = (apply_f(space.params, p, depth)?, apply_f(space.params, q, depth)?);
        worst = worst.max((fp.dist(&fq) / d - 1.0).abs());
    }
    Ok(worst)
}

/// Graph of `f(X')`: every cube moved rigidly, stitches measured in `l1`.
pub fn image_graph(graph: &GridGraph, params: SpaceParams, depth: u32) -> GridGraph {
    graph.mapped(|p| apply_f(params, p, depth).unwrap_or(p))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DilatationRung {
    pub r: f64,
    pub big: f64,
    pub small: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DilatationReport {
    pub x: Point,
    pub rungs: Vec<DilatationRung>,
    pub limsup: f64,
    pub liminf: f64,
}

/// `L_f(x,r) / l_f(x,r)` with `L` the largest image distance from `x` over
/// vertices within graph distance `r` and `l` the smallest over vertices at
/// distance at least `r`. Image distances come from the image graph, which
/// has the same vertices and edges.
pub fn dilatation(graph: &GridGraph, image: &GridGraph, x: Point, radii: &[f64]) -> Result<DilatationReport> {
    if radii.len() < 3 {
        return Err(Error::Precondition("need at least 3 radii".into()));
    }
    let h = graph.h;
    if let Some(&r) = radii.iter().find(|&&r| r < 2.0 * h) {
        return Err(Error::Resolution(format!("radius {r} below 2h = {}", 2.0 * h)));
    }
    let src = graph.snap(&x)?;
    let r_top = radii.iter().cloned().fold(0.0, f64::max);
    let (d, _) = graph.dijkstra(src, None, r_top + 4.0 * h);
    let (di, _) = image.dijkstra(src, None, f64::INFINITY);
    let mut rungs = Vec::with_capacity(radii.len());
    for &r in radii {
        let (mut big, mut small) = (0.0f64, f64::INFINITY);
        for (v, &dv) in d.iter().enumerate() {
            if dv <= r {
                big = big.max(di[v]);
            }
            if dv >= r && dv.is_finite() {
                small = small.min(di[v]);
            }
        }
        if !small.is_finite() || small == 0.0 {
            return Err(Error::Resolution(format!("no vertices on the sphere of radius {r}")));
        }
        rungs.push(DilatationRung { r, big, small, ratio: big / small });
    }
    let limsup = rungs.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let liminf = rungs.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(DilatationReport { x, rungs, limsup, liminf })
}

/// Up to `n` uniform points of `X'` at least `min_depth` inside their cube,
/// each with that depth. Gives up after `1000 n` draws.
pub fn interior_points(space: &SpaceApprox, n: usize, min_depth: f64, seed: u64) -> Vec<(Point, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..1000 * n as u64 {
        if out.len() == n {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let (p, c) = space::sample_point(space, &mut rng);
        let depth = c.rect.depth_of(&p);
        if depth >= min_depth {
            out.push((p, depth));
        }
    }
    out
}

/// `δ, δ/2, δ/4, …` down to `2h`.
pub fn ladder_radii(delta: f64, h: f64) -> Vec<f64> {
    (0..30).map(|j| delta * (-(j as f64)).exp2()).take_while(|&r| r >= 2.0 * h).collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AcLevel {
    pub level: u32,
    pub total_variation: f64,
    pub absolutely_continuous: f64,
    pub singular: f64,
}

/// Variation of the first coordinate of `f ∘ γ` over dyadic partitions of
/// the path parameter at levels `base..base + refinements`. The part carried
/// by the polyline's horizontal motion is absolutely continuous; the rest
/// is what `φ` adds on the Cantor set.
pub fn ac_diagnostic_path(params: SpaceParams, path: &PolylinePath, base: u32, refinements: u32, depth: u32) -> Result<Vec<AcLevel>> {
    let ac: f64 = path.vertices.windows(2).map(|w| (w[1].x - w[0].x).abs()).sum();
    let total = path.param_length();
    let mut out = Vec::new();
    for level in base..base + refinements {
        let n = 1usize << level;
        let mut prev = apply_f(params, path.point_at(0.0), depth)?.x;
        let mut tv = 0.0;
        for i in 1..=n {
            let cur = apply_f(params, path.point_at(total * i as f64 / n as f64), depth)?.x;
            tv += (cur - prev).abs();
            prev = cur;
        }
        out.push(AcLevel { level, total_variation: tv, absolutely_continuous: ac, singular: tv - ac });
    }
    Ok(out)
}

pub fn ac_diagnostic(params: SpaceParams, q1: &Cube, q2: &Cube, t: f64, refinements: u32, depth: u32) -> Result<Vec<AcLevel>> {
    let path = pencils::gamma_q1q2(params, q1, q2, t, depth)?;
    ac_diagnostic_path(params, &path, 8, refinements, 40)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxDimensionReport {
    /// `(g, box side, boxes meeting C × D)`.
    pub counts: Vec<(u32, f64, f64)>,
    pub dimension: f64,
}

/// Boxes of side `λ^{νg}` meeting `C × D`: one per level-`νg` interval of
/// `C` and level-`g` piece of `D`.
pub fn box_dimension_e(params: SpaceParams, g_min: u32, g_max: u32) -> Result<BoxDimensionReport> {
    if g_max < g_min + 1 {
        return Err(Error::Precondition("need at least two scales".into()));
    }
    let counts: Vec<(u32, f64, f64)> = (g_min..=g_max)
        .map(|g| (g, params.side(g), (((params.nu + 1) * g) as f64).exp2()))
        .collect();
    let xs: Vec<f64> = counts.iter().map(|c| -c.1.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| c.2.ln()).collect();
    Ok(BoxDimensionReport { dimension: fit_slope(&xs, &ys), counts })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ParamCertificate {
    pub p: f64,
    pub eps: f64,
    pub lambda: f64,
    pub nu: u32,
    pub p0: f64,
    /// `dim C + dim D - (2 - p)`.
    pub dim_sum_residual: f64,
    /// `p + eps - p0`.
    pub margin: f64,
}

pub const DEFAULT_NU_CAP: u32 = 1_000_000;

/// Smallest `ν ≥ 2` whose `λ = 2^{-(1+1/ν)/(2-p)}` has `p0 < p + eps`.
pub fn solve_params(p: f64, eps: f64, nu_cap: u32) -> Result<ParamCertificate> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::Domain(format!("p = {p} not in (1, 2)")));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let mut best = f64::NEG_INFINITY;
    for nu in 2..=nu_cap {
        let lambda = (-(1.0 + 1.0 / nu as f64) / (2.0 - p)).exp2();
        let params = SpaceParams::new(lambda, nu)?;
        let p0 = crate::analysis::p0(params);
        let margin = p + eps - p0;
        if margin > 0.0 {
            return Ok(ParamCertificate {
                p,
                eps,
                lambda,
                nu,
                p0,
                dim_sum_residual: params.dim_c() + params.dim_d() - (2.0 - p),
                margin,
            });
        }
        best = best.max(margin);
    }
    Err(Error::Capacity(format!("no nu <= {nu_cap} works; best margin {best:.3e}")))
}
