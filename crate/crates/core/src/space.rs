//! The cube complex `X'`: rows are the gaps `J` of `D`, and a row of
//! generation `g` carries one square over every level-`νg` interval of `C`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cantor::{self, IntervalAddress, RowAddress, SpaceParams};
use crate::{Error, Result};

/// Default cap on the number of cubes a single enumeration may produce.
pub const DEFAULT_CUBE_BUDGET: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, o: &Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn lerp(&self, o: &Point, s: f64) -> Point {
        Point::new(self.x + s * (o.x - self.x), self.y + s * (o.y - self.y))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        Rect { x_lo, x_hi, y_lo, y_hi }
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> f64 {
        self.y_hi - self.y_lo
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x_lo + self.x_hi), 0.5 * (self.y_lo + self.y_hi))
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        p.x >= self.x_lo - tol && p.x <= self.x_hi + tol && p.y >= self.y_lo - tol && p.y <= self.y_hi + tol
    }

    /// Distance from the boundary for interior points, zero outside.
    pub fn depth_of(&self, p: &Point) -> f64 {
        (p.x - self.x_lo)
            .min(self.x_hi - p.x)
            .min(p.y - self.y_lo)
            .min(self.y_hi - p.y)
            .max(0.0)
    }

    pub fn dist_to_point(&self, p: &Point) -> f64 {
        let dx = (self.x_lo - p.x).max(p.x - self.x_hi).max(0.0);
        let dy = (self.y_lo - p.y).max(p.y - self.y_hi).max(0.0);
        dx.hypot(dy)
    }

    pub fn dist(&self, o: &Rect) -> f64 {
        let dx = (self.x_lo - o.x_hi).max(o.x_lo - self.x_hi).max(0.0);
        let dy = (self.y_lo - o.y_hi).max(o.y_lo - self.y_hi).max(0.0);
        dx.hypot(dy)
    }

    /// Exact area of the intersection with the disk `B(c, r)`.
    pub fn disk_area(&self, c: &Point, r: f64) -> f64 {
        disk_rect_area(
            self.x_lo - c.x,
            self.x_hi - c.x,
            self.y_lo - c.y,
            self.y_hi - c.y,
            r,
        )
    }
}

/// Area of `{u^2 + v^2 <= r^2} ∩ [x0, x1] × [y0, y1]`, integrating the
/// vertical chord length piecewise in closed form.
fn disk_rect_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    let a = x0.max(-r);
    let b = x1.min(r);
    if a >= b || y0 >= y1 || y0 >= r || y1 <= -r {
        return 0.0;
    }
    let half = |u: f64| (r * r - u * u).max(0.0).sqrt();
    // antiderivative of the half-chord sqrt(r^2 - u^2)
    let prim = |u: f64| {
        let u = u.clamp(-r, r);
        0.5 * (u * half(u) + r * r * (u / r).clamp(-1.0, 1.0).asin())
    };
    let mut cuts = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let w = half(y);
            cuts.extend([-w, w]);
        }
    }
    cuts.retain(|&u| u >= a && u <= b);
    cuts.sort_by(f64::total_cmp);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        if u1 <= u0 {
            continue;
        }
        let m = 0.5 * (u0 + u1);
        let s = half(m);
        let top_is_chord = s < y1;
        let bot_is_chord = -s > y0;
        let top = if top_is_chord { s } else { y1 };
        let bot = if bot_is_chord { -s } else { y0 };
        if top <= bot {
            continue;
        }
        let chord = prim(u1) - prim(u0);
        let top_int = if top_is_chord { chord } else { y1 * (u1 - u0) };
        let bot_int = if bot_is_chord { -chord } else { y0 * (u1 - u0) };
        area += (top_int - bot_int).max(0.0);
    }
    area
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub row: RowAddress,
    pub col: IntervalAddress,
    pub rect: Rect,
}

impl Cube {
    pub fn new(params: SpaceParams, row: RowAddress, col: IntervalAddress) -> Result<Cube> {
        if col.level != params.nu * row.generation {
            return Err(Error::AddressRange(format!(
                "column level {} does not match row generation {} (nu = {})",
                col.level, row.generation, params.nu
            )));
        }
        let (x_lo, x_hi) = cantor::surviving_interval(params, col)?;
        let (y_lo, y_hi) = cantor::removed_interval_of_d(params, row)?;
        Ok(Cube { row, col, rect: Rect { x_lo, x_hi, y_lo, y_hi } })
    }

    pub fn generation(&self) -> u32 {
        self.row.generation
    }

    pub fn side(&self) -> f64 {
        self.rect.width()
    }

    /// The same cube after `y -> scale_d - y`.
    pub fn reflect(&self, params: SpaceParams) -> Cube {
        Cube::new(params, self.row.reflect(), self.col).expect("reflection keeps addresses valid")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceApprox {
    pub params: SpaceParams,
    pub max_generation: u32,
    pub cubes: Vec<Cube>,
}

impl SpaceApprox {
    /// Position of the cube in `cubes` (generation, then row, then column).
    pub fn cube_index(&self, row: RowAddress, col: IntervalAddress) -> Option<usize> {
        let nu = self.params.nu;
        if row.generation > self.max_generation || col.level != nu * row.generation {
            return None;
        }
        let offset = match row.generation {
            0 => 0,
            g => cube_count(self.params, g - 1) as usize,
        };
        let per_row = 1usize << (nu * row.generation);
        Some(offset + (row.index as usize - 1) * per_row + col.index as usize - 1)
    }

    pub fn cube_at(&self, row: RowAddress, col: IntervalAddress) -> Option<&Cube> {
        self.cube_index(row, col).and_then(|i| self.cubes.get(i))
    }

    pub fn classify(&self, p: Point, tol: f64) -> Classification {
        classify_point(self.params, p, self.max_generation, tol)
    }

    /// Ambient box `[0, 1] × [0, scale_d]`.
    pub fn ambient(&self) -> Rect {
        Rect::new(0.0, 1.0, 0.0, self.params.scale_d())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `Σ_{g <= G} 2^g 2^{νg}`, saturating.
pub fn cube_count(params: SpaceParams, g_max: u32) -> u128 {
    let mut total: u128 = 0;
    for g in 0..=g_max {
        let e = (1 + params.nu as u128) * g as u128;
        if e >= 127 {
            return u128::MAX;
        }
        total = total.saturating_add(1u128 << e);
    }
    total
}

pub fn enumerate_cubes(params: SpaceParams, g_max: u32) -> Result<SpaceApprox> {
    enumerate_cubes_with_budget(params, g_max, DEFAULT_CUBE_BUDGET)
}

pub fn enumerate_cubes_with_budget(params: SpaceParams, g_max: u32, budget: u64) -> Result<SpaceApprox> {
    let count = cube_count(params, g_max);
    if count > budget as u128 {
        return Err(Error::Resource {
            what: format!("cube enumeration to generation {g_max}"),
            count: count.min(u64::MAX as u128) as u64,
            cap: budget,
        });
    }
    let mut cubes = Vec::with_capacity(count as usize);
    for g in 0..=g_max {
        let level = params.nu * g;
        for i in 1..=(1u64 << g) {
            let row = RowAddress { generation: g, index: i };
            let (y_lo, y_hi) = cantor::removed_interval_of_d(params, row)?;
            for j in 1..=(1u64 << level) {
                let col = IntervalAddress { level, index: j };
                let (x_lo, x_hi) = cantor::surviving_interval(params, col)?;
                cubes.push(Cube { row, col, rect: Rect { x_lo, x_hi, y_lo, y_hi } });
            }
        }
    }
    Ok(SpaceApprox { params, max_generation: g_max, cubes })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Classification {
    InCube(Cube),
    InSingularSet,
    Outside,
}

/// Closed cubes win over the singular set, so cube corners on `C × D`
/// classify as `InCube`.
pub fn classify_point(params: SpaceParams, p: Point, g_max: u32, tol: f64) -> Classification {
    if let Some(row) = cantor::locate_row(params, p.y, g_max, tol) {
        if let Some(col) = cantor::locate_in_c(params, p.x, params.nu * row.generation, tol) {
            if let Ok(c) = Cube::new(params, row, col) {
                return Classification::InCube(c);
            }
        }
    }
    let eps = tol.max(1e-15);
    let c_level = level_for(params.lambda, eps);
    let d_level = level_for(params.mu(), eps);
    if cantor::dist_to_c(params, p.x, c_level) <= tol
        && cantor::dist_to_d(params, p.y, d_level) <= tol
        && p.x >= -tol
        && p.x <= 1.0 + tol
    {
        Classification::InSingularSet
    } else {
        Classification::Outside
    }
}

/// Smallest level whose pieces are shorter than `eps`.
fn level_for(ratio: f64, eps: f64) -> u32 {
    let l = (eps.ln() / ratio.ln()).ceil();
    (l.max(1.0) as u32).min(cantor::MAX_LEVEL)
}

/// Ratio of the geometric series behind the total measure.
pub fn measure_ratio(params: SpaceParams) -> f64 {
    2f64.powi(1 + params.nu as i32) * params.lambda.powi(2 * params.nu as i32)
}

pub fn total_measure(params: SpaceParams, g_max: u32) -> f64 {
    let q = measure_ratio(params);
    assert!(q < 1.0, "measure series diverges for these parameters");
    (0..=g_max).map(|g| q.powi(g as i32)).sum()
}

/// `Σ_{g > G} 2^{(1+ν)g} λ^{2νg}`.
pub fn measure_tail(params: SpaceParams, g_max: u32) -> f64 {
    let q = measure_ratio(params);
    q.powi(g_max as i32 + 1) / (1.0 - q)
}

pub fn measure_limit(params: SpaceParams) -> f64 {
    1.0 / (1.0 - measure_ratio(params))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallMeasure {
    /// Measure of the ball inside the truncated complex.
    pub measure: f64,
    /// Upper bound on what the missing generations could add.
    pub tail_bound: f64,
}

/// `μ(B(center, r) ∩ X'_G)` by exact disk/square intersection areas.
pub fn ball_measure(space: &SpaceApprox, center: Point, r: f64) -> BallMeasure {
    let mut parts = Vec::new();
    for c in &space.cubes {
        let q = &c.rect;
        if q.x_lo > center.x + r || q.x_hi < center.x - r || q.y_lo > center.y + r || q.y_hi < center.y - r {
            continue;
        }
        parts.push(q.disk_area(&center, r));
    }
    BallMeasure {
        measure: crate::pairwise_sum(&parts),
        tail_bound: measure_tail(space.params, space.max_generation),
    }
}

/// Uniform point of `X'_G` by rejection from the ambient box.
pub fn sample_point<R: Rng>(space: &SpaceApprox, rng: &mut R) -> (Point, Cube) {
    let s = space.params.scale_d();
    loop {
        let p = Point::new(rng.gen::<f64>(), s * rng.gen::<f64>());
        if let Classification::InCube(c) = space.classify(p, 0.0) {
            return (p, c);
        }
    }
}

/// Random point of `C × D`, digits drawn uniformly.
pub fn sample_singular_point<R: Rng>(params: SpaceParams, rng: &mut R) -> Point {
    let nx = level_for(params.lambda, 1e-17);
    let ny = level_for(params.mu(), 1e-17);
    let bx: u64 = rng.gen::<u64>() >> (64 - nx.min(62));
    let by: u64 = rng.gen::<u64>() >> (64 - ny.min(62));
    let x = cantor::digit_sum(params.lambda, nx.min(62), bx);
    let y = params.scale_d() * cantor::digit_sum(params.mu(), ny.min(62), by);
    Point::new(x, y)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AhlforsSample {
    pub center: Point,
    pub r: f64,
    pub measure: f64,
    pub ratio: f64,
    pub singular_center: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AhlforsReport {
    pub samples: Vec<AhlforsSample>,
    pub c_low: f64,
    pub c_high: f64,
    pub tail_bound: f64,
}

/// Ratios `μ(B)/r²` over `n` random balls. Even samples are centred on
/// `X'`, odd ones on `C × D`; radii are log-uniform in `[r_min, r_max]`.
/// Each sample draws from its own stream so the draws do not depend on `G`.
pub fn ahlfors_probe(space: &SpaceApprox, n: usize, seed: u64, r_min: f64, r_max: f64) -> AhlforsReport {
    use rayon::prelude::*;
    let samples: Vec<AhlforsSample> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let r = r_min * (r_max / r_min).powf(rng.gen::<f64>());
            let singular = i % 2 == 1;
            let center = if singular {
                sample_singular_point(space.params, &mut rng)
            } else {
                sample_point(space, &mut rng).0
            };
            let m = ball_measure(space, center, r).measure;
            AhlforsSample { center, r, measure: m, ratio: m / (r * r), singular_center: singular }
        })
        .collect();
    let c_low = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
    let c_high = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    AhlforsReport { samples, c_low, c_high, tail_bound: measure_tail(space.params, space.max_generation) }
}

/// The first large cube below `q`: nearest row underneath with a strictly
/// larger gap, over the ancestor of `q`'s column.
pub fn first_large_cube_below(params: SpaceParams, q: &Cube) -> Result<Cube> {
    let row = q
        .row
        .first_larger_below()
        .ok_or_else(|| Error::Boundary(format!("no larger row below {:?}", q.row)))?;
    Cube::new(params, row, q.col.ancestor(params.nu * row.generation))
}

pub fn first_large_cube_above(params: SpaceParams, q: &Cube) -> Result<Cube> {
    let row = q
        .row
        .first_larger_above()
        .ok_or_else(|| Error::Boundary(format!("no larger row above {:?}", q.row)))?;
    Cube::new(params, row, q.col.ancestor(params.nu * row.generation))
}
