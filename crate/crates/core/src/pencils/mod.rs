//! Pencils of curves on `X`: the families `Γ(I)`, `Γ(Q)`, `Γ(Q₁,Q₂)`, cones
//! and double cones, realized as polylines truncated at a finite depth.
//!
//! Every family is indexed by a parameter `t` in an interval; the relative
//! position `u = (t - inf I)/|I|` drives the construction, and a curve lands
//! on the Cantor point whose digits are the binary digits of `u`.

mod double_cone;
pub(crate) mod paths;

pub use double_cone::{double_cone, find_qm, QmCase};
pub use paths::{cone, cone_chain, gamma_i, gamma_i_at, gamma_q, gamma_q1q2, landing_x};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cantor::{self, IntervalAddress, SpaceParams};
use crate::space::{Cube, Point};
use crate::{pairwise_sum, Error, Result};

/// Uniform bound on `|dγ|/dt` shared by every family: segments never tilt
/// more than `2/λ` horizontal units per vertical unit.
pub fn lipschitz_constant(params: SpaceParams) -> f64 {
    (1.0 + 4.0 / (params.lambda * params.lambda)).sqrt()
}

/// Smallest depth with `λ^depth · len < quad_step`.
pub fn depth_for(params: SpaceParams, len: f64, quad_step: f64) -> u32 {
    let mut d = 1;
    while params.lambda.powi(d as i32) * len >= quad_step && d < 60 {
        d += 1;
    }
    d
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub name: String,
    /// First and last vertex of the stage (consecutive stages share a vertex).
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolylinePath {
    pub vertices: Vec<Point>,
    /// Parameter value at each vertex, starting from 0.
    pub params: Vec<f64>,
    pub lipschitz_bound: f64,
    pub depth: u32,
    pub stages: Vec<Stage>,
    /// Set for the same-cube variant of a double cone.
    pub single_cube: bool,
}

impl PolylinePath {
    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        *self.vertices.last().expect("non-empty path")
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(&w[1])).sum()
    }

    pub fn param_length(&self) -> f64 {
        *self.params.last().expect("non-empty path")
    }

    pub fn stage_lengths(&self) -> Vec<(String, f64)> {
        self.stages
            .iter()
            .map(|s| {
                let l = self.vertices[s.start..=s.end].windows(2).map(|w| w[0].dist(&w[1])).sum();
                (s.name.clone(), l)
            })
            .collect()
    }

    /// Largest `|chord| / Δparam` over the segments.
    pub fn max_speed(&self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 1..self.vertices.len() {
            let dp = self.params[k] - self.params[k - 1];
            if dp > 0.0 {
                m = m.max(self.vertices[k].dist(&self.vertices[k - 1]) / dp);
            }
        }
        m
    }

    /// Point at parameter `s` (clamped to the domain).
    pub fn point_at(&self, s: f64) -> Point {
        let s = s.clamp(0.0, self.param_length());
        let k = self.params.partition_point(|&p| p < s).max(1).min(self.vertices.len() - 1);
        let (p0, p1) = (self.params[k - 1], self.params[k]);
        let f = if p1 > p0 { (s - p0) / (p1 - p0) } else { 1.0 };
        self.vertices[k - 1].lerp(&self.vertices[k], f)
    }

    pub fn reversed(&self) -> PolylinePath {
        let n = self.vertices.len();
        let mut a = Assembler::new();
        let mut stages: Vec<Stage> = self
            .stages
            .iter()
            .rev()
            .map(|s| Stage { name: s.name.clone(), start: n - 1 - s.end, end: n - 1 - s.start })
            .collect();
        a.verts = self.vertices.iter().rev().copied().collect();
        std::mem::swap(&mut a.stages, &mut stages);
        let mut p = a.finish(self.lipschitz_bound, self.depth);
        p.single_cube = self.single_cube;
        p
    }

    /// Mirror image under `y -> s - y`.
    pub fn reflected(&self, s: f64) -> PolylinePath {
        let mut p = self.clone();
        for v in &mut p.vertices {
            v.y = s - v.y;
        }
        p
    }
}

/// Concatenates vertex runs into a path, merging shared endpoints.
#[derive(Default)]
pub(crate) struct Assembler {
    verts: Vec<Point>,
    stages: Vec<Stage>,
}

impl Assembler {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn last(&self) -> Option<Point> {
        self.verts.last().copied()
    }

    pub(crate) fn add(&mut self, name: &str, pts: &[Point]) {
        if pts.is_empty() {
            return;
        }
        let start = self.verts.len().saturating_sub(1);
        let mut it = pts.iter();
        if let Some(last) = self.last() {
            if last.dist(&pts[0]) <= 1e-12 * (1.0 + last.x.abs() + last.y.abs()) {
                it.next();
            }
        }
        for &p in it {
            self.verts.push(p);
        }
        let end = self.verts.len() - 1;
        match self.stages.last_mut() {
            Some(s) if s.name == name && s.end == start => s.end = end,
            _ => self.stages.push(Stage { name: name.to_string(), start, end }),
        }
    }

    /// Appends a path stage by stage.
    pub(crate) fn append(&mut self, p: &PolylinePath) {
        for st in &p.stages {
            self.add(&st.name, &p.vertices[st.start..=st.end]);
        }
    }

    pub(crate) fn finish(self, lipschitz: f64, depth: u32) -> PolylinePath {
        let mut params = Vec::with_capacity(self.verts.len());
        let mut s = 0.0;
        params.push(0.0);
        for w in self.verts.windows(2) {
            let len = w[0].dist(&w[1]);
            s += (w[1].y - w[0].y).abs().max(len / lipschitz);
            params.push(s);
        }
        PolylinePath {
            vertices: self.verts,
            params,
            lipschitz_bound: lipschitz,
            depth,
            stages: self.stages,
            single_cube: false,
        }
    }
}

/// Composite midpoint rule for `∫_γ g ds`.
pub fn line_integral(path: &PolylinePath, g: &(dyn Fn(Point) -> f64 + Sync), quad_step: f64) -> Result<f64> {
    if !(quad_step > 0.0) {
        return Err(Error::Domain(format!("quad_step = {quad_step} must be positive")));
    }
    let mut total = 0.0;
    for w in path.vertices.windows(2) {
        let len = w[0].dist(&w[1]);
        if len == 0.0 {
            continue;
        }
        let n = (len / quad_step).ceil().max(1.0) as usize;
        let mut s = 0.0;
        for k in 0..n {
            s += g(w[0].lerp(&w[1], (k as f64 + 0.5) / n as f64));
        }
        total += s * len / n as f64;
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub enum FamilySpec {
    GammaI { interval: IntervalAddress, inverted: bool },
    GammaQ { cube: Cube },
    GammaQ1Q2 { q1: Cube, q2: Cube },
    Cone { q0: Cube, qm: Cube },
    /// Indexed by the unit interval.
    DoubleCone { qx: Cube, x: Point, qy: Cube, y: Point },
}

impl FamilySpec {
    pub fn index_interval(&self, params: SpaceParams) -> (f64, f64) {
        let col = match self {
            FamilySpec::GammaI { interval, .. } => *interval,
            FamilySpec::GammaQ { cube } => cube.col,
            FamilySpec::GammaQ1Q2 { q1, .. } => q1.col,
            FamilySpec::Cone { q0, .. } => q0.col,
            FamilySpec::DoubleCone { .. } => return (0.0, 1.0),
        };
        cantor::surviving_interval(params, col).expect("valid address")
    }

    pub fn path(&self, params: SpaceParams, t: f64, depth: u32) -> Result<PolylinePath> {
        match self {
            FamilySpec::GammaI { interval, inverted } => {
                let p = gamma_i(params, *interval, t, depth)?;
                Ok(if *inverted { p.reflected(0.0) } else { p })
            }
            FamilySpec::GammaQ { cube } => gamma_q(params, cube, t, depth),
            FamilySpec::GammaQ1Q2 { q1, q2 } => gamma_q1q2(params, q1, q2, t, depth),
            FamilySpec::Cone { q0, qm } => cone(params, q0, qm, t, depth),
            FamilySpec::DoubleCone { qx, x, qy, y } => double_cone(params, qx, *x, qy, *y, t, depth),
        }
    }
}

/// Monte-Carlo estimate of `⨍ ∫_{γ_t} g ds dt` over the family's index
/// interval. Sample `i` draws from its own stream of `seed`; exceptional
/// parameters are redrawn from the same stream.
pub fn family_average(
    params: SpaceParams,
    spec: &FamilySpec,
    g: &(dyn Fn(Point) -> f64 + Sync),
    n_samples: usize,
    depth: u32,
    quad_step: f64,
    seed: u64,
) -> Result<f64> {
    use rayon::prelude::*;
    if n_samples < 16 {
        return Err(Error::Precondition(format!("n_samples = {n_samples} < 16")));
    }
    let (lo, hi) = spec.index_interval(params);
    let vals: Vec<Result<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            for _ in 0..64 {
                let t = lo + rng.gen::<f64>() * (hi - lo);
                match spec.path(params, t, depth) {
                    Ok(p) => return line_integral(&p, g, quad_step),
                    Err(Error::ExceptionalParameter { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::Precondition("could not draw a regular parameter".into()))
        })
        .collect();
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    Ok(pairwise_sum(&vals) / n_samples as f64)
}
