use serde::Serialize;

use super::maximal::truncated_maximal;
use crate::metric::{self, GridGraph};
use crate::pencils::{family_average, FamilySpec};
use crate::space::{Classification, Point, SpaceApprox};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PointwiseReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub distance: f64,
    pub maximal_x: f64,
    pub maximal_y: f64,
}

/// Double-cone average of `∫_γ g ds` against
/// `d(x,y) [(M_{C d} g^p(x))^{1/p} + (M_{C d} g^p(y))^{1/p}]`.
///
/// `d` is the graph distance when a graph is given, else Euclidean. The
/// maximal functions use radii from `C d` down to `d / 16`.
#[allow(clippy::too_many_arguments)]
pub fn pointwise_estimate_check(
    space: &SpaceApprox,
    graph: Option<&GridGraph>,
    x: Point,
    y: Point,
    g: &(dyn Fn(Point) -> f64 + Sync),
    p: f64,
    n_samples: usize,
    dilation: f64,
    depth: u32,
    quad_step: f64,
    seed: u64,
) -> Result<PointwiseReport> {
    let cube = |q: Point| match space.classify(q, 1e-12) {
        Classification::InCube(c) => Ok(c),
        _ => Err(Error::Classification(format!("({}, {}) is not in a cube", q.x, q.y))),
    };
    let (qx, qy) = (cube(x)?, cube(y)?);
    let spec = FamilySpec::DoubleCone { qx, x, qy, y };
    let lhs = family_average(space.params, &spec, g, n_samples, depth, quad_step, seed)?;
    let d = match graph {
        Some(gr) => metric::intrinsic_distance(gr, x, y)?,
        None => x.dist(&y),
    };
    let gp = |q: Point| g(q).powf(p);
    let resolution = 32;
    let mx = truncated_maximal(space, &gp, x, dilation * d, d / 16.0, resolution);
    let my = truncated_maximal(space, &gp, y, dilation * d, d / 16.0, resolution);
    let rhs = d * (mx.powf(1.0 / p) + my.powf(1.0 / p));
    Ok(PointwiseReport {
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { f64::NAN },
        distance: d,
        maximal_x: mx,
        maximal_y: my,
    })
}
