use crate::space::{Point, SpaceApprox};

/// Radii of the maximal function are `R · 2^{-j/5}`, about 16.6 per decade.
/// The grid for `R/2` is a subset of the grid for `R`.
pub const RADII_PER_OCTAVE: u32 = 5;

/// `⨍_{B(x,r)} g dμ` over `X'`, by a midpoint grid with `resolution` points
/// across the diameter (clipped to each cube). `None` if the ball misses
/// every grid point.
pub fn ball_average(space: &SpaceApprox, g: &(dyn Fn(Point) -> f64 + Sync), x: Point, r: f64, resolution: usize) -> Option<f64> {
    let step = 2.0 * r / resolution.max(2) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for c in &space.cubes {
        let q = c.rect;
        let x0 = q.x_lo.max(x.x - r);
        let x1 = q.x_hi.min(x.x + r);
        let y0 = q.y_lo.max(x.y - r);
        let y1 = q.y_hi.min(x.y + r);
        if x0 >= x1 || y0 >= y1 {
            continue;
        }
        let nx = ((x1 - x0) / step).ceil().max(1.0) as usize;
        let ny = ((y1 - y0) / step).ceil().max(1.0) as usize;
        let (hx, hy) = ((x1 - x0) / nx as f64, (y1 - y0) / ny as f64);
        let w = hx * hy;
        for j in 0..ny {
            let py = y0 + (j as f64 + 0.5) * hy;
            for i in 0..nx {
                let p = Point::new(x0 + (i as f64 + 0.5) * hx, py);
                if p.dist(&x) <= r {
                    num += w * g(p);
                    den += w;
                }
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

fn radius(r_max: f64, j: u32) -> f64 {
    let c = (-((j % RADII_PER_OCTAVE) as f64) / RADII_PER_OCTAVE as f64).exp2();
    r_max * c * (-((j / RADII_PER_OCTAVE) as f64)).exp2()
}

/// `M_R g(x)`: the largest ball average over the radii `R·2^{-j/5}` that
/// are at least `r_min`.
pub fn truncated_maximal(
    space: &SpaceApprox,
    g: &(dyn Fn(Point) -> f64 + Sync),
    x: Point,
    r_max: f64,
    r_min: f64,
    resolution: usize,
) -> f64 {
    use rayon::prelude::*;
    let n = (0..).take_while(|&j| radius(r_max, j) >= r_min).count() as u32;
    (0..n)
        .into_par_iter()
        .filter_map(|j| ball_average(space, g, x, radius(r_max, j), resolution))
        .reduce(|| 0.0, f64::max)
}
