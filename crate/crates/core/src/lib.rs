//! Fractal cube complexes built from two Cantor sets, the pencils of curves
//! that live on them, and the numerics used to probe Poincare inequalities,
//! curve modulus and a quasiconformal shear.

pub mod analysis;
pub mod cantor;
pub mod cli;
pub mod error;
pub mod metric;
pub mod pencils;
pub mod qcmap;
pub mod space;
pub mod svg;

pub use cantor::{IntervalAddress, RowAddress, SpaceParams};
pub use error::{Error, Result};
pub use space::{Cube, Point, Rect, SpaceApprox};

/// Sum a slice by recursive halving, so the result does not depend on how
/// the values were produced (serially or in parallel).
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
