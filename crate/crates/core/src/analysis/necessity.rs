//! Witnesses `(u_k, g_k)` against the Poincaré inequality below the
//! threshold, their energies, and the Poincaré ratio on `B = X`.

use serde::Serialize;

use crate::cantor::{self, RowAddress, SpaceParams};
use crate::pencils::paths::rows_in;
use crate::space::{Classification, Point, SpaceApprox};
use crate::{pairwise_sum, Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct NecessityWitness {
    pub params: SpaceParams,
    pub k: u32,
    /// Generation-`k` rows inside `[inf J₀/2, inf J₀]`, bottom to top.
    pub rows: Vec<(RowAddress, (f64, f64))>,
    pub n_k: usize,
}

pub fn necessity_witness(params: SpaceParams, k: u32, g_max: u32) -> Result<NecessityWitness> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if k > g_max {
        return Err(Error::Truncation(format!("k = {k} exceeds the truncation G = {g_max}")));
    }
    let j0 = cantor::removed_interval_of_d(params, RowAddress { generation: 0, index: 1 })?;
    let rows: Vec<_> = rows_in(params, k, j0.0 / 2.0, j0.0)
        .into_iter()
        .map(|r| (r, cantor::removed_interval_of_d(params, r).expect("valid row")))
        .collect();
    if rows.is_empty() {
        return Err(Error::Precondition(format!("no generation-{k} row lies in [inf J0/2, inf J0]")));
    }
    let n_k = rows.len();
    Ok(NecessityWitness { params, k, rows, n_k })
}

impl NecessityWitness {
    /// Rises by `1/N_k` linearly across each row, constant in between.
    pub fn u(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for &(_, (lo, hi)) in &self.rows {
            if y >= hi {
                acc += 1.0;
            } else if y > lo {
                acc += (y - lo) / (hi - lo);
            }
        }
        acc / self.n_k as f64
    }

    pub fn g(&self, y: f64) -> f64 {
        let slope = 1.0 / (self.n_k as f64 * self.params.side(self.k));
        if self.rows.iter().any(|&(_, (lo, hi))| y >= lo && y <= hi) {
            slope
        } else {
            0.0
        }
    }
}

/// `∫ g_k^q dμ = N_k^{1-q} 2^{kν} λ^{kν(2-q)}`.
pub fn necessity_energy(w: &NecessityWitness, q: f64) -> f64 {
    let params = w.params;
    let kn = (w.k * params.nu) as f64;
    (w.n_k as f64).powf(1.0 - q) * kn.exp2() * params.lambda.powf(kn * (2.0 - q))
}

/// The same integral by a midpoint grid over each witness row: `ny`
/// heights per row, `nx` abscissas per cube side across `[0, 1]`, each
/// grid point classified against the space.
pub fn necessity_energy_quadrature(space: &SpaceApprox, w: &NecessityWitness, q: f64, nx: usize, ny: usize) -> f64 {
    use rayon::prelude::*;
    let side = w.params.side(w.k);
    let step = side / nx as f64;
    let n_cols = (1.0 / step).round() as usize;
    let tol = 1e-12;
    let per_row: Vec<f64> = w
        .rows
        .par_iter()
        .map(|&(_, (lo, hi))| {
            let dy = (hi - lo) / ny as f64;
            let mut gsum = 0.0;
            for j in 0..ny {
                let y = lo + (j as f64 + 0.5) * dy;
                let gv = w.g(y).powf(q);
                for i in 0..n_cols {
                    let p = Point::new((i as f64 + 0.5) * step, y);
                    if matches!(space.classify(p, tol), Classification::InCube(_)) {
                        gsum += gv;
                    }
                }
            }
            gsum * step * dy
        })
        .collect();
    pairwise_sum(&per_row)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PoincareReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub measure: f64,
}

/// `⨍_X |u - u_X| dμ` against `diam(X) (⨍_X g^p dμ)^{1/p}` for `u`, `g`
/// depending on `y` only. Each row of generation at most `g_max` carries
/// `x`-measure `(2λ)^{νg}`; `y` integrals use `n` midpoints per row.
pub fn poincare_probe(
    params: SpaceParams,
    g_max: u32,
    u: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    p: f64,
    n: usize,
) -> Result<PoincareReport> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be at least 1")));
    }
    let rows = cantor::rows_sorted(params, g_max);
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(rows.len() * n);
    for (r, (lo, hi)) in &rows {
        let width = (2.0 * params.lambda).powi((params.nu * r.generation) as i32);
        let dy = (hi - lo) / n as f64;
        for j in 0..n {
            samples.push((lo + (j as f64 + 0.5) * dy, width * dy));
        }
    }
    let measure = pairwise_sum(&samples.iter().map(|s| s.1).collect::<Vec<_>>());
    let mean = pairwise_sum(&samples.iter().map(|&(y, w)| w * u(y)).collect::<Vec<_>>()) / measure;
    let lhs = pairwise_sum(&samples.iter().map(|&(y, w)| w * (u(y) - mean).abs()).collect::<Vec<_>>()) / measure;
    let gp = pairwise_sum(&samples.iter().map(|&(y, w)| w * g(y).powf(p)).collect::<Vec<_>>()) / measure;
    let diam = 1f64.hypot(params.scale_d());
    let rhs = diam * gp.powf(1.0 / p);
    Ok(PoincareReport { lhs, rhs, ratio: if rhs > 0.0 { lhs / rhs } else { f64::INFINITY }, measure })
}
