//! Quantitative probes: the threshold exponent, `K_p` sums, coarea checks,
//! maximal functions, discrete modulus, necessity witnesses and Poincaré
//! ratios.

mod coarea;
mod maximal;
pub mod modulus;
pub mod necessity;
mod pointwise;

pub use coarea::{coarea_check, CoareaReport, Trapezoid};
pub use maximal::{ball_average, truncated_maximal, RADII_PER_OCTAVE};
pub use modulus::{
    bowtie_problem, discrete_modulus, local_q1q2_graph, modulus_scaling_check, rectangle_problem, scaling_configuration,
    ModulusProblem, ModulusResult, ScalingOptions, ScalingReport, ScalingRow,
};
pub use necessity::{
    necessity_energy, necessity_energy_quadrature, necessity_witness, poincare_probe, NecessityWitness,
    PoincareReport,
};
pub use pointwise::{pointwise_estimate_check, PointwiseReport};

use serde::Serialize;

use crate::cantor::{self, SpaceParams};
use crate::space::{self, Cube};
use crate::{Error, Result};

/// Threshold exponent `(1 + ν + 2ν log₂λ) / (1 + ν log₂λ)`.
pub fn p0(params: SpaceParams) -> f64 {
    let nu = params.nu as f64;
    let l = params.lambda.log2();
    (1.0 + nu + 2.0 * nu * l) / (1.0 + nu * l)
}

/// Ratio of the geometric series bounding `K_p`; below one iff `p > p0`.
pub fn kp_convergence_ratio(params: SpaceParams, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p = {p} must exceed 1")));
    }
    let nu = params.nu as f64;
    let e = 1.0 + nu * (-1.0 + (p - 2.0) * params.lambda.log2()) / (p - 1.0);
    Ok(e.exp2())
}

#[derive(Clone, Debug, Serialize)]
pub struct KpReport {
    /// `K_p` of the truncated sum.
    pub value: f64,
    /// Partial sums of `K_p^{p/(p-1)}` after each relative generation.
    pub partial: Vec<f64>,
    /// Contribution of each relative generation `k = 1..`.
    pub increments: Vec<f64>,
    /// Ratio of the last two increments.
    pub tail_ratio: f64,
    pub convergent: bool,
}

/// Truncated `K_p(Q₁,Q₂)` over rows up to `max_k` generations below `Q₁`'s.
pub fn kp_exact(params: SpaceParams, p: f64, q1: &Cube, q2: &Cube, max_k: u32) -> Result<KpReport> {
    let r = kp_convergence_ratio(params, p)?;
    let (lo, hi) = if space::first_large_cube_below(params, q1).ok().as_ref() == Some(q2) {
        (q2.rect.y_hi, q1.rect.y_lo)
    } else if space::first_large_cube_above(params, q1).ok().as_ref() == Some(q2) {
        (q1.rect.y_hi, q2.rect.y_lo)
    } else {
        return Err(Error::Precondition("Q_2 is not a first large cube of Q_1".into()));
    };
    let g1 = q1.generation();
    let nu = params.nu;
    let side = q1.side();
    let base = 2f64.powf(-1.0 / (p - 1.0)) * params.lambda.powf((p - 2.0) / (p - 1.0));
    let mut partial = Vec::new();
    let mut increments = Vec::new();
    let mut s = 0.0;
    for k in 1..=max_k {
        let g = g1 + k;
        if g > cantor::MAX_LEVEL / nu {
            break;
        }
        let count = cantor::count_rows_between(params, lo, hi, g);
        let inc = count * side.powf((p - 2.0) / (p - 1.0)) * base.powi((k * nu) as i32);
        s += inc;
        increments.push(inc);
        partial.push(s);
    }
    let tail_ratio = match increments.len() {
        n if n >= 2 && increments[n - 2] > 0.0 => increments[n - 1] / increments[n - 2],
        _ => f64::NAN,
    };
    Ok(KpReport {
        value: s.powf((p - 1.0) / p),
        partial,
        increments,
        tail_ratio,
        convergent: r < 1.0,
    })
}
