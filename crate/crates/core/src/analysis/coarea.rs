use serde::{Deserialize, Serialize};

use crate::space::Point;
use crate::{Error, Result};

/// Trapezoid with base `[0, long]` on `y = 0` and a centred top side of
/// length `short` at `y = height`, swept by the segments joining `(t, 0)`
/// to the affine image of `t` on the top side.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Trapezoid {
    pub long: f64,
    pub short: f64,
    pub height: f64,
}

impl Trapezoid {
    fn top(&self, t: f64) -> f64 {
        (self.long - self.short) / 2.0 + t * self.short / self.long
    }

    pub fn area(&self) -> f64 {
        (self.long + self.short) * self.height / 2.0
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoareaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `lhs = ∫_0^L ∫_{γ_t} g ds dt` against `rhs = (L/ℓ) ∫_E g dA`.
pub fn coarea_check(trap: Trapezoid, g: &dyn Fn(Point) -> f64, n_t: usize, quad_step: f64) -> Result<CoareaReport> {
    let Trapezoid { long, short, height } = trap;
    if !(short > 0.0 && short <= long && height > 0.0) {
        return Err(Error::Precondition(format!("need 0 < short <= long, height > 0 (got {trap:?})")));
    }
    if n_t == 0 || !(quad_step > 0.0) {
        return Err(Error::Domain("n_t and quad_step must be positive".into()));
    }
    let n_s = (height / quad_step).ceil().max(1.0) as usize;
    let dt = long / n_t as f64;
    let mut lhs = 0.0;
    let mut area_int = 0.0;
    for i in 0..n_t {
        let t = (i as f64 + 0.5) * dt;
        let (x0, x1) = (t, trap.top(t));
        let len = (x1 - x0).hypot(height);
        let mut line = 0.0;
        let mut sheet = 0.0;
        for j in 0..n_s {
            let s = (j as f64 + 0.5) / n_s as f64;
            let v = g(Point::new(x0 + s * (x1 - x0), s * height));
            line += v;
            // Jacobian of (t, s) -> point
            sheet += v * height * (1.0 - s * (1.0 - short / long));
        }
        lhs += line * len / n_s as f64 * dt;
        area_int += sheet / n_s as f64 * dt;
    }
    let rhs = long / short * area_int;
    Ok(CoareaReport { lhs, rhs, ratio: if rhs > 0.0 { lhs / rhs } else { f64::NAN } })
}
