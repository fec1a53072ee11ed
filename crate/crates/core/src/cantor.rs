//! Exact addressing of the two Cantor sets.
//!
//! `C = C(λ)` lives on `[0, 1]`; `D = scale_d · C(λ^ν)` lives on
//! `[0, scale_d]` with `scale_d = 1/(1 - 2λ^ν)`, so that its largest
//! complementary interval has unit length. Intervals are addressed by
//! integers; endpoints are evaluated from the closed-form digit sums.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Deepest level an address may carry (indices are `u64`).
pub const MAX_LEVEL: u32 = 62;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub lambda: f64,
    pub nu: u32,
}

impl SpaceParams {
    pub fn new(lambda: f64, nu: u32) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 0.5) {
            return Err(Error::Domain(format!("lambda = {lambda} not in (0, 1/2)")));
        }
        if nu < 2 {
            return Err(Error::Domain(format!("nu = {nu} must be at least 2")));
        }
        Ok(SpaceParams { lambda, nu })
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda / (2.0 * (1.0 - self.lambda))
    }

    /// Contraction ratio of the Cantor set underlying `D`.
    pub fn mu(&self) -> f64 {
        self.lambda.powf(self.nu as f64)
    }

    pub fn scale_d(&self) -> f64 {
        1.0 / (1.0 - 2.0 * self.mu())
    }

    /// Side length of the cubes on a row of generation `g`.
    pub fn side(&self, g: u32) -> f64 {
        self.mu().powi(g as i32)
    }

    pub fn dim_c(&self) -> f64 {
        dim_c(*self)
    }

    pub fn dim_d(&self) -> f64 {
        dim_d(*self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntervalAddress {
    pub level: u32,
    /// 1-based, left to right.
    pub index: u64,
}

impl IntervalAddress {
    pub fn new(level: u32, index: u64) -> Result<Self> {
        let a = IntervalAddress { level, index };
        a.validate()?;
        Ok(a)
    }

    pub fn root() -> Self {
        IntervalAddress { level: 0, index: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.level > MAX_LEVEL {
            return Err(Error::AddressRange(format!("level {} > {MAX_LEVEL}", self.level)));
        }
        if self.index < 1 || self.index > 1u64 << self.level {
            return Err(Error::AddressRange(format!(
                "index {} not in [1, 2^{}]",
                self.index, self.level
            )));
        }
        Ok(())
    }

    pub fn children(&self) -> (Self, Self) {
        let l = self.level + 1;
        (
            IntervalAddress { level: l, index: 2 * self.index - 1 },
            IntervalAddress { level: l, index: 2 * self.index },
        )
    }

    /// Ancestor at a coarser level (itself when `level == self.level`).
    pub fn ancestor(&self, level: u32) -> Self {
        assert!(level <= self.level);
        let bits = (self.index - 1) >> (self.level - level);
        IntervalAddress { level, index: bits + 1 }
    }

    pub fn contains(&self, other: &IntervalAddress) -> bool {
        other.level >= self.level && other.ancestor(self.level) == *self
    }

    /// Binary digit `i` (1-based, from the top) of the address: 0 = left, 1 = right.
    pub fn digit(&self, i: u32) -> u64 {
        ((self.index - 1) >> (self.level - i)) & 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowAddress {
    pub generation: u32,
    /// 1-based, bottom to top.
    pub index: u64,
}

impl RowAddress {
    pub fn new(generation: u32, index: u64) -> Result<Self> {
        let a = RowAddress { generation, index };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.generation > MAX_LEVEL {
            return Err(Error::AddressRange(format!(
                "generation {} > {MAX_LEVEL}",
                self.generation
            )));
        }
        if self.index < 1 || self.index > 1u64 << self.generation {
            return Err(Error::AddressRange(format!(
                "row index {} not in [1, 2^{}]",
                self.index, self.generation
            )));
        }
        Ok(())
    }

    /// Mirror image under `y -> scale_d - y`.
    pub fn reflect(&self) -> Self {
        RowAddress {
            generation: self.generation,
            index: (1u64 << self.generation) + 1 - self.index,
        }
    }

    /// Nearest row below with a strictly smaller generation.
    pub fn first_larger_below(&self) -> Option<RowAddress> {
        let g = self.generation;
        let bits = self.index - 1;
        // the deepest right turn in the address of the enclosing piece
        (1..=g).rev().find(|&m| (bits >> (g - m)) & 1 == 1).map(|m| RowAddress {
            generation: m - 1,
            index: (bits >> (g - m + 1)) + 1,
        })
    }

    /// Nearest row above with a strictly smaller generation.
    pub fn first_larger_above(&self) -> Option<RowAddress> {
        self.reflect().first_larger_below().map(|r| r.reflect())
    }
}

/// Left endpoint of the level-`level` piece of `C(ratio)` whose 0-based
/// address is `bits`: `Σ b_i (1 - ratio) ratio^{i-1}`.
pub fn digit_sum(ratio: f64, level: u32, bits: u64) -> f64 {
    let mut lo = 0.0;
    for i in 1..=level {
        if (bits >> (level - i)) & 1 == 1 {
            lo += (1.0 - ratio) * ratio.powi(i as i32 - 1);
        }
    }
    lo
}

pub fn surviving_interval(params: SpaceParams, addr: IntervalAddress) -> Result<(f64, f64)> {
    addr.validate()?;
    let lo = digit_sum(params.lambda, addr.level, addr.index - 1);
    Ok((lo, lo + params.lambda.powi(addr.level as i32)))
}

/// Level-`level` surviving piece of `D` (scaled construction of `C(λ^ν)`).
pub fn d_piece(params: SpaceParams, level: u32, index: u64) -> Result<(f64, f64)> {
    RowAddress::new(level, index)?;
    let s = params.scale_d();
    let mu = params.mu();
    let lo = s * digit_sum(mu, level, index - 1);
    Ok((lo, lo + s * mu.powi(level as i32)))
}

pub fn removed_interval_of_d(params: SpaceParams, row: RowAddress) -> Result<(f64, f64)> {
    row.validate()?;
    let mu = params.mu();
    let acc = digit_sum(mu, row.generation, row.index - 1);
    Ok(gap_at(params.scale_d(), mu, row.generation, acc))
}

/// Cantor-Vitali function of `D`, resolved to within `2^-depth`.
pub fn vitali(params: SpaceParams, y: f64, depth: u32) -> Result<f64> {
    let s = params.scale_d();
    let slack = 1e-12 * s;
    if !(y >= -slack && y <= s + slack) {
        return Err(Error::Domain(format!("y = {y} outside [0, {s}]")));
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    if y >= s {
        return Ok(1.0);
    }
    let mu = params.mu();
    // unscaled digit sum, accumulated in the same order as `digit_sum`
    let mut acc = 0.0;
    let mut value = 0.0;
    for m in 0..depth.min(MAX_LEVEL) {
        let step = 0.5f64.powi(m as i32 + 1);
        let (gap_lo, gap_hi) = gap_at(s, mu, m, acc);
        if y < gap_lo {
            continue;
        }
        if y > gap_hi {
            value += step;
            acc += (1.0 - mu) * mu.powi(m as i32);
            continue;
        }
        return Ok(value + step);
    }
    let lo = s * acc;
    let len = s * mu.powi(depth as i32);
    let tail = 0.5f64.powi(depth as i32);
    Ok(if y <= lo {
        value
    } else if y >= lo + len {
        value + tail
    } else {
        value + 0.5 * tail
    })
}

fn gap_at(s: f64, mu: f64, m: u32, acc: f64) -> (f64, f64) {
    let lo = s * acc + s * mu.powi(m as i32 + 1);
    (lo, lo + mu.powi(m as i32))
}

pub fn dim_c(params: SpaceParams) -> f64 {
    std::f64::consts::LN_2 / (1.0 / params.lambda).ln()
}

pub fn dim_d(params: SpaceParams) -> f64 {
    dim_c(params) / params.nu as f64
}

/// Level-`level` interval of `C` containing `x` (closed, with slack `tol`),
/// or `None` when `x` falls in a removed gap.
pub fn locate_in_c(params: SpaceParams, x: f64, level: u32, tol: f64) -> Option<IntervalAddress> {
    if x < -tol || x > 1.0 + tol {
        return None;
    }
    let l = params.lambda;
    let mut lo = 0.0;
    let mut bits = 0u64;
    for i in 1..=level.min(MAX_LEVEL) {
        let len = l.powi(i as i32 - 1);
        let left_hi = lo + l.powi(i as i32);
        let right_lo = lo + (1.0 - l) * len;
        if x <= left_hi + tol && (x - left_hi).abs() <= (x - right_lo).abs() {
            bits <<= 1;
        } else if x >= right_lo - tol {
            bits = (bits << 1) | 1;
            lo = right_lo;
        } else {
            return None;
        }
    }
    Some(IntervalAddress { level, index: bits + 1 })
}

/// Distance from `x` to the union of level-`level` intervals of `C`; zero
/// when `x` is inside one of them.
pub fn dist_to_c(params: SpaceParams, x: f64, level: u32) -> f64 {
    if x < 0.0 {
        return -x;
    }
    if x > 1.0 {
        return x - 1.0;
    }
    let l = params.lambda;
    let mut lo = 0.0;
    for i in 1..=level.min(MAX_LEVEL) {
        let len = l.powi(i as i32 - 1);
        let left_hi = lo + l.powi(i as i32);
        let right_lo = lo + (1.0 - l) * len;
        if x <= left_hi {
            continue;
        }
        if x >= right_lo {
            lo = right_lo;
            continue;
        }
        return (x - left_hi).min(right_lo - x);
    }
    0.0
}

/// Distance from `y` to the union of level-`level` pieces of `D`.
pub fn dist_to_d(params: SpaceParams, y: f64, level: u32) -> f64 {
    let s = params.scale_d();
    if y < 0.0 {
        return -y;
    }
    if y > s {
        return y - s;
    }
    let mu = params.mu();
    let mut acc = 0.0;
    for m in 0..level.min(MAX_LEVEL) {
        let (gap_lo, gap_hi) = gap_at(s, mu, m, acc);
        if y <= gap_lo {
            continue;
        }
        if y >= gap_hi {
            acc += (1.0 - mu) * mu.powi(m as i32);
            continue;
        }
        return (y - gap_lo).min(gap_hi - y);
    }
    0.0
}

/// Row of generation at most `max_gen` whose closed interval contains `y`.
pub fn locate_row(params: SpaceParams, y: f64, max_gen: u32, tol: f64) -> Option<RowAddress> {
    let s = params.scale_d();
    if y < -tol || y > s + tol {
        return None;
    }
    let mu = params.mu();
    let mut acc = 0.0;
    let mut bits = 0u64;
    for m in 0..=max_gen.min(MAX_LEVEL) {
        let (gap_lo, gap_hi) = gap_at(s, mu, m, acc);
        if y >= gap_lo - tol && y <= gap_hi + tol {
            return Some(RowAddress { generation: m, index: bits + 1 });
        }
        if y < gap_lo {
            bits <<= 1;
        } else {
            bits = (bits << 1) | 1;
            acc += (1.0 - mu) * mu.powi(m as i32);
        }
    }
    None
}

/// Smallest-generation row whose interval lies inside the open interval
/// `(a, b)`, searching generations up to `max_gen`.
pub fn min_row_between(params: SpaceParams, a: f64, b: f64, max_gen: u32) -> Option<RowAddress> {
    fn visit(
        params: SpaceParams,
        a: f64,
        b: f64,
        m: u32,
        index: u64,
        max_gen: u32,
    ) -> Option<RowAddress> {
        if m > max_gen {
            return None;
        }
        let (lo, hi) = d_piece(params, m, index).ok()?;
        if hi <= a || lo >= b {
            return None;
        }
        let row = RowAddress { generation: m, index };
        let (jl, jh) = removed_interval_of_d(params, row).ok()?;
        if jl > a && jh < b {
            return Some(row);
        }
        let left = visit(params, a, b, m + 1, 2 * index - 1, max_gen);
        let right = visit(params, a, b, m + 1, 2 * index, max_gen);
        match (left, right) {
            (Some(l), Some(r)) => Some(if r.generation < l.generation { r } else { l }),
            (l, r) => l.or(r),
        }
    }
    if b <= a {
        return None;
    }
    visit(params, a, b, 0, 1, max_gen.min(MAX_LEVEL - 1))
}

/// Number of generation-`g` rows whose interval lies inside the open
/// interval `(a, b)`. Returned as `f64` since the count is `2^g`-sized.
pub fn count_rows_between(params: SpaceParams, a: f64, b: f64, g: u32) -> f64 {
    fn visit(params: SpaceParams, a: f64, b: f64, m: u32, index: u64, g: u32) -> f64 {
        let Ok((lo, hi)) = d_piece(params, m, index) else {
            return 0.0;
        };
        if hi <= a || lo >= b {
            return 0.0;
        }
        if lo > a && hi < b {
            return 2f64.powi((g - m) as i32);
        }
        if m == g {
            let (jl, jh) = removed_interval_of_d(params, RowAddress { generation: m, index })
                .unwrap_or((f64::NAN, f64::NAN));
            return if jl > a && jh < b { 1.0 } else { 0.0 };
        }
        visit(params, a, b, m + 1, 2 * index - 1, g) + visit(params, a, b, m + 1, 2 * index, g)
    }
    if b <= a || g > MAX_LEVEL {
        return 0.0;
    }
    visit(params, a, b, 0, 1, g)
}

/// All rows of generation at most `max_gen`, sorted bottom to top.
pub fn rows_sorted(params: SpaceParams, max_gen: u32) -> Vec<(RowAddress, (f64, f64))> {
    let mut rows = Vec::new();
    for g in 0..=max_gen {
        for i in 1..=(1u64 << g) {
            let r = RowAddress { generation: g, index: i };
            rows.push((r, removed_interval_of_d(params, r).expect("valid row")));
        }
    }
    rows.sort_by(|a, b| a.1 .0.total_cmp(&b.1 .0));
    rows
}

/// Smallest ratio `dist(J, J') / min(|J|, |J'|)` over distinct rows of
/// generation at most `max_gen`.
pub fn fitted_rho(params: SpaceParams, max_gen: u32) -> f64 {
    let rows = rows_sorted(params, max_gen);
    let mut best = f64::INFINITY;
    for (i, (_, a)) in rows.iter().enumerate() {
        for (_, b) in &rows[i + 1..] {
            let d = b.0 - a.1;
            let l = (a.1 - a.0).min(b.1 - b.0);
            best = best.min(d / l);
        }
    }
    best
}

/// Largest ratio `dist(y, J) / r` where `J` is the nearest row with
/// `|J| >= r`, over `r = λ^{νg}` (g <= max_gen) and `n_y` evenly spaced `y`.
pub fn fitted_tau(params: SpaceParams, max_gen: u32, n_y: usize) -> f64 {
    let s = params.scale_d();
    let mut worst: f64 = 0.0;
    for g in 0..=max_gen {
        let r = params.side(g);
        let rows = rows_sorted(params, g);
        for k in 0..=n_y {
            let y = s * k as f64 / n_y as f64;
            let pos = rows.partition_point(|(_, (lo, _))| *lo <= y);
            let mut d = f64::INFINITY;
            if pos > 0 {
                let hi = rows[pos - 1].1 .1;
                d = d.min(if y <= hi { 0.0 } else { y - hi });
            }
            if pos < rows.len() {
                d = d.min(rows[pos].1 .0 - y);
            }
            worst = worst.max(d / r);
        }
    }
    worst
}

/// Binary digits of a unit parameter `u` in `[0, 1]`, most significant first.
pub fn binary_digits(u: f64, n: u32) -> Vec<u8> {
    let mut v = u.clamp(0.0, 1.0);
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        v *= 2.0;
        if v >= 1.0 {
            out.push(1);
            v -= 1.0;
        } else {
            out.push(0);
        }
    }
    out
}

/// Level at which `u` in `(0, 1)` is a dyadic split point, if any level
/// `<= depth` has it as an odd multiple of `2^-level`.
pub fn dyadic_split_level(u: f64, depth: u32) -> Option<u32> {
    if u <= 0.0 || u >= 1.0 {
        return None;
    }
    (1..=depth.min(60)).find(|&m| (u * 2f64.powi(m as i32)).fract() == 0.0)
}
