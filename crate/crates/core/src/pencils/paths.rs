use super::{lipschitz_constant, Assembler, PolylinePath};
use crate::cantor::{self, IntervalAddress, RowAddress, SpaceParams};
use crate::space::{self, Cube, Point};
use crate::{Error, Result};

/// Relative position of `t` in `[lo, lo + len]`.
pub(crate) fn rel(t: f64, lo: f64, len: f64) -> Result<f64> {
    let u = (t - lo) / len;
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return Err(Error::Domain(format!("t = {t} outside [{lo}, {}]", lo + len)));
    }
    Ok(u.clamp(0.0, 1.0))
}

pub(crate) fn check_regular(u: f64, depth: u32, lo: f64, len: f64) -> Result<()> {
    match cantor::dyadic_split_level(u, depth) {
        Some(level) => Err(Error::ExceptionalParameter { t: lo + u * len, level }),
        None => Ok(()),
    }
}

/// Cantor point of `[lo, lo + len]` whose address digits are those of `u`.
pub fn landing_x(params: SpaceParams, lo: f64, len: f64, u: f64) -> f64 {
    let lam = params.lambda;
    let mut v = u;
    let mut x = 0.0;
    let mut w = 1.0 - lam;
    for _ in 0..60 {
        v *= 2.0;
        if v >= 1.0 {
            x += w;
            v -= 1.0;
        }
        w *= lam;
    }
    lo + len * x
}

/// Descent of `Γ(I)` for `I = [lo, lo + len]` as `(x, height above base)`,
/// from height `λ*·len` at `x = lo + u·len` down to the landing point.
pub(crate) fn descent(params: SpaceParams, lo: f64, len: f64, u: f64, depth: u32) -> Vec<(f64, f64)> {
    let lam = params.lambda;
    let mut out = Vec::with_capacity(depth as usize + 2);
    let mut h = params.lambda_star() * len;
    out.push((lo + u * len, h));
    let mut v = u;
    let mut c = 0.0;
    let mut w = 1.0 - lam;
    let mut scale = 1.0;
    for _ in 0..depth {
        v *= 2.0;
        if v >= 1.0 && u < 1.0 {
            c += w;
            v -= 1.0;
        } else if u >= 1.0 {
            c += w;
            v = 1.0;
        }
        w *= lam;
        scale *= lam;
        h -= scale * len / 2.0;
        out.push((lo + len * (c + scale * v), h.max(0.0)));
    }
    out.push((landing_x(params, lo, len, u), 0.0));
    out
}

/// A copy of `Γ(I)` with its landing line at `base`. Upright copies rise
/// above the base, inverted copies hang below it; either way the vertices
/// run from the parameter end to the landing point.
pub(crate) fn gamma_i_points(params: SpaceParams, lo: f64, len: f64, u: f64, base: f64, inverted: bool, depth: u32) -> Vec<Point> {
    descent(params, lo, len, u, depth)
        .into_iter()
        .map(|(x, h)| Point::new(x, if inverted { base - h } else { base + h }))
        .collect()
}

/// `Γ(I)` standing on `y = 0`, from `(t, λ*|I|)` down to its landing point.
pub fn gamma_i(params: SpaceParams, interval: IntervalAddress, t: f64, depth: u32) -> Result<PolylinePath> {
    gamma_i_at(params, interval, t, 0.0, false, depth)
}

pub fn gamma_i_at(params: SpaceParams, interval: IntervalAddress, t: f64, base: f64, inverted: bool, depth: u32) -> Result<PolylinePath> {
    let (lo, hi) = cantor::surviving_interval(params, interval)?;
    let len = hi - lo;
    let u = rel(t, lo, len)?;
    check_regular(u, depth, lo, len)?;
    let mut a = Assembler::new();
    a.add("gamma_i", &gamma_i_points(params, lo, len, u, base, inverted, depth));
    Ok(a.finish(lipschitz_constant(params), depth))
}

/// Bottom-to-top crossing of a cube through parameter `u` of its column.
pub(crate) fn gamma_q_points(params: SpaceParams, q: &Cube, u: f64, depth: u32) -> Vec<Point> {
    let r = q.rect;
    let len = r.width();
    let mut pts: Vec<Point> = gamma_i_points(params, r.x_lo, len, u, r.y_lo, false, depth);
    pts.reverse();
    pts.extend(gamma_i_points(params, r.x_lo, len, u, r.y_hi, true, depth));
    pts
}

pub fn gamma_q(params: SpaceParams, q: &Cube, t: f64, depth: u32) -> Result<PolylinePath> {
    let r = q.rect;
    let len = r.width();
    let u = rel(t, r.x_lo, len)?;
    check_regular(u, depth, r.x_lo, len)?;
    let mut bottom = gamma_i_points(params, r.x_lo, len, u, r.y_lo, false, depth);
    bottom.reverse();
    let top = gamma_i_points(params, r.x_lo, len, u, r.y_hi, true, depth);
    let mut a = Assembler::new();
    a.add("gamma_i", &bottom);
    a.add("vertical", &[bottom[bottom.len() - 1], top[0]]);
    a.add("gamma_i_inverted", &top);
    Ok(a.finish(lipschitz_constant(params), depth))
}

/// Rows of generation `g` whose interval lies in `[a, b]`, bottom to top.
pub(crate) fn rows_in(params: SpaceParams, g: u32, a: f64, b: f64) -> Vec<RowAddress> {
    let n = 1u64 << g;
    let row = |i: u64| cantor::removed_interval_of_d(params, RowAddress { generation: g, index: i }).expect("valid row");
    // first index with lo >= a, first index with hi > b
    let (mut l, mut h) = (1u64, n + 1);
    while l < h {
        let m = l + (h - l) / 2;
        if row(m).0 >= a { h = m } else { l = m + 1 }
    }
    let first = l;
    let (mut l, mut h) = (first, n + 1);
    while l < h {
        let m = l + (h - l) / 2;
        if row(m).1 > b { h = m } else { l = m + 1 }
    }
    (first..l).map(|i| RowAddress { generation: g, index: i }).collect()
}

/// Vertices of `Γ(Q₁,Q₂)` for `Q₂` below `Q₁`, top to bottom.
fn q1q2_down_points(params: SpaceParams, q1: &Cube, q2: &Cube, u: f64, depth: u32) -> Vec<Point> {
    let nu = params.nu;
    let (lo, len) = (q1.rect.x_lo, q1.rect.width());
    let xt = landing_x(params, lo, len, u);
    let g1 = q1.generation();
    let extra = depth.div_ceil(nu).max(1);
    let (bottom, top) = (q2.rect.y_hi, q1.rect.y_lo);
    let mut rows: Vec<(RowAddress, (f64, f64))> = Vec::new();
    for g in (g1 + 1)..=(g1 + extra).min(cantor::MAX_LEVEL / nu) {
        for r in rows_in(params, g, bottom, top) {
            rows.push((r, cantor::removed_interval_of_d(params, r).expect("valid row")));
        }
    }
    rows.sort_by(|a, b| b.1 .0.total_cmp(&a.1 .0));
    let mut pts = vec![Point::new(xt, top)];
    for (row, (_, _)) in rows {
        let r = nu * (row.generation - g1);
        let mut v = u;
        let mut bits = 0u64;
        for _ in 0..r {
            v *= 2.0;
            bits <<= 1;
            if v >= 1.0 && u < 1.0 {
                v -= 1.0;
                bits |= 1;
            } else if u >= 1.0 {
                v = 1.0;
                bits |= 1;
            }
        }
        let col = IntervalAddress { level: nu * row.generation, index: ((q1.col.index - 1) << r) + bits + 1 };
        let cube = Cube::new(params, row, col).expect("descendant column");
        let mut cross = gamma_q_points(params, &cube, v, depth.saturating_sub(r).max(1));
        cross.reverse();
        pts.extend(cross);
    }
    pts.push(Point::new(xt, bottom));
    pts
}

fn relation(params: SpaceParams, q1: &Cube, q2: &Cube) -> Option<bool> {
    if space::first_large_cube_below(params, q1).ok().as_ref() == Some(q2) {
        Some(true)
    } else if space::first_large_cube_above(params, q1).ok().as_ref() == Some(q2) {
        Some(false)
    } else {
        None
    }
}

/// `Γ(Q₁,Q₂)`: from `Q₁`'s edge facing `Q₂` to `Q₂`'s edge facing `Q₁`,
/// crossing every row in between through the same Cantor abscissa.
pub fn gamma_q1q2(params: SpaceParams, q1: &Cube, q2: &Cube, t: f64, depth: u32) -> Result<PolylinePath> {
    let down = relation(params, q1, q2).ok_or_else(|| {
        Error::Precondition(format!("{:?} is not the first large cube above or below {:?}", q2.row, q1.row))
    })?;
    let (lo, len) = (q1.rect.x_lo, q1.rect.width());
    let u = rel(t, lo, len)?;
    check_regular(u, depth, lo, len)?;
    let s = params.scale_d();
    let pts = if down {
        q1q2_down_points(params, q1, q2, u, depth)
    } else {
        let (r1, r2) = (q1.reflect(params), q2.reflect(params));
        q1q2_down_points(params, &r1, &r2, u, depth)
            .into_iter()
            .map(|p| Point::new(p.x, s - p.y))
            .collect()
    };
    let mut a = Assembler::new();
    a.add("gamma_q1q2", &pts);
    Ok(a.finish(lipschitz_constant(params), depth))
}

/// Chain `Q₀, Q₁, …, Q_M` of iterated first large cubes, and whether it
/// runs downwards.
pub fn cone_chain(params: SpaceParams, q0: &Cube, qm: &Cube) -> Result<(Vec<Cube>, bool)> {
    if q0 == qm {
        return Err(Error::Classification("Q_0 and Q_M coincide".into()));
    }
    let down = qm.rect.y_hi <= q0.rect.y_lo;
    if !down && qm.rect.y_lo < q0.rect.y_hi {
        return Err(Error::Classification("Q_M is on the same row as Q_0".into()));
    }
    if !qm.col.contains(&q0.col) {
        return Err(Error::Classification("column of Q_M does not contain the column of Q_0".into()));
    }
    let mut chain = vec![*q0];
    loop {
        let cur = chain.last().expect("non-empty");
        let next = if down {
            space::first_large_cube_below(params, cur)
        } else {
            space::first_large_cube_above(params, cur)
        }
        .map_err(|_| Error::Classification("chain of first large cubes ends before Q_M".into()))?;
        if next == *qm {
            chain.push(next);
            return Ok((chain, down));
        }
        if next.generation() <= qm.generation() {
            return Err(Error::Classification(
                "Q_M is not reached by iterating first large cubes (a row between is at least as large)".into(),
            ));
        }
        chain.push(next);
    }
}

/// Cone vertices for a downward chain, `u` relative to every column.
pub(crate) fn cone_down_points(params: SpaceParams, chain: &[Cube], u: f64, depth: u32, a: &mut Assembler) {
    let ls = params.lambda_star();
    for i in 0..chain.len() - 1 {
        let qi = &chain[i];
        if i > 0 {
            let prev = &chain[i - 1].rect;
            let r = qi.rect;
            let inv = gamma_i_points(params, prev.x_lo, prev.width(), u, r.y_hi, true, depth);
            let inv: Vec<Point> = inv.into_iter().rev().collect();
            let from = *inv.last().expect("non-empty");
            a.add("gamma_i_inverted", &inv);
            let down_i = gamma_i_points(params, r.x_lo, r.width(), u, r.y_lo, false, depth);
            let to = Point::new(r.x_lo + u * r.width(), r.y_lo + ls * r.width());
            a.add("trapezoid", &[from, to]);
            a.add("gamma_i", &down_i);
        }
        a.add("gamma_q1q2", &q1q2_down_points(params, qi, &chain[i + 1], u, depth));
    }
}

/// Cone `Γ(Q₀;Q_M)`: `Γ(Q₀,Q₁)`, then inside each intermediate cube an
/// inverted `Γ(I_{i-1})`, a straight bridge and a `Γ(I_i)`, then
/// `Γ(Q_i,Q_{i+1})`, ending on the edge of `Q_M` facing `Q₀`.
pub fn cone(params: SpaceParams, q0: &Cube, qm: &Cube, t: f64, depth: u32) -> Result<PolylinePath> {
    let (chain, down) = cone_chain(params, q0, qm)?;
    let (lo, len) = (q0.rect.x_lo, q0.rect.width());
    let u = rel(t, lo, len)?;
    check_regular(u, depth, lo, len)?;
    let mut a = Assembler::new();
    if down {
        cone_down_points(params, &chain, u, depth, &mut a);
        Ok(a.finish(lipschitz_constant(params), depth))
    } else {
        let s = params.scale_d();
        let chain: Vec<Cube> = chain.iter().map(|c| c.reflect(params)).collect();
        cone_down_points(params, &chain, u, depth, &mut a);
        Ok(a.finish(lipschitz_constant(params), depth).reflected(s))
    }
}
