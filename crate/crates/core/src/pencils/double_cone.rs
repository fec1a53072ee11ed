use serde::Serialize;

use super::paths::{check_regular, cone_chain, cone_down_points, gamma_i_points};
use super::{lipschitz_constant, Assembler, PolylinePath};
use crate::cantor::{self, RowAddress, SpaceParams};
use crate::space::{Cube, Point};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QmCase {
    /// The larger cube is on the smaller one's chain of first large cubes.
    A,
    /// Nested columns with a larger row in between.
    B,
    /// Disjoint columns, `J_M` between the two rows.
    C1,
    /// Disjoint columns, both rows on the same side of `J_M`.
    C2,
}

fn chain_rows(row: RowAddress) -> Vec<RowAddress> {
    let mut out = Vec::new();
    let mut r = row;
    while let Some(n) = r.first_larger_below() {
        out.push(n);
        r = n;
    }
    let mut r = row;
    while let Some(n) = r.first_larger_above() {
        out.push(n);
        r = n;
    }
    out
}

/// The meeting cube `Q_M` of a double cone between `qx` and `qy`.
///
/// Case (c) candidates are rows on both chains of first large cubes whose
/// cube over the common ancestor column contains both columns; ties go to
/// the smallest cube, then the smallest `dist(Q_x,Q_M) + dist(Q_y,Q_M)`,
/// then the lowest.
pub fn find_qm(params: SpaceParams, qx: &Cube, qy: &Cube) -> Result<(QmCase, Option<Cube>)> {
    if qx == qy {
        return Err(Error::Precondition("Q_x and Q_y are the same cube".into()));
    }
    let nu = params.nu;
    let (small, big) = if qx.generation() >= qy.generation() { (qx, qy) } else { (qy, qx) };
    if big.col.contains(&small.col) {
        let (lo, hi) = if small.rect.y_hi <= big.rect.y_lo {
            (small.rect.y_hi, big.rect.y_lo)
        } else {
            (big.rect.y_hi, small.rect.y_lo)
        };
        return match cantor::min_row_between(params, lo, hi, big.generation()) {
            Some(r) => {
                let qm = Cube::new(params, r, big.col.ancestor(nu * r.generation))?;
                Ok((QmCase::B, Some(qm)))
            }
            None => Ok((QmCase::A, None)),
        };
    }
    let top = small.col.level.min(big.col.level);
    let (a, b) = (small.col.ancestor(top), big.col.ancestor(top));
    let lca = (0..=top).rev().find(|&l| a.ancestor(l) == b.ancestor(l)).unwrap_or(0);
    let gmax = lca / nu;
    let ys = chain_rows(qy.row);
    let mut best: Option<(Cube, f64)> = None;
    for r in chain_rows(qx.row) {
        if r.generation > gmax || !ys.contains(&r) {
            continue;
        }
        let q = Cube::new(params, r, qx.col.ancestor(nu * r.generation))?;
        let d = qx.rect.dist(&q.rect) + qy.rect.dist(&q.rect);
        let better = match &best {
            None => true,
            Some((b, bd)) => {
                (q.generation(), -d, -q.rect.y_lo) > (b.generation(), -bd, -b.rect.y_lo)
            }
        };
        if better {
            best = Some((q, d));
        }
    }
    let (qm, _) = best.ok_or_else(|| Error::Classification("no common cube on both chains".into()))?;
    let (lo, hi) = if qx.rect.y_lo < qy.rect.y_lo { (qx, qy) } else { (qy, qx) };
    let between = qm.rect.y_lo >= lo.rect.y_hi && qm.rect.y_hi <= hi.rect.y_lo;
    Ok((if between { QmCase::C1 } else { QmCase::C2 }, Some(qm)))
}

struct Approach {
    path: PolylinePath,
    /// Landing segment inside `Q_M`: `(lo, len, y)`.
    seg: (f64, f64, f64),
}

/// From `x ∈ Q_x` through `Γ(I_x)` and the cone to the inverted copy of
/// `Γ(I_{m-1})` inside `Q_M`.
fn approach(params: SpaceParams, x: Point, qx: &Cube, qm: &Cube, u: f64, depth: u32) -> Result<Approach> {
    let s = params.scale_d();
    let down = qm.rect.y_hi <= qx.rect.y_lo;
    let (x, qx, qm) = if down { (x, *qx, *qm) } else { (Point::new(x.x, s - x.y), qx.reflect(params), qm.reflect(params)) };
    let (chain, _) = cone_chain(params, &qx, &qm)?;
    let ls = params.lambda_star();
    let r = qx.rect;
    let w = r.width();
    let mut a = Assembler::new();
    let start = Point::new(r.x_lo + u * w, r.y_lo + ls * w);
    let dx = (r.x_lo - x.x).max(x.x - r.x_hi).max(0.0);
    if dx.hypot(x.y - start.y) < w / 4.0 {
        let aux = Point::new(r.x_lo + w / 4.0 + u * w / 2.0, start.y + w / 2.0);
        a.add("delta_x", &[x, aux, start]);
    } else {
        a.add("delta_x", &[x, start]);
    }
    a.add("gamma_i", &gamma_i_points(params, r.x_lo, w, u, r.y_lo, false, depth));
    cone_down_points(params, &chain, u, depth, &mut a);
    let prev = chain[chain.len() - 2].rect;
    let mut inv = gamma_i_points(params, prev.x_lo, prev.width(), u, qm.rect.y_hi, true, depth);
    inv.reverse();
    a.add("gamma_i_inverted", &inv);
    let seg_y = qm.rect.y_hi - ls * prev.width();
    let path = a.finish(lipschitz_constant(params), depth);
    Ok(if down {
        Approach { path, seg: (prev.x_lo, prev.width(), seg_y) }
    } else {
        Approach { path: path.reflected(s), seg: (prev.x_lo, prev.width(), s - seg_y) }
    })
}

fn same_cube(params: SpaceParams, q: &Cube, x: Point, y: Point, u: f64, depth: u32) -> PolylinePath {
    let r = q.rect;
    let m = x.lerp(&y, 0.5);
    let d = x.dist(&y);
    let (nx, ny) = if d > 0.0 { (-(y.y - x.y) / d, (y.x - x.x) / d) } else { (1.0, 0.0) };
    let mut half = f64::INFINITY;
    if nx != 0.0 {
        half = half.min((r.x_hi - m.x).min(m.x - r.x_lo) / nx.abs());
    }
    if ny != 0.0 {
        half = half.min((r.y_hi - m.y).min(m.y - r.y_lo) / ny.abs());
    }
    let l = d.min(2.0 * half.max(0.0));
    let k = Point::new(m.x + (u - 0.5) * l * nx, m.y + (u - 0.5) * l * ny);
    let mut a = Assembler::new();
    a.add("delta_x", &[x, k]);
    a.add("delta_y", &[k, y]);
    let mut p = a.finish(lipschitz_constant(params), depth);
    p.single_cube = true;
    p
}

/// Double cone `Γ_{x,y}` indexed by `u ∈ [0, 1]`, relative to every
/// column it passes: `x` to `I_x`, `Γ(I_x)`, the cone from `Q_x` to `Q_M`,
/// a bridge across `Q_M`, and the same stages back to `y` in reverse.
pub fn double_cone(params: SpaceParams, qx: &Cube, x: Point, qy: &Cube, y: Point, u: f64, depth: u32) -> Result<PolylinePath> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("u = {u} outside [0, 1]")));
    }
    let tol = 1e-12;
    if !qx.rect.contains(&x, tol) || !qy.rect.contains(&y, tol) {
        return Err(Error::Precondition("endpoints must lie in their cubes".into()));
    }
    check_regular(u, depth, 0.0, 1.0)?;
    if qx == qy {
        return Ok(same_cube(params, qx, x, y, u, depth));
    }
    if qx.side() > qy.side() {
        return double_cone(params, qy, y, qx, x, u, depth).map(|p| p.reversed());
    }
    let (case, qm) = find_qm(params, qx, qy)?;
    let mut a = Assembler::new();
    match (case, qm) {
        (QmCase::A, _) => {
            let ax = approach(params, x, qx, qy, u, depth)?;
            a.append(&ax.path);
            a.add("delta_y", &[ax.path.end(), y]);
        }
        (_, Some(qm)) => {
            let ax = approach(params, x, qx, &qm, u, depth)?;
            let ay = approach(params, y, qy, &qm, u, depth)?;
            let (lx, wx, yx) = ax.seg;
            let (ly, wy, yy) = ay.seg;
            let gap = (lx.max(ly) - (lx + wx).min(ly + wy)).max(0.0);
            let r = qm.rect;
            let l = gap.hypot(yx - yy).min(r.width() / 2.0);
            let (cx, cy) = (lx + wx / 2.0, ly + wy / 2.0);
            let c = if wx >= wy { 0.75 * cx + 0.25 * cy } else { 0.75 * cy + 0.25 * cx };
            let c = c.clamp(r.x_lo + l / 2.0, r.x_hi - l / 2.0);
            let k = Point::new(c - l / 2.0 + u * l, (r.y_lo + r.y_hi) / 2.0);
            a.append(&ax.path);
            a.add("bridge", &[ax.path.end(), k, ay.path.end()]);
            a.append(&ay.path.reversed());
        }
        (_, None) => unreachable!("cases b and c always name Q_M"),
    }
    Ok(a.finish(lipschitz_constant(params), depth))
}
