use cantorlab::analysis::modulus;
use cantorlab::cantor::{self, RowAddress, SpaceParams};
use cantorlab::metric;
use cantorlab::pencils;
use cantorlab::qcmap;
use cantorlab::space::{self, Point};
use cantorlab::Error;
use proptest::prelude::*;

fn p14() -> SpaceParams {
    SpaceParams::new(0.25, 2).unwrap()
}

#[test]
fn unit_cube_moves_by_one_half() {
    let p = p14();
    let s = space::enumerate_cubes(p, 1).unwrap();
    let r = s.cubes[0].rect;
    for &(x, t) in &[(0.0, 0.0), (0.3, 0.5), (1.0, 1.0)] {
        let q = Point::new(x, r.y_lo + t * r.height());
        let e = qcmap::evaluate(&s, q, 40).unwrap();
        assert!(e.in_cube);
        assert!((e.image.x - (x + 0.5)).abs() < 1e-12 && e.image.y == q.y);
    }
    assert!(matches!(qcmap::apply_f(p, Point::new(1.2, r.y_lo), 20), Err(Error::Domain(_))));
}

#[test]
fn cubes_move_rigidly_and_stay_apart() {
    let p = p14();
    let s = space::enumerate_cubes(p, 2).unwrap();
    assert!(qcmap::same_cube_isometry(&s, 500, 3, 40).unwrap() < 1e-9);
    let moved: Vec<_> = s
        .cubes
        .iter()
        .map(|c| {
            let a = qcmap::apply_f(p, Point::new(c.rect.x_lo, c.rect.y_lo), 40).unwrap();
            let b = qcmap::apply_f(p, Point::new(c.rect.x_hi, c.rect.y_hi), 40).unwrap();
            assert!((b.x - a.x - c.side()).abs() < 1e-12);
            (a, b)
        })
        .collect();
    for (i, (a, b)) in moved.iter().enumerate() {
        for (c, d) in &moved[i + 1..] {
            let sep = b.x <= c.x + 1e-12 || d.x <= a.x + 1e-12 || b.y < c.y || d.y < a.y;
            assert!(sep);
        }
    }
}

#[test]
fn image_graph_keeps_topology() {
    let s = space::enumerate_cubes(p14(), 1).unwrap();
    let g = metric::build_graph(&s, 0.02).unwrap();
    let f = qcmap::image_graph(&g, s.params, 40);
    assert_eq!(f.vertex_count(), g.vertex_count());
    assert_eq!(f.edges.len(), g.edges.len());
    for (a, b) in g.edges.iter().zip(&f.edges) {
        if a.kind == metric::EdgeKind::Lattice {
            assert!((a.len - b.len).abs() < 1e-12);
        }
    }
}

#[test]
fn dilatation_close_to_one() {
    let s = space::enumerate_cubes(p14(), 1).unwrap();
    let h = 0.005;
    let g = metric::build_graph(&s, h).unwrap();
    let f = qcmap::image_graph(&g, s.params, 40);
    for (x, delta) in qcmap::interior_points(&s, 6, 8.0 * h, 12) {
        let radii = qcmap::ladder_radii(delta, h);
        if radii.len() < 3 {
            continue;
        }
        let rep = qcmap::dilatation(&g, &f, x, &radii).unwrap();
        for r in &rep.rungs {
            assert!((r.ratio - 1.0).abs() <= 2.0 * h / r.r, "{r:?}");
        }
        for w in rep.rungs.windows(2) {
            assert!(w[0].r > w[1].r && w[0].big >= w[1].big);
        }
    }
    let (x, _) = qcmap::interior_points(&s, 1, 8.0 * h, 12)[0];
    assert!(matches!(qcmap::dilatation(&g, &f, x, &[0.1, 0.05]), Err(Error::Precondition(_))));
    assert!(matches!(qcmap::dilatation(&g, &f, x, &[0.1, 0.05, h]), Err(Error::Resolution(_))));
}

#[test]
fn interior_points_have_depth() {
    let s = space::enumerate_cubes(p14(), 2).unwrap();
    for (x, delta) in qcmap::interior_points(&s, 50, 0.01, 4) {
        let best = s.cubes.iter().map(|c| c.rect.depth_of(&x)).fold(0.0, f64::max);
        assert!((best - delta).abs() < 1e-15 && delta >= 0.01);
    }
    let r = qcmap::ladder_radii(0.1, 0.01);
    assert_eq!(r, vec![0.1, 0.05, 0.025]);
}

#[test]
fn singular_part_of_a_crossing() {
    let p = p14();
    let (q1, q2) = modulus::scaling_configuration(p, 1).unwrap();
    let t = q1.rect.x_lo + 0.3 * q1.side();
    let levels = qcmap::ac_diagnostic(p, &q1, &q2, t, 4, 6).unwrap();
    let jump = cantor::vitali(p, q1.rect.center().y, 50).unwrap() - cantor::vitali(p, q2.rect.center().y, 50).unwrap();
    for l in &levels {
        assert!(l.singular >= 0.0);
        assert!((l.singular - jump.abs()).abs() < 1e-3, "{l:?} vs {jump}");
    }
    for w in levels.windows(2) {
        assert!(w[1].total_variation >= w[0].total_variation - 1e-12);
        assert!((w[1].singular - w[0].singular).abs() < 1e-3);
    }
    let path = pencils::gamma_q1q2(p, &q1, &q2, t, 6).unwrap();
    let a = qcmap::ac_diagnostic_path(p, &path, 8, 2, 40).unwrap();
    let b = qcmap::ac_diagnostic_path(p, &path.reversed(), 8, 2, 40).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.singular - y.singular).abs() < 1e-12);
    }
}

#[test]
fn no_singular_part_inside_a_cube() {
    let p = p14();
    let q = space::enumerate_cubes(p, 0).unwrap().cubes[0];
    let path = pencils::gamma_q(p, &q, 0.37, 10).unwrap();
    for l in qcmap::ac_diagnostic_path(p, &path, 8, 3, 40).unwrap() {
        assert!(l.singular <= 1e-12, "{l:?}");
    }
}

#[test]
fn box_dimension_of_the_singular_set() {
    let p = p14();
    let a = qcmap::box_dimension_e(p, 1, 3).unwrap();
    let b = qcmap::box_dimension_e(p, 4, 9).unwrap();
    assert!((a.dimension - 0.75).abs() < 1e-12);
    assert!((b.dimension - a.dimension).abs() < 1e-12);
    assert!((p.dim_c() + p.dim_d() - 0.75).abs() < 1e-15);
    assert_eq!(a.counts[0], (1, 1.0 / 16.0, 8.0));
    assert!(qcmap::box_dimension_e(p, 3, 3).is_err());
}

#[test]
fn vitali_image_rows() {
    let p = p14();
    let at = |g, i| {
        let (lo, hi) = cantor::removed_interval_of_d(p, RowAddress::new(g, i).unwrap()).unwrap();
        cantor::vitali(p, 0.5 * (lo + hi), 50).unwrap()
    };
    assert!((at(0, 1) - 0.5).abs() < 1e-12);
    assert!((at(1, 1) - 0.25).abs() < 1e-12);
    assert!((at(1, 2) - 0.75).abs() < 1e-12);
}

#[test]
fn solver_examples() {
    let c = qcmap::solve_params(1.5, f64::INFINITY, 10).unwrap();
    assert_eq!(c.nu, 2);
    assert!((c.lambda - 0.125).abs() < 1e-15);
    assert!(c.dim_sum_residual.abs() < 1e-12);
    let c = qcmap::solve_params(1.5, 0.2, 100).unwrap();
    assert_eq!(c.nu, 4);
    assert!((c.p0 - 5.0 / 3.0).abs() < 1e-12);
    assert!(matches!(qcmap::solve_params(1.5, 1e-6, 50), Err(Error::Capacity(_))));
    assert!(matches!(qcmap::solve_params(2.0, 0.1, 50), Err(Error::Domain(_))));
    assert!(matches!(qcmap::solve_params(1.5, 0.0, 50), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn solver_certificates(p in 1.05f64..1.95, eps in 0.01f64..0.5) {
        let c = qcmap::solve_params(p, eps, 100_000).unwrap();
        let params = SpaceParams::new(c.lambda, c.nu).unwrap();
        let t = cantorlab::analysis::p0(params);
        prop_assert!(t > p && t < p + eps);
        prop_assert!((params.dim_c() + params.dim_d() - (2.0 - p)).abs() < 1e-9);
        if c.nu > 2 {
            let prev = (-(1.0 + 1.0 / (c.nu - 1) as f64) / (2.0 - p)).exp2();
            let t_prev = cantorlab::analysis::p0(SpaceParams::new(prev, c.nu - 1).unwrap());
            prop_assert!(t_prev >= p + eps);
        }
    }

    #[test]
    fn vitali_is_monotone(a in 0.0f64..1.2, b in 0.0f64..1.2) {
        let p = p14();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (lo, hi) = (lo * p.scale_d(), hi * p.scale_d());
        let (y0, y1) = (lo.min(p.scale_d()), hi.min(p.scale_d()));
        prop_assert!(cantor::vitali(p, y0, 40).unwrap() <= cantor::vitali(p, y1, 40).unwrap() + 1e-15);
    }
}
