use cantorlab::cantor::{self, IntervalAddress, RowAddress, SpaceParams};
use cantorlab::metric::{self, EdgeKind};
use cantorlab::space::{self, Cube, Point, Rect};
use cantorlab::Error;
use proptest::prelude::*;

fn p14() -> SpaceParams {
    SpaceParams::new(0.25, 2).unwrap()
}

#[test]
fn unit_cube_lattice() {
    let s = space::enumerate_cubes(p14(), 0).unwrap();
    let g = metric::build_graph(&s, 0.125).unwrap();
    assert_eq!(g.vertex_count(), 81);
    // 2 * 8 * 9 axis edges and 2 * 64 diagonals
    assert_eq!(g.edges.len(), 144 + 128);
    assert!(g.is_connected());
}

#[test]
fn edge_lengths_bounded() {
    let s = space::enumerate_cubes(p14(), 2).unwrap();
    let h = 0.01;
    let g = metric::build_graph(&s, h).unwrap();
    for e in &g.edges {
        assert!(e.len > 0.0 && e.len <= h * 2f64.sqrt() * (1.0 + 1e-12), "{e:?}");
        let (a, b) = (g.pos[e.a as usize], g.pos[e.b as usize]);
        assert!((a.dist(&b) - e.len).abs() < 1e-15);
    }
    // lattice steps inside cubes wider than h are at least h/2
    let wide: Vec<Rect> = s.cubes.iter().filter(|c| c.side() >= h).map(|c| c.rect).collect();
    for e in g.edges.iter().filter(|e| e.kind == EdgeKind::Lattice) {
        let (a, b) = (g.pos[e.a as usize], g.pos[e.b as usize]);
        let interior = |p: &Point| wide.iter().any(|r| r.depth_of(p) > 1e-12);
        if interior(&a) && interior(&b) {
            assert!(e.len >= h / 2.0, "{e:?}");
        }
    }
}

#[test]
fn adjacency_is_symmetric() {
    let s = space::enumerate_cubes(p14(), 1).unwrap();
    let g = metric::build_graph(&s, 0.02).unwrap();
    for v in 0..g.vertex_count() as u32 {
        for &(w, e) in g.neighbors(v) {
            assert!(g.neighbors(w).iter().any(|&(u, f)| u == v && f == e));
        }
    }
}

#[test]
fn connected_from_generation_one() {
    for gmax in 1..=2 {
        let s = space::enumerate_cubes(p14(), gmax).unwrap();
        assert!(metric::build_graph(&s, 0.02).unwrap().is_connected());
    }
    let p = SpaceParams::new(0.3, 3).unwrap();
    let s = space::enumerate_cubes(p, 2).unwrap();
    assert!(metric::build_graph(&s, 0.02).unwrap().is_connected());
}

#[test]
fn same_cube_distance_is_euclidean() {
    let s = space::enumerate_cubes(p14(), 1).unwrap();
    let h = 0.01;
    let g = metric::build_graph(&s, h).unwrap();
    let unit = s.cubes[0].rect;
    let p = Point::new(0.13, unit.y_lo + 0.21);
    let q = Point::new(0.77, unit.y_lo + 0.64);
    let d = metric::intrinsic_distance(&g, p, q).unwrap();
    let e = p.dist(&q);
    assert!(d >= e - 2.0 * h && d <= e + 2.0 * h * (2f64.sqrt() - 1.0) + 2.0 * h + 0.083 * e);
    assert_eq!(metric::intrinsic_distance(&g, p, p).unwrap(), 0.0);
}

#[test]
fn row_detour_exceeds_euclidean() {
    let p = p14();
    let s = space::enumerate_cubes(p, 1).unwrap();
    let g = metric::build_graph(&s, 0.004).unwrap();
    let row = RowAddress::new(1, 1).unwrap();
    let a = Cube::new(p, row, IntervalAddress::new(2, 2).unwrap()).unwrap();
    let b = Cube::new(p, row, IntervalAddress::new(2, 3).unwrap()).unwrap();
    let (pa, pb) = (a.rect.center(), b.rect.center());
    let d = metric::intrinsic_distance(&g, pa, pb).unwrap();
    // the geodesic must touch the unit cube: reflect pb across its bottom edge
    let j0 = cantor::removed_interval_of_d(p, RowAddress::new(0, 1).unwrap()).unwrap();
    let bound = pa.dist(&pb).hypot(2.0 * (j0.0 - pa.y));
    assert!(d >= bound - 2.0 * g.h && d > pa.dist(&pb) + 0.01, "{d} vs {bound}");
}

#[test]
fn snapping_rejects_points_off_the_space() {
    let s = space::enumerate_cubes(p14(), 1).unwrap();
    let g = metric::build_graph(&s, 0.01).unwrap();
    let j1 = cantor::removed_interval_of_d(p14(), RowAddress::new(1, 1).unwrap()).unwrap();
    let err = g.snap(&Point::new(0.5, 0.5 * (j1.0 + j1.1))).unwrap_err();
    assert!(matches!(err, Error::Classification(_)));
}

#[test]
fn refinement_does_not_lengthen() {
    let s = space::enumerate_cubes(p14(), 1).unwrap();
    let (a, b) = (Point::new(0.03, 0.03), Point::new(0.97, 1.1));
    let coarse = metric::intrinsic_distance(&metric::build_graph(&s, 0.02).unwrap(), a, b).unwrap();
    let fine = metric::intrinsic_distance(&metric::build_graph(&s, 0.01).unwrap(), a, b).unwrap();
    assert!(fine <= coarse + 2.0 * 0.02);
}

#[test]
fn quasiconvexity_report() {
    let s = space::enumerate_cubes(p14(), 1).unwrap();
    let g = metric::build_graph(&s, 0.01).unwrap();
    let rep = metric::quasiconvexity_ratio(&s, &g, 200, 3).unwrap();
    assert!(rep.pairs.iter().all(|r| r.ratio >= 1.0 - 1e-12));
    assert!(rep.max_ratio < 10.0);
    let again = metric::quasiconvexity_ratio(&s, &g, 200, 3).unwrap();
    assert_eq!(rep.max_ratio, again.max_ratio);
    // one cube only: bounded by the octagonal-metric factor plus snapping
    let s0 = space::enumerate_cubes(p14(), 0).unwrap();
    let g0 = metric::build_graph(&s0, 0.01).unwrap();
    let rep0 = metric::quasiconvexity_ratio(&s0, &g0, 200, 3).unwrap();
    assert!(rep0.max_ratio <= 1.09, "{}", rep0.max_ratio);
}

#[test]
fn csv_exports() {
    let s = space::enumerate_cubes(p14(), 0).unwrap();
    let g = metric::build_graph(&s, 0.5).unwrap();
    let v = g.vertices_csv();
    assert!(v.starts_with("id,x,y\n"));
    assert_eq!(v.lines().count(), 1 + 9);
    assert_eq!(g.edges_csv().lines().count(), 1 + g.edges.len());
}

#[test]
fn vertex_budget() {
    let s = space::enumerate_cubes(p14(), 1).unwrap();
    let err = metric::build_graph_with_budget(&s, 0.001, 1000).unwrap_err();
    assert!(matches!(err, Error::Resource { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn triangle_inequality(i in 0usize..10_000, j in 0usize..10_000, k in 0usize..10_000) {
        let s = space::enumerate_cubes(p14(), 1).unwrap();
        let g = metric::build_graph(&s, 0.03).unwrap();
        let n = g.vertex_count();
        let (a, b, c) = ((i % n) as u32, (j % n) as u32, (k % n) as u32);
        let d = |x: u32, y: u32| if x == y { 0.0 } else { g.vertex_distance(x, y).unwrap() };
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
        prop_assert!((d(a, b) - d(b, a)).abs() < 1e-12);
    }
}
