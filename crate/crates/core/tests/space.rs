use cantorlab::cantor::{self, IntervalAddress, RowAddress, SpaceParams};
use cantorlab::space::{self, Classification, Cube, Point, SpaceApprox};
use cantorlab::Error;
use proptest::prelude::*;

fn p14() -> SpaceParams {
    SpaceParams::new(0.25, 2).unwrap()
}

#[test]
fn single_cube_at_generation_zero() {
    let p = p14();
    let s = space::enumerate_cubes(p, 0).unwrap();
    assert_eq!(s.cubes.len(), 1);
    let r = s.cubes[0].rect;
    let j0 = cantor::removed_interval_of_d(p, RowAddress::new(0, 1).unwrap()).unwrap();
    assert_eq!((r.x_lo, r.x_hi, r.y_lo, r.y_hi), (0.0, 1.0, j0.0, j0.1));
}

#[test]
fn cube_counts() {
    for &(lambda, nu) in &[(0.25, 2), (0.1, 3), (0.4, 2)] {
        let p = SpaceParams::new(lambda, nu).unwrap();
        for g in 0..=3u32 {
            if space::cube_count(p, g) > 200_000 {
                continue;
            }
            let s = space::enumerate_cubes(p, g).unwrap();
            let want: u64 = (0..=g).map(|k| (1u64 << k) << (nu * k)).sum();
            assert_eq!(s.cubes.len() as u64, want);
            assert_eq!(space::cube_count(p, g), want as u128);
        }
    }
    assert_eq!(space::enumerate_cubes(p14(), 2).unwrap().cubes.len(), 73);
}

#[test]
fn resource_cap() {
    let err = space::enumerate_cubes_with_budget(p14(), 3, 100).unwrap_err();
    assert!(matches!(err, Error::Resource { count: 585, cap: 100, .. }));
}

#[test]
fn cubes_are_squares_with_matched_levels() {
    let p = p14();
    let s = space::enumerate_cubes(p, 2).unwrap();
    for c in &s.cubes {
        assert_eq!(c.col.level, p.nu * c.row.generation);
        assert!((c.rect.width() - p.side(c.generation())).abs() < 1e-15);
        assert!((c.rect.height() - p.side(c.generation())).abs() < 1e-15);
    }
    for c in s.cubes.iter().filter(|c| c.generation() == 1) {
        assert!((c.side() - 1.0 / 16.0).abs() < 1e-15);
    }
}

#[test]
fn cubes_disjoint_and_projections_nested() {
    let s = space::enumerate_cubes(p14(), 2).unwrap();
    for (i, a) in s.cubes.iter().enumerate() {
        for b in &s.cubes[i + 1..] {
            let (ra, rb) = (a.rect, b.rect);
            let x_sep = ra.x_hi < rb.x_lo || rb.x_hi < ra.x_lo;
            let y_sep = ra.y_hi < rb.y_lo || rb.y_hi < ra.y_lo;
            assert!(x_sep || y_sep, "{a:?} {b:?}");
            let nested = (ra.x_lo <= rb.x_lo && rb.x_hi <= ra.x_hi) || (rb.x_lo <= ra.x_lo && ra.x_hi <= rb.x_hi);
            assert!(x_sep || nested);
        }
    }
}

#[test]
fn classification_examples() {
    let p = p14();
    let s = space::enumerate_cubes(p, 2).unwrap();
    let j0 = cantor::removed_interval_of_d(p, RowAddress::new(0, 1).unwrap()).unwrap();
    let unit = Cube::new(p, RowAddress::new(0, 1).unwrap(), IntervalAddress::root()).unwrap();
    assert_eq!(s.classify(Point::new(0.0, 0.5 * (j0.0 + j0.1)), 0.0), Classification::InCube(unit));
    assert_eq!(s.classify(Point::new(0.0, 0.0), 1e-12), Classification::InSingularSet);
    let j1 = cantor::removed_interval_of_d(p, RowAddress::new(1, 1).unwrap()).unwrap();
    // x in the central gap of C at level 1, y on a generation-1 row
    assert_eq!(s.classify(Point::new(0.5, 0.5 * (j1.0 + j1.1)), 1e-12), Classification::Outside);
    // corners of cubes on C x D resolve to the cube
    let c = s.classify(Point::new(0.0, j0.0), 0.0);
    assert!(matches!(c, Classification::InCube(q) if q.row.generation == 0));
}

#[test]
fn measure_closed_form() {
    let p = p14();
    assert_eq!(space::total_measure(p, 0), 1.0);
    assert!((space::total_measure(p, 1) - 1.03125).abs() < 1e-15);
    assert!((space::total_measure(p, 6) - 32.0 / 31.0).abs() < 1e-6);
    assert!((space::measure_limit(p) - 32.0 / 31.0).abs() < 1e-15);
    for g in 0..8 {
        let s = space::total_measure(p, g);
        let t = space::measure_tail(p, g);
        assert!(s <= space::measure_limit(p) + 1e-15);
        assert!((s + t - space::measure_limit(p)).abs() < 1e-14);
    }
    // direct sum of cube areas
    let s = space::enumerate_cubes(p, 3).unwrap();
    let area: f64 = s.cubes.iter().map(|c| c.rect.area()).sum();
    assert!((area - space::total_measure(p, 3)).abs() < 1e-12);
}

#[test]
fn ball_measure_examples() {
    let p = p14();
    let s = space::enumerate_cubes(p, 2).unwrap();
    let j0 = cantor::removed_interval_of_d(p, RowAddress::new(0, 1).unwrap()).unwrap();
    let c = Point::new(0.5, 0.5 * (j0.0 + j0.1));
    let m = space::ball_measure(&s, c, 0.1);
    assert!((m.measure - std::f64::consts::PI * 0.01).abs() < 1e-12);
    assert_eq!(m.tail_bound, space::measure_tail(p, 2));
    // a disk straddling the edge of the unit cube
    let m = space::ball_measure(&s, Point::new(0.0, c.y), 0.1);
    assert!((m.measure - 0.5 * std::f64::consts::PI * 0.01).abs() < 1e-12);
}

#[test]
fn ahlfors_ratios_bounded() {
    let s = space::enumerate_cubes(p14(), 2).unwrap();
    let rep = space::ahlfors_probe(&s, 200, 7, s.params.side(2), 1.0);
    assert!(rep.c_low > 0.0);
    assert!(rep.c_high <= std::f64::consts::PI * (1.0 + 1e-12));
    let again = space::ahlfors_probe(&s, 200, 7, s.params.side(2), 1.0);
    assert_eq!(rep.c_low, again.c_low);
}

#[test]
fn first_large_cubes() {
    let p = p14();
    let unit = Cube::new(p, RowAddress::new(0, 1).unwrap(), IntervalAddress::root()).unwrap();
    for j in 1..=4 {
        let q = Cube::new(p, RowAddress::new(1, 2).unwrap(), IntervalAddress::new(2, j).unwrap()).unwrap();
        assert_eq!(space::first_large_cube_below(p, &q).unwrap(), unit);
    }
    assert!(matches!(space::first_large_cube_below(p, &unit), Err(Error::Boundary(_))));
    assert!(matches!(space::first_large_cube_above(p, &unit), Err(Error::Boundary(_))));
    let s = space::enumerate_cubes(p, 3).unwrap();
    for q in &s.cubes {
        for big in [space::first_large_cube_below(p, q), space::first_large_cube_above(p, q)].into_iter().flatten() {
            assert!(big.side() / q.side() >= 16.0 - 1e-9);
            assert!(big.rect.x_lo <= q.rect.x_lo && q.rect.x_hi <= big.rect.x_hi);
        }
    }
}

#[test]
fn json_round_trip() {
    let s = space::enumerate_cubes(p14(), 1).unwrap();
    let back = SpaceApprox::from_json(&s.to_json().unwrap()).unwrap();
    assert_eq!(back.cubes, s.cubes);
    assert_eq!(back.params, s.params);
}

proptest! {
    #[test]
    fn ball_measure_below_disk_area(x in 0.0f64..1.0, t in 0.0f64..1.0, r in 1e-3f64..1.5) {
        let p = p14();
        let s = space::enumerate_cubes(p, 2).unwrap();
        let c = Point::new(x, t * p.scale_d());
        let m = space::ball_measure(&s, c, r).measure;
        prop_assert!(m <= std::f64::consts::PI * r * r * (1.0 + 1e-12));
        prop_assert!(m >= 0.0);
    }

    #[test]
    fn sampled_points_classify_into_their_cube(seed in 0u64..1000) {
        use rand::SeedableRng;
        let s = space::enumerate_cubes(p14(), 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (pt, c) = space::sample_point(&s, &mut rng);
        prop_assert!(c.rect.contains(&pt, 0.0));
        let e = space::sample_singular_point(s.params, &mut rng);
        let cls = s.classify(e, 1e-9);
        prop_assert!(cls == Classification::InSingularSet || matches!(cls, Classification::InCube(_)));
    }
}
