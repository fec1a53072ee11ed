use cantorlab::analysis::{self, modulus, Trapezoid};
use cantorlab::cantor::{self, SpaceParams};
use cantorlab::space::{self, Point};
use cantorlab::Error;
use proptest::prelude::*;

fn p14() -> SpaceParams {
    SpaceParams::new(0.25, 2).unwrap()
}

#[test]
fn threshold_examples() {
    let p = p14();
    assert!((analysis::p0(p) - 5.0 / 3.0).abs() < 1e-15);
    assert!((analysis::kp_convergence_ratio(p, 1.8).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    for nu in 2..6 {
        let q = SpaceParams::new(0.25, nu).unwrap();
        let want = (1.0 - nu as f64).exp2();
        assert!((analysis::kp_convergence_ratio(q, 2.0).unwrap() - want).abs() < 1e-15);
    }
    assert!(matches!(analysis::kp_convergence_ratio(p, 1.0), Err(Error::Domain(_))));
}

proptest! {
    #[test]
    fn threshold_bounds(lambda in 0.01f64..0.499, nu in 2u32..12) {
        let p = SpaceParams::new(lambda, nu).unwrap();
        let t = analysis::p0(p);
        prop_assert!(t > 1.0 && t < 2.0);
        prop_assert!(t > 2.0 - p.dim_c());
        prop_assert!((analysis::kp_convergence_ratio(p, t).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!(analysis::kp_convergence_ratio(p, 0.5 * (t + 2.0)).unwrap() < 1.0);
        prop_assert!(analysis::kp_convergence_ratio(p, 0.5 * (t + 1.0)).unwrap() > 1.0);
    }
}

#[test]
fn kp_tail_matches_ratio() {
    let p = p14();
    let (q1, q2) = modulus::scaling_configuration(p, 1).unwrap();
    for &e in &[1.2, 1.8, 2.5] {
        let rep = analysis::kp_exact(p, e, &q1, &q2, 8).unwrap();
        let r = analysis::kp_convergence_ratio(p, e).unwrap();
        assert!((rep.tail_ratio - r).abs() < 1e-9 * r, "{} {}", rep.tail_ratio, r);
        assert_eq!(rep.convergent, r < 1.0);
        let s: f64 = rep.increments.iter().sum();
        assert!((s - rep.partial.last().unwrap()).abs() < 1e-12 * s);
    }
    assert!(matches!(analysis::kp_exact(p, 1.8, &q2, &q1, 4), Err(Error::Precondition(_))));
}

#[test]
fn kp_scales_with_the_cube() {
    let p = p14();
    let e = 1.8;
    let (a1, a2) = modulus::scaling_configuration(p, 1).unwrap();
    let (b1, b2) = modulus::scaling_configuration(p, 2).unwrap();
    let a = analysis::kp_exact(p, e, &a1, &a2, 6).unwrap();
    let b = analysis::kp_exact(p, e, &b1, &b2, 6).unwrap();
    let want = (b1.side() / a1.side()).powf((e - 2.0) / e);
    assert!((b.value / a.value - want).abs() < 1e-9 * want);
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn coarea_rectangle_and_trapezoid() {
    let rect = Trapezoid { long: 2.0, short: 2.0, height: 0.5 };
    for g in [&(|_: Point| 1.0) as &dyn Fn(Point) -> f64, &|q: Point| 1.0 + q.x * q.y] {
        let rep = analysis::coarea_check(rect, g, 400, 1e-3).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-6, "{}", rep.ratio);
    }
    let trap = Trapezoid { long: 1.0, short: 0.25, height: 0.5 };
    let rep = analysis::coarea_check(trap, &|_| 1.0, 2000, 1e-3).unwrap();
    let shift = (trap.long - trap.short) / 2.0;
    let lhs = simpson(|t| (shift + t * trap.short / trap.long - t).hypot(trap.height), 0.0, trap.long, 1000);
    assert!((rep.lhs - lhs).abs() < 1e-6);
    assert!((rep.rhs - trap.long / trap.short * trap.area()).abs() < 1e-9);
    assert!(analysis::coarea_check(Trapezoid { long: 1.0, short: 2.0, height: 1.0 }, &|_| 1.0, 10, 0.1).is_err());
}

#[test]
fn maximal_function_basics() {
    let s = space::enumerate_cubes(p14(), 1).unwrap();
    let x = Point::new(0.3, s.cubes[0].rect.y_lo + 0.2);
    let c = analysis::truncated_maximal(&s, &|_| 2.5, x, 0.5, 0.01, 24);
    assert!((c - 2.5).abs() < 1e-12);
    let g1 = |q: Point| q.x;
    let g2 = |q: Point| q.x + q.y * q.y;
    let m1 = analysis::truncated_maximal(&s, &g1, x, 0.5, 0.01, 24);
    let m2 = analysis::truncated_maximal(&s, &g2, x, 0.5, 0.01, 24);
    assert!(m1 <= m2);
    assert!(m1 >= analysis::ball_average(&s, &g1, x, 0.5, 24).unwrap());
    // a ball inside one cube averages a linear function to its centre value
    let avg = analysis::ball_average(&s, &g1, x, 0.05, 200).unwrap();
    assert!((avg - x.x).abs() < 1e-3);
    assert!(analysis::ball_average(&s, &g1, Point::new(3.0, 3.0), 0.1, 24).is_none());
}

#[test]
fn rectangle_modulus() {
    let (long, width, h) = (2.0, 1.0, 1.0 / 32.0);
    for &e in &[1.5, 2.0, 3.0] {
        let prob = modulus::rectangle_problem(long, width, h, e).unwrap();
        let res = analysis::discrete_modulus(&prob, 1e-6, 10_000).unwrap();
        let want = width * long.powf(1.0 - e);
        assert!((res.modulus / want - 1.0).abs() < 0.01, "p={e}: {} vs {want}", res.modulus);
        assert!(res.dual <= res.modulus * (1.0 + 1e-12));
        assert!(res.gap < 1e-6);
    }
}

#[test]
fn single_path_and_subfamilies() {
    let e = 2.0;
    let prob = modulus::rectangle_problem(1.0, 0.5, 1.0 / 16.0, e).unwrap();
    let full = analysis::discrete_modulus(&prob, 1e-8, 10_000).unwrap().modulus;
    let chain = prob.paths[3].clone();
    let (len, cost): (f64, f64) = chain.iter().fold((0.0, 0.0), |(l, c), &i| {
        let ed = &prob.graph.edges[i as usize];
        (l + ed.len, c + ed.len * ed.cell)
    });
    let single = modulus::ModulusProblem::new(prob.graph.clone(), vec![chain], e).unwrap();
    let one = analysis::discrete_modulus(&single, 1e-10, 10_000).unwrap().modulus;
    assert!((one - cost / len.powf(e)).abs() < 1e-9 * one);
    let half = modulus::ModulusProblem::new(prob.graph.clone(), prob.paths[..4].to_vec(), e).unwrap();
    let part = analysis::discrete_modulus(&half, 1e-8, 10_000).unwrap().modulus;
    assert!(one <= part && part <= full);
    assert!(modulus::ModulusProblem::new(prob.graph.clone(), vec![], e).is_err());
}

#[test]
fn necessity_rows() {
    let p = p14();
    assert!(matches!(analysis::necessity_witness(p, 1, 6), Err(Error::Precondition(_))));
    assert!(matches!(analysis::necessity_witness(p, 4, 3), Err(Error::Truncation(_))));
    for (k, want) in [(2, 1), (3, 2), (4, 4), (5, 8)] {
        assert_eq!(analysis::necessity_witness(p, k, 6).unwrap().n_k, want);
    }
}

#[test]
fn necessity_witness_shape() {
    let p = p14();
    let w = analysis::necessity_witness(p, 4, 4).unwrap();
    let j0 = cantor::removed_interval_of_d(p, cantor::RowAddress::new(0, 1).unwrap()).unwrap();
    assert_eq!(w.u(j0.0 / 2.0), 0.0);
    assert_eq!(w.u(j0.0), 1.0);
    let mut last = 0.0;
    for i in 0..=1000 {
        let y = j0.0 * (0.5 + 0.5 * i as f64 / 1000.0);
        let u = w.u(y);
        assert!(u >= last && (0.0..=1.0).contains(&u));
        last = u;
    }
    // u is the integral of g
    let sum: f64 = w.rows.iter().map(|(_, (lo, hi))| (hi - lo) * w.g(0.5 * (lo + hi))).sum();
    assert!((sum - 1.0).abs() < 1e-12);
}

#[test]
fn necessity_energies() {
    let p = p14();
    let s = space::enumerate_cubes(p, 4).unwrap();
    for k in 2..=4 {
        let w = analysis::necessity_witness(p, k, 4).unwrap();
        let e1 = analysis::necessity_energy(&w, 1.0);
        assert!((e1 - 0.25f64.powi(k as i32)).abs() < 1e-15);
        for &q in &[1.2, 1.5, 5.0 / 3.0] {
            let closed = analysis::necessity_energy(&w, q);
            let by_rows: f64 = w
                .rows
                .iter()
                .map(|(_, (lo, hi))| (hi - lo) * (2.0 * p.lambda).powi((p.nu * k) as i32) * w.g(0.5 * (lo + hi)).powf(q))
                .sum();
            assert!((closed - by_rows).abs() < 1e-12 * closed);
            let quad = analysis::necessity_energy_quadrature(&s, &w, q, 4, 4);
            assert!((quad / closed - 1.0).abs() < 0.02, "k={k} q={q}: {quad} vs {closed}");
        }
    }
}

#[test]
fn poincare_probe_behaviour() {
    let p = p14();
    let rep = analysis::poincare_probe(p, 5, &|_| 3.0, &|_| 1.0, 1.5, 8).unwrap();
    assert_eq!(rep.lhs, 0.0);
    assert!((rep.measure - space::total_measure(p, 5)).abs() < 1e-12);
    let ratio = |q: f64, k: u32| {
        let w = analysis::necessity_witness(p, k, 6).unwrap();
        analysis::poincare_probe(p, 6, &|y| w.u(y), &|y| w.g(y), q, 16).unwrap().ratio
    };
    let below: Vec<f64> = (2..=5).map(|k| ratio(1.3, k)).collect();
    assert!(below.windows(2).all(|w| w[1] > w[0]), "{below:?}");
    let above: Vec<f64> = (2..=5).map(|k| ratio(1.9, k)).collect();
    assert!(above.windows(2).all(|w| w[1] < w[0]), "{above:?}");
    assert!(matches!(analysis::poincare_probe(p, 3, &|_| 0.0, &|_| 0.0, 0.5, 4), Err(Error::Domain(_))));
}

#[test]
fn pointwise_estimate() {
    let p = p14();
    let s = space::enumerate_cubes(p, 1).unwrap();
    let unit = s.cubes[0].rect;
    let x = Point::new(0.2, unit.y_lo + 0.3);
    let y = Point::new(0.03, unit.y_hi + 0.03);
    let zero = analysis::pointwise_estimate_check(&s, None, x, y, &|_| 0.0, 1.5, 32, 4.0, 8, 1e-3, 1).unwrap();
    assert_eq!(zero.lhs, 0.0);
    let one = analysis::pointwise_estimate_check(&s, None, x, y, &|_| 1.0, 1.5, 32, 4.0, 8, 1e-3, 1).unwrap();
    assert!(one.lhs >= x.dist(&y));
    assert!((one.rhs - 2.0 * x.dist(&y)).abs() < 1e-12);
    assert!(one.ratio.is_finite() && one.ratio < 10.0);
    let off = Point::new(0.5, 1.5 * unit.y_hi);
    assert!(matches!(
        analysis::pointwise_estimate_check(&s, None, x, off, &|_| 1.0, 1.5, 32, 4.0, 8, 1e-3, 1),
        Err(Error::Classification(_))
    ));
}

#[test]
fn bowtie_pinch() {
    let h = 1.0 / 64.0;
    let ells = [0.25, 0.125, 0.0625];
    let run = |e: f64| -> Vec<f64> {
        ells.iter()
            .map(|&l| {
                let prob = analysis::bowtie_problem(l, h, 8, 16, e).unwrap();
                analysis::discrete_modulus(&prob, 1e-4, 20_000).unwrap().modulus
            })
            .collect()
    };
    let (low, two, high) = (run(1.5), run(2.0), run(3.0));
    for m in [&low, &two] {
        assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
    }
    let drop = |m: &[f64]| m[2] / m[0];
    assert!(drop(&high) > drop(&two) && drop(&two) > drop(&low));
    assert!(drop(&high) > 0.5, "{high:?}");
}
