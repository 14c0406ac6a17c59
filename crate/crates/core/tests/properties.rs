//! Randomized invariants across the modules.

use std::sync::OnceLock;

use arakelian::cauchy_green::{build_cutoff, cauchy_transform, cauchy_transform_cells, ScalarField};
use arakelian::cousin::{split_scalar, CousinOperator};
use arakelian::mergelyan::{
    avoid_set, continuous_glue, rational_approx_cp1, CP1Map, FitOptions, RationalMap, SampledMap, TUBULAR_RADIUS,
};
use arakelian::planar_sets::{
    build_exhaustion, cartan_pair_for_step, holes, hull_and_h, rasterize, GridSpec, Primitive, RasterSet,
    SetDescriptor,
};
use arakelian::selftest::strip_pair;
use arakelian::target_cp1::{
    dist_cp1, exp_sl2, mat_det, mat_dist, mat_mul, spray_eval, CP1Point, ChartComplement, LieVector, Spray, IDENTITY,
};
use arakelian::transition::TransitionMap;
use arakelian::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c64(r: std::ops::Range<f64>) -> impl Strategy<Value = C64> {
    (r.clone(), r).prop_map(|(a, b)| C64::new(a, b))
}

fn lie(r: f64) -> impl Strategy<Value = LieVector> {
    (c64(-r..r), c64(-r..r), c64(-r..r)).prop_map(|(a, b, c)| LieVector::new(a, b, c))
}

fn point() -> impl Strategy<Value = CP1Point> {
    prop_oneof![
        c64(-3.0..3.0).prop_map(CP1Point::from_chart),
        c64(-0.5..0.5).prop_map(|v| CP1Point::new(C64::new(1.0, 0.0), v)),
    ]
}

fn primitive() -> impl Strategy<Value = Primitive> {
    prop_oneof![
        (c64(-1.5..1.5), 0.2f64..1.0).prop_map(|(center, radius)| Primitive::Disc { center, radius }),
        (c64(-1.0..1.0), 0.3f64..0.8, 0.25f64..0.6).prop_map(|(center, inner, w)| Primitive::Annulus {
            center,
            inner,
            outer: inner + w
        }),
        (-1.5f64..1.5, 0.3f64..0.6).prop_map(|(y, width)| Primitive::HLine { y, width }),
        (-1.8f64..0.8, -1.8f64..0.8, 0.4f64..1.0, 0.4f64..1.0).prop_map(|(x0, y0, w, h)| Primitive::Rect {
            x0,
            x1: x0 + w,
            y0,
            y1: y0 + h
        }),
    ]
}

fn grid() -> GridSpec {
    GridSpec::new(2.5, 0.1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hulls_are_hole_free_and_idempotent(prims in prop::collection::vec(primitive(), 1..4)) {
        let s = rasterize(&SetDescriptor::new(prims), &grid()).unwrap();
        let (hull, _) = hull_and_h(&s);
        prop_assert!(holes(&hull).is_empty());
        prop_assert_eq!(&hull_and_h(&hull).0, &hull);
        prop_assert!(s.is_subset_of(&hull));
        // complement labels partition the complement
        let total: usize = s.complement_components().iter().map(|c| c.area_cells).sum();
        prop_assert_eq!(total, grid().len() - s.count());
    }

    #[test]
    fn exhaustion_and_cartan_identities(prims in prop::collection::vec(primitive(), 1..3), n in 1usize..4) {
        let g = GridSpec::new(4.0, 0.1).unwrap();
        let raw = rasterize(&SetDescriptor::new(prims), &g).unwrap();
        // the hull is Arakelian
        let (e, _) = hull_and_h(&raw);
        let ex = build_exhaustion(&e, n).unwrap();
        for (i, d) in ex.iter().enumerate() {
            prop_assert!(holes(&d.set).is_empty());
            prop_assert!(e.is_subset_of(&d.set));
            if i > 0 {
                prop_assert!(ex[i - 1].set.is_subset_of(&d.set));
            }
            if let Some(next) = ex.get(i + 1) {
                let outside = next.disc.complement();
                prop_assert_eq!(d.set.intersection(&outside), e.intersection(&outside));
                let inner = (d.reach() + next.radius) / 2.0;
                if let Ok(p) = cartan_pair_for_step(&d.set, inner, next.radius) {
                    let window = RasterSet::centered_disc(g, next.radius).union(&p.a);
                    prop_assert_eq!(p.a.union(&p.b), d.set.intersection(&window));
                    prop_assert_eq!(&p.a.intersection(&p.b), &p.k);
                }
            }
        }
    }

    #[test]
    fn cauchy_transform_is_linear(a in c64(-2.0..2.0), b in c64(-2.0..2.0), z in c64(-2.0..2.0)) {
        let g = GridSpec::new(1.5, 0.1).unwrap();
        let k = RasterSet::centered_disc(g, 0.8);
        let g1 = ScalarField::from_fn(k.clone(), |w| w * w).unwrap();
        let g2 = ScalarField::from_fn(k.clone(), |w| w.conj() + 1.0).unwrap();
        let comb = ScalarField::from_fn(k, |w| a * w * w + b * (w.conj() + 1.0)).unwrap();
        let lhs = cauchy_transform(&comb, z);
        let rhs = a * cauchy_transform(&g1, z) + b * cauchy_transform(&g2, z);
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn cauchy_transform_decays(seed in 0u64..1000) {
        let g = GridSpec::new(3.0, 0.1).unwrap();
        let k = RasterSet::centered_disc(g, 1.0);
        let phase = seed as f64 * 0.37;
        let f = ScalarField::from_fn(k.clone(), move |w| (w * C64::from_polar(1.0, phase)).exp()).unwrap();
        let far = k.dilate(3).complement();
        let cells: Vec<usize> = far.cells().filter(|c| c % 7 == (seed % 7) as usize).collect();
        let t = cauchy_transform_cells(&f, &cells);
        for (&c, v) in cells.iter().zip(&t) {
            let d = k.distance_to(g.center(c));
            prop_assert!(v.norm() <= k.area() / std::f64::consts::PI * f.sup_norm() / d);
        }
    }

    #[test]
    fn exp_is_unimodular_and_inverse(t in lie(1.5)) {
        let m = exp_sl2(&t);
        prop_assert!((mat_det(&m) - 1.0).norm() < 1e-12);
        prop_assert!(mat_dist(&mat_mul(&m, &exp_sl2(&t.scale(C64::new(-1.0, 0.0)))), &IDENTITY) < 1e-12);
    }

    #[test]
    fn spray_is_a_group_action(y in point(), s in lie(1.0), t in lie(1.0)) {
        let (a, b) = (exp_sl2(&s), exp_sl2(&t));
        prop_assert!(dist_cp1(&spray_eval(&y, &t), &y.act(&b)) < 1e-15);
        prop_assert!(dist_cp1(&y.act(&mat_mul(&a, &b)), &y.act(&b).act(&a)) < 1e-12);
    }

    #[test]
    fn chordal_triangle_inequality(p in point(), q in point(), r in point()) {
        prop_assert!(dist_cp1(&p, &r) <= dist_cp1(&p, &q) + dist_cp1(&q, &r) + 1e-12);
        prop_assert!(dist_cp1(&p, &q) <= 1.0 + 1e-15);
    }

    #[test]
    fn transition_solves_the_gluing_equation(u in c64(-0.6..0.6), d in c64(-0.1..0.1), t in lie(0.4), which in 0usize..3) {
        let chart = [ChartComplement::zero(), ChartComplement::infinity(), ChartComplement::centered_at(&CP1Point::from_chart(C64::new(-1.0, 2.0)))][which];
        let tm = TransitionMap::default().with_chart(chart);
        let y2 = chart.point(u);
        let y1 = chart.point(u + d);
        prop_assume!(dist_cp1(&y1, &y2) < tm.delta_g);
        let tau = tm.solve(&y1, &y2, &t).unwrap();
        prop_assert!(dist_cp1(&spray_eval(&y1, &t), &spray_eval(&y2, &tau)) < 1e-10);
    }
}

fn op() -> &'static CousinOperator {
    static OP: OnceLock<CousinOperator> = OnceLock::new();
    OP.get_or_init(|| strip_pair(0.1).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cousin_split_is_linear_exact_and_bounded(a in c64(-1.0..1.0), b in c64(-1.0..1.0), p in c64(-1.0..1.0)) {
        let op = op();
        let k = op.pair().k.clone();
        let g1 = ScalarField::from_fn(k.clone(), move |z| z * z + p).unwrap();
        let g2 = ScalarField::from_fn(k.clone(), |z| (z * 2.0).sin()).unwrap();
        let comb = ScalarField::from_fn(k, move |z| a * (z * z + p) + b * (z * 2.0).sin()).unwrap();
        let (s1, s2, sc) = (split_scalar(&g1, op).unwrap(), split_scalar(&g2, op).unwrap(), split_scalar(&comb, op).unwrap());
        prop_assert!(sc.identity_residual < 1e-12);
        let (a1, a2, ac) = (s1.a_field.values(), s2.a_field.values(), sc.a_field.values());
        for i in 0..ac.len() {
            prop_assert!((ac[i] - (a * a1[i] + b * a2[i])).norm() < 1e-12);
        }
        let bound = op.c_split() * comb.sup_norm();
        prop_assert!(sc.a_field.sup_norm() + sc.b_field.sup_norm() <= bound * 1.05);
    }

    #[test]
    fn cutoff_is_zero_and_one_where_required(h in prop::sample::select(vec![0.1, 0.05])) {
        let op = strip_pair(h).unwrap();
        let p = op.pair();
        let chi = build_cutoff(p).unwrap();
        for c in p.a_only.dilate(1).cells() {
            prop_assert_eq!(chi.value(c), 0.0);
        }
        for c in p.b_only.dilate(1).cells() {
            prop_assert_eq!(chi.value(c), 1.0);
        }
        for c in 0..p.a.grid().len() {
            if !p.k.contains(c) {
                prop_assert_eq!(chi.dbar(c), C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn glue_is_exact_on_e_and_outside_the_band(shift in c64(-0.05..0.05), r in 0.4f64..1.2) {
        let g = GridSpec::new(2.0, 0.1).unwrap();
        let e = RasterSet::centered_disc(g, r);
        let f: CP1Map = RationalMap::identity().into();
        let target: CP1Map = SampledMap::from_fn(g, move |z| CP1Point::from_chart(z + shift)).into();
        let (out, _) = continuous_glue(&f, &target, &e, TUBULAR_RADIUS).unwrap();
        let fv = f.sample(&g);
        let tv = target.sample(&g);
        for c in 0..g.len() {
            if e.contains(c) {
                prop_assert_eq!(out.value(c), tv.value(c));
            } else if !e.dilate(3).contains(c) {
                prop_assert_eq!(out.value(c), fv.value(c));
            }
        }
    }

    #[test]
    fn avoidance_displacement_is_bounded(seed in 0u64..10_000, m in c64(-1.5..1.5)) {
        let g = GridSpec::new(2.0, 0.1).unwrap();
        let spray = Spray::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, _, av) = avoid_set(&RationalMap::identity(), &[CP1Point::from_chart(m)], 0.3, &g, &spray, &mut rng).unwrap();
        prop_assert!(av.displacement <= spray.c1 * av.t.norm() + 1e-15);
        prop_assert!(av.min_distance > 0.0);
    }

    #[test]
    fn fitted_poles_avoid_the_hull(p in c64(-2.0..2.0)) {
        let g = GridSpec::new(2.5, 0.1).unwrap();
        let s = RasterSet::centered_disc(g, 0.8);
        prop_assume!((p.norm() - 0.8).abs() > 0.3);
        let f: CP1Map = SampledMap::from_fn(g, move |z| CP1Point::new(C64::new(1.0, 0.0), z - p)).into();
        let (r, rep) = rational_approx_cp1(&f, &s, &FitOptions::new(12, 1e-6)).unwrap();
        prop_assert!(rep.sup_error.is_finite());
        let (hull, _) = hull_and_h(&s);
        for q in r.frame_poles() {
            prop_assert!(!hull.contains_point(q), "pole {} inside the hull", q);
        }
    }
}
