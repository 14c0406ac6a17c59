use arakelian::driver::{prepare, run, step, Scenario, Tolerances};
use arakelian::mergelyan::{rational_approx_cp1, CP1Map, FitOptions, RationalMap, SampledMap};
use arakelian::planar_sets::{hull_and_h, rasterize, GridSpec, Primitive, RasterSet, SetDescriptor};
use arakelian::scenario::{ScenarioFile, STRIP_DISC};
use arakelian::target_cp1::{CP1Point, Spray};
use arakelian::{Error, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn scenario(grid: GridSpec, set: SetDescriptor, f: CP1Map, steps: usize) -> Scenario {
    Scenario { grid, set, f, epsilon: 0.1, steps, seed: 3, tolerances: Tolerances::default(), spray: Spray::default() }
}

#[test]
fn rational_input_is_a_fixed_point() {
    let grid = GridSpec::new(3.0, 0.1).unwrap();
    // (z + 1) / (z - 5i): holomorphic on the window
    let f = RationalMap::from_coefficients(vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, -5.0), c(1.0, 0.0)]).unwrap();
    let set = SetDescriptor::disc(c(0.0, 0.0), 1.0).with(Primitive::VLine { x: 0.5, width: 0.3 });
    let sc = scenario(grid, set, f.clone().into(), 2);
    let (out, rep) = run(&sc).unwrap();
    assert!(rep.final_error < 1e-12, "{}", rep.final_error);
    for s in &rep.steps {
        assert_eq!(s.deviation, 0.0);
        assert_eq!(s.dist_to_id, 0.0);
        assert_eq!(s.attempts, 1);
    }
    assert_eq!(out.to_text(), f.to_text());
}

#[test]
fn pole_outside_the_disc_matches_a_direct_fit() {
    let grid = GridSpec::new(3.0, 0.1).unwrap();
    let set = SetDescriptor::disc(c(0.0, 0.0), 1.0);
    let g = |z: C64| CP1Point::new(c(1.0, 0.0), z - 2.0);
    let sc = scenario(grid, set.clone(), SampledMap::from_fn(grid, g).into(), 2);
    let (out, rep) = run(&sc).unwrap();
    assert!(rep.final_error < sc.epsilon);
    let e = rasterize(&set, &grid).unwrap();
    let (hull, _) = hull_and_h(&e);
    for p in out.frame_poles() {
        assert!(!hull.contains_point(p), "pole {p} on the hull of E");
    }
    // the direct fit at the first step's target, on the same set
    let target = rep.steps[0].c;
    let (_, direct) =
        rational_approx_cp1(&SampledMap::from_fn(grid, g).into(), &e, &FitOptions::new(60, target)).unwrap();
    assert!(rep.final_error <= 2.0 * direct.sup_error.max(target), "{} vs {}", rep.final_error, direct.sup_error);
}

#[test]
fn empty_k_degenerates_to_a_plain_fit() {
    // E inside the first disc: no part of E lies outside the intermediate disc
    let grid = GridSpec::new(3.0, 0.1).unwrap();
    let set = SetDescriptor::disc(c(0.2, 0.0), 0.5);
    let sc = scenario(grid, set, SampledMap::from_fn(grid, |z| CP1Point::from_chart((z * 1.5).exp())).into(), 2);
    let plan = prepare(&sc).unwrap();
    let (next, rep) = step(&plan.initial, &sc, &plan).unwrap();
    assert!(rep.degenerate);
    assert_eq!(rep.k_cells, 0);
    assert!(next.rational.is_some());
    assert!(rep.deviation < rep.budget);
}

#[test]
fn oversized_target_is_halved_until_the_budget_holds() {
    let mut sc = ScenarioFile::parse(STRIP_DISC, &[]).unwrap().scenario(None).unwrap();
    sc.steps = 1;
    // initial c far above the step budget
    sc.tolerances.c_divisor = 0.05;
    let plan = prepare(&sc).unwrap();
    let (_, rep) = step(&plan.initial, &sc, &plan).unwrap();
    assert!(rep.attempts > 1, "{rep:?}");
    let first = rep.budget / (0.05 * sc.spray.c1);
    assert_eq!(rep.c, first * 0.5f64.powi(rep.attempts as i32 - 1));
    assert!(rep.deviation < rep.budget);
}

#[test]
fn exhausted_retries_report_the_step() {
    let mut sc = ScenarioFile::parse(STRIP_DISC, &[]).unwrap().scenario(None).unwrap();
    sc.tolerances.c_divisor = 0.05;
    sc.tolerances.max_retries = 0;
    let plan = prepare(&sc).unwrap();
    let err = step(&plan.initial, &sc, &plan).unwrap_err();
    assert!(
        matches!(err.root(), Error::BudgetViolation { step: 1, .. } | Error::SplittingPrecondition { step: 1, .. }),
        "{err}"
    );
}

#[test]
fn strip_and_disc_invariants() {
    let sc = ScenarioFile::parse(STRIP_DISC, &[]).unwrap().scenario(None).unwrap();
    let plan = prepare(&sc).unwrap();
    let mut state = plan.initial.clone();
    let mut spent = 0.0;
    for i in 1..=sc.steps {
        let prev_e = state.e.clone();
        let (next, rep) = step(&state, &sc, &plan).unwrap();
        assert!(prev_e.is_subset_of(&next.e));
        assert!(rep.deviation < rep.budget);
        assert!(rep.branch_gap < sc.tolerances.branch_tolerance);
        assert!(rep.cr_residual < arakelian::cauchy_green::dbar_tolerance(sc.grid.spacing(), 1.0), "{rep:?}");
        spent += rep.deviation;
        assert!(next.spent_budget <= sc.epsilon * (1.0 - 0.5f64.powi(i as i32)));
        assert_eq!(next.spent_budget, spent);
        state = next;
    }
    let r = sc.grid.window_radius() - 4.0 * sc.grid.spacing();
    assert!(RasterSet::centered_disc(sc.grid, r - 1e-9).is_subset_of(&state.e));
}

#[test]
fn invalid_epsilon_is_a_config_error() {
    let err = ScenarioFile::parse(STRIP_DISC, &["run.epsilon=0.5".into()]).unwrap().scenario(None).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("epsilon < r"), "{err}");
}
