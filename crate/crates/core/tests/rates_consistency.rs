use cbmlab_core::pde::l1_norm;
use cbmlab_core::rates::{c1_reference, estimate_c1, log_times, rate_report, RateCase, RateRequest};
use cbmlab_core::{solve_pde, InitialTrace, IntervalSet, PdeParams};

fn check(case: RateCase, set: IntervalSet, params: &PdeParams, t: f64) -> f64 {
    let field = solve_pde(&InitialTrace::singular(set), params, &log_times(t / 100.0, t, 9)).unwrap();
    let request = RateRequest {
        case,
        t_check: t,
        window: (t / 100.0, t),
        tolerance: 0.01,
        c1: c1_reference().c1,
    };
    rate_report(&request, &field, params.t_init).unwrap().measured
}

#[test]
fn singleton_rate_agrees_with_the_c1_estimator() {
    let reference = c1_reference();
    let base = reference.params.clone();
    let estimate = estimate_c1(&base, &[0, 1]).unwrap();
    let t: f64 = 1e-2;
    let measured = check(RateCase::FiniteSet { count: 1 }, IntervalSet::point(0.0), &base.scaled(t.sqrt()), t);
    assert!((measured / estimate.estimates[0] - 1.0).abs() < 0.01, "{measured} vs {:?}", estimate.estimates);
    assert!((measured / reference.c1 - 1.0).abs() < 0.01, "{measured} vs {}", reference.c1);
}

#[test]
fn separated_points_add_up() {
    let t = 1e-3;
    let p = PdeParams::for_time_scale(t, t);
    let one = check(RateCase::FiniteSet { count: 1 }, IntervalSet::point(0.0), &p, t);
    let three = check(
        RateCase::FiniteSet { count: 3 },
        IntervalSet::new([(0.0, 0.0), (1.0, 1.0), (5.0, 5.0)]).unwrap(),
        &p,
        t,
    );
    assert!((three / (3.0 * one) - 1.0).abs() < 1e-6, "{three} vs 3·{one}");
}

#[test]
fn interval_excess_shrinks_like_root_t() {
    // t‖v_t‖₁ − 2λ(A) is an edge effect of size ∝ √t.
    let excess = |t: f64| {
        let p = PdeParams::for_time_scale(t, t);
        let field = solve_pde(&InitialTrace::singular(IntervalSet::interval(0.0, 1.0)), &p, &[t]).unwrap();
        t * l1_norm(&field, t).unwrap() - 2.0
    };
    let (a, b) = (excess(1e-3), excess(2.5e-4));
    assert!(a > 0.0 && b > 0.0);
    assert!((a / b / 2.0 - 1.0).abs() < 0.1, "excess {a} at 1e-3, {b} at 2.5e-4");
}
