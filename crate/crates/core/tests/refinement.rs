use extremal_core::*;

#[test]
fn sobolev_constant_is_stable_under_refinement() {
    for p in [3.0, 4.0] {
        let coarse = solve(&ProblemSpec::new(Domain::unit_square(16), p)).unwrap();
        let fine = solve(&ProblemSpec::new(Domain::unit_square(32), p)).unwrap();
        assert!(coarse.converged && fine.converged);
        assert!((coarse.cp - fine.cp).abs() < 1e-2 * fine.cp, "p={p}");
    }
}

#[test]
fn lambda_identity_on_converged_solves() {
    let cases = [
        Domain::unit_square(8),
        Domain::unit_ball(2, 32),
        Domain::unit_ball(4, 32),
        Domain::Rectangle {
            width: 1.0,
            height: 4.0,
            nx: 4,
            ny: 16,
        },
    ];
    for domain in cases {
        for p in [1.0, 2.0, 3.0, 3.5] {
            let r = solve(&ProblemSpec::new(domain, p)).unwrap();
            assert!(r.converged, "{domain} p={p}");
            let direct = compute_lambda(&r.space, &r.normalized, p).unwrap();
            assert!(
                (direct - r.lambda).abs() < 1e-6 * r.lambda,
                "{domain} p={p}"
            );
        }
    }
}

#[test]
fn ball_solutions_are_decreasing_in_radius() {
    let r = solve(&ProblemSpec::new(Domain::unit_ball(3, 32), 4.0)).unwrap();
    assert!(r.converged);
    // nodes are ordered outward from the centre
    for w in r.normalized.windows(2) {
        assert!(w[1] < w[0] + 1e-12);
    }
    assert!((r.normalized[0] - 1.0).abs() < 1e-12);
}
