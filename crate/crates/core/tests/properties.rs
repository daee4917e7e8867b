use extremal_core::mesh_fem::{assemble_stiffness, build_rect_mesh};
use extremal_core::mountain_pass::{
    derivative, descent_direction, energy_change, nehari_defect, nehari_project, MountainPass,
    StepOutcome,
};
use extremal_core::*;
use proptest::prelude::*;

fn bump_field(space: &Discretization, coeffs: &[f64]) -> NodalField {
    // positive interior field from a few sine modes on top of the base guess
    space.interpolate(|pt| {
        let NodePoint::Planar { x, y } = pt else {
            unreachable!()
        };
        let base = (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
        let extra: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 2) as f64 * std::f64::consts::PI * x).sin().powi(2) * base)
            .sum();
        base + extra
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_scale_free(
        c in 1e-3f64..1e3,
        p in 2.1f64..9.0,
        coeffs in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let s = Domain::unit_square(3).discretize().unwrap();
        let u = bump_field(&s, &coeffs);
        let a = nehari_project(&s, &u, p).unwrap();
        let b = nehari_project(&s, &u.scaled(c), p).unwrap();
        let scale = a.max_abs();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
        prop_assert!(nehari_defect(&s, &a, p).unwrap() <= 1e-8);
    }

    #[test]
    fn descent_pairing_identity(
        p in 2.5f64..8.0,
        coeffs in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let s = Domain::unit_square(4).discretize().unwrap();
        let u = nehari_project(&s, &bump_field(&s, &coeffs), p).unwrap();
        let d = descent_direction(&s, &u, p, 1e-12).unwrap();
        prop_assume!(d.lambda > 0.0);
        prop_assert!((s.dirichlet_energy(&d.direction) - 1.0).abs() <= 1e-10);
        let pairing = derivative(&s, &u, &d.direction, p).unwrap();
        prop_assert!((pairing + d.slope()).abs() <= 1e-8 * d.slope());
    }

    #[test]
    fn accepted_steps_lower_the_energy(
        p in 2.5f64..8.0,
        coeffs in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let spec = ProblemSpec::new(Domain::unit_square(3), p);
        let s = spec.domain.discretize().unwrap();
        let mp = MountainPass::new(&s, &spec).unwrap();
        let mut state = mp.start(&bump_field(&s, &coeffs)).unwrap();
        for _ in 0..6 {
            let before = state.u.clone();
            match mp.step(&mut state).unwrap() {
                StepOutcome::Accepted { .. } => {
                    prop_assert!(energy_change(&s, &before, &state.u, p).unwrap() < 0.0);
                    prop_assert!(nehari_defect(&s, &state.u, p).unwrap() <= 1e-8);
                }
                _ => break,
            }
        }
    }

    #[test]
    fn stiffness_annihilates_constants(
        w in 0.2f64..5.0,
        h in 0.2f64..5.0,
        nx in 1usize..6,
        ny in 1usize..6,
        c in -10.0f64..10.0,
    ) {
        let m = build_rect_mesh(w, h, nx, ny).unwrap();
        let k = assemble_stiffness(&m);
        let u = vec![c; m.num_nodes()];
        prop_assert!(k.mul_vec(&u).iter().all(|v| v.abs() <= 1e-12 * c.abs().max(1.0)));
        prop_assert!(k.is_symmetric());
    }

    #[test]
    fn sobolev_quotient_is_homogeneous(
        c in prop::sample::select(vec![0.1, 10.0, 0.37, 123.0]),
        p in 1.0f64..8.0,
        coeffs in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let s = Domain::unit_square(3).discretize().unwrap();
        let u = bump_field(&s, &coeffs);
        let a = compute_cp(&s, &u, p).unwrap();
        let b = compute_cp(&s, &u.scaled(c), p).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn distribution_curves_never_increase(
        coeffs in prop::collection::vec(-0.5f64..1.0, 3),
        radial in any::<bool>(),
        shift in 0.0f64..0.9,
    ) {
        let s = if radial {
            Domain::unit_ball(3, 12).discretize().unwrap()
        } else {
            Domain::unit_square(4).discretize().unwrap()
        };
        let u = s.interpolate(|pt| {
            let q = match pt {
                NodePoint::Planar { x, y } => 4.0 * x * (1.0 - x) * 4.0 * y * (1.0 - y),
                NodePoint::Radial { r } => 1.0 - r * r,
            };
            q + coeffs[0] * q * q + coeffs[1] * (q - shift).abs() * q + coeffs[2] * q.powi(3)
        });
        prop_assume!(u.iter().any(|v| *v > 0.0));
        let n = normalize_sup(&s, &u).unwrap();
        let curve = distribution(&s, &n.field, &default_t_grid(), 3.0).unwrap();
        for w in curve.mu.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        prop_assert!(curve.mu.iter().all(|m| *m >= 0.0 && *m <= s.volume() * (1.0 + 1e-12)));
    }
}
