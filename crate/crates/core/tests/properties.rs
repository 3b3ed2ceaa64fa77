//! Property tests for the model invariants: capstan monotonicity, spring
//! linearity, work-loop energy closure, and analyzer invariances.

use lockspring::*;
use proptest::prelude::*;

fn geometry_strategy() -> impl Strategy<Value = CapstanGeometry> {
    (
        0.5f64..40.0,  // pulley radius
        0.5f64..40.0,  // drum radius
        0.5f64..5.0,   // wire diameter
        1.0f64..8.0,   // drum length multiple of wire diameter
        0.05f64..2.0,  // friction
    )
        .prop_map(|(r_p, r_d, d_w, mult, mu)| CapstanGeometry {
            pulley_radius_mm: r_p,
            drum_radius_mm: r_d,
            drum_length_mm: d_w * mult,
            wire_diameter_mm: d_w,
            friction_coeff: mu,
            wrap_count_override: None,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lambda_bounded_by_radius_ratio(g in geometry_strategy()) {
        let lam = locking_force_ratio(&g).unwrap();
        prop_assert!(lam > 0.0);
        prop_assert!(lam < g.pulley_radius_mm / g.drum_radius_mm);
    }

    #[test]
    fn lambda_decreasing_in_friction(g in geometry_strategy(), bump in 0.01f64..0.5) {
        let mut stickier = g;
        stickier.friction_coeff = (g.friction_coeff + bump).min(2.0);
        prop_assume!(stickier.friction_coeff > g.friction_coeff);
        prop_assert!(
            locking_force_ratio(&stickier).unwrap() < locking_force_ratio(&g).unwrap()
        );
    }

    #[test]
    fn lambda_decreasing_in_drum_length(g in geometry_strategy(), factor in 1.01f64..3.0) {
        let mut longer = g;
        longer.drum_length_mm = g.drum_length_mm * factor;
        prop_assert!(
            locking_force_ratio(&longer).unwrap() < locking_force_ratio(&g).unwrap()
        );
    }

    #[test]
    fn lambda_increasing_in_wire_diameter(g in geometry_strategy(), factor in 1.01f64..3.0) {
        let mut thicker = g;
        thicker.wire_diameter_mm = g.wire_diameter_mm * factor;
        prop_assert!(
            locking_force_ratio(&thicker).unwrap() > locking_force_ratio(&g).unwrap()
        );
    }

    #[test]
    fn wrap_override_is_exact(g in geometry_strategy(), n in 1.0f64..20.0) {
        let mut overridden = g;
        overridden.wrap_count_override = Some(n);
        prop_assert_eq!(wrap_angle(&overridden).unwrap(), std::f64::consts::TAU * n);
    }

    #[test]
    fn holding_force_never_exceeds_cable_budget(
        g in geometry_strategy(),
        pretension in 0.01f64..100.0,
        strength in 100.0f64..10_000.0,
        safety in 1.0f64..4.0,
    ) {
        let solenoid = SolenoidSpec { pretension_force_n: pretension, ..SolenoidSpec::prototype() };
        let cable = CableSpec {
            breaking_strength_n: strength,
            safety_factor: safety,
            ..CableSpec::prototype()
        };
        let hold = max_holding_force(&g, &solenoid, &cable).unwrap();
        prop_assert!(hold.force_n <= strength / safety + 1e-9);
    }

    #[test]
    fn unlock_energy_is_multilinear(
        v in 1.0f64..50.0,
        i in 0.1f64..5.0,
        dt in 0.001f64..0.1,
        c in 1.5f64..4.0,
    ) {
        let base = SolenoidSpec {
            drive_voltage_v: v,
            drive_current_a: i,
            actuation_time_s: dt,
            ..SolenoidSpec::prototype()
        };
        let e0 = unlock_energy(&base).unwrap();
        for scaled in [
            SolenoidSpec { drive_voltage_v: v * c, ..base },
            SolenoidSpec { drive_current_a: i * c, ..base },
            SolenoidSpec { actuation_time_s: dt * c, ..base },
        ] {
            let e1 = unlock_energy(&scaled).unwrap();
            prop_assert!((e1 - c * e0).abs() <= 1e-12 * e1.max(1.0));
        }
    }

    #[test]
    fn spring_energy_matches_force_integral(
        k in 0.5f64..50.0,
        deflection in 0.1f64..90.0,
    ) {
        let spec = SpringSpec {
            stiffness_n_per_mm: k,
            free_length_mm: 305.0,
            max_deflection_mm: 90.0,
            mass_kg: 1.32,
        };
        // Trapezoid integration of a linear force law is exact.
        let n = 256;
        let h = deflection / n as f64;
        let mut work_nmm = 0.0;
        for j in 0..n {
            let x0 = j as f64 * h;
            let x1 = x0 + h;
            work_nmm += 0.5
                * (spring_force(&spec, x0).unwrap() + spring_force(&spec, x1).unwrap())
                * h;
        }
        let direct = stored_energy(&spec, deflection).unwrap();
        prop_assert!((work_nmm * 1e-3 - direct).abs() <= 1e-10 * direct.max(1e-9));
    }

    #[test]
    fn cable_stretch_is_linear(t in 1.0f64..1350.0) {
        let cable = CableSpec::prototype();
        let one = cable_stretch(&cable, t).unwrap();
        let two = cable_stretch(&cable, 2.0 * t).unwrap();
        prop_assert!((two - 2.0 * one).abs() < 1e-12);
    }

    #[test]
    fn pulley_angle_is_additive(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let g = CapstanGeometry::prototype();
        let whole = pulley_angle(a + b, &g).unwrap();
        let parts = pulley_angle(a, &g).unwrap() + pulley_angle(b, &g).unwrap();
        prop_assert!((whole - parts).abs() < 1e-12);
    }
}

proptest! {
    // Simulation cases are heavier; fewer of them still cover the space.
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_closure_on_random_protocols(
        n_locks in 1usize..5,
        first in 4.0f64..20.0,
        gap in 2.0f64..18.0,
        slip in 0.0f64..4.0,
        compliance in proptest::bool::ANY,
        release in proptest::bool::ANY,
        speed in 0.3f64..2.0,
    ) {
        let mut locks = Vec::new();
        let mut d = first;
        for _ in 0..n_locks {
            locks.push(d.min(90.0));
            d += gap;
        }
        locks.dedup();
        let loss = LockLossModel { engagement_slip_mm: slip, include_cable_compliance: compliance };
        let sim = Simulator::new(SpringAssembly::prototype(), loss).unwrap();
        let protocol = Protocol::sequential_accumulation(&locks, release).with_speed(speed);
        let out = sim.run_protocol(&protocol).unwrap();
        let residual = out.ledger.closure_residual_j().abs();
        prop_assert!(
            residual < 1e-3 * out.ledger.work_in_j,
            "closure residual {residual} too large for work {}",
            out.ledger.work_in_j
        );
    }

    #[test]
    fn unloading_never_passes_lock_point(
        lock_at in 10.0f64..90.0,
        slip in 0.0f64..4.0,
    ) {
        let loss = LockLossModel { engagement_slip_mm: slip, include_cable_compliance: true };
        let sim = Simulator::new(SpringAssembly::prototype(), loss).unwrap();
        let protocol = Protocol::sequential_accumulation(&[lock_at], false);
        let out = sim.run_protocol(&protocol).unwrap();
        for w in out.trace.samples.windows(2) {
            if w[1].clutch_engaged {
                prop_assert!(w[1].deflection_mm <= lock_at + 1e-9);
                prop_assert!(w[1].deflection_mm <= w[0].deflection_mm + 1e-12);
            }
        }
    }

    #[test]
    fn ideal_lock_limit_is_lossless(
        locks_n in 1usize..4,
        first in 5.0f64..25.0,
    ) {
        let locks: Vec<f64> = (0..locks_n).map(|i| first + 20.0 * i as f64).collect();
        let sim = Simulator::new(SpringAssembly::prototype(), LockLossModel::ideal()).unwrap();
        let protocol = Protocol::sequential_accumulation(&locks, true);
        let out = sim.run_protocol(&protocol).unwrap();
        let report = efficiency(&out.trace, &AnalysisConfig::from_trace(&out.trace)).unwrap();
        prop_assert!((report.eta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn efficiency_survives_downsampling(
        lock_at in 30.0f64..90.0,
        slip in 1.5f64..4.0,
    ) {
        let loss = LockLossModel { engagement_slip_mm: slip, include_cable_compliance: true };
        let sim = Simulator::new(SpringAssembly::prototype(), loss).unwrap();
        let protocol = Protocol::sequential_accumulation(&[lock_at], true);
        let out = sim.run_protocol(&protocol).unwrap();
        let config = AnalysisConfig::from_trace(&out.trace);
        let full = efficiency(&out.trace, &config).unwrap();

        let mut half = out.trace.clone();
        half.samples = half
            .samples
            .iter()
            .copied()
            .step_by(2)
            .collect();
        let coarse = efficiency(&half, &config).unwrap();
        prop_assert!(
            (full.e_loss_j - coarse.e_loss_j).abs() <= 0.01 * full.e_loss_j,
            "drop work drifted more than 1% under 2x downsampling"
        );
    }
}
