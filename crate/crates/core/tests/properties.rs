use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use ekfluid::config::{parse_config, ScenarioConfig, ScenarioKind};
use ekfluid::fluid::{bohm_potential, madelung_compose, madelung_decompose};
use ekfluid::relativity::{
    boosted_kinematics, compose_velocities, pgl_transform, retarded_time, Direction, Event, RetardedQuery,
};
use ekfluid::schrodinger::{self, gaussian_packet, SchrodingerConfig};
use ekfluid::snapshot::Snapshot;
use ekfluid::trajectory::{self, EnsembleSpec};
use ekfluid::vortex::DriftSpec;
use ekfluid::{ComplexField, Grid, PhysicalParams, ScalarField};

fn positive() -> impl Strategy<Value = f64> {
    (-3.0f64..3.0).prop_map(|e| 10f64.powf(e))
}

fn params() -> impl Strategy<Value = PhysicalParams> {
    (positive(), positive(), positive()).prop_map(|(hbar, m, c)| PhysicalParams::new(hbar, m, c, 1.0).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Smooth nodeless field from a handful of Fourier modes.
fn smooth_field(grid: Grid, amps: &[(f64, f64)], floor: f64) -> ComplexField {
    let l = grid.length(0);
    ComplexField::from_fn(grid, |x| {
        let mut a = 1.0;
        let mut phase = 0.0;
        for (j, &(ra, pa)) in amps.iter().enumerate() {
            let k = 2.0 * PI * (j + 1) as f64 / l;
            a += ra * (k * x[0]).cos();
            phase += pa * (k * x[0]).sin();
        }
        Complex64::from_polar(a.max(floor), phase)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rest_energy_and_kappa_identities(p in params()) {
        let s = p.scales();
        prop_assert!(rel(p.hbar * s.omega_c, p.m * p.c * p.c) <= 1e-15);
        prop_assert!(rel(p.c * p.c * s.xi_q(4.0).powi(2), s.kappa) <= 1e-14);
        prop_assert!(rel(s.kappa, p.hbar * p.hbar / (4.0 * p.m * p.m)) <= 1e-15);
    }

    #[test]
    fn drift_wavelength_times_wavenumber_is_two_pi(p in params(), v in prop_oneof![-100.0f64..-1e-3, 1e-3f64..100.0]) {
        let d = DriftSpec::new(v, &p).unwrap();
        prop_assert!(rel(d.lambda_db * d.k_k, 2.0 * PI) <= 1e-14);
    }

    #[test]
    fn compose_decompose_round_trip(amps in prop::collection::vec((-0.3f64..0.3, -0.4f64..0.4), 1..5)) {
        let g = Grid::centered(&[64], &[20.0]).unwrap();
        let psi = smooth_field(g, &amps, 0.1);
        let pair = madelung_decompose(&psi, PhysicalParams::natural().rho_floor()).unwrap();
        let back = madelung_compose(&pair.rho, &pair.theta).unwrap();
        prop_assert!(back.relative_l2(&psi).unwrap() <= 1e-12);
    }

    #[test]
    fn bohm_potential_of_constant_vanishes(rho in 1e-3f64..1e3, p in params()) {
        let g = Grid::centered(&[32, 16], &[10.0, 6.0]).unwrap();
        let q = bohm_potential(&ScalarField::constant(g, rho), &p);
        prop_assert!(q.q.max_abs() * p.m / (p.hbar * p.hbar) <= 1e-10);
    }

    #[test]
    fn pgl_preserves_interval_and_inverts(
        t in -10.0f64..10.0, x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0,
        mach in 0.0f64..0.99, c in 0.1f64..10.0,
    ) {
        let e = Event::new(t, x, y, z);
        let f = pgl_transform(e, mach, c, Direction::Forward).unwrap();
        let scale = c * c * t * t + x * x + y * y + z * z;
        prop_assert!((f.interval(c) - e.interval(c)).abs() <= 1e-12 * scale.max(1.0));
        let b = pgl_transform(f, mach, c, Direction::Inverse).unwrap();
        let size = scale.sqrt().max(1.0);
        prop_assert!((b.t - t).abs() * c <= 1e-12 * size);
        prop_assert!((b.x - x).abs() <= 1e-12 * size);
    }

    #[test]
    fn pgl_boosts_compose_by_velocity_addition(
        t in -5.0f64..5.0, x in -5.0f64..5.0, m1 in 0.0f64..0.9, m2 in 0.0f64..0.9,
    ) {
        let c = 1.0;
        let e = Event::new(t, x, 0.0, 0.0);
        let two = pgl_transform(pgl_transform(e, m1, c, Direction::Forward).unwrap(), m2, c, Direction::Forward).unwrap();
        let one = pgl_transform(e, compose_velocities(m1, m2, c), c, Direction::Forward).unwrap();
        let size = (t * t + x * x).sqrt().max(1.0);
        prop_assert!((two.t - one.t).abs() <= 1e-12 * size);
        prop_assert!((two.x - one.x).abs() <= 1e-12 * size);
    }

    #[test]
    fn retarded_time_is_causal_and_on_the_light_cone(
        x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0, t in -10.0f64..10.0,
        mach in 0.0f64..0.99, c in 0.5f64..2.0,
    ) {
        prop_assume!(x * x + y * y + z * z > 1e-6);
        let q = RetardedQuery { x, y, z, t, v_d: mach * c, q: 1.0 };
        let s = retarded_time(&q, c).unwrap();
        prop_assert!(s.tau <= t);
        prop_assert!(rel(c * (t - s.tau), s.r_prime) <= 1e-12);
        prop_assert!(s.residual <= 1e-10);
        prop_assert!(s.relative_gap <= 1e-12);
    }

    #[test]
    fn boosted_dispersion_and_energy_identities(p in params(), mach in 0.0f64..0.99) {
        let k = boosted_kinematics(&p, mach).unwrap();
        prop_assert!(k.dispersion_residual(&p).abs() <= 1e-12);
        prop_assert!(k.energy_momentum_residual(&p).abs() <= 1e-12);
    }

    #[test]
    fn snapshot_round_trip(
        re in prop::collection::vec(-1e6f64..1e6, 16 * 8),
        im in prop::collection::vec(-1e6f64..1e6, 16 * 8),
        dx in 0.01f64..10.0,
    ) {
        let g = Grid::centered_from_spacing(&[16, 8], &[dx, 2.0 * dx]).unwrap();
        let values = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let snap: Snapshot = ComplexField::new(g, values).unwrap().into();
        let back = Snapshot::from_bytes(&snap.to_bytes()).unwrap();
        prop_assert_eq!(back, snap);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn split_step_conserves_norm(
        omega in 0.0f64..2.0, bump in -5.0f64..5.0, k0 in -2.0f64..2.0, steps in 1usize..2000,
    ) {
        let p = PhysicalParams::natural();
        let g = Grid::centered(&[128], &[30.0]).unwrap();
        let v = ScalarField::from_fn(g, |x| 0.5 * omega * omega * x[0] * x[0] + bump * (-x[0] * x[0]).exp());
        let psi0 = gaussian_packet(g, &[0.5], &[1.0], &[k0]).unwrap();
        let cfg = SchrodingerConfig::new(p, g, 0.005, v).unwrap();
        let psi = schrodinger::evolve(&psi0, &cfg, steps).unwrap();
        prop_assert!((psi.norm() / psi0.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn one_dimensional_trajectories_never_cross(seed in any::<u64>(), k0 in -1.0f64..1.0) {
        let p = PhysicalParams::natural();
        let g = Grid::centered(&[128], &[30.0]).unwrap();
        let psi0 = gaussian_packet(g, &[0.0], &[1.0], &[k0]).unwrap();
        let cfg = SchrodingerConfig::free(p, g, 0.005).unwrap();
        let (ens, _) = trajectory::integrate_ensemble(&psi0, &cfg, &EnsembleSpec::new(200, seed), 1.0).unwrap();
        let mut order: Vec<usize> = (0..200).collect();
        order.sort_by(|&a, &b| ens.initial()[a].total_cmp(&ens.initial()[b]));
        let finals = ens.final_positions();
        for w in order.windows(2) {
            prop_assert!(finals[w[0]] <= finals[w[1]]);
        }
    }

    #[test]
    fn seeded_ensembles_are_bit_identical(seed in any::<u64>()) {
        let p = PhysicalParams::natural();
        let g = Grid::centered(&[64], &[20.0]).unwrap();
        let psi0 = gaussian_packet(g, &[0.0], &[1.0], &[0.3]).unwrap();
        let cfg = SchrodingerConfig::free(p, g, 0.01).unwrap();
        let spec = EnsembleSpec::new(64, seed);
        let (a, _) = trajectory::integrate_ensemble(&psi0, &cfg, &spec, 0.2).unwrap();
        let (b, _) = trajectory::integrate_ensemble(&psi0, &cfg, &spec, 0.2).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(a.final_positions()), bits(b.final_positions()));
    }

    #[test]
    fn resolved_configs_round_trip(kind in prop::sample::select(ScenarioKind::ALL.to_vec()), seed in 0..=i64::MAX as u64) {
        let mut cfg = ScenarioConfig::new(kind);
        cfg.seed = seed;
        let resolved = cfg.resolved();
        let text = resolved.to_toml().unwrap();
        let parsed = parse_config(&text).unwrap();
        prop_assert_eq!(parsed.to_toml().unwrap(), text);
    }

    #[test]
    fn unknown_keys_are_rejected(kind in prop::sample::select(ScenarioKind::ALL.to_vec()), key in "[a-z]{3,8}_x") {
        let text = format!("{}\n{key} = 1\n", ScenarioConfig::new(kind).to_toml().unwrap());
        prop_assert!(parse_config(&text).is_err());
    }
}

#[test]
fn seeds_beyond_toml_range_are_rejected() {
    let mut cfg = ScenarioConfig::new(ScenarioKind::Retarded);
    cfg.seed = u64::MAX;
    assert!(cfg.validate().is_err());
}
