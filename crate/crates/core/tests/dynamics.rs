use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringsim::analysis::{compression_temperature, LINEAR_TRAP_EXPONENT};
use ringsim::dynamics::{
    exponential_lifetime, integrate_trajectory, majorana_lifetime_estimate, precess_spin,
    straight_pass_flip_fraction, total_energy, AtomState, IntegratorConfig, MajoranaCloud,
    MajoranaMethod, SpinConfig,
};
use ringsim::magnetics::{
    characterize_trap, quadrupole_gradient, CrossSection, Gravity, GuideGeometry, QuadrupoleGuide,
    TrapOptions, UniformField,
};
use ringsim::{PhysicalConstants, Vec3};

fn b0(c: &PhysicalConstants, g: &GuideGeometry, t: f64) -> (f64, f64) {
    let v = (c.kb() * t / c.mass()).sqrt();
    ((c.hbar() * v / (c.mu_m() * g.gradient())).sqrt(), v)
}

#[test]
fn free_fall_entry_speed() {
    let c = PhysicalConstants::rb87();
    let h = 0.04;
    let t = (2.0 * h / c.g_grav()).sqrt();
    let s0 = AtomState::new(Vec3::new(0.0, 0.0, h), Vec3::zeros(), Vec3::z(), 0.0).unwrap();
    let cfg = IntegratorConfig {
        dt: 1e-5,
        ..IntegratorConfig::default()
    };
    let tr = integrate_trajectory(
        &s0,
        &UniformField(Vec3::new(0.0, 0.0, 1e-4)),
        &c,
        &Gravity::standard(&c),
        &cfg,
        t,
    )
    .unwrap();
    assert!((tr.final_state.velocity.norm() - 0.8857).abs() < 1e-4);
    assert!(tr.final_state.position.z.abs() < 1e-9);
}

#[test]
fn cone_orbit_conserves_energy() {
    let c = PhysicalConstants::rb87();
    let g = GuideGeometry::default();
    let q = QuadrupoleGuide(g);
    let a = c.mu_m() * g.gradient() / c.mass();
    for r0 in [5e-6, 20e-6] {
        let radial = g.separation_axis;
        let v = g.direction.cross(&radial) * (a * r0).sqrt() + g.direction * 0.8;
        let s0 = AtomState::new(g.point + radial * r0, v, Vec3::z(), 0.0).unwrap();
        let period = 2.0 * PI * r0 / (a * r0).sqrt();
        let cfg = IntegratorConfig {
            dt: period / 200.0,
            sample_stride: 1,
            ..IntegratorConfig::default()
        };
        let off = Gravity::off();
        let tr = integrate_trajectory(&s0, &q, &c, &off, &cfg, 0.1).unwrap();
        let e: Vec<f64> = tr
            .samples
            .iter()
            .map(|s| total_energy(s, &q, &c, &off).unwrap())
            .collect();
        let avg = |w: &[f64]| w.iter().sum::<f64>() / w.len() as f64;
        let drift = (avg(&e[e.len() - 200..]) - avg(&e[..200])).abs() / avg(&e[..200]);
        assert!(drift < 1e-6, "{r0} {drift}");
        // the orbit stays circular
        let r_end = (tr.final_state.position - g.point)
            .cross(&g.direction)
            .norm();
        assert!((r_end - r0).abs() < 0.01 * r0);
    }
}

#[test]
fn halving_the_step_cuts_energy_error() {
    let c = PhysicalConstants::rb87();
    let g = GuideGeometry::default();
    let q = QuadrupoleGuide(g);
    let off = Gravity::off();
    let a = c.mu_m() * g.gradient() / c.mass();
    let r0 = 20e-6;
    // slower than circular, so the radius swings
    let radial = g.separation_axis;
    let v = g.direction.cross(&radial) * 0.6 * (a * r0).sqrt();
    let s0 = AtomState::new(g.point + radial * r0, v, Vec3::z(), 0.0).unwrap();
    let period = 2.0 * PI * r0 / (a * r0).sqrt();
    let err = |dt: f64| {
        let cfg = IntegratorConfig {
            dt,
            sample_stride: 1,
            ..IntegratorConfig::default()
        };
        let tr = integrate_trajectory(&s0, &q, &c, &off, &cfg, 20.0 * period).unwrap();
        let e0 = total_energy(&s0, &q, &c, &off).unwrap();
        tr.samples
            .iter()
            .map(|s| (total_energy(s, &q, &c, &off).unwrap() - e0).abs() / e0)
            .fold(0.0, f64::max)
    };
    let coarse = err(period / 100.0);
    let fine = err(period / 200.0);
    assert!(coarse > 0.0 && coarse >= 3.0 * fine, "{coarse} {fine}");
}

#[test]
fn larmor_precession_angle_and_norm() {
    let c = PhysicalConstants::rb87();
    let spin = SpinConfig::from_constants(&c);
    let bz = 1e-5;
    let span = 20.0 * 2.0 * PI / (spin.gamma * bz);
    let samples: Vec<AtomState> = (0..=200)
        .map(|i| {
            AtomState::new(
                Vec3::zeros(),
                Vec3::zeros(),
                Vec3::z(),
                span * i as f64 / 200.0,
            )
            .unwrap()
        })
        .collect();
    let h = precess_spin(
        &samples,
        &UniformField(Vec3::new(0.0, 0.0, bz)),
        &spin,
        Vec3::x(),
    )
    .unwrap();
    // twenty full turns bring the spin back
    let last = h.spins.last().unwrap();
    assert!((last - Vec3::x()).norm() < 1e-6, "{last:?}");
    assert!(h.max_norm_error < 1e-12);
    assert!(h.flips.is_empty());
}

#[test]
fn flip_fraction_falls_with_impact_parameter() {
    let c = PhysicalConstants::rb87();
    let g = GuideGeometry::default();
    let spin = SpinConfig::from_constants(&c);
    let (b0, v) = b0(&c, &g, 57e-6);
    let mut last = f64::INFINITY;
    let mut fr = Vec::new();
    for k in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let f = straight_pass_flip_fraction(&g, &spin, k * b0, v, 40.0 * b0, 400, 3).unwrap();
        assert!(f <= last + 1e-12, "{fr:?} then {f}");
        fr.push(f);
        last = f;
    }
    assert!(fr[0] > 0.9 && fr[4] < 0.1, "{fr:?}");
}

#[test]
fn larger_loss_radius_shortens_lifetime() {
    let c = PhysicalConstants::rb87();
    let g = GuideGeometry::default();
    let t_ring = compression_temperature(
        57e-6,
        quadrupole_gradient(8.0, 4e-3),
        g.gradient(),
        LINEAR_TRAP_EXPONENT,
    )
    .unwrap();
    let tau = |radius: f64| {
        let trap = characterize_trap(
            &CrossSection::Guide(g),
            &c,
            c.kb() * t_ring,
            &TrapOptions {
                loss_radius_override: Some(radius),
                ..TrapOptions::default()
            },
        )
        .unwrap();
        let cloud = MajoranaCloud {
            n: 200,
            temperature: t_ring,
            duration: 0.3,
            mixing_time: Some(0.02),
            bound: true,
            ..MajoranaCloud::default()
        };
        majorana_lifetime_estimate(&cloud, &g, &trap, &c, MajoranaMethod::LossDisk).unwrap()
    };
    let a = tau(0.6e-6);
    let b = tau(1.2e-6);
    let gap = a.tau - b.tau;
    let se = a.sigma.hypot(b.sigma);
    assert!(
        gap > 2.0 * se,
        "{} ± {} vs {} ± {}",
        a.tau,
        a.sigma,
        b.tau,
        b.sigma
    );
    assert!(a.majorana_losses > 20);
}

#[test]
fn compression_follows_adiabatic_invariant() {
    // E^{3/2}/B' fixed: 57 µK, 0.8 T/m -> 18.14 T/m
    let g_in = quadrupole_gradient(8.0, 4e-3);
    let g_out = quadrupole_gradient(8.0, 840e-6);
    let t = compression_temperature(57e-6, g_in, g_out, LINEAR_TRAP_EXPONENT).unwrap();
    let invariant = |t: f64, g: f64| t.powf(1.5) / g;
    assert!((invariant(t, g_out) - invariant(57e-6, g_in)).abs() < 1e-9 * invariant(57e-6, g_in));
    assert!((t * 1e6 - 456.6).abs() < 0.5, "{}", t * 1e6);
}

#[test]
fn censored_exponential_mle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let tau = 0.18;
    let cut = 0.5;
    let data: Vec<(f64, bool)> = (0..20_000)
        .map(|_| {
            let t = -tau * rng.random::<f64>().ln();
            if t < cut {
                (t, true)
            } else {
                (cut, false)
            }
        })
        .collect();
    let (est, sigma) = exponential_lifetime(&data);
    assert!((est - tau).abs() < 3.0 * sigma, "{est} ± {sigma}");
    assert!(exponential_lifetime(&[(1.0, false)]).0.is_infinite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn spin_norm_is_preserved(bx in -1e-4f64..1e-4, by in -1e-4f64..1e-4, bz in 1e-6f64..1e-4, seed in 0u64..1000) {
        let c = PhysicalConstants::rb87();
        let spin = SpinConfig::from_constants(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s0 = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0).normalize();
        let samples: Vec<AtomState> = (0..=10)
            .map(|i| AtomState::new(Vec3::zeros(), Vec3::zeros(), Vec3::z(), 1e-4 * i as f64).unwrap())
            .collect();
        let h = precess_spin(&samples, &UniformField(Vec3::new(bx, by, bz)), &spin, s0).unwrap();
        prop_assert!(h.max_norm_error < 1e-12);
        // the projection on a static field is conserved
        let bhat = Vec3::new(bx, by, bz).normalize();
        for s in &h.spins {
            prop_assert!((s.dot(&bhat) - s0.dot(&bhat)).abs() < 1e-9);
        }
    }
}
