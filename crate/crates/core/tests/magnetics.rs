use std::f64::consts::PI;

use proptest::prelude::*;
use ringsim::magnetics::{
    characterize_trap, divergence_and_curl, field_exact, quadrupole_gradient, CrossSection,
    FieldSource, GuideGeometry, QuadrupoleGuide, RingFrame, RingGeometry, TrapOptions,
    TwoWireGuide,
};
use ringsim::{PhysicalConstants, Vec3};

const MU0: f64 = 4e-7 * PI;

/// Field of two infinite parallel wires along z at x = 0, y = ±d/2.
fn two_wires(p: &Vec3, d: f64, i: f64) -> Vec3 {
    let mut b = Vec3::zeros();
    for y0 in [0.5 * d, -0.5 * d] {
        let r = Vec3::new(p.x, p.y - y0, 0.0);
        b += Vec3::z().cross(&r) * (MU0 * i / (2.0 * PI * r.norm_squared()));
    }
    b
}

#[test]
fn two_wire_magnitude_matches_line_currents() {
    let g = GuideGeometry::new(840e-6, 8.0).unwrap();
    let exact = TwoWireGuide::new(g).unwrap();
    // the guide runs along its own direction; compare magnitudes along the bisector
    for k in [0.05, 0.2, 0.4] {
        let off = g.point + g.separation_axis.cross(&g.direction) * (k * g.separation);
        let b = exact.field(&off, 0.0).unwrap().norm();
        let oracle = two_wires(&Vec3::new(k * g.separation, 0.0, 0.0), g.separation, 8.0).norm();
        assert!((b - oracle).abs() < 1e-6 * oracle, "{b} {oracle}");
    }
}

#[test]
fn saddle_and_gradient_formulas() {
    let c = PhysicalConstants::rb87();
    for (d, i) in [(840e-6, 8.0), (2e-3, 5.0), (500e-6, 2.0)] {
        let g = GuideGeometry::new(d, i).unwrap();
        let t = characterize_trap(
            &CrossSection::Guide(g),
            &c,
            c.kb() * 50e-6,
            &TrapOptions::default(),
        )
        .unwrap();
        let grad = 4.0 * MU0 * i / (PI * d * d);
        assert!((t.gradient_center - grad).abs() < 1e-3 * grad);
        assert!((quadrupole_gradient(i, d) - grad).abs() < 1e-9 * grad);
        let sad = MU0 * i / (PI * d);
        assert!((t.saddle_field - sad).abs() < 1e-3 * sad);
    }
}

#[test]
fn depth_scales_with_moment() {
    let c = PhysicalConstants::rb87();
    let g = GuideGeometry::default();
    let t = characterize_trap(
        &CrossSection::Guide(g),
        &c,
        c.kb() * 50e-6,
        &TrapOptions::default(),
    )
    .unwrap();
    let half = t.depth_kelvin_for(0.5 * c.mu_b(), &c);
    let full = t.depth_kelvin_for(c.mu_b(), &c);
    assert!((full - 2.0 * half).abs() < 1e-12 * full);
    assert!((full * 1e3 - 2.56).abs() < 0.005);
}

#[test]
fn quadrupole_error_is_quadratic() {
    let g = GuideGeometry::default();
    let quad = QuadrupoleGuide(g);
    let exact = TwoWireGuide::new(g).unwrap();
    let err = |k: f64| {
        let p = g.point + g.separation_axis.cross(&g.direction) * (k * g.separation);
        let e = field_exact(&p, exact.elements(), None).unwrap();
        let q = quad.field(&p, 0.0).unwrap();
        (e - q).norm() / q.norm()
    };
    for k in [0.01, 0.02, 0.04] {
        let ratio = err(2.0 * k) / err(k);
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }
}

#[test]
fn ring_zero_close_to_mean_radius() {
    let ring = RingGeometry::default();
    let r0 = ring.zero_radius().unwrap();
    assert!((r0 - ring.radius).abs() < 0.05 * ring.separation);
    let p = ring.frame.point(r0, 1.0, 0.0);
    let b = ring.field(&p, 0.0).unwrap().norm();
    assert!(b < 1e-6, "{b}");
}

fn check_maxwell(src: &dyn FieldSource, p: Vec3) {
    let (div, curl) = divergence_and_curl(src, &p, 0.0, 1e-8).unwrap();
    let scale = 18.14;
    assert!(div.abs() < 1e-6 * scale, "div {div}");
    assert!(curl.norm() < 1e-6 * scale, "curl {}", curl.norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn guides_are_divergence_and_curl_free(
        x in -0.3f64..0.3, y in -0.3f64..0.3, z in -1.0f64..1.0,
    ) {
        let g = GuideGeometry::default();
        let p = Vec3::new(x, y, z) * g.separation;
        check_maxwell(&QuadrupoleGuide(g), p);
        check_maxwell(&TwoWireGuide::new(g).unwrap(), p);
    }

    #[test]
    fn ring_is_divergence_and_curl_free(
        dr in -0.3f64..0.3, phi in 0.0f64..(2.0 * PI), z in -0.3f64..0.3, tilt in 0.0f64..(PI / 2.0),
    ) {
        let ring = RingGeometry { frame: RingFrame::tilted(tilt), ..RingGeometry::default() };
        let d = ring.separation;
        let p = ring.frame.point(ring.zero_radius().unwrap() + dr * d, phi, z * d);
        check_maxwell(&ring, p);
    }

    #[test]
    fn quadrupole_magnitude_is_linear(r in 1e-6f64..100e-6, a in 0.0f64..(2.0 * PI)) {
        let g = GuideGeometry::default();
        let n = g.separation_axis.cross(&g.direction);
        let p = g.point + (g.separation_axis * a.cos() + n * a.sin()) * r;
        let b = QuadrupoleGuide(g).field(&p, 0.0).unwrap().norm();
        let expect = quadrupole_gradient(g.current, g.separation) * r;
        prop_assert!((b - expect).abs() < 1e-9 * expect);
    }
}
