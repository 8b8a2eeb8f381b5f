/// Complete elliptic integrals `(K(m), E(m))` of parameter `m = k^2`, by the
/// arithmetic-geometric mean.
pub fn complete_elliptic(m: f64) -> (f64, f64) {
    debug_assert!((0.0..1.0).contains(&m), "parameter {m} outside [0, 1)");
    let mut a = 1.0;
    let mut b = (1.0 - m).sqrt();
    let mut c = m.sqrt();
    let mut pow2 = 0.5;
    let mut sum = pow2 * c * c;
    for _ in 0..40 {
        if c.abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        c = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = an;
        pow2 *= 2.0;
        sum += pow2 * c * c;
    }
    let k = std::f64::consts::FRAC_PI_2 / a;
    (k, k * (1.0 - sum))
}
