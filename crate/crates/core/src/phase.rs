//! Argument-reduced trigonometry for `e^{iπx}`.

use num_complex::Complex64;

/// `(sin πx, cos πx)` with exact reduction of the argument modulo 2.
pub fn sincospi(x: f64) -> (f64, f64) {
    if !x.is_finite() {
        return (f64::NAN, f64::NAN);
    }
    let r = x - 2.0 * (0.5 * x).round();
    let q = (2.0 * r).round();
    let y = r - 0.5 * q;
    let (s, c) = (std::f64::consts::PI * y).sin_cos();
    match (q as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// `sin(πx)`, exactly zero at integers.
pub fn sinpi(x: f64) -> f64 {
    sincospi(x).0
}

/// `e^{2πiθ}`.
pub fn cis_turns(theta: f64) -> Complex64 {
    let (s, c) = sincospi(2.0 * theta);
    Complex64::new(c, s)
}

/// `∫_a^b e^{2πisx} dx`, computed stably for small and integer `s(b - a)`.
pub fn exp_integral(s: f64, a: f64, b: f64) -> Complex64 {
    let len = b - a;
    if s == 0.0 {
        return Complex64::new(len, 0.0);
    }
    let amp = if (s * len).abs() < 1e-8 {
        len
    } else {
        sinpi(s * len) / (std::f64::consts::PI * s)
    };
    cis_turns(s * 0.5 * (a + b)) * amp
}
