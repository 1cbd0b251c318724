//! Numeric helpers shared across modules: decimal rendering, seeding, and a
//! few vector kernels.

use alloc::string::String;
use core::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Significant digits used by every text format.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Renders `v` with 9 significant digits, `%g` style: fixed notation for
/// decimal exponents in `[-4, 9)`, scientific otherwise, trailing zeros
/// stripped.
pub fn format_value(v: f64) -> String {
    let mut out = String::new();
    push_value(&mut out, v);
    out
}

/// Appends the rendering of [`format_value`] to `out`.
pub fn push_value(out: &mut String, v: f64) {
    if v == 0.0 {
        out.push_str(if v.is_sign_negative() { "-0" } else { "0" });
        return;
    }
    let mut sci = String::new();
    let _ = write!(sci, "{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific rendering has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        let mut fixed = String::new();
        let _ = write!(fixed, "{:.*}", decimals, v);
        out.push_str(strip_zeros(&fixed));
    } else {
        out.push_str(strip_zeros(mantissa));
        let _ = write!(out, "e{}", exp);
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Appends `values` comma-separated.
pub fn push_csv(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_value(out, *v);
    }
}

/// Deterministic generator for `seed`, on an independent stream per `stream`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes several integers into one stream id (splitmix64 finalizer chain).
pub fn mix(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `floor(x + 0.5)`, with a small guard so that products such as `5 * 0.7`
/// that land a hair under `.5` still round up.
pub fn round_half_up(x: f64) -> f64 {
    libm::floor(x + 0.5 + 1e-9)
}

/// Numerically stable `1 / (1 + exp(z))`.
pub fn inv_logistic(z: f64) -> f64 {
    if z >= 0.0 {
        let e = libm::exp(-z);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_nine_significant_digits() {
        assert_eq!(format_value(0.5), "0.5");
        assert_eq!(format_value(1.0 / 3.0), "0.333333333");
        assert_eq!(format_value(2.0 / 3.0), "0.666666667");
        assert_eq!(format_value(1.0), "1");
        assert_eq!(format_value(-12.25), "-12.25");
        assert_eq!(format_value(123456789.0), "123456789");
        assert_eq!(format_value(1234567890.0), "1.23456789e9");
        assert_eq!(format_value(0.0001), "0.0001");
        assert_eq!(format_value(0.00001234), "1.234e-5");
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(1e300), "1e300");
    }

    #[test]
    fn rounding_carry_moves_exponent() {
        // 9.999999999 rounds to 10 at 9 digits
        assert_eq!(format_value(9.9999999999), "10");
        assert_eq!(format_value(999999999.9), "1e9");
    }

    #[test]
    fn rendered_values_parse_back_closely() {
        for &v in &[1.0 / 7.0, -3.0e-7, 6.02214076e23, 4096.125, -0.000123456789] {
            let back: f64 = format_value(v).parse().unwrap();
            assert!(((back - v) / v).abs() < 1e-8, "{v} -> {back}");
        }
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(round_half_up(2.5), 3.0);
        assert_eq!(round_half_up(5.0 * 0.7), 4.0);
        assert_eq!(round_half_up(2.49), 2.0);
    }

    #[test]
    fn inv_logistic_is_stable() {
        assert_eq!(inv_logistic(0.0), 0.5);
        assert!(inv_logistic(800.0) >= 0.0);
        assert_eq!(inv_logistic(-800.0), 1.0);
        assert!(inv_logistic(1.0) < 0.5);
    }
}
