//! Deterministic decimal formatting shared by the CLI and the CSV writers.

use num_complex::Complex64;

use crate::scattering::ScatteringMatrix;

/// Significant digits used for human-facing output.
pub const SIG_DIGITS: usize = 12;

/// `%.{digits}g`-style rendering: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros trimmed. Negative zero prints as `0`.
pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `re+imi` with [`SIG_DIGITS`] significant digits per component.
pub fn complex(z: Complex64) -> String {
    let re = sig(z.re, SIG_DIGITS);
    let im = sig(z.im, SIG_DIGITS);
    if im.starts_with('-') {
        format!("{re}{im}i")
    } else {
        format!("{re}+{im}i")
    }
}

/// One row per line, entries separated by two spaces.
pub fn matrix(m: &ScatteringMatrix) -> String {
    let n = m.dim();
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| complex(m.get(i, j))).collect();
        out.push_str(&row.join("  "));
        out.push('\n');
    }
    out
}
