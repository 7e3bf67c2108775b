//! Number formatting for report files.

/// Significant digits of every reported number.
pub const SIGNIFICANT_DIGITS: usize = 10;

/// `x` to 10 significant digits in the shorter of fixed and scientific notation, trailing
/// zeros removed (the C `%.10g` convention). Negative zero prints as `0`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

/// Spread given as a decimal, in basis points with one decimal.
pub fn fmt_bp(spread: f64) -> String {
    let bp = spread * 1e4;
    let s = format!("{bp:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

/// Shortest representation that parses back to the same `f64`, for machine-readable dumps.
pub fn fmt_exact(x: f64) -> String {
    format!("{x:e}")
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
