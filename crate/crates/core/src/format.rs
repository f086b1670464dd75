//! Fixed-precision text rendering for reals in CSV output.

/// Significant digits used for every real written to CSV.
pub const SIG_DIGITS: usize = 12;

/// Renders `x` with [`SIG_DIGITS`] significant digits, in positional
/// notation for moderate magnitudes and scientific notation otherwise.
/// Trailing zeros are dropped so equal values always print identically.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), exp)
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
