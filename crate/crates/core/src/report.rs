//! Locale-independent number formatting for CSV and JSON artifacts.

/// Formats `x` with 9 significant digits, `.` as decimal separator and no
/// trailing zeros. Non-finite values print as `inf`, `-inf` or `nan`.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, round9(x)))
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

/// Rounds `x` to 9 significant digits (identity on non-finite values).
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.8e}", x).parse().expect("round trip")
}

/// JSON number rounded to 9 significant digits; non-finite values become strings.
pub fn json9(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(round9(x))
    } else {
        serde_json::Value::String(sig9(x))
    }
}
