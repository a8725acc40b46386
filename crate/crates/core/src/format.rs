//! Number formatting for emitted tables and JSON.

/// Shortest decimal rendering of `v` rounded to 10 significant digits.
///
/// Reparsing the output and formatting again gives the same string.
pub fn sig10(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.9e}")
        .parse()
        .expect("float formatting round-trips");
    let plain = format!("{rounded}");
    let exp = rounded.abs().log10().floor();
    if (-5.0..16.0).contains(&exp) {
        plain
    } else {
        format!("{rounded:e}")
    }
}

/// `v` rounded to 10 significant digits, as a float.
pub fn round10(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.9e}")
            .parse()
            .expect("float formatting round-trips")
    } else {
        v
    }
}
