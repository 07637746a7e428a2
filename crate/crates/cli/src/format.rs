//! Byte-stable number and table formatting.

use sha2::{Digest, Sha256};
use srd_core::BoundCurve;

/// Twelve significant digits; plain notation for exponents in `[-5, 12)`,
/// scientific otherwise, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub const CSV_HEADER: &str = "D,R,feasible,winning_term";

fn row(d: f64, rate: Option<f64>, term: Option<&str>) -> String {
    format!(
        "{},{},{},{}",
        fmt_num(d),
        rate.map(fmt_num).unwrap_or_default(),
        u8::from(rate.is_some()),
        term.unwrap_or("")
    )
}

pub fn curve_csv(curve: &BoundCurve) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        out.push_str(&row(p.d, p.rate, p.term.as_deref()));
        out.push('\n');
    }
    out
}

pub fn combined_csv(curves: &[BoundCurve]) -> String {
    let mut out = format!("bound,{CSV_HEADER}\n");
    for c in curves {
        for p in &c.points {
            out.push_str(c.bound.label());
            out.push(',');
            out.push_str(&row(p.d, p.rate, p.term.as_deref()));
            out.push('\n');
        }
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(1.234e-7), "1.234e-7");
        assert_eq!(fmt_num(0.999_999_999_999_9), "1");
        assert_eq!(fmt_num(6.02e23), "6.02e23");
        assert_eq!(fmt_num(-0.25), "-0.25");
    }
}
