//! C99-style hexadecimal float text (`%a`), exact for every finite `f64`.

const MANT_BITS: u32 = 52;
const MANT_MASK: u64 = (1 << MANT_BITS) - 1;

/// Formats as `[-]0x1.<hex>p<exp>` (normal), `[-]0x0.<hex>p-1022`
/// (subnormal), `[-]0x0p+0`, `inf` / `-inf` or `nan`. Trailing zero digits
/// of the fraction are dropped.
pub fn format_hex(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    let sign = if v.is_sign_negative() { "-" } else { "" };
    if v.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = v.to_bits();
    let biased = ((bits >> MANT_BITS) & 0x7ff) as i32;
    let mant = bits & MANT_MASK;
    if biased == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let frac = format!("{mant:013x}");
    let frac = frac.trim_end_matches('0');
    let exp_sign = if exp < 0 { '-' } else { '+' };
    if frac.is_empty() {
        format!("{sign}0x{lead}p{exp_sign}{}", exp.abs())
    } else {
        format!("{sign}0x{lead}.{frac}p{exp_sign}{}", exp.abs())
    }
}

/// Parses text produced by [`format_hex`]. Returns `None` for anything else
/// (non-canonical leading digit, more than 13 fraction digits, out-of-range
/// exponent).
pub fn parse_hex(text: &str) -> Option<f64> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let signed = |v: f64| if neg { -v } else { v };
    match body {
        "inf" => return Some(signed(f64::INFINITY)),
        "nan" => return Some(f64::NAN),
        _ => {}
    }
    let body = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X"))?;
    let (mantissa, exponent) = body.split_once(['p', 'P'])?;
    let exp: i32 = exponent.parse().ok()?;
    let (lead, frac) = match mantissa.split_once('.') {
        Some((l, f)) => (l, f),
        None => (mantissa, ""),
    };
    if frac.len() > 13 || !frac.chars().all(|c| c.is_ascii_hexdigit()) {
        return None;
    }
    let frac_bits = if frac.is_empty() {
        0
    } else {
        u64::from_str_radix(frac, 16).ok()? << (4 * (13 - frac.len()))
    };
    let bits = match lead {
        "1" => {
            if !(-1022..=1023).contains(&exp) {
                return None;
            }
            (((exp + 1023) as u64) << MANT_BITS) | frac_bits
        }
        "0" => {
            if frac_bits == 0 {
                if exp != 0 {
                    return None;
                }
                0
            } else if exp == -1022 {
                frac_bits
            } else {
                return None;
            }
        }
        _ => return None,
    };
    Some(signed(f64::from_bits(bits)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(format_hex(1.0), "0x1p+0");
        assert_eq!(format_hex(3.0), "0x1.8p+1");
        assert_eq!(format_hex(-0.25), "-0x1p-2");
        assert_eq!(format_hex(0.0), "0x0p+0");
        assert_eq!(format_hex(f64::INFINITY), "inf");
        assert_eq!(format_hex(f64::MIN_POSITIVE / 2.0), "0x0.8p-1022");
        assert_eq!(parse_hex("0x1.8p+1"), Some(3.0));
        assert_eq!(parse_hex("-0x0p+0").map(f64::to_bits), Some((-0.0f64).to_bits()));
        assert_eq!(parse_hex("1.5"), None);
        assert_eq!(parse_hex("0x2p+0"), None);
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(!v.is_nan());
            let back = parse_hex(&format_hex(v)).unwrap();
            prop_assert_eq!(back.to_bits(), bits);
        }
    }
}
