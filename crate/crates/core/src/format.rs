//! Number formatting shared by the CSV writers.

/// `x` with `digits` significant digits: fixed notation for moderate
/// magnitudes, scientific otherwise. Zero prints as `0`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let magnitude = x.abs().log10().floor() as i32;
    if (-5..15).contains(&magnitude) {
        let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", digits - 1, x)
    }
}

#[cfg(test)]
mod tests {
    use super::format_sig;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.5, 12), "0.500000000000");
        assert_eq!(format_sig(0.001, 12), "0.00100000000000");
        assert_eq!(format_sig(1.0, 12), "1.00000000000");
        assert_eq!(format_sig(123.456, 4), "123.5");
        assert_eq!(format_sig(3.5e-13, 3), "3.50e-13");
        assert_eq!(format_sig(0.0, 12), "0");
    }
}
