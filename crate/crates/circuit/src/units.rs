//! Numeric literals with SI engineering suffixes.

/// Parses a decimal number with optional exponent and an optional single
/// engineering suffix (`p n u m k M G`).
///
/// Suffixes are case-sensitive: `m` is milli, `M` is mega.
pub fn parse_value(token: &str) -> Option<f64> {
    let token = token.trim();
    let last = token.chars().last()?;
    let (digits, shift) = match last {
        'p' => (&token[..token.len() - 1], -12),
        'n' => (&token[..token.len() - 1], -9),
        'u' => (&token[..token.len() - 1], -6),
        'm' => (&token[..token.len() - 1], -3),
        'k' => (&token[..token.len() - 1], 3),
        'M' => (&token[..token.len() - 1], 6),
        'G' => (&token[..token.len() - 1], 9),
        _ => (token, 0),
    };
    if digits.is_empty() || !digits.starts_with(|c: char| c.is_ascii_digit() || "+-.".contains(c)) {
        return None;
    }
    // Rust's parser accepts "inf"/"nan"; netlists must not.
    if digits.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        return None;
    }
    // The suffix folds into the decimal exponent so `100n` rounds once,
    // exactly like `100e-9`.
    let value: f64 = if shift == 0 {
        digits.parse().ok()?
    } else {
        let (mantissa, exponent) = match digits.find(['e', 'E']) {
            Some(i) => (&digits[..i], digits[i + 1..].parse::<i32>().ok()?),
            None => (digits, 0),
        };
        mantissa.parse::<f64>().ok()?;
        format!("{mantissa}e{}", exponent.checked_add(shift)?).parse().ok()?
    };
    value.is_finite().then_some(value)
}

/// Formats a value so that [`parse_value`] reads back the identical `f64`.
pub fn format_value(value: f64) -> String {
    format!("{value}")
}
