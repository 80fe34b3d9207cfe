//! Grid syntax shared by every subcommand: `a..b`, `a..b..step` or `x,y,z`.

use std::str::FromStr;

fn parse_one<T: FromStr>(text: &str) -> Result<T, String> {
    text.trim()
        .parse()
        .map_err(|_| format!("cannot parse '{}' as a number", text.trim()))
}

fn split_range(text: &str) -> Option<Vec<&str>> {
    text.contains("..").then(|| text.split("..").collect())
}

pub fn int_grid(text: &str) -> Result<Vec<u32>, String> {
    let out: Vec<u32> = match split_range(text) {
        Some(parts) => {
            let (a, b, step) = match parts.as_slice() {
                [a, b] => (parse_one(a)?, parse_one(b)?, 1),
                [a, b, s] => (parse_one(a)?, parse_one(b)?, parse_one(s)?),
                _ => return Err(format!("malformed range '{text}'")),
            };
            if step == 0 {
                return Err("range step must be positive".into());
            }
            (a..=b).step_by(step as usize).collect()
        }
        None => text
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(parse_one)
            .collect::<Result<_, _>>()?,
    };
    if out.is_empty() {
        return Err(format!("grid '{text}' is empty"));
    }
    Ok(out)
}

pub fn float_grid(text: &str) -> Result<Vec<f64>, String> {
    let out: Vec<f64> = match split_range(text) {
        Some(parts) => {
            let (a, b, step): (f64, f64, f64) = match parts.as_slice() {
                [a, b, s] => (parse_one(a)?, parse_one(b)?, parse_one(s)?),
                [_, _] => return Err(format!("real range '{text}' needs a step: a..b..step")),
                _ => return Err(format!("malformed range '{text}'")),
            };
            if !(step > 0.0 && step.is_finite() && a.is_finite() && b.is_finite()) {
                return Err("range step must be positive and bounds finite".into());
            }
            let n = ((b - a) / step + 1e-9).floor();
            if n < 0.0 {
                return Err(format!("range '{text}' is empty"));
            }
            // Snap to 12 significant digits so 0.1 + 2·0.1 prints as 0.3.
            (0..=n as u64)
                .map(|i| {
                    let x = a + i as f64 * step;
                    format!("{x:.11e}").parse().expect("formatted float parses")
                })
                .collect()
        }
        None => text
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(parse_one)
            .collect::<Result<_, _>>()?,
    };
    if out.is_empty() {
        return Err(format!("grid '{text}' is empty"));
    }
    Ok(out)
}

/// Counts such as `1e6` or `250000`.
pub fn count(text: &str) -> Result<u64, String> {
    if let Ok(n) = text.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = parse_one(text)?;
    if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) {
        Ok(x as u64)
    } else {
        Err(format!("'{text}' is not a nonnegative integer"))
    }
}
