use dnoise_core::Rational;
use rug::Integer;

/// Exact rational from `p/q`, an integer, or a decimal such as `0.02` or `1e-6`.
pub fn number(s: &str) -> Result<Rational, String> {
    if let Ok(r) = s.parse::<Rational>() {
        return Ok(r);
    }
    decimal(s).ok_or_else(|| format!("expected a rational p/q or a decimal, got '{s}'"))
}

fn decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mant, exp) = match body.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let mut num: Integer = if digits.is_empty() {
        Integer::new()
    } else {
        digits.parse().ok()?
    };
    if neg {
        num = -num;
    }
    let scale = exp.checked_sub(frac.len() as i32)?;
    if scale.unsigned_abs() > 100_000 {
        return None;
    }
    let ten = Integer::from(Integer::u_pow_u(10, scale.unsigned_abs()));
    if scale >= 0 {
        Some(Rational::from_integer(num * ten))
    } else {
        Rational::new(num, ten).ok()
    }
}

/// Positive integer count.
pub fn count(s: &str) -> Result<u64, String> {
    let r = number(s)?;
    if !r.is_integer() || r.is_negative() {
        return Err(format!("expected a nonnegative integer, got '{s}'"));
    }
    r.numer()
        .to_u64()
        .ok_or_else(|| format!("'{s}' is too large"))
}

pub fn integer(s: &str) -> Result<Integer, String> {
    let r = number(s.trim())?;
    if !r.is_integer() {
        return Err(format!("expected an integer, got '{s}'"));
    }
    Ok(r.numer().clone())
}

/// `a:b:n`, `n` evenly spaced points from `a` to `b` inclusive.
pub fn eps_grid(s: &str) -> Result<Vec<Rational>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("expected a:b:n, got '{s}'"));
    };
    let (a, b, n) = (number(a)?, number(b)?, count(n)?);
    if n == 0 || b < a {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let step = (&b - &a) / Rational::from_integer(n - 1);
    Ok((0..n)
        .map(|i| &a + &(&step * &Rational::from_integer(i)))
        .collect())
}

/// `a:b` or `a:b:step` over integers, inclusive.
pub fn k_grid(s: &str) -> Result<Vec<u32>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let (a, b, step) = match parts[..] {
        [a, b] => (count(a)?, count(b)?, 1),
        [a, b, st] => (count(a)?, count(b)?, count(st)?),
        _ => return Err(format!("expected a:b or a:b:step, got '{s}'")),
    };
    if step == 0 {
        return Err("grid step must be positive".into());
    }
    let to32 = |x: u64| u32::try_from(x).map_err(|_| format!("{x} is too large"));
    (a..=b)
        .step_by(step as usize)
        .filter(|&k| k > 0)
        .map(to32)
        .collect()
}
