//! Parsers for the compact command-line value forms.

use resolvent_core::{Complex64, Grid};

/// `re,im` or a bare real number.
pub fn complex(s: &str) -> Result<Complex64, String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("invalid number {t:?} in {s:?}"))
    };
    let z = match s.split_once(',') {
        Some((re, im)) => Complex64::new(parse(re)?, parse(im)?),
        None => Complex64::new(parse(s)?, 0.0),
    };
    if !z.is_finite() {
        return Err(format!("non-finite value {s:?}"));
    }
    Ok(z)
}

/// `NRxNA`, e.g. `64x256`.
pub fn grid_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NRxNA, got {s:?}"))?;
    let nr: usize = a.trim().parse().map_err(|_| format!("bad radius count in {s:?}"))?;
    let na: usize = b.trim().parse().map_err(|_| format!("bad angle count in {s:?}"))?;
    if nr == 0 || na == 0 {
        return Err(format!("grid dimensions must be positive, got {s:?}"));
    }
    Ok((nr, na))
}

pub fn grid(dims: (usize, usize), radius: f64) -> Grid {
    Grid::new(dims.0, dims.1, radius)
}

/// Parsed `a:b:step` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep(pub Vec<f64>);

/// Parsed seed list.
#[derive(Debug, Clone, PartialEq)]
pub struct Seeds(pub Vec<u64>);

/// `a:b:step`, inclusive of `b` up to rounding.
pub fn sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(format!("expected a:b:step, got {s:?}"));
    };
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("invalid number {t:?} in {s:?}"))
    };
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(format!("sweep needs a <= b and step > 0, got {s:?}"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(format!("sweep {s:?} has too many points"));
    }
    Ok(Sweep((0..=n).map(|k| a + step * k as f64).collect()))
}

/// Comma-separated seeds with optional inclusive ranges: `1-20,25`.
pub fn seeds(s: &str) -> Result<Seeds, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || format!("invalid seed list entry {part:?}");
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
                let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
                if hi < lo {
                    return Err(bad());
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err("empty seed list".into());
    }
    Ok(Seeds(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(complex("0.5,0").unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(complex("-1e-3, 2").unwrap(), Complex64::new(-1e-3, 2.0));
        assert_eq!(complex("3").unwrap(), Complex64::new(3.0, 0.0));
        assert!(complex("a,b").is_err());
        assert!(complex("nan,0").is_err());
    }

    #[test]
    fn sweeps() {
        assert_eq!(sweep("1:2:0.5").unwrap().0, vec![1.0, 1.5, 2.0]);
        let v = sweep("0.1:0.3:0.1").unwrap();
        assert_eq!(v.0.len(), 3);
        assert!(sweep("2:1:0.5").is_err());
        assert!(sweep("1:2").is_err());
    }

    #[test]
    fn seed_lists() {
        assert_eq!(seeds("1-3,7").unwrap().0, vec![1, 2, 3, 7]);
        assert!(seeds("3-1").is_err());
        assert!(seeds("").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(grid_dims("64x256").unwrap(), (64, 256));
        assert!(grid_dims("0x3").is_err());
        assert!(grid_dims("64").is_err());
    }
}
