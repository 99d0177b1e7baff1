//! Dead loads on the lattice.

use crate::chain::{LatticeConfig, LatticeFunction};
use crate::error::{Error, Result};

/// Experiment load: `−0.4(1 + 1/(2εℓ))` for `−L ≤ ℓ < 0`, mirrored
/// antisymmetrically for `0 < ℓ ≤ L`, zero elsewhere.
pub fn paper6(cfg: &LatticeConfig, l: usize) -> Result<LatticeFunction> {
    let li = l as i64;
    if li + 5 >= cfg.n as i64 {
        return Err(Error::Config(format!(
            "L = {l} leaves no unloaded band for N = {}",
            cfg.n
        )));
    }
    let e = cfg.eps;
    let f = LatticeFunction::from_fn(cfg.n, |k| {
        if (-li..0).contains(&k) {
            -0.4 * (1.0 + 1.0 / (2.0 * e * k as f64))
        } else if (1..=li).contains(&k) {
            0.4 * (1.0 - 1.0 / (2.0 * e * k as f64))
        } else {
            0.0
        }
    });
    debug_assert!((1..=li).all(|k| f.at(k) == -f.at(-k)));
    if !f.is_mean_zero() {
        return Err(Error::Config("builtin load is not mean-zero".into()));
    }
    Ok(f)
}

/// Load from `(label, value)` pairs; unlisted sites get zero.
pub fn tabulated(cfg: &LatticeConfig, entries: &[(i64, f64)]) -> Result<LatticeFunction> {
    let mut f = LatticeFunction::zeros(cfg.n);
    for &(l, v) in entries {
        if l < cfg.min_label() || l > cfg.max_label() {
            return Err(Error::Config(format!("load label {l} outside the lattice")));
        }
        if !v.is_finite() {
            return Err(Error::Config(format!("load value at {l} is not finite")));
        }
        f.set(l, v);
    }
    if !f.is_mean_zero() {
        return Err(Error::Config(format!(
            "tabulated load is not mean-zero (mean {:e})",
            f.mean()
        )));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_load_is_antisymmetric_and_compressive() {
        let cfg = LatticeConfig::canonical(80, 1.0).unwrap();
        let f = paper6(&cfg, 32).unwrap();
        assert_eq!(f.at(0), 0.0);
        for k in 1..=32 {
            assert_eq!(f.at(k), -f.at(-k));
            assert!(f.at(k) < 0.0);
        }
        for k in 33..=80 {
            assert_eq!(f.at(k), 0.0);
            assert_eq!(f.at(-k), 0.0);
        }
        assert!((f.at(-1) - (-0.4 * (1.0 - 40.0))).abs() < 1e-12);
    }

    #[test]
    fn tabulated_checks() {
        let cfg = LatticeConfig::canonical(8, 1.0).unwrap();
        assert!(tabulated(&cfg, &[(1, 1.0), (-1, -1.0)]).is_ok());
        assert!(tabulated(&cfg, &[(1, 1.0)]).is_err());
        assert!(tabulated(&cfg, &[(9, 0.0)]).is_err());
    }
}
