//! Periodic lattice indexing, lattice functions, finite-difference stencils
//! and the discrete `ℓ^p_ε` norms.
//!
//! Sites carry labels `ℓ ∈ {−N+1, …, N}`; storage is 0-based with index
//! `ℓ + N − 1`. A deformation is stored as its periodic displacement `u`, the
//! affine part `εFℓ` being added analytically so differences are exact
//! across the period seam.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub n: usize,
    pub eps: f64,
    pub f: f64,
}

impl LatticeConfig {
    pub fn new(n: usize, eps: f64, f: f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::Config(format!("N = {n} < 8")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("eps = {eps} must be positive")));
        }
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Config(format!("F = {f} must be positive")));
        }
        Ok(Self { n, eps, f })
    }

    /// `ε = 1/N`.
    pub fn canonical(n: usize, f: f64) -> Result<Self> {
        Self::new(n, 1.0 / n as f64, f)
    }

    /// Number of sites per period, `2N`.
    pub fn sites(&self) -> usize {
        2 * self.n
    }

    pub fn min_label(&self) -> i64 {
        1 - self.n as i64
    }

    pub fn max_label(&self) -> i64 {
        self.n as i64
    }

    pub fn period(&self) -> i64 {
        2 * self.n as i64
    }

    /// Storage index of any integer label, with periodic wrap.
    pub fn index(&self, l: i64) -> usize {
        (l + self.n as i64 - 1).rem_euclid(self.period()) as usize
    }

    pub fn label(&self, i: usize) -> i64 {
        i as i64 + 1 - self.n as i64
    }

    /// Representative of `l` in `{−N+1, …, N}`.
    pub fn normalize(&self, l: i64) -> i64 {
        self.label(self.index(l))
    }

    pub fn labels(&self) -> impl Iterator<Item = i64> {
        self.min_label()..=self.max_label()
    }
}

/// Values on one period of the lattice, indexed by label with periodic wrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeFunction {
    n: usize,
    values: Vec<f64>,
}

impl LatticeFunction {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; 2 * n],
        }
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * n {
            return Err(Error::Config(format!(
                "lattice function needs {} values, got {}",
                2 * n,
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    /// Tabulates `g(ℓ)` over the canonical labels.
    pub fn from_fn(n: usize, mut g: impl FnMut(i64) -> f64) -> Self {
        let values = (0..2 * n).map(|i| g(i as i64 + 1 - n as i64)).collect();
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn idx(&self, l: i64) -> usize {
        (l + self.n as i64 - 1).rem_euclid(2 * self.n as i64) as usize
    }

    pub fn at(&self, l: i64) -> f64 {
        self.values[self.idx(l)]
    }

    pub fn set(&mut self, l: i64, v: f64) {
        let i = self.idx(l);
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Mean-zero within `1e−12 · max|v|`.
    pub fn is_mean_zero(&self) -> bool {
        let s: f64 = self.values.iter().sum();
        s.abs() <= 1e-12 * self.max_abs().max(f64::MIN_POSITIVE) * self.values.len() as f64
    }
}

/// `(D₁y_ℓ, D₂y_ℓ, D₋₁y_ℓ, D₋₂y_ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondStencil {
    pub d1: f64,
    pub d2: f64,
    pub dm1: f64,
    pub dm2: f64,
}

impl BondStencil {
    pub fn new(d1: f64, d2: f64, dm1: f64, dm2: f64) -> Self {
        Self { d1, d2, dm1, dm2 }
    }

    pub fn uniform(f: f64) -> Self {
        Self::new(f, 2.0 * f, -f, -2.0 * f)
    }

    /// Stencil of site `ℓ` from the backward bonds `g_{ℓ−1}, g_ℓ, g_{ℓ+1}, g_{ℓ+2}`.
    pub fn from_bonds(g: [f64; 4]) -> Self {
        Self::new(g[2], g[2] + g[3], -g[1], -g[1] - g[0])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.d1, self.d2, self.dm1, self.dm2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// `(−D₋₁, −D₋₂, −D₁, −D₂)`.
    pub fn reflected(&self) -> Self {
        Self::new(-self.dm1, -self.dm2, -self.d1, -self.d2)
    }

    pub fn is_admissible(&self) -> bool {
        self.d1 > 0.0 && self.d2 > 0.0 && self.dm1 < 0.0 && self.dm2 < 0.0
    }
}

/// A deformation `y_ℓ = εFℓ + u_ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    pub cfg: LatticeConfig,
    pub u: LatticeFunction,
}

impl Deformation {
    pub fn new(cfg: LatticeConfig, u: LatticeFunction) -> Result<Self> {
        if u.n() != cfg.n {
            return Err(Error::Config(
                "displacement size does not match lattice".into(),
            ));
        }
        Ok(Self { cfg, u })
    }

    /// The uniform state `y^F`.
    pub fn affine(cfg: LatticeConfig) -> Self {
        Self {
            cfg,
            u: LatticeFunction::zeros(cfg.n),
        }
    }

    pub fn y(&self, l: i64) -> f64 {
        self.cfg.eps * self.cfg.f * l as f64 + self.u.at(l)
    }

    /// Backward bond `y'_m = (y_m − y_{m−1})/ε`.
    pub fn bond(&self, m: i64) -> f64 {
        self.cfg.f + (self.u.at(m) - self.u.at(m - 1)) / self.cfg.eps
    }

    /// All backward bonds, indexed by the label of their right end.
    pub fn bonds(&self) -> LatticeFunction {
        LatticeFunction::from_fn(self.cfg.n, |m| self.bond(m))
    }

    pub fn min_forward_gap(&self) -> f64 {
        self.cfg
            .labels()
            .map(|m| self.bond(m))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn diff_stencil(y: &Deformation, l: i64) -> BondStencil {
    let e = y.cfg.eps;
    let y0 = y.y(l);
    BondStencil::new(
        (y.y(l + 1) - y0) / e,
        (y.y(l + 2) - y0) / e,
        (y.y(l - 1) - y0) / e,
        (y.y(l - 2) - y0) / e,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

/// `‖v‖_{ℓ^p_ε(D)}` over the labels in `set`.
pub fn lp_norm<I>(v: &LatticeFunction, p: Norm, set: I, eps: f64) -> Result<f64>
where
    I: IntoIterator<Item = i64>,
{
    let mut count = 0usize;
    let mut acc = 0.0f64;
    for l in set {
        let x = v.at(l).abs();
        count += 1;
        match p {
            Norm::L1 => acc += eps * x,
            Norm::L2 => acc += eps * x * x,
            Norm::Inf => acc = acc.max(x),
        }
    }
    if count == 0 {
        return Err(Error::EmptySet);
    }
    Ok(if p == Norm::L2 { acc.sqrt() } else { acc })
}

/// `(ε Σ x²)^{1/2}` of a plain slice.
pub fn l2_eps(values: impl IntoIterator<Item = f64>, eps: f64) -> f64 {
    (eps * values.into_iter().map(|x| x * x).sum::<f64>()).sqrt()
}

pub fn project_mean_zero(v: &LatticeFunction) -> LatticeFunction {
    let m = v.mean();
    let mut w = v.clone();
    w.values_mut().iter_mut().for_each(|x| *x -= m);
    w
}
