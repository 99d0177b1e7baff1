//! Site potentials `V(D₁, D₂, D₋₁, D₋₂)` with analytic first and second
//! partials, the Cauchy–Born density `W(F) = V(F, 2F, −F, −2F)`, and the
//! second-derivative ratio diagnostics.
//!
//! Component order everywhere is `(1, 2, −1, −2)`, i.e. indices `0..4`.

use serde::{Deserialize, Serialize};

use crate::chain::BondStencil;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialModel {
    /// `½Σφ(r_i) + F̃(Σψ(r_i))` over the four bond lengths.
    Eam {
        a: f64,
        b: f64,
        c: f64,
        rho0: f64,
    },
    /// Pair potential with `φ(r) = e^{−2a(r−1)} − 2e^{−a(r−1)}`.
    Morse {
        a: f64,
    },
    /// Pair potential with `φ(r) = r^{−12} − 2r^{−6}`.
    #[serde(alias = "lj")]
    LennardJones {},
    /// `(k1/4)[(r₁−1)² + (r₋₁−1)²] + (k2/4)[(r₂−2)² + (r₋₂−2)²]`.
    Harmonic {
        k1: f64,
        k2: f64,
    },
    Scaled {
        s: f64,
        inner: Box<PotentialModel>,
    },
}

pub type Hess4 = [[f64; 4]; 4];

const SIGN: [f64; 4] = [1.0, 1.0, -1.0, -1.0];
const CB_DIR: [f64; 4] = [1.0, 2.0, -1.0, -2.0];

/// `(f, f', f'')` of a scalar function.
#[derive(Debug, Clone, Copy)]
struct Jet(f64, f64, f64);

impl PotentialModel {
    /// The EAM instance used in the experiments.
    pub fn eam_paper() -> Self {
        PotentialModel::Eam {
            a: 4.4,
            b: 3.0,
            c: 5.0,
            rho0: 6.0 * (-3.0f64).exp(),
        }
    }

    pub fn morse_paper() -> Self {
        PotentialModel::Morse { a: 5.0 }
    }

    pub fn harmonic(k1: f64) -> Self {
        PotentialModel::Harmonic { k1, k2: 0.0 }
    }

    pub fn scaled(self, s: f64) -> Self {
        PotentialModel::Scaled {
            s,
            inner: Box::new(self),
        }
    }

    pub fn name(&self) -> String {
        match self {
            PotentialModel::Eam { .. } => "eam".into(),
            PotentialModel::Morse { .. } => "morse".into(),
            PotentialModel::LennardJones {} => "lennard_jones".into(),
            PotentialModel::Harmonic { .. } => "harmonic".into(),
            PotentialModel::Scaled { inner, .. } => format!("scaled_{}", inner.name()),
        }
    }

    pub fn is_pair(&self) -> bool {
        match self {
            PotentialModel::Eam { .. } => false,
            PotentialModel::Scaled { inner, .. } => inner.is_pair(),
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            PotentialModel::Eam { a, b, c, rho0 } => [a, b, c, rho0].iter().all(|x| x.is_finite()),
            PotentialModel::Morse { a } => a.is_finite() && *a > 0.0,
            PotentialModel::LennardJones {} => true,
            PotentialModel::Harmonic { k1, k2 } => k1.is_finite() && k2.is_finite(),
            PotentialModel::Scaled { s, inner } => {
                inner.validate()?;
                s.is_finite() && *s > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid potential parameters: {self:?}"
            )))
        }
    }

    fn pair_jet(&self, slot: usize, r: f64) -> Jet {
        match self {
            PotentialModel::Eam { a, .. } | PotentialModel::Morse { a } => {
                let e1 = (-a * (r - 1.0)).exp();
                let e2 = e1 * e1;
                Jet(
                    e2 - 2.0 * e1,
                    -2.0 * a * e2 + 2.0 * a * e1,
                    4.0 * a * a * e2 - 2.0 * a * a * e1,
                )
            }
            PotentialModel::LennardJones {} => {
                let r2 = 1.0 / (r * r);
                let r6 = r2 * r2 * r2;
                let r12 = r6 * r6;
                Jet(
                    r12 - 2.0 * r6,
                    (-12.0 * r12 + 12.0 * r6) / r,
                    (156.0 * r12 - 84.0 * r6) * r2,
                )
            }
            PotentialModel::Harmonic { k1, k2 } => {
                let (k, r0) = if slot % 2 == 0 {
                    (*k1, 1.0)
                } else {
                    (*k2, 2.0)
                };
                Jet(0.5 * k * (r - r0) * (r - r0), k * (r - r0), k)
            }
            PotentialModel::Scaled { .. } => unreachable!(),
        }
    }

    /// Value, gradient and Hessian at `g`.
    pub fn eval2(&self, g: &BondStencil) -> Result<(f64, [f64; 4], Hess4)> {
        if let PotentialModel::Scaled { s, inner } = self {
            let (v, mut d, mut h) = inner.eval2(g)?;
            d.iter_mut().for_each(|x| *x *= s);
            h.iter_mut().flatten().for_each(|x| *x *= s);
            return Ok((s * v, d, h));
        }
        let x = g.as_array();
        let r = [x[0], x[1], -x[2], -x[3]];
        if r.iter().any(|&ri| !(ri > 0.0 && ri.is_finite())) {
            return Err(Error::Domain(format!("inadmissible stencil {g:?}")));
        }
        let mut v = 0.0;
        let mut d = [0.0; 4];
        let mut h = [[0.0; 4]; 4];
        for i in 0..4 {
            let p = self.pair_jet(i, r[i]);
            v += 0.5 * p.0;
            d[i] += SIGN[i] * 0.5 * p.1;
            h[i][i] += 0.5 * p.2;
        }
        if let PotentialModel::Eam { b, c, rho0, .. } = self {
            let psi: Vec<Jet> = r
                .iter()
                .map(|&ri| {
                    let e = (-b * ri).exp();
                    Jet(e, -b * e, b * b * e)
                })
                .collect();
            let t = psi.iter().map(|p| p.0).sum::<f64>() - rho0;
            let emb = Jet(
                c * (t * t + t * t * t * t),
                c * (2.0 * t + 4.0 * t * t * t),
                c * (2.0 + 12.0 * t * t),
            );
            v += emb.0;
            for i in 0..4 {
                d[i] += SIGN[i] * emb.1 * psi[i].1;
                h[i][i] += emb.1 * psi[i].2;
                for j in 0..=i {
                    let c = SIGN[i] * SIGN[j] * emb.2 * psi[i].1 * psi[j].1;
                    h[i][j] += c;
                    if j != i {
                        h[j][i] += c;
                    }
                }
            }
        }
        if !v.is_finite() || d.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite potential at {g:?}")));
        }
        Ok((v, d, h))
    }

    pub fn eval(&self, g: &BondStencil) -> Result<f64> {
        Ok(self.eval2(g)?.0)
    }

    pub fn grad(&self, g: &BondStencil) -> Result<[f64; 4]> {
        Ok(self.eval2(g)?.1)
    }

    pub fn hess(&self, g: &BondStencil) -> Result<Hess4> {
        Ok(self.eval2(g)?.2)
    }

    /// `(W, W′, W″)` at `F`; `W″` uses the eight-term expansion valid at
    /// reflection-symmetric stencils.
    pub fn cauchy_born(&self, f: f64) -> Result<(f64, f64, f64)> {
        if !(f > 0.0) {
            return Err(Error::Domain(format!("F = {f} must be positive")));
        }
        let (v, d, h) = self.eval2(&BondStencil::uniform(f))?;
        let w1 = (0..4).map(|i| CB_DIR[i] * d[i]).sum::<f64>();
        let w2 = 2.0 * h[0][0] + 8.0 * h[1][1] - 2.0 * h[0][2] + 4.0 * h[0][1] - 4.0 * h[1][2]
            + 4.0 * h[2][3]
            - 4.0 * h[0][3]
            - 8.0 * h[1][3];
        Ok((v, w1, w2))
    }

    /// `W″` as the full quadratic form `cᵀ∇²V c` with `c = (1, 2, −1, −2)`.
    pub fn cauchy_born_w2_quadratic(&self, f: f64) -> Result<f64> {
        let h = self.hess(&BondStencil::uniform(f))?;
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += CB_DIR[i] * h[i][j] * CB_DIR[j];
            }
        }
        Ok(s)
    }
}

/// Index pairs of the interaction groups.
pub const NN_DIAG: [(usize, usize); 2] = [(0, 0), (2, 2)];
/// `±(1,−1), ±(2,2)`.
pub const S_NNN1: [(usize, usize); 3] = [(0, 2), (1, 1), (3, 3)];
/// `±(1,2), ±(2,1), ±(−2,1), ±(−1,2)`.
pub const S_NNN2: [(usize, usize); 4] = [(0, 1), (2, 3), (0, 3), (1, 2)];
/// `±(2,−2)`.
pub const S_NNN3: [(usize, usize); 1] = [(1, 3)];

/// A ratio that may be unbounded; serialises as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    Unbounded,
}

impl Ratio {
    pub fn of(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Ratio::Unbounded
        } else {
            Ratio::Finite(num / den)
        }
    }

    pub fn at_least(&self, x: f64) -> bool {
        match self {
            Ratio::Finite(v) => *v >= x,
            Ratio::Unbounded => true,
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ratio::Finite(v) => write!(f, "{v}"),
            Ratio::Unbounded => write!(f, "inf"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ratio::Finite(v) => s.serialize_f64(*v),
            Ratio::Unbounded => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
    Zero,
    Mixed,
}

impl Sign {
    fn of(values: &[f64]) -> Self {
        let pos = values.iter().any(|&v| v > 0.0);
        let neg = values.iter().any(|&v| v < 0.0);
        match (pos, neg) {
            (true, false) => Sign::Positive,
            (false, true) => Sign::Negative,
            (false, false) => Sign::Zero,
            (true, true) => Sign::Mixed,
        }
    }
}

/// Sign and range of `|∂_{ij}V|` for one derivative group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupStats {
    pub sign: Sign,
    pub min_abs: f64,
    pub max_abs: f64,
}

impl GroupStats {
    fn of(values: &[f64]) -> Self {
        let abs = values.iter().map(|v| v.abs());
        Self {
            sign: Sign::of(values),
            min_abs: abs.clone().fold(f64::INFINITY, f64::min),
            max_abs: abs.fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignTable {
    pub d11: GroupStats,
    pub d1m1: GroupStats,
    pub d22: GroupStats,
    pub d12: GroupStats,
    pub d2m2: GroupStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeRatios {
    pub r1: Ratio,
    pub r2: Ratio,
    pub r3: Ratio,
    pub m2_nn: f64,
    pub big_m2_nn: f64,
    pub m2_nnn: f64,
    pub big_m2_nnn: f64,
    pub sign_table: SignTable,
}

fn collect(hs: &[Hess4], set: &[(usize, usize)]) -> Vec<f64> {
    hs.iter()
        .flat_map(|h| set.iter().map(move |&(i, j)| h[i][j]))
        .collect()
}

fn inf_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min)
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn assumption_ratios(
    model: &PotentialModel,
    stencils: &[BondStencil],
) -> Result<DerivativeRatios> {
    if stencils.is_empty() {
        return Err(Error::EmptySet);
    }
    let hs = stencils
        .iter()
        .map(|s| model.hess(s))
        .collect::<Result<Vec<_>>>()?;
    let nn = collect(&hs, &NN_DIAG);
    let s1 = collect(&hs, &S_NNN1);
    let s2 = collect(&hs, &S_NNN2);
    let s3 = collect(&hs, &S_NNN3);
    Ok(DerivativeRatios {
        r1: Ratio::of(inf_abs(&nn), sup_abs(&s1)),
        r2: Ratio::of(inf_abs(&s1), sup_abs(&s2)),
        r3: Ratio::of(inf_abs(&s2), sup_abs(&s3)),
        m2_nn: inf_abs(&nn),
        big_m2_nn: sup_abs(&nn),
        m2_nnn: inf_abs(&s1),
        big_m2_nnn: sup_abs(&s1),
        sign_table: SignTable {
            d11: GroupStats::of(&nn),
            d1m1: GroupStats::of(&collect(&hs, &[(0, 2)])),
            d22: GroupStats::of(&collect(&hs, &[(1, 1), (3, 3)])),
            d12: GroupStats::of(&s2),
            d2m2: GroupStats::of(&s3),
        },
    })
}
