//! Test functions behind the lower bounds for the residual estimator and a
//! numerical audit of those bounds against an atomistic reference solution.

use serde::Serialize;

use crate::atomistic::AtomisticProblem;
use crate::chain::{BondStencil, Deformation, LatticeFunction};
use crate::coupling::{CoupledProblem, CoupledState};
use crate::error::{Error, Result};
use crate::estimators::{eta_cg, eta_mo, fbar_element, model_residual};
use crate::mesh::{ACMesh, Side};
use crate::potential::assumption_ratios;

/// `C₁ = 4/√3`.
pub fn c1() -> f64 {
    4.0 / 3f64.sqrt()
}

/// `C₂ = 4/√30`.
pub fn c2() -> f64 {
    4.0 / 30f64.sqrt()
}

/// Discrete bubble `4λ¹λ²` on element `(left, right]`, supported on
/// `left+4 ..= right−3`.
pub fn bubble_element(n: usize, left: i64, right: i64) -> Result<LatticeFunction> {
    let len = right - left;
    if len < 8 {
        return Err(Error::Config(format!(
            "bubble needs h ≥ 8ε, element has {len} atoms"
        )));
    }
    let d = (len - 6) as f64;
    let mut b = LatticeFunction::zeros(n);
    for l in left + 4..=right - 3 {
        let l1 = (right - 3 - l) as f64 / d;
        let l2 = (l - left - 3) as f64 / d;
        b.set(l, 4.0 * l1 * l2);
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubbleNorms {
    /// `ε Σ b`.
    pub sum: f64,
    /// `‖b‖²_{ℓ²_ε}`.
    pub l2_sq: f64,
    /// `‖b′‖²_{ℓ²_ε}`.
    pub grad_sq: f64,
    pub max: f64,
}

/// Norms of a lattice function by direct summation.
pub fn lattice_norms(b: &LatticeFunction, eps: f64) -> BubbleNorms {
    let v = b.values();
    let n = v.len();
    let mut out = BubbleNorms {
        sum: 0.0,
        l2_sq: 0.0,
        grad_sq: 0.0,
        max: f64::NEG_INFINITY,
    };
    for i in 0..n {
        let d = (v[i] - v[(i + n - 1) % n]) / eps;
        out.sum += eps * v[i];
        out.l2_sq += eps * v[i] * v[i];
        out.grad_sq += eps * d * d;
        out.max = out.max.max(v[i]);
    }
    out
}

/// Closed forms for the bubble of an element with `h̊ = h − 6ε`.
pub fn bubble_closed_forms(h_ring: f64, eps: f64) -> BubbleNorms {
    let q = eps / h_ring;
    BubbleNorms {
        sum: 2.0 / 3.0 * (1.0 - q * q) * h_ring,
        l2_sq: 8.0 / 15.0 * (1.0 - q.powi(4)) * h_ring,
        grad_sq: 16.0 / 3.0 * (1.0 - q * q) / h_ring,
        max: f64::NAN,
    }
}

/// `ε Σ σ_ℓ w′_ℓ` with the backward difference `w′_ℓ = (w_ℓ − w_{ℓ−1})/ε`.
pub fn pairing(sigma: &LatticeFunction, w: &LatticeFunction) -> f64 {
    let (s, v) = (sigma.values(), w.values());
    let n = v.len();
    (0..n).map(|i| s[i] * (v[i] - v[(i + n - 1) % n])).sum()
}

/// Edge test function at node `k` for the residual pair targeted by `variant`
/// (1: `ℓ_k, ℓ_k+1`; 2: `ℓ_k−1, ℓ_k+2`; 3: `ℓ_k−2, ℓ_k+3`).
pub fn edge_test(
    m: &ACMesh,
    k: usize,
    variant: u8,
    r: &LatticeFunction,
) -> Result<LatticeFunction> {
    if !m.interior_continuum_nodes().contains(&k) {
        return Err(Error::Config(format!(
            "node {k} is not an interior continuum node"
        )));
    }
    if !(1..=3).contains(&variant) {
        return Err(Error::Config(format!(
            "edge test variant {variant} is not 1, 2 or 3"
        )));
    }
    let lk = m.node(k);
    let eps = m.eps;
    let mut w = LatticeFunction::zeros(r.n());
    let left: Vec<i64> = match variant {
        1 => (lk - 3..=lk - 1).collect(),
        2 => (lk - 3..=lk - 2).collect(),
        _ => vec![lk - 3],
    };
    let right: Vec<i64> = match variant {
        1 => (lk + 1..=lk + 3).collect(),
        2 => (lk + 2..=lk + 3).collect(),
        _ => vec![lk + 3],
    };
    for l in left {
        w.set(l, -eps * (r.at(l) + r.at(l + 1)));
    }
    for l in right {
        w.set(l, eps * (r.at(l) + r.at(l + 1)));
    }
    Ok(w)
}

/// Sites `ℓ_{K1−1} ..= ℓ_{K1+2}` (left) or `ℓ_{K2−1} ..= ℓ_{K2+2}` (right).
pub fn interface_residual_sites(m: &ACMesh, side: Side) -> std::ops::RangeInclusive<i64> {
    match side {
        Side::Left => m.a - 2..=m.a + 1,
        Side::Right => m.b..=m.b + 3,
    }
}

/// Cumulative-sum test function with `(w^int)′ = R^mo` on the interface
/// residual sites.
pub fn interface_test(m: &ACMesh, side: Side, r: &LatticeFunction) -> LatticeFunction {
    let eps = m.eps;
    let mut w = LatticeFunction::zeros(r.n());
    let sites = interface_residual_sites(m, side);
    match side {
        Side::Left => {
            let mut acc = 0.0;
            for l in sites {
                acc += eps * r.at(l);
                w.set(l, acc);
            }
        }
        Side::Right => {
            let (lo, hi) = (*sites.start(), *sites.end());
            let mut acc = 0.0;
            for l in (lo..=hi).rev() {
                w.set(l, -acc);
                acc += eps * r.at(l);
            }
            w.set(lo - 1, -acc);
        }
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    /// Element or node index.
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub applicable: bool,
}

impl BoundCheck {
    fn new(index: usize, lhs: f64, rhs: f64, applicable: bool) -> Self {
        Self {
            index,
            lhs,
            rhs,
            margin: rhs - lhs,
            applicable,
        }
    }

    /// Violated beyond rounding.
    pub fn violated(&self) -> bool {
        self.applicable && self.margin < -(1e-10 * self.lhs.abs().max(self.rhs.abs()) + 1e-13)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterfaceCheck {
    pub side: &'static str,
    /// Whole interface node estimator; applicable when the adjacent element
    /// has at least 8 atoms.
    pub total: BoundCheck,
    /// Part over the four interface residual sites.
    pub atomistic_part: BoundCheck,
}

/// Runs of consecutive continuum elements shorter than `8ε`, compared with
/// unit constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GluedReport {
    pub elements: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyConstants {
    pub m2_nn: f64,
    pub c_cg_1: f64,
    pub c_cg_2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyAudit {
    pub constants: EfficiencyConstants,
    pub cg: Vec<BoundCheck>,
    pub mo: Vec<BoundCheck>,
    pub interface: Vec<InterfaceCheck>,
    pub lipschitz: Vec<BoundCheck>,
    pub glued: Vec<GluedReport>,
    pub violations: usize,
    pub lipschitz_violations: usize,
    /// Smallest applicable `margin / max(rhs, lhs)`, ignoring checks at rounding level.
    pub worst_relative_margin: f64,
    pub ok: bool,
}

/// `D_T = h_T / (h_T − 6ε)`.
pub fn d_factor(m: &ACMesh, j: usize) -> f64 {
    m.h(j) / (m.h(j) - 6.0 * m.eps)
}

/// `(C^mo_1(T), C^mo_2(T))`.
pub fn mo_constants(m: &ACMesh, j: usize, m2: f64) -> (f64, f64) {
    let nt = m.atoms(j) as f64;
    let d = d_factor(m, j);
    let c1 = (32.0 * 3f64.sqrt() / nt.powf(1.5) * d.powf(1.5) + 6.0) * m2;
    let c2 = 32.0 / (30f64.sqrt() * nt.sqrt()) * d + 2.0;
    (c1, c2)
}

fn sq_over(
    v: &LatticeFunction,
    w: &LatticeFunction,
    sites: impl IntoIterator<Item = i64>,
    eps: f64,
) -> f64 {
    sites
        .into_iter()
        .map(|l| eps * (v.at(l) - w.at(l)).powi(2))
        .sum()
}

/// `‖f − f̄_T‖_{ℓ²_ε(ℒ_T)}`.
fn data_defect(f: &LatticeFunction, m: &ACMesh, j: usize) -> f64 {
    let fb = fbar_element(f, m, j);
    m.sites(j)
        .map(|l| m.eps * (f.at(l) - fb).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Evaluates every lower bound on the coupled state `s` of `p` against the
/// atomistic solution `ya`.
pub fn audit(ya: &Deformation, p: &CoupledProblem, s: &CoupledState) -> Result<EfficiencyAudit> {
    let m = &p.mesh;
    let eps = m.eps;
    let ga = ya.bonds();
    let gh = s.lattice_bonds();
    let a = AtomisticProblem::new(p.cfg, p.model.clone(), LatticeFunction::zeros(p.cfg.n))?;
    let sa = a.stress_from_bonds(&ga)?;
    let sac = p.stress_ac_atomwise(s)?;
    let r = model_residual(p, s)?;
    let mo = eta_mo(&r, m);
    let cg = eta_cg(&p.f, m);

    let stencil = |g: &LatticeFunction, l: i64| {
        BondStencil::from_bonds([g.at(l - 1), g.at(l), g.at(l + 1), g.at(l + 2)])
    };
    let mut st: Vec<BondStencil> = Vec::with_capacity(2 * p.cfg.sites());
    for l in p.cfg.labels() {
        st.push(stencil(&ga, l));
        st.push(stencil(&gh, l));
    }
    let m2 = assumption_ratios(&p.model, &st)?.big_m2_nn;
    let constants = EfficiencyConstants {
        m2_nn: m2,
        c_cg_1: 4.0 * 6f64.sqrt() * m2,
        c_cg_2: 4.0 / 15f64.sqrt(),
    };

    let k = m.k();
    let mut err_t = vec![0.0; k];
    let mut defect_t = vec![0.0; k];
    for j in 0..k {
        err_t[j] = sq_over(&ga, &gh, m.sites(j), eps).sqrt();
        defect_t[j] = data_defect(&p.f, m, j);
    }
    let big = |j: usize| m.atoms(j) >= 8;

    let mut cg_checks = Vec::new();
    let mut lip = Vec::new();
    for j in m.continuum_elements() {
        if !big(j) {
            cg_checks.push(BoundCheck::new(j, cg.values.element[j], f64::NAN, false));
            continue;
        }
        let d = d_factor(m, j);
        let rhs =
            constants.c_cg_1 * d.powf(1.5) * err_t[j] + constants.c_cg_2 * d * m.h(j) * defect_t[j];
        cg_checks.push(BoundCheck::new(j, cg.values.element[j], rhs, true));
        let (l, rr) = m.element(j);
        let lhs = sq_over(&sa, &sac, l + 4..=rr - 3, eps).sqrt();
        lip.push(BoundCheck::new(j, lhs, 3.0 * m2 * err_t[j], true));
    }

    let mut mo_checks = Vec::new();
    for i in m.interior_continuum_nodes() {
        let (t0, t1) = (i, m.next(i));
        let ok = big(t0) && big(t1);
        let rhs = if ok {
            [t0, t1]
                .iter()
                .map(|&j| {
                    let (c1, c2) = mo_constants(m, j, m2);
                    3.0 * c1 * err_t[j] + 3.0 * eps * c2 * defect_t[j]
                })
                .sum()
        } else {
            f64::NAN
        };
        mo_checks.push(BoundCheck::new(i, mo.values.node[i], rhs, ok));
    }

    let mut iface = Vec::new();
    for (side, node, elem) in [
        (Side::Left, m.k1() - 2, m.k1() - 2),
        (Side::Right, m.k2() + 2, m.k2() + 3),
    ] {
        let sites = interface_residual_sites(m, side);
        let e_sq = err_t[elem].powi(2) + sq_over(&ga, &gh, sites.clone(), eps);
        let e = e_sq.sqrt();
        let part = sites.map(|l| eps * r.at(l).powi(2)).sum::<f64>().sqrt();
        let atomistic_part = BoundCheck::new(node, part, 3.0 * m2 * e, true);
        let total = if big(elem) {
            let (c1, c2) = mo_constants(m, elem, m2);
            let rhs = 3.0 * (c1 + m2) * e + 3.0 * eps * c2 * defect_t[elem];
            BoundCheck::new(node, mo.values.node[node], rhs, true)
        } else {
            BoundCheck::new(node, mo.values.node[node], f64::NAN, false)
        };
        let side = match side {
            Side::Left => "left",
            Side::Right => "right",
        };
        iface.push(InterfaceCheck {
            side,
            total,
            atomistic_part,
        });
    }

    let mut glued = Vec::new();
    let mut run: Vec<usize> = Vec::new();
    let flush = |run: &mut Vec<usize>, glued: &mut Vec<GluedReport>| {
        if run.is_empty() {
            return;
        }
        let lhs = run
            .iter()
            .map(|&j| cg.values.element[j].powi(2))
            .sum::<f64>()
            .sqrt();
        let rhs = run
            .iter()
            .map(|&j| err_t[j].powi(2) + (m.h(j) * defect_t[j]).powi(2))
            .sum::<f64>()
            .sqrt();
        glued.push(GluedReport {
            elements: std::mem::take(run),
            lhs,
            rhs,
        });
    };
    for j in m.continuum_elements() {
        if big(j) {
            flush(&mut run, &mut glued);
        } else {
            if let Some(&last) = run.last() {
                if m.next(last) != j {
                    flush(&mut run, &mut glued);
                }
            }
            run.push(j);
        }
    }
    flush(&mut run, &mut glued);

    let all = cg_checks
        .iter()
        .chain(&mo_checks)
        .chain(iface.iter().flat_map(|c| [&c.total, &c.atomistic_part]));
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for c in all {
        if !c.applicable {
            continue;
        }
        if c.violated() {
            violations += 1;
        }
        let scale = c.lhs.abs().max(c.rhs.abs());
        if scale > 1e-13 {
            worst = worst.min(c.margin / scale);
        }
    }
    let lipschitz_violations = lip.iter().filter(|c| c.violated()).count();
    Ok(EfficiencyAudit {
        constants,
        cg: cg_checks,
        mo: mo_checks,
        interface: iface,
        lipschitz: lip,
        glued,
        violations,
        lipschitz_violations,
        worst_relative_margin: worst,
        ok: violations == 0,
    })
}
