//! A posteriori estimators for the coupled solution: model residual,
//! coarse-graining residual with data oscillation, gradient recovery, the
//! hybrid estimator, its constants, the stability surrogate and the total
//! bound.

use serde::{Deserialize, Serialize};

use crate::atomistic::AtomisticProblem;
use crate::banded::CyclicBand;
use crate::chain::{BondStencil, Deformation, LatticeFunction};
use crate::coupling::{CoupledProblem, CoupledState};
use crate::error::{Error, Result};
use crate::mesh::ACMesh;
use crate::potential::{assumption_ratios, DerivativeRatios, PotentialModel};

/// `R^mo_ℓ = σ^a_ℓ(I y_h) − σ^ac_ℓ(y_h)`.
///
/// Bonds whose whole stencil `ℓ−3 ..= ℓ+3` lies in one continuum element
/// carry `W′(∇y_h|_T)` in both stresses and are set to zero exactly; the
/// same holds for `a+2 ..= b−1`, where both stresses are built from the same
/// site terms, and wherever the bonds `ℓ−3 ..= ℓ+3` are all equal (patch test).
pub fn model_residual(p: &CoupledProblem, s: &CoupledState) -> Result<LatticeFunction> {
    let a = AtomisticProblem::new(p.cfg, p.model.clone(), LatticeFunction::zeros(p.cfg.n))?;
    let g = s.lattice_bonds();
    let sa = a.stress_from_bonds(&g)?;
    let sac = p.stress_ac_atomwise(s)?;
    let m = &p.mesh;
    Ok(LatticeFunction::from_fn(p.cfg.n, |l| {
        if (m.a + 2..m.b).contains(&l) {
            return 0.0;
        }
        let j = m.element_of_site(l);
        if !m.is_layer_element(j) && (l - 3..=l + 3).all(|q| m.element_of_site(q) == j) {
            return 0.0;
        }
        if (l - 3..=l + 3).all(|q| g.at(q) == g.at(l)) {
            return 0.0;
        }
        sa.at(l) - sac.at(l)
    }))
}

/// Node and element arrays (length `K`, zero outside the continuum index
/// sets) and the total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeElement {
    pub node: Vec<f64>,
    pub element: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaMo {
    #[serde(flatten)]
    pub values: NodeElement,
    /// Some continuum element is shorter than `6ε`.
    pub short_element_warning: bool,
}

fn window_sq(r: &LatticeFunction, lo: i64, hi: i64, eps: f64) -> f64 {
    (lo..=hi).map(|l| eps * r.at(l).powi(2)).sum()
}

pub fn eta_mo(r: &LatticeFunction, m: &ACMesh) -> EtaMo {
    let k = m.k();
    let (k1, k2) = (m.k1(), m.k2());
    let eps = m.eps;
    let mut node2 = vec![0.0; k];
    for i in m.continuum_nodes() {
        let l = m.node(i);
        node2[i] = if i == k1 - 2 {
            window_sq(r, l - 2, l + 4, eps)
        } else if i == k2 + 2 {
            window_sq(r, l - 3, l + 3, eps)
        } else {
            window_sq(r, l - 2, l + 3, eps)
        };
    }
    let mut elem2 = vec![0.0; k];
    for j in m.continuum_elements() {
        let (left, right) = (m.prev(j), j);
        elem2[j] = if j == k1 - 2 {
            0.5 * node2[left] + node2[right]
        } else if j == k2 + 3 {
            node2[left] + 0.5 * node2[right]
        } else {
            0.5 * (node2[left] + node2[right])
        };
    }
    let total = elem2.iter().sum::<f64>().sqrt();
    let short = m.continuum_elements().into_iter().any(|j| m.atoms(j) < 6);
    EtaMo {
        values: NodeElement {
            node: node2.into_iter().map(f64::sqrt).collect(),
            element: elem2.into_iter().map(f64::sqrt).collect(),
            total,
        },
        short_element_warning: short,
    }
}

/// Signed RMS average of `f` over `ℒ_T`. The sign is that of `f` when it is
/// sign-constant on `T`, otherwise that of its mean.
pub fn fbar_element(f: &LatticeFunction, m: &ACMesh, j: usize) -> f64 {
    let vals: Vec<f64> = m.sites(j).map(|l| f.at(l)).collect();
    let rms = (vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64).sqrt();
    let sign = if vals.iter().all(|&v| v >= 0.0) {
        1.0
    } else if vals.iter().all(|&v| v <= 0.0) {
        -1.0
    } else if vals.iter().sum::<f64>() < 0.0 {
        -1.0
    } else {
        1.0
    };
    sign * rms
}

/// `h_T ‖f − f̄_T‖_{ℓ²_ε(ℒ_T)}`.
pub fn oscillation(f: &LatticeFunction, m: &ACMesh, j: usize) -> f64 {
    let fb = fbar_element(f, m, j);
    let s: f64 = m.sites(j).map(|l| m.eps * (f.at(l) - fb).powi(2)).sum();
    m.h(j) * s.sqrt()
}

/// Length-weighted signed average of `f̄` over the patch of node `k`.
pub fn fbar_patch(f: &LatticeFunction, m: &ACMesh, k: usize) -> f64 {
    let (k1, k2) = (m.k1(), m.k2());
    let (t0, t1) = (k, m.next(k));
    if k == k1 - 2 {
        return fbar_element(f, m, t0);
    }
    if k == k2 + 2 {
        return fbar_element(f, m, t1);
    }
    let (h0, h1) = (m.h(t0), m.h(t1));
    let (f0, f1) = (fbar_element(f, m, t0), fbar_element(f, m, t1));
    let signed = (h0 * f0 + h1 * f1) / (h0 + h1);
    let mag = (h0 * f0.abs() + h1 * f1.abs()) / (h0 + h1);
    if signed < 0.0 {
        -mag
    } else {
        mag
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaCg {
    #[serde(flatten)]
    pub values: NodeElement,
    pub osc: Vec<f64>,
    pub osc_total: f64,
}

pub fn eta_cg(f: &LatticeFunction, m: &ACMesh) -> EtaCg {
    let k = m.k();
    let (k1, k2) = (m.k1(), m.k2());
    let mut elem = vec![0.0; k];
    let mut osc = vec![0.0; k];
    for j in m.continuum_elements() {
        let h = m.h(j);
        elem[j] = h.powf(1.5) * fbar_element(f, m, j).abs() / 2f64.sqrt();
        osc[j] = oscillation(f, m, j);
    }
    let mut node = vec![0.0; k];
    let c = 2f64.sqrt() / 2.0;
    for i in m.continuum_nodes() {
        node[i] = if i == k1 - 2 {
            c * elem[i]
        } else if i == k2 + 2 {
            c * elem[m.next(i)]
        } else {
            c * (elem[i].powi(2) + elem[m.next(i)].powi(2)).sqrt()
        };
    }
    let total = elem.iter().map(|x| x * x).sum::<f64>().sqrt();
    let osc_total = osc.iter().map(|x| x * x).sum::<f64>().sqrt();
    EtaCg {
        values: NodeElement {
            node,
            element: elem,
            total,
        },
        osc,
        osc_total,
    }
}

/// Nodal values of the recovered gradient on `𝒦^c ∪ {K1−1, K2+1}`.
pub fn recover_gradient(s: &CoupledState) -> Vec<Option<f64>> {
    let m = &s.mesh;
    let g = s.bonds();
    let mut out = vec![None; m.k()];
    for k in m.continuum_nodes() {
        let (t0, t1) = (k, m.next(k));
        let (h0, h1) = (m.h(t0), m.h(t1));
        out[k] = Some((h0 * g[t0] + h1 * g[t1]) / (h0 + h1));
    }
    out[m.k1() - 1] = Some(g[m.k1() - 1]);
    out[m.k2() + 1] = Some(g[m.k2() + 2]);
    out
}

/// `‖G y_h − ∇y_h‖²_{L²(T_j)}` of the piecewise-affine recovery error.
fn recovery_error_sq(m: &ACMesh, g: &[f64], gr: &[Option<f64>], j: usize) -> f64 {
    let a = gr[m.prev(j)].expect("recovered node") - g[j];
    let b = gr[j].expect("recovered node") - g[j];
    m.h(j) / 3.0 * (a * a + a * b + b * b)
}

/// The same error summed over the lattice sites `ℒ_T` instead of integrated.
fn recovery_error_sq_lattice(m: &ACMesh, g: &[f64], gr: &[Option<f64>], j: usize) -> f64 {
    let (l, r) = m.element(j);
    let (ga, gb) = (
        gr[m.prev(j)].expect("recovered node"),
        gr[j].expect("recovered node"),
    );
    let len = (r - l) as f64;
    m.sites(j)
        .map(|s| {
            let lam = (s - l) as f64 / len;
            m.eps * ((1.0 - lam) * ga + lam * gb - g[j]).powi(2)
        })
        .sum()
}

/// `η^z` with element contributions summed over lattice sites; kept as a
/// diagnostic next to the integrated form used by [`eta_z`].
pub fn eta_z_lattice_total(s: &CoupledState) -> f64 {
    let m = &s.mesh;
    let g = s.bonds();
    let gr = recover_gradient(s);
    let (k1, k2) = (m.k1(), m.k2());
    let mut tot = 0.0;
    for j in m.continuum_elements() {
        tot += recovery_error_sq_lattice(m, &g, &gr, j);
        if j == k1 - 2 {
            tot += recovery_error_sq_lattice(m, &g, &gr, k1 - 1);
        } else if j == k2 + 3 {
            tot += recovery_error_sq_lattice(m, &g, &gr, k2 + 2);
        }
    }
    tot.sqrt()
}

pub fn eta_z(s: &CoupledState) -> NodeElement {
    let m = &s.mesh;
    let g = s.bonds();
    let gr = recover_gradient(s);
    let k = m.k();
    let (k1, k2) = (m.k1(), m.k2());
    let mut elem = vec![0.0; k];
    for j in m.continuum_elements() {
        let mut e2 = recovery_error_sq(m, &g, &gr, j);
        if j == k1 - 2 {
            e2 += recovery_error_sq(m, &g, &gr, k1 - 1);
        } else if j == k2 + 3 {
            e2 += recovery_error_sq(m, &g, &gr, k2 + 2);
        }
        elem[j] = e2.sqrt();
    }
    let mut node = vec![0.0; k];
    for i in m.continuum_nodes() {
        let (t0, t1) = (i, m.next(i));
        let (h0, h1) = (m.h(t0), m.h(t1));
        let hw = 0.5 * (h0 + h1);
        node[i] = (h0 * h1 / (4.0 * hw)).sqrt() * (g[t1] - g[t0]).abs();
    }
    let total = elem.iter().map(|x| x * x).sum::<f64>().sqrt();
    NodeElement {
        node,
        element: elem,
        total,
    }
}

/// Checks that the interface gradient jumps are at most three times the
/// jumps across `K1−2` and `K2+2`.
pub fn interface_jump_ok(s: &CoupledState) -> bool {
    let m = &s.mesh;
    let g = s.bonds();
    let (k1, k2) = (m.k1(), m.k2());
    let jump = |k: usize| g[k] - g[k + 1];
    let (dl, dr) = (jump(k1 - 2), jump(k2 + 2));
    let ok = |num: f64, den: f64| {
        if den == 0.0 {
            num == 0.0
        } else {
            (num / den).abs() <= 3.0
        }
    };
    ok(jump(k1 - 1), dl) && ok(jump(k1), dl) && ok(jump(k2), dr) && ok(jump(k2 + 1), dr)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AposterioriConstants {
    pub kappa: f64,
    pub kappa_raw: f64,
    pub m2_nn: f64,
    pub big_m2_nn: f64,
    pub m2_nnn: f64,
    pub big_m2_nnn: f64,
    pub c_z_cg_lower: f64,
    pub c_z_cg_upper: f64,
    pub c_z_cg: f64,
    pub c_z_mo_lower: f64,
    pub c_z_mo_upper: f64,
    pub c_z_mo: f64,
}

/// Stencils `Dy^h_ℓ` of the interpolated deformation for the given sites.
pub fn stencils(s: &CoupledState, sites: impl IntoIterator<Item = i64>) -> Vec<BondStencil> {
    let g = s.lattice_bonds();
    sites
        .into_iter()
        .map(|l| BondStencil::from_bonds([g.at(l - 1), g.at(l), g.at(l + 1), g.at(l + 2)]))
        .collect()
}

/// All labels outside `𝒜`.
pub fn non_atomistic_sites(m: &ACMesh) -> Vec<i64> {
    let n = m.n as i64;
    (-n + 1..=n)
        .filter(|l| !m.atomistic_sites().contains(l))
        .collect()
}

/// Derivative ratios over every site of the lattice.
pub fn solution_ratios(model: &PotentialModel, s: &CoupledState) -> Result<DerivativeRatios> {
    let n = s.mesh.n as i64;
    assumption_ratios(model, &stencils(s, -n + 1..=n))
}

pub fn constants_from(kappa: f64, kappa_raw: f64, r: &DerivativeRatios) -> AposterioriConstants {
    let k = kappa;
    let lo_cg = (2.0 * k - 1.0) * r.m2_nn / (2f64.sqrt() * k);
    let hi_cg = 10.0 * (3.0 * k).sqrt() * r.big_m2_nn / (2.0 * k - 1.0);
    let lo_mo = k * r.m2_nnn / 2.0;
    let hi_mo = 6.0 * k * r.big_m2_nnn / (2.0 * k - 1.0);
    AposterioriConstants {
        kappa,
        kappa_raw,
        m2_nn: r.m2_nn,
        big_m2_nn: r.big_m2_nn,
        m2_nnn: r.m2_nnn,
        big_m2_nnn: r.big_m2_nnn,
        c_z_cg_lower: lo_cg,
        c_z_cg_upper: hi_cg,
        c_z_cg: 0.5 * (lo_cg + hi_cg),
        c_z_mo_lower: lo_mo,
        c_z_mo_upper: hi_mo,
        c_z_mo: 0.5 * (lo_mo + hi_mo),
    }
}

/// Constants with the second derivatives ranging over `ℓ ∈ 𝒞 ∪ ℐ`.
pub fn aposteriori_constants(
    model: &PotentialModel,
    s: &CoupledState,
) -> Result<AposterioriConstants> {
    let sites = non_atomistic_sites(&s.mesh);
    if sites.is_empty() {
        return Err(Error::EmptySet);
    }
    let r = assumption_ratios(model, &stencils(s, sites))?;
    let kap = s.mesh.kappa();
    Ok(constants_from(kap.value, kap.raw, &r))
}

/// `N_{ω̃_k} = (N_{T_k} + N_{T_{k+1}})/2`.
pub fn patch_atoms(m: &ACMesh, k: usize) -> f64 {
    0.5 * (m.atoms(k) + m.atoms(m.next(k))) as f64
}

pub fn eta_hybrid(
    m: &ACMesh,
    z: &NodeElement,
    mo: &NodeElement,
    c: &AposterioriConstants,
) -> (Vec<f64>, f64) {
    let (k1, k2) = (m.k1(), m.k2());
    let mut out = vec![0.0; m.k()];
    for j in m.continuum_elements() {
        let (left, right) = (m.prev(j), j);
        let cg = (c.c_z_cg * z.element[j]).powi(2);
        let proxy = |k: usize| 0.5 * (c.c_z_mo * z.node[k]).powi(2) / patch_atoms(m, k);
        let v = if j == k1 - 2 {
            cg + proxy(left) + mo.node[right].powi(2)
        } else if j == k2 + 3 {
            cg + mo.node[left].powi(2) + proxy(right)
        } else {
            cg + proxy(left) + proxy(right)
        };
        out[j] = v.sqrt();
    }
    let total = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    (out, total)
}

/// Weighted graph Laplacian of `‖v′‖²_{ℓ²_ε}` in the interleaved layout.
fn gram(n: usize, eps: f64) -> CyclicBand {
    let mut g = CyclicBand::zeros(n, 4);
    for p in 0..n {
        let b = [(p, 1.0), ((p + n - 1) % n, -1.0)];
        for &(i, ci) in &b {
            for &(j, cj) in &b {
                g.add_full(i, j, ci * cj / eps);
            }
        }
    }
    g
}

fn negative_count(h: &CyclicBand, g: &CyclicBand, sigma: f64) -> usize {
    let mut s = sigma;
    for _ in 0..8 {
        if let Ok(f) = h.band().sub_scaled(s, g.band()).ldlt(false) {
            return f.negative_pivots();
        }
        s *= 1.0 + 1e-13;
    }
    usize::MAX
}

/// Smallest eigenvalue of the atomistic Hessian at the given bonds against
/// the `‖v′‖²_{ℓ²_ε}` Gram matrix on mean-free displacements, by Sylvester
/// inertia bisection.
pub fn stability_constant(p: &AtomisticProblem, bonds: &LatticeFunction) -> Result<f64> {
    let n = p.cfg.sites();
    let mut h = p.hessian_from_bonds(bonds)?;
    let mut g = gram(n, p.cfg.eps);
    let p0 = h.position(0);
    h.band_mut().pin(p0);
    g.band_mut().pin(p0);
    g.band_mut().set(p0, p0, 0.0);
    if negative_count(&h, &g, 0.0) != 0 {
        return Err(Error::Stability(
            "atomistic Hessian is not positive on mean-free displacements".into(),
        ));
    }
    let l0 = p.cfg.label(0);
    let v: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::PI * (p.cfg.label(i) - l0) as f64 / p.cfg.n as f64).sin())
        .collect();
    let vp = h.permute(&v);
    let num: f64 = h
        .band()
        .matvec(&vp)
        .iter()
        .zip(&vp)
        .map(|(a, b)| a * b)
        .sum();
    let den: f64 = g
        .band()
        .matvec(&vp)
        .iter()
        .zip(&vp)
        .map(|(a, b)| a * b)
        .sum();
    let mut hi = (num / den).abs().max(f64::MIN_POSITIVE) * (1.0 + 1e-9);
    let mut tries = 0;
    while negative_count(&h, &g, hi) == 0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::Stability(
                "no upper bracket for the smallest eigenvalue".into(),
            ));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if negative_count(&h, &g, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ca = 0.5 * (lo + hi);
    if !(ca > 0.0) {
        return Err(Error::Stability(format!(
            "non-positive stability constant {ca:e}"
        )));
    }
    Ok(ca)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum StabilityChoice {
    #[default]
    Surrogate,
    Fixed(f64),
}

/// `(1/c_a)·{(η^mo)² + (η^cg)² + ½ Σ osc_T²}^{1/2}`.
pub fn total_bound(eta_mo: f64, eta_cg: f64, osc_total: f64, c_a: f64) -> Result<f64> {
    if !(c_a > 0.0) {
        return Err(Error::Stability(format!(
            "stability constant {c_a} is not positive"
        )));
    }
    Ok((eta_mo * eta_mo + eta_cg * eta_cg + 0.5 * osc_total * osc_total).sqrt() / c_a)
}

/// `‖y′_a − y′_ac‖_{ℓ²_ε}` over the whole lattice.
pub fn true_error(ya: &Deformation, s: &CoupledState) -> f64 {
    let ga = ya.bonds();
    let gh = s.lattice_bonds();
    let e = s.mesh.eps;
    ga.values()
        .iter()
        .zip(gh.values())
        .map(|(a, b)| e * (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub eta_mo_t: Vec<f64>,
    pub eta_cg_t: Vec<f64>,
    pub eta_z_t: Vec<f64>,
    pub eta_hybrid_t: Vec<f64>,
    pub osc_t: Vec<f64>,
    pub eta_mo_k: Vec<f64>,
    pub eta_cg_k: Vec<f64>,
    pub eta_z_k: Vec<f64>,
    pub eta_mo: f64,
    pub eta_cg: f64,
    pub eta_z: f64,
    pub eta_hybrid: f64,
    pub osc_total: f64,
    pub constants: AposterioriConstants,
    pub c_a: f64,
    pub c_a_surrogate: bool,
    pub total_bound: f64,
    pub residual: Vec<f64>,
    pub short_element_warning: bool,
    pub interface_jump_ok: bool,
}

impl EstimatorReport {
    pub fn compute(
        p: &CoupledProblem,
        s: &CoupledState,
        stability: StabilityChoice,
    ) -> Result<Self> {
        let r = model_residual(p, s)?;
        let mo = eta_mo(&r, &p.mesh);
        let cg = eta_cg(&p.f, &p.mesh);
        let z = eta_z(s);
        let constants = aposteriori_constants(&p.model, s)?;
        let (hyb, hyb_total) = eta_hybrid(&p.mesh, &z, &mo.values, &constants);
        let (c_a, sur) = match stability {
            StabilityChoice::Fixed(c) => (c, false),
            StabilityChoice::Surrogate => {
                let a =
                    AtomisticProblem::new(p.cfg, p.model.clone(), LatticeFunction::zeros(p.cfg.n))?;
                (stability_constant(&a, &s.lattice_bonds())?, true)
            }
        };
        let tb = total_bound(mo.values.total, cg.values.total, cg.osc_total, c_a)?;
        Ok(Self {
            eta_mo_t: mo.values.element,
            eta_cg_t: cg.values.element,
            eta_z_t: z.element,
            eta_hybrid_t: hyb,
            osc_t: cg.osc,
            eta_mo_k: mo.values.node,
            eta_cg_k: cg.values.node,
            eta_z_k: z.node,
            eta_mo: mo.values.total,
            eta_cg: cg.values.total,
            eta_z: z.total,
            eta_hybrid: hyb_total,
            osc_total: cg.osc_total,
            constants,
            c_a,
            c_a_surrogate: sur,
            total_bound: tb,
            residual: r.into_values(),
            short_element_warning: mo.short_element_warning,
            interface_jump_ok: interface_jump_ok(s),
        })
    }

    /// `(1/c_a)·{(η^mo_T)² + (η^cg_T)²}^{1/2}`.
    pub fn rho_residual(&self) -> Vec<f64> {
        self.eta_mo_t
            .iter()
            .zip(&self.eta_cg_t)
            .map(|(a, b)| (a * a + b * b).sqrt() / self.c_a)
            .collect()
    }

    pub fn rho_hybrid(&self) -> Vec<f64> {
        self.eta_hybrid_t.iter().map(|x| x / self.c_a).collect()
    }

    /// `(1/c_a) η^hybrid`.
    pub fn hybrid_bound(&self) -> f64 {
        self.eta_hybrid / self.c_a
    }
}

/// Outcome of the two recovery equivalences on one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceCheck {
    pub cg_lower_ok: bool,
    pub cg_upper_ok: bool,
    /// Interior nodes violating `C̲ η^z_k ≤ √N η^mo_k ≤ C̄ η^z_k`.
    pub mo_violations: Vec<usize>,
}

pub fn equivalence_check(m: &ACMesh, rep: &EstimatorReport) -> EquivalenceCheck {
    let c = &rep.constants;
    let tol = 1e-12 * rep.eta_cg.max(rep.eta_z).max(f64::MIN_POSITIVE);
    let mut bad = Vec::new();
    for k in m.interior_continuum_nodes() {
        let mid = patch_atoms(m, k).sqrt() * rep.eta_mo_k[k];
        let z = rep.eta_z_k[k];
        let t = 1e-12 * mid.max(z).max(f64::MIN_POSITIVE);
        if c.c_z_mo_lower * z > mid + t || mid > c.c_z_mo_upper * z + t {
            bad.push(k);
        }
    }
    EquivalenceCheck {
        cg_lower_ok: c.c_z_cg_lower * rep.eta_z <= rep.eta_cg + tol,
        cg_upper_ok: rep.eta_cg <= c.c_z_cg_upper * rep.eta_z + tol,
        mo_violations: bad,
    }
}
