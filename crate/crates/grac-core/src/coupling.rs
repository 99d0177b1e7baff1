//! GRAC coupled energy on an [`ACMesh`], nodal force projection, a/c
//! stresses and the coupled Newton solve.
//!
//! The stored energy is
//! `ε Σ_𝒜 V + ε Σ_ℐ Vⁱ + Σ_{𝒦^c_{𝒯h}} h_T W(∇y_h|_T) + (ε/2)[W(∇y_h|_{T_{K1−1}}) + W(∇y_h|_{T_{K2+2}})]`
//! with the interface potentials `V(D₁, D₂, D₋₁, 2D₋₁)` left of the
//! atomistic block and `V(D₁, 2D₁, D₋₁, D₋₂)` right of it.

use serde::Serialize;

use crate::chain::{BondStencil, Deformation, LatticeConfig, LatticeFunction};
use crate::energy::{BondEnergy, SiteTerm, Variant};
use crate::error::{Error, Result};
use crate::mesh::{ACMesh, Side};
use crate::newton::{NewtonOptions, NodalProblem, SolveReport};
use crate::potential::PotentialModel;

/// A piecewise-affine deformation `y_h = εF x + u_h` given by nodal
/// displacements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledState {
    pub mesh: ACMesh,
    pub f: f64,
    pub u: Vec<f64>,
}

impl CoupledState {
    pub fn affine(mesh: ACMesh, f: f64) -> Self {
        let k = mesh.k();
        Self {
            mesh,
            f,
            u: vec![0.0; k],
        }
    }

    /// `∇y_h|_{T_j}` for every element.
    pub fn bonds(&self) -> Vec<f64> {
        let k = self.mesh.k();
        (0..k)
            .map(|j| self.f + (self.u[j] - self.u[(j + k - 1) % k]) / self.mesh.h(j))
            .collect()
    }

    pub fn y_node(&self, k: usize) -> f64 {
        self.mesh.eps * self.f * self.mesh.node(k) as f64 + self.u[k]
    }

    /// Displacement of the interpolant at site `s`.
    pub fn displacement_at(&self, s: i64) -> f64 {
        let m = &self.mesh;
        let j = m.element_of_site(s);
        let (l, r) = m.element(j);
        let s = (s + m.n as i64 - 1).rem_euclid(m.period()) + 1 - m.n as i64;
        if s == r {
            return self.u[j];
        }
        let lam = (s - l) as f64 / (r - l) as f64;
        (1.0 - lam) * self.u[m.prev(j)] + lam * self.u[j]
    }

    pub fn lattice_displacement(&self) -> LatticeFunction {
        LatticeFunction::from_fn(self.mesh.n, |s| self.displacement_at(s))
    }

    /// Bond field of the interpolant, taken element-wise so uniform states
    /// are reproduced exactly.
    pub fn lattice_bonds(&self) -> LatticeFunction {
        let g = self.bonds();
        LatticeFunction::from_fn(self.mesh.n, |s| g[self.mesh.element_of_site(s)])
    }

    pub fn to_deformation(&self, cfg: LatticeConfig) -> Result<Deformation> {
        Deformation::new(cfg, self.lattice_displacement())
    }

    /// The interpolant of `self` represented on `mesh` (which must contain
    /// the current nodes for this to be exact).
    pub fn transfer(&self, mesh: &ACMesh) -> CoupledState {
        let u = mesh
            .nodes
            .iter()
            .map(|&l| self.displacement_at(l))
            .collect();
        CoupledState {
            mesh: mesh.clone(),
            f: self.f,
            u,
        }
    }

    pub fn min_gradient(&self) -> f64 {
        self.bonds().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Interface site energy and its partials with respect to `Dy`.
pub fn interface_site_energy(
    model: &PotentialModel,
    mesh: &ACMesh,
    l: i64,
    dy: &BondStencil,
) -> Result<(f64, [f64; 4])> {
    let side = if l == mesh.a - 2 || l == mesh.a - 1 {
        Side::Left
    } else if l == mesh.b + 1 || l == mesh.b + 2 {
        Side::Right
    } else {
        return Err(Error::Config(format!("site {l} is not an interface atom")));
    };
    interface_site_energy_side(model, side, dy)
}

pub fn interface_site_energy_side(
    model: &PotentialModel,
    side: Side,
    dy: &BondStencil,
) -> Result<(f64, [f64; 4])> {
    match side {
        Side::Left => {
            let s = BondStencil::new(dy.d1, dy.d2, dy.dm1, 2.0 * dy.dm1);
            let (v, d, _) = model.eval2(&s)?;
            Ok((v, [d[0], d[1], d[2] + 2.0 * d[3], 0.0]))
        }
        Side::Right => {
            let s = BondStencil::new(dy.d1, 2.0 * dy.d1, dy.dm1, dy.dm2);
            let (v, d, _) = model.eval2(&s)?;
            Ok((v, [d[0] + 2.0 * d[1], 0.0, d[2], d[3]]))
        }
    }
}

/// `f̄_k = Σ_ℓ f_ℓ φ_k(εℓ)` with the nodal hat functions `φ_k`.
pub fn nodal_force_projection(f: &LatticeFunction, mesh: &ACMesh) -> Vec<f64> {
    let k = mesh.k();
    let mut fbar = vec![0.0; k];
    for j in 0..k {
        let (l, r) = mesh.element(j);
        let len = (r - l) as f64;
        for s in l + 1..=r {
            let lam = (s - l) as f64 / len;
            let v = f.at(s);
            fbar[j] += lam * v;
            if s != r {
                fbar[mesh.prev(j)] += (1.0 - lam) * v;
            }
        }
    }
    fbar
}

#[derive(Debug, Clone)]
pub struct CoupledProblem {
    pub cfg: LatticeConfig,
    pub mesh: ACMesh,
    pub model: PotentialModel,
    pub f: LatticeFunction,
    pub fbar: Vec<f64>,
    nodal: NodalProblem,
}

fn site(mesh: &ACMesh, l: i64, variant: Variant) -> SiteTerm {
    SiteTerm {
        weight: mesh.eps,
        variant,
        bonds: std::array::from_fn(|c| mesh.element_of_site(l - 1 + c as i64)),
    }
}

impl CoupledProblem {
    pub fn new(
        cfg: LatticeConfig,
        mesh: ACMesh,
        model: PotentialModel,
        f: LatticeFunction,
    ) -> Result<Self> {
        model.validate()?;
        if mesh.n != cfg.n || (mesh.eps - cfg.eps).abs() > 1e-15 * cfg.eps {
            return Err(Error::Config("mesh and lattice disagree on N or ε".into()));
        }
        if f.n() != cfg.n {
            return Err(Error::Config("load size does not match lattice".into()));
        }
        let v = mesh.validate();
        if !v.is_empty() {
            return Err(Error::Mesh(v));
        }
        let mut sites = Vec::new();
        for l in [mesh.a - 2, mesh.a - 1] {
            sites.push(site(&mesh, l, Variant::Left));
        }
        for l in mesh.atomistic_sites() {
            sites.push(site(&mesh, l, Variant::Std));
        }
        for l in [mesh.b + 1, mesh.b + 2] {
            sites.push(site(&mesh, l, Variant::Right));
        }
        let mut cb: Vec<(usize, f64)> = mesh
            .continuum_elements()
            .into_iter()
            .map(|j| (j, mesh.h(j)))
            .collect();
        cb.push((mesh.k1() - 1, 0.5 * mesh.eps));
        cb.push((mesh.k2() + 2, 0.5 * mesh.eps));
        let fbar = nodal_force_projection(&f, &mesh);
        let h = mesh.lengths();
        let k = mesh.k();
        let mean_weights = (0..k).map(|i| 0.5 * (h[i] + h[(i + 1) % k])).collect();
        let nodal = NodalProblem {
            energy: BondEnergy {
                model: model.clone(),
                sites,
                cauchy_born: cb,
            },
            f: cfg.f,
            h,
            load: fbar.iter().map(|x| cfg.eps * x).collect(),
            mean_weights,
            eps: cfg.eps,
        };
        Ok(Self {
            cfg,
            mesh,
            model,
            f,
            fbar,
            nodal,
        })
    }

    pub fn nodal(&self) -> &NodalProblem {
        &self.nodal
    }

    fn check(&self, s: &CoupledState) -> Result<()> {
        if s.mesh != self.mesh || s.f != self.cfg.f {
            return Err(Error::Config(
                "state does not belong to this problem".into(),
            ));
        }
        Ok(())
    }

    pub fn stored_energy(&self, s: &CoupledState) -> Result<f64> {
        self.check(s)?;
        self.nodal.energy.energy(&s.bonds())
    }

    /// Stored energy minus `⟨f, I y_h⟩_ε`.
    pub fn energy_ac(&self, s: &CoupledState) -> Result<f64> {
        self.check(s)?;
        let e = self.cfg.eps;
        let affine: f64 = self
            .cfg
            .labels()
            .map(|l| e * self.f.at(l) * e * self.cfg.f * l as f64)
            .sum();
        Ok(self.nodal.total_energy(&s.u)? - affine)
    }

    pub fn grad_ac(&self, s: &CoupledState) -> Result<Vec<f64>> {
        self.check(s)?;
        self.nodal.gradient(&s.u)
    }

    /// `σ̄^ac_j = h_j⁻¹ ∂E_ac/∂(∇y_h|_{T_j})`.
    pub fn stress_ac_elementwise(&self, s: &CoupledState) -> Result<Vec<f64>> {
        self.check(s)?;
        let (_, dg) = self.nodal.energy.energy_gradient(&s.bonds())?;
        Ok(dg.iter().zip(&self.nodal.h).map(|(d, h)| d / h).collect())
    }

    /// `σ^ac_ℓ`: the element stress of the element containing bond `ℓ`.
    pub fn stress_ac_atomwise(&self, s: &CoupledState) -> Result<LatticeFunction> {
        let sb = self.stress_ac_elementwise(s)?;
        Ok(LatticeFunction::from_fn(self.cfg.n, |l| {
            sb[self.mesh.element_of_site(l)]
        }))
    }

    pub fn solve_ac(
        &self,
        start: Option<&CoupledState>,
        opts: NewtonOptions,
    ) -> Result<(CoupledState, SolveReport)> {
        let u0 = match start {
            Some(s) => {
                self.check(s)?;
                s.u.clone()
            }
            None => vec![0.0; self.mesh.k()],
        };
        let r = self.nodal.solve(&u0, opts)?;
        let state = CoupledState {
            mesh: self.mesh.clone(),
            f: self.cfg.f,
            u: r.solution.clone(),
        };
        Ok((state, r))
    }
}
