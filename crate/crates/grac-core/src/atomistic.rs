//! Fully atomistic reference model `E_a(y) = ε Σ V(Dy_ℓ) − ε Σ f_ℓ y_ℓ`.

use crate::banded::CyclicBand;
use crate::chain::{Deformation, LatticeConfig, LatticeFunction};
use crate::energy::{BondEnergy, SiteTerm, Variant};
use crate::error::{Error, Result};
use crate::newton::{NewtonOptions, NodalProblem, SolveReport};
use crate::potential::PotentialModel;

#[derive(Debug, Clone)]
pub struct AtomisticProblem {
    pub cfg: LatticeConfig,
    pub model: PotentialModel,
    pub f: LatticeFunction,
    nodal: NodalProblem,
}

impl AtomisticProblem {
    pub fn new(cfg: LatticeConfig, model: PotentialModel, f: LatticeFunction) -> Result<Self> {
        model.validate()?;
        if f.n() != cfg.n {
            return Err(Error::Config("load size does not match lattice".into()));
        }
        if !f.is_mean_zero() {
            return Err(Error::Config(format!(
                "load is not mean-zero (mean {:e})",
                f.mean()
            )));
        }
        let k = cfg.sites();
        let sites = (0..k)
            .map(|i| SiteTerm {
                weight: cfg.eps,
                variant: Variant::Std,
                bonds: std::array::from_fn(|c| (i + k - 1 + c) % k),
            })
            .collect();
        let nodal = NodalProblem {
            energy: BondEnergy {
                model: model.clone(),
                sites,
                cauchy_born: vec![],
            },
            f: cfg.f,
            h: vec![cfg.eps; k],
            load: f.values().iter().map(|x| cfg.eps * x).collect(),
            mean_weights: vec![1.0; k],
            eps: cfg.eps,
        };
        Ok(Self {
            cfg,
            model,
            f,
            nodal,
        })
    }

    pub fn nodal(&self) -> &NodalProblem {
        &self.nodal
    }

    fn check(&self, y: &Deformation) -> Result<()> {
        if y.cfg.n != self.cfg.n {
            return Err(Error::Config(
                "deformation size does not match lattice".into(),
            ));
        }
        Ok(())
    }

    /// `ε Σ f_ℓ εFℓ`, the load acting on the affine part.
    fn affine_work(&self) -> f64 {
        let e = self.cfg.eps;
        self.cfg
            .labels()
            .map(|l| e * self.f.at(l) * e * self.cfg.f * l as f64)
            .sum()
    }

    pub fn energy_a(&self, y: &Deformation) -> Result<f64> {
        self.check(y)?;
        Ok(self.nodal.total_energy(y.u.values())? - self.affine_work())
    }

    /// `∂E_a/∂y_ℓ`.
    pub fn grad_a(&self, y: &Deformation) -> Result<LatticeFunction> {
        self.check(y)?;
        LatticeFunction::from_values(self.cfg.n, self.nodal.gradient(y.u.values())?)
    }

    /// Atomistic stress from a lattice bond field (indexed by the bond's
    /// right label).
    pub fn stress_from_bonds(&self, g: &LatticeFunction) -> Result<LatticeFunction> {
        let (_, dg) = self.nodal.energy.energy_gradient(g.values())?;
        LatticeFunction::from_values(
            self.cfg.n,
            dg.into_iter().map(|d| d / self.cfg.eps).collect(),
        )
    }

    /// `σ^a_ℓ` for every bond `ℓ`.
    pub fn stress_a(&self, y: &Deformation) -> Result<LatticeFunction> {
        self.check(y)?;
        self.stress_from_bonds(&y.bonds())
    }

    pub fn stress_at(&self, y: &Deformation, l: i64) -> Result<f64> {
        Ok(self.stress_a(y)?.at(l))
    }

    pub fn hessian_a(&self, y: &Deformation) -> Result<CyclicBand> {
        self.check(y)?;
        self.nodal.hessian(y.u.values())
    }

    pub fn hessian_from_bonds(&self, g: &LatticeFunction) -> Result<CyclicBand> {
        self.nodal.hessian_at_bonds(g.values())
    }

    pub fn solve_a(
        &self,
        y0: &Deformation,
        opts: NewtonOptions,
    ) -> Result<(Deformation, SolveReport)> {
        self.check(y0)?;
        let r = self.nodal.solve(y0.u.values(), opts)?;
        let y = Deformation::new(
            self.cfg,
            LatticeFunction::from_values(self.cfg.n, r.solution.clone())?,
        )?;
        Ok((y, r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::diff_stencil;
    use crate::force::paper6;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_load(n: usize, rng: &mut ChaCha8Rng) -> LatticeFunction {
        let f = LatticeFunction::from_fn(n, |_| rng.gen_range(-1.0..1.0));
        crate::chain::project_mean_zero(&f)
    }

    fn random_state(cfg: LatticeConfig, amp: f64, rng: &mut ChaCha8Rng) -> Deformation {
        let u = LatticeFunction::from_fn(cfg.n, |_| rng.gen_range(-amp..amp));
        Deformation::new(cfg, u).unwrap()
    }

    fn literal_energy(p: &AtomisticProblem, y: &Deformation) -> f64 {
        let e = p.cfg.eps;
        p.cfg
            .labels()
            .map(|l| e * p.model.eval(&diff_stencil(y, l)).unwrap() - e * p.f.at(l) * y.y(l))
            .sum()
    }

    fn literal_stress(p: &AtomisticProblem, y: &Deformation, l: i64) -> f64 {
        let d = |m: i64| p.model.grad(&diff_stencil(y, m)).unwrap();
        d(l - 1)[0] - d(l)[2] + d(l - 2)[1] + d(l - 1)[1] - d(l)[3] - d(l + 1)[3]
    }

    #[test]
    fn uniform_state_energy_and_stress() {
        for f in [0.8, 1.0, 1.2] {
            let cfg = LatticeConfig::canonical(16, f).unwrap();
            let m = PotentialModel::eam_paper();
            let p = AtomisticProblem::new(cfg, m.clone(), LatticeFunction::zeros(16)).unwrap();
            let y = Deformation::affine(cfg);
            let (w, w1, _) = m.cauchy_born(f).unwrap();
            assert!((p.energy_a(&y).unwrap() - 2.0 * w).abs() < 1e-12);
            assert!(p.grad_a(&y).unwrap().max_abs() < 1e-12);
            let s = p.stress_a(&y).unwrap();
            assert!(s.values().iter().all(|v| (v - w1).abs() < 1e-12));
        }
    }

    #[test]
    fn energy_matches_site_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = LatticeConfig::canonical(12, 1.0).unwrap();
        let p = AtomisticProblem::new(cfg, PotentialModel::eam_paper(), random_load(12, &mut rng))
            .unwrap();
        for _ in 0..5 {
            let y = random_state(cfg, 0.002, &mut rng);
            let a = p.energy_a(&y).unwrap();
            let b = literal_energy(&p, &y);
            assert!((a - b).abs() < 1e-13 * b.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cfg = LatticeConfig::canonical(10, 1.0).unwrap();
        let p = AtomisticProblem::new(cfg, PotentialModel::eam_paper(), random_load(10, &mut rng))
            .unwrap();
        let y = random_state(cfg, 0.003, &mut rng);
        let g = p.grad_a(&y).unwrap();
        assert!(g.values().iter().sum::<f64>().abs() < 1e-13);
        let h = 1e-7;
        for _ in 0..10 {
            let l = rng.gen_range(-9i64..=10);
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp.u.set(l, y.u.at(l) + h);
            ym.u.set(l, y.u.at(l) - h);
            let fd = (p.energy_a(&yp).unwrap() - p.energy_a(&ym).unwrap()) / (2.0 * h);
            assert!(
                (fd - g.at(l)).abs() < 1e-6 * g.at(l).abs().max(1e-3),
                "{fd} {}",
                g.at(l)
            );
        }
    }

    #[test]
    fn stress_formula_summation_by_parts_and_locality() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cfg = LatticeConfig::canonical(10, 1.0).unwrap();
        let p = AtomisticProblem::new(cfg, PotentialModel::eam_paper(), random_load(10, &mut rng))
            .unwrap();
        let y = random_state(cfg, 0.003, &mut rng);
        let s = p.stress_a(&y).unwrap();
        for l in cfg.labels() {
            assert!((s.at(l) - literal_stress(&p, &y, l)).abs() < 1e-12);
        }
        let e = cfg.eps;
        for _ in 0..5 {
            let v = LatticeFunction::from_fn(10, |_| rng.gen_range(-1.0..1.0));
            let lhs: f64 = cfg
                .labels()
                .map(|l| e * s.at(l) * (v.at(l) - v.at(l - 1)) / e)
                .sum();
            let t = 1e-6;
            let shift = |sgn: f64| {
                let mut w = y.clone();
                for l in cfg.labels() {
                    w.u.set(l, y.u.at(l) + sgn * t * v.at(l));
                }
                p.energy_a(&w).unwrap()
            };
            let fv: f64 = cfg.labels().map(|l| e * p.f.at(l) * v.at(l)).sum();
            let dd = (shift(1.0) - shift(-1.0)) / (2.0 * t) + fv;
            assert!((lhs - dd).abs() < 1e-6 * lhs.abs().max(1.0));
        }
        // perturbing site m moves σ^a only on bonds m−3 ..= m+4
        let m = 2i64;
        let mut w = y.clone();
        w.u.set(m, y.u.at(m) + 1e-3);
        let s2 = p.stress_a(&w).unwrap();
        for l in cfg.labels() {
            let changed = (s2.at(l) - s.at(l)).abs() > 0.0;
            let near = (m - 3..=m + 4).contains(&l);
            assert!(!changed || near, "bond {l}");
        }
    }

    #[test]
    fn hessian_is_symmetric_with_zero_row_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let cfg = LatticeConfig::canonical(10, 1.0).unwrap();
        let p = AtomisticProblem::new(cfg, PotentialModel::eam_paper(), LatticeFunction::zeros(10))
            .unwrap();
        let y = random_state(cfg, 0.003, &mut rng);
        let h = p.hessian_a(&y).unwrap();
        for i in 0..20 {
            let row: f64 = (0..20).map(|j| h.get(i, j)).sum();
            let scale: f64 = (0..20).map(|j| h.get(i, j).abs()).sum();
            assert!(row.abs() < 1e-12 * scale);
            for j in 0..20 {
                assert_eq!(h.get(i, j), h.get(j, i));
            }
        }
    }

    #[test]
    fn solver_zero_load_and_paper_load() {
        let cfg = LatticeConfig::canonical(16, 1.0).unwrap();
        let p = AtomisticProblem::new(cfg, PotentialModel::eam_paper(), LatticeFunction::zeros(16))
            .unwrap();
        let (_, r) = p
            .solve_a(&Deformation::affine(cfg), NewtonOptions::default())
            .unwrap();
        assert!(r.iterations <= 1);

        let l = 32;
        let cfg = LatticeConfig::canonical(2 * (l + 8), 1.0).unwrap();
        let p = AtomisticProblem::new(cfg, PotentialModel::eam_paper(), paper6(&cfg, l).unwrap())
            .unwrap();
        let (y, r) = p
            .solve_a(&Deformation::affine(cfg), NewtonOptions::default())
            .unwrap();
        assert!(r.final_residual_norm < 1e-10 && r.min_forward_gap > 0.0);
        for k in 1..cfg.n as i64 {
            assert!((y.u.at(k) + y.u.at(-k)).abs() < 1e-8);
        }
        // second start
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let y0 = Deformation::new(
            cfg,
            crate::chain::project_mean_zero(&random_state(cfg, 1e-4, &mut rng).u),
        )
        .unwrap();
        let (y2, _) = p.solve_a(&y0, NewtonOptions::default()).unwrap();
        for l in cfg.labels() {
            assert!((y.u.at(l) - y2.u.at(l)).abs() < 1e-10);
        }
    }
}
