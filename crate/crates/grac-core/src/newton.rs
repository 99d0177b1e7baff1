//! Damped Newton on periodic nodal displacements.
//!
//! Node `k` carries `u_k`; element `j` joins node `j−1` to node `j` (element
//! `0` wraps from the last node), so `g_j = F + (u_j − u_{j−1})/h_j`. The
//! total energy is `E(g(u)) − Σ c_k u_k`. Translations are removed by pinning
//! node 0 during the linear solves and projecting out a weighted mean.

use serde::{Deserialize, Serialize};

use crate::banded::CyclicBand;
use crate::energy::BondEnergy;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub min_forward_gap: f64,
}

#[derive(Debug, Clone)]
pub struct NodalProblem {
    pub energy: BondEnergy,
    pub f: f64,
    /// Element lengths, `h[j]` for element `j`.
    pub h: Vec<f64>,
    /// Linear load coefficients `c_k`.
    pub load: Vec<f64>,
    /// Weights of the mean that is fixed to zero.
    pub mean_weights: Vec<f64>,
    /// Scale `ε` of the residual norm `(ε Σ grad²)^{1/2}`.
    pub eps: f64,
}

impl NodalProblem {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn bonds(&self, u: &[f64]) -> Vec<f64> {
        let k = self.len();
        (0..k)
            .map(|j| self.f + (u[j] - u[(j + k - 1) % k]) / self.h[j])
            .collect()
    }

    pub fn total_energy(&self, u: &[f64]) -> Result<f64> {
        let g = self.bonds(u);
        let e = self.energy.energy(&g)?;
        Ok(e - self.load.iter().zip(u).map(|(c, x)| c * x).sum::<f64>())
    }

    /// `σ̄_j − σ̄_{j+1} − c_k` with `σ̄_j = h_j⁻¹ ∂E/∂g_j`.
    pub fn gradient_from_bond_gradient(&self, dg: &[f64]) -> Vec<f64> {
        let k = self.len();
        (0..k)
            .map(|i| {
                let n = (i + 1) % k;
                dg[i] / self.h[i] - dg[n] / self.h[n] - self.load[i]
            })
            .collect()
    }

    pub fn energy_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let g = self.bonds(u);
        let (e, dg) = self.energy.energy_gradient(&g)?;
        let ext = self.load.iter().zip(u).map(|(c, x)| c * x).sum::<f64>();
        Ok((e - ext, self.gradient_from_bond_gradient(&dg)))
    }

    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.energy_gradient(u)?.1)
    }

    pub fn hessian(&self, u: &[f64]) -> Result<CyclicBand> {
        self.hessian_at_bonds(&self.bonds(u))
    }

    pub fn hessian_at_bonds(&self, g: &[f64]) -> Result<CyclicBand> {
        let k = self.len();
        let mut hm = CyclicBand::zeros(k, 4);
        self.energy.for_each_hessian(g, |p, q, v| {
            let bp = [(p, 1.0 / self.h[p]), ((p + k - 1) % k, -1.0 / self.h[p])];
            let bq = [(q, 1.0 / self.h[q]), ((q + k - 1) % k, -1.0 / self.h[q])];
            for &(a, ca) in &bp {
                for &(b, cb) in &bq {
                    hm.add_full(a, b, ca * cb * v);
                }
            }
        })?;
        Ok(hm)
    }

    pub fn residual_norm(&self, grad: &[f64]) -> f64 {
        (self.eps * grad.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    pub fn remove_mean(&self, u: &mut [f64]) {
        let w: f64 = self.mean_weights.iter().sum();
        let m = self
            .mean_weights
            .iter()
            .zip(u.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / w;
        u.iter_mut().for_each(|x| *x -= m);
    }

    /// Solves `H δ = −grad` with node 0 pinned; a diagonal shift is added
    /// until the factorisation is positive definite.
    fn newton_direction(&self, u: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
        let mut hm = self.hessian(u)?;
        let p0 = hm.position(0);
        hm.band_mut().pin(p0);
        let mut rhs: Vec<f64> = hm.permute(&grad.iter().map(|x| -x).collect::<Vec<_>>());
        rhs[p0] = 0.0;
        let scale = hm.band().max_abs_diagonal().max(f64::MIN_POSITIVE);
        let mut mu = 0.0;
        for _ in 0..60 {
            let mut b = hm.band().clone();
            if mu > 0.0 {
                b.shift_diagonal(mu);
            }
            if let Ok(f) = b.ldlt(true) {
                return Ok(hm.unpermute(&f.solve(&rhs)));
            }
            mu = if mu == 0.0 { 1e-10 * scale } else { 10.0 * mu };
        }
        Err(Error::Solver("Hessian could not be regularised".into()))
    }

    pub fn solve(&self, u0: &[f64], opts: NewtonOptions) -> Result<SolveReport> {
        let mut u = u0.to_vec();
        self.remove_mean(&mut u);
        let (mut e, mut grad) = self.energy_gradient(&u)?;
        let mut res = self.residual_norm(&grad);
        let mut it = 0;
        while res >= opts.tol {
            if it >= opts.max_iter {
                return Err(Error::Solver(format!(
                    "no convergence after {it} iterations, residual {res:e}"
                )));
            }
            it += 1;
            let dir = self.newton_direction(&u, &grad)?;
            let slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
                let ok_gap = self.bonds(&trial).iter().all(|&x| x > 0.0);
                if ok_gap {
                    if let Ok((et, gt)) = self.energy_gradient(&trial) {
                        let rt = self.residual_norm(&gt);
                        let armijo = et <= e + 1e-4 * alpha * slope;
                        let flat = (alpha * slope).abs() < 1e-12 * e.abs().max(1.0) && rt < res;
                        if armijo || flat {
                            accepted = Some((trial, et, gt, rt));
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            let Some((trial, et, gt, rt)) = accepted else {
                return Err(Error::Solver(format!(
                    "line search failed at iteration {it}, residual {res:e}"
                )));
            };
            u = trial;
            e = et;
            grad = gt;
            res = rt;
        }
        self.remove_mean(&mut u);
        let gap = self.bonds(&u).iter().copied().fold(f64::INFINITY, f64::min);
        if !(gap > 0.0) {
            return Err(Error::Solver(format!(
                "solution has non-positive bond {gap:e}"
            )));
        }
        Ok(SolveReport {
            solution: u,
            iterations: it,
            final_residual_norm: res,
            min_forward_gap: gap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{SiteTerm, Variant};
    use crate::potential::PotentialModel;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain(k: usize, model: PotentialModel, rng: &mut ChaCha8Rng) -> NodalProblem {
        let eps = 1.0 / k as f64;
        let sites = (0..k)
            .map(|l| SiteTerm {
                weight: eps,
                variant: Variant::Std,
                bonds: std::array::from_fn(|c| (l + k - 1 + c) % k),
            })
            .collect();
        let mut load: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.05..0.05) * eps).collect();
        let m = load.iter().sum::<f64>() / k as f64;
        load.iter_mut().for_each(|x| *x -= m);
        NodalProblem {
            energy: BondEnergy {
                model,
                sites,
                cauchy_born: vec![],
            },
            f: 1.0,
            h: vec![eps; k],
            load,
            mean_weights: vec![1.0; k],
            eps,
        }
    }

    #[test]
    fn hessian_matches_finite_difference_of_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = chain(20, PotentialModel::eam_paper(), &mut rng);
        let u: Vec<f64> = (0..20).map(|_| rng.gen_range(-0.002..0.002)).collect();
        let hm = p.hessian(&u).unwrap();
        let h = 1e-7;
        for j in 0..20 {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let gp = p.gradient(&up).unwrap();
            let gm = p.gradient(&um).unwrap();
            for i in 0..20 {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                assert!((fd - hm.get(i, j)).abs() < 1e-5 * fd.abs().max(1.0));
            }
        }
        let dense = DMatrix::from_fn(20, 20, |i, j| hm.get(i, j));
        assert!((dense.clone() - dense.transpose()).amax() < 1e-12);
    }

    #[test]
    fn newton_converges_quadratically_to_stationary_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = chain(32, PotentialModel::eam_paper(), &mut rng);
        let r = p.solve(&vec![0.0; 32], NewtonOptions::default()).unwrap();
        assert!(r.final_residual_norm < 1e-10);
        assert!(r.iterations < 10);
        let mean: f64 = r.solution.iter().sum::<f64>() / 32.0;
        assert!(mean.abs() < 1e-15);
    }

    #[test]
    fn zero_load_keeps_affine_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut p = chain(16, PotentialModel::morse_paper(), &mut rng);
        p.load.iter_mut().for_each(|x| *x = 0.0);
        let r = p.solve(&vec![0.0; 16], NewtonOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.solution.iter().all(|&x| x == 0.0));
    }
}
