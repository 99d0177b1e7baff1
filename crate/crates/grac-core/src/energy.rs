//! Energies written as functions of a vector of bond gradients `g`.
//!
//! Both the atomistic and the coupled energy are sums of site terms (a site
//! potential evaluated on four consecutive bonds) and Cauchy–Born terms
//! (`ω W(g_j)` on one element). Bond `j` of a site term with bonds
//! `[b0, b1, b2, b3]` plays the role of `g_{ℓ−1}, g_ℓ, g_{ℓ+1}, g_{ℓ+2}`.

use crate::chain::BondStencil;
use crate::error::Result;
use crate::potential::PotentialModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `V(D₁, D₂, D₋₁, D₋₂)`.
    Std,
    /// `V(D₁, D₂, D₋₁, 2D₋₁)`: continuum on the left.
    Left,
    /// `V(D₁, 2D₁, D₋₁, D₋₂)`: continuum on the right.
    Right,
}

impl Variant {
    /// Rows `D₁, D₂, D₋₁, D₋₂` against columns `g_{ℓ−1}, g_ℓ, g_{ℓ+1}, g_{ℓ+2}`.
    pub fn jacobian(self) -> [[f64; 4]; 4] {
        match self {
            Variant::Std => [
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0, 1.0],
                [0.0, -1.0, 0.0, 0.0],
                [-1.0, -1.0, 0.0, 0.0],
            ],
            Variant::Left => [
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0, 1.0],
                [0.0, -1.0, 0.0, 0.0],
                [0.0, -2.0, 0.0, 0.0],
            ],
            Variant::Right => [
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 2.0, 0.0],
                [0.0, -1.0, 0.0, 0.0],
                [-1.0, -1.0, 0.0, 0.0],
            ],
        }
    }

    /// Which of the four bond slots the variant reads.
    pub fn used(self) -> [bool; 4] {
        match self {
            Variant::Std => [true; 4],
            Variant::Left => [false, true, true, true],
            Variant::Right => [true, true, true, false],
        }
    }

    pub fn stencil(self, g: [f64; 4]) -> BondStencil {
        let j = self.jacobian();
        BondStencil::from_array(std::array::from_fn(|r| {
            (0..4).map(|c| j[r][c] * g[c]).sum()
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteTerm {
    pub weight: f64,
    pub variant: Variant,
    pub bonds: [usize; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondEnergy {
    pub model: PotentialModel,
    pub sites: Vec<SiteTerm>,
    /// `(element, ω)` pairs contributing `ω W(g_element)`.
    pub cauchy_born: Vec<(usize, f64)>,
}

impl BondEnergy {
    fn local(&self, t: &SiteTerm, g: &[f64]) -> [f64; 4] {
        let u = t.variant.used();
        std::array::from_fn(|c| if u[c] { g[t.bonds[c]] } else { 0.0 })
    }

    pub fn energy(&self, g: &[f64]) -> Result<f64> {
        let mut e = 0.0;
        for t in &self.sites {
            e += t.weight * self.model.eval(&t.variant.stencil(self.local(t, g)))?;
        }
        for &(j, w) in &self.cauchy_born {
            e += w * self.model.cauchy_born(g[j])?.0;
        }
        Ok(e)
    }

    /// `(E, ∂E/∂g)`.
    pub fn energy_gradient(&self, g: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut e = 0.0;
        let mut d = vec![0.0; g.len()];
        for t in &self.sites {
            let (v, dv, _) = self.model.eval2(&t.variant.stencil(self.local(t, g)))?;
            e += t.weight * v;
            let jac = t.variant.jacobian();
            let used = t.variant.used();
            for c in 0..4 {
                if used[c] {
                    d[t.bonds[c]] += t.weight * (0..4).map(|r| jac[r][c] * dv[r]).sum::<f64>();
                }
            }
        }
        for &(j, w) in &self.cauchy_born {
            let (wv, w1, _) = self.model.cauchy_born(g[j])?;
            e += w * wv;
            d[j] += w * w1;
        }
        Ok((e, d))
    }

    /// Visits every nonzero `(p, q, ∂²E/∂g_p∂g_q)` contribution, both
    /// orderings of off-diagonal pairs included.
    pub fn for_each_hessian(
        &self,
        g: &[f64],
        mut visit: impl FnMut(usize, usize, f64),
    ) -> Result<()> {
        for t in &self.sites {
            let h = self.model.hess(&t.variant.stencil(self.local(t, g)))?;
            let jac = t.variant.jacobian();
            let used = t.variant.used();
            for a in 0..4 {
                if !used[a] {
                    continue;
                }
                for b in 0..4 {
                    if !used[b] {
                        continue;
                    }
                    let mut s = 0.0;
                    for r in 0..4 {
                        for q in 0..4 {
                            s += jac[r][a] * h[r][q] * jac[q][b];
                        }
                    }
                    if s != 0.0 {
                        visit(t.bonds[a], t.bonds[b], t.weight * s);
                    }
                }
            }
        }
        for &(j, w) in &self.cauchy_born {
            visit(j, j, w * self.model.cauchy_born(g[j])?.2);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(rng: &mut ChaCha8Rng) -> (BondEnergy, Vec<f64>) {
        let nb = 12;
        let mut sites = Vec::new();
        for (k, v) in [Variant::Std, Variant::Left, Variant::Right, Variant::Std]
            .into_iter()
            .enumerate()
        {
            sites.push(SiteTerm {
                weight: 0.3 + 0.1 * k as f64,
                variant: v,
                bonds: std::array::from_fn(|c| (2 * k + c) % nb),
            });
        }
        let e = BondEnergy {
            model: PotentialModel::eam_paper(),
            sites,
            cauchy_born: vec![(9, 0.7), (10, 1.3), (11, 0.2)],
        };
        let g = (0..nb).map(|_| rng.gen_range(0.9..1.1)).collect();
        (e, g)
    }

    #[test]
    fn interface_variants_read_expected_bonds() {
        let g = [1.1, 0.9, 1.05, 0.95];
        let l = Variant::Left.stencil(g);
        assert_eq!(l.as_array(), [1.05, 2.0, -0.9, -1.8]);
        let r = Variant::Right.stencil(g);
        assert_eq!(r.as_array(), [1.05, 2.1, -0.9, -2.0]);
        let s = Variant::Std.stencil(g);
        assert_eq!(s, BondStencil::from_bonds(g));
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let (e, g) = sample(&mut rng);
            let (_, d) = e.energy_gradient(&g).unwrap();
            let mut hd = vec![vec![0.0; g.len()]; g.len()];
            e.for_each_hessian(&g, |p, q, v| hd[p][q] += v).unwrap();
            let h = 1e-5;
            for p in 0..g.len() {
                let mut gp = g.clone();
                let mut gm = g.clone();
                gp[p] += h;
                gm[p] -= h;
                let fd = (e.energy(&gp).unwrap() - e.energy(&gm).unwrap()) / (2.0 * h);
                assert!((fd - d[p]).abs() < 1e-6 * d[p].abs().max(1.0));
                let (_, dp) = e.energy_gradient(&gp).unwrap();
                let (_, dm) = e.energy_gradient(&gm).unwrap();
                for q in 0..g.len() {
                    let fd2 = (dp[q] - dm[q]) / (2.0 * h);
                    assert!(
                        (fd2 - hd[q][p]).abs() < 1e-5 * hd[q][p].abs().max(1.0),
                        "{p} {q}"
                    );
                }
            }
        }
    }
}
