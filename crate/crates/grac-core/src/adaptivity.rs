//! Dörfler marking, refinement with the atomistic-merge rule and the
//! adaptive loop.

use serde::{Deserialize, Serialize};

use crate::atomistic::AtomisticProblem;
use crate::chain::{Deformation, LatticeConfig, LatticeFunction};
use crate::coupling::{CoupledProblem, CoupledState};
use crate::efficiency::{audit, EfficiencyAudit};
use crate::error::{Error, Result};
use crate::estimators::{true_error, EstimatorReport, StabilityChoice};
use crate::mesh::ACMesh;
use crate::newton::NewtonOptions;
use crate::potential::PotentialModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    #[default]
    Residual,
    Hybrid,
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual" => Ok(Self::Residual),
            "hybrid" => Ok(Self::Hybrid),
            _ => Err(Error::Config(format!(
                "unknown estimator {s:?} (residual|hybrid)"
            ))),
        }
    }
}

/// Minimal set with `Σ_M ρ² ≥ θ Σ ρ²`, taken greedily by descending `ρ²`
/// with ties broken by lower index. Returned in ascending index order.
pub fn doerfler_mark(rho2: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Config(format!("theta = {theta} not in (0, 1)")));
    }
    if let Some(x) = rho2.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::Config(format!("indicator {x} is negative or NaN")));
    }
    let total: f64 = rho2.iter().sum();
    if total == 0.0 {
        return Ok(vec![]);
    }
    let mut order: Vec<usize> = (0..rho2.len()).collect();
    order.sort_by(|&i, &j| rho2[j].total_cmp(&rho2[i]).then(i.cmp(&j)));
    let target = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for i in order {
        if acc >= target {
            break;
        }
        acc += rho2[i];
        marked.push(i);
    }
    marked.sort_unstable();
    Ok(marked)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RefineOutcome {
    pub bisected: usize,
    pub merged: usize,
    /// Marked length-`ε` elements that can be neither bisected nor merged
    /// (away from the interface, or a merge that would reach a fixed
    /// element).
    pub skipped: Vec<(i64, i64)>,
}

/// Bisects the marked elements; a marked length-`ε` element next to the
/// interface layer is merged into the atomistic region instead.
pub fn refine(m: &ACMesh, marks: &[usize]) -> Result<(ACMesh, RefineOutcome)> {
    let mut out = RefineOutcome::default();
    for &j in marks {
        if j >= m.k() {
            return Err(Error::MeshOp(format!("marked element {j} out of range")));
        }
        if m.is_fixed(j) || m.is_layer_element(j) {
            return Err(Error::MeshOp(format!("element {j} cannot be marked")));
        }
    }
    let targets: Vec<(i64, i64)> = marks.iter().map(|&j| m.element(j)).collect();
    let mut cur = m.clone();
    for (l, r) in targets {
        let Some(j) = cur.index_of(r).filter(|&j| cur.element(j) == (l, r)) else {
            continue;
        };
        if r - l >= 2 {
            cur = cur.bisect(j)?;
            out.bisected += 1;
        } else if cur.interface_side(j).is_some() {
            match cur.merge_into_atomistic(j) {
                Ok(next) => {
                    cur = next;
                    out.merged += 1;
                }
                Err(_) => out.skipped.push((l, r)),
            }
        } else {
            out.skipped.push((l, r));
        }
    }
    let v = cur.validate();
    if !v.is_empty() {
        return Err(Error::Mesh(v));
    }
    Ok((cur, out))
}

/// Whether marking element `j` can change the mesh: it is long enough to
/// bisect or it borders the interface layer.
pub fn refinable(m: &ACMesh, j: usize) -> bool {
    m.atoms(j) >= 2 || m.interface_side(j).is_some()
}

/// Lattice, load and interaction of one adaptive experiment.
#[derive(Debug, Clone)]
pub struct AdaptProblem {
    pub lattice: LatticeConfig,
    /// Half-width of the loaded band; sets the initial mesh.
    pub l: usize,
    pub model: PotentialModel,
    pub force: LatticeFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    pub theta: f64,
    pub max_dof: usize,
    pub estimator: EstimatorKind,
    pub stability: StabilityChoice,
    pub newton: NewtonOptions,
    pub max_iterations: usize,
    /// Nothing is marked once the driving bound drops below this.
    pub bound_floor: f64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            max_dof: 200,
            estimator: EstimatorKind::Residual,
            stability: StabilityChoice::Surrogate,
            newton: NewtonOptions::default(),
            max_iterations: 500,
            bound_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptRecord {
    pub iteration: usize,
    pub dof: usize,
    pub n_atomistic: usize,
    pub true_error: f64,
    pub eta_mo: f64,
    pub eta_cg: f64,
    pub eta_z: f64,
    pub eta_hybrid: f64,
    pub osc: f64,
    /// Residual bound `(1/c_a)(η_mo² + η_cg² + ½ osc²)^{1/2}`.
    pub eta_res_total: f64,
    /// Hybrid bound `(1/c_a) η^hybrid`.
    pub eta_hybrid_total: f64,
    /// Bound of the estimator driving the refinement.
    pub total_bound: f64,
    /// `total_bound / true_error`.
    pub efficiency_factor: f64,
    pub kappa: f64,
    pub c_a: f64,
    pub audit_ok: bool,
}

/// Everything computed in one iteration, handed to the observer.
pub struct IterationView<'a> {
    pub record: &'a AdaptRecord,
    pub problem: &'a CoupledProblem,
    pub state: &'a CoupledState,
    pub report: &'a EstimatorReport,
    pub audit: &'a EfficiencyAudit,
    pub marks: &'a [usize],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxDof,
    NothingMarked,
    MaxIterations,
    Failed,
}

#[derive(Debug)]
pub struct AdaptRun {
    pub records: Vec<AdaptRecord>,
    pub stop: StopReason,
    pub failure: Option<Error>,
    pub reference: Deformation,
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Config(format!(
                "theta = {} not in (0, 1)",
                self.theta
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if let StabilityChoice::Fixed(c) = self.stability {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("fixed c_a = {c} must be positive")));
            }
        }
        Ok(())
    }
}

pub fn reference_solution(problem: &AdaptProblem, opts: NewtonOptions) -> Result<Deformation> {
    let a = AtomisticProblem::new(
        problem.lattice,
        problem.model.clone(),
        problem.force.clone(),
    )?;
    Ok(a.solve_a(&Deformation::affine(problem.lattice), opts)?.0)
}

pub fn adapt_loop(problem: &AdaptProblem, cfg: &AdaptConfig) -> Result<AdaptRun> {
    adapt_loop_with(problem, cfg, |_| Ok(()))
}

/// Runs the loop, calling `observe` after each iteration. Errors before the
/// first iteration are returned directly; later ones end the run with the
/// records gathered so far.
pub fn adapt_loop_with(
    problem: &AdaptProblem,
    cfg: &AdaptConfig,
    mut observe: impl FnMut(&IterationView) -> Result<()>,
) -> Result<AdaptRun> {
    cfg.validate()?;
    let lat = problem.lattice;
    let mesh0 = ACMesh::build_initial(problem.l, lat.n, lat.eps)?;
    if cfg.max_dof <= mesh0.k() {
        return Err(Error::Config(format!(
            "max_dof = {} does not exceed the initial {} nodes",
            cfg.max_dof,
            mesh0.k()
        )));
    }
    let reference = reference_solution(problem, cfg.newton)?;
    let mut records = Vec::new();
    let mut mesh = mesh0;
    let mut prev: Option<CoupledState> = None;
    for it in 1..=cfg.max_iterations {
        let step = iterate(
            problem,
            cfg,
            &reference,
            &mesh,
            prev.as_ref(),
            it,
            &mut observe,
        );
        let (state, marks, record) = match step {
            Ok(x) => x,
            Err(e) => {
                return Ok(AdaptRun {
                    records,
                    stop: StopReason::Failed,
                    failure: Some(e),
                    reference,
                })
            }
        };
        records.push(record);
        if marks.is_empty() {
            return Ok(AdaptRun {
                records,
                stop: StopReason::NothingMarked,
                failure: None,
                reference,
            });
        }
        let next = match refine(&mesh, &marks) {
            Ok((m, _)) => m,
            Err(e) => {
                return Ok(AdaptRun {
                    records,
                    stop: StopReason::Failed,
                    failure: Some(e),
                    reference,
                })
            }
        };
        if next.k() > cfg.max_dof {
            return Ok(AdaptRun {
                records,
                stop: StopReason::MaxDof,
                failure: None,
                reference,
            });
        }
        if next == mesh {
            return Ok(AdaptRun {
                records,
                stop: StopReason::NothingMarked,
                failure: None,
                reference,
            });
        }
        mesh = next;
        prev = Some(state);
    }
    Ok(AdaptRun {
        records,
        stop: StopReason::MaxIterations,
        failure: None,
        reference,
    })
}

fn iterate(
    problem: &AdaptProblem,
    cfg: &AdaptConfig,
    reference: &Deformation,
    mesh: &ACMesh,
    prev: Option<&CoupledState>,
    it: usize,
    observe: &mut impl FnMut(&IterationView) -> Result<()>,
) -> Result<(CoupledState, Vec<usize>, AdaptRecord)> {
    let p = CoupledProblem::new(
        problem.lattice,
        mesh.clone(),
        problem.model.clone(),
        problem.force.clone(),
    )?;
    let start = prev.map(|s| s.transfer(mesh));
    let (state, _) = p.solve_ac(start.as_ref(), cfg.newton)?;
    let report = EstimatorReport::compute(&p, &state, cfg.stability)?;
    let err = true_error(reference, &state);
    let efficiency = audit(reference, &p, &state)?;
    let mut rho = match cfg.estimator {
        EstimatorKind::Residual => report.rho_residual(),
        EstimatorKind::Hybrid => report.rho_hybrid(),
    };
    for (j, r) in rho.iter_mut().enumerate() {
        if mesh.is_fixed(j) || mesh.is_layer_element(j) || !refinable(mesh, j) {
            *r = 0.0;
        }
    }
    let rho2: Vec<f64> = rho.iter().map(|r| r * r).collect();
    let hybrid = report.hybrid_bound();
    let bound = match cfg.estimator {
        EstimatorKind::Residual => report.total_bound,
        EstimatorKind::Hybrid => hybrid,
    };
    let marks = if bound < cfg.bound_floor {
        vec![]
    } else {
        doerfler_mark(&rho2, cfg.theta)?
    };
    let record = AdaptRecord {
        iteration: it,
        dof: mesh.k(),
        n_atomistic: mesh.n_atomistic(),
        true_error: err,
        eta_mo: report.eta_mo,
        eta_cg: report.eta_cg,
        eta_z: report.eta_z,
        eta_hybrid: report.eta_hybrid,
        osc: report.osc_total,
        eta_res_total: report.total_bound,
        eta_hybrid_total: hybrid,
        total_bound: bound,
        efficiency_factor: bound / err,
        kappa: mesh.kappa().value,
        c_a: report.c_a,
        audit_ok: efficiency.ok,
    };
    observe(&IterationView {
        record: &record,
        problem: &p,
        state: &state,
        report: &report,
        audit: &efficiency,
        marks: &marks,
    })?;
    Ok((state, marks, record))
}

/// Least-squares slope of `log(error)` against `log(dof)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(d, e) in points {
        let (x, y) = (d.ln(), e.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::force::paper6;
    use proptest::prelude::*;

    #[test]
    fn doerfler_examples() {
        let rho: Vec<f64> = [4.0, 3.0, 2.0, 1.0].iter().map(|x: &f64| x * x).collect();
        assert_eq!(doerfler_mark(&rho, 0.5).unwrap(), vec![0]);
        assert_eq!(doerfler_mark(&[0.0, 0.0, 2.0, 0.0], 0.5).unwrap(), vec![2]);
        assert_eq!(doerfler_mark(&[1.0; 7], 0.5).unwrap().len(), 4);
        assert_eq!(doerfler_mark(&[1.0; 6], 0.5).unwrap(), vec![0, 1, 2]);
        assert!(doerfler_mark(&[0.0; 5], 0.5).unwrap().is_empty());
        assert!(doerfler_mark(&[1.0], 1.0).is_err());
        assert!(doerfler_mark(&[-1.0], 0.5).is_err());
    }

    fn brute_min(rho2: &[f64], theta: f64) -> usize {
        let total: f64 = rho2.iter().sum();
        let n = rho2.len();
        (0u32..1 << n)
            .filter(|mask| {
                (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| rho2[i])
                    .sum::<f64>()
                    >= theta * total
            })
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap()
    }

    proptest! {
        #[test]
        fn doerfler_is_minimal(rho in prop::collection::vec(0.0f64..10.0, 1..10), theta in 0.05f64..0.95) {
            let rho2: Vec<f64> = rho.iter().map(|x| x * x).collect();
            let total: f64 = rho2.iter().sum();
            prop_assume!(total > 0.0);
            let m = doerfler_mark(&rho2, theta).unwrap();
            let mass: f64 = m.iter().map(|&i| rho2[i]).sum();
            prop_assert!(mass >= theta * total);
            let smallest = m.iter().map(|&i| rho2[i]).fold(f64::INFINITY, f64::min);
            prop_assert!(mass - smallest < theta * total);
            prop_assert_eq!(m.len(), brute_min(&rho2, theta));
        }
    }

    #[test]
    fn refine_rules() {
        let m = ACMesh::build_initial(16, 48, 1.0 / 48.0).unwrap();
        let (same, _) = refine(&m, &[]).unwrap();
        assert_eq!(same, m);
        let big = m
            .continuum_elements()
            .into_iter()
            .filter(|&j| !m.is_fixed(j))
            .max_by_key(|&j| m.atoms(j))
            .unwrap();
        let (r, o) = refine(&m, &[big]).unwrap();
        assert_eq!(r.k(), m.k() + 1);
        assert_eq!(o.bisected, 1);
        let adj = m.k1() - 2;
        assert_eq!(m.atoms(adj), 1);
        let (r, o) = refine(&m, &[adj]).unwrap();
        assert_eq!(o.merged, 1);
        assert_eq!(r.n_atomistic(), m.n_atomistic() + 1);
        assert!(r.validate().is_empty());
        let fixed = (0..m.k()).find(|&j| m.is_fixed(j)).unwrap();
        assert!(refine(&m, &[fixed]).is_err());
        let (r, o) = refine(&m, &[adj, big, m.k2() + 3]).unwrap();
        assert_eq!((o.bisected, o.merged), (1, 2));
        assert_eq!(r.n_atomistic(), m.n_atomistic() + 2);
    }

    fn small_problem(loaded: bool) -> AdaptProblem {
        let (n, l) = (48, 16);
        let lattice = LatticeConfig::canonical(n, 1.0).unwrap();
        let force = if loaded {
            paper6(&lattice, l).unwrap()
        } else {
            LatticeFunction::zeros(n)
        };
        AdaptProblem {
            lattice,
            l,
            model: PotentialModel::eam_paper(),
            force,
        }
    }

    #[test]
    fn zero_load_stops_after_one_iteration() {
        let run = adapt_loop(&small_problem(false), &AdaptConfig::default()).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.stop, StopReason::NothingMarked);
        let r = &run.records[0];
        assert!(r.eta_mo.abs() < 1e-12 && r.eta_cg == 0.0 && r.eta_res_total.abs() < 1e-12);
    }

    #[test]
    fn loop_increases_dof_and_keeps_fixed_elements() {
        let pr = small_problem(true);
        for est in [EstimatorKind::Residual, EstimatorKind::Hybrid] {
            let cfg = AdaptConfig {
                max_dof: 40,
                estimator: est,
                ..AdaptConfig::default()
            };
            let mut fixed_seen = Vec::new();
            let run = adapt_loop_with(&pr, &cfg, |v| {
                let m = &v.problem.mesh;
                fixed_seen.push(
                    m.fixed
                        .iter()
                        .all(|f| (0..m.k()).any(|j| m.element(j) == *f)),
                );
                Ok(())
            })
            .unwrap();
            assert!(run.failure.is_none(), "{:?}", run.failure);
            assert!(run.records.len() > 2);
            assert!(run
                .records
                .windows(2)
                .all(|w| w[1].dof > w[0].dof || w[1].n_atomistic > w[0].n_atomistic));
            assert!(run.records.iter().all(|r| r.dof <= 40));
            assert!(fixed_seen.iter().all(|&x| x));
            let first = &run.records[0];
            let last = run.records.last().unwrap();
            assert!(last.true_error < first.true_error);
        }
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..8)
            .map(|i| (10.0 * i as f64, 3.0 * (10.0 * i as f64).powf(-1.0)))
            .collect();
        assert!((loglog_slope(&pts) + 1.0).abs() < 1e-12);
    }
}
