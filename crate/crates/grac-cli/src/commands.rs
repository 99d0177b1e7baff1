use std::fs;
use std::path::{Path, PathBuf};

use grac_core::adaptivity::{
    adapt_loop_with, reference_solution, AdaptRecord, AdaptRun, StopReason,
};
use grac_core::chain::diff_stencil;
use grac_core::efficiency::{self, EfficiencyAudit};
use grac_core::potential::{assumption_ratios, DerivativeRatios};
use grac_core::{BondStencil, CoupledState, Error, PotentialModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Experiment;

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_STABILITY: i32 = 4;
pub const EXIT_AUDIT: i32 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Stability(_) => EXIT_STABILITY,
        Error::Solver(_)
        | Error::Domain(_)
        | Error::Mesh(_)
        | Error::MeshOp(_)
        | Error::EmptySet => EXIT_SOLVER,
    }
}

/// One line of `records.csv`.
#[derive(Debug, Serialize)]
pub struct CsvRow {
    pub iteration: usize,
    pub dof: usize,
    pub n_atomistic: usize,
    pub true_error: f64,
    pub eta_mo: f64,
    pub eta_cg: f64,
    pub eta_z: f64,
    pub eta_hybrid: f64,
    pub osc: f64,
    pub total_bound: f64,
    pub efficiency_factor: f64,
    pub kappa: f64,
    pub c_a: f64,
    pub audit_ok: bool,
}

pub const CSV_COLUMNS: [&str; 14] = [
    "iteration",
    "dof",
    "n_atomistic",
    "true_error",
    "eta_mo",
    "eta_cg",
    "eta_z",
    "eta_hybrid",
    "osc",
    "total_bound",
    "efficiency_factor",
    "kappa",
    "c_a",
    "audit_ok",
];

impl From<&AdaptRecord> for CsvRow {
    fn from(r: &AdaptRecord) -> Self {
        CsvRow {
            iteration: r.iteration,
            dof: r.dof,
            n_atomistic: r.n_atomistic,
            true_error: r.true_error,
            eta_mo: r.eta_mo,
            eta_cg: r.eta_cg,
            eta_z: r.eta_z,
            eta_hybrid: r.eta_hybrid,
            osc: r.osc,
            total_bound: r.total_bound,
            efficiency_factor: r.efficiency_factor,
            kappa: r.kappa,
            c_a: r.c_a,
            audit_ok: r.audit_ok,
        }
    }
}

pub fn write_records(path: &Path, records: &[AdaptRecord]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::io(path, e))?;
    for r in records {
        w.serialize(CsvRow::from(r))
            .map_err(|e| Failure::io(path, e))?;
    }
    if records.is_empty() {
        w.write_record(CSV_COLUMNS)
            .map_err(|e| Failure::io(path, e))?;
    }
    w.flush().map_err(|e| Failure::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(path, e))?;
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn prepare_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

fn finish(run: AdaptRun) -> Result<AdaptRun, Failure> {
    match &run.failure {
        Some(e) => Err(Failure::from(e.clone())),
        None => Ok(run),
    }
}

#[derive(Serialize)]
struct IterationDump<'a> {
    record: &'a AdaptRecord,
    mesh: &'a grac_core::ACMesh,
    report: &'a grac_core::EstimatorReport,
    marks: &'a [usize],
}

#[derive(Debug)]
pub struct RunOutput {
    pub run: AdaptRun,
    pub records_path: PathBuf,
}

/// Runs the adaptive loop and writes `records.csv`; with `dump`, one JSON
/// file per iteration under `iterations/`. A failed run still writes the
/// rows it produced.
pub fn cmd_run(exp: &Experiment, out: &Path, dump: bool) -> Result<RunOutput, Failure> {
    prepare_dir(out)?;
    fs::write(out.join("config.toml"), exp.config.to_toml()).map_err(|e| Failure::io(out, e))?;
    let mut dumps = Vec::new();
    let run = adapt_loop_with(&exp.problem, &exp.adapt, |v| {
        if dump {
            let d = IterationDump {
                record: v.record,
                mesh: &v.state.mesh,
                report: v.report,
                marks: v.marks,
            };
            dumps.push((
                v.record.iteration,
                serde_json::to_value(&d).expect("dump serialises"),
            ));
        }
        Ok(())
    })?;
    let records_path = out.join("records.csv");
    write_records(&records_path, &run.records)?;
    if dump {
        let dir = out.join("iterations");
        prepare_dir(&dir)?;
        for (it, v) in &dumps {
            write_json(&dir.join(format!("iter_{it:04}.json")), v)?;
        }
    }
    Ok(RunOutput {
        run: finish(run)?,
        records_path,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSigns {
    pub d11: f64,
    pub d22: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialCheck {
    pub model: String,
    pub parameters: PotentialModel,
    pub sites: usize,
    pub min_bond: f64,
    pub max_bond: f64,
    pub ratios: DerivativeRatios,
    /// Second partials at the reference stencil `(1, 2, −1, −2)`.
    pub reference: ReferenceSigns,
}

pub fn paper_models() -> [PotentialModel; 3] {
    [
        PotentialModel::eam_paper(),
        PotentialModel::morse_paper(),
        PotentialModel::LennardJones {},
    ]
}

/// Derivative ratios of one model along its own atomistic solution.
pub fn check_model(exp: &Experiment, model: &PotentialModel) -> Result<PotentialCheck, Failure> {
    let mut problem = exp.problem.clone();
    problem.model = model.clone();
    let y = reference_solution(&problem, exp.adapt.newton)?;
    let stencils: Vec<BondStencil> = problem
        .lattice
        .labels()
        .map(|l| diff_stencil(&y, l))
        .collect();
    let g = y.bonds();
    let ratios = assumption_ratios(model, &stencils)?;
    let h = model.hess(&BondStencil::uniform(1.0))?;
    Ok(PotentialCheck {
        model: model.name(),
        parameters: model.clone(),
        sites: stencils.len(),
        min_bond: g.values().iter().copied().fold(f64::INFINITY, f64::min),
        max_bond: g.values().iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ratios,
        reference: ReferenceSigns {
            d11: h[0][0],
            d22: h[1][1],
            ok: h[0][0] > 0.0 && h[1][1] < 0.0,
        },
    })
}

pub fn potential_table(checks: &[PotentialCheck]) -> String {
    let mut s = format!(
        "{:<14} {:>12} {:>12} {:>12} {:>22} {:>10} {:>10} {:>10}\n",
        "model", "r1", "r2", "r3", "|d11 V| range", "d11 sign", "d22 sign", "d1-1 sign"
    );
    for c in checks {
        let t = &c.ratios.sign_table;
        s += &format!(
            "{:<14} {:>12} {:>12} {:>12} {:>22} {:>10} {:>10} {:>10}\n",
            c.model,
            fmt_ratio(&c.ratios.r1),
            fmt_ratio(&c.ratios.r2),
            fmt_ratio(&c.ratios.r3),
            format!("[{:.4}, {:.4}]", t.d11.min_abs, t.d11.max_abs),
            format!("{:?}", t.d11.sign).to_lowercase(),
            format!("{:?}", t.d22.sign).to_lowercase(),
            format!("{:?}", t.d1m1.sign).to_lowercase(),
        );
    }
    s
}

fn fmt_ratio(r: &grac_core::potential::Ratio) -> String {
    match r {
        grac_core::potential::Ratio::Finite(v) => format!("{v:.4}"),
        grac_core::potential::Ratio::Unbounded => "inf".into(),
    }
}

pub fn cmd_check_potential(exp: &Experiment, out: &Path) -> Result<Vec<PotentialCheck>, Failure> {
    let checks = paper_models()
        .iter()
        .map(|m| check_model(exp, m))
        .collect::<Result<Vec<_>, _>>()?;
    prepare_dir(out)?;
    write_json(&out.join("potential.json"), &checks)?;
    Ok(checks)
}

#[derive(Debug, Serialize)]
pub struct AuditIteration {
    pub iteration: usize,
    pub dof: usize,
    pub n_atomistic: usize,
    pub audit: EfficiencyAudit,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupted: Option<EfficiencyAudit>,
}

#[derive(Debug, Serialize)]
pub struct AuditFile {
    pub estimator: grac_core::adaptivity::EstimatorKind,
    pub noise: Option<f64>,
    pub seed: u64,
    pub stop: StopReason,
    pub iterations: Vec<AuditIteration>,
    pub violations: usize,
    pub corrupted_violations: usize,
    pub lipschitz_violations: usize,
    pub worst_relative_margin: f64,
    pub ok: bool,
}

/// Nodal displacements shifted by `amp·ε·ξ`, `ξ` uniform in `[−1, 1]`.
pub fn corrupt(s: &CoupledState, amp: f64, rng: &mut ChaCha8Rng) -> CoupledState {
    let mut c = s.clone();
    let e = s.mesh.eps;
    for u in c.u.iter_mut() {
        *u += amp * e * rng.gen_range(-1.0..=1.0);
    }
    c
}

/// Runs the loop, auditing every iteration, and writes `audit.json`.
/// Returns the file contents; the caller maps `!ok` to the audit exit code.
pub fn cmd_audit(exp: &Experiment, out: &Path, noise: Option<f64>) -> Result<AuditFile, Failure> {
    if let Some(a) = noise {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Config(format!(
                "noise amplitude {a} must be finite and nonnegative"
            ))
            .into());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(exp.config.seed);
    let ya = match noise {
        Some(_) => Some(reference_solution(&exp.problem, exp.adapt.newton)?),
        None => None,
    };
    let mut iterations = Vec::new();
    let run = adapt_loop_with(&exp.problem, &exp.adapt, |v| {
        let corrupted = match (noise, &ya) {
            (Some(a), Some(ya)) => Some(efficiency::audit(
                ya,
                v.problem,
                &corrupt(v.state, a, &mut rng),
            )?),
            _ => None,
        };
        iterations.push(AuditIteration {
            iteration: v.record.iteration,
            dof: v.record.dof,
            n_atomistic: v.record.n_atomistic,
            audit: v.audit.clone(),
            corrupted,
        });
        Ok(())
    })?;
    let violations = iterations.iter().map(|i| i.audit.violations).sum();
    let corrupted_violations = iterations
        .iter()
        .filter_map(|i| i.corrupted.as_ref())
        .map(|a| a.violations)
        .sum();
    let file = AuditFile {
        estimator: exp.adapt.estimator,
        noise,
        seed: exp.config.seed,
        stop: run.stop,
        violations,
        corrupted_violations,
        lipschitz_violations: iterations
            .iter()
            .map(|i| i.audit.lipschitz_violations)
            .sum(),
        worst_relative_margin: iterations
            .iter()
            .map(|i| i.audit.worst_relative_margin)
            .fold(f64::INFINITY, f64::min),
        ok: violations == 0 && corrupted_violations == 0,
        iterations,
    };
    prepare_dir(out)?;
    write_json(&out.join("audit.json"), &file)?;
    if let Some(e) = run.failure {
        return Err(e.into());
    }
    Ok(file)
}
