//! Experiment configuration: TOML on disk, with every physical default
//! embedded so the builtin experiment needs no file.

use std::path::{Path, PathBuf};

use grac_core::adaptivity::{AdaptConfig, AdaptProblem, EstimatorKind};
use grac_core::force;
use grac_core::newton::NewtonOptions;
use grac_core::{ACMesh, Error, LatticeConfig, LatticeFunction, PotentialModel, StabilityChoice};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSection,
    pub potential: PotentialModel,
    pub force: ForceSpec,
    pub adapt: AdaptSection,
    pub solver: SolverSection,
    pub output: OutputSection,
    /// Seed for randomized runs (noise injection).
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    /// Half-width of the loaded band.
    pub l: usize,
    /// Sites per period is `2n`; defaults to `2(l + 8)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Macroscopic stretch.
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceSpec {
    Paper6 {},
    Zero {},
    /// CSV file with `label,value` rows.
    Tabulated {
        path: PathBuf,
    },
    Table {
        entries: Vec<(i64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptSection {
    pub theta: f64,
    pub max_dof: usize,
    pub estimator: EstimatorKind,
    pub stability: StabilityChoice,
    pub max_iterations: usize,
    pub bound_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub dump_meshes: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSection::default(),
            potential: PotentialModel::eam_paper(),
            force: ForceSpec::Paper6 {},
            adapt: AdaptSection::default(),
            solver: SolverSection::default(),
            output: OutputSection::default(),
            seed: 0,
        }
    }
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            l: 128,
            n: None,
            f: 1.0,
        }
    }
}

impl Default for AdaptSection {
    fn default() -> Self {
        let a = AdaptConfig::default();
        Self {
            theta: a.theta,
            max_dof: a.max_dof,
            estimator: a.estimator,
            stability: a.stability,
            max_iterations: a.max_iterations,
            bound_floor: a.bound_floor,
        }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = NewtonOptions::default();
        Self {
            tol: o.tol,
            max_iter: o.max_iter,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            dump_meshes: false,
        }
    }
}

/// Everything needed to run: the resolved problem and loop settings.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub problem: AdaptProblem,
    pub adapt: AdaptConfig,
}

impl ExperimentConfig {
    pub fn builtin(name: &str) -> Result<Self, Error> {
        match name {
            "paper6" => Ok(Self::default()),
            _ => Err(Error::Config(format!(
                "unknown builtin {name:?} (available: paper6)"
            ))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative load tables are resolved against the config's directory
        if let ForceSpec::Tabulated { path: p } = &mut cfg.force {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn n(&self) -> usize {
        self.lattice.n.unwrap_or(2 * (self.lattice.l + 8))
    }

    pub fn adapt_config(&self) -> AdaptConfig {
        let a = &self.adapt;
        AdaptConfig {
            theta: a.theta,
            max_dof: a.max_dof,
            estimator: a.estimator,
            stability: a.stability,
            newton: NewtonOptions {
                tol: self.solver.tol,
                max_iter: self.solver.max_iter,
            },
            max_iterations: a.max_iterations,
            bound_floor: a.bound_floor,
        }
    }

    pub fn lattice_config(&self) -> Result<LatticeConfig, Error> {
        if self.lattice.l == 0 {
            return Err(Error::Config("lattice.l must be positive".into()));
        }
        LatticeConfig::canonical(self.n(), self.lattice.f)
    }

    pub fn load_force(&self, lat: &LatticeConfig) -> Result<LatticeFunction, Error> {
        match &self.force {
            ForceSpec::Paper6 {} => force::paper6(lat, self.lattice.l),
            ForceSpec::Zero {} => Ok(LatticeFunction::zeros(lat.n)),
            ForceSpec::Table { entries } => force::tabulated(lat, entries),
            ForceSpec::Tabulated { path } => force::tabulated(lat, &read_table(path)?),
        }
    }

    /// Validates everything and resolves the problem; no side effects.
    pub fn build(&self) -> Result<Experiment, Error> {
        self.potential.validate()?;
        let lattice = self.lattice_config()?;
        let force = self.load_force(&lattice)?;
        let adapt = self.adapt_config();
        adapt.validate()?;
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::Config(
                "solver.tol must be positive and solver.max_iter nonzero".into(),
            ));
        }
        let mesh0 = ACMesh::build_initial(self.lattice.l, lattice.n, lattice.eps)?;
        if adapt.max_dof <= mesh0.k() {
            return Err(Error::Config(format!(
                "adapt.max_dof = {} does not exceed the initial {} nodes",
                adapt.max_dof,
                mesh0.k()
            )));
        }
        let problem = AdaptProblem {
            lattice,
            l: self.lattice.l,
            model: self.potential.clone(),
            force,
        };
        Ok(Experiment {
            config: self.clone(),
            problem,
            adapt,
        })
    }
}

fn read_table(path: &Path) -> Result<Vec<(i64, f64)>, Error> {
    let bad = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(bad)?;
    rd.deserialize::<(i64, f64)>()
        .map(|r| r.map_err(bad))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtin_is_default_and_builds() {
        let c = ExperimentConfig::builtin("paper6").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.n(), 272);
        let e = c.build().unwrap();
        assert!(e.problem.force.is_mean_zero());
        assert!(ExperimentConfig::builtin("nope").is_err());
    }

    #[test]
    fn empty_file_is_builtin() {
        assert_eq!(
            ExperimentConfig::from_toml("").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn partial_sections() {
        let c = ExperimentConfig::from_toml(
            "seed = 7\n[lattice]\nl = 64\n[adapt]\nestimator = \"hybrid\"\n[potential]\nkind = \"lj\"\n",
        )
        .unwrap();
        assert_eq!(c.lattice.l, 64);
        assert_eq!(c.n(), 144);
        assert_eq!(c.adapt.estimator, EstimatorKind::Hybrid);
        assert_eq!(c.adapt.theta, 0.5);
        assert_eq!(c.potential, PotentialModel::LennardJones {});
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "sed = 1\n",
            "[lattice]\nL = 3\n",
            "[adapt]\ntheta = 0.5\nfoo = 1\n",
            "[potential]\nkind = \"morse\"\na = 5.0\nb = 1.0\n",
            "[force]\nkind = \"paper6\"\nscale = 2.0\n",
            "[potential]\nkind = \"lj\"\nsigma = 1.0\n",
            "[output]\ndump = true\n",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn invalid_values_rejected_by_build() {
        let mut c = ExperimentConfig::default();
        c.adapt.theta = 1.0;
        assert!(c.build().is_err());
        let mut c = ExperimentConfig::default();
        c.adapt.max_dof = 10;
        assert!(c.build().is_err());
        let mut c = ExperimentConfig::default();
        c.lattice.n = Some(100);
        assert!(c.build().is_err());
        let mut c = ExperimentConfig::default();
        c.force = ForceSpec::Table {
            entries: vec![(1, 1.0)],
        };
        assert!(c.build().is_err());
    }

    #[test]
    fn tabulated_file_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("f.csv"), "label,value\n1, 0.5\n-1,-0.5\n").unwrap();
        std::fs::write(
            dir.path().join("c.toml"),
            "[lattice]\nl = 16\n[force]\nkind = \"tabulated\"\npath = \"f.csv\"\n",
        )
        .unwrap();
        let c = ExperimentConfig::load(&dir.path().join("c.toml")).unwrap();
        let e = c.build().unwrap();
        assert_eq!(e.problem.force.at(1), 0.5);
        assert_eq!(e.problem.force.at(-1), -0.5);
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            (
                1usize..500,
                proptest::option::of(10usize..2000),
                0.5f64..1.5,
            ),
            prop_oneof![
                Just(PotentialModel::eam_paper()),
                (0.5f64..10.0).prop_map(|a| PotentialModel::Morse { a }),
                Just(PotentialModel::LennardJones {}),
            ],
            prop_oneof![
                Just(ForceSpec::Paper6 {}),
                Just(ForceSpec::Zero {}),
                proptest::collection::vec((-50i64..50, -1e3f64..1e3), 0..5)
                    .prop_map(|entries| ForceSpec::Table { entries }),
            ],
            (
                0.01f64..0.99,
                1usize..10_000,
                any::<bool>(),
                prop_oneof![Just(None), (0.1f64..10.0).prop_map(Some)],
            ),
            (
                1e-14f64..1e-6,
                1usize..500,
                any::<bool>(),
                0u64..i64::MAX as u64,
            ),
        )
            .prop_map(
                |(
                    (l, n, f),
                    potential,
                    force,
                    (theta, max_dof, hybrid, fixed),
                    (tol, max_iter, dump, seed),
                )| {
                    ExperimentConfig {
                        lattice: LatticeSection { l, n, f },
                        potential,
                        force,
                        adapt: AdaptSection {
                            theta,
                            max_dof,
                            estimator: if hybrid {
                                EstimatorKind::Hybrid
                            } else {
                                EstimatorKind::Residual
                            },
                            stability: fixed
                                .map_or(StabilityChoice::Surrogate, StabilityChoice::Fixed),
                            ..AdaptSection::default()
                        },
                        solver: SolverSection { tol, max_iter },
                        output: OutputSection {
                            dir: PathBuf::from(format!("out_{l}")),
                            dump_meshes: dump,
                        },
                        seed,
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn toml_round_trip_is_lossless(c in arb_config()) {
            let text = c.to_toml();
            let back = ExperimentConfig::from_toml(&text).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
