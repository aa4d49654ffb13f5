//! Run configuration: a single TOML document describing one experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beam::{BeamComponent, BeamSpec, Frame};
use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::gaussianity::GapMode;
use crate::grid::TransverseGrid;
use crate::propagator::{EnsembleSetup, MomentTuple};
use crate::regime::{Regime, RegimeScaling};

/// Which experiment a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CheckCovariance,
    Simulate,
    Moments,
    Verify,
    MomentPde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CovarianceSection {
    Gaussian {
        sigma2: f64,
        ell: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Tabulated {
        rho: Vec<f64>,
        spectrum: Vec<f64>,
        r_max: f64,
        n_r: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSection {
    pub kind: Regime,
    pub epsilon: f64,
    pub beta: f64,
    pub k0: f64,
    /// Explicit `eta`, replacing the regime default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Raw,
    Rescaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    #[serde(default = "default_frame")]
    pub frame: FrameKind,
    /// Macroscopic point for the rescaled frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    pub components: Vec<BeamComponent>,
}

fn default_frame() -> FrameKind {
    FrameKind::Rescaled
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    pub z_final: f64,
    pub n_steps: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_realizations: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_half_width: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleSection {
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySection {
    pub z: f64,
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    pub queries: Vec<QuerySection>,
    /// Evaluate the limit formulas of the configured regime as well.
    #[serde(default = "default_true")]
    pub limits: bool,
    /// Distances at which the diffusive intensity density is tabulated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub i2_z: Vec<f64>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fixture {
    /// Circular gaussian samples with the covariance of the configured probes.
    Synthetic,
    /// Identical samples in every realization.
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Directory written by a `simulate` run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    /// Built-in sample set used instead of `input`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<Fixture>,
    #[serde(default = "default_fixture_samples")]
    pub fixture_samples: usize,
    #[serde(default = "default_expect")]
    pub expect: Expectation,
    #[serde(default = "default_gap_mode")]
    pub gap_mode: GapMode,
    #[serde(default = "default_two")]
    pub p: usize,
    #[serde(default = "default_two")]
    pub q: usize,
    #[serde(default = "default_gap_tolerance")]
    pub gap_tolerance: f64,
    #[serde(default = "default_band")]
    pub scintillation_band: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub box_sides: Vec<usize>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

fn default_fixture_samples() -> usize {
    20_000
}
fn default_expect() -> Expectation {
    Expectation::Pass
}
fn default_gap_mode() -> GapMode {
    GapMode::Centered
}
fn default_two() -> usize {
    2
}
fn default_gap_tolerance() -> f64 {
    0.1
}
fn default_band() -> [f64; 2] {
    [0.85, 1.15]
}
fn default_bins() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentPdeSection {
    pub p: usize,
    pub q: usize,
    pub n_v: usize,
    pub h: f64,
    /// Width `W` of the initial product `exp(-W^2 |v|^2 / 2)`.
    pub width: f64,
    pub z: f64,
    pub epsilons: Vec<f64>,
    /// Fixed step; chosen per run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dz: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<f64>,
}

/// The full configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Probe nodes as per-axis grid indices.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<Vec<usize>>,
    /// Probe-index pairs `(a, b)` for `E[u(a) u*(b)]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<(usize, usize)>,
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovarianceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam: Option<BeamSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation: Option<PropagationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tuples: Vec<TupleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_pde: Option<MomentPdeSection>,
}

fn missing(section: &str, kind: ExperimentKind) -> Error {
    Error::Config(format!("section [{section}] is required for experiment kind {kind:?}"))
}

impl RunConfig {
    /// Parse and validate a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.kind
    }

    /// Check that every section the experiment needs is present and
    /// that the physical objects can be built.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind();
        match kind {
            ExperimentKind::CheckCovariance => {
                self.model()?;
                self.regime_section(kind)?;
            }
            ExperimentKind::Simulate => {
                self.ensemble_setup(None)?;
            }
            ExperimentKind::Moments => {
                self.model()?;
                self.scaling()?;
                self.beam()?;
                let m = self.moments.as_ref().ok_or_else(|| missing("moments", kind))?;
                if m.queries.is_empty() && m.i2_z.is_empty() {
                    return Err(Error::Config("[moments] needs at least one query or i2_z entry".into()));
                }
                if !m.i2_z.is_empty() {
                    self.grid()?;
                }
            }
            ExperimentKind::Verify => {
                let v = self.verify.as_ref().ok_or_else(|| missing("verify", kind))?;
                match (&v.input, &v.fixture) {
                    (Some(_), None) => {}
                    (None, Some(_)) => {
                        if self.probes.is_empty() {
                            return Err(Error::Config("a verify fixture needs at least one probe".into()));
                        }
                    }
                    _ => return Err(Error::Config("[verify] needs exactly one of input or fixture".into())),
                }
                if v.scintillation_band[0] >= v.scintillation_band[1] {
                    return Err(Error::Config("verify.scintillation_band must be increasing".into()));
                }
            }
            ExperimentKind::MomentPde => {
                let m = self.moment_pde.as_ref().ok_or_else(|| missing("moment_pde", kind))?;
                self.model()?;
                self.regime_section(kind)?;
                if m.epsilons.is_empty() {
                    return Err(Error::Config("moment_pde.epsilons must not be empty".into()));
                }
            }
        }
        Ok(())
    }

    fn regime_section(&self, kind: ExperimentKind) -> Result<&RegimeSection> {
        self.regime.as_ref().ok_or_else(|| missing("regime", kind))
    }

    fn dim(&self) -> Option<usize> {
        self.grid.as_ref().map(|g| g.d)
    }

    pub fn model(&self) -> Result<CovarianceModel> {
        let sec = self.covariance.as_ref().ok_or_else(|| missing("covariance", self.kind()))?;
        let dim_of = |d: &Option<usize>| {
            d.or(self.dim())
                .or_else(|| self.beam.as_ref().and_then(|b| b.components.first().map(|c| c.center.len())))
                .unwrap_or(1)
        };
        let model = match sec {
            CovarianceSection::Gaussian { sigma2, ell, dim } => CovarianceModel::gaussian(*sigma2, *ell, dim_of(dim))?,
            CovarianceSection::Tabulated { rho, spectrum, r_max, n_r, dim } => {
                CovarianceModel::tabulated(dim_of(dim), rho.clone(), spectrum.clone(), *r_max, *n_r)?
            }
        };
        if let Some(d) = self.dim() {
            if model.dim() != d {
                return Err(Error::Config(format!("covariance dimension {} differs from grid.d = {d}", model.dim())));
            }
        }
        Ok(model)
    }

    /// The scaling exactly as configured, without admissibility checks.
    pub fn scaling_unchecked(&self) -> Result<RegimeScaling> {
        let r = self.regime_section(self.kind())?;
        let s = RegimeScaling::new(r.kind, r.epsilon, r.beta, r.k0)?;
        match r.eta {
            Some(eta) => s.with_eta(eta),
            None => Ok(s),
        }
    }

    pub fn scaling(&self) -> Result<RegimeScaling> {
        let s = self.scaling_unchecked()?;
        s.check()?;
        Ok(s)
    }

    pub fn beam(&self) -> Result<BeamSpec> {
        let b = self.beam.as_ref().ok_or_else(|| missing("beam", self.kind()))?;
        let dim = self.dim().or_else(|| b.components.first().map(|c| c.center.len())).unwrap_or(1);
        BeamSpec::new(b.components.clone(), dim)
    }

    pub fn frame(&self) -> Result<Frame> {
        let b = self.beam.as_ref().ok_or_else(|| missing("beam", self.kind()))?;
        match b.frame {
            FrameKind::Raw => Ok(Frame::Raw),
            FrameKind::Rescaled => {
                let dim = self.beam()?.dim();
                let r = b.r.clone().unwrap_or_else(|| vec![0.0; dim]);
                if r.len() != dim {
                    return Err(Error::Config(format!("beam.r must have {dim} entries")));
                }
                Ok(Frame::Rescaled(r))
            }
        }
    }

    pub fn grid(&self) -> Result<TransverseGrid> {
        let g = self.grid.as_ref().ok_or_else(|| missing("grid", self.kind()))?;
        TransverseGrid::new(g.d, g.n, g.length)
    }

    /// Probe nodes as flat grid indices.
    pub fn probe_nodes(&self, grid: &TransverseGrid) -> Result<Vec<usize>> {
        self.probes
            .iter()
            .enumerate()
            .map(|(k, idx)| {
                if idx.len() != grid.dim() || idx.iter().any(|&i| i >= grid.n()) {
                    Err(Error::Config(format!("probe {k} = {idx:?} is not a grid node")))
                } else {
                    Ok(grid.flat(idx))
                }
            })
            .collect()
    }

    pub fn moment_tuples(&self) -> Vec<MomentTuple> {
        self.tuples.iter().map(|t| MomentTuple::new(t.xs.clone(), t.ys.clone())).collect()
    }

    /// Assemble the ensemble setup, optionally replacing the seed.
    pub fn ensemble_setup(&self, seed: Option<u64>) -> Result<EnsembleSetup> {
        let kind = self.kind();
        let prop = self.propagation.as_ref().ok_or_else(|| missing("propagation", kind))?;
        let ens = self.ensemble.as_ref().ok_or_else(|| missing("ensemble", kind))?;
        if self.probes.is_empty() {
            return Err(Error::Config("at least one probe is required".into()));
        }
        let grid = self.grid()?;
        let probes = self.probe_nodes(&grid)?;
        if let Some(&(a, b)) = self.pairs.iter().find(|&&(a, b)| a >= probes.len() || b >= probes.len()) {
            return Err(Error::Config(format!("pair ({a}, {b}) refers to a missing probe")));
        }
        let tuples = self.moment_tuples();
        if let Some(t) = self.tuples.iter().find(|t| t.xs.iter().chain(&t.ys).any(|&i| i >= probes.len())) {
            return Err(Error::Config(format!("tuple {t:?} refers to a missing probe")));
        }
        Ok(EnsembleSetup {
            grid,
            scaling: self.scaling()?,
            model: self.model()?,
            beam: self.beam()?,
            frame: self.frame()?,
            z_final: prop.z_final,
            n_steps: prop.n_steps,
            n_realizations: ens.n_realizations,
            seed: seed.unwrap_or(ens.seed),
            first_realization: 0,
            probes,
            pairs: self.pairs.clone(),
            tuples,
            window_half_width: ens.window_half_width,
            snapshot_steps: prop.snapshot_steps.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIMULATE: &str = r#"
probes = [[32], [40]]
pairs = [[0, 1]]

[experiment]
kind = "simulate"

[covariance]
kind = "gaussian"
sigma2 = 1.0
ell = 1.0

[regime]
kind = "kinetic"
epsilon = 0.5
beta = 1.0
k0 = 1.0

[beam]
components = [{ amplitude = 1.0, width = 2.0, center = [0.0], kvec = [0.0] }]

[grid]
d = 1
n = 64
L = 32.0

[propagation]
z_final = 1.0
n_steps = 10

[ensemble]
n_realizations = 8
seed = 42
"#;

    #[test]
    fn parses_and_builds_setup() {
        let cfg = RunConfig::from_toml_str(SIMULATE).unwrap();
        let setup = cfg.ensemble_setup(Some(7)).unwrap();
        assert_eq!(setup.seed, 7);
        assert_eq!(setup.probes, vec![32, 40]);
        assert_eq!(setup.frame, Frame::Rescaled(vec![0.0]));
    }

    #[test]
    fn round_trips() {
        let cfg = RunConfig::from_toml_str(SIMULATE).unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = SIMULATE.replace("seed = 42", "seed = 42\ncolour = 3");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::Config(_))));
        let bad = SIMULATE.replace("[grid]", "[gird]");
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn rejects_missing_probe() {
        let bad = SIMULATE.replace("probes = [[32], [40]]", "probes = [[32], [400]]");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn verify_needs_one_source() {
        let text = "probes = [[0]]\n[experiment]\nkind = \"verify\"\n[verify]\n";
        assert!(RunConfig::from_toml_str(text).is_err());
        let ok = format!("{text}fixture = \"synthetic\"\n");
        let cfg = RunConfig::from_toml_str(&ok).unwrap();
        assert_eq!(cfg.verify.unwrap().gap_mode, GapMode::Centered);
    }
}
