use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{fig1_blue, generate_euclidean_tsp, generate_random_tsp, load_tsp, TspInstance};
use crate::optimize::{OptimizerKind, DEFAULT_MAX_EVALS};

/// Where the TSP instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSource {
    Path(PathBuf),
    Random {
        n: usize,
        seed: u64,
        #[serde(default = "default_low")]
        low: f64,
        #[serde(default = "default_high")]
        high: f64,
    },
    Euclidean {
        n: usize,
        seed: u64,
        #[serde(default = "default_side")]
        side: f64,
    },
    Fig1Blue {
        n: usize,
    },
}

fn default_low() -> f64 {
    10.0
}
fn default_high() -> f64 {
    50.0
}
fn default_side() -> f64 {
    100.0
}

impl InstanceSource {
    pub fn load(&self) -> Result<TspInstance> {
        match self {
            Self::Path(p) => load_tsp(p),
            Self::Random { n, seed, low, high } => generate_random_tsp(*n, *seed, *low, *high),
            Self::Euclidean { n, seed, side } => generate_euclidean_tsp(*n, *seed, *side),
            Self::Fig1Blue { n } => fig1_blue(*n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzKind {
    Qaoa,
    WsQaoa,
    Aoa,
    Hevqe,
    Rqaoa,
}

impl AnsatzKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Qaoa => "qaoa",
            Self::WsQaoa => "ws-qaoa",
            Self::Aoa => "aoa",
            Self::Hevqe => "hevqe",
            Self::Rqaoa => "rqaoa",
        }
    }

    /// Algorithm family written to run records.
    pub fn algorithm(self) -> &'static str {
        match self {
            Self::Hevqe => "vqe",
            Self::Rqaoa => "rqaoa",
            _ => "qaoa",
        }
    }

    /// `p = 5` for alternating ansaetze, one layer for the hardware-efficient one.
    pub fn default_depth(self) -> usize {
        match self {
            Self::Hevqe | Self::Rqaoa => 1,
            _ => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    #[default]
    Random,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub ansatz: AnsatzKind,
    #[serde(default)]
    pub init: InitKind,
    /// rQAOA only: spins left for enumeration.
    #[serde(default = "default_stop_dim")]
    pub stop_dim: usize,
}

fn default_stop_dim() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "default_optimizer")]
    pub name: String,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_optimizer() -> String {
    "nft".into()
}
fn default_max_evals() -> usize {
    DEFAULT_MAX_EVALS
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            name: default_optimizer(),
            max_evals: default_max_evals(),
            seeds: default_seeds(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKeyword {
    /// `1.2 * P_min`.
    Auto,
}

/// A number, `"auto"`, or `{"pmin_factor": f}` for `f * P_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PenaltySpec {
    Value(f64),
    Named(PenaltyKeyword),
    Relative { pmin_factor: f64 },
}

pub const AUTO_PENALTY_FACTOR: f64 = 1.2;

impl PenaltySpec {
    pub fn pmin_factor(&self) -> Option<f64> {
        match self {
            Self::Value(_) => None,
            Self::Named(PenaltyKeyword::Auto) => Some(AUTO_PENALTY_FACTOR),
            Self::Relative { pmin_factor } => Some(*pmin_factor),
        }
    }
}

impl fmt::Display for PenaltySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Value(v) => write!(f, "{v}"),
            Self::Named(PenaltyKeyword::Auto) => f.write_str("auto"),
            Self::Relative { pmin_factor } => write!(f, "{pmin_factor}xPmin"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingKeyword {
    /// `s = 1`.
    None,
    /// Lowest spectral gap equal to the mixer gap.
    Gap,
    /// Spectral width `2q`.
    Width,
}

/// A fixed factor `s` or a spectrum-based rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalingSpec {
    Fixed(f64),
    Named(ScalingKeyword),
}

impl fmt::Display for ScalingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(v) => write!(f, "{v}"),
            Self::Named(ScalingKeyword::None) => f.write_str("none"),
            Self::Named(ScalingKeyword::Gap) => f.write_str("gap"),
            Self::Named(ScalingKeyword::Width) => f.write_str("width"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_penalties")]
    pub penalties: Vec<PenaltySpec>,
    #[serde(default = "default_scalings")]
    pub scalings: Vec<ScalingSpec>,
    /// Empty means the ansatz default.
    #[serde(default)]
    pub depths: Vec<usize>,
}

fn default_penalties() -> Vec<PenaltySpec> {
    vec![PenaltySpec::Named(PenaltyKeyword::Auto)]
}
fn default_scalings() -> Vec<ScalingSpec> {
    vec![ScalingSpec::Named(ScalingKeyword::Gap)]
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            penalties: default_penalties(),
            scalings: default_scalings(),
            depths: Vec::new(),
        }
    }
}

/// One experiment; see the README for the JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// 0 evaluates metrics on the exact state.
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_repeats() -> usize {
    1
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub penalty: PenaltySpec,
    pub scaling: ScalingSpec,
    pub depth: usize,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn optimizer_kind(&self) -> Result<OptimizerKind> {
        self.optimizer.name.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        self.optimizer_kind()?;
        if self.optimizer.max_evals == 0 {
            return bad("optimizer.max_evals must be >= 1".into());
        }
        if self.optimizer.seeds.is_empty() {
            return bad("optimizer.seeds must not be empty".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be >= 1".into());
        }
        if self.sweep.penalties.is_empty() || self.sweep.scalings.is_empty() {
            return bad("sweep lists must not be empty".into());
        }
        for p in &self.sweep.penalties {
            let v = match p {
                PenaltySpec::Value(v) => *v,
                PenaltySpec::Relative { pmin_factor } => *pmin_factor,
                PenaltySpec::Named(_) => 1.0,
            };
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("penalty {p} must be positive"));
            }
        }
        for s in &self.sweep.scalings {
            if let ScalingSpec::Fixed(v) = s {
                if !(*v > 0.0 && v.is_finite()) {
                    return bad(format!("scaling {v} must be positive"));
                }
            }
        }
        if self.algorithm.ansatz == AnsatzKind::Rqaoa && self.sweep.depths.contains(&0) {
            return bad("rQAOA needs depth >= 1".into());
        }
        if self.algorithm.init == InitKind::Linear && self.algorithm.ansatz == AnsatzKind::Hevqe {
            return bad("linear initialization applies to alternating ansaetze only".into());
        }
        if self.algorithm.stop_dim == 0 {
            return bad("algorithm.stop_dim must be >= 1".into());
        }
        Ok(())
    }

    /// Cartesian product of the sweep lists, penalties outermost.
    pub fn cells(&self) -> Vec<Cell> {
        let depths = if self.sweep.depths.is_empty() {
            vec![self.algorithm.ansatz.default_depth()]
        } else {
            self.sweep.depths.clone()
        };
        let mut out = Vec::new();
        for &penalty in &self.sweep.penalties {
            for &scaling in &self.sweep.scalings {
                for &depth in &depths {
                    out.push(Cell {
                        penalty,
                        scaling,
                        depth,
                    });
                }
            }
        }
        out
    }

    /// Replaces the seed list by `base, base + 1, ...` of the same length.
    pub fn reseed(&mut self, base: u64) {
        let k = self.optimizer.seeds.len() as u64;
        self.optimizer.seeds = (0..k).map(|i| base.wrapping_add(i)).collect();
    }
}

/// SplitMix64 finalizer of `a` combined with `b`.
pub fn derive_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"instance": {"random": {"n": 4, "seed": 7}}, "algorithm": {"ansatz": "hevqe"}}"#;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.optimizer.name, "nft");
        assert_eq!(c.optimizer.max_evals, 10_000);
        assert_eq!(c.repeats, 1);
        assert_eq!(c.shots, 0);
        let cells = c.cells();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].depth, 1);
        assert_eq!(cells[0].penalty, PenaltySpec::Named(PenaltyKeyword::Auto));
    }

    #[test]
    fn sweep_grid_and_specs() {
        let text = r#"{
            "instance": {"fig1-blue": {"n": 4}},
            "algorithm": {"ansatz": "qaoa", "init": "linear"},
            "optimizer": {"name": "powell", "max_evals": 100, "seeds": [1, 2]},
            "sweep": {"penalties": [50, "auto", {"pmin_factor": 0.7}], "scalings": ["gap", 0.01], "depths": [1, 3]}
        }"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.cells().len(), 12);
        assert_eq!(c.sweep.penalties[2].pmin_factor(), Some(0.7));
        assert_eq!(c.sweep.scalings[1], ScalingSpec::Fixed(0.01));
    }

    #[test]
    fn rejects() {
        for bad in [
            r#"{"instance": {"random": {"n": 4, "seed": 7}}, "algorithm": {"ansatz": "vqe"}}"#,
            r#"{"instance": {"random": {"n": 4, "seed": 7}}, "algorithm": {"ansatz": "hevqe"}, "optimizer": {"name": "cobyla"}}"#,
            r#"{"instance": {"random": {"n": 4, "seed": 7}}, "algorithm": {"ansatz": "hevqe"}, "sweep": {"penalties": [-1]}}"#,
            r#"{"instance": {"random": {"n": 4, "seed": 7}}, "algorithm": {"ansatz": "hevqe", "init": "linear"}}"#,
            r#"{"instance": {"random": {"n": 4, "seed": 7}}, "algorithm": {"ansatz": "hevqe"}, "extra": 1}"#,
        ] {
            assert!(ExperimentConfig::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn seeds_mix() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(5, 3), derive_seed(5, 3));
    }
}
