use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Cluster,
    Lowrank,
    Regress,
    Sensitivity,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Cluster => "cluster",
            Problem::Lowrank => "lowrank",
            Problem::Regress => "regress",
            Problem::Sensitivity => "sensitivity",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    #[default]
    Random,
    AsGiven,
    /// Ascending norm; a fixed adversarial-looking order with no guarantee.
    SortedNorm,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Fresh,
    Lazy,
}

/// Which selection procedure the sensitivity report measures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Always the same output.
    Constant,
    /// `m` uniform draws, summarized by the drawn index multiset.
    #[default]
    Uniform,
    /// One uniform draw reported together with its perturbed weight.
    Weighted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Estimation {
    #[default]
    Exhaustive,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub z: f64,
    pub epsilon: f64,
    pub seeds: Vec<u64>,
    pub ordering: Ordering,
    pub mode: Mode,
    /// Spread of the mixture centers relative to the cluster width.
    pub separation: f64,
    pub noise: f64,
    /// Planted rank for the low-rank generator; defaults to `k`.
    pub rank: Option<usize>,
    pub const_n1: f64,
    pub const_n2: f64,
    pub const_m: f64,
    /// Unscaled stage-2 weights with plain clamping.
    pub paper_verbatim_weights: bool,
    /// Restarts of the offline clustering solver used for OPT.
    pub opt_restarts: usize,
    pub clip: bool,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub timing: bool,
    pub sizes: Vec<usize>,
    pub sampler: Sampler,
    pub m: usize,
    pub estimation: Estimation,
    pub trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: Problem::Regress,
            n: 200,
            d: 5,
            k: 3,
            z: 2.0,
            epsilon: 0.3,
            seeds: vec![1],
            ordering: Ordering::Random,
            mode: Mode::Fresh,
            separation: 4.0,
            noise: 0.1,
            rank: None,
            const_n1: 1.0,
            const_n2: 1.0,
            const_m: 1.0,
            paper_verbatim_weights: false,
            opt_restarts: 50,
            clip: true,
            data: None,
            out: PathBuf::from("out"),
            timing: false,
            sizes: vec![4, 8],
            sampler: Sampler::Uniform,
            m: 1,
            estimation: Estimation::Exhaustive,
            trials: 1000,
        }
    }
}

impl ExperimentConfig {
    pub fn for_problem(problem: Problem) -> Self {
        ExperimentConfig {
            problem,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn rank(&self) -> usize {
        self.rank.unwrap_or(self.k)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |field: &'static str, reason: &str| Err(HarnessError::config(field, reason));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon", "must lie in (0, 1)");
        }
        if self.problem == Problem::Sensitivity {
            if self.sizes.is_empty() || self.sizes.iter().any(|&n| n < 2) {
                return bad("sizes", "need at least one size, each at least 2");
            }
            if self.m == 0 {
                return bad("m", "must be positive");
            }
            if self.sampler == Sampler::Weighted && self.m != 1 {
                return bad("m", "the weighted sampler draws exactly once");
            }
            if self.estimation == Estimation::Exhaustive
                && self
                    .sizes
                    .iter()
                    .any(|&n| n > online_coreset::sensitivity::MAX_EXHAUSTIVE_N)
            {
                return bad("sizes", "exhaustive estimation supports n <= 8");
            }
            if self.estimation == Estimation::MonteCarlo
                && self.trials < online_coreset::sensitivity::MIN_TRIALS
            {
                return bad("trials", "need at least 100 trials");
            }
            return Ok(());
        }
        if self.seeds.is_empty() {
            return bad("seeds", "must not be empty");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return bad("seeds", "must be distinct");
        }
        if self.data.is_none() && self.n == 0 {
            return bad("n", "must be positive");
        }
        if self.data.is_none() && self.d == 0 {
            return bad("d", "must be positive");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise", "must be finite and nonnegative");
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return bad("separation", "must be finite and nonnegative");
        }
        for (field, v) in [
            ("const_n1", self.const_n1),
            ("const_n2", self.const_n2),
            ("const_m", self.const_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(field, "must be positive");
            }
        }
        match self.problem {
            Problem::Cluster => {
                if self.k == 0 || (self.data.is_none() && self.k > self.n) {
                    return bad("k", "must lie in 1..=n");
                }
                if !(self.z >= 1.0 && self.z.is_finite()) {
                    return bad("z", "must be at least 1");
                }
                if self.opt_restarts == 0 {
                    return bad("opt_restarts", "must be positive");
                }
            }
            Problem::Lowrank => {
                if self.k == 0 || (self.data.is_none() && self.k > self.d) {
                    return bad("k", "must lie in 1..=d");
                }
                if self.data.is_none() && (self.rank() == 0 || self.rank() > self.d) {
                    return bad("rank", "must lie in 1..=d");
                }
            }
            Problem::Regress | Problem::Sensitivity => {}
        }
        Ok(())
    }
}
