use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, ensure, Context};
use clap::ValueEnum;
use hoag_core::dataio::{
    parse_csv, parse_libsvm, regression_weights, split_three, standardize, synth_classification, synth_multiclass,
    synth_regression, Dataset, Features,
};
use hoag_core::problems::{AnalyticToyProblem, KernelDistance, KernelRidgeProblem, LogisticL2Problem, MultiFeatureRegLogisticProblem};
use hoag_core::{BilevelProblem, ScheduleKind};
use serde::{Deserialize, Serialize};

/// Noise level of synthetic kernel ridge targets.
const REGRESSION_NOISE: f64 = 0.5;
const DEFAULT_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ProblemKind {
    Toy,
    Logistic,
    KernelRidge,
    Multinomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hoag,
    Iterdiff,
    Grid,
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hoag => "hoag",
            Method::Iterdiff => "iterdiff",
            Method::Grid => "grid",
            Method::Random => "random",
        }
    }
}

/// `n,p[,K]`: samples, features and (multinomial only) classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
}

impl FromStr for SyntheticSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts = s
            .split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        match parts[..] {
            [n, p] => Ok(Self { n, p, classes: None }),
            [n, p, k] => Ok(Self { n, p, classes: Some(k) }),
            _ => Err(format!("expected n,p or n,p,K, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// libsvm text, or CSV when the extension is `.csv`.
    File {
        path: PathBuf,
        #[serde(default)]
        target_column: usize,
    },
    Synthetic(SyntheticSpec),
}

/// One experiment: a problem instance plus the method that optimizes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub problem: ProblemKind,
    pub data: DataSource,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_max_iters() -> usize {
    100
}

fn default_grid_points() -> usize {
    hoag_core::baselines::DEFAULT_GRID_POINTS
}

impl RunSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schedule.is_some() && self.method != Method::Hoag {
            bail!("--schedule applies to the hoag method only, not {}", self.method.name());
        }
        ensure!(self.max_iters > 0, "--max-iters must be positive");
        if self.method == Method::Grid {
            ensure!(self.grid_points >= 2, "--grid-points must be at least 2");
        }
        if self.problem == ProblemKind::Toy && !matches!(self.data, DataSource::Synthetic(_)) {
            bail!("the toy problem is synthetic only; use --synthetic n,p");
        }
        Ok(())
    }

    pub fn schedule_kind(&self) -> ScheduleKind {
        self.schedule.unwrap_or(ScheduleKind::Exponential)
    }

    /// `hoag-exponential`, `iterdiff`, `grid`, ...
    pub fn label(&self) -> String {
        match self.method {
            Method::Hoag => format!("hoag-{}", self.schedule_kind()),
            m => m.name().to_string(),
        }
    }

    pub fn same_instance(&self, other: &RunSpec) -> bool {
        self.problem == other.problem && self.data == other.data && self.seed == other.seed
    }
}

/// The optimized problem (inner fit on train, outer loss on test) and the
/// same model scored on the held-out validation rows.
pub struct Instance {
    pub problem: Box<dyn BilevelProblem>,
    pub validation: Box<dyn BilevelProblem>,
}

fn load(path: &PathBuf, target_column: usize) -> anyhow::Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let reader = BufReader::new(file);
    let data = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        parse_csv(reader, target_column)
    } else {
        parse_libsvm(reader, None)
    };
    data.with_context(|| format!("reading {}", path.display()))
}

fn synthesize(kind: ProblemKind, s: &SyntheticSpec, seed: u64) -> anyhow::Result<Dataset> {
    ensure!(s.n >= 3 && s.p >= 1, "synthetic data needs n >= 3 and p >= 1");
    if s.classes.is_some() && kind != ProblemKind::Multinomial {
        bail!("a class count applies to the multinomial problem only");
    }
    Ok(match kind {
        ProblemKind::Logistic => synth_classification(s.n, s.p, seed),
        ProblemKind::KernelRidge => synth_regression(s.n, s.p, REGRESSION_NOISE, seed),
        ProblemKind::Multinomial => synth_multiclass(s.n, s.p, s.classes.unwrap_or(DEFAULT_CLASSES), seed),
        ProblemKind::Toy => unreachable!("toy instances have no dataset"),
    })
}

fn n_classes(kind: ProblemKind, data: &DataSource, dataset: &Dataset) -> usize {
    match data {
        DataSource::Synthetic(s) => s.classes.unwrap_or(DEFAULT_CLASSES),
        DataSource::File { .. } if kind == ProblemKind::Multinomial => {
            dataset.targets.iter().fold(0.0f64, |m, &t| m.max(t)) as usize
        }
        DataSource::File { .. } => 0,
    }
}

fn pair(kind: ProblemKind, train: &Dataset, test: &Dataset, classes: usize) -> anyhow::Result<Box<dyn BilevelProblem>> {
    Ok(match kind {
        ProblemKind::Logistic => Box::new(LogisticL2Problem::new(train, test)?),
        ProblemKind::KernelRidge => Box::new(KernelRidgeProblem::new(train, test, KernelDistance::Euclidean)?),
        ProblemKind::Multinomial => Box::new(MultiFeatureRegLogisticProblem::new(train, test, classes)?),
        ProblemKind::Toy => unreachable!("toy instances have no dataset"),
    })
}

/// Builds the instance of a spec. Datasets are split into train / test /
/// validation thirds with the spec's seed; dense file data is standardized
/// with training statistics.
pub fn build_instance(spec: &RunSpec) -> anyhow::Result<Instance> {
    if spec.problem == ProblemKind::Toy {
        let DataSource::Synthetic(s) = &spec.data else {
            bail!("the toy problem is synthetic only; use --synthetic n,p");
        };
        ensure!(s.p >= 1, "the toy problem needs p >= 1");
        let c = regression_weights(s.p, spec.seed);
        let d: Vec<f64> = regression_weights(s.p, spec.seed.wrapping_add(1)).iter().map(|v| 0.5 * v).collect();
        let toy = AnalyticToyProblem::new(c, d)?;
        return Ok(Instance {
            problem: Box::new(toy.clone()),
            validation: Box::new(toy),
        });
    }
    let dataset = match &spec.data {
        DataSource::File { path, target_column } => load(path, *target_column)?,
        DataSource::Synthetic(s) => synthesize(spec.problem, s, spec.seed)?,
    };
    let split = split_three(&dataset, spec.seed)?;
    let dataset = match (&spec.data, &dataset.features) {
        (DataSource::File { .. }, Features::Dense(_)) => standardize(&dataset, &split.train)?.0,
        _ => dataset,
    };
    let classes = n_classes(spec.problem, &spec.data, &dataset);
    let (train, test, validation) = split.apply(&dataset);
    Ok(Instance {
        problem: pair(spec.problem, &train, &test, classes)?,
        validation: pair(spec.problem, &train, &validation, classes)?,
    })
}
