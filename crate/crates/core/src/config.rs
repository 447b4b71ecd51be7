//! Plain-text key-value run configuration: a grid block, an operator block,
//! solver tolerances, and the homogenization keys. Lines look like
//! `key = value`, `#` starts a comment.

use crate::grid::{GridError, StripGrid};
use crate::operators::{EllipticOperator, EllipticityConstants, OperatorError, SymMatrix};
use crate::solver::SolveConfig;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    BadLine(usize),
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Parsed key-value table plus typed accessors for the standard blocks.
#[derive(Debug, Clone)]
pub struct RunConfig {
    keys: BTreeMap<String, String>,
    /// The raw text, echoed into reports.
    pub source: String,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut keys = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::BadLine(lineno + 1))?;
            keys.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { keys, source: text.to_string() })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.keys.get(key).map(String::as_str)
    }

    fn require(&self, key: &'static str) -> Result<&str, ConfigError> {
        self.get(key).ok_or(ConfigError::Missing(key))
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.require(key)?;
        raw.parse().map_err(|e: T::Err| ConfigError::BadValue {
            key: key.to_string(),
            msg: e.to_string(),
        })
    }

    fn parse_opt<T: std::str::FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e: T::Err| ConfigError::BadValue { key: key.to_string(), msg: e.to_string() }),
        }
    }

    pub fn grid(&self) -> Result<StripGrid, ConfigError> {
        Ok(StripGrid::new(
            self.parse_as("r")?,
            self.parse_as("L")?,
            self.parse_as("n_t")?,
            self.parse_as("n_n")?,
            self.parse_opt("d")?.unwrap_or(1),
        )?)
    }

    pub fn operator(&self) -> Result<EllipticOperator, ConfigError> {
        let dim = self.parse_opt::<usize>("d")?.unwrap_or(1) + 1;
        let lambda = self.parse_opt("lambda")?.unwrap_or(1.0);
        let upper = self.parse_opt("Lambda")?.unwrap_or(lambda);
        let constants = EllipticityConstants::new(lambda, upper)?;
        match self.require("operator")? {
            "linear" => {
                let a = match self.get("matrix") {
                    None => SymMatrix::identity(dim)?,
                    Some(raw) => parse_matrix(raw, dim, "matrix")?,
                };
                Ok(EllipticOperator::linear(a, constants)?)
            }
            "pucci-" => Ok(EllipticOperator::pucci_minus(constants)),
            "pucci+" => Ok(EllipticOperator::pucci_plus(constants)),
            "bellman" => {
                let raw = self.require("bellman")?;
                let mut groups = Vec::new();
                for group in raw.split('|') {
                    let mut mats = Vec::new();
                    for m in group.split(';') {
                        mats.push(parse_matrix(m, dim, "bellman")?);
                    }
                    groups.push(mats);
                }
                Ok(EllipticOperator::bellman(groups, constants)?)
            }
            other => Err(ConfigError::BadValue {
                key: "operator".into(),
                msg: format!("unknown kind {other:?} (linear|pucci-|pucci+|bellman)"),
            }),
        }
    }

    pub fn solve_config(&self) -> Result<SolveConfig, ConfigError> {
        let mut cfg = SolveConfig::default();
        if let Some(tol) = self.parse_opt("residual_tol")? {
            cfg.residual_tol = tol;
        }
        if let Some(n) = self.parse_opt("max_iters")? {
            cfg.max_iters = n;
        }
        cfg.damping_tau = self.parse_opt("damping_tau")?;
        if let Some(v) = self.parse_opt("verbose_every")? {
            cfg.verbose_every = v;
        }
        Ok(cfg)
    }

    pub fn epsilons(&self) -> Result<Vec<f64>, ConfigError> {
        match self.get("epsilons") {
            None => Ok(vec![0.25, 0.125, 0.0625, 0.03125]),
            Some(raw) => raw
                .split(',')
                .map(|p| {
                    p.trim().parse::<f64>().map_err(|e| ConfigError::BadValue {
                        key: "epsilons".into(),
                        msg: e.to_string(),
                    })
                })
                .collect(),
        }
    }

    pub fn refine_with_eps(&self) -> Result<bool, ConfigError> {
        Ok(self.parse_opt("refine_with_eps")?.unwrap_or(true))
    }

    pub fn seed(&self) -> Result<u64, ConfigError> {
        Ok(self.parse_opt("seed")?.unwrap_or(0))
    }

    pub fn g_file(&self) -> Result<&str, ConfigError> {
        self.require("g_file")
    }
}

fn parse_matrix(raw: &str, dim: usize, key: &str) -> Result<SymMatrix, ConfigError> {
    let nums: Result<Vec<f64>, _> = raw.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let nums = nums.map_err(|e| ConfigError::BadValue { key: key.into(), msg: e.to_string() })?;
    if nums.len() != dim * dim {
        return Err(ConfigError::BadValue {
            key: key.into(),
            msg: format!("expected {} row-major entries, got {}", dim * dim, nums.len()),
        });
    }
    Ok(SymMatrix::from_rows(&nums, dim)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorKind;

    const SAMPLE: &str = "\
# strip
r = 1.0
L = 6.283185307179586
n_t = 32
n_n = 17
d = 1

operator = pucci+
lambda = 1.0
Lambda = 2.0

residual_tol = 1e-8
max_iters = 500000
epsilons = 0.25, 0.125
seed = 7
";

    #[test]
    fn parses_sample() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.n_tangential(), 32);
        let op = cfg.operator().unwrap();
        assert!(matches!(op.kind(), OperatorKind::PucciPlus));
        assert_eq!(op.constants().upper(), 2.0);
        let sc = cfg.solve_config().unwrap();
        assert_eq!(sc.residual_tol, 1e-8);
        assert_eq!(sc.max_iters, 500000);
        assert_eq!(cfg.epsilons().unwrap(), vec![0.25, 0.125]);
        assert_eq!(cfg.seed().unwrap(), 7);
    }

    #[test]
    fn linear_matrix_and_bellman_groups() {
        let text = "r=1\nL=6.28\nn_t=16\nn_n=5\noperator = linear\nlambda=0.5\nLambda=2\nmatrix = 1,0.2,0.2,1.5\n";
        let cfg = RunConfig::parse(text).unwrap();
        let op = cfg.operator().unwrap();
        assert!(op.is_linear());

        let text = "operator = bellman\nlambda=1\nLambda=2\nbellman = 1,0,0,2 ; 1.5,0.3,0.3,1.2 | 2,0,0,1\n";
        let cfg = RunConfig::parse(text).unwrap();
        let op = cfg.operator().unwrap();
        match op.kind() {
            OperatorKind::Bellman(groups) => {
                assert_eq!(groups.len(), 2);
                assert_eq!(groups[0].len(), 2);
            }
            _ => panic!("expected bellman"),
        }
    }

    #[test]
    fn errors_are_specific() {
        assert!(matches!(RunConfig::parse("just words\n"), Err(ConfigError::BadLine(1))));
        let cfg = RunConfig::parse("operator = warp\n").unwrap();
        assert!(matches!(cfg.operator(), Err(ConfigError::BadValue { .. })));
        let cfg = RunConfig::parse("r=1\nL=1\nn_t=32\n").unwrap();
        assert!(matches!(cfg.grid(), Err(ConfigError::Missing("n_n"))));
    }
}
