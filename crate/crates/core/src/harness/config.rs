use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::completion::{NoiseLaw, C_STAR_GAUSSIAN};
use crate::error::{Error, Result};
use crate::regression::RegressionLambdaParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SimulateCompletion,
    EstimateCompletion,
    SimulateRegression,
    EstimateRegression,
    Verify,
}

impl Mode {
    pub fn is_simulation(self) -> bool {
        matches!(self, Mode::SimulateCompletion | Mode::SimulateRegression | Mode::Verify)
    }
}

/// How the regularisation level is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    /// The data-driven (completion) or dimension-only (regression) formula.
    Theory,
    /// `3Δ` or `3Δ'`, computed from the known truth.
    Oracle,
    Manual(f64),
}

impl FromStr for LambdaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "theory" => Ok(LambdaMode::Theory),
            "oracle" => Ok(LambdaMode::Oracle),
            other => {
                let value = other
                    .strip_prefix("manual:")
                    .ok_or_else(|| Error::Config(format!("lambda must be theory, oracle or manual:<x>, got {other:?}")))?;
                let x: f64 = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad manual lambda {value:?}")))?;
                if !(x > 0.0 && x.is_finite()) {
                    return Err(Error::Config(format!("manual lambda must be positive, got {x}")));
                }
                Ok(LambdaMode::Manual(x))
            }
        }
    }
}

impl fmt::Display for LambdaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaMode::Theory => f.write_str("theory"),
            LambdaMode::Oracle => f.write_str("oracle"),
            LambdaMode::Manual(x) => write!(f, "manual:{x}"),
        }
    }
}

/// Everything a run needs. Built from defaults, then an optional `key=value`
/// file, then command-line flags, each layer overriding the previous one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub m1: usize,
    pub m2: usize,
    pub l: usize,
    pub n: usize,
    pub rank: usize,
    pub sigma: f64,
    pub noise: NoiseLaw,
    pub a: f64,
    pub lambda: LambdaMode,
    pub c_star: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub obs: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub v: Option<PathBuf>,
    pub u: Option<PathBuf>,
    /// Where estimation modes write the estimated matrix.
    pub estimate: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            m1: 100,
            m2: 100,
            l: 100,
            n: 2000,
            rank: 2,
            sigma: 1.0,
            noise: NoiseLaw::Gaussian,
            a: 1.0,
            lambda: LambdaMode::Theory,
            c_star: C_STAR_GAUSSIAN,
            alpha: 0.1,
            beta: 0.5,
            rho: 0.9,
            trials: 1,
            seed: 0,
            threads: None,
            out: None,
            obs: None,
            truth: None,
            v: None,
            u: None,
            estimate: None,
        }
    }

    /// Sets one field from its textual form. Keys match the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value for {key}: {value:?}")))
        }
        let path = || Some(PathBuf::from(value.trim()));
        match key.trim() {
            "m1" => self.m1 = num(key, value)?,
            "m2" => self.m2 = num(key, value)?,
            "l" => self.l = num(key, value)?,
            "n" => self.n = num(key, value)?,
            "rank" => self.rank = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "noise" => self.noise = value.parse()?,
            "a" => self.a = num(key, value)?,
            "lambda" => self.lambda = value.parse()?,
            "cstar" => self.c_star = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "rho" => self.rho = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "threads" => self.threads = Some(num(key, value)?),
            "out" => self.out = path(),
            "obs" => self.obs = path(),
            "truth" => self.truth = path(),
            "v" => self.v = path(),
            "u" => self.u = path(),
            "estimate" => self.estimate = path(),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            self.set(key, value).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_file_text(&text, path)
    }

    pub fn regression_params(&self) -> Result<RegressionLambdaParams> {
        RegressionLambdaParams::new(self.alpha, self.beta)
    }

    /// Checks everything that can be checked before any work starts.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if self.m1 == 0 || self.m2 == 0 || self.l == 0 {
            return bad(format!("dimensions must be positive: m1={}, m2={}, l={}", self.m1, self.m2, self.l));
        }
        if self.lambda == LambdaMode::Oracle && !self.mode.is_simulation() {
            return bad("lambda=oracle needs the truth and is only available in simulate modes".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad(format!("a must be positive, got {}", self.a));
        }
        if !(self.c_star > 0.0 && self.c_star.is_finite()) {
            return bad(format!("cstar must be positive, got {}", self.c_star));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        self.regression_params()?;
        match self.mode {
            Mode::SimulateCompletion => {
                if self.n == 0 {
                    return bad("n must be at least 1".into());
                }
                if self.rank > self.m1.min(self.m2) {
                    return bad(format!("rank {} exceeds min(m1, m2)", self.rank));
                }
            }
            Mode::SimulateRegression => {
                if self.rank > self.m1.min(self.m2) {
                    return bad(format!("rank {} exceeds min(m1, m2)", self.rank));
                }
            }
            Mode::EstimateCompletion => {
                if self.obs.is_none() {
                    return bad("estimate completion needs --obs".into());
                }
            }
            Mode::EstimateRegression => {
                if self.v.is_none() || self.u.is_none() {
                    return bad("estimate regression needs --v and --u".into());
                }
            }
            Mode::Verify => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_mode_parsing() {
        assert_eq!("theory".parse::<LambdaMode>().unwrap(), LambdaMode::Theory);
        assert_eq!("oracle".parse::<LambdaMode>().unwrap(), LambdaMode::Oracle);
        assert_eq!("manual:0.25".parse::<LambdaMode>().unwrap(), LambdaMode::Manual(0.25));
        assert!("manual:-1".parse::<LambdaMode>().is_err());
        assert!("manual:x".parse::<LambdaMode>().is_err());
        assert!("auto".parse::<LambdaMode>().is_err());
        assert_eq!(LambdaMode::Manual(0.5).to_string(), "manual:0.5");
    }

    #[test]
    fn file_then_flags() {
        let mut cfg = ExperimentConfig::new(Mode::SimulateCompletion);
        cfg.apply_file_text("# run\nm1 = 40\nm2=50 # wide\n\nlambda=oracle\nseed=9\n", Path::new("c.cfg"))
            .unwrap();
        cfg.set("m1", "60").unwrap();
        assert_eq!((cfg.m1, cfg.m2, cfg.seed), (60, 50, 9));
        assert_eq!(cfg.lambda, LambdaMode::Oracle);
        cfg.validate().unwrap();
    }

    #[test]
    fn file_errors_carry_line() {
        let mut cfg = ExperimentConfig::new(Mode::SimulateCompletion);
        let err = cfg.apply_file_text("m1=3\nbogus\n", Path::new("c.cfg")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = cfg.apply_file_text("colour=red\n", Path::new("c.cfg")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn validation_rules() {
        let mut cfg = ExperimentConfig::new(Mode::EstimateCompletion);
        cfg.obs = Some("obs.csv".into());
        cfg.validate().unwrap();
        cfg.lambda = LambdaMode::Oracle;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::new(Mode::SimulateRegression);
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 3;
        cfg.alpha = 1.5;
        assert!(cfg.validate().is_err());
        cfg.alpha = 0.1;
        cfg.m2 = 0;
        assert!(cfg.validate().is_err());
    }
}
