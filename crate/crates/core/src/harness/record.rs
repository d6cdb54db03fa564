use std::fmt::Display;

use crate::error::{Error, Result};

/// First line of every harness CSV.
pub const SCHEMA_LINE: &str = "# sqrtnuc-v1";

/// Column names, in output order.
pub const COLUMNS: [&str; 29] = [
    "trial",
    "group",
    "lambda",
    "rank_hat",
    "error",
    "residual",
    "objective",
    "delta",
    "delta_inf",
    "fro_m",
    "collisions",
    "spikiness",
    "rho",
    "hyp_n_lower",
    "hyp_n_upper",
    "hyp_spikiness",
    "hyp_rank",
    "hyp_lambda",
    "hyp_rho",
    "oracle_lhs",
    "oracle_rhs",
    "resid_lhs",
    "resid_rhs",
    "mnorm_i",
    "mnorm_ii",
    "mnorm_iii",
    "rate_rhs",
    "baseline_error",
    "violation",
];

/// One row of harness output. Fields that do not apply to a run are `None` and
/// are written as empty cells; booleans are written as `0`/`1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Sweep label such as `n=4000`; empty outside sweeps.
    pub group: String,
    pub lambda: f64,
    /// Rank of the estimate (`Â` for completion, `VÂ` for regression).
    pub rank_hat: usize,
    /// Completion: `‖Â − A0‖₂² / (m1 m2)`. Regression: `‖V(Â − A0)‖₂²`.
    pub error: Option<f64>,
    /// Data-fit term of the objective.
    pub residual: f64,
    pub objective: f64,
    /// `Δ` (completion) or `Δ'` (regression).
    pub delta: Option<f64>,
    /// `‖M‖∞` (completion) or `‖P_V E‖∞` (regression).
    pub delta_inf: Option<f64>,
    /// `‖M‖₂` (completion) or `‖E‖₂` (regression).
    pub fro_m: Option<f64>,
    pub collisions: Option<u64>,
    pub spikiness: Option<f64>,
    /// `λ √(2 rank)` of the truth.
    pub rho: Option<f64>,
    pub hyp_n_lower: Option<bool>,
    pub hyp_n_upper: Option<bool>,
    pub hyp_spikiness: Option<bool>,
    /// Regression rank condition on `rank(VA0)`.
    pub hyp_rank: Option<bool>,
    /// `λ ≥ 3Δ` (or `3Δ'`).
    pub hyp_lambda: Option<bool>,
    /// `ρ < 1`.
    pub hyp_rho: Option<bool>,
    /// Squared estimation error compared against the oracle inequality.
    pub oracle_lhs: Option<f64>,
    pub oracle_rhs: Option<f64>,
    /// Residual compared against its lower bound.
    pub resid_lhs: Option<f64>,
    pub resid_rhs: Option<f64>,
    /// The three `‖M‖₂` sandwich clauses.
    pub mnorm_i: Option<bool>,
    pub mnorm_ii: Option<bool>,
    pub mnorm_iii: Option<bool>,
    /// Rate-level bound: the per-entry risk bound (completion) or
    /// `σ² (m2 + r) rank(VA0)` (regression).
    pub rate_rhs: Option<f64>,
    pub baseline_error: Option<f64>,
    /// Any checked bound failed on this trial.
    pub violation: Option<bool>,
}

fn opt<T: Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, |x| x.to_string())
}

fn flag(v: &Option<bool>) -> String {
    v.map_or_else(String::new, |b| if b { "1".into() } else { "0".into() })
}

impl TrialRecord {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.group.clone(),
            self.lambda.to_string(),
            self.rank_hat.to_string(),
            opt(&self.error),
            self.residual.to_string(),
            self.objective.to_string(),
            opt(&self.delta),
            opt(&self.delta_inf),
            opt(&self.fro_m),
            opt(&self.collisions),
            opt(&self.spikiness),
            opt(&self.rho),
            flag(&self.hyp_n_lower),
            flag(&self.hyp_n_upper),
            flag(&self.hyp_spikiness),
            flag(&self.hyp_rank),
            flag(&self.hyp_lambda),
            flag(&self.hyp_rho),
            opt(&self.oracle_lhs),
            opt(&self.oracle_rhs),
            opt(&self.resid_lhs),
            opt(&self.resid_rhs),
            flag(&self.mnorm_i),
            flag(&self.mnorm_ii),
            flag(&self.mnorm_iii),
            opt(&self.rate_rhs),
            opt(&self.baseline_error),
            flag(&self.violation),
        ]
    }
}

/// Median of a sample; the mean of the two middle values for even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub trials: usize,
    pub median_error: Option<f64>,
    pub mean_error: Option<f64>,
    pub violations: usize,
}

impl Summary {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let errors: Vec<f64> = records.iter().filter_map(|r| r.error).collect();
        Self::from_parts(records.len(), &errors, records.iter().filter(|r| r.violation == Some(true)).count())
    }

    fn from_parts(trials: usize, errors: &[f64], violations: usize) -> Self {
        Self {
            trials,
            median_error: median(errors),
            mean_error: mean(errors),
            violations,
        }
    }

    pub fn line(&self) -> String {
        let show = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        format!(
            "# summary trials={} median_error={} mean_error={} violations={}",
            self.trials,
            show(self.median_error),
            show(self.mean_error),
            self.violations
        )
    }

    /// Recomputes the summary from the rows of an emitted CSV.
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Config(format!("malformed harness csv: {m}"));
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| bad(format!("missing column {name}")))
        };
        let (err_col, viol_col) = (col("error")?, col("violation")?);
        let (mut trials, mut errors, mut violations) = (0, Vec::new(), 0);
        for row in reader.records() {
            let row = row.map_err(|e| bad(e.to_string()))?;
            trials += 1;
            let cell = &row[err_col];
            if !cell.is_empty() {
                errors.push(cell.parse::<f64>().map_err(|e| bad(e.to_string()))?);
            }
            if &row[viol_col] == "1" {
                violations += 1;
            }
        }
        Ok(Self::from_parts(trials, &errors, violations))
    }

    /// Reads back the summary comment line of an emitted CSV.
    pub fn parse_line(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Config(format!("malformed summary line: {m}"));
        let line = text
            .lines()
            .find_map(|l| l.strip_prefix("# summary "))
            .ok_or_else(|| bad("not found"))?;
        let mut s = Summary {
            trials: 0,
            median_error: None,
            mean_error: None,
            violations: 0,
        };
        for kv in line.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(kv))?;
            let float = |v: &str| -> Result<Option<f64>> {
                if v == "NA" {
                    Ok(None)
                } else {
                    v.parse().map(Some).map_err(|_| bad(v))
                }
            };
            match k {
                "trials" => s.trials = v.parse().map_err(|_| bad(v))?,
                "median_error" => s.median_error = float(v)?,
                "mean_error" => s.mean_error = float(v)?,
                "violations" => s.violations = v.parse().map_err(|_| bad(v))?,
                _ => return Err(bad(k)),
            }
        }
        Ok(s)
    }
}

/// Schema line, header, one row per record, then the summary line.
pub fn write_csv(records: &[TrialRecord], summary: &Summary) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for r in records {
        w.write_record(r.fields()).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 output");
    format!("{SCHEMA_LINE}\n{body}{}\n", summary.line())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TrialRecord> {
        (0..5)
            .map(|t| TrialRecord {
                trial: t,
                group: "n=10".into(),
                lambda: 0.1 * (t + 1) as f64,
                error: (t != 2).then(|| 1.0 / (t + 3) as f64),
                violation: Some(t == 4),
                hyp_rho: Some(true),
                collisions: Some(t as u64),
                ..Default::default()
            })
            .collect()
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
    }

    #[test]
    fn row_width_matches_header() {
        assert_eq!(TrialRecord::default().fields().len(), COLUMNS.len());
    }

    #[test]
    fn summary_recomputed_from_csv_is_identical() {
        let records = sample();
        let summary = Summary::from_records(&records);
        assert_eq!(summary.trials, 5);
        assert_eq!(summary.violations, 1);
        let text = write_csv(&records, &summary);
        assert!(text.starts_with("# sqrtnuc-v1\ntrial,group,lambda"));
        assert_eq!(Summary::from_csv(&text).unwrap(), summary);
        assert_eq!(Summary::parse_line(&text).unwrap(), summary);
    }

    #[test]
    fn empty_summary_uses_na() {
        let s = Summary::from_records(&[TrialRecord::default()]);
        assert!(s.line().contains("median_error=NA"));
        assert_eq!(Summary::parse_line(&s.line()).unwrap(), s);
    }
}
