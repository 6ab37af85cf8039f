use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::Real17;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    /// Binomial proportion `hits / trials`.
    pub fn proportion(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self { mean: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), trials }
    }

    /// Distance from `exact` in units of the binomial standard error at
    /// `exact`, so a zero-variance sample still gets a finite score.
    pub fn z_score(&self, exact: f64) -> f64 {
        let sigma = (exact * (1.0 - exact) / self.trials as f64).sqrt();
        if sigma == 0.0 {
            if self.mean == exact {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - exact) / sigma
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method")]
pub enum Method {
    Exact,
    MonteCarlo { trials: u64, stderr: Real17 },
}

/// Adam's success, as a single value or as the fidelity bracket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AdamSuccess {
    Value(Real17),
    Interval { lower: Real17, upper: Real17 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    #[serde(rename = "pBc")]
    pub p_bc: Real17,
    #[serde(rename = "pAc")]
    pub p_ac: AdamSuccess,
    #[serde(rename = "fidelityF")]
    pub fidelity_f: Real17,
    #[serde(rename = "fidelityFprime", default, skip_serializing_if = "Option::is_none")]
    pub fidelity_fprime: Option<Real17>,
    #[serde(rename = "epsilonBudget")]
    pub epsilon_budget: [Real17; 3],
    #[serde(flatten)]
    pub method: Method,
}

impl SecurityReport {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Oracle(format!("security report: {what}")));
        let slack = 1e-9;
        if !(0.5 - slack..=1.0 + slack).contains(&self.p_bc.0) {
            return bad("pBc outside [1/2, 1]");
        }
        let in_unit = |x: f64| (-slack..=1.0 + slack).contains(&x);
        let ac_ok = match &self.p_ac {
            AdamSuccess::Value(v) => in_unit(v.0),
            AdamSuccess::Interval { lower, upper } => {
                in_unit(lower.0) && in_unit(upper.0) && lower.0 <= upper.0 + slack
            }
        };
        if !ac_ok {
            return bad("pAc outside [0, 1]");
        }
        if !in_unit(self.fidelity_f.0) || self.fidelity_fprime.is_some_and(|f| !in_unit(f.0)) {
            return bad("fidelity outside [0, 1]");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact() -> SecurityReport {
        SecurityReport {
            p_bc: Real17(0.78125),
            p_ac: AdamSuccess::Interval { lower: Real17(0.25), upper: Real17(0.5) },
            fidelity_f: Real17(0.5),
            fidelity_fprime: None,
            epsilon_budget: [Real17(0.25), Real17(0.0), Real17(0.0)],
            method: Method::Exact,
        }
    }

    #[test]
    fn exact_report_has_method_and_no_stderr() {
        let text = serde_json::to_string(&exact()).unwrap();
        assert!(text.contains(r#""method":"Exact""#));
        assert!(!text.contains("stderr"));
        let back: SecurityReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, exact());
    }

    #[test]
    fn monte_carlo_report_carries_trials_and_stderr() {
        let mut r = exact();
        r.method = Method::MonteCarlo { trials: 10_000, stderr: Real17(0.004) };
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(r#""method":"MonteCarlo","trials":10000,"stderr":"#));
        assert!(serde_json::from_str::<SecurityReport>(
            r#"{"pBc":0.5,"pAc":0.1,"fidelityF":1,"epsilonBudget":[0,0,0],"method":"MonteCarlo"}"#
        )
        .is_err());
        assert!(serde_json::from_str::<SecurityReport>(
            r#"{"pBc":0.5,"pAc":0.1,"fidelityF":1,"epsilonBudget":[0,0,0]}"#
        )
        .is_err());
    }

    #[test]
    fn ranges_are_checked() {
        assert!(exact().validate().is_ok());
        let mut r = exact();
        r.p_bc = Real17(0.4);
        assert!(r.validate().is_err());
    }

    #[test]
    fn proportion_and_z() {
        let e = Estimate::proportion(25, 100);
        assert!((e.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert!(e.z_score(0.25).abs() < 1e-15);
        assert_eq!(Estimate::proportion(0, 10).z_score(0.0), 0.0);
        assert!(Estimate::proportion(1, 10).z_score(0.0).is_infinite());
    }
}
