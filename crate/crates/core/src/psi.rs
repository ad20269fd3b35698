//! Gauges `psi` with `psi(x) / x^2 -> 0` and their monotone envelopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nondecreasing gauge `psi : [0, inf) -> [0, inf)` with `psi(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiSpec {
    /// `x^2 / (1 + ln(1/x))^p` on `(0, 1]`, continued as `x^2` above 1.
    LogPow { p: f64 },
    /// `x^{2 + delta}`.
    Power { delta: f64 },
    /// `x^2`; parses, but fails [`PsiSpec::validate`].
    Quadratic,
    /// Log-log interpolation through `(x, psi(x))` samples.
    ///
    /// Below the first sample and above the last one the end segments are
    /// continued as power laws.
    Table { points: Vec<(f64, f64)> },
}

impl PsiSpec {
    /// Parses `preset:logpow,p=1`, `preset:power,delta=0.5` or
    /// `preset:quadratic`. Tables are built with [`PsiSpec::table`].
    pub fn parse(spec: &str) -> Result<Self> {
        let body = spec
            .strip_prefix("preset:")
            .ok_or_else(|| Error::InvalidPsi(format!("`{spec}` does not start with `preset:`")))?;
        let mut parts = body.split(',');
        let name = parts.next().unwrap_or_default().trim();
        let mut params = Vec::new();
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidPsi(format!("parameter `{part}` is not key=value")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidPsi(format!("parameter `{part}` is not numeric")))?;
            params.push((key.trim().to_string(), value));
        }
        let param = |key: &str, default: Option<f64>| -> Result<f64> {
            match params.iter().find(|(k, _)| k == key) {
                Some((_, v)) => Ok(*v),
                None => default.ok_or_else(|| {
                    Error::InvalidPsi(format!("preset `{name}` needs parameter `{key}`"))
                }),
            }
        };
        let known: &[&str] = match name {
            "logpow" => &["p"],
            "power" => &["delta"],
            "quadratic" => &[],
            other => return Err(Error::InvalidPsi(format!("unknown preset `{other}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::InvalidPsi(format!(
                "preset `{name}` has no parameter `{k}`"
            )));
        }
        let psi = match name {
            "logpow" => PsiSpec::LogPow {
                p: param("p", Some(1.0))?,
            },
            "power" => PsiSpec::Power {
                delta: param("delta", None)?,
            },
            _ => PsiSpec::Quadratic,
        };
        psi.check_parameters()?;
        Ok(psi)
    }

    /// A tabulated gauge; samples must have increasing positive `x` and
    /// nondecreasing positive `psi`.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        let psi = PsiSpec::Table { points };
        psi.check_parameters()?;
        Ok(psi)
    }

    fn check_parameters(&self) -> Result<()> {
        match self {
            PsiSpec::LogPow { p } if !(p.is_finite() && *p > 0.0) => {
                Err(Error::InvalidPsi(format!("logpow needs p > 0, got {p}")))
            }
            PsiSpec::Power { delta } if !(delta.is_finite() && *delta > 0.0) => Err(
                Error::InvalidPsi(format!("power needs delta > 0, got {delta}")),
            ),
            PsiSpec::Table { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidPsi(
                        "a table needs at least two samples".into(),
                    ));
                }
                for (x, y) in points {
                    if !(x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0) {
                        return Err(Error::InvalidPsi(format!(
                            "sample ({x}, {y}) must be positive and finite"
                        )));
                    }
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidPsi("sample abscissae must increase".into()));
                    }
                    if w[1].1 < w[0].1 {
                        return Err(Error::InvalidPsi("psi must be nondecreasing".into()));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Rejects gauges whose envelope does not tend to zero at the origin.
    pub fn validate(&self) -> Result<()> {
        self.check_parameters()?;
        match self {
            PsiSpec::Quadratic => Err(Error::PsiHypothesis(
                "psi(x) = x^2 has psi(x)/x^2 = 1 for every x".into(),
            )),
            PsiSpec::Table { points } => {
                let slope = segment_slope(points, 0);
                if slope <= 2.0 {
                    Err(Error::PsiHypothesis(format!(
                        "the first table segment has log-log slope {slope} <= 2, so psi(x)/x^2 does not vanish at 0"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PsiSpec::LogPow { p } => format!("preset:logpow,p={p}"),
            PsiSpec::Power { delta } => format!("preset:power,delta={delta}"),
            PsiSpec::Quadratic => "preset:quadratic".into(),
            PsiSpec::Table { points } => format!("table:{} samples", points.len()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            PsiSpec::LogPow { p } => {
                if x >= 1.0 {
                    x * x
                } else {
                    x * x / (1.0 + (1.0 / x).ln()).powf(*p)
                }
            }
            PsiSpec::Power { delta } => x.powf(2.0 + delta),
            PsiSpec::Quadratic => x * x,
            PsiSpec::Table { points } => {
                let i = segment_for(points, x);
                let (x0, y0) = points[i];
                y0 * (x / x0).powf(segment_slope(points, i))
            }
        }
    }

    /// `sup_{0 < y <= x} psi(y) / y^2`.
    pub fn envelope(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            // psi(y)/y^2 is nondecreasing for the analytic presets.
            PsiSpec::LogPow { p } => {
                if x >= 1.0 {
                    1.0
                } else {
                    (1.0 + (1.0 / x).ln()).powf(-p)
                }
            }
            PsiSpec::Power { delta } => x.powf(*delta),
            PsiSpec::Quadratic => 1.0,
            PsiSpec::Table { points } => {
                // psi(y)/y^2 is a power law on each segment, hence monotone
                // there: the supremum sits at a knot below x or at x itself.
                let ratio = |y: f64| self.eval(y) / (y * y);
                let tail = if segment_slope(points, 0) < 2.0 {
                    f64::INFINITY
                } else {
                    0.0
                };
                points
                    .iter()
                    .take_while(|(px, _)| *px <= x)
                    .map(|(px, _)| ratio(*px))
                    .fold(tail.max(ratio(x)), f64::max)
            }
        }
    }

    /// Probes the envelope on a log grid down to `1e-300`, returning whether
    /// it is nondecreasing there and strictly smaller at the bottom than at 1.
    pub fn spot_check_decay(&self) -> bool {
        let grid: Vec<f64> = (0..=300).rev().map(|e| 10f64.powi(-e)).collect();
        let values: Vec<f64> = grid.iter().map(|&x| self.envelope(x)).collect();
        let monotone = values.windows(2).all(|w| w[0] <= w[1]);
        monotone && values[0] < 0.5 * values[values.len() - 1]
    }
}

fn segment_slope(points: &[(f64, f64)], i: usize) -> f64 {
    let i = i.min(points.len() - 2);
    let (x0, y0) = points[i];
    let (x1, y1) = points[i + 1];
    (y1 / y0).ln() / (x1 / x0).ln()
}

fn segment_for(points: &[(f64, f64)], x: f64) -> usize {
    let upper = points.partition_point(|(px, _)| *px <= x);
    upper.saturating_sub(1).min(points.len() - 2)
}
