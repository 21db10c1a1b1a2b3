//! Log-log rate fits with scheme-error floor detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest ladder points a fit accepts.
pub const MIN_FIT_POINTS: usize = 4;
/// A point is floored once halving `ε` changes the value by at most this
/// multiple of the scheme-error estimate.
pub const FLOOR_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `log value` against `log(1/ε)`.
    pub exponent: f64,
    /// RMS of the fit residuals in log space.
    pub residual: f64,
    pub intercept: f64,
}

/// Least-squares line through `(log(1/ε), log value)`.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!("need at least {MIN_FIT_POINTS} points, got {}", pairs.len())));
    }
    if let Some((e, v)) = pairs.iter().find(|(e, v)| !(*v > 0.0 && v.is_finite() && *e > 0.0)) {
        return Err(Error::Fit(format!("values must be positive and finite, got {v} at eps={e}")));
    }
    let xs: Vec<f64> = pairs.iter().map(|(e, _)| -e.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all scales coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit { exponent, residual, intercept })
}

/// Marks points whose change from the previous rung is within
/// [`FLOOR_FACTOR`] times `scheme_error`; once floored, later points stay
/// floored.
pub fn detect_floor(values: &[f64], scheme_error: f64) -> Vec<bool> {
    let mut floored = vec![false; values.len()];
    for k in 1..values.len() {
        floored[k] = floored[k - 1] || (values[k] - values[k - 1]).abs() <= FLOOR_FACTOR * scheme_error;
    }
    floored
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Growth,
    Decay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Fit of the values themselves.
    Direct,
    /// Fit of successive increments `v_k - v_{k-1}`, which removes an
    /// `ε`-independent offset from growth ladders.
    Increments,
}

/// A fitted ladder. The fit, when present, covers only unfloored points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub pairs: Vec<(f64, f64)>,
    pub direction: Direction,
    pub floored: Vec<bool>,
    pub scheme_error: Option<f64>,
    pub method: FitMethod,
    pub fit: Option<RateFit>,
    /// Direct fit over the same points, always kept for comparison.
    pub raw: Option<RateFit>,
    pub note: Option<String>,
}

impl RateReport {
    /// Decay ladder with floor detection against `scheme_error`.
    pub fn decay(pairs: Vec<(f64, f64)>, scheme_error: Option<f64>) -> Self {
        let values: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let floored = detect_floor(&values, scheme_error.unwrap_or(0.0));
        let kept: Vec<(f64, f64)> = pairs.iter().zip(&floored).filter(|(_, f)| !**f).map(|(p, _)| *p).collect();
        let (fit, note) = match fit_rate(&kept) {
            Ok(fit) => (Some(fit), None),
            Err(e) => (None, Some(format!("{e} ({} of {} points above the floor)", kept.len(), pairs.len()))),
        };
        Self { pairs, direction: Direction::Decay, floored, scheme_error, method: FitMethod::Direct, fit, raw: fit, note }
    }

    /// Growth exponent `N` in `value ≈ A ε^{-N} + B`.
    ///
    /// Fitted on the increments between rungs, which cancel `B`; when all
    /// increments vanish the exponent is 0, and when some increment is not
    /// positive the values are fitted directly.
    pub fn growth(pairs: Vec<(f64, f64)>) -> Self {
        let floored = vec![false; pairs.len()];
        let raw = fit_rate(&pairs).ok();
        let scale = pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        let increments: Vec<(f64, f64)> = pairs.windows(2).map(|w| (w[1].0, w[1].1 - w[0].1)).collect();
        let mut report =
            Self { pairs, direction: Direction::Growth, floored, scheme_error: None, method: FitMethod::Direct, fit: raw, raw, note: None };
        if increments.iter().all(|(_, d)| d.abs() <= 1e-12 * scale) {
            report.method = FitMethod::Increments;
            report.fit = Some(RateFit { exponent: 0.0, residual: 0.0, intercept: 0.0 });
            return report;
        }
        if increments.iter().all(|(_, d)| *d > 0.0) {
            match fit_rate(&increments) {
                Ok(fit) => {
                    report.method = FitMethod::Increments;
                    report.fit = Some(fit);
                }
                Err(e) => report.note = Some(format!("increment fit unavailable: {e}")),
            }
        } else {
            report.note = Some("increments change sign; fitted the values directly".into());
        }
        if report.fit.is_none() && report.note.is_none() {
            report.note = Some("too few points for a fit".into());
        }
        report
    }

    /// Growth exponent for growth ladders, decay order for decay ladders.
    pub fn rate(&self) -> Option<f64> {
        self.fit.map(|f| match self.direction {
            Direction::Growth => f.exponent,
            Direction::Decay => -f.exponent,
        })
    }

    pub fn unfloored(&self) -> usize {
        self.floored.iter().filter(|f| !**f).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ladder() -> Vec<f64> {
        (0..5).map(|k| 0.5 * 0.5f64.powi(k)).collect()
    }

    #[test]
    fn exact_power_laws() {
        let pairs: Vec<_> = ladder().into_iter().map(|e| (e, e.powi(-2))).collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12 && fit.residual < 1e-12);
        let pairs: Vec<_> = ladder().into_iter().map(|e| (e, 5.0)).collect();
        assert!(fit_rate(&pairs).unwrap().exponent.abs() < 1e-12);
    }

    #[test]
    fn noisy_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let pairs: Vec<_> = ladder().into_iter().map(|e| (e, e * e * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))).collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.exponent + 2.0).abs() <= 0.05);
        assert!(fit.residual < 0.01);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_rate(&[(0.5, 1.0), (0.25, 2.0), (0.125, 3.0)]).is_err());
        assert!(fit_rate(&[(0.5, 1.0), (0.25, 0.0), (0.125, 3.0), (0.06, 1.0)]).is_err());
        assert!(fit_rate(&[(0.5, 1.0), (0.25, -1.0), (0.125, 3.0), (0.06, 1.0)]).is_err());
    }

    #[test]
    fn rescaling_leaves_the_slope_unchanged() {
        let pairs: Vec<_> = ladder().into_iter().map(|e| (e, e.powf(1.3) + 0.1 * e)).collect();
        let a = fit_rate(&pairs).unwrap().exponent;
        let scaled: Vec<_> = pairs.iter().map(|(e, v)| (*e, v * 37.5)).collect();
        assert!((a - fit_rate(&scaled).unwrap().exponent).abs() < 1e-12);
    }

    #[test]
    fn floor_detection() {
        let values = [1.0, 0.25, 0.0625, 0.02, 0.0199];
        assert_eq!(detect_floor(&values, 0.01), vec![false, false, false, false, true]);
        assert_eq!(detect_floor(&values, 0.1), vec![false, false, true, true, true]);
        assert_eq!(detect_floor(&values, 0.0), vec![false; 5]);
    }

    #[test]
    fn growth_with_offset() {
        let pairs: Vec<_> = ladder().into_iter().map(|e| (e, 3.0 + 0.2 / e)).collect();
        let r = RateReport::growth(pairs);
        assert_eq!(r.method, FitMethod::Increments);
        assert!((r.rate().unwrap() - 1.0).abs() < 1e-12);
        assert!(r.raw.unwrap().exponent < 0.9);
        let flat = RateReport::growth(ladder().into_iter().map(|e| (e, 2.0)).collect());
        assert_eq!(flat.rate(), Some(0.0));
    }

    #[test]
    fn decay_excludes_floored_points() {
        let pairs: Vec<_> = ladder().into_iter().map(|e| (e, e * e + 1e-3)).collect();
        let r = RateReport::decay(pairs.clone(), Some(1e-3));
        assert!(r.floored[4]);
        assert!(r.fit.is_some());
        let r = RateReport::decay(pairs, Some(0.1));
        assert!(r.fit.is_none() && r.note.is_some());
    }
}
