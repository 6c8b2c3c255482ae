use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Perturbation benchmark that produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Roar,
    Evalx,
    Road,
    Goar,
    /// GOAR's shift without the denoising step.
    GoarNoProjection,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Roar,
        Strategy::Evalx,
        Strategy::Road,
        Strategy::Goar,
        Strategy::GoarNoProjection,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Roar => "roar",
            Strategy::Evalx => "evalx",
            Strategy::Road => "road",
            Strategy::Goar => "goar",
            Strategy::GoarNoProjection => "goar_no_projection",
        }
    }

    /// Pixel strategies remove coordinates; the others shift along the feature.
    pub fn is_pixel(self) -> bool {
        matches!(self, Strategy::Roar | Strategy::Evalx | Strategy::Road)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.label() == s)
            .ok_or_else(|| Error::invalid(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Removed fraction for pixel strategies, shift strength for GOAR.
    pub level: f64,
    pub accuracy: f64,
    pub cumulative_misclassified: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationCurve {
    pub strategy: Strategy,
    pub method: String,
    pub points: Vec<CurvePoint>,
    /// Training seed of each level, in level order.
    pub seeds: Vec<u64>,
}

impl DegradationCurve {
    /// Builds a curve from per-level correctness of every test sample.
    ///
    /// `correct[j][i]` says whether sample `i` was classified correctly at level `j`.
    pub fn from_levels(
        strategy: Strategy,
        method: impl Into<String>,
        levels: &[f64],
        correct: &[Vec<bool>],
        seeds: Vec<u64>,
    ) -> Result<Self> {
        if levels.is_empty() || levels.len() != correct.len() || seeds.len() != levels.len() {
            return Err(Error::invalid(format!(
                "{} levels, {} correctness rows and {} seeds",
                levels.len(),
                correct.len(),
                seeds.len()
            )));
        }
        if levels[0] != 0.0 {
            return Err(Error::invalid("the first level must be the clean baseline 0"));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("levels must be strictly ascending"));
        }
        let n = correct[0].len();
        if correct.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("every level must score the same samples"));
        }
        let by_sample: Vec<Vec<bool>> = (0..n)
            .map(|i| correct.iter().map(|row| row[i]).collect())
            .collect();
        let cumulative = cumulative_from_predictions(&by_sample)?;
        let points = levels
            .iter()
            .zip(correct)
            .zip(cumulative)
            .map(|((&level, row), cum)| CurvePoint {
                level,
                accuracy: row.iter().filter(|&&c| c).count() as f64 / n as f64,
                cumulative_misclassified: cum,
            })
            .collect();
        Ok(Self {
            strategy,
            method: method.into(),
            points,
            seeds,
        })
    }

    pub fn levels(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.level).collect()
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.accuracy).collect()
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.cumulative_misclassified).collect()
    }
}

/// Fraction of samples misclassified at any level up to each level.
///
/// `per_sample[i][j]` is whether sample `i` is correct at level `j`.
pub fn cumulative_from_predictions(per_sample: &[Vec<bool>]) -> Result<Vec<f64>> {
    if per_sample.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let levels = per_sample[0].len();
    if levels == 0 || per_sample.iter().any(|r| r.len() != levels) {
        return Err(Error::invalid("prediction matrix must be rectangular with at least one level"));
    }
    // First level at which each sample is lost, if ever.
    let mut lost_at = vec![0usize; levels + 1];
    for row in per_sample {
        let first = row.iter().position(|&c| !c).unwrap_or(levels);
        lost_at[first] += 1;
    }
    let n = per_sample.len() as f64;
    let mut total = 0;
    Ok((0..levels)
        .map(|j| {
            total += lost_at[j];
            total as f64 / n
        })
        .collect())
}

/// Trapezoid area under `values` over `levels`, divided by the span of `levels`.
pub fn normalized_area(levels: &[f64], values: &[f64]) -> Result<f64> {
    if levels.is_empty() || levels.len() != values.len() {
        return Err(Error::invalid("area needs matching, non-empty level and value lists"));
    }
    if levels.len() == 1 {
        return Ok(values[0]);
    }
    let span = levels[levels.len() - 1] - levels[0];
    if span.is_nan() || span <= 0.0 {
        return Err(Error::invalid("levels must span a positive range"));
    }
    let area: f64 = levels
        .windows(2)
        .zip(values.windows(2))
        .map(|(l, v)| 0.5 * (l[1] - l[0]) * (v[0] + v[1]))
        .sum();
    Ok(area / span)
}

/// Scalar summary of how much a perturbation degraded the model.
///
/// Shift strategies use the normalized area under the cumulative
/// misclassification curve; pixel strategies use the normalized area under
/// the accuracy drop `acc(0) − acc(k)`.
pub fn performance_drop_score(curve: &DegradationCurve) -> Result<f64> {
    let levels = curve.levels();
    if curve.strategy.is_pixel() {
        let clean = curve.points.first().ok_or(Error::EmptyDataset)?.accuracy;
        let drops: Vec<f64> = curve.points.iter().map(|p| clean - p.accuracy).collect();
        normalized_area(&levels, &drops)
    } else {
        normalized_area(&levels, &curve.cumulative())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift_curve(values: &[f64]) -> DegradationCurve {
        DegradationCurve {
            strategy: Strategy::Goar,
            method: "m".into(),
            points: values
                .iter()
                .enumerate()
                .map(|(i, &v)| CurvePoint {
                    level: i as f64,
                    accuracy: 1.0 - v,
                    cumulative_misclassified: v,
                })
                .collect(),
            seeds: vec![0; values.len()],
        }
    }

    #[test]
    fn cumulative_examples() {
        assert_eq!(
            cumulative_from_predictions(&[vec![true; 4], vec![true; 4]]).unwrap(),
            vec![0.0; 4]
        );
        assert_eq!(
            cumulative_from_predictions(&[vec![true, true, false, true]]).unwrap(),
            vec![0.0, 0.0, 1.0, 1.0]
        );
        assert_eq!(
            cumulative_from_predictions(&[vec![true, false], vec![false, true]]).unwrap(),
            vec![0.5, 1.0]
        );
        assert!(cumulative_from_predictions(&[]).is_err());
        assert!(cumulative_from_predictions(&[vec![true], vec![true, false]]).is_err());
    }

    #[test]
    fn single_level_is_clean_error() {
        let c = DegradationCurve::from_levels(
            Strategy::Goar,
            "grad",
            &[0.0],
            &[vec![true, false, true, true]],
            vec![3],
        )
        .unwrap();
        assert_eq!(c.points[0].accuracy, 0.75);
        assert_eq!(c.points[0].cumulative_misclassified, 1.0 - 0.75);
    }

    #[test]
    fn rebound_keeps_cumulative_monotone() {
        let c = DegradationCurve::from_levels(
            Strategy::Goar,
            "grad",
            &[0.0, 1.0, 2.0],
            &[vec![true, true], vec![false, false], vec![true, true]],
            vec![0; 3],
        )
        .unwrap();
        assert_eq!(c.accuracies(), vec![1.0, 0.0, 1.0]);
        assert_eq!(c.cumulative(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn from_levels_validates() {
        assert!(DegradationCurve::from_levels(Strategy::Roar, "m", &[0.5], &[vec![true]], vec![0]).is_err());
        assert!(DegradationCurve::from_levels(
            Strategy::Roar,
            "m",
            &[0.0, 0.0],
            &[vec![true], vec![true]],
            vec![0, 0]
        )
        .is_err());
    }

    #[test]
    fn drop_score_examples() {
        assert_eq!(performance_drop_score(&shift_curve(&[0.0, 0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(performance_drop_score(&shift_curve(&[1.0, 1.0, 1.0])).unwrap(), 1.0);
        let ramp = performance_drop_score(&shift_curve(&[0.0, 0.25, 0.5, 0.75, 1.0])).unwrap();
        assert!((ramp - 0.5).abs() < 1e-15);
        let mut pixel = shift_curve(&[0.0, 0.5, 1.0]);
        pixel.strategy = Strategy::Roar;
        // Accuracy 1 → 0.5 → 0: the drop ramps from 0 to 1.
        assert!((performance_drop_score(&pixel).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn strategy_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.label().parse::<Strategy>().unwrap(), s);
        }
        assert!("roard".parse::<Strategy>().is_err());
    }
}
