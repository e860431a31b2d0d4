//! Log–log least squares shared by every order and bound check.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScalingFit {
    /// `(ln x, ln y)` pairs that entered the regression.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// Abscissae dropped because the ordinate was not positive and finite.
    #[serde(default)]
    pub excluded: Vec<f64>,
}

impl ScalingFit {
    /// Regresses `ln y` on `ln x`; samples with `y ≤ 0` or non-finite are
    /// reported in `excluded`. Needs at least two usable points.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Option<ScalingFit> {
        assert_eq!(xs.len(), ys.len());
        let mut pts = Vec::new();
        let mut excluded = Vec::new();
        for (&x, &y) in xs.iter().zip(ys) {
            if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
                pts.push((x.ln(), y.ln()));
            } else {
                excluded.push(x);
            }
        }
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let max_residual = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).abs())
            .fold(0.0, f64::max);
        Some(ScalingFit {
            points: pts,
            slope,
            intercept,
            max_residual,
            excluded,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [0.5, 0.25, 0.125, 0.0625];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.7)).collect();
        let f = ScalingFit::fit(&xs, &ys).unwrap();
        assert!((f.slope + 1.7).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.max_residual < 1e-12);
    }

    #[test]
    fn exclusions_are_reported() {
        let f = ScalingFit::fit(&[1.0, 2.0, 3.0], &[1.0, f64::NAN, 9.0]).unwrap();
        assert_eq!(f.excluded, vec![2.0]);
        assert_eq!(f.points.len(), 2);
        assert!(ScalingFit::fit(&[1.0, 2.0], &[0.0, 1.0]).is_none());
    }
}
