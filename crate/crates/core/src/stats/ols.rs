//! Multiple linear regression by Householder QR.

use serde::{Deserialize, Serialize};

use super::{check_finite, StatsError};

/// A column whose residual norm after projecting out the previous columns
/// falls below this fraction of its own norm is treated as collinear.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Intercept first, then one coefficient per predictor in input order.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Infinite for an exact fit; serialized as `null` in JSON.
    pub f_statistic: f64,
    pub n: usize,
    pub p: usize,
}

impl RegressionResult {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    /// Coefficient of the `i`-th predictor (zero-based).
    pub fn slope(&self, i: usize) -> f64 {
        self.coefficients[i + 1]
    }
}

/// Least-squares fit of `y` on the given predictor columns plus an intercept.
///
/// Requires `n > p + 1`. Collinear predictors (including constant ones,
/// which duplicate the intercept) yield [`StatsError::RankDeficient`].
/// When `y` is constant, `R² = 0`.
pub fn ols_fit(predictors: &[&[f64]], y: &[f64]) -> Result<RegressionResult, StatsError> {
    let n = y.len();
    let p = predictors.len();
    if p == 0 {
        return Err(StatsError::ShapeMismatch("at least one predictor is required".into()));
    }
    if let Some(col) = predictors.iter().find(|c| c.len() != n) {
        return Err(StatsError::LengthMismatch(col.len(), n));
    }
    if n <= p + 1 {
        return Err(StatsError::TooFewSamples { needed: p + 2, got: n });
    }
    check_finite(y)?;
    for c in predictors {
        check_finite(c)?;
    }

    // Column-major design matrix with the intercept first.
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(p + 1);
    a.push(vec![1.0; n]);
    a.extend(predictors.iter().map(|c| c.to_vec()));
    let mut qty = y.to_vec();

    let m = p + 1;
    let mut r_diag = vec![0.0; m];
    let mut deficient = Vec::new();
    for k in 0..m {
        let original_norm = a[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        let tail_norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if original_norm == 0.0 || tail_norm <= RANK_TOL * original_norm {
            // k == 0 is the all-ones intercept and never lands here.
            deficient.push(k - 1);
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -tail_norm } else { tail_norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let v_norm_sq: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / v_norm_sq;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= f * vi;
            }
        };
        for col in a.iter_mut().skip(k) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
        r_diag[k] = alpha;
    }
    if !deficient.is_empty() {
        return Err(StatsError::RankDeficient { columns: deficient });
    }

    // Back substitution on the upper-triangular R.
    let mut beta = vec![0.0; m];
    for k in (0..m).rev() {
        let mut s = qty[k];
        for j in k + 1..m {
            s -= a[j][k] * beta[j];
        }
        beta[k] = s / r_diag[k];
    }

    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for i in 0..n {
        let fitted = beta[0] + predictors.iter().zip(&beta[1..]).map(|(c, b)| c[i] * b).sum::<f64>();
        sse += (y[i] - fitted) * (y[i] - fitted);
        sst += (y[i] - mean_y) * (y[i] - mean_y);
    }
    let r_squared = if sst == 0.0 { 0.0 } else { (1.0 - sse / sst).clamp(0.0, 1.0) };
    let dof = (n - p - 1) as f64;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / dof;
    let f_statistic = if r_squared == 1.0 {
        f64::INFINITY
    } else {
        (r_squared / p as f64) / ((1.0 - r_squared) / dof)
    };

    Ok(RegressionResult {
        coefficients: beta,
        r_squared,
        adj_r_squared,
        f_statistic,
        n,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pinv_oracle(predictors: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let m = predictors.len() + 1;
        let x = DMatrix::from_fn(n, m, |i, j| if j == 0 { 1.0 } else { predictors[j - 1][i] });
        let pinv = x.pseudo_inverse(1e-12).unwrap();
        let beta = pinv * DMatrix::from_column_slice(n, 1, y);
        beta.iter().copied().collect()
    }

    #[test]
    fn exact_fit() {
        let x = [1., 2., 3., 4., 5.];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let r = ols_fit(&[&x], &y).unwrap();
        assert!((r.slope(0) - 2.0).abs() < 1e-12);
        assert!(r.intercept().abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_target() {
        let x = [1., 2., 3., 4., 5.];
        let r = ols_fit(&[&x], &[3.0; 5]).unwrap();
        assert!(r.slope(0).abs() < 1e-12);
        assert_eq!(r.r_squared, 0.0);
        assert_eq!(r.f_statistic, 0.0);
    }

    #[test]
    fn collinear_columns() {
        let x = [1., 2., 3., 4., 5., 6.];
        let z = [0., 1., 0., 1., 0., 1.];
        assert_eq!(
            ols_fit(&[&x, &z, &x], &[1., 2., 3., 4., 5., 7.]),
            Err(StatsError::RankDeficient { columns: vec![2] })
        );
        let constant = [4.0; 6];
        assert_eq!(
            ols_fit(&[&constant, &x], &[1., 2., 3., 4., 5., 7.]),
            Err(StatsError::RankDeficient { columns: vec![0] })
        );
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            ols_fit(&[&[1., 2.]], &[1., 2.]),
            Err(StatsError::TooFewSamples { needed: 3, got: 2 })
        );
    }

    #[test]
    fn random_instance_matches_pseudoinverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let cols: Vec<Vec<f64>> = (0..2).map(|_| (0..20).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let y: Vec<f64> = (0..20)
            .map(|i| 1.5 - 0.7 * cols[0][i] + 2.2 * cols[1][i] + rng.random_range(-1.0..1.0))
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let fit = ols_fit(&refs, &y).unwrap();
        for (a, b) in fit.coefficients.iter().zip(pinv_oracle(&cols, &y)) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(fit.adj_r_squared <= fit.r_squared);
    }

    #[test]
    fn residuals_orthogonal_to_predictors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(6..60);
            let p = rng.random_range(1..5);
            let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let fit = ols_fit(&refs, &y).unwrap();
            let resid: Vec<f64> = (0..n)
                .map(|i| y[i] - fit.intercept() - (0..p).map(|j| fit.slope(j) * cols[j][i]).sum::<f64>())
                .collect();
            assert!(resid.iter().sum::<f64>().abs() < 1e-8);
            for c in &cols {
                let dot: f64 = c.iter().zip(&resid).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-8, "{dot}");
            }
            assert!(fit.adj_r_squared <= fit.r_squared);
        }
    }
}
