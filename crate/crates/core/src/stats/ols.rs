use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::{Error, Result};

/// A column is treated as collinear when the part of it orthogonal to the
/// preceding columns is below this fraction of its norm.
const COLLINEARITY_TOL: f64 = 1e-10;

/// Design matrix with one name per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, x: DMatrix<f64>) -> Result<DesignMatrix> {
        if names.len() != x.ncols() {
            return Err(Error::InvalidInput(format!(
                "{} column names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::InvalidInput("duplicate column names".into()));
        }
        Ok(DesignMatrix { names, x })
    }

    /// Builds from row vectors, each as long as `names`.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<DesignMatrix> {
        let k = names.len();
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::InvalidInput(format!("row of length {} for {k} columns", r.len())));
        }
        let x = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
        DesignMatrix::new(names, x)
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn has_constant(&self) -> bool {
        (0..self.ncols()).any(|j| self.x.column(j).iter().all(|v| *v == 1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    /// `None` when the standard error is zero.
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Classical overall F test of all non-constant regressors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FTest {
    pub statistic: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub coefficients: Vec<Coefficient>,
    pub n_obs: usize,
    pub n_clusters: usize,
    /// N − K.
    pub df_resid: usize,
    /// G − 1, the reference distribution for coefficient tests.
    pub df_cluster: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub residual_se: f64,
    pub f_test: Option<FTest>,
    pub confidence: f64,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// OLS with CR1 pair-clustered standard errors at 95% confidence.
pub fn ols_clustered<C: Ord>(y: &[f64], design: &DesignMatrix, clusters: &[C]) -> Result<RegressionFit> {
    ols_clustered_at(y, design, clusters, 0.95)
}

/// β = (XᵀX)⁻¹Xᵀy through a Householder QR of X; covariance
/// c·(XᵀX)⁻¹(Σ_g X_gᵀu_g u_gᵀX_g)(XᵀX)⁻¹ with c = G/(G−1)·(N−1)/(N−K);
/// t tests on G − 1 degrees of freedom.
pub fn ols_clustered_at<C: Ord>(
    y: &[f64],
    design: &DesignMatrix,
    clusters: &[C],
    confidence: f64,
) -> Result<RegressionFit> {
    let (n, k) = (design.nrows(), design.ncols());
    if y.len() != n || clusters.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} outcomes and {} cluster ids for {n} design rows",
            y.len(),
            clusters.len()
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidInput(format!("confidence {confidence} outside (0, 1)")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("design has no columns".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!("{n} observations for {k} regressors")));
    }
    if y.iter().chain(design.x.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in outcome or design".into()));
    }
    // Clusters are numbered in sorted order so scores are summed in an
    // order that does not depend on row order.
    let mut cluster_index: BTreeMap<&C, usize> = clusters.iter().map(|c| (c, 0)).collect();
    for (rank, idx) in cluster_index.values_mut().enumerate() {
        *idx = rank;
    }
    let g = cluster_index.len();
    if g < 2 {
        return Err(Error::SingleCluster);
    }

    let x = &design.x;
    let qr = x.clone().qr();
    let r = qr.r();
    let dependent = collinear_columns(x, &r);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient(name_collinear(design, &dependent)));
    }
    let yv = DVector::from_column_slice(y);
    let mut qty = yv.clone();
    qr.q_tr_mul(&mut qty);
    let beta = r
        .solve_upper_triangular(&qty.rows(0, k).into_owned())
        .ok_or_else(|| Error::RankDeficient(design.names.clone()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient(design.names.clone()))?;
    let bread = &r_inv * r_inv.transpose();

    let resid = &yv - x * &beta;
    let mut scores = DMatrix::<f64>::zeros(g, k);
    for i in 0..n {
        let gi = cluster_index[&clusters[i]];
        let u = resid[i];
        for j in 0..k {
            scores[(gi, j)] += x[(i, j)] * u;
        }
    }
    let meat = scores.transpose() * &scores;
    let nf = n as f64;
    let kf = k as f64;
    let gf = g as f64;
    let c = gf / (gf - 1.0) * (nf - 1.0) / (nf - kf);
    let vcov = (&bread * meat * &bread) * c;

    let df_cluster = g - 1;
    let tdist = StudentsT::new(0.0, 1.0, df_cluster as f64).expect("df >= 1");
    let crit = tdist.inverse_cdf(0.5 + confidence / 2.0);
    let coefficients = (0..k)
        .map(|j| {
            let se = vcov[(j, j)].max(0.0).sqrt();
            let est = beta[j];
            let (t, p) = if se > 0.0 {
                let t = est / se;
                (Some(t), Some((2.0 * tdist.sf(t.abs())).clamp(0.0, 1.0)))
            } else {
                (None, None)
            };
            Coefficient {
                name: design.names[j].clone(),
                estimate: est,
                se,
                t,
                p_value: p,
                ci_low: est - crit * se,
                ci_high: est + crit * se,
            }
        })
        .collect();

    let ssr: f64 = resid.iter().map(|u| u * u).sum();
    let mean_y = y.iter().sum::<f64>() / nf;
    let sst: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (nf - 1.0) / (nf - kf);
    let df_resid = n - k;
    let residual_se = (ssr / df_resid as f64).sqrt();
    let f_test = if design.has_constant() && k > 1 && ssr > 0.0 {
        let df1 = k - 1;
        let stat = ((sst - ssr) / df1 as f64) / (ssr / df_resid as f64);
        let p = FisherSnedecor::new(df1 as f64, df_resid as f64)
            .map(|d| d.sf(stat).clamp(0.0, 1.0))
            .unwrap_or(f64::NAN);
        Some(FTest {
            statistic: stat,
            df1,
            df2: df_resid,
            p_value: p,
        })
    } else {
        None
    };

    Ok(RegressionFit {
        coefficients,
        n_obs: n,
        n_clusters: g,
        df_resid,
        df_cluster,
        r_squared,
        adj_r_squared,
        residual_se,
        f_test,
        confidence,
    })
}

/// Columns whose component orthogonal to all preceding columns is
/// negligible. With an unpivoted Householder QR that component's norm is
/// |R_jj|.
fn collinear_columns(x: &DMatrix<f64>, r: &DMatrix<f64>) -> Vec<usize> {
    (0..x.ncols())
        .filter(|&j| {
            let norm = x.column(j).norm();
            norm == 0.0 || r[(j, j)].abs() <= COLLINEARITY_TOL * norm
        })
        .collect()
}

/// Names every column taking part in a linear dependency: each dependent
/// column followed by the independent columns it is built from.
fn name_collinear(design: &DesignMatrix, dependent: &[usize]) -> Vec<String> {
    let independent: Vec<usize> = (0..design.ncols()).filter(|j| !dependent.contains(j)).collect();
    let mut involved = BTreeSet::new();
    for &d in dependent {
        involved.insert(d);
        let target = design.x.column(d).into_owned();
        if target.norm() == 0.0 {
            continue;
        }
        let prior: Vec<usize> = independent.iter().copied().filter(|&j| j < d).collect();
        if prior.is_empty() {
            continue;
        }
        let sub = design.x.select_columns(&prior);
        let qr = sub.clone().qr();
        let mut qty = target.clone();
        qr.q_tr_mul(&mut qty);
        if let Some(coef) = qr.r().solve_upper_triangular(&qty.rows(0, prior.len()).into_owned()) {
            let scale = coef.amax().max(1.0);
            for (c, &j) in coef.iter().zip(&prior) {
                if c.abs() > 1e-8 * scale {
                    involved.insert(j);
                }
            }
        }
    }
    involved.into_iter().map(|j| design.names[j].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn design(names: &[&str], rows: &[Vec<f64>]) -> DesignMatrix {
        DesignMatrix::from_rows(names.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn exact_fit_has_zero_se() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, i as f64, (i * i) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 - 0.5 * r[1] + 0.25 * r[2]).collect();
        let clusters: Vec<u32> = (0..8).map(|i| i / 2).collect();
        let fit = ols_clustered(&y, &design(&["c", "x", "x2"], &rows), &clusters).unwrap();
        let est: Vec<f64> = fit.coefficients.iter().map(|c| c.estimate).collect();
        for (a, b) in est.iter().zip([2.0, -0.5, 0.25]) {
            assert!((a - b).abs() < 1e-10);
        }
        for c in &fit.coefficients {
            assert!(c.se < 1e-10);
        }
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let d = (i % 2) as f64;
                vec![1.0, d, 1.0 - d, i as f64]
            })
            .collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let clusters: Vec<u32> = (0..10).collect();
        match ols_clustered(&y, &design(&["intercept", "d1", "d0", "x"], &rows), &clusters) {
            Err(Error::RankDeficient(names)) => assert_eq!(names, vec!["intercept", "d1", "d0"]),
            other => panic!("{other:?}"),
        }
        let zero: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, 0.0, i as f64]).collect();
        match ols_clustered(&y, &design(&["intercept", "empty", "x"], &zero), &clusters) {
            Err(Error::RankDeficient(names)) => assert_eq!(names, vec!["empty"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_cluster_rejected() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y = [1.0, 2.0, 2.5, 4.0, 5.5];
        assert!(matches!(
            ols_clustered(&y, &design(&["c", "x"], &rows), &[0; 5]),
            Err(Error::SingleCluster)
        ));
    }

    #[test]
    fn input_validation() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let d = design(&["c", "x"], &rows);
        assert!(ols_clustered(&[1.0; 4], &d, &[0, 1, 2, 3, 4]).is_err());
        assert!(ols_clustered(&[1.0, 2.0, f64::NAN, 4.0, 5.0], &d, &[0, 1, 2, 3, 4]).is_err());
        assert!(DesignMatrix::from_rows(vec!["a".into(), "a".into()], &[vec![1.0, 2.0]]).is_err());
    }

    fn random_problem(seed: u64, n: usize, g: u32) -> (Vec<f64>, DesignMatrix, Vec<u32>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![1.0, rng.random_range(-1.0..1.0), f64::from(rng.random_range(0..2u8))])
            .collect();
        let y = rows
            .iter()
            .map(|r| 0.3 + 0.7 * r[1] - 0.2 * r[2] + rng.random_range(-0.5..0.5))
            .collect();
        let clusters = (0..n).map(|i| i as u32 % g).collect();
        (y, design(&["intercept", "x", "d"], &rows), clusters)
    }

    #[test]
    fn f_test_present_with_intercept() {
        let (y, d, c) = random_problem(3, 60, 12);
        let fit = ols_clustered(&y, &d, &c).unwrap();
        let f = fit.f_test.unwrap();
        assert_eq!((f.df1, f.df2), (2, 57));
        let ssr_ratio = fit.r_squared / (1.0 - fit.r_squared);
        assert!((f.statistic - ssr_ratio * 57.0 / 2.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn residuals_orthogonal(seed in 0u64..10_000) {
            let (y, d, c) = random_problem(seed, 40, 8);
            let fit = ols_clustered(&y, &d, &c).unwrap();
            let beta = DVector::from_iterator(3, fit.coefficients.iter().map(|c| c.estimate));
            let u = DVector::from_column_slice(&y) - &d.x * beta;
            let xtu = d.x.transpose() * u;
            prop_assert!(xtu.amax() < 1e-8);
        }

        #[test]
        fn shifting_y_moves_only_intercept(seed in 0u64..10_000, shift in -5.0f64..5.0) {
            let (y, d, c) = random_problem(seed, 40, 8);
            let a = ols_clustered(&y, &d, &c).unwrap();
            let shifted: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let b = ols_clustered(&shifted, &d, &c).unwrap();
            prop_assert!((b.coefficients[0].estimate - a.coefficients[0].estimate - shift).abs() < 1e-9);
            for j in 1..3 {
                prop_assert!((a.coefficients[j].estimate - b.coefficients[j].estimate).abs() < 1e-9);
            }
            for j in 0..3 {
                prop_assert!((a.coefficients[j].se - b.coefficients[j].se).abs() < 1e-9);
            }
        }

        #[test]
        fn row_permutation_invariant(seed in 0u64..10_000, perm_seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let (y, d, c) = random_problem(seed, 40, 8);
            let mut idx: Vec<usize> = (0..40).collect();
            idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
            let y2: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let c2: Vec<u32> = idx.iter().map(|&i| c[i]).collect();
            let d2 = DesignMatrix::new(d.names.clone(), d.x.select_rows(&idx)).unwrap();
            let a = ols_clustered(&y, &d, &c).unwrap();
            let b = ols_clustered(&y2, &d2, &c2).unwrap();
            for (p, q) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!((p.estimate - q.estimate).abs() < 1e-9);
                prop_assert!((p.se - q.se).abs() < 1e-9);
            }
        }
    }
}
