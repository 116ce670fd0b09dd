use std::fmt::Write;

use super::RegressionFit;

/// `***` below 0.01, `**` below 0.05, `*` below 0.1.
pub fn stars(p: Option<f64>) -> &'static str {
    match p {
        Some(p) if p < 0.01 => "***",
        Some(p) if p < 0.05 => "**",
        Some(p) if p < 0.1 => "*",
        _ => "",
    }
}

/// Plain-text regression table: each estimate with significance stars and
/// its clustered standard error in parentheses beneath, then fit
/// statistics. `labels` maps coefficient names to row labels; coefficients
/// not listed are omitted. An empty `labels` prints every coefficient under
/// its own name.
pub fn render_regression_table(title: &str, fit: &RegressionFit, labels: &[(&str, &str)]) -> String {
    let rows: Vec<(String, &super::Coefficient)> = if labels.is_empty() {
        fit.coefficients.iter().map(|c| (c.name.clone(), c)).collect()
    } else {
        labels
            .iter()
            .filter_map(|(name, label)| fit.coefficient(name).map(|c| (label.to_string(), c)))
            .collect()
    };
    let width = rows
        .iter()
        .map(|(l, _)| l.len())
        .chain(["Residual Std. Error".len()])
        .max()
        .unwrap_or(0)
        + 2;
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let rule = "-".repeat(width + 28);
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "{:<width$}Estimate", "");
    let _ = writeln!(out, "{rule}");
    for (label, c) in &rows {
        let _ = writeln!(out, "{:<width$}{:.3}{}", label, c.estimate, stars(c.p_value));
        let _ = writeln!(out, "{:<width$}({:.3})", "", c.se);
    }
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "{:<width$}{}", "Observations", fit.n_obs);
    let _ = writeln!(out, "{:<width$}{}", "Clusters", fit.n_clusters);
    let _ = writeln!(out, "{:<width$}{:.3}", "R2", fit.r_squared);
    let _ = writeln!(out, "{:<width$}{:.3}", "Adjusted R2", fit.adj_r_squared);
    let _ = writeln!(
        out,
        "{:<width$}{:.3} (df = {})",
        "Residual Std. Error", fit.residual_se, fit.df_resid
    );
    if let Some(f) = &fit.f_test {
        let _ = writeln!(
            out,
            "{:<width$}{:.3}{} (df = {}; {})",
            "F Statistic",
            f.statistic,
            stars(Some(f.p_value)),
            f.df1,
            f.df2
        );
    }
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "Note: *p<0.1; **p<0.05; ***p<0.01; pair-clustered standard errors");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{Coefficient, RegressionFit};

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(Some(0.005)), "***");
        assert_eq!(stars(Some(0.01)), "**");
        assert_eq!(stars(Some(0.07)), "*");
        assert_eq!(stars(Some(0.1)), "");
        assert_eq!(stars(None), "");
    }

    #[test]
    fn layout() {
        let fit = RegressionFit {
            coefficients: vec![Coefficient {
                name: "female_female".into(),
                estimate: -0.015,
                se: 0.004,
                t: Some(-3.75),
                p_value: Some(0.0002),
                ci_low: -0.023,
                ci_high: -0.007,
            }],
            n_obs: 5205,
            n_clusters: 2600,
            df_resid: 5198,
            df_cluster: 2599,
            r_squared: 0.025,
            adj_r_squared: 0.024,
            residual_se: 0.129,
            f_test: None,
            confidence: 0.95,
        };
        let t = render_regression_table("One-of share", &fit, &[("female_female", "Female-Female")]);
        assert!(t.contains("Female-Female        -0.015***\n"));
        assert!(t.contains("(0.004)"));
        assert!(t.contains("0.129 (df = 5198)"));
    }
}
