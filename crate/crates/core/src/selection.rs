//! Feature selection: the minimum-sample-size reliability criterion and
//! plain frequency-rank cutoffs.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Scale};
use crate::numfmt::format_sig;
use crate::stats::sample_sd;

/// Which values feed the standard deviation of the margin of error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SigmaSource {
    /// The observed per-document values.
    #[default]
    Original,
    /// The observed values pooled with their mirror images.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    /// Normal quantile for the confidence level.
    pub confidence_z: f64,
    /// Margin of error as a multiple of the feature's standard deviation.
    pub margin_multiplier: f64,
    /// Sample size of the shortest document.
    pub min_doc_len: u64,
    pub sigma_source: SigmaSource,
}

impl SelectionParams {
    pub const DEFAULT_Z: f64 = 1.645;
    pub const DEFAULT_MARGIN_MULTIPLIER: f64 = 2.0;

    pub fn new(min_doc_len: u64) -> Self {
        SelectionParams {
            confidence_z: Self::DEFAULT_Z,
            margin_multiplier: Self::DEFAULT_MARGIN_MULTIPLIER,
            min_doc_len,
            sigma_source: SigmaSource::Original,
        }
    }

    /// Defaults with `min_doc_len` taken from the matrix's smallest sample.
    pub fn for_matrix(matrix: &FeatureMatrix) -> Result<Self> {
        let sizes = matrix.sample_sizes.as_ref().ok_or_else(|| {
            Error::InvalidArgument("matrix has no sample sizes; set the shortest document length explicitly".into())
        })?;
        let min = sizes.iter().copied().min().unwrap_or(0);
        Ok(Self::new(min.max(1)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.confidence_z > 0.0) || !(self.margin_multiplier > 0.0) || self.min_doc_len == 0 {
            return Err(Error::InvalidArgument(format!("invalid selection parameters {self:?}")));
        }
        Ok(())
    }
}

/// Averages every value with its mirror `(max + min) - v`.
///
/// Each pair averages to `(max + min) / 2`, so the result is constant.
pub fn mirror_correct(values: &[f64]) -> Vec<f64> {
    let Some((lo, hi)) = min_max(values) else { return Vec::new() };
    values.iter().map(|&v| (v + ((hi + lo) - v)) / 2.0).collect()
}

/// Mean of the mirror-corrected values, `(max + min) / 2`.
pub fn corrected_mean(values: &[f64]) -> f64 {
    match min_max(values) {
        Some((lo, hi)) => (hi + lo) / 2.0,
        None => f64::NAN,
    }
}

fn min_max(values: &[f64]) -> Option<(f64, f64)> {
    values.iter().fold(None, |acc, &v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequiredSize {
    pub n: f64,
    /// Set when the feature does not vary across documents.
    pub degenerate: bool,
}

/// `p(1 - p) * (z / e)^2` with `e = margin_multiplier * sigma`.
pub fn required_sample_size(p_bar: f64, sigma: f64, params: &SelectionParams) -> RequiredSize {
    if !(sigma > 0.0) {
        return RequiredSize { n: 0.0, degenerate: true };
    }
    let margin = params.margin_multiplier * sigma;
    let n = p_bar * (1.0 - p_bar) * (params.confidence_z / margin).powi(2);
    RequiredSize { n: n.max(0.0), degenerate: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDiagnostic {
    pub feature: String,
    pub p_bar: f64,
    pub sigma: f64,
    pub required_n: f64,
    pub retained: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub retained: Vec<String>,
    pub per_feature: Vec<FeatureDiagnostic>,
}

impl SelectionReport {
    /// `feature,p_bar,sigma,required_n,retained,degenerate`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "p_bar", "sigma", "required_n", "retained", "degenerate"])?;
        for d in &self.per_feature {
            w.write_record([
                d.feature.clone(),
                format_sig(d.p_bar),
                format_sig(d.sigma),
                format_sig(d.required_n),
                d.retained.to_string(),
                d.degenerate.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

fn feature_sigma(values: &[f64], source: SigmaSource) -> f64 {
    match source {
        SigmaSource::Original => sample_sd(values),
        SigmaSource::Pooled => {
            let (lo, hi) = min_max(values).unwrap_or((0.0, 0.0));
            let pooled: Vec<f64> = values.iter().copied().chain(values.iter().map(|v| (hi + lo) - v)).collect();
            sample_sd(&pooled)
        }
    }
}

/// Per-feature mirror-corrected mean, standard deviation and required
/// sample size, with `retained` set by the reliability criterion.
pub fn feature_diagnostics(matrix: &FeatureMatrix, params: &SelectionParams) -> Result<Vec<FeatureDiagnostic>> {
    params.validate()?;
    if matrix.scale != Scale::RelativeFrequency {
        return Err(Error::InvalidArgument(format!(
            "reliability selection needs relative frequencies, got {:?}",
            matrix.scale
        )));
    }
    Ok((0..matrix.n_features())
        .into_par_iter()
        .map(|j| {
            let values = matrix.column(j).to_vec();
            let p_bar = corrected_mean(&values);
            let sigma = feature_sigma(&values, params.sigma_source);
            let size = required_sample_size(p_bar, sigma, params);
            FeatureDiagnostic {
                feature: matrix.feature_names[j].clone(),
                p_bar,
                sigma,
                required_n: size.n,
                retained: !size.degenerate && size.n <= params.min_doc_len as f64,
                degenerate: size.degenerate,
            }
        })
        .collect())
}

/// Keeps the features whose required sample size fits in the shortest
/// document, dropping constant features.
pub fn select_reliable(matrix: &FeatureMatrix, params: &SelectionParams) -> Result<SelectionReport> {
    let per_feature = feature_diagnostics(matrix, params)?;
    let retained: Vec<String> = per_feature.iter().filter(|d| d.retained).map(|d| d.feature.clone()).collect();
    if retained.is_empty() {
        return Err(Error::SelectionEmpty);
    }
    Ok(SelectionReport { retained, per_feature })
}

/// Number of features kept by a top-`fraction` cutoff: `ceil(fraction * total)`.
pub fn top_fraction_count(total: usize, fraction: f64) -> usize {
    // Absorbs representation error such as 0.1 * 110 landing above 11.
    let raw = fraction * total as f64;
    let n = (raw - 1e-9 * raw.max(1.0)).ceil();
    (n.max(0.0) as usize).min(total)
}

/// Column indices (in matrix order) of the `ceil(fraction * n)` most
/// frequent features. Equal totals are ranked by feature name.
pub fn select_top_frequency(matrix: &FeatureMatrix, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let keep = top_fraction_count(matrix.n_features(), fraction);
    let totals = matrix.feature_totals();
    let mut order: Vec<usize> = (0..matrix.n_features()).collect();
    order.sort_by(|&a, &b| {
        totals[b].total_cmp(&totals[a]).then_with(|| matrix.feature_names[a].cmp(&matrix.feature_names[b]))
    });
    order.truncate(keep);
    order.sort_unstable();
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn mirror_examples() {
        let c = mirror_correct(&[0.1, 0.3, 0.5]);
        assert_eq!(c.len(), 3);
        // each value averaged with its own mirror
        for (v, m) in [0.1, 0.3, 0.5].iter().zip([0.5, 0.3, 0.1]) {
            assert!(((v + m) / 2.0 - 0.3_f64).abs() < 1e-15);
        }
        assert_eq!(corrected_mean(&[0.1, 0.3, 0.5]), 0.3);
        assert_eq!(corrected_mean(&[0.2, 0.2, 0.2]), 0.2);
        assert_eq!(corrected_mean(&[0.7]), 0.7);
    }

    #[test]
    fn sample_size_arithmetic() {
        let p = SelectionParams::new(1000);
        // 0.25 * (1.645 / 0.1)^2 = 0.25 * 270.6025
        let r = required_sample_size(0.5, 0.05, &p);
        assert!((r.n - 67.650625).abs() < 1e-9, "{}", r.n);
        assert!(!r.degenerate);
        assert_eq!(required_sample_size(0.0, 0.05, &p).n, 0.0);
        assert_eq!(required_sample_size(1.0, 0.05, &p).n, 0.0);
        assert!(required_sample_size(0.5, 1e6, &p).n < 1e-9);
        let d = required_sample_size(0.5, 0.0, &p);
        assert!(d.degenerate);
        assert_eq!(d.n, 0.0);
    }

    #[test]
    fn threshold_against_shortest_document() {
        let p = SelectionParams::new(7887);
        assert!(4000.0 <= p.min_doc_len as f64);
        assert!(20000.0 > p.min_doc_len as f64);
    }

    fn matrix(values: Vec<Vec<f64>>, names: &[&str]) -> FeatureMatrix {
        let rows = values.len();
        let cols = names.len();
        let flat: Vec<f64> = values.into_iter().flatten().collect();
        FeatureMatrix::new(
            (0..rows).map(|i| format!("d{i}")).collect(),
            names.iter().map(|s| s.to_string()).collect(),
            Array2::from_shape_vec((rows, cols), flat).unwrap(),
            Scale::RelativeFrequency,
        )
        .unwrap()
    }

    #[test]
    fn reliable_selection_flags() {
        // column a: noisy and frequent (small n), b: constant, c: tiny spread (huge n)
        let m = matrix(
            vec![vec![0.10, 0.01, 0.0500], vec![0.20, 0.01, 0.0501], vec![0.30, 0.01, 0.0502]],
            &["a", "b", "c"],
        );
        let r = select_reliable(&m, &SelectionParams::new(5000)).unwrap();
        assert_eq!(r.retained, vec!["a"]);
        assert!(r.per_feature[1].degenerate);
        assert!(!r.per_feature[2].retained && !r.per_feature[2].degenerate);
        assert!(r.per_feature[2].required_n > 5000.0);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("feature,p_bar,sigma,required_n,retained,degenerate\na,0.2,0.1,"));
        assert!(text.contains("\nb,0.01,0,0,false,true\n"));
    }

    #[test]
    fn reliable_selection_can_empty() {
        let m = matrix(vec![vec![0.5], vec![0.5]], &["a"]);
        assert!(matches!(select_reliable(&m, &SelectionParams::new(10)), Err(Error::SelectionEmpty)));
    }

    #[test]
    fn top_fraction_counts_round_up() {
        assert_eq!(top_fraction_count(7941, 0.01), 80);
        assert_eq!(top_fraction_count(110, 0.10), 11);
        assert_eq!(top_fraction_count(110, 0.01), 2);
        assert_eq!(top_fraction_count(110, 0.25), 28);
        assert_eq!(top_fraction_count(110, 1.0), 110);
        assert_eq!(top_fraction_count(108, 0.75), 81);
    }

    #[test]
    fn top_frequency_tie_break_and_order() {
        let m = matrix(vec![vec![0.1, 0.3, 0.3, 0.2]], &["w", "b", "a", "z"]);
        assert_eq!(select_top_frequency(&m, 0.25).unwrap(), vec![2]);
        assert_eq!(select_top_frequency(&m, 0.5).unwrap(), vec![1, 2]);
        assert_eq!(select_top_frequency(&m, 1.0).unwrap(), vec![0, 1, 2, 3]);
        assert!(select_top_frequency(&m, 0.0).is_err());
        assert!(select_top_frequency(&m, 1.5).is_err());
    }
}
