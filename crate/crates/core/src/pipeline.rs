//! Training and evaluation on a dataset of instance records.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_split, InstanceRecord, Split, SplitSpec};
use crate::error::{Error, Result};
use crate::features::{feature_vector_with, FeatureOptions, SymmetryFeatures};
use crate::graph::Graph;
use crate::ml::{
    cross_validate_ordinal, cross_validate_regressor, median_abs_err, pearson_r, train_ordinal,
    train_regressor, Hyper, Predictor, Standardizer, DEFAULT_CUTOFFS,
};

/// Minimum number of uncensored records needed to train.
pub const MIN_TRAIN_RECORDS: usize = 30;

/// Reference sign of the correlation between each feature and p_min:
/// symmetry measures go down with depth, size and orbit counts go up.
pub const EXPECTED_SIGNS: [i8; 10] = [-1, -1, -1, 1, 1, 1, 1, -1, -1, -1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub split: SplitSpec,
    pub cutoffs: Vec<u32>,
    pub cv_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            split: SplitSpec::default(),
            cutoffs: DEFAULT_CUTOFFS.collect(),
            cv_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCorrelation {
    pub feature: String,
    /// `None` if the feature is constant over the dataset.
    pub r: Option<f64>,
    pub expected_sign: i8,
    pub sign_matches: bool,
}

/// Pearson r of every feature against p_min over uncensored records.
pub fn feature_correlations(records: &[InstanceRecord]) -> Result<Vec<FeatureCorrelation>> {
    let used: Vec<&InstanceRecord> = records.iter().filter(|r| !r.censored()).collect();
    let y: Vec<f64> = used.iter().map(|r| r.p_min.unwrap() as f64).collect();
    SymmetryFeatures::NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let x: Vec<f64> = used.iter().map(|r| r.features.to_array()[j]).collect();
            let r = match pearson_r(&x, &y) {
                Ok(r) => Some(r),
                Err(Error::ConstantInput) => None,
                Err(e) => return Err(e),
            };
            let expected_sign = EXPECTED_SIGNS[j];
            Ok(FeatureCorrelation {
                feature: name.to_string(),
                r,
                expected_sign,
                sign_matches: r.is_some_and(|r| r.signum() as i8 == expected_sign),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScores {
    pub hyper: Hyper,
    pub cv_median_abs_err: f64,
    pub train_median_abs_err: f64,
    pub test_median_abs_err: f64,
    /// Predicted vs true on the test split.
    pub test_pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub id: String,
    pub family: String,
    pub test: bool,
    pub p_min: Option<usize>,
    pub regression: f64,
    pub ordinal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub records: usize,
    pub censored: usize,
    pub train: usize,
    pub test: usize,
    pub correlations: Vec<FeatureCorrelation>,
    pub regression: ModelScores,
    pub ordinal: ModelScores,
    pub cutoffs: Vec<u32>,
    pub dropped_cutoffs: Vec<u32>,
    pub scatter: Vec<ScatterRow>,
}

impl TrainReport {
    pub fn sign_agreement(&self) -> usize {
        self.correlations.iter().filter(|c| c.sign_matches).count()
    }

    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("id,family,split,p_min,regression,ordinal\n");
        for r in &self.scatter {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.id,
                r.family,
                if r.test { "test" } else { "train" },
                r.p_min.map_or(String::new(), |p| p.to_string()),
                r.regression,
                r.ordinal
            )
            .unwrap();
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# Training report\n").unwrap();
        writeln!(
            out,
            "{} records ({} censored), {} train / {} test.\n",
            self.records, self.censored, self.train, self.test
        )
        .unwrap();
        out.push_str(&correlation_table(&self.correlations));
        writeln!(out).unwrap();
        writeln!(
            out,
            "| model | γ | λ | CV MAE | train MAE | test MAE | test r |"
        )
        .unwrap();
        writeln!(out, "|---|---|---|---|---|---|---|").unwrap();
        for (name, s) in [
            ("kernel ridge", &self.regression),
            ("ordinal ensemble", &self.ordinal),
        ] {
            writeln!(
                out,
                "| {name} | {} | {} | {:.3} | {:.3} | {:.3} | {} |",
                s.hyper.gamma,
                s.hyper.lambda,
                s.cv_median_abs_err,
                s.train_median_abs_err,
                s.test_median_abs_err,
                s.test_pearson.map_or("n/a".into(), |r| format!("{r:.3}"))
            )
            .unwrap();
        }
        if !self.dropped_cutoffs.is_empty() {
            writeln!(out, "\nDropped cutoffs: {:?}", self.dropped_cutoffs).unwrap();
        }
        out
    }
}

pub fn correlation_table(rows: &[FeatureCorrelation]) -> String {
    let mut out = String::from("| feature | r | expected sign | match |\n|---|---|---|---|\n");
    for c in rows {
        writeln!(
            out,
            "| {} | {} | {} | {} |",
            c.feature,
            c.r.map_or("n/a".into(), |r| format!("{r:+.3}")),
            if c.expected_sign > 0 { "+" } else { "-" },
            if c.sign_matches { "yes" } else { "no" }
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub predictor: Predictor,
    pub split: Split,
    pub report: TrainReport,
}

/// Label used by the ordinal ensemble: censored records sit above the cap.
fn ordinal_label(r: &InstanceRecord) -> f64 {
    r.p_min.unwrap_or(r.p_cap + 1) as f64
}

fn scores_for(
    pred: impl Fn(&InstanceRecord) -> Result<f64>,
    records: &[InstanceRecord],
    idx: &[usize],
) -> Result<(f64, Option<f64>)> {
    let used: Vec<&InstanceRecord> = idx
        .iter()
        .map(|&i| &records[i])
        .filter(|r| !r.censored())
        .collect();
    if used.is_empty() {
        return Ok((f64::NAN, None));
    }
    let p: Vec<f64> = used.iter().map(|r| pred(r)).collect::<Result<_>>()?;
    let t: Vec<f64> = used.iter().map(|r| r.p_min.unwrap() as f64).collect();
    Ok((median_abs_err(&p, &t)?, pearson_r(&p, &t).ok()))
}

/// Splits, cross-validates both models on the training side, refits them on
/// the whole training side and scores them on the test side.
pub fn train(records: &[InstanceRecord], cfg: &TrainConfig) -> Result<TrainOutcome> {
    let uncensored = records.iter().filter(|r| !r.censored()).count();
    if uncensored < MIN_TRAIN_RECORDS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_TRAIN_RECORDS} uncensored records, have {uncensored}"
        )));
    }
    let keys: Vec<String> = records.iter().map(|r| r.family.clone()).collect();
    let split = stratified_split(&keys, &cfg.split)?;
    let rows = |idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter()
            .map(|&i| records[i].features.to_array().to_vec())
            .collect()
    };

    let standardizer = Standardizer::fit(&rows(&split.train))?;
    let z_train = standardizer.apply(&rows(&split.train))?;
    let groups: Vec<String> = split.train.iter().map(|&i| keys[i].clone()).collect();

    // Regressor: uncensored training rows only.
    let reg_rows: Vec<usize> = (0..split.train.len())
        .filter(|&j| !records[split.train[j]].censored())
        .collect();
    let z_reg: Vec<Vec<f64>> = reg_rows.iter().map(|&j| z_train[j].clone()).collect();
    let y_reg: Vec<f64> = reg_rows
        .iter()
        .map(|&j| records[split.train[j]].p_min.unwrap() as f64)
        .collect();
    let g_reg: Vec<String> = reg_rows.iter().map(|&j| groups[j].clone()).collect();
    let reg_cv = cross_validate_regressor(&z_reg, &y_reg, &g_reg, cfg.cv_seed)?;
    let regressor = train_regressor(&z_reg, &y_reg, reg_cv.best)?;

    let y_ord: Vec<f64> = split
        .train
        .iter()
        .map(|&i| ordinal_label(&records[i]))
        .collect();
    let ord_cv = cross_validate_ordinal(&z_train, &y_ord, &groups, &cfg.cutoffs, cfg.cv_seed)?;
    let (ensemble, dropped_cutoffs) = train_ordinal(&z_train, &y_ord, &cfg.cutoffs, ord_cv.best)?;

    let predictor = Predictor {
        standardizer,
        regressor,
        ensemble,
    };
    let reg = |r: &InstanceRecord| predictor.predict_regression(&r.features.to_array());
    let ord = |r: &InstanceRecord| predictor.predict_ordinal(&r.features.to_array());
    let (reg_train, _) = scores_for(reg, records, &split.train)?;
    let (reg_test, reg_r) = scores_for(reg, records, &split.test)?;
    let (ord_train, _) = scores_for(ord, records, &split.train)?;
    let (ord_test, ord_r) = scores_for(ord, records, &split.test)?;

    let mut scatter = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        scatter.push(ScatterRow {
            id: r.id.clone(),
            family: r.family.clone(),
            test: split.test.binary_search(&i).is_ok(),
            p_min: r.p_min,
            regression: reg(r)?,
            ordinal: ord(r)?,
        });
    }
    let report = TrainReport {
        records: records.len(),
        censored: records.len() - uncensored,
        train: split.train.len(),
        test: split.test.len(),
        correlations: feature_correlations(records)?,
        regression: ModelScores {
            hyper: reg_cv.best,
            cv_median_abs_err: reg_cv.best_score,
            train_median_abs_err: reg_train,
            test_median_abs_err: reg_test,
            test_pearson: reg_r,
        },
        ordinal: ModelScores {
            hyper: ord_cv.best,
            cv_median_abs_err: ord_cv.best_score,
            train_median_abs_err: ord_train,
            test_median_abs_err: ord_test,
            test_pearson: ord_r,
        },
        cutoffs: predictor.ensemble.cutoffs.clone(),
        dropped_cutoffs,
        scatter,
    };
    Ok(TrainOutcome {
        predictor,
        split,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub features: SymmetryFeatures,
    pub regression: f64,
    pub ordinal: f64,
}

pub fn predict_graph(
    predictor: &Predictor,
    g: &Graph,
    opts: &FeatureOptions,
) -> Result<Prediction> {
    let (features, _) = feature_vector_with(g, opts)?;
    let x = features.to_array();
    Ok(Prediction {
        features,
        regression: predictor.predict_regression(&x)?,
        ordinal: predictor.predict_ordinal(&x)?,
    })
}
