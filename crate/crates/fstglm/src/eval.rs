//! Evaluation: confusion counts and averaged metrics, seeded dataset
//! splits, hyperparameter grid search, and the repeated-split corpus
//! protocol (select on validation, refit on train+validation, report on
//! test).

use rayon::prelude::*;

use rand_chacha::rand_core::RngCore;

use crate::data::Dataset;
use crate::dist::{rng_for, streams, LinkFamily, LinkSpec};
use crate::em::fit::{fit, FitConfig, PriorSpec};
use crate::error::{Error, Result};
use crate::model::FittedModel;
use crate::scalar::Real;
use crate::text::{doc_term_set, featurize_sets, score_words, select_top_k, Corpus, Stoplist};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(preds: &[bool], labels: &[bool]) -> Result<Self> {
        if preds.len() != labels.len() {
            return Err(Error::Validation(format!(
                "{} predictions for {} labels",
                preds.len(),
                labels.len()
            )));
        }
        if preds.is_empty() {
            return Err(Error::Validation("no predictions to score".into()));
        }
        let mut c = ConfusionCounts::default();
        for (&p, &y) in preds.iter().zip(labels) {
            match (p, y) {
                (true, true) => c.true_pos += 1,
                (true, false) => c.false_pos += 1,
                (false, true) => c.false_neg += 1,
                (false, false) => c.true_neg += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn pool(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.false_neg += other.false_neg;
        self.true_neg += other.true_neg;
    }
}

pub fn misclassification_rate<T: Real>(preds: &[bool], labels: &[bool]) -> Result<T> {
    let c = ConfusionCounts::from_predictions(preds, labels)?;
    let wrong = c.false_pos + c.false_neg;
    Ok(T::of(wrong as f64) / T::of(c.total() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

fn ratio_or_zero<T: Real>(num: usize, den: usize) -> T {
    // Zero denominator scores zero rather than poisoning averages with NaN.
    if den == 0 {
        T::zero()
    } else {
        T::of(num as f64) / T::of(den as f64)
    }
}

pub fn precision_recall_f1<T: Real>(c: &ConfusionCounts) -> Prf<T> {
    let precision = ratio_or_zero(c.true_pos, c.true_pos + c.false_pos);
    let recall = ratio_or_zero(c.true_pos, c.true_pos + c.false_neg);
    let f1 = if precision + recall > T::zero() {
        T::of(2.0) * precision * recall / (precision + recall)
    } else {
        T::zero()
    };
    Prf { precision, recall, f1 }
}

/// Pool counts over categories, then compute the metrics once.
pub fn micro_average<T: Real>(counts: &[ConfusionCounts]) -> Result<Prf<T>> {
    if counts.is_empty() {
        return Err(Error::Validation("micro average of no categories".into()));
    }
    let mut pooled = ConfusionCounts::default();
    for c in counts {
        pooled.pool(c);
    }
    Ok(precision_recall_f1(&pooled))
}

/// Unweighted mean of per-category metrics.
pub fn macro_average<T: Real>(metrics: &[Prf<T>]) -> Result<Prf<T>> {
    if metrics.is_empty() {
        return Err(Error::Validation("macro average of no categories".into()));
    }
    let n = T::of(metrics.len() as f64);
    let mut sum = Prf {
        precision: T::zero(),
        recall: T::zero(),
        f1: T::zero(),
    };
    for m in metrics {
        sum.precision += m.precision;
        sum.recall += m.recall;
        sum.f1 += m.f1;
    }
    Ok(Prf {
        precision: sum.precision / n,
        recall: sum.recall / n,
        f1: sum.f1 / n,
    })
}

/// Shuffle 0..n and cut into train/validation/test index blocks. Sizes are
/// floor(n·fraction) for train and validation; the remainder goes to test.
pub fn split_indices(
    n: usize,
    seed: u64,
    fractions: (f64, f64, f64),
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let (ft, fv, fe) = fractions;
    if !(ft >= 0.0 && fv >= 0.0 && fe >= 0.0) || (ft + fv + fe - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "split fractions must be nonnegative and sum to 1, got ({ft}, {fv}, {fe})"
        )));
    }
    if n < 4 {
        return Err(Error::Validation(format!(
            "need at least 4 observations to split, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_for(seed, streams::SPLIT);
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    let n_train = (ft * n as f64).floor() as usize;
    let n_val = (fv * n as f64).floor() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(Error::Validation(format!(
            "split ({n_train}, {n_val}, {}) leaves an empty part",
            n - n_train - n_val
        )));
    }
    let test = order.split_off(n_train + n_val);
    let validation = order.split_off(n_train);
    Ok((order, validation, test))
}

pub fn split_dataset<T: Real>(
    data: &Dataset<T>,
    seed: u64,
    fractions: (f64, f64, f64),
) -> Result<(Dataset<T>, Dataset<T>, Dataset<T>)> {
    let (tr, va, te) = split_indices(data.n(), seed, fractions)?;
    Ok((data.subset(&tr)?, data.subset(&va)?, data.subset(&te)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    pub nu_values: Vec<T>,
    pub gamma_values: Vec<T>,
    pub delta_values: Vec<T>,
}

impl<T: Real> GridSpec<T> {
    /// Wide grid for the tabular simulation studies.
    pub fn simulation_default() -> Self {
        let of = |xs: &[f64]| xs.iter().map(|&x| T::of(x)).collect();
        GridSpec {
            nu_values: of(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 15.0, 30.0, 50.0, 100.0]),
            gamma_values: of(&[
                0.01, 0.1, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 20.0, 50.0, 100.0,
            ]),
            delta_values: of(&[0.01, 0.1, 0.5, 0.7, 1.0, 1.2, 1.5, 2.0, 3.0, 4.0, 5.0, 10.0]),
        }
    }

    /// Compact grid for per-category text classifiers.
    pub fn corpus_default() -> Self {
        let of = |xs: &[f64]| xs.iter().map(|&x| T::of(x)).collect();
        GridSpec {
            nu_values: of(&[1.0, 2.0, 5.0, 8.0, 30.0]),
            gamma_values: of(&[0.01, 0.05, 0.1, 1.0, 2.0]),
            delta_values: of(&[0.1, 0.5, 1.0, 1.5, 2.0]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, vals) in [
            ("nu", &self.nu_values),
            ("gamma", &self.gamma_values),
            ("delta", &self.delta_values),
        ] {
            if vals.is_empty() {
                return Err(Error::Validation(format!("empty {name} grid")));
            }
            if vals.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "{name} grid values must be positive and finite"
                )));
            }
        }
        Ok(())
    }

    /// All (nu, delta, gamma) triples ordered by (nu, delta, gamma). A
    /// symmetric family collapses the delta dimension to {1}.
    pub fn configs(&self, family: LinkFamily) -> Vec<(T, T, T)> {
        let deltas: Vec<T> = match family {
            LinkFamily::Symmetric => vec![T::one()],
            LinkFamily::Skew => {
                let mut d = self.delta_values.clone();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                d
            }
        };
        let mut nus = self.nu_values.clone();
        nus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut gammas = self.gamma_values.clone();
        gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut out = Vec::with_capacity(nus.len() * deltas.len() * gammas.len());
        for &nu in &nus {
            for &delta in &deltas {
                for &gamma in &gammas {
                    out.push((nu, delta, gamma));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Maximize F1 on the validation part.
    F1,
    /// Minimize the misclassification rate on the validation part.
    Misclassification,
}

impl Objective {
    fn strictly_better<T: Real>(self, a: T, b: T) -> bool {
        match self {
            Objective::F1 => a > b,
            Objective::Misclassification => a < b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow<T> {
    pub nu: T,
    pub delta: T,
    pub gamma: T,
    pub objective_value: Option<T>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome<T> {
    /// One row per configuration, ordered by (nu, delta, gamma).
    pub rows: Vec<GridRow<T>>,
    pub best_link: LinkSpec<T>,
    pub best_gamma: T,
    pub best_value: T,
}

fn eval_config<T: Real>(
    train: &Dataset<T>,
    validation: &Dataset<T>,
    nu: T,
    delta: T,
    gamma: T,
    objective: Objective,
    config: &FitConfig<T>,
) -> Result<(T, bool)> {
    let link = LinkSpec::skew(nu, delta)?;
    let prior = PriorSpec::new(gamma)?;
    let (model, _) = fit(train, link, prior, config)?;
    let preds = model.classify_rows(validation.design())?;
    let value = match objective {
        Objective::F1 => {
            let c = ConfusionCounts::from_predictions(&preds, validation.labels())?;
            precision_recall_f1(&c).f1
        }
        Objective::Misclassification => misclassification_rate(&preds, validation.labels())?,
    };
    Ok((value, model.converged))
}

/// Fit every grid configuration on `train`, score it on `validation`, and
/// pick the best; ties go to the lexicographically smallest
/// (nu, delta, gamma). Individual fit failures are recorded in their row
/// rather than aborting the search.
pub fn grid_search<T: Real>(
    train: &Dataset<T>,
    validation: &Dataset<T>,
    family: LinkFamily,
    grid: &GridSpec<T>,
    objective: Objective,
    config: &FitConfig<T>,
) -> Result<GridOutcome<T>> {
    grid.validate()?;
    if train.feature_names() != validation.feature_names() {
        return Err(Error::Validation(
            "train and validation feature names differ".into(),
        ));
    }
    let configs = grid.configs(family);
    let rows: Vec<GridRow<T>> = configs
        .into_par_iter()
        .map(|(nu, delta, gamma)| {
            match eval_config(train, validation, nu, delta, gamma, objective, config) {
                Ok((value, converged)) => GridRow {
                    nu,
                    delta,
                    gamma,
                    objective_value: Some(value),
                    converged: Some(converged),
                    error: None,
                },
                Err(e) => GridRow {
                    nu,
                    delta,
                    gamma,
                    objective_value: None,
                    converged: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut best: Option<&GridRow<T>> = None;
    for row in &rows {
        if let Some(v) = row.objective_value {
            let better = match best.and_then(|b| b.objective_value) {
                None => true,
                Some(bv) => objective.strictly_better(v, bv),
            };
            if better {
                best = Some(row);
            }
        }
    }
    let best = best.ok_or_else(|| {
        let first_err = rows
            .iter()
            .find_map(|r| r.error.clone())
            .unwrap_or_default();
        Error::Numerical(format!(
            "every grid configuration failed; first error: {first_err}"
        ))
    })?;
    Ok(GridOutcome {
        best_link: LinkSpec::skew(best.nu, best.delta)?,
        best_gamma: best.gamma,
        best_value: best.objective_value.unwrap(),
        rows,
    })
}

/// CSV for grid rows: `nu,gamma,delta,objective_value,converged`, one row
/// per configuration; failed fits leave the last two fields empty.
pub fn grid_rows_to_csv<T: Real>(rows: &[GridRow<T>]) -> String {
    let mut out = String::from("nu,gamma,delta,objective_value,converged\n");
    for r in rows {
        let value = r.objective_value.map(|v| format!("{v}")).unwrap_or_default();
        let conv = r.converged.map(|c| c.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", r.nu, r.gamma, r.delta, value, conv));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport<T> {
    pub counts: ConfusionCounts,
    pub metrics: Prf<T>,
    pub misclassification: T,
}

/// Refit on the pooled train+validation data and score the test part.
pub fn refit_and_test<T: Real>(
    train_val: &Dataset<T>,
    test: &Dataset<T>,
    link: LinkSpec<T>,
    gamma: T,
    config: &FitConfig<T>,
) -> Result<(FittedModel<T>, TestReport<T>)> {
    if train_val.feature_names() != test.feature_names() {
        return Err(Error::Validation("train and test feature names differ".into()));
    }
    let (model, _) = fit(train_val, link, PriorSpec::new(gamma)?, config)?;
    let preds = model.classify_rows(test.design())?;
    let counts = ConfusionCounts::from_predictions(&preds, test.labels())?;
    Ok((
        model,
        TestReport {
            counts,
            metrics: precision_recall_f1(&counts),
            misclassification: misclassification_rate(&preds, test.labels())?,
        },
    ))
}

pub fn test_report_csv<T: Real>(r: &TestReport<T>) -> String {
    format!(
        "misclassification,precision,recall,f1\n{},{},{},{}\n",
        r.misclassification, r.metrics.precision, r.metrics.recall, r.metrics.f1
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusProtocolConfig<T> {
    pub grid: GridSpec<T>,
    pub family: LinkFamily,
    pub objective: Objective,
    /// Vocabulary size per category.
    pub top_k: usize,
    pub fit: FitConfig<T>,
}

impl<T: Real> Default for CorpusProtocolConfig<T> {
    fn default() -> Self {
        CorpusProtocolConfig {
            grid: GridSpec::corpus_default(),
            family: LinkFamily::Skew,
            objective: Objective::F1,
            top_k: 100,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryResult<T> {
    pub category: String,
    pub nu: T,
    pub delta: T,
    pub gamma: T,
    pub validation_value: T,
    pub counts: ConfusionCounts,
    pub metrics: Prf<T>,
    /// True when fewer candidate words existed than requested.
    pub vocab_short: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun<T> {
    pub per_category: Vec<CategoryResult<T>>,
    pub micro: Prf<T>,
    pub macro_avg: Prf<T>,
}

/// One-vs-rest text protocol on a single split: per category, score words
/// on the training part only, keep the top-k vocabulary, pick
/// hyperparameters on validation, refit on train+validation, and report
/// test metrics.
pub fn corpus_protocol_run<T: Real>(
    corpus: &Corpus,
    stoplist: &Stoplist,
    cfg: &CorpusProtocolConfig<T>,
    seed: u64,
) -> Result<ProtocolRun<T>> {
    cfg.grid.validate()?;
    if cfg.top_k == 0 {
        return Err(Error::Validation("vocabulary size must be at least 1".into()));
    }
    let term_sets: Vec<_> = corpus
        .documents
        .iter()
        .map(|d| doc_term_set(&d.text, stoplist))
        .collect();
    let (tr_idx, va_idx, te_idx) = split_indices(corpus.len(), seed, (0.5, 0.25, 0.25))?;
    let mut per_category = Vec::with_capacity(corpus.categories.len());
    for category in &corpus.categories {
        let labels = corpus.labels_for(category);
        let train_sets: Vec<_> = tr_idx.iter().map(|&i| term_sets[i].clone()).collect();
        let train_labels: Vec<bool> = tr_idx.iter().map(|&i| labels[i]).collect();
        let scores = score_words::<T>(&train_sets, &train_labels)?;
        if scores.is_empty() {
            return Err(Error::Validation(format!(
                "no candidate words for category {category:?}"
            )));
        }
        let vocab = select_top_k(&scores, cfg.top_k)?;
        let names = vocab.words();
        let part = |idx: &[usize]| -> Result<Dataset<T>> {
            let sets: Vec<_> = idx.iter().map(|&i| term_sets[i].clone()).collect();
            let design = featurize_sets(&sets, &vocab);
            let part_labels: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
            Dataset::new(design, part_labels, names.clone())
        };
        let train = part(&tr_idx)?;
        let validation = part(&va_idx)?;
        let test = part(&te_idx)?;
        let outcome = grid_search(
            &train,
            &validation,
            cfg.family,
            &cfg.grid,
            cfg.objective,
            &cfg.fit,
        )?;
        let pooled = train.concat(&validation)?;
        let (_, report) = refit_and_test(
            &pooled,
            &test,
            outcome.best_link,
            outcome.best_gamma,
            &cfg.fit,
        )?;
        per_category.push(CategoryResult {
            category: category.clone(),
            nu: outcome.best_link.nu,
            delta: outcome.best_link.delta,
            gamma: outcome.best_gamma,
            validation_value: outcome.best_value,
            counts: report.counts,
            metrics: report.metrics,
            vocab_short: vocab.is_short(),
        });
    }
    let counts: Vec<ConfusionCounts> = per_category.iter().map(|c| c.counts).collect();
    let metrics: Vec<Prf<T>> = per_category.iter().map(|c| c.metrics).collect();
    Ok(ProtocolRun {
        micro: micro_average(&counts)?,
        macro_avg: macro_average(&metrics)?,
        per_category,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedProtocol<T> {
    pub runs: Vec<ProtocolRun<T>>,
    pub mean_micro: Prf<T>,
    pub sd_micro: Prf<T>,
    pub mean_macro: Prf<T>,
    pub sd_macro: Prf<T>,
}

fn mean_sd<T: Real>(xs: &[T]) -> (T, T) {
    let n = T::of(xs.len() as f64);
    let mean = xs.iter().fold(T::zero(), |a, &b| a + b) / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let ss = xs
        .iter()
        .fold(T::zero(), |a, &b| a + (b - mean) * (b - mean));
    (mean, (ss / (n - T::one())).sqrt())
}

fn prf_mean_sd<T: Real>(xs: &[Prf<T>]) -> (Prf<T>, Prf<T>) {
    let (mp, sp) = mean_sd(&xs.iter().map(|m| m.precision).collect::<Vec<_>>());
    let (mr, sr) = mean_sd(&xs.iter().map(|m| m.recall).collect::<Vec<_>>());
    let (mf, sf) = mean_sd(&xs.iter().map(|m| m.f1).collect::<Vec<_>>());
    (
        Prf { precision: mp, recall: mr, f1: mf },
        Prf { precision: sp, recall: sr, f1: sf },
    )
}

/// Run the protocol on `n_splits` different seeded splits (seed, seed+1, ...)
/// and summarize with the mean and sample standard deviation.
pub fn corpus_protocol<T: Real>(
    corpus: &Corpus,
    stoplist: &Stoplist,
    cfg: &CorpusProtocolConfig<T>,
    seed: u64,
    n_splits: usize,
) -> Result<RepeatedProtocol<T>> {
    if n_splits == 0 {
        return Err(Error::Validation("need at least one split".into()));
    }
    let mut runs = Vec::with_capacity(n_splits);
    for s in 0..n_splits {
        runs.push(corpus_protocol_run(
            corpus,
            stoplist,
            cfg,
            seed.wrapping_add(s as u64),
        )?);
    }
    let micros: Vec<Prf<T>> = runs.iter().map(|r| r.micro).collect();
    let macros: Vec<Prf<T>> = runs.iter().map(|r| r.macro_avg).collect();
    let (mean_micro, sd_micro) = prf_mean_sd(&micros);
    let (mean_macro, sd_macro) = prf_mean_sd(&macros);
    Ok(RepeatedProtocol {
        runs,
        mean_micro,
        sd_micro,
        mean_macro,
        sd_macro,
    })
}

/// CSV with one row per split plus `mean` and `sd` rows.
pub fn protocol_report_csv<T: Real>(rep: &RepeatedProtocol<T>) -> String {
    let mut out = String::from(
        "split,micro_precision,micro_recall,micro_f1,macro_precision,macro_recall,macro_f1\n",
    );
    let mut push = |tag: &str, micro: &Prf<T>, mac: &Prf<T>| {
        out.push_str(&format!(
            "{tag},{},{},{},{},{},{}\n",
            micro.precision, micro.recall, micro.f1, mac.precision, mac.recall, mac.f1
        ));
    };
    for (i, run) in rep.runs.iter().enumerate() {
        push(&(i + 1).to_string(), &run.micro, &run.macro_avg);
    }
    push("mean", &rep.mean_micro, &rep.mean_macro);
    push("sd", &rep.sd_micro, &rep.sd_macro);
    out
}

/// CSV of the per-category winners of the last run: chosen hyperparameters
/// and test metrics.
pub fn category_table_csv<T: Real>(run: &ProtocolRun<T>) -> String {
    let mut out = String::from("category,nu,delta,gamma,validation_objective,test_f1\n");
    for c in &run.per_category {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.category, c.nu, c.delta, c.gamma, c.validation_value, c.metrics.f1
        ));
    }
    out
}
