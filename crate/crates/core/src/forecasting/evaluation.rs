//! Stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{score_predictions, Metrics};
use super::model::ClassifierModel;
use super::ForecastError;
use crate::exec::Exec;
use crate::types::LabeledSet;

/// Test-set indices for each fold. Each class is shuffled and dealt
/// round-robin, so every fold holds each class's share within one sample.
pub fn stratified_folds(
    labels: &[usize],
    n_classes: usize,
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, ForecastError> {
    if folds < 2 {
        return Err(ForecastError::InvalidConfig("need at least 2 folds".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    if by_class.iter().any(|c| !c.is_empty() && c.len() < folds) {
        return Err(ForecastError::CannotStratify { folds });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            out[j % folds].push(i);
        }
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

/// Cross-validates `trainer` and averages fold metrics.
pub fn evaluate<F>(
    trainer: F,
    data: &LabeledSet,
    folds: usize,
    seed: u64,
) -> Result<Metrics, ForecastError>
where
    F: Fn(&LabeledSet) -> Result<ClassifierModel, ForecastError> + Sync + Send,
{
    evaluate_with(Exec::default(), trainer, data, folds, seed)
}

pub fn evaluate_with<F>(
    exec: Exec,
    trainer: F,
    data: &LabeledSet,
    folds: usize,
    seed: u64,
) -> Result<Metrics, ForecastError>
where
    F: Fn(&LabeledSet) -> Result<ClassifierModel, ForecastError> + Sync + Send,
{
    let test_sets = stratified_folds(&data.labels, data.n_classes(), folds, seed)?;
    let per_fold = exec.map(&test_sets, |test| -> Result<Metrics, ForecastError> {
        let mut in_test = vec![false; data.len()];
        test.iter().for_each(|&i| in_test[i] = true);
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| !in_test[i]).collect();
        let model = trainer(&data.subset(&train_idx))?;
        let test_set = data.subset(test);
        let probs: Vec<Vec<f64>> = test_set
            .features
            .iter()
            .map(|x| model.scores(x))
            .collect::<Result<_, _>>()?;
        Ok(score_predictions(
            &probs,
            &test_set.labels,
            data.n_classes(),
        ))
    });
    let per_fold: Vec<Metrics> = per_fold.into_iter().collect::<Result<_, _>>()?;
    Ok(Metrics::mean(&per_fold))
}
