//! Desk-scale experiments on synthetic data: the logo inspection dataset,
//! active-learning label efficiency, batch against streaming classifiers,
//! calibration, minority oversampling, stream balancing and the IMU
//! activity corpus. The CLI and the acceptance suite both drive these.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::active_learning::{
    select_pool, ActiveLearningError, PoolContext, StrategyName, StrategyParams,
};
use crate::exec::Exec;
use crate::forecasting::metrics::class_prf;
use crate::forecasting::{
    auc_pair_count, brier_score, calibrate, train_batch, train_streaming, BatchConfig,
    ClassifierModel, ForecastError, MlpConfig, StreamingConfig,
};
use crate::intention::{imu_corpus, ActivityClassifier, IntentionError};
use crate::simulation::{
    augmented, image_features, oversample_minority, render_logo, BalancerConfig, Defect,
    LogoSceneParams, SimulationError, StreamBalancer, StreamItem,
};
use crate::types::{argmax, GrayImage, LabeledSet, Provenance};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    ActiveLearning(#[from] ActiveLearningError),
    #[error(transparent)]
    Intention(#[from] IntentionError),
}

/// Binary class names of the inspection task.
pub const INSPECTION_CLASSES: [&str; 2] = ["good", "defect"];

/// Scene settings for the inspection dataset: noisy, slightly misplaced
/// prints with faint double prints and short interruptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogoDatasetConfig {
    pub n: usize,
    pub defect_rate: f64,
    pub width: usize,
    pub height: usize,
    pub noise: f64,
    pub jitter_px: f64,
    pub offset_px: f64,
    pub ghost_intensity: f64,
    pub gap_fraction: f64,
}

impl Default for LogoDatasetConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            defect_rate: 0.05,
            width: 32,
            height: 32,
            noise: 0.1,
            jitter_px: 1.0,
            offset_px: 1.0,
            ghost_intensity: 0.35,
            gap_fraction: 0.06,
        }
    }
}

/// Rendered dataset: features per image, binary labels and the defect type
/// of each row.
#[derive(Debug, Clone)]
pub struct LogoDataset {
    pub data: LabeledSet,
    pub defects: Vec<Defect>,
}

/// Renders `n` images with exactly `round(n * defect_rate)` defects, split
/// evenly between double and interrupted prints, in seeded random order.
pub fn logo_images(
    config: &LogoDatasetConfig,
    seed: u64,
    exec: Exec,
) -> Result<Vec<(Defect, GrayImage)>, ExperimentError> {
    let n_defect = (config.n as f64 * config.defect_rate).round() as usize;
    let mut defects: Vec<Defect> = (0..config.n)
        .map(|i| match i {
            i if i < n_defect && i % 2 == 0 => Defect::DoublePrint,
            i if i < n_defect => Defect::InterruptedPrint,
            _ => Defect::Good,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    defects.shuffle(&mut rng);
    let seeds: Vec<u64> = (0..config.n).map(|_| rng.random()).collect();
    let jobs: Vec<(Defect, u64)> = defects.iter().copied().zip(seeds).collect();
    let images: Vec<Result<(Defect, GrayImage), SimulationError>> =
        exec.map(&jobs, |&(defect, s)| {
            let params = LogoSceneParams {
                width: config.width,
                height: config.height,
                noise: config.noise,
                jitter_px: config.jitter_px,
                offset_px: config.offset_px,
                ghost_intensity: config.ghost_intensity,
                gap_fraction: config.gap_fraction,
                defect,
                seed: s,
                ..LogoSceneParams::default()
            };
            render_logo(&params).map(|img| (defect, img))
        });
    Ok(images.into_iter().collect::<Result<_, _>>()?)
}

/// The images of [`logo_images`] as features with binary labels.
pub fn logo_dataset(
    config: &LogoDatasetConfig,
    seed: u64,
    exec: Exec,
) -> Result<LogoDataset, ExperimentError> {
    let images = logo_images(config, seed, exec)?;
    let features: Vec<Vec<f64>> = exec.map(&images, |(_, img)| image_features(img));
    let defects: Vec<Defect> = images.iter().map(|(d, _)| *d).collect();
    let labels = defects.iter().map(|d| d.is_defect() as usize).collect();
    let data = LabeledSet::new(
        features,
        labels,
        INSPECTION_CLASSES.map(String::from).to_vec(),
    )
    .map_err(|e| ExperimentError::Setup(e.to_string()))?;
    Ok(LogoDataset { data, defects })
}

/// Stratified split: each class contributes `round(test_fraction * count)`
/// rows to the test side.
pub fn stratified_split(
    data: &LabeledSet,
    test_fraction: f64,
    seed: u64,
) -> (LabeledSet, LabeledSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..data.n_classes() {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == c).collect();
        members.shuffle(&mut rng);
        let k = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (data.subset(&train), data.subset(&test))
}

/// Positive-class AUC of a model on a labeled set.
pub fn model_auc(model: &ClassifierModel, test: &LabeledSet) -> Result<f64, ExperimentError> {
    let probs = predict_all(model, test)?;
    let scores: Vec<f64> = probs.iter().map(|p| p[1]).collect();
    let positive: Vec<bool> = test.labels.iter().map(|&y| y == 1).collect();
    auc_pair_count(&scores, &positive)
        .ok_or_else(|| ExperimentError::Setup("test set lacks a class".into()))
}

fn predict_all(
    model: &ClassifierModel,
    data: &LabeledSet,
) -> Result<Vec<Vec<f64>>, ExperimentError> {
    Ok(data
        .features
        .iter()
        .map(|x| model.scores(x))
        .collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlConfig {
    pub dataset: LogoDatasetConfig,
    pub test_fraction: f64,
    /// Labeled seed set size.
    pub initial: usize,
    /// Defects guaranteed to be in the seed set.
    pub initial_defects: usize,
    pub batch: usize,
    /// Fraction of the full-data AUC to reach.
    pub target_fraction: f64,
    pub mlp: MlpConfig,
}

impl Default for AlConfig {
    fn default() -> Self {
        Self {
            dataset: LogoDatasetConfig::default(),
            test_fraction: 0.3,
            initial: 20,
            initial_defects: 4,
            batch: 10,
            target_fraction: 0.95,
            mlp: MlpConfig {
                hidden: 16,
                learning_rate: 0.05,
                l2: 1e-3,
                max_epochs: 120,
                plateau_patience: 15,
                plateau_tol: 1e-4,
                ..MlpConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlCurve {
    pub strategy: String,
    /// `(labels used, test AUC)` after each retraining.
    pub points: Vec<(usize, f64)>,
    /// First label count whose AUC reached the target.
    pub labels_to_target: Option<usize>,
}

fn batch_config(mlp: &MlpConfig, seed: u64) -> BatchConfig {
    BatchConfig {
        mlp: MlpConfig {
            seed,
            ..mlp.clone()
        },
        ..BatchConfig::default()
    }
}

/// Seed set: `defects` random defects plus random rows up to `initial`.
fn initial_labeled(
    train: &LabeledSet,
    initial: usize,
    n_defects: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut defects: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == 1).collect();
    let mut goods: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == 0).collect();
    defects.shuffle(rng);
    goods.shuffle(rng);
    let n_defects = n_defects.clamp(1, defects.len());
    let mut picked = defects[..n_defects].to_vec();
    let mut rest: Vec<usize> = defects[n_defects..].iter().chain(&goods).copied().collect();
    rest.shuffle(rng);
    picked.extend(rest.into_iter().take(initial.saturating_sub(n_defects)));
    picked
}

/// When an active-learning run ends, besides running out of pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlStop {
    /// Stop once the test AUC reaches this value.
    pub target_auc: Option<f64>,
    /// Stop once this many labels are used.
    pub budget: Option<usize>,
}

/// Pool-based active learning on `train`, retraining the batch net after
/// every labeled batch and scoring on `test`.
pub fn run_active_learning(
    train: &LabeledSet,
    test: &LabeledSet,
    strategy: StrategyName,
    config: &AlConfig,
    stop: AlStop,
    seed: u64,
    exec: Exec,
) -> Result<AlCurve, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labeled = initial_labeled(train, config.initial, config.initial_defects, &mut rng);
    let mut unlabeled: Vec<usize> = (0..train.len()).filter(|i| !labeled.contains(i)).collect();
    let params = StrategyParams::named(strategy);
    let mut points = Vec::new();
    let mut round = 0u64;
    loop {
        let set = train.subset(&labeled);
        let model = train_batch(&set, &batch_config(&config.mlp, seed.wrapping_add(round)))?;
        let auc = model_auc(&model, test)?;
        points.push((labeled.len(), auc));
        if stop.target_auc.is_some_and(|t| auc >= t) {
            return Ok(AlCurve {
                strategy: strategy.as_str().into(),
                points,
                labels_to_target: Some(labeled.len()),
            });
        }
        let budget_left = stop
            .budget
            .map_or(usize::MAX, |b| b.saturating_sub(labeled.len()));
        if unlabeled.is_empty() || budget_left == 0 {
            return Ok(AlCurve {
                strategy: strategy.as_str().into(),
                points,
                labels_to_target: None,
            });
        }
        let pool: Vec<Vec<f64>> = unlabeled
            .iter()
            .map(|&i| train.features[i].clone())
            .collect();
        let labeled_rows: Vec<Vec<f64>> =
            labeled.iter().map(|&i| train.features[i].clone()).collect();
        let ctx = PoolContext {
            pool: &pool,
            labeled: &labeled_rows,
            model: Some(&model),
            committee: &[],
        };
        let picks = select_pool(
            &ctx,
            &params,
            config.batch.min(pool.len()).min(budget_left),
            rng.random(),
            exec,
        )?
        .indices();
        let mut taken: Vec<usize> = picks.iter().map(|&p| unlabeled[p]).collect();
        labeled.append(&mut taken);
        let mut drop = picks;
        drop.sort_unstable_by(|a, b| b.cmp(a));
        for p in drop {
            unlabeled.swap_remove(p);
        }
        unlabeled.sort_unstable();
        round += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEfficiency {
    pub seed: u64,
    pub full_auc: f64,
    pub target: f64,
    pub random: AlCurve,
    pub uncertainty: AlCurve,
    /// Labels each strategy needed; the whole pool when never reached.
    pub random_labels: usize,
    pub uncertainty_labels: usize,
}

impl LabelEfficiency {
    pub fn ratio(&self) -> f64 {
        self.uncertainty_labels as f64 / self.random_labels as f64
    }
}

/// One seed of the label-efficiency comparison: entropy sampling against
/// random sampling, both aiming at a fraction of the full-data AUC.
pub fn label_efficiency(
    config: &AlConfig,
    seed: u64,
    exec: Exec,
) -> Result<LabelEfficiency, ExperimentError> {
    let ds = logo_dataset(&config.dataset, seed, exec)?;
    let (train, test) = stratified_split(&ds.data, config.test_fraction, seed ^ 0xA5A5);
    let full = train_batch(&train, &batch_config(&config.mlp, seed))?;
    let full_auc = model_auc(&full, &test)?;
    let target = config.target_fraction * full_auc;
    let stop = AlStop {
        target_auc: Some(target),
        budget: None,
    };
    let random = run_active_learning(
        &train,
        &test,
        StrategyName::Random,
        config,
        stop,
        seed,
        exec,
    )?;
    let uncertainty = run_active_learning(
        &train,
        &test,
        StrategyName::Entropy,
        config,
        stop,
        seed,
        exec,
    )?;
    let pool = train.len();
    Ok(LabelEfficiency {
        seed,
        full_auc,
        target,
        random_labels: random.labels_to_target.unwrap_or(pool),
        uncertainty_labels: uncertainty.labels_to_target.unwrap_or(pool),
        random,
        uncertainty,
    })
}

/// Median of a nonempty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchVsStreaming {
    pub seed: u64,
    pub batch_auc: f64,
    pub streaming_auc: f64,
}

/// Trains the batch net and the streaming kNN on the same split of the
/// inspection dataset.
pub fn batch_vs_streaming(
    dataset: &LogoDatasetConfig,
    mlp: &MlpConfig,
    streaming: &StreamingConfig,
    seed: u64,
    exec: Exec,
) -> Result<BatchVsStreaming, ExperimentError> {
    let ds = logo_dataset(dataset, seed, exec)?;
    let (train, test) = stratified_split(&ds.data, 0.3, seed ^ 0x5A5A);
    let batch = train_batch(&train, &batch_config(mlp, seed))?;
    let rows = train
        .features
        .iter()
        .zip(&train.labels)
        .map(|(x, &y)| (x.as_slice(), y));
    let knn = train_streaming(rows, train.classes.clone(), train.dim(), streaming)?;
    Ok(BatchVsStreaming {
        seed,
        batch_auc: model_auc(&batch, &test)?,
        streaming_auc: model_auc(&knn, &test)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub seed: u64,
    pub brier_raw: f64,
    pub brier_calibrated: f64,
}

/// Two overlapping Gaussian classes with 15% flipped labels. A large,
/// unregularized net trained long on few rows is overconfident; Platt
/// scaling is fitted on a holdout and judged on a separate test set.
pub fn calibration_experiment(seed: u64) -> Result<CalibrationOutcome, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal =
        rand_distr::Normal::new(0.0, 1.0).map_err(|e| ExperimentError::Setup(e.to_string()))?;
    let make = |n: usize, rng: &mut ChaCha8Rng| {
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = i % 2;
            let c = if y == 1 { 0.8 } else { -0.8 };
            let x: Vec<f64> = (0..6)
                .map(|d| {
                    if d < 2 {
                        c + rand_distr::Distribution::sample(&normal, rng)
                    } else {
                        rand_distr::Distribution::sample(&normal, rng)
                    }
                })
                .collect();
            let flipped = if rng.random::<f64>() < 0.15 { 1 - y } else { y };
            features.push(x);
            labels.push(flipped);
        }
        LabeledSet::new(features, labels, vec!["neg".into(), "pos".into()])
            .map_err(|e| ExperimentError::Setup(e.to_string()))
    };
    let train = make(120, &mut rng)?;
    let holdout = make(400, &mut rng)?;
    let test = make(2000, &mut rng)?;
    let config = BatchConfig {
        mlp: MlpConfig {
            hidden: 64,
            l2: 0.0,
            max_epochs: 400,
            plateau_patience: 400,
            learning_rate: 0.1,
            seed,
            ..MlpConfig::default()
        },
        ..BatchConfig::default()
    };
    let raw = train_batch(&train, &config)?;
    let calibrated = calibrate(&raw, &holdout)?;
    Ok(CalibrationOutcome {
        seed,
        brier_raw: brier_score(&predict_all(&raw, &test)?, &test.labels),
        brier_calibrated: brier_score(&predict_all(&calibrated, &test)?, &test.labels),
    })
}

/// Classifier for the oversampling comparison: a strongly regularized net
/// that cannot memorize the rare class, so the class prior shapes its
/// decision boundary.
pub fn oversampling_classifier() -> MlpConfig {
    MlpConfig {
        l2: 0.1,
        ..MlpConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OversamplingOutcome {
    pub recall_plain: f64,
    pub recall_balanced: f64,
    pub synthetic_added: usize,
}

/// Minority recall of the same batch net trained on a 95:5 training set
/// with and without interpolation oversampling to a 50:50 balance.
pub fn oversampling_experiment(
    dataset: &LogoDatasetConfig,
    mlp: &MlpConfig,
    seed: u64,
    exec: Exec,
) -> Result<OversamplingOutcome, ExperimentError> {
    let ds = logo_dataset(dataset, seed, exec)?;
    let (train, test) = stratified_split(&ds.data, 0.5, seed ^ 0x0F0F);
    let config = batch_config(mlp, seed);
    let plain = train_batch(&train, &config)?;
    let synthetic = oversample_minority(&train, 1, 0.5, 5, seed)?;
    let balanced = train_batch(&augmented(&train, &synthetic), &config)?;
    let recall = |m: &ClassifierModel| -> Result<f64, ExperimentError> {
        Ok(class_prf(&predict_all(m, &test)?, &test.labels, 1).1)
    };
    Ok(OversamplingOutcome {
        recall_plain: recall(&plain)?,
        recall_balanced: recall(&balanced)?,
        synthetic_added: synthetic.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancerReport {
    /// `(items processed, window ratio, reserve nonempty)` after each
    /// incoming item once the window is full.
    pub checkpoints: Vec<(usize, f64, bool)>,
    pub real_in: usize,
    pub real_out: usize,
    pub real_defects_in: usize,
    pub injected: usize,
    /// Production statistics as reported by the balancer.
    pub production_items: usize,
    pub production_defects: usize,
}

/// Streams `n` real items with the given true defect rate through a
/// balancer whose reserve holds `reserve` non-real defects.
pub fn balancer_simulation(
    n: usize,
    defect_rate: f64,
    reserve: usize,
    config: BalancerConfig,
    seed: u64,
) -> Result<BalancerReport, ExperimentError> {
    let mut b = StreamBalancer::new(config)?;
    for i in 0..reserve {
        let provenance = if i % 2 == 0 {
            Provenance::Synthetic
        } else {
            Provenance::InjectedKnownDefect
        };
        b.add_reserve(StreamItem {
            sample_id: format!("reserve-{i}"),
            defect: true,
            provenance,
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BalancerReport {
        checkpoints: Vec::new(),
        real_in: 0,
        real_out: 0,
        real_defects_in: 0,
        injected: 0,
        production_items: 0,
        production_defects: 0,
    };
    for i in 0..n {
        let defect = rng.random::<f64>() < defect_rate;
        report.real_in += 1;
        report.real_defects_in += defect as usize;
        let out = b.process(StreamItem {
            sample_id: format!("real-{i}"),
            defect,
            provenance: Provenance::Real,
        });
        report.real_out += out
            .emitted
            .iter()
            .filter(|it| it.provenance.is_real())
            .count();
        report.injected += out
            .emitted
            .iter()
            .filter(|it| !it.provenance.is_real())
            .count();
        if b.window_full() {
            report
                .checkpoints
                .push((i + 1, b.window_ratio(), b.reserve_len() > 0));
        }
    }
    let stats = b.production_stats();
    report.production_items = stats.real_items;
    report.production_defects = stats.real_defects;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityOutcome {
    pub accuracy: f64,
    /// Rows are true activities, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    pub classes: Vec<String>,
}

/// Trains the activity classifier on one synthetic corpus and tests on a
/// disjoint one.
pub fn activity_experiment(
    seed: u64,
) -> Result<(ActivityClassifier, ActivityOutcome), ExperimentError> {
    let train = imu_corpus(12, 10.0, seed)?;
    let test = imu_corpus(6, 10.0, seed.wrapping_add(7919))?;
    let config = BatchConfig {
        mlp: MlpConfig {
            hidden: 16,
            max_epochs: 200,
            seed,
            ..MlpConfig::default()
        },
        ..BatchConfig::default()
    };
    let clf = ActivityClassifier::train(&train, &config)?;
    let k = train.n_classes();
    let mut confusion = vec![vec![0usize; k]; k];
    for (x, &y) in test.features.iter().zip(&test.labels) {
        confusion[y][argmax(&clf.model.scores(x)?)] += 1;
    }
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    Ok((
        clf,
        ActivityOutcome {
            accuracy: correct as f64 / test.len() as f64,
            confusion,
            classes: test.classes.clone(),
        },
    ))
}
