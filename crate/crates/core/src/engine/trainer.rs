use std::sync::mpsc::{Receiver, Sender};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EngineError, Shared};
use crate::features::FeatureVector;
use crate::nefclass::FuzzyModel;
use crate::store::{ModelFile, Provenance};
use crate::train::{fine_tune, train_initial, LabeledSample, FINE_TUNE_BATCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainKind {
    Ga,
    Cg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub kind: TrainKind,
    /// False when there was nothing to train on.
    pub applied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
    pub model_version: u64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_before: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_after: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    pub seconds: f64,
}

pub(crate) enum Job {
    FineTune { sample: (FeatureVector, String) },
    Train { kind: TrainKind, reply: Sender<Result<TrainReport, EngineError>> },
}

pub(crate) fn run(shared: Arc<Shared>, jobs: Receiver<Job>) {
    for job in jobs {
        match job {
            Job::FineTune { sample } => {
                let r = correction_fine_tune(&shared, sample);
                shared.job_done();
                if let Err(e) = r {
                    eprintln!("fine-tune failed: {e}");
                }
            }
            Job::Train { kind, reply } => {
                let r = match kind {
                    TrainKind::Ga => retrain(&shared),
                    TrainKind::Cg => reservoir_fine_tune(&shared),
                };
                shared.job_done();
                let _ = reply.send(r);
            }
        }
    }
}

fn reservoir_samples(shared: &Shared, model: &FuzzyModel) -> Vec<LabeledSample> {
    shared.reservoir.lock().expect("reservoir lock").labeled(model)
}

fn persist(shared: &Shared, model: &FuzzyModel, provenance: Provenance) -> Result<(), EngineError> {
    if let Some(store) = shared.store.lock().expect("store lock").as_mut() {
        store.save_model(ModelFile::new(model.clone(), provenance))?;
    }
    Ok(())
}

fn correction_fine_tune(shared: &Shared, (x, label): (FeatureVector, String)) -> Result<TrainReport, EngineError> {
    let t0 = Instant::now();
    let snap = shared.model();
    let class = snap.model.class_index(&label).ok_or_else(|| EngineError::UnknownLabel(label.clone()))?;
    let pool: Vec<LabeledSample> =
        reservoir_samples(shared, &snap.model).into_iter().chain(shared.config.base_samples.iter().cloned()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(shared.config.cg.rng_seed ^ snap.version);
    let take = pool.len().min(FINE_TUNE_BATCH - 1);
    let mut picked: Vec<usize> = sample(&mut rng, pool.len(), take).into_vec();
    picked.sort_unstable();
    let context: Vec<LabeledSample> = picked.into_iter().map(|i| pool[i].clone()).collect();
    let (result, metrics) = fine_tune(&shared.config.cg, &snap.model, &[(x, class)], &context)?;
    let published = shared.publish(result.model.clone());
    persist(shared, &published.model, Provenance::new("cg", &shared.config.cg, shared.config.cg.rng_seed, metrics.batch_size))?;
    Ok(TrainReport {
        kind: TrainKind::Cg,
        applied: true,
        notice: None,
        model_version: published.version,
        samples: metrics.batch_size,
        fitness: None,
        loss_before: Some(metrics.loss_before),
        loss_after: Some(metrics.loss_after),
        iterations: Some(metrics.iterations),
        seconds: t0.elapsed().as_secs_f64(),
    })
}

fn reservoir_fine_tune(shared: &Shared) -> Result<TrainReport, EngineError> {
    let t0 = Instant::now();
    let snap = shared.model();
    let samples = reservoir_samples(shared, &snap.model);
    if samples.is_empty() {
        return Ok(TrainReport {
            kind: TrainKind::Cg,
            applied: false,
            notice: Some("correction reservoir is empty; nothing to fine-tune".into()),
            model_version: snap.version,
            samples: 0,
            fitness: None,
            loss_before: None,
            loss_after: None,
            iterations: None,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    let recent = &samples[samples.len().saturating_sub(FINE_TUNE_BATCH)..];
    let (result, metrics) = fine_tune(&shared.config.cg, &snap.model, recent, &[])?;
    let published = shared.publish(result.model.clone());
    persist(shared, &published.model, Provenance::new("cg", &shared.config.cg, shared.config.cg.rng_seed, metrics.batch_size))?;
    Ok(TrainReport {
        kind: TrainKind::Cg,
        applied: true,
        notice: None,
        model_version: published.version,
        samples: metrics.batch_size,
        fitness: None,
        loss_before: Some(metrics.loss_before),
        loss_after: Some(metrics.loss_after),
        iterations: Some(metrics.iterations),
        seconds: t0.elapsed().as_secs_f64(),
    })
}

fn retrain(shared: &Shared) -> Result<TrainReport, EngineError> {
    let t0 = Instant::now();
    let snap = shared.model();
    let samples: Vec<LabeledSample> =
        shared.config.base_samples.iter().cloned().chain(reservoir_samples(shared, &snap.model)).collect();
    if samples.is_empty() {
        return Err(EngineError::NoTrainingData("no base samples and an empty correction reservoir".into()));
    }
    let m = &snap.model;
    let template = FuzzyModel::untrained(m.class_labels.clone(), m.features, m.inference);
    let trained = train_initial(&shared.config.ga, shared.config.calibration_target, &samples, &template)?;
    let published = shared.publish(trained.model);
    persist(shared, &published.model, Provenance::new("ga", &shared.config.ga, shared.config.ga.rng_seed, samples.len()))?;
    Ok(TrainReport {
        kind: TrainKind::Ga,
        applied: true,
        notice: None,
        model_version: published.version,
        samples: samples.len(),
        fitness: Some(trained.ga.best_fitness),
        loss_before: None,
        loss_after: None,
        iterations: None,
        seconds: t0.elapsed().as_secs_f64(),
    })
}
