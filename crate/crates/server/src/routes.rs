//! `/v1` handlers.

use axum::body::Bytes;
use axum::extract::{FromRequest, FromRequestParts, Path, Request, State};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::{Extension, Json};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use workbench_core::decision::{parse_context, FactSource, FeedbackRecord, SubjectKind, Triple};
use workbench_core::forecasting::DemandRecord;
use workbench_core::forecasting::{
    classify_demand, DemandMethod, DemandSeries, ProbaModel, TwofoldConfig,
};
use workbench_core::intention::{decide, featurize, ImuFrame, Point};
use workbench_core::security::PolicySet;
use workbench_core::simulation::{
    image_feature_names, image_features, simulate_scenario, Adjustment, ScenarioSpec, StreamItem,
};
use workbench_core::types::{
    now_ms, GrayImage, ImuWindow, Provenance, Sample, SampleKind, IMU_CHANNELS,
};
use workbench_core::xai::{
    anomaly_map, explain_surrogate, image_concept_map, nearest_hint, redact, saliency_occlusion,
    ConceptMap, Explanation, FeaturizedImageModel, GalleryEntry, SurrogateConfig,
};

use crate::auth::Caller;
use crate::error::ApiError;
use crate::quality::StoredSample;
use crate::state::{AppState, RoundOutcome};

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<T, ApiError>;

/// JSON body extractor whose rejections use the service error body.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(r) => Err(ApiError::new(r.status(), "invalid_request", r.body_text())),
        }
    }
}

/// Query-string extractor whose rejections use the service error body.
pub struct ApiQuery<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for ApiQuery<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        match axum::extract::Query::<T>::from_request_parts(parts, state).await {
            Ok(q) => Ok(ApiQuery(q.0)),
            Err(r) => Err(ApiError::new(r.status(), "invalid_request", r.body_text())),
        }
    }
}

/// Runs `f` on the blocking thread pool.
async fn blocking<T, F>(state: &Arc<AppState>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&AppState) -> ApiResult<T> + Send + 'static,
{
    let s = state.clone();
    tokio::task::spawn_blocking(move || f(&s))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

pub async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

// ---- samples ----

fn real() -> Provenance {
    Provenance::Real
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleIn {
    pub id: String,
    pub kind: SampleKind,
    #[serde(default)]
    pub features: Option<Vec<f64>>,
    #[serde(default)]
    pub image: Option<GrayImage>,
    /// IMU frames for `imu_window` samples.
    #[serde(default)]
    pub frames: Option<Vec<ImuFrame>>,
    /// Worker position and heading for `imu_window` samples, in meters.
    #[serde(default)]
    pub position: Option<Point>,
    #[serde(default)]
    pub heading: Option<Point>,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "real")]
    pub provenance: Provenance,
    /// Keep out of the annotation pool and use for evaluation only.
    #[serde(default)]
    pub holdout: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesIn {
    #[serde(default)]
    pub samples: Vec<SampleIn>,
    #[serde(default)]
    pub demand: Vec<DemandRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntentOut {
    pub sample_id: String,
    #[serde(flatten)]
    pub decision: workbench_core::intention::IntentDecision,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplesOut {
    pub accepted: Vec<String>,
    pub intent: Vec<IntentOut>,
    pub demand_products: Vec<String>,
    pub round: RoundOutcome,
}

struct ImuIn {
    id: String,
    window: ImuWindow,
    position: Point,
    heading: Point,
}

fn imu_window(s: &SampleIn) -> ApiResult<ImuIn> {
    let frames = s
        .frames
        .as_ref()
        .ok_or_else(|| ApiError::bad_request(format!("imu sample {:?} needs frames", s.id)))?;
    let (Some(position), Some(heading)) = (s.position, s.heading) else {
        return Err(ApiError::bad_request(format!(
            "imu sample {:?} needs position and heading",
            s.id
        )));
    };
    let mut channels: Vec<Vec<f64>> = (0..IMU_CHANNELS)
        .map(|_| Vec::with_capacity(frames.len()))
        .collect();
    for f in frames {
        for (c, v) in f.values.iter().enumerate() {
            channels[c].push(*v);
        }
    }
    let window = ImuWindow::new(channels).map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(ImuIn {
        id: s.id.clone(),
        window,
        position,
        heading,
    })
}

fn stored_sample(s: SampleIn) -> ApiResult<StoredSample> {
    let features = match (&s.features, &s.image) {
        (Some(f), _) => f.clone(),
        (None, Some(img)) => image_features(img),
        (None, None) => {
            return Err(ApiError::bad_request(format!(
                "sample {:?} needs features or an image",
                s.id
            )))
        }
    };
    let mut sample = Sample::new(s.id, s.kind, features, s.provenance)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    if let Some(label) = s.label {
        sample
            .set_label(label)
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
    }
    Ok(StoredSample {
        sample,
        holdout: s.holdout,
        image: s.image,
    })
}

fn merge_demand(state: &AppState, records: Vec<DemandRecord>) -> ApiResult<Vec<String>> {
    if records.is_empty() {
        return Ok(Vec::new());
    }
    let mut by_product: BTreeMap<String, BTreeMap<i64, f64>> = BTreeMap::new();
    for r in records {
        if !(r.quantity.is_finite() && r.quantity >= 0.0) {
            return Err(ApiError::bad_request(format!(
                "quantity {} for {} period {} must be finite and nonnegative",
                r.quantity, r.product_id, r.period
            )));
        }
        by_product
            .entry(r.product_id)
            .or_default()
            .insert(r.period, r.quantity);
    }
    let mut demand = state.demand.write().unwrap_or_else(|e| e.into_inner());
    let mut merged = Vec::new();
    for (pid, rows) in by_product {
        let mut all: BTreeMap<i64, f64> = demand
            .get(&pid)
            .map(|s| {
                s.periods()
                    .iter()
                    .copied()
                    .zip(s.quantities().iter().copied())
                    .collect()
            })
            .unwrap_or_default();
        all.extend(rows);
        let (periods, quantities) = all.into_iter().unzip();
        merged.push((pid.clone(), DemandSeries::new(pid, periods, quantities)?));
    }
    let ids = merged.iter().map(|(id, _)| id.clone()).collect();
    demand.extend(merged);
    Ok(ids)
}

fn ingest(state: &AppState, caller: &Caller, body: SamplesIn) -> ApiResult<SamplesOut> {
    let mut seen = HashSet::new();
    let mut quality_in = Vec::new();
    let mut imu_in = Vec::new();
    {
        let quality = state.quality();
        for s in body.samples {
            if !seen.insert(s.id.clone()) {
                return Err(ApiError::conflict(
                    "duplicate_sample",
                    format!("sample {:?} appears twice", s.id),
                ));
            }
            match s.kind {
                SampleKind::ImuWindow => imu_in.push(imu_window(&s)?),
                SampleKind::DemandWindow => {
                    return Err(ApiError::bad_request(
                        "demand observations go in the `demand` field",
                    ));
                }
                SampleKind::Image | SampleKind::Tabular => {
                    let stored = stored_sample(s)?;
                    quality.validate(&stored)?;
                    if let Some(d) = quality_in
                        .first()
                        .map(|f: &StoredSample| f.sample.features().len())
                    {
                        if stored.sample.features().len() != d {
                            return Err(ApiError::bad_request(
                                "samples in one request differ in feature count",
                            ));
                        }
                    }
                    quality_in.push(stored);
                }
            }
        }
    }
    let i = &state.config.intention;
    let mut intent = Vec::with_capacity(imu_in.len());
    for w in &imu_in {
        let decision = decide(
            &state.intent,
            &w.window,
            &w.id,
            &i.speeds,
            w.position,
            w.heading,
            &i.corridor,
            i.buffer_m,
        )?;
        intent.push(IntentOut {
            sample_id: w.id.clone(),
            decision,
        });
    }
    let imu_samples: Vec<Sample> = imu_in
        .iter()
        .map(|w| {
            let f = featurize(&w.window)?;
            Sample::new(w.id.clone(), SampleKind::ImuWindow, f, Provenance::Real)
                .map_err(|e| ApiError::bad_request(e.to_string()))
        })
        .collect::<ApiResult<_>>()?;
    let demand_products = merge_demand(state, body.demand)?;

    let principal = caller.principal();
    let good = state.config.quality.good_class.clone();
    let mut accepted = Vec::new();
    for s in quality_in {
        state.persist_sample(&s)?;
        let defect = s.sample.label().is_some_and(|l| l != good);
        let item = StreamItem {
            sample_id: s.sample.id.clone(),
            defect,
            provenance: s.sample.provenance(),
        };
        {
            let mut balancer = state.balancer.lock().unwrap_or_else(|e| e.into_inner());
            if item.provenance.is_real() {
                balancer.process(item);
            } else if defect {
                if let Err(e) = balancer.add_reserve(item) {
                    tracing::debug!(error = %e, "sample not injectable");
                }
            }
        }
        state.publish(
            "samples",
            json!({ "type": "ingested", "sample_id": s.sample.id, "kind": s.sample.kind, "provenance": s.sample.provenance(), "holdout": s.holdout }),
            &principal,
        )?;
        accepted.push(s.sample.id.clone());
        state.quality().insert(s);
    }
    for s in imu_samples {
        state
            .store
            .put_as(&format!("imu/{}", s.id), &s)
            .map_err(|e| ApiError::internal(e.to_string()))?;
        accepted.push(s.id);
    }
    for out in &intent {
        state.publish(
            "intent",
            json!({ "type": "command", "sample_id": out.sample_id, "decision": out.decision }),
            &principal,
        )?;
    }
    if let Some(last) = intent.last() {
        *state.last_intent.lock().unwrap_or_else(|e| e.into_inner()) = Some(last.decision.clone());
    }
    for pid in &demand_products {
        state.publish(
            "samples",
            json!({ "type": "demand_updated", "product_id": pid }),
            &principal,
        )?;
    }
    let round = state.advance_round()?;
    Ok(SamplesOut {
        accepted,
        intent,
        demand_products,
        round,
    })
}

pub async fn post_samples(
    State(state): Shared,
    Extension(caller): Extension<Caller>,
    ApiJson(body): ApiJson<SamplesIn>,
) -> ApiResult<(StatusCode, Json<SamplesOut>)> {
    let out = blocking(&state, move |s| ingest(s, &caller, body)).await?;
    Ok((StatusCode::CREATED, Json(out)))
}

// ---- annotation ----

pub async fn get_queue_next(
    State(state): Shared,
    Extension(caller): Extension<Caller>,
) -> ApiResult<Response> {
    match state.queue.lease_next(&caller.actor) {
        Some(task) => {
            state.publish(
                "queries",
                json!({ "type": "leased", "task_id": task.task_id, "annotator": caller.actor }),
                &caller.principal(),
            )?;
            Ok(Json(task).into_response())
        }
        None => Ok(StatusCode::NO_CONTENT.into_response()),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelIn {
    pub task_id: String,
    pub label: String,
    pub elapsed_ms: i64,
    /// Kind of hint the annotator had on screen, if any.
    #[serde(default)]
    pub hint_shown: Option<String>,
}

fn answer(state: &AppState, caller: &Caller, body: LabelIn) -> ApiResult<Value> {
    if body.elapsed_ms < 0 {
        return Err(ApiError::bad_request("elapsed_ms must be nonnegative"));
    }
    state.quality().check_label(&body.label)?;
    let record = state.queue.answer(
        &body.task_id,
        &caller.actor,
        &body.label,
        body.elapsed_ms,
        body.hint_shown,
    )?;
    state.record_label(&record)?;
    state.publish(
        "labels",
        json!({ "type": "labeled", "record": record }),
        &caller.principal(),
    )?;
    let round = state.advance_round()?;
    Ok(json!({ "record": record, "round": round }))
}

pub async fn post_labels(
    State(state): Shared,
    Extension(caller): Extension<Caller>,
    ApiJson(body): ApiJson<LabelIn>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let out = blocking(&state, move |s| answer(s, &caller, body)).await?;
    Ok((StatusCode::CREATED, Json(out)))
}

// ---- predictions and explanations ----

pub async fn get_prediction(
    State(state): Shared,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let quality = state.quality();
    let stored = quality
        .get(&id)
        .ok_or_else(|| ApiError::not_found("sample", &id))?;
    let model = quality.model().ok_or_else(|| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "no_model",
            "no model has been trained yet",
        )
    })?;
    let prediction = model.predict(&id, stored.sample.features())?;
    let mut out =
        serde_json::to_value(&prediction).map_err(|e| ApiError::internal(e.to_string()))?;
    out["model_version"] = json!(quality.info().version);
    out["label"] = json!(stored.sample.label());
    Ok(Json(out))
}

/// Explanation ids are `<prefix>-<sample id>`.
fn parse_explanation_id(id: &str) -> ApiResult<(&str, &str)> {
    id.split_once('-')
        .filter(|(p, rest)| ["xfr", "xnn", "xsal", "xano"].contains(p) && !rest.is_empty())
        .ok_or_else(|| {
            ApiError::not_found("explanation", id).with_details(
                json!({ "id": id, "expected": "xfr-|xnn-|xsal-|xano- followed by a sample id" }),
            )
        })
}

fn build_explanation(state: &AppState, id: &str) -> ApiResult<(Explanation, ConceptMap)> {
    let (prefix, sample_id) = parse_explanation_id(id)?;
    let quality = state.quality();
    let stored = quality
        .get(sample_id)
        .ok_or_else(|| ApiError::not_found("sample", sample_id))?;
    let is_image =
        stored.image.is_some() && stored.sample.features().len() == image_feature_names().len();
    let map = if is_image {
        image_concept_map()
    } else {
        ConceptMap::new()
    };
    let no_model = || {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "no_model",
            "no model has been trained yet",
        )
    };
    let no_image = || {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "explanation_unavailable",
            format!("sample {sample_id:?} has no image"),
        )
    };
    let explanation = match prefix {
        "xfr" => {
            let model = quality.model().ok_or_else(no_model)?;
            let names: Vec<String> = if is_image {
                image_feature_names()
            } else {
                (0..stored.sample.features().len())
                    .map(|i| format!("f{i}"))
                    .collect()
            };
            explain_surrogate(
                model,
                &quality.background(),
                &names,
                sample_id,
                &SurrogateConfig::default(),
                state.exec,
            )?
        }
        "xsal" => {
            let model = quality.model().ok_or_else(no_model)?;
            let img = stored.image.as_ref().ok_or_else(no_image)?;
            let adapter = FeaturizedImageModel {
                model: model as &dyn ProbaModel,
                featurize: image_features,
            };
            let patch = (img.width().min(img.height()) / 8).max(1);
            saliency_occlusion(
                &adapter,
                img,
                patch,
                (patch / 2).max(1),
                sample_id,
                state.exec,
            )?
        }
        "xnn" => {
            let img = stored.image.as_ref().ok_or_else(no_image)?;
            let gallery: Vec<GalleryEntry> = quality
                .gallery()
                .into_iter()
                .filter(|(gid, _, g)| gid != sample_id && g.same_dims(img))
                .map(|(sample_id, label, image)| GalleryEntry {
                    sample_id,
                    label,
                    image,
                })
                .collect();
            nearest_hint(img, &gallery, sample_id, state.exec)?
        }
        _ => {
            let img = stored.image.as_ref().ok_or_else(no_image)?;
            let good = quality.good_class().to_string();
            let refs: Vec<GrayImage> = quality
                .gallery()
                .into_iter()
                .filter(|(gid, label, g)| gid != sample_id && *label == good && g.same_dims(img))
                .map(|(_, _, g)| g)
                .collect();
            anomaly_map(img, &refs, 1.0, 2.0, sample_id)?
        }
    };
    Ok((explanation, map))
}

pub async fn get_explanation(
    State(state): Shared,
    Extension(caller): Extension<Caller>,
    Path(id): Path<String>,
) -> ApiResult<Json<Explanation>> {
    let lookup = id.clone();
    let (explanation, map) = blocking(&state, move |s| build_explanation(s, &lookup)).await?;
    let mut out = redact(&explanation, caller.redaction, &map);
    out.id = id;
    out.audience = caller.role.clone();
    state.publish(
        "explanations",
        json!({ "type": "served", "id": out.id, "kind": out.kind, "redaction": out.redaction, "audience": out.audience }),
        &caller.principal(),
    )?;
    Ok(Json(out))
}

// ---- forecasting ----

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastQuery {
    pub method: Option<String>,
    pub alpha: Option<f64>,
    pub horizon: Option<usize>,
}

fn demand_method(
    state: &AppState,
    method: Option<&str>,
    alpha: Option<f64>,
) -> ApiResult<DemandMethod> {
    let f = &state.config.forecasting;
    let alpha = alpha.unwrap_or(f.alpha);
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ApiError::bad_request(format!(
            "alpha {alpha} outside (0, 1]"
        )));
    }
    match method.unwrap_or(&f.method) {
        "croston" => Ok(DemandMethod::Croston { alpha }),
        "sba" => Ok(DemandMethod::Sba { alpha }),
        "twofold" => Ok(DemandMethod::Twofold(TwofoldConfig::default())),
        other => Err(ApiError::bad_request(format!("unknown method {other:?}"))
            .with_details(json!({ "methods": ["croston", "sba", "twofold"] }))),
    }
}

fn series(state: &AppState, product_id: &str) -> ApiResult<DemandSeries> {
    state
        .demand
        .read()
        .unwrap_or_else(|e| e.into_inner())
        .get(product_id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("product", product_id))
}

pub async fn get_forecast(
    State(state): Shared,
    Path(product_id): Path<String>,
    ApiQuery(q): ApiQuery<ForecastQuery>,
) -> ApiResult<Json<Value>> {
    let method = demand_method(&state, q.method.as_deref(), q.alpha)?;
    let horizon = q.horizon.unwrap_or(1);
    if horizon == 0 || horizon > 104 {
        return Err(ApiError::bad_request("horizon must be between 1 and 104"));
    }
    let base = series(&state, &product_id)?;
    let (point, occurrence) = blocking(&state, {
        let method = method.clone();
        let q = base.quantities().to_vec();
        move |_| Ok(method.forecast_next(&q)?)
    })
    .await?;
    Ok(Json(json!({
        "product_id": product_id,
        "method": method.name(),
        "point": point,
        "occurrence_probability": occurrence,
        "forecast": vec![point; horizon],
        "demand_class": classify_demand(base.quantities())?,
        "history": { "periods": base.periods(), "quantities": base.quantities() },
    })))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfIn {
    pub product_id: String,
    #[serde(default)]
    pub adjustments: Vec<Adjustment>,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub alpha: Option<f64>,
}

pub async fn post_whatif(
    State(state): Shared,
    Extension(caller): Extension<Caller>,
    ApiJson(body): ApiJson<WhatIfIn>,
) -> ApiResult<Json<Value>> {
    let method = demand_method(&state, body.method.as_deref(), body.alpha)?;
    let base = series(&state, &body.product_id)?;
    let spec = ScenarioSpec {
        product_id: body.product_id,
        adjustments: body.adjustments,
        label: body.label,
    };
    let outcome = blocking(&state, move |_| {
        Ok(simulate_scenario(&base, &spec, &method)?)
    })
    .await?;
    let id = state.next_id("scenario");
    let doc = json!({ "id": id, "actor": caller.principal(), "outcome": outcome });
    state
        .store
        .put(&format!("scenarios/{id}"), doc.clone())
        .map_err(|e| ApiError::internal(e.to_string()))?;
    state.publish(
        "scenarios",
        json!({ "type": "simulated", "id": id, "outcome": outcome }),
        &caller.principal(),
    )?;
    Ok(Json(doc))
}

// ---- decisions, feedback and knowledge ----

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsQuery {
    #[serde(default)]
    pub context: String,
}

pub async fn get_options(
    State(state): Shared,
    Extension(caller): Extension<Caller>,
    ApiQuery(q): ApiQuery<OptionsQuery>,
) -> ApiResult<Json<Value>> {
    let ctx = parse_context(&q.context)?;
    let ranked = state.recommender.recommend(&ctx)?;
    let ids: Vec<&str> = ranked.iter().map(|r| r.option.id.as_str()).collect();
    state.publish(
        "options",
        json!({ "type": "recommended", "context": ctx, "options": ids }),
        &caller.principal(),
    )?;
    Ok(Json(json!({ "context": ctx, "options": ranked })))
}

pub async fn post_feedback(
    State(state): Shared,
    Extension(caller): Extension<Caller>,
    ApiJson(mut record): ApiJson<FeedbackRecord>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    record.id = state.next_id("fb");
    record.actor = caller.principal();
    record.ts = now_ms();
    let tally = state.recommender.apply_feedback(&record)?;
    state
        .store
        .put_as(&format!("feedback/{}", record.id), &record)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    if let Some(text) = record.free_text.as_deref().filter(|t| !t.trim().is_empty()) {
        state.knowledge.capture(
            &record.actor,
            Triple::new(&record.subject_ref, "comment", text),
            FactSource::UserFeedback,
        )?;
    }
    let payload = json!({ "type": "feedback", "record": record, "tally": tally });
    state.publish("feedback", payload.clone(), &record.actor)?;
    if matches!(
        record.subject_kind,
        SubjectKind::Prediction | SubjectKind::Explanation
    ) {
        state.publish("queries", payload.clone(), &record.actor)?;
    }
    Ok((
        StatusCode::CREATED,
        Json(json!({ "record": record, "tally": tally })),
    ))
}

pub async fn post_knowledge(
    State(state): Shared,
    Extension(caller): Extension<Caller>,
    ApiJson(triple): ApiJson<Triple>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let (fact, is_new) =
        state
            .knowledge
            .capture(&caller.principal(), triple, FactSource::UserFeedback)?;
    if is_new {
        state.publish(
            "feedback",
            json!({ "type": "knowledge", "fact": fact }),
            &caller.principal(),
        )?;
    }
    let status = if is_new {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(json!({ "fact": fact, "new": is_new }))))
}

// ---- intention and stream monitoring ----

pub async fn get_intent_command(State(state): Shared) -> Response {
    match state
        .last_intent
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .clone()
    {
        Some(d) => Json(d).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

pub async fn get_stream_metrics(State(state): Shared) -> Json<Value> {
    let (window_ratio, window_full, reserve, injected, production) = {
        let b = state.balancer.lock().unwrap_or_else(|e| e.into_inner());
        (
            b.window_ratio(),
            b.window_full(),
            b.reserve_len(),
            b.injected_count(),
            b.production_stats(),
        )
    };
    let (samples, model) = {
        let q = state.quality();
        (q.counts(), q.info().clone())
    };
    Json(json!({
        "presented": { "window_ratio": window_ratio, "window_full": window_full, "reserve": reserve, "injected": injected },
        "production": { "real_items": production.real_items, "real_defects": production.real_defects, "defect_rate": production.defect_rate() },
        "samples": samples,
        "queue": state.queue.counts(),
        "model": model,
    }))
}

// ---- administration ----

pub async fn post_policies(
    State(state): Shared,
    Extension(caller): Extension<Caller>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let text = std::str::from_utf8(&body)
        .map_err(|_| ApiError::bad_request("policy text must be UTF-8"))?;
    let set = PolicySet::parse(text)?;
    let count = set.policies.len();
    state
        .store
        .put(
            crate::state::POLICY_KEY,
            json!({ "text": text, "actor": caller.principal() }),
        )
        .map_err(|e| ApiError::internal(e.to_string()))?;
    state.policies.replace(set);
    state.publish(
        "policy",
        json!({ "type": "replaced", "policies": count }),
        &caller.principal(),
    )?;
    Ok(Json(json!({ "policies": count })))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditQuery {
    pub from: Option<u64>,
    pub limit: Option<usize>,
}

pub async fn get_audit(State(state): Shared, ApiQuery(q): ApiQuery<AuditQuery>) -> Json<Value> {
    let limit = q.limit.unwrap_or(100).min(1000);
    Json(json!({
        "entries": state.audit.page(q.from.unwrap_or(0), limit),
        "total": state.audit.len(),
        "verify": state.audit.verify(),
    }))
}
