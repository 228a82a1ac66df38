//! End-to-end processing: fuse app streams with roadside tracks, build model
//! rows, label them, train the conflict models and score segments.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{
    aggregate_window, extract_features, Calibration, DriverFeatures, DriverType, DriverTypeTracker, FaceFrame,
    GazeModel,
};
use crate::error::{Error, Result};
use crate::fusion::{
    assemble, match_streams, schema, sentinel_comment, FeatureVector, Fix, GeoOrigin, MatchResult, PlanarTrack,
    RowInputs, Variant, DEFAULT_MATCH_RADIUS, DEFAULT_TIME_TOLERANCE,
};
use crate::learn::{cross_validate, smote, train, CvReport, GbdtModel, GbdtParams, LabeledTable, RowKey, DEFAULT_K};
use crate::risk::{segment_risk, RiskEngine, ScoreRow};
use crate::tci::{label_future, ConflictFlags, Indicator, PairSample, TciValues, Thresholds};
use crate::trajectory::{
    find_leader_among, segment_of, LaneShape, LeaderContext, LeaderOptions, SegmentMap, TrackPoint, FRAME_PERIOD,
};

/// A lane change marks the vehicle as lane-changing for this long, s.
pub const LANE_CHANGE_WINDOW: f64 = 3.0;
/// Driver features are averaged over this trailing window, s.
pub const DRIVER_WINDOW: f64 = 1.0;
/// Indicator history reaches back this far, s.
pub const HISTORY_LAG: f64 = 1.0;
pub const DEFAULT_STRIDE: f64 = 1.0;

/// Road geometry and crash history of the monitored site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Site {
    pub origin: GeoOrigin,
    pub lanes: Vec<LaneShape>,
    #[serde(flatten)]
    pub segments: SegmentMap,
}

impl Site {
    pub fn validate(&self) -> Result<()> {
        if self.lanes.is_empty() {
            return Err(Error::Config("site has no lanes".into()));
        }
        for lane in &self.lanes {
            lane.validate()?;
        }
        self.segments.validate()?;
        for seg in &self.segments.segments {
            for l in &seg.lanes {
                if self.lane(l).is_err() {
                    return Err(Error::Config(format!("segment {} names unknown lane {l}", seg.id)));
                }
            }
        }
        Ok(())
    }

    pub fn lane(&self, id: &str) -> Result<&LaneShape> {
        self.lanes
            .iter()
            .find(|l| l.lane_id == id)
            .ok_or_else(|| Error::Config(format!("unknown lane {id}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let site: Site = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        site.validate()?;
        Ok(site)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// One app's recording: camera frames plus its gaze calibration session.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverStream {
    pub id: String,
    pub frames: Vec<FaceFrame>,
    pub calibration: Calibration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchOptions {
    pub radius: f64,
    pub time_tolerance: f64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            radius: DEFAULT_MATCH_RADIUS,
            time_tolerance: DEFAULT_TIME_TOLERANCE,
        }
    }
}

/// Per-frame driver observations of one matched vehicle.
#[derive(Debug, Clone)]
pub struct DriverSeries {
    pub stream_id: String,
    pub gaze: GazeModel,
    pub times: Vec<f64>,
    pub features: Vec<DriverFeatures>,
}

impl DriverSeries {
    /// Features of frames in `(t - DRIVER_WINDOW, t]`.
    pub fn window(&self, t: f64) -> &[DriverFeatures] {
        let lo = self.times.partition_point(|&x| x <= t - DRIVER_WINDOW + 1e-9);
        let hi = self.times.partition_point(|&x| x <= t + 1e-9);
        &self.features[lo..hi]
    }
}

#[derive(Debug, Clone, Default)]
pub struct Fused {
    pub matches: MatchResult,
    /// Keyed by roadside vehicle id.
    pub drivers: BTreeMap<String, DriverSeries>,
    pub warnings: Vec<String>,
}

fn stream_track(origin: &GeoOrigin, stream: &DriverStream) -> PlanarTrack {
    PlanarTrack {
        id: stream.id.clone(),
        fixes: stream
            .frames
            .iter()
            .map(|f| {
                let (x, y) = origin.to_planar(f.gps[0], f.gps[1]);
                Fix { t: f.t, x, y }
            })
            .collect(),
    }
}

/// Matches app streams to tracks by GPS and turns the matched streams into
/// per-frame driver features.
pub fn fuse(
    site: &Site,
    tracks: &BTreeMap<String, Vec<TrackPoint>>,
    streams: &[DriverStream],
    opts: &MatchOptions,
) -> Result<Fused> {
    let planar_streams: Vec<PlanarTrack> = streams.iter().map(|s| stream_track(&site.origin, s)).collect();
    let planar_tracks: Vec<PlanarTrack> = tracks.iter().map(|(id, pts)| PlanarTrack::from_points(id, pts)).collect();
    let matches = match_streams(&planar_streams, &planar_tracks, opts.radius, opts.time_tolerance);

    let mut warnings = Vec::new();
    let mut drivers = BTreeMap::new();
    for pair in &matches.pairs {
        let stream = streams.iter().find(|s| s.id == pair.stream_id).expect("matched stream exists");
        let gaze = match stream.calibration.fit() {
            Ok(g) => g,
            Err(e) => {
                warnings.push(format!("{}: {e}; vehicle {} falls back to the simplified model", stream.id, pair.vehicle_id));
                continue;
            }
        };
        let types = driver_types(site, &tracks[&pair.vehicle_id])?;
        let points = &tracks[&pair.vehicle_id];
        let mut times = Vec::with_capacity(stream.frames.len());
        let mut features = Vec::with_capacity(stream.frames.len());
        for frame in &stream.frames {
            let idx = points.partition_point(|p| p.t <= frame.t + 1e-9).saturating_sub(1);
            match extract_features(frame, &gaze, types[idx]) {
                Ok(f) => {
                    times.push(frame.t);
                    features.push(f);
                }
                Err(e) => warnings.push(format!("{} t={}: {e}", stream.id, frame.t)),
            }
        }
        drivers.insert(
            pair.vehicle_id.clone(),
            DriverSeries {
                stream_id: stream.id.clone(),
                gaze,
                times,
                features,
            },
        );
    }
    for id in &matches.unmatched_streams {
        warnings.push(format!("{id}: no roadside track within tolerance"));
    }
    Ok(Fused {
        matches,
        drivers,
        warnings,
    })
}

/// Driver type at every sample, from the history observed so far.
fn driver_types(site: &Site, points: &[TrackPoint]) -> Result<Vec<DriverType>> {
    let mut out = Vec::with_capacity(points.len());
    let mut tracker: Option<DriverTypeTracker> = None;
    for p in points {
        let limit = site.lane(&p.lane_id)?.speed_limit;
        let tr = tracker.get_or_insert_with(|| DriverTypeTracker::new(limit));
        out.push(tr.observe(p.speed, p.accel));
    }
    Ok(out)
}

fn lane_changing_flags(points: &[TrackPoint]) -> Vec<bool> {
    let mut last_change = f64::NEG_INFINITY;
    let mut out = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if i > 0 && points[i - 1].lane_id != p.lane_id {
            last_change = p.t;
        }
        out.push(p.t - last_change < LANE_CHANGE_WINDOW);
    }
    out
}

/// Leader relation and conflict timeline of one vehicle.
struct VehicleContext<'a> {
    points: &'a [TrackPoint],
    types: Vec<DriverType>,
    lane_changing: Vec<bool>,
    leaders: Vec<LeaderContext>,
    timeline: Vec<PairSample>,
}

impl VehicleContext<'_> {
    fn index_at(&self, t: f64) -> Option<usize> {
        let frame = (t / FRAME_PERIOD).round() as i64;
        let i = self.points.partition_point(|p| p.frame() < frame);
        (i < self.points.len() && self.points[i].frame() == frame).then_some(i)
    }

    fn values(&self, i: usize) -> Result<TciValues> {
        self.timeline[i].values()
    }
}

fn build_contexts<'a>(site: &Site, tracks: &'a BTreeMap<String, Vec<TrackPoint>>) -> Result<BTreeMap<&'a str, VehicleContext<'a>>> {
    let mut by_frame: BTreeMap<i64, Vec<&TrackPoint>> = BTreeMap::new();
    for pts in tracks.values() {
        for p in pts {
            by_frame.entry(p.frame()).or_default().push(p);
        }
    }
    tracks
        .par_iter()
        .map(|(id, points)| {
            let types = driver_types(site, points)?;
            let lane_changing = lane_changing_flags(points);
            let mut leaders = Vec::with_capacity(points.len());
            let mut timeline = Vec::with_capacity(points.len());
            for (i, p) in points.iter().enumerate() {
                let lane = site.lane(&p.lane_id)?;
                let opts = LeaderOptions {
                    driver_type: types[i],
                    lane_changing: lane_changing[i],
                    loop_length: lane.loop_length(),
                };
                let others = by_frame.get(&p.frame()).map(|v| v.as_slice()).unwrap_or(&[]);
                let ctx = find_leader_among(others.iter().copied(), p, &opts);
                let leader = ctx.leader_id.as_ref().and_then(|lid| {
                    others.iter().find(|q| &q.vehicle_id == lid).copied()
                });
                timeline.push(PairSample {
                    t: p.t,
                    gap: leader.map(|_| ctx.gap),
                    v_f: p.speed,
                    v_l: leader.map_or(0.0, |l| l.speed),
                    a_f: p.accel,
                    a_l: leader.map_or(0.0, |l| l.accel),
                });
                leaders.push(ctx);
            }
            Ok((
                id.as_str(),
                VehicleContext {
                    points,
                    types,
                    lane_changing,
                    leaders,
                    timeline,
                },
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModelKey {
    pub indicator: Indicator,
    pub horizon: u8,
    pub variant: Variant,
}

impl ModelKey {
    pub fn new(indicator: Indicator, horizon: u8, variant: Variant) -> Self {
        ModelKey {
            indicator,
            horizon,
            variant,
        }
    }

    /// File stem such as `ttc_1s_full`.
    pub fn stem(&self) -> String {
        format!("{}_{}s_{}", self.indicator.name(), self.horizon, self.variant.name())
    }

    pub fn parse(stem: &str) -> Option<Self> {
        let mut parts = stem.split('_');
        let indicator = Indicator::parse(parts.next()?)?;
        let horizon: u8 = parts.next()?.strip_suffix('s')?.parse().ok()?;
        let variant = match parts.next()? {
            "full" => Variant::Full,
            "simplified" => Variant::Simplified,
            _ => return None,
        };
        parts.next().is_none().then_some(ModelKey::new(indicator, horizon, variant))
    }

    /// Every model for the given horizons and variants, in a fixed order.
    pub fn all(horizons: &[u8], variants: &[Variant]) -> Vec<ModelKey> {
        let mut out = Vec::new();
        for &variant in variants {
            for indicator in Indicator::ALL {
                for &h in horizons {
                    out.push(ModelKey::new(indicator, h, variant));
                }
            }
        }
        out
    }
}

impl fmt::Display for ModelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.stem())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RowOptions {
    /// Spacing of row timestamps, s; a multiple of the frame period.
    pub stride: f64,
    pub horizons: Vec<u8>,
    pub thresholds: Thresholds,
}

impl Default for RowOptions {
    fn default() -> Self {
        RowOptions {
            stride: DEFAULT_STRIDE,
            horizons: vec![1, 2],
            thresholds: Thresholds::default(),
        }
    }
}

impl RowOptions {
    pub fn validate(&self) -> Result<()> {
        let k = self.stride / FRAME_PERIOD;
        if !(self.stride > 0.0) || (k - k.round()).abs() > 1e-9 {
            return Err(Error::Config("stride must be a positive multiple of 0.05 s".into()));
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|h| !(1..=2).contains(h)) {
            return Err(Error::Config("horizons must be a nonempty subset of {1, 2}".into()));
        }
        Ok(())
    }
}

/// One vehicle at one timestamp: its model inputs and, when the future is
/// known, the realized conflict flags per horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRow {
    pub vehicle_id: String,
    pub t: f64,
    pub segment_id: String,
    /// Inputs for each indicator, in `Indicator::ALL` order.
    pub inputs: [FeatureVector; 3],
    pub labels: BTreeMap<u8, Option<ConflictFlags>>,
}

impl VehicleRow {
    pub fn input(&self, indicator: Indicator) -> &FeatureVector {
        &self.inputs[Indicator::ALL.iter().position(|&i| i == indicator).unwrap()]
    }

    pub fn has_driver(&self) -> bool {
        self.inputs[0].driver.is_some()
    }
}

/// Builds a row for every vehicle at every stride timestamp that has a
/// second of history.
pub fn build_rows(
    site: &Site,
    tracks: &BTreeMap<String, Vec<TrackPoint>>,
    drivers: &BTreeMap<String, DriverSeries>,
    opts: &RowOptions,
) -> Result<Vec<VehicleRow>> {
    opts.validate()?;
    let contexts = build_contexts(site, tracks)?;
    let stride_frames = (opts.stride / FRAME_PERIOD).round() as i64;
    let lag_frames = (HISTORY_LAG / FRAME_PERIOD).round() as i64;
    let per_vehicle: Vec<Result<Vec<VehicleRow>>> = contexts
        .par_iter()
        .map(|(&id, ctx)| {
            let mut rows = Vec::new();
            for (i, p) in ctx.points.iter().enumerate() {
                if p.frame() % stride_frames != 0 {
                    continue;
                }
                let Some(prev) = ctx.index_at(p.t - HISTORY_LAG) else { continue };
                if ctx.points[prev].frame() != p.frame() - lag_frames {
                    continue;
                }
                let lane = site.lane(&p.lane_id)?;
                let segment_id = match &p.segment_id {
                    Some(s) => s.clone(),
                    None => segment_of(&site.segments, &p.lane_id, p.s)?.to_string(),
                };
                let window = drivers
                    .get(id)
                    .and_then(|d| aggregate_window(d.window(p.t), d.gaze.road_cluster));
                let (v_prev, v_now) = (ctx.values(prev)?, ctx.values(i)?);
                let mut inputs = Vec::with_capacity(3);
                for indicator in Indicator::ALL {
                    inputs.push(assemble(&RowInputs {
                        point: p,
                        leader: &ctx.leaders[i],
                        lane,
                        driver: window.as_ref(),
                        driver_type: ctx.types[i],
                        lane_changing: ctx.lane_changing[i],
                        indicator,
                        history: [Some(v_prev.get(indicator)), Some(v_now.get(indicator))],
                    })?);
                }
                let mut labels = BTreeMap::new();
                for &h in &opts.horizons {
                    let flags = match label_future(&ctx.timeline, p.t, h as f64, &opts.thresholds) {
                        Ok(f) => Some(f),
                        Err(Error::LabelUnavailable { .. }) => None,
                        Err(e) => return Err(e),
                    };
                    labels.insert(h, flags);
                }
                rows.push(VehicleRow {
                    vehicle_id: id.to_string(),
                    t: p.t,
                    segment_id,
                    inputs: inputs.try_into().expect("three indicators"),
                    labels,
                });
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_vehicle {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Splits rows at `cut`: rows before it train, the rest are held out.
pub fn split_at_time(rows: Vec<VehicleRow>, cut: f64) -> (Vec<VehicleRow>, Vec<VehicleRow>) {
    rows.into_iter().partition(|r| r.t < cut)
}

/// Training tables per model. Full tables hold rows with driver data;
/// simplified tables hold every row. Rows without a known future are left
/// out.
pub fn build_tables(rows: &[VehicleRow], keys: &[ModelKey]) -> BTreeMap<ModelKey, LabeledTable> {
    let mut out = BTreeMap::new();
    for &key in keys {
        let mut table = LabeledTable::empty(schema(key.variant, key.indicator));
        for row in rows {
            let Some(Some(flags)) = row.labels.get(&key.horizon) else { continue };
            let input = row.input(key.indicator);
            let encoded = match key.variant {
                Variant::Full if input.driver.is_some() => input.encode(),
                Variant::Full => continue,
                Variant::Simplified => input.simplified().encode(),
            };
            table.push(
                RowKey {
                    vehicle_id: row.vehicle_id.clone(),
                    t: row.t,
                },
                &encoded,
                flags.get(key.indicator) as u8,
            );
        }
        out.insert(key, table);
    }
    out
}

/// Header comments for exported tables.
pub fn table_comments(key: &ModelKey) -> Vec<String> {
    vec![
        format!("# model: {}", key.stem()),
        format!("# label: {} conflict within the next {} s", key.indicator.name(), key.horizon),
        sentinel_comment(),
    ]
}

/// Share of labeled rows with any conflict within `horizon`.
pub fn conflict_prevalence(rows: &[VehicleRow], horizon: u8) -> f64 {
    let labeled: Vec<&ConflictFlags> = rows.iter().filter_map(|r| r.labels.get(&horizon)?.as_ref()).collect();
    if labeled.is_empty() {
        return 0.0;
    }
    labeled.iter().filter(|f| f.any()).count() as f64 / labeled.len() as f64
}

pub type ModelSet = BTreeMap<ModelKey, GbdtModel>;

pub fn train_models(tables: &BTreeMap<ModelKey, LabeledTable>, params: &GbdtParams) -> Result<ModelSet> {
    tables
        .par_iter()
        .map(|(key, table)| {
            let model = train(&table.data, params).map_err(|e| match e {
                Error::DegenerateLabels => Error::InsufficientData(format!("{key}: training labels are all one class")),
                other => other,
            })?;
            Ok((*key, model))
        })
        .collect()
}

/// Like [`train_models`], with each training table first rebalanced by
/// synthetic minority oversampling.
pub fn train_models_balanced(tables: &BTreeMap<ModelKey, LabeledTable>, params: &GbdtParams, seed: u64) -> Result<ModelSet> {
    let balanced: BTreeMap<ModelKey, LabeledTable> = tables
        .iter()
        .enumerate()
        .map(|(i, (key, table))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let data = smote(&table.data, DEFAULT_K, &mut rng)?;
            Ok((
                *key,
                LabeledTable {
                    keys: Vec::new(),
                    data,
                },
            ))
        })
        .collect::<Result<_>>()?;
    train_models(&balanced, params)
}

pub fn cross_validate_tables(
    tables: &BTreeMap<ModelKey, LabeledTable>,
    params: &GbdtParams,
    folds: usize,
    rebalance: bool,
    seed: u64,
) -> Result<BTreeMap<ModelKey, CvReport>> {
    tables
        .iter()
        .map(|(key, table)| Ok((*key, cross_validate(&table.data, params, folds, rebalance, seed)?)))
        .collect()
}

/// Predicted flags for one row at one horizon, routed to the full models
/// when driver data is present. `None` when no suitable model is loaded.
pub fn predict_flags(models: &ModelSet, row: &VehicleRow, horizon: u8) -> Result<Option<ConflictFlags>> {
    let mut flags = ConflictFlags::default();
    for indicator in Indicator::ALL {
        let input = row.input(indicator);
        let full = ModelKey::new(indicator, horizon, Variant::Full);
        let simple = ModelKey::new(indicator, horizon, Variant::Simplified);
        let (model, encoded) = match (input.driver.is_some(), models.get(&full), models.get(&simple)) {
            (true, Some(m), _) => (m, input.encode()),
            (_, _, Some(m)) => (m, input.simplified().encode()),
            _ => return Ok(None),
        };
        let p = model.predict(&model.schema_hash, &encoded)?;
        flags.set(indicator, p.flag);
    }
    Ok(Some(flags))
}

/// Gain shares summed over models. Each model's own indicator-history
/// columns are folded into shared `indicator_prev` and `indicator_now`
/// entries so models for different indicators can be compared. Sorted by
/// descending total, ties by name.
pub fn importance_by_role(models: &ModelSet) -> Vec<(String, f64)> {
    let mut total: BTreeMap<String, f64> = BTreeMap::new();
    for (key, model) in models {
        let own = key.indicator.name();
        for f in model.feature_importance() {
            let name = match f.name.strip_prefix(own).and_then(|rest| rest.strip_prefix('_')) {
                Some(suffix @ ("prev" | "now")) => format!("indicator_{suffix}"),
                _ => f.name.clone(),
            };
            *total.entry(name).or_default() += f.share;
        }
    }
    let mut out: Vec<(String, f64)> = total.into_iter().collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Midpoint of the time span covered by a set of tracks; the cut between
/// training and held-out data.
pub fn recording_midpoint(tracks: &BTreeMap<String, Vec<TrackPoint>>) -> Option<f64> {
    let (lo, hi) = tracks
        .values()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.t), hi.max(p.t)));
    (lo <= hi).then(|| 0.5 * (lo + hi))
}

#[derive(Debug, Clone, Default)]
pub struct ScoreSummary {
    pub rows: Vec<ScoreRow>,
    /// Vehicle rows that had no usable model.
    pub unscored: usize,
}

/// Per-segment actual and predicted risk at every row timestamp. A segment
/// with no vehicles scores zero; an actual score is absent when none of the
/// vehicles present has a known future.
pub fn score_segments(
    site: &Site,
    rows: &[VehicleRow],
    models: &ModelSet,
    horizons: &[u8],
    engine: &mut RiskEngine,
) -> Result<ScoreSummary> {
    let predicted: Vec<BTreeMap<u8, Option<ConflictFlags>>> = rows
        .par_iter()
        .map(|r| horizons.iter().map(|&h| Ok((h, predict_flags(models, r, h)?))).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let mut by_time: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        by_time.entry((r.t / FRAME_PERIOD).round() as i64).or_default().push(i);
    }
    let mut unscored = 0;
    let mut out = Vec::new();
    for (frame, idx) in by_time {
        let t = frame as f64 * FRAME_PERIOD;
        for seg in &site.segments.segments {
            let crashes = seg.crashes_per_year;
            let present: Vec<usize> = idx.iter().copied().filter(|&i| rows[i].segment_id == seg.id).collect();
            let mut score = ScoreRow::new(&seg.id, t);
            for &h in horizons {
                let mut actual = Vec::new();
                let mut pred = Vec::new();
                for &i in &present {
                    if let Some(Some(flags)) = rows[i].labels.get(&h) {
                        actual.push(engine.score(crashes, *flags)?.score);
                    }
                    match predicted[i][&h] {
                        Some(flags) => pred.push(engine.score(crashes, flags)?.score),
                        None => unscored += 1,
                    }
                }
                let actual = if present.is_empty() || !actual.is_empty() { segment_risk(actual) } else { f64::NAN };
                let pred = segment_risk(pred);
                if actual.is_nan() {
                    score.set(h, 0.0, pred)?;
                    match h {
                        1 => (score.actual_1s, score.level_actual_1s) = (None, None),
                        _ => (score.actual_2s, score.level_actual_2s) = (None, None),
                    }
                } else {
                    score.set(h, actual, pred)?;
                }
            }
            out.push(score);
        }
    }
    Ok(ScoreSummary { rows: out, unscored })
}

/// Share of segment-timestamps whose predicted level equals the actual level.
pub fn level_accuracy(rows: &[ScoreRow], horizon: u8) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.pair(horizon)).collect();
    if pairs.is_empty() {
        return None;
    }
    let hits = pairs
        .iter()
        .filter(|(a, p)| crate::risk::bin_level(*a).ok() == crate::risk::bin_level(*p).ok())
        .count();
    Some(hits as f64 / pairs.len() as f64)
}
