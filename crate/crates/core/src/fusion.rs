//! Matching in-vehicle streams to roadside tracks and assembling model input
//! rows.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::driver::{DriverType, DriverWindow};
use crate::error::{Error, Result};
use crate::learn::{Column, ColumnKind};
use crate::tci::Indicator;
use crate::trajectory::{safe_distance, LaneShape, LeaderContext, Shape, TrackPoint};

/// Headway encoded for a vehicle with nobody ahead.
pub const NO_LEADER_HDWY: f64 = 500.0;
/// TTC/MTTC values above this (including "never") are clipped to it.
pub const INDICATOR_CAP: f64 = 100.0;

pub const DEFAULT_MATCH_RADIUS: f64 = 5.0;
pub const DEFAULT_TIME_TOLERANCE: f64 = 0.5;
/// Share of an app stream's fixes that must agree with a track.
pub const MATCH_SHARE: f64 = 0.8;

const EARTH_RADIUS: f64 = 6_371_008.8;

/// Local equirectangular projection about a site origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoOrigin {
    pub lon: f64,
    pub lat: f64,
}

impl GeoOrigin {
    pub fn to_planar(&self, lon: f64, lat: f64) -> (f64, f64) {
        let k = EARTH_RADIUS * std::f64::consts::PI / 180.0;
        ((lon - self.lon) * k * self.lat.to_radians().cos(), (lat - self.lat) * k)
    }

    pub fn to_geo(&self, x: f64, y: f64) -> (f64, f64) {
        let k = EARTH_RADIUS * std::f64::consts::PI / 180.0;
        (self.lon + x / (k * self.lat.to_radians().cos()), self.lat + y / k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fix {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarTrack {
    pub id: String,
    /// Time-ordered fixes.
    pub fixes: Vec<Fix>,
}

impl PlanarTrack {
    pub fn from_points(id: &str, points: &[TrackPoint]) -> Self {
        PlanarTrack {
            id: id.to_string(),
            fixes: points
                .iter()
                .filter_map(|p| p.planar().map(|(x, y)| Fix { t: p.t, x, y }))
                .collect(),
        }
    }

    fn nearest_in_time(&self, t: f64) -> Option<&Fix> {
        let i = self.fixes.partition_point(|f| f.t < t);
        let before = i.checked_sub(1).map(|j| &self.fixes[j]);
        let after = self.fixes.get(i);
        match (before, after) {
            (Some(b), Some(a)) => Some(if (t - b.t) <= (a.t - t) { b } else { a }),
            (b, a) => b.or(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub stream_id: String,
    pub vehicle_id: String,
    pub position_residual: f64,
    pub time_residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub unmatched_streams: Vec<String>,
    pub unmatched_tracks: Vec<String>,
    /// Streams that had more than one candidate track within tolerance.
    pub ambiguous_streams: Vec<String>,
}

impl MatchResult {
    pub fn vehicle_for(&self, stream_id: &str) -> Option<&str> {
        self.pairs.iter().find(|p| p.stream_id == stream_id).map(|p| p.vehicle_id.as_str())
    }

    pub fn stream_for(&self, vehicle_id: &str) -> Option<&str> {
        self.pairs.iter().find(|p| p.vehicle_id == vehicle_id).map(|p| p.stream_id.as_str())
    }
}

fn candidate(stream: &PlanarTrack, track: &PlanarTrack, radius: f64, time_tol: f64) -> Option<MatchPair> {
    if stream.fixes.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut pos_sum = 0.0;
    let mut time_sum = 0.0;
    for fix in &stream.fixes {
        let Some(near) = track.nearest_in_time(fix.t) else { continue };
        let dt = (near.t - fix.t).abs();
        let d = (near.x - fix.x).hypot(near.y - fix.y);
        if dt <= time_tol && d <= radius {
            hits += 1;
            pos_sum += d;
            time_sum += dt;
        }
    }
    if hits == 0 || (hits as f64) < MATCH_SHARE * stream.fixes.len() as f64 {
        return None;
    }
    Some(MatchPair {
        stream_id: stream.id.clone(),
        vehicle_id: track.id.clone(),
        position_residual: pos_sum / hits as f64,
        time_residual: time_sum / hits as f64,
    })
}

/// Pairs app streams with roadside tracks: a pair qualifies when enough of the
/// stream's fixes fall within `radius` meters and `time_tol` seconds of the
/// track; qualifying pairs are then taken greedily by lowest mean residual.
pub fn match_streams(streams: &[PlanarTrack], tracks: &[PlanarTrack], radius: f64, time_tol: f64) -> MatchResult {
    let mut candidates: Vec<MatchPair> = streams
        .iter()
        .flat_map(|s| tracks.iter().filter_map(move |t| candidate(s, t, radius, time_tol)))
        .collect();
    let mut per_stream: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &candidates {
        *per_stream.entry(c.stream_id.as_str()).or_default() += 1;
    }
    let ambiguous_streams = per_stream
        .iter()
        .filter(|(_, &n)| n > 1)
        .map(|(s, _)| s.to_string())
        .collect();
    candidates.sort_by(|a, b| {
        a.position_residual
            .total_cmp(&b.position_residual)
            .then_with(|| a.stream_id.cmp(&b.stream_id))
            .then_with(|| a.vehicle_id.cmp(&b.vehicle_id))
    });
    let mut used_streams = BTreeSet::new();
    let mut used_tracks = BTreeSet::new();
    let mut pairs = Vec::new();
    for c in candidates {
        if used_streams.contains(&c.stream_id) || used_tracks.contains(&c.vehicle_id) {
            continue;
        }
        used_streams.insert(c.stream_id.clone());
        used_tracks.insert(c.vehicle_id.clone());
        pairs.push(c);
    }
    pairs.sort_by(|a, b| a.stream_id.cmp(&b.stream_id));
    let mut unmatched_streams: Vec<String> =
        streams.iter().map(|s| s.id.clone()).filter(|id| !used_streams.contains(id)).collect();
    let mut unmatched_tracks: Vec<String> =
        tracks.iter().map(|t| t.id.clone()).filter(|id| !used_tracks.contains(id)).collect();
    unmatched_streams.sort();
    unmatched_tracks.sort();
    MatchResult {
        pairs,
        unmatched_streams,
        unmatched_tracks,
        ambiguous_streams,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// With in-vehicle driver features.
    Full,
    /// Roadside-observable inputs only.
    Simplified,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Simplified => "simplified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverBlock {
    pub performance: f64,
    pub ear: f64,
    pub mar: f64,
    pub eyes_closed_frac: f64,
    pub on_road: bool,
    pub gaze_cluster: usize,
}

impl From<&DriverWindow> for DriverBlock {
    fn from(w: &DriverWindow) -> Self {
        DriverBlock {
            performance: w.performance,
            ear: w.ear,
            mar: w.mar,
            eyes_closed_frac: w.eyes_closed_frac,
            on_road: w.on_road,
            gaze_cluster: w.gaze_cluster,
        }
    }
}

/// One model input row, grouped by input category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub driver: Option<DriverBlock>,
    pub driver_type: DriverType,
    pub shape: Shape,
    pub is_leading: bool,
    pub in_queue: bool,
    pub heading: f64,
    pub angle_to_front: f64,
    pub hdwy: f64,
    pub safe_distance: f64,
    pub speed: f64,
    pub accel: f64,
    pub delta_v: f64,
    pub indicator: Indicator,
    pub indicator_prev: f64,
    pub indicator_now: f64,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn schema(variant: Variant, indicator: Indicator) -> Vec<Column> {
    use ColumnKind::*;
    let mut cols = Vec::new();
    let mut push = |name: String, kind| cols.push(Column { name, kind });
    if variant == Variant::Full {
        push("performance".into(), Continuous);
        push("ear".into(), Continuous);
        push("mar".into(), Continuous);
        push("eyes_closed_frac".into(), Continuous);
        push("on_road".into(), Binary);
        push("gaze_cluster".into(), Categorical);
    }
    push("type1".into(), Binary);
    push("type2".into(), Binary);
    for shape in Shape::ALL {
        push(format!("road_{}", shape.name()), Binary);
    }
    push("is_leading".into(), Binary);
    push("in_queue".into(), Binary);
    push("heading".into(), Continuous);
    push("angle_to_front".into(), Continuous);
    push("hdwy".into(), Continuous);
    push("safe_distance".into(), Continuous);
    push("speed".into(), Continuous);
    push("accel".into(), Continuous);
    push("delta_v".into(), Continuous);
    push(format!("{}_prev", indicator.name()), Continuous);
    push(format!("{}_now", indicator.name()), Continuous);
    cols
}

/// Comment line documenting sentinel encodings, written above CSV headers.
pub fn sentinel_comment() -> String {
    format!(
        "# sentinels: no leader -> hdwy={NO_LEADER_HDWY}, delta_v=0, angle_to_front=0, is_leading=1; \
         ttc/mttc capped at {INDICATOR_CAP} s (infinite -> {INDICATOR_CAP})"
    )
}

pub fn encode_indicator(indicator: Indicator, value: f64) -> f64 {
    match indicator {
        Indicator::Ttc | Indicator::Mttc => value.min(INDICATOR_CAP),
        Indicator::Drac => value,
    }
}

impl FeatureVector {
    pub fn variant(&self) -> Variant {
        if self.driver.is_some() {
            Variant::Full
        } else {
            Variant::Simplified
        }
    }

    pub fn schema(&self) -> Vec<Column> {
        schema(self.variant(), self.indicator)
    }

    /// Drops the in-vehicle block, keeping the driver type.
    pub fn simplified(&self) -> FeatureVector {
        FeatureVector {
            driver: None,
            ..self.clone()
        }
    }

    pub fn encode(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(24);
        if let Some(d) = &self.driver {
            v.extend([
                d.performance,
                d.ear,
                d.mar,
                d.eyes_closed_frac,
                flag(d.on_road),
                d.gaze_cluster as f64,
            ]);
        }
        v.push(flag(self.driver_type == DriverType::Average));
        v.push(flag(self.driver_type == DriverType::Aggressive));
        for shape in Shape::ALL {
            v.push(flag(self.shape == shape));
        }
        v.extend([
            flag(self.is_leading),
            flag(self.in_queue),
            self.heading,
            self.angle_to_front,
            self.hdwy,
            self.safe_distance,
            self.speed,
            self.accel,
            self.delta_v,
            self.indicator_prev,
            self.indicator_now,
        ]);
        v
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RowInputs<'a> {
    pub point: &'a TrackPoint,
    pub leader: &'a LeaderContext,
    pub lane: &'a LaneShape,
    pub driver: Option<&'a DriverWindow>,
    pub driver_type: DriverType,
    pub lane_changing: bool,
    pub indicator: Indicator,
    /// Indicator values one second ago and now.
    pub history: [Option<f64>; 2],
}

pub fn assemble(inputs: &RowInputs) -> Result<FeatureVector> {
    let [Some(prev), Some(now)] = inputs.history else {
        return Err(Error::NotReady(inputs.point.t));
    };
    let leader = inputs.leader;
    let (is_leading, hdwy, delta_v, delta_angle, in_queue) = if leader.has_leader() {
        (false, leader.gap, leader.delta_v, leader.angle_to_front, leader.in_queue)
    } else {
        (true, NO_LEADER_HDWY, 0.0, 0.0, false)
    };
    Ok(FeatureVector {
        driver: inputs.driver.map(DriverBlock::from),
        driver_type: inputs.driver_type,
        shape: inputs.lane.shape,
        is_leading,
        in_queue,
        heading: inputs.point.heading,
        angle_to_front: delta_angle,
        hdwy,
        safe_distance: safe_distance(inputs.driver_type, inputs.point.speed, inputs.lane_changing),
        speed: inputs.point.speed,
        accel: inputs.point.accel,
        delta_v,
        indicator: inputs.indicator,
        indicator_prev: encode_indicator(inputs.indicator, prev),
        indicator_now: encode_indicator(inputs.indicator, now),
    })
}
