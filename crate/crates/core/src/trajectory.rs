//! Vehicle tracks, finite-difference kinematics, leader lookup and the
//! lane/segment geometry the rest of the pipeline keys on.
//!
//! Positions are longitudinal along a lane, measured at the front bumper.
//! Planar `x`/`y` coordinates are optional and only used for the angle to the
//! vehicle in front and for GPS matching.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::driver::DriverType;
use crate::error::{Error, Result};

/// Roadside sampling period (20 frames per second).
pub const FRAME_PERIOD: f64 = 0.05;

/// Standstill distance used by [`safe_distance`].
pub const STANDSTILL_DISTANCE: f64 = 2.0;
pub const HEADWAY_TYPE1: f64 = 1.5;
pub const HEADWAY_TYPE2: f64 = 0.9;
pub const LANE_CHANGE_REDUCTION: f64 = 0.6;
/// Lower bound of the queue threshold in meters.
pub const MIN_QUEUE_GAP: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub vehicle_id: String,
    pub t: f64,
    pub s: f64,
    pub lane_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_id: Option<String>,
    pub heading: f64,
    pub speed: f64,
    pub accel: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

impl TrackPoint {
    pub fn planar(&self) -> Option<(f64, f64)> {
        Some((self.x?, self.y?))
    }

    /// Integer frame index of this sample.
    pub fn frame(&self) -> i64 {
        (self.t / FRAME_PERIOD).round() as i64
    }
}

/// Wire form of a track sample; speed and acceleration may be left out and
/// are then recovered from positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackRecord {
    pub vehicle_id: String,
    pub t: f64,
    pub s: f64,
    pub lane_id: String,
    pub heading: f64,
    #[serde(default)]
    pub speed: Option<f64>,
    #[serde(default)]
    pub accel: Option<f64>,
    #[serde(default)]
    pub segment_id: Option<String>,
    #[serde(default)]
    pub x: Option<f64>,
    #[serde(default)]
    pub y: Option<f64>,
}

impl From<&TrackPoint> for TrackRecord {
    fn from(p: &TrackPoint) -> Self {
        TrackRecord {
            vehicle_id: p.vehicle_id.clone(),
            t: p.t,
            s: p.s,
            lane_id: p.lane_id.clone(),
            heading: p.heading,
            speed: Some(p.speed),
            accel: Some(p.accel),
            segment_id: p.segment_id.clone(),
            x: p.x,
            y: p.y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Straight,
    LeftTurn,
    RightTurn,
    Merge,
    Diverge,
}

impl Shape {
    pub const ALL: [Shape; 5] = [
        Shape::Straight,
        Shape::LeftTurn,
        Shape::RightTurn,
        Shape::Merge,
        Shape::Diverge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Straight => "straight",
            Shape::LeftTurn => "left_turn",
            Shape::RightTurn => "right_turn",
            Shape::Merge => "merge",
            Shape::Diverge => "diverge",
        }
    }

    pub fn index(self) -> usize {
        Shape::ALL.iter().position(|&s| s == self).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneShape {
    pub lane_id: String,
    pub shape: Shape,
    pub speed_limit: f64,
    pub length: f64,
    /// Lane closes on itself (ring road); positions wrap at `length`.
    #[serde(default)]
    pub closed_loop: bool,
}

impl LaneShape {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) {
            return Err(Error::Config(format!("lane {}: length must be positive", self.lane_id)));
        }
        if !(self.speed_limit > 0.0) {
            return Err(Error::Config(format!(
                "lane {}: speed_limit must be positive",
                self.lane_id
            )));
        }
        Ok(())
    }

    pub fn loop_length(&self) -> Option<f64> {
        self.closed_loop.then_some(self.length)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub id: String,
    pub lanes: Vec<String>,
    /// Half-open interval `[start, end)` along each listed lane.
    pub start: f64,
    pub end: f64,
    pub crashes_per_year: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentMap {
    pub segments: Vec<Segment>,
}

impl SegmentMap {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let map = SegmentMap { segments };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        let mut per_lane: BTreeMap<&str, Vec<(f64, f64, &str)>> = BTreeMap::new();
        for seg in &self.segments {
            if !(seg.end > seg.start) {
                return Err(Error::Config(format!("segment {}: empty interval", seg.id)));
            }
            if !(seg.crashes_per_year >= 0.0) {
                return Err(Error::Config(format!(
                    "segment {}: crashes_per_year must be nonnegative",
                    seg.id
                )));
            }
            for lane in &seg.lanes {
                per_lane.entry(lane).or_default().push((seg.start, seg.end, &seg.id));
            }
        }
        for (lane, mut spans) in per_lane {
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            for pair in spans.windows(2) {
                if pair[1].0 < pair[0].1 {
                    return Err(Error::Config(format!(
                        "segments {} and {} overlap on lane {lane}",
                        pair[0].2, pair[1].2
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }

    pub fn crashes(&self, id: &str) -> Option<f64> {
        self.get(id).map(|s| s.crashes_per_year)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().map(|s| s.id.as_str())
    }
}

/// Returns the segment covering `s` on `lane_id`.
pub fn segment_of<'a>(map: &'a SegmentMap, lane_id: &str, s: f64) -> Result<&'a str> {
    map.segments
        .iter()
        .find(|seg| s >= seg.start && s < seg.end && seg.lanes.iter().any(|l| l == lane_id))
        .map(|seg| seg.id.as_str())
        .ok_or_else(|| Error::NoSegment {
            lane_id: lane_id.to_string(),
            s,
        })
}

/// Derivative at `at` of the quadratic through three samples.
fn three_point_derivative(t: [f64; 3], y: [f64; 3], at: f64) -> f64 {
    let [t0, t1, t2] = t;
    let [y0, y1, y2] = y;
    y0 * (2.0 * at - t1 - t2) / ((t0 - t1) * (t0 - t2))
        + y1 * (2.0 * at - t0 - t2) / ((t1 - t0) * (t1 - t2))
        + y2 * (2.0 * at - t0 - t1) / ((t2 - t0) * (t2 - t1))
}

fn differentiate(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|i| {
            // Central stencil inside, one-sided at either end.
            let c = i.clamp(1, n - 2);
            three_point_derivative([t[c - 1], t[c], t[c + 1]], [y[c - 1], y[c], y[c + 1]], t[i])
        })
        .collect()
}

/// Speed and acceleration at every sample of a position series.
pub fn kinematics_series(samples: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "kinematics needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let t: Vec<f64> = samples.iter().map(|p| p.0).collect();
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InsufficientData(
            "sample times must be strictly increasing".into(),
        ));
    }
    let s: Vec<f64> = samples.iter().map(|p| p.1).collect();
    let speed = differentiate(&t, &s);
    let accel = differentiate(&t, &speed);
    Ok(speed.into_iter().zip(accel).collect())
}

/// Speed and acceleration at time `t`, interpolated linearly between samples.
pub fn kinematics_at(samples: &[(f64, f64)], t: f64) -> Result<(f64, f64)> {
    let series = kinematics_series(samples)?;
    let first = samples[0].0;
    let last = samples[samples.len() - 1].0;
    if t < first || t > last {
        return Err(Error::InsufficientData(format!(
            "t={t} outside sample range [{first}, {last}]"
        )));
    }
    let idx = samples.partition_point(|p| p.0 < t);
    if idx < samples.len() && samples[idx].0 == t {
        return Ok(series[idx]);
    }
    let (t0, t1) = (samples[idx - 1].0, samples[idx].0);
    let w = (t - t0) / (t1 - t0);
    let (v0, a0) = series[idx - 1];
    let (v1, a1) = series[idx];
    Ok((v0 + w * (v1 - v0), a0 + w * (a1 - a0)))
}

/// Recovers missing speed/accel on a single vehicle's records and attaches
/// segment ids from the map when one is given.
pub fn resolve_track(records: &[TrackRecord], map: Option<&SegmentMap>) -> Result<Vec<TrackPoint>> {
    let needs_kinematics = records.iter().any(|r| r.speed.is_none() || r.accel.is_none());
    let series = if needs_kinematics {
        let samples: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.s)).collect();
        Some(kinematics_series(&samples)?)
    } else {
        None
    };
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (v, a) = series.as_ref().map_or((0.0, 0.0), |s| s[i]);
            let segment_id = match (&r.segment_id, map) {
                (Some(id), _) => Some(id.clone()),
                (None, Some(map)) => segment_of(map, &r.lane_id, r.s).ok().map(str::to_string),
                (None, None) => None,
            };
            Ok(TrackPoint {
                vehicle_id: r.vehicle_id.clone(),
                t: r.t,
                s: r.s,
                lane_id: r.lane_id.clone(),
                segment_id,
                heading: r.heading,
                speed: r.speed.unwrap_or(v).max(0.0),
                accel: r.accel.unwrap_or(a),
                x: r.x,
                y: r.y,
            })
        })
        .collect()
}

/// Minimum comfortable following distance for a driver.
pub fn safe_distance(driver_type: DriverType, speed: f64, lane_changing: bool) -> f64 {
    let tau = match driver_type {
        DriverType::Average => HEADWAY_TYPE1,
        DriverType::Aggressive => HEADWAY_TYPE2,
    };
    let base = STANDSTILL_DISTANCE + tau * speed.max(0.0);
    if lane_changing {
        base * LANE_CHANGE_REDUCTION
    } else {
        base
    }
}

pub fn queue_threshold(driver_type: DriverType, speed: f64, lane_changing: bool) -> f64 {
    (2.0 * safe_distance(driver_type, speed, lane_changing)).max(MIN_QUEUE_GAP)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderContext {
    pub leader_id: Option<String>,
    pub gap: f64,
    pub delta_v: f64,
    pub delta_a: f64,
    pub angle_to_front: f64,
    pub in_queue: bool,
}

impl LeaderContext {
    pub fn none() -> Self {
        LeaderContext {
            leader_id: None,
            gap: f64::INFINITY,
            delta_v: 0.0,
            delta_a: 0.0,
            angle_to_front: 0.0,
            in_queue: false,
        }
    }

    pub fn has_leader(&self) -> bool {
        self.leader_id.is_some()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LeaderOptions {
    pub driver_type: DriverType,
    pub lane_changing: bool,
    /// Wrap length for closed-loop lanes.
    pub loop_length: Option<f64>,
}

impl Default for LeaderOptions {
    fn default() -> Self {
        LeaderOptions {
            driver_type: DriverType::Average,
            lane_changing: false,
            loop_length: None,
        }
    }
}

/// Wraps an angle to `(-PI, PI]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

fn gap_ahead(follower: f64, other: f64, loop_length: Option<f64>) -> f64 {
    match loop_length {
        Some(len) => (other - follower).rem_euclid(len),
        None => other - follower,
    }
}

/// Nearest vehicle ahead of `follower` in the same lane among `points`
/// (all observed at one instant).
pub fn find_leader(points: &[TrackPoint], follower: &TrackPoint, opts: &LeaderOptions) -> LeaderContext {
    find_leader_among(points, follower, opts)
}

/// [`find_leader`] over any collection of borrowed points.
pub fn find_leader_among<'a>(
    points: impl IntoIterator<Item = &'a TrackPoint>,
    follower: &TrackPoint,
    opts: &LeaderOptions,
) -> LeaderContext {
    let leader = points
        .into_iter()
        .filter(|p| p.lane_id == follower.lane_id && p.vehicle_id != follower.vehicle_id)
        .map(|p| (gap_ahead(follower.s, p.s, opts.loop_length), p))
        .filter(|(gap, _)| *gap > 0.0)
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.vehicle_id.cmp(&b.1.vehicle_id)));
    let Some((gap, leader)) = leader else {
        return LeaderContext::none();
    };
    let angle_to_front = match (follower.planar(), leader.planar()) {
        (Some((fx, fy)), Some((lx, ly))) if (lx - fx).hypot(ly - fy) > 0.0 => {
            wrap_angle((ly - fy).atan2(lx - fx) - follower.heading)
        }
        _ => 0.0,
    };
    LeaderContext {
        leader_id: Some(leader.vehicle_id.clone()),
        gap,
        delta_v: follower.speed - leader.speed,
        delta_a: follower.accel - leader.accel,
        angle_to_front,
        in_queue: gap < queue_threshold(opts.driver_type, follower.speed, opts.lane_changing),
    }
}

pub fn read_track_records<R: BufRead>(reader: R) -> Result<Vec<TrackRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrackRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("track line {}: {e}", lineno + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_track_points<W: Write>(mut writer: W, points: &[TrackPoint]) -> Result<()> {
    for p in points {
        serde_json::to_writer(&mut writer, &TrackRecord::from(p))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Groups records by vehicle, sorted by time, and resolves kinematics.
pub fn resolve_records(records: Vec<TrackRecord>, map: Option<&SegmentMap>) -> Result<BTreeMap<String, Vec<TrackPoint>>> {
    let mut grouped: BTreeMap<String, Vec<TrackRecord>> = BTreeMap::new();
    for r in records {
        grouped.entry(r.vehicle_id.clone()).or_default().push(r);
    }
    let mut out = BTreeMap::new();
    for (id, mut recs) in grouped {
        recs.sort_by(|a, b| a.t.total_cmp(&b.t));
        out.insert(id, resolve_track(&recs, map)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(id: &str, lane: &str, s: f64, v: f64) -> TrackPoint {
        TrackPoint {
            vehicle_id: id.into(),
            t: 0.0,
            s,
            lane_id: lane.into(),
            segment_id: None,
            heading: 0.0,
            speed: v,
            accel: 0.0,
            x: None,
            y: None,
        }
    }

    fn sampled(f: impl Fn(f64) -> f64, n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|i| {
            let t = i as f64 * FRAME_PERIOD;
            (t, f(t))
        }).collect()
    }

    #[test]
    fn stationary_vehicle() {
        let samples = sampled(|_| 50.0, 10);
        for (v, a) in kinematics_series(&samples).unwrap() {
            assert!(v.abs() < 1e-9);
            assert!(a.abs() < 1e-9);
        }
    }

    #[test]
    fn one_meter_per_frame_is_twenty_mps() {
        let samples: Vec<_> = (0..10).map(|i| (i as f64 * 0.05, i as f64)).collect();
        let (v, a) = kinematics_at(&samples, 0.2).unwrap();
        assert!((v - 20.0).abs() < 1e-9);
        assert!(a.abs() < 1e-6);
    }

    #[test]
    fn quadratic_track_has_constant_accel() {
        let samples = sampled(|t| 0.5 * 2.0 * t * t, 40);
        let series = kinematics_series(&samples).unwrap();
        for (v, a) in &series[1..series.len() - 1] {
            assert!((a - 2.0).abs() < 1e-6, "accel {a}");
            assert!(v.is_finite());
        }
        let (v, _) = kinematics_at(&samples, 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-6);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            kinematics_at(&[(0.0, 0.0), (0.05, 1.0)], 0.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn out_of_range_time() {
        let samples = sampled(|t| t, 5);
        assert!(kinematics_at(&samples, 10.0).is_err());
    }

    #[test]
    fn lone_vehicle_has_no_leader() {
        let f = point("a", "L0", 10.0, 10.0);
        let ctx = find_leader(&[f.clone()], &f, &LeaderOptions::default());
        assert!(ctx.leader_id.is_none());
    }

    #[test]
    fn leader_gap_and_speed_difference() {
        let f = point("f", "L0", 70.0, 20.0);
        let l = point("l", "L0", 100.0, 10.0);
        let ctx = find_leader(&[f.clone(), l], &f, &LeaderOptions::default());
        assert_eq!(ctx.leader_id.as_deref(), Some("l"));
        assert_eq!(ctx.gap, 30.0);
        assert_eq!(ctx.delta_v, 10.0);
    }

    #[test]
    fn nearest_of_two_candidates() {
        let f = point("f", "L0", 70.0, 20.0);
        let pts = vec![point("far", "L0", 120.0, 0.0), point("near", "L0", 100.0, 0.0), f.clone(), point("other_lane", "L1", 80.0, 0.0)];
        let ctx = find_leader(&pts, &f, &LeaderOptions::default());
        assert_eq!(ctx.leader_id.as_deref(), Some("near"));
    }

    #[test]
    fn loop_wraps_around() {
        let f = point("f", "L0", 790.0, 20.0);
        let l = point("l", "L0", 10.0, 20.0);
        let opts = LeaderOptions { loop_length: Some(800.0), ..Default::default() };
        let ctx = find_leader(&[f.clone(), l], &f, &opts);
        assert!((ctx.gap - 20.0).abs() < 1e-9);
    }

    #[test]
    fn angle_to_front_uses_planar_positions() {
        let mut f = point("f", "L0", 0.0, 10.0);
        f.x = Some(0.0);
        f.y = Some(0.0);
        f.heading = 0.0;
        let mut l = point("l", "L0", 10.0, 10.0);
        l.x = Some(10.0);
        l.y = Some(10.0);
        let ctx = find_leader(&[f.clone(), l], &f, &LeaderOptions::default());
        assert!((ctx.angle_to_front - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn queue_flag() {
        let f = point("f", "L0", 0.0, 0.0);
        let l = point("l", "L0", 10.0, 0.0);
        assert!(find_leader(&[f.clone(), l], &f, &LeaderOptions::default()).in_queue);
        let l = point("l", "L0", 16.0, 0.0);
        assert!(!find_leader(&[f.clone(), l], &f, &LeaderOptions::default()).in_queue);
    }

    #[test]
    fn safe_distance_examples() {
        assert_eq!(safe_distance(DriverType::Average, 0.0, false), 2.0);
        assert_eq!(safe_distance(DriverType::Average, 20.0, false), 32.0);
        assert!((safe_distance(DriverType::Aggressive, 20.0, true) - 12.0).abs() < 1e-12);
    }

    fn map() -> SegmentMap {
        SegmentMap::new(vec![
            Segment { id: "A".into(), lanes: vec!["L0".into()], start: 0.0, end: 50.0, crashes_per_year: 1.0 },
            Segment { id: "B".into(), lanes: vec!["L0".into()], start: 50.0, end: 100.0, crashes_per_year: 1.0 },
        ])
        .unwrap()
    }

    #[test]
    fn segment_lookup() {
        let m = map();
        assert_eq!(segment_of(&m, "L0", 5.0).unwrap(), "A");
        assert_eq!(segment_of(&m, "L0", 50.0).unwrap(), "B");
        assert!(matches!(segment_of(&m, "L0", 200.0), Err(Error::NoSegment { .. })));
        assert!(segment_of(&m, "L9", 5.0).is_err());
    }

    #[test]
    fn overlapping_segments_rejected() {
        let err = SegmentMap::new(vec![
            Segment { id: "A".into(), lanes: vec!["L0".into()], start: 0.0, end: 60.0, crashes_per_year: 0.0 },
            Segment { id: "B".into(), lanes: vec!["L0".into()], start: 50.0, end: 100.0, crashes_per_year: 0.0 },
        ]);
        assert!(err.is_err());
    }

    #[test]
    fn records_without_kinematics_are_resolved() {
        let recs: Vec<TrackRecord> = (0..20)
            .map(|i| TrackRecord {
                vehicle_id: "v".into(),
                t: i as f64 * 0.05,
                s: i as f64 * 0.5,
                lane_id: "L0".into(),
                heading: 0.0,
                speed: None,
                accel: None,
                segment_id: None,
                x: None,
                y: None,
            })
            .collect();
        let pts = resolve_track(&recs, Some(&map())).unwrap();
        assert!((pts[5].speed - 10.0).abs() < 1e-9);
        assert_eq!(pts[5].segment_id.as_deref(), Some("A"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn constant_speed_is_recovered(v in 0.0f64..40.0, s0 in -100.0f64..100.0, n in 3usize..60) {
                let samples = sampled(|t| s0 + v * t, n);
                let series = kinematics_series(&samples).unwrap();
                for (speed, _) in &series[1..n - 1] {
                    prop_assert!((speed - v).abs() < 1e-9);
                }
            }

            #[test]
            fn leader_is_antisymmetric(positions in proptest::collection::vec(0.0f64..500.0, 2..12)) {
                let pts: Vec<TrackPoint> = positions.iter().enumerate()
                    .map(|(i, &s)| point(&format!("v{i}"), "L0", s, 10.0)).collect();
                let opts = LeaderOptions::default();
                for f in &pts {
                    let ctx = find_leader(&pts, f, &opts);
                    if let Some(lid) = &ctx.leader_id {
                        let l = pts.iter().find(|p| &p.vehicle_id == lid).unwrap();
                        prop_assert_eq!(ctx.gap, l.s - f.s);
                        let back = find_leader(&pts, l, &opts);
                        prop_assert_ne!(back.leader_id.as_deref(), Some(f.vehicle_id.as_str()));
                    }
                }
            }

            #[test]
            fn safe_distance_ordering(v1 in 0.0f64..50.0, dv in 0.0f64..10.0, lc: bool) {
                for ty in [DriverType::Average, DriverType::Aggressive] {
                    prop_assert!(safe_distance(ty, v1 + dv, lc) >= safe_distance(ty, v1, lc));
                }
                if v1 > 0.0 {
                    prop_assert!(safe_distance(DriverType::Aggressive, v1, lc) < safe_distance(DriverType::Average, v1, lc));
                }
            }
        }
    }
}
