//! Driver-state features from in-vehicle face observations: eye and mouth
//! aspect ratios, focus angles and gaze clusters, expression-based emotion
//! and the emotion-driven performance score, plus the roadside driver type.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

pub const LANDMARK_COUNT: usize = 68;
pub const EAR_THRESHOLD: f64 = 0.26;
pub const MAR_THRESHOLD: f64 = 0.05;
/// 8 mph expressed in m/s.
pub const SPEEDING_MARGIN: f64 = 3.576;
pub const MAX_ACCEL: f64 = 5.0;
pub const MAX_DECEL: f64 = 3.0;
/// Activation an action unit must exceed to count toward an emotion.
pub const AU_ACTIVE: f64 = 0.5;

const RIGHT_EYE: [usize; 6] = [36, 37, 38, 39, 40, 41];
const LEFT_EYE: [usize; 6] = [42, 43, 44, 45, 46, 47];
const MOUTH_CORNERS: (usize, usize) = (60, 64);
const MOUTH_INNER_PAIRS: [(usize, usize); 3] = [(61, 67), (62, 66), (63, 65)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DriverType {
    /// Type 1.
    Average,
    /// Type 2.
    Aggressive,
}

impl DriverType {
    pub fn code(self) -> u8 {
        match self {
            DriverType::Average => 1,
            DriverType::Aggressive => 2,
        }
    }
}

/// Action-unit activations keyed by FACS number. On the wire the keys are
/// strings like `"AU06"`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct ActionUnits(pub BTreeMap<u8, f64>);

impl ActionUnits {
    pub fn get(&self, au: u8) -> f64 {
        self.0.get(&au).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, au: u8, value: f64) {
        self.0.insert(au, value);
    }
}

impl TryFrom<BTreeMap<String, f64>> for ActionUnits {
    type Error = String;

    fn try_from(raw: BTreeMap<String, f64>) -> std::result::Result<Self, String> {
        let mut out = BTreeMap::new();
        for (k, v) in raw {
            let num = k
                .strip_prefix("AU")
                .and_then(|n| n.parse::<u8>().ok())
                .ok_or_else(|| format!("bad action unit key {k:?}"))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{k} activation {v} outside [0, 1]"));
            }
            out.insert(num, v);
        }
        Ok(ActionUnits(out))
    }
}

impl From<ActionUnits> for BTreeMap<String, f64> {
    fn from(aus: ActionUnits) -> Self {
        aus.0.into_iter().map(|(k, v)| (format!("AU{k:02}"), v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceFrame {
    pub t: f64,
    pub landmarks: Vec<Point>,
    pub head_pose: Point,
    pub eye_gaze: Point,
    pub aus: ActionUnits,
    pub gps: Point,
    pub speed: f64,
}

impl FaceFrame {
    pub fn validate(&self) -> Result<()> {
        if self.landmarks.len() != LANDMARK_COUNT {
            return Err(Error::Parse(format!(
                "face frame at t={} has {} landmarks, expected {LANDMARK_COUNT}",
                self.t,
                self.landmarks.len()
            )));
        }
        Ok(())
    }

    fn landmarks_at<const N: usize>(&self, idx: [usize; N]) -> [Point; N] {
        idx.map(|i| self.landmarks[i])
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn focus_angles(head_pose: Point, eye_gaze: Point) -> Point {
    [head_pose[0] + eye_gaze[0], head_pose[1] + eye_gaze[1]]
}

/// Aspect ratio of one eye from its six landmarks `p1..p6` (corner, two upper,
/// corner, two lower).
pub fn eye_aspect_ratio(eye: &[Point; 6]) -> Result<f64> {
    let width = dist(eye[3], eye[0]);
    if width == 0.0 {
        return Err(Error::DegenerateLandmarks("eye corners coincide"));
    }
    Ok((dist(eye[1], eye[5]) + dist(eye[2], eye[4])) / (2.0 * width))
}

/// EAR averaged over both eyes of a 68-point face.
pub fn ear(frame: &FaceFrame) -> Result<f64> {
    frame.validate()?;
    let right = eye_aspect_ratio(&frame.landmarks_at(RIGHT_EYE))?;
    let left = eye_aspect_ratio(&frame.landmarks_at(LEFT_EYE))?;
    Ok(0.5 * (right + left))
}

/// Mean vertical inner-lip gap over mouth width.
pub fn mouth_aspect_ratio(corners: (Point, Point), pairs: &[(Point, Point)]) -> Result<f64> {
    let width = dist(corners.0, corners.1);
    if width == 0.0 || pairs.is_empty() {
        return Err(Error::DegenerateLandmarks("mouth corners coincide"));
    }
    let mean_gap = pairs.iter().map(|&(u, l)| dist(u, l)).sum::<f64>() / pairs.len() as f64;
    Ok(mean_gap / width)
}

pub fn mar(frame: &FaceFrame) -> Result<f64> {
    frame.validate()?;
    let lm = &frame.landmarks;
    let pairs: Vec<(Point, Point)> = MOUTH_INNER_PAIRS.iter().map(|&(u, l)| (lm[u], lm[l])).collect();
    mouth_aspect_ratio((lm[MOUTH_CORNERS.0], lm[MOUTH_CORNERS.1]), &pairs)
}

pub fn eyes_closed(ear: f64) -> bool {
    ear < EAR_THRESHOLD
}

pub fn mouth_open(mar: f64) -> bool {
    mar > MAR_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeModel {
    pub centroids: [Point; 3],
    pub road_cluster: usize,
}

fn sq_dist(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest(centroids: &[Point; 3], p: Point) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if sq_dist(centroids[i], p) < sq_dist(centroids[best], p) {
            best = i;
        }
    }
    best
}

pub const MIN_CALIBRATION_POINTS: usize = 30;

/// Clusters calibration focus points into three groups. The first seed is the
/// point nearest the road reference; the other two are chosen farthest-first.
pub fn fit_gaze_model(points: &[Point], road_reference: Point) -> Result<GazeModel> {
    let mut distinct: Vec<Point> = Vec::new();
    for &p in points {
        if !distinct.contains(&p) {
            distinct.push(p);
            if distinct.len() >= 3 {
                break;
            }
        }
    }
    if distinct.len() < 3 {
        return Err(Error::DegenerateCalibration(format!(
            "need at least 3 distinct focus points, got {}",
            distinct.len()
        )));
    }
    if points.len() < MIN_CALIBRATION_POINTS {
        return Err(Error::DegenerateCalibration(format!(
            "need at least {MIN_CALIBRATION_POINTS} calibration points, got {}",
            points.len()
        )));
    }

    let first = (0..points.len())
        .min_by(|&a, &b| sq_dist(points[a], road_reference).total_cmp(&sq_dist(points[b], road_reference)))
        .unwrap();
    let mut seeds = vec![points[first]];
    while seeds.len() < 3 {
        let next = (0..points.len())
            .max_by(|&a, &b| {
                let da = seeds.iter().map(|&s| sq_dist(s, points[a])).fold(f64::INFINITY, f64::min);
                let db = seeds.iter().map(|&s| sq_dist(s, points[b])).fold(f64::INFINITY, f64::min);
                // max_by keeps the last maximum; reverse index order so ties go to the lowest index.
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .unwrap();
        seeds.push(points[next]);
    }
    let mut centroids = [seeds[0], seeds[1], seeds[2]];

    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (i, &p) in points.iter().enumerate() {
            let c = nearest(&centroids, p);
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = [[0.0f64; 2]; 3];
        let mut counts = [0usize; 3];
        for (i, &p) in points.iter().enumerate() {
            let c = assignment[i];
            sums[c][0] += p[0];
            sums[c][1] += p[1];
            counts[c] += 1;
        }
        for c in 0..3 {
            if counts[c] > 0 {
                centroids[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            }
        }
    }
    let road_cluster = nearest(&centroids, road_reference);
    Ok(GazeModel {
        centroids,
        road_cluster,
    })
}

/// Nearest-centroid assignment; returns the cluster and whether it is the
/// straight-ahead cluster.
pub fn assign_gaze(model: &GazeModel, focus: Point) -> (usize, bool) {
    let c = nearest(&model.centroids, focus);
    (c, c == model.road_cluster)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emotion {
    Happiness,
    Sadness,
    Surprise,
    Fear,
    Anger,
    Calm,
}

impl Emotion {
    pub const ALL: [Emotion; 6] = [
        Emotion::Happiness,
        Emotion::Sadness,
        Emotion::Surprise,
        Emotion::Fear,
        Emotion::Anger,
        Emotion::Calm,
    ];

    /// Action units that together signal the emotion. Calm has none.
    pub fn action_units(self) -> &'static [u8] {
        match self {
            Emotion::Happiness => &[6, 12],
            Emotion::Sadness => &[1, 4, 15],
            Emotion::Surprise => &[1, 2, 5, 26],
            Emotion::Fear => &[1, 4, 5, 20],
            Emotion::Anger => &[4, 5, 7, 23],
            Emotion::Calm => &[],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Happiness => "happiness",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Fear => "fear",
            Emotion::Anger => "anger",
            Emotion::Calm => "calm",
        }
    }
}

pub fn emotion_from_aus(aus: &ActionUnits) -> Emotion {
    let mut best: Option<(Emotion, f64)> = None;
    for emotion in Emotion::ALL {
        let units = emotion.action_units();
        if units.is_empty() || !units.iter().all(|&u| aus.get(u) > AU_ACTIVE) {
            continue;
        }
        let mean = units.iter().map(|&u| aus.get(u)).sum::<f64>() / units.len() as f64;
        if best.map_or(true, |(_, m)| mean > m) {
            best = Some((emotion, mean));
        }
    }
    best.map_or(Emotion::Calm, |(e, _)| e)
}

/// Valence-arousal center of each emotion.
pub fn va_of(emotion: Emotion) -> Point {
    match emotion {
        Emotion::Happiness => [0.23, 0.31],
        Emotion::Sadness => [-0.18, -0.26],
        Emotion::Surprise => [0.37, 0.08],
        Emotion::Fear => [0.21, -0.24],
        Emotion::Anger => [0.36, -0.30],
        Emotion::Calm => [-0.09, -0.11],
    }
}

/// Points of best driving performance on the valence-arousal plane (traffic
/// violations, lane deviation, brake reaction time).
pub const SWEET_POINTS: [Point; 3] = [[0.0, 0.2], [0.0, 0.1], [0.2, 0.2]];
pub const PERFORMANCE_SIGMA: f64 = 0.25;
const GRID_STEP: f64 = 0.001;

/// Sum of isotropic bivariate normal densities centered on sweet points,
/// normalized by its maximum over the `[-1, 1]^2` grid.
#[derive(Debug, Clone)]
pub struct PerformanceModel {
    pub sweet_points: Vec<Point>,
    pub sigma: f64,
    peak: Point,
    peak_value: f64,
}

impl PerformanceModel {
    pub fn new(sweet_points: Vec<Point>, sigma: f64) -> Self {
        let mut model = PerformanceModel {
            sweet_points,
            sigma,
            peak: [0.0, 0.0],
            peak_value: 1.0,
        };
        let steps = (2.0 / GRID_STEP).round() as i64;
        let mut best = ([0.0, 0.0], f64::NEG_INFINITY);
        for i in 0..=steps {
            let v = -1.0 + i as f64 * GRID_STEP;
            for j in 0..=steps {
                let a = -1.0 + j as f64 * GRID_STEP;
                let r = model.raw([v, a]);
                if r > best.1 {
                    best = ([v, a], r);
                }
            }
        }
        model.peak = best.0;
        model.peak_value = best.1;
        model
    }

    pub fn raw(&self, va: Point) -> f64 {
        let var = self.sigma * self.sigma;
        let norm = 1.0 / (2.0 * PI * var);
        self.sweet_points
            .iter()
            .map(|&c| norm * (-sq_dist(va, c) / (2.0 * var)).exp())
            .sum()
    }

    pub fn peak(&self) -> Point {
        self.peak
    }

    pub fn score(&self, va: Point) -> f64 {
        (self.raw(va) / self.peak_value).min(1.0)
    }
}

pub fn default_performance_model() -> &'static PerformanceModel {
    static MODEL: OnceLock<PerformanceModel> = OnceLock::new();
    MODEL.get_or_init(|| PerformanceModel::new(SWEET_POINTS.to_vec(), PERFORMANCE_SIGMA))
}

pub fn performance_score(va: Point) -> f64 {
    default_performance_model().score(va)
}

pub fn classify_driver(speeds: &[f64], accels: &[f64], speed_limit: f64) -> DriverType {
    let max_speed = speeds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_accel = accels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_accel = accels.iter().copied().fold(f64::INFINITY, f64::min);
    if max_speed > speed_limit + SPEEDING_MARGIN || max_accel > MAX_ACCEL || min_accel < -MAX_DECEL {
        DriverType::Aggressive
    } else {
        DriverType::Average
    }
}

/// Running version of [`classify_driver`] for streaming use; once aggressive
/// it stays aggressive.
#[derive(Debug, Clone, Copy)]
pub struct DriverTypeTracker {
    speed_limit: f64,
    current: DriverType,
}

impl DriverTypeTracker {
    pub fn new(speed_limit: f64) -> Self {
        DriverTypeTracker {
            speed_limit,
            current: DriverType::Average,
        }
    }

    pub fn observe(&mut self, speed: f64, accel: f64) -> DriverType {
        if classify_driver(&[speed], &[accel], self.speed_limit) == DriverType::Aggressive {
            self.current = DriverType::Aggressive;
        }
        self.current
    }

    pub fn current(&self) -> DriverType {
        self.current
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverFeatures {
    pub ear: f64,
    pub mar: f64,
    pub eyes_closed: bool,
    pub mouth_open: bool,
    pub focus: Point,
    pub gaze_cluster: usize,
    pub on_road: bool,
    pub emotion: Emotion,
    pub va: Point,
    pub performance: f64,
    pub driver_type: DriverType,
}

pub fn extract_features(frame: &FaceFrame, gaze: &GazeModel, driver_type: DriverType) -> Result<DriverFeatures> {
    let ear = ear(frame)?;
    let mar = mar(frame)?;
    let focus = focus_angles(frame.head_pose, frame.eye_gaze);
    let (gaze_cluster, on_road) = assign_gaze(gaze, focus);
    let emotion = emotion_from_aus(&frame.aus);
    let va = va_of(emotion);
    Ok(DriverFeatures {
        ear,
        mar,
        eyes_closed: eyes_closed(ear),
        mouth_open: mouth_open(mar),
        focus,
        gaze_cluster,
        on_road,
        emotion,
        va,
        performance: performance_score(va),
        driver_type,
    })
}

/// Per-frame features smoothed over a short window (one second in the
/// pipeline).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverWindow {
    pub performance: f64,
    pub ear: f64,
    pub mar: f64,
    pub eyes_closed_frac: f64,
    pub gaze_cluster: usize,
    pub on_road: bool,
}

pub fn aggregate_window(frames: &[DriverFeatures], road_cluster: usize) -> Option<DriverWindow> {
    if frames.is_empty() {
        return None;
    }
    let n = frames.len() as f64;
    let mut votes = [0usize; 3];
    for f in frames {
        votes[f.gaze_cluster.min(2)] += 1;
    }
    let mut gaze_cluster = 0;
    for c in 1..3 {
        if votes[c] > votes[gaze_cluster] {
            gaze_cluster = c;
        }
    }
    Some(DriverWindow {
        performance: frames.iter().map(|f| f.performance).sum::<f64>() / n,
        ear: frames.iter().map(|f| f.ear).sum::<f64>() / n,
        mar: frames.iter().map(|f| f.mar).sum::<f64>() / n,
        eyes_closed_frac: frames.iter().filter(|f| f.eyes_closed).count() as f64 / n,
        gaze_cluster,
        on_road: gaze_cluster == road_cluster,
    })
}

pub fn read_face_frames<R: BufRead>(reader: R) -> Result<Vec<FaceFrame>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: FaceFrame = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("face frame line {}: {e}", lineno + 1)))?;
        frame.validate()?;
        out.push(frame);
    }
    Ok(out)
}

pub fn write_face_frames<W: Write>(mut writer: W, frames: &[FaceFrame]) -> Result<()> {
    for f in frames {
        serde_json::to_writer(&mut writer, f)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// One line of a gaze calibration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CalibrationLine {
    Point(Point),
    RoadReference(Point),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub points: Vec<Point>,
    pub road_reference: Point,
}

impl Calibration {
    pub fn fit(&self) -> Result<GazeModel> {
        fit_gaze_model(&self.points, self.road_reference)
    }
}

pub fn read_calibration<R: BufRead>(reader: R) -> Result<Calibration> {
    let mut points = Vec::new();
    let mut road = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("calibration line {}: {e}", lineno + 1)))?
        {
            CalibrationLine::Point(p) => points.push(p),
            CalibrationLine::RoadReference(p) => road = Some(p),
        }
    }
    let road_reference = road.ok_or_else(|| Error::Parse("calibration file lacks a road_reference line".into()))?;
    Ok(Calibration { points, road_reference })
}

pub fn write_calibration<W: Write>(mut writer: W, cal: &Calibration) -> Result<()> {
    serde_json::to_writer(&mut writer, &CalibrationLine::RoadReference(cal.road_reference))?;
    writer.write_all(b"\n")?;
    for &p in &cal.points {
        serde_json::to_writer(&mut writer, &CalibrationLine::Point(p))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eye(vertical: [f64; 2], width: f64) -> [Point; 6] {
        [
            [0.0, 0.0],
            [width / 3.0, vertical[0] / 2.0],
            [2.0 * width / 3.0, vertical[1] / 2.0],
            [width, 0.0],
            [2.0 * width / 3.0, -vertical[1] / 2.0],
            [width / 3.0, -vertical[0] / 2.0],
        ]
    }

    #[test]
    fn focus_angle_examples() {
        assert_eq!(focus_angles([0.0, 0.0], [0.0, 0.0]), [0.0, 0.0]);
        let f = focus_angles([0.2, 0.0], [0.1, -0.05]);
        assert!((f[0] - 0.3).abs() < 1e-15 && (f[1] + 0.05).abs() < 1e-15);
        assert_eq!(focus_angles([-0.1, 0.1], [0.1, -0.1]), [0.0, 0.0]);
    }

    #[test]
    fn ear_examples() {
        let closed = eye_aspect_ratio(&eye([2.0, 2.0], 8.0)).unwrap();
        assert_eq!(closed, 0.25);
        assert!(eyes_closed(closed));
        let open = eye_aspect_ratio(&eye([3.0, 3.0], 10.0)).unwrap();
        assert!((open - 0.30).abs() < 1e-15);
        assert!(!eyes_closed(open));
        let shut = eye_aspect_ratio(&eye([0.0, 0.0], 10.0)).unwrap();
        assert_eq!(shut, 0.0);
        assert!(eyes_closed(shut));
    }

    #[test]
    fn ear_degenerate() {
        let mut e = eye([1.0, 1.0], 5.0);
        e[3] = e[0];
        assert!(matches!(eye_aspect_ratio(&e), Err(Error::DegenerateLandmarks(_))));
    }

    #[test]
    fn ear_threshold_is_exact() {
        assert!(eyes_closed(EAR_THRESHOLD - 1e-9));
        assert!(!eyes_closed(EAR_THRESHOLD));
        assert!(!eyes_closed(EAR_THRESHOLD + 1e-9));
        assert!(mouth_open(MAR_THRESHOLD + 1e-9));
        assert!(!mouth_open(MAR_THRESHOLD));
    }

    #[test]
    fn mar_examples() {
        let corners = ([0.0, 0.0], [10.0, 0.0]);
        let closed = mouth_aspect_ratio(corners, &[([3.0, 0.0], [3.0, 0.0]), ([7.0, 0.0], [7.0, 0.0])]).unwrap();
        assert_eq!(closed, 0.0);
        assert!(!mouth_open(closed));
        let open = mouth_aspect_ratio(corners, &[([3.0, 0.5], [3.0, -0.5]), ([7.0, 0.5], [7.0, -0.5])]).unwrap();
        assert!((open - 0.10).abs() < 1e-15);
        assert!(mouth_open(open));
        let slight = mouth_aspect_ratio(corners, &[([3.0, 0.1], [3.0, -0.1]), ([7.0, 0.1], [7.0, -0.1])]).unwrap();
        assert!((slight - 0.02).abs() < 1e-15);
        assert!(!mouth_open(slight));
        assert!(mouth_aspect_ratio(([1.0, 1.0], [1.0, 1.0]), &[([0.0, 0.0], [0.0, 1.0])]).is_err());
    }

    fn blob(rng: &mut ChaCha8Rng, center: Point, n: usize, spread: f64) -> Vec<Point> {
        (0..n)
            .map(|_| [center[0] + rng.gen_range(-spread..spread), center[1] + rng.gen_range(-spread..spread)])
            .collect()
    }

    fn mean(points: &[Point]) -> Point {
        let n = points.len() as f64;
        [points.iter().map(|p| p[0]).sum::<f64>() / n, points.iter().map(|p| p[1]).sum::<f64>() / n]
    }

    fn check_blobs(sizes: [usize; 3], tol: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let centers = [[0.0, 0.0], [0.5, 0.0], [-0.5, -0.3]];
        let blobs: Vec<Vec<Point>> = centers.iter().zip(sizes).map(|(&c, n)| blob(&mut rng, c, n, 0.03)).collect();
        let all: Vec<Point> = blobs.iter().flatten().copied().collect();
        let model = fit_gaze_model(&all, [0.0, 0.0]).unwrap();
        for b in &blobs {
            let m = mean(b);
            let closest = model.centroids.iter().map(|&c| sq_dist(c, m).sqrt()).fold(f64::INFINITY, f64::min);
            assert!(closest < tol, "blob mean {m:?} far from centroids {:?}", model.centroids);
        }
        let road = model.centroids[model.road_cluster];
        assert!(sq_dist(road, mean(&blobs[0])).sqrt() < tol);
    }

    #[test]
    fn gaze_model_recovers_blobs() {
        check_blobs([20, 20, 20], 0.02);
    }

    #[test]
    fn gaze_model_unequal_blobs() {
        check_blobs([40, 10, 10], 0.05);
    }

    #[test]
    fn gaze_model_rejects_identical_points() {
        assert!(matches!(
            fit_gaze_model(&vec![[0.1, 0.1]; 40], [0.0, 0.0]),
            Err(Error::DegenerateCalibration(_))
        ));
    }

    #[test]
    fn gaze_assignment() {
        let model = GazeModel { centroids: [[0.0, 0.0], [0.5, 0.0], [-0.5, -0.3]], road_cluster: 0 };
        assert_eq!(assign_gaze(&model, [0.0, 0.0]), (0, true));
        assert_eq!(assign_gaze(&model, [0.5, 0.0]), (1, false));
        assert_eq!(assign_gaze(&model, [0.25, 0.0]).0, 0);
        for i in 0..3 {
            assert_eq!(assign_gaze(&model, model.centroids[i]).0, i);
        }
    }

    #[test]
    fn emotion_rules() {
        let mut aus = ActionUnits::default();
        aus.set(6, 0.9);
        aus.set(12, 0.8);
        assert_eq!(emotion_from_aus(&aus), Emotion::Happiness);
        assert_eq!(emotion_from_aus(&ActionUnits::default()), Emotion::Calm);
        let mut aus = ActionUnits::default();
        for u in [1, 4, 15] {
            aus.set(u, 0.9);
        }
        assert_eq!(emotion_from_aus(&aus), Emotion::Sadness);
        // Exactly 0.5 does not exceed the activation bar.
        let mut aus = ActionUnits::default();
        aus.set(6, 0.5);
        aus.set(12, 0.9);
        assert_eq!(emotion_from_aus(&aus), Emotion::Calm);
    }

    #[test]
    fn strongest_match_wins() {
        let mut aus = ActionUnits::default();
        aus.set(6, 0.6);
        aus.set(12, 0.6);
        for u in [1, 4, 15] {
            aus.set(u, 0.95);
        }
        assert_eq!(emotion_from_aus(&aus), Emotion::Sadness);
    }

    #[test]
    fn action_unit_wire_keys() {
        let json = r#"{"AU06":0.9,"AU12":0.8}"#;
        let aus: ActionUnits = serde_json::from_str(json).unwrap();
        assert_eq!(aus.get(6), 0.9);
        assert_eq!(serde_json::to_string(&aus).unwrap(), json);
        assert!(serde_json::from_str::<ActionUnits>(r#"{"AU06":1.5}"#).is_err());
        assert!(serde_json::from_str::<ActionUnits>(r#"{"smile":0.5}"#).is_err());
    }

    #[test]
    fn va_table() {
        assert_eq!(va_of(Emotion::Happiness), [0.23, 0.31]);
        assert_eq!(va_of(Emotion::Calm), [-0.09, -0.11]);
        assert_eq!(va_of(Emotion::Anger), [0.36, -0.30]);
    }

    #[test]
    fn performance_normalization() {
        let model = default_performance_model();
        assert_eq!(model.score(model.peak()), 1.0);
        assert!(performance_score([0.0, 0.15]) > performance_score([0.36, -0.30]));
        for v in [-1.0, -0.3, 0.0, 0.4, 1.0] {
            for a in [-1.0, -0.5, 0.2, 1.0] {
                let s = performance_score([v, a]);
                assert!(s > 0.0 && s <= 1.0);
            }
        }
    }

    #[test]
    fn performance_reflection_symmetry() {
        let base = default_performance_model();
        let mirrored = PerformanceModel {
            sweet_points: base.sweet_points.iter().map(|p| [-p[0], p[1]]).collect(),
            ..base.clone()
        };
        for va in [[0.1, 0.2], [-0.4, 0.3], [0.7, -0.6]] {
            assert!((mirrored.raw([-va[0], va[1]]) - base.raw(va)).abs() < 1e-12);
        }
    }

    #[test]
    fn driver_type_rules() {
        assert_eq!(classify_driver(&[12.0, 13.0], &[-2.0, 2.0], 13.4), DriverType::Average);
        assert_eq!(classify_driver(&[10.0], &[5.5], 13.4), DriverType::Aggressive);
        assert_eq!(classify_driver(&[10.0], &[-3.5], 13.4), DriverType::Aggressive);
        assert_eq!(classify_driver(&[13.4 + SPEEDING_MARGIN], &[0.0], 13.4), DriverType::Average);
        assert_eq!(classify_driver(&[13.4 + SPEEDING_MARGIN + 0.01], &[0.0], 13.4), DriverType::Aggressive);
    }

    #[test]
    fn window_aggregation() {
        let f = |ear: f64, cluster: usize| DriverFeatures {
            ear,
            mar: 0.0,
            eyes_closed: eyes_closed(ear),
            mouth_open: false,
            focus: [0.0, 0.0],
            gaze_cluster: cluster,
            on_road: cluster == 0,
            emotion: Emotion::Calm,
            va: va_of(Emotion::Calm),
            performance: 0.5,
            driver_type: DriverType::Average,
        };
        let w = aggregate_window(&[f(0.3, 0), f(0.1, 1), f(0.3, 1), f(0.3, 0), f(0.3, 1)], 0).unwrap();
        assert_eq!(w.gaze_cluster, 1);
        assert!(!w.on_road);
        assert!((w.eyes_closed_frac - 0.2).abs() < 1e-12);
        assert!(aggregate_window(&[], 0).is_none());
    }

    #[test]
    fn calibration_roundtrip() {
        let cal = Calibration { points: vec![[0.1, 0.2], [0.3, -0.1]], road_reference: [0.0, 0.0] };
        let mut buf = Vec::new();
        write_calibration(&mut buf, &cal).unwrap();
        assert_eq!(read_calibration(&buf[..]).unwrap(), cal);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ear_rigid_invariance(theta in -PI..PI, scale in 0.1f64..10.0, tx in -5.0f64..5.0, ty in -5.0f64..5.0,
                                    v1 in 0.0f64..4.0, v2 in 0.0f64..4.0, w in 1.0f64..12.0) {
                let e = eye([v1, v2], w);
                let (s, c) = theta.sin_cos();
                let moved = e.map(|p| [scale * (c * p[0] - s * p[1]) + tx, scale * (s * p[0] + c * p[1]) + ty]);
                let a = eye_aspect_ratio(&e).unwrap();
                let b = eye_aspect_ratio(&moved).unwrap();
                prop_assert!((a - b).abs() < 1e-9);
            }

            #[test]
            fn driver_type_is_monotone(speeds in proptest::collection::vec(0.0f64..30.0, 1..20),
                                       accels in proptest::collection::vec(-6.0f64..6.0, 1..20),
                                       extra_v in 0.0f64..30.0, extra_a in -6.0f64..6.0) {
                if classify_driver(&speeds, &accels, 13.4) == DriverType::Aggressive {
                    let mut s = speeds.clone();
                    s.push(extra_v);
                    let mut a = accels.clone();
                    a.push(extra_a);
                    prop_assert_eq!(classify_driver(&s, &a, 13.4), DriverType::Aggressive);
                }
            }
        }
    }
}
