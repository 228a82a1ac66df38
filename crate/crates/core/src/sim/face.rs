//! Scripted in-cabin camera output: landmarks, gaze, action units.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::profile::DriverProfile;
use crate::driver::{performance_score, va_of, ActionUnits, Calibration, Emotion, FaceFrame, Point, LANDMARK_COUNT};

/// Face camera sampling period in seconds.
pub const FACE_PERIOD: f64 = 0.1;
pub const BLINK_DURATION: f64 = 0.15;

const OPEN_EAR: f64 = 0.31;
const CLOSED_EAR: f64 = 0.06;
const CLOSED_MAR: f64 = 0.02;
const TALKING_MAR: f64 = 0.14;
const EYE_WIDTH: f64 = 30.0;
const MOUTH_WIDTH: f64 = 40.0;

/// Where the driver looks while distracted (focus angles, radians).
pub const OFF_ROAD_TARGETS: [Point; 2] = [[0.5, 0.0], [-0.5, -0.3]];
pub const ROAD_FOCUS: Point = [0.0, 0.0];

const ALL_AUS: [u8; 17] = [1, 2, 4, 5, 6, 7, 9, 10, 12, 14, 15, 17, 20, 23, 25, 26, 45];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub start: f64,
    pub end: f64,
}

impl Episode {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

/// Seeded timeline of everything the driver does over a drive: blinks,
/// glances away from the road, talking and mood. The traffic model reads the
/// distraction episodes, the camera model renders all of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverScript {
    pub duration: f64,
    pub blinks: Vec<f64>,
    pub distractions: Vec<(Episode, usize)>,
    pub talking: Vec<Episode>,
    /// Emotion changes as `(start time, emotion)`, first at 0.
    pub emotions: Vec<(f64, Emotion)>,
}

fn poisson_episodes(rng: &mut ChaCha8Rng, rate_per_min: f64, duration: f64, len: (f64, f64)) -> Vec<Episode> {
    let mut out = Vec::new();
    if rate_per_min <= 0.0 {
        return out;
    }
    let mean_gap = 60.0 / rate_per_min;
    let mut t = 0.0;
    loop {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        t += -mean_gap * u.ln();
        if t >= duration {
            break;
        }
        let end = (t + rng.gen_range(len.0..=len.1)).min(duration);
        out.push(Episode { start: t, end });
        t = end;
    }
    out
}

impl DriverScript {
    pub fn generate(profile: &DriverProfile, duration: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut blinks = Vec::new();
        if profile.blink_rate > 0.0 {
            let interval = 1.0 / profile.blink_rate;
            let mut k = 0.5;
            loop {
                let t = (k + rng.gen_range(-0.2..0.2)) * interval;
                if t + BLINK_DURATION > duration {
                    break;
                }
                blinks.push(t.max(0.0));
                k += 1.0;
            }
        }

        let distractions = poisson_episodes(&mut rng, profile.distraction_rate, duration, profile.distraction_length)
            .into_iter()
            .map(|e| (e, rng.gen_range(0..OFF_ROAD_TARGETS.len())))
            .collect();
        let talking = poisson_episodes(&mut rng, profile.talking_rate, duration, (2.0, 5.0));

        let mut emotions = Vec::new();
        match profile.pinned_emotion {
            Some(e) => emotions.push((0.0, e)),
            None => {
                let mut t = 0.0;
                let mut current = pick_emotion(&mut rng, &profile.emotion_weights, None);
                while t < duration {
                    emotions.push((t, current));
                    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                    t += -profile.emotion_dwell * u.ln();
                    current = pick_emotion(&mut rng, &profile.emotion_weights, Some(current));
                }
            }
        }

        DriverScript {
            duration,
            blinks,
            distractions,
            talking,
            emotions,
        }
    }

    /// Off-road target index while a glance is in progress.
    pub fn distraction_at(&self, t: f64) -> Option<usize> {
        let i = self.distractions.partition_point(|(e, _)| e.start <= t);
        let (e, target) = self.distractions.get(i.checked_sub(1)?)?;
        e.contains(t).then_some(*target)
    }

    /// Adds a glance away from the road starting at `start`, cut short where
    /// it would run into the next scheduled one. No-op while already looking
    /// away.
    pub fn insert_distraction(&mut self, start: f64, length: f64, target: usize) {
        if self.distracted(start) {
            return;
        }
        let i = self.distractions.partition_point(|(e, _)| e.start <= start);
        let mut end = (start + length).min(self.duration);
        if let Some((next, _)) = self.distractions.get(i) {
            end = end.min(next.start);
        }
        if end > start {
            self.distractions.insert(i, (Episode { start, end }, target));
        }
    }

    pub fn distracted(&self, t: f64) -> bool {
        self.distraction_at(t).is_some()
    }

    pub fn blinking(&self, t: f64) -> bool {
        let i = self.blinks.partition_point(|&b| b <= t);
        i > 0 && t < self.blinks[i - 1] + BLINK_DURATION
    }

    pub fn talking_at(&self, t: f64) -> bool {
        let i = self.talking.partition_point(|e| e.start <= t);
        i > 0 && self.talking[i - 1].contains(t)
    }

    pub fn emotion_at(&self, t: f64) -> Emotion {
        let i = self.emotions.partition_point(|&(s, _)| s <= t);
        self.emotions[i.saturating_sub(1)].1
    }

    /// Performance score of the scripted mood, which the traffic model turns
    /// into a reaction time.
    pub fn performance_at(&self, t: f64) -> f64 {
        performance_score(va_of(self.emotion_at(t)))
    }
}

fn pick_emotion(rng: &mut ChaCha8Rng, weights: &[f64; 6], exclude: Option<Emotion>) -> Emotion {
    let w: Vec<f64> = Emotion::ALL
        .iter()
        .zip(weights)
        .map(|(&e, &w)| if Some(e) == exclude { 0.0 } else { w })
        .collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return exclude.unwrap_or(Emotion::Calm);
    }
    let mut x = rng.gen_range(0.0..total);
    for (e, w) in Emotion::ALL.into_iter().zip(w) {
        if x < w {
            return e;
        }
        x -= w;
    }
    Emotion::Calm
}

/// Neutral 68-point face, eyes open, mouth closed, centered on the origin.
fn template(ear: f64, mar: f64) -> Vec<Point> {
    let mut lm = vec![[0.0, 0.0]; LANDMARK_COUNT];
    for (i, p) in lm.iter_mut().enumerate().take(17) {
        let a = std::f64::consts::PI * (i as f64 / 16.0);
        *p = [-70.0 * a.cos(), 10.0 + 80.0 * a.sin()];
    }
    for i in 0..5 {
        let arch = -45.0 + 2.0 * (i as f64 - 2.0).abs();
        lm[17 + i] = [-60.0 + 10.0 * i as f64, arch];
        lm[22 + i] = [20.0 + 10.0 * i as f64, arch];
    }
    for i in 0..4 {
        lm[27 + i] = [0.0, -30.0 + 10.0 * i as f64];
    }
    for i in 0..5 {
        lm[31 + i] = [-10.0 + 5.0 * i as f64, 15.0];
    }
    let h = ear * EYE_WIDTH / 2.0;
    for (base, x0) in [(36usize, -50.0), (42usize, 20.0)] {
        let w = EYE_WIDTH;
        lm[base] = [x0, -25.0];
        lm[base + 1] = [x0 + w / 3.0, -25.0 - h];
        lm[base + 2] = [x0 + 2.0 * w / 3.0, -25.0 - h];
        lm[base + 3] = [x0 + w, -25.0];
        lm[base + 4] = [x0 + 2.0 * w / 3.0, -25.0 + h];
        lm[base + 5] = [x0 + w / 3.0, -25.0 + h];
    }
    // outer lip
    for i in 0..12 {
        let a = 2.0 * std::f64::consts::PI * i as f64 / 12.0;
        lm[48 + i] = [-28.0 * a.cos(), 45.0 - 10.0 * a.sin()];
    }
    // inner lip: corners 60 and 64, upper 61..63, lower 65..67
    let g = mar * MOUTH_WIDTH / 2.0;
    let half = MOUTH_WIDTH / 2.0;
    lm[60] = [-half, 45.0];
    lm[64] = [half, 45.0];
    for (k, x) in [-10.0, 0.0, 10.0].into_iter().enumerate() {
        lm[61 + k] = [x, 45.0 - g];
        lm[67 - k] = [x, 45.0 + g];
    }
    lm
}

fn place(lm: &mut [Point], scale: f64, roll: f64, offset: Point) {
    let (s, c) = roll.sin_cos();
    for p in lm.iter_mut() {
        let [x, y] = *p;
        *p = [
            offset[0] + scale * (c * x - s * y),
            offset[1] + scale * (s * x + c * y),
        ];
    }
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Camera frames for one drive at `FACE_PERIOD`. GPS and speed are left at
/// zero; see [`attach_motion`].
pub fn generate_driver_stream(profile: &DriverProfile, duration: f64, seed: u64) -> Vec<FaceFrame> {
    render_stream(&DriverScript::generate(profile, duration, seed), seed)
}

pub fn render_stream(script: &DriverScript, seed: u64) -> Vec<FaceFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_face);
    let n = (script.duration / FACE_PERIOD).floor() as usize;
    let mut frames = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * FACE_PERIOD;
        let ear = if script.blinking(t) {
            CLOSED_EAR + rng.gen_range(-0.02..0.02)
        } else {
            OPEN_EAR + rng.gen_range(-0.02..0.02)
        };
        let mar = if script.talking_at(t) {
            TALKING_MAR * (0.6 + 0.4 * (t * 9.0).sin().abs())
        } else {
            CLOSED_MAR + rng.gen_range(-0.01..0.01)
        };
        let mut lm = template(ear, mar);
        let scale = 1.0 + rng.gen_range(-0.03..0.03);
        let roll = rng.gen_range(-0.08..0.08);
        place(&mut lm, scale, roll, [320.0 + rng.gen_range(-4.0..4.0), 240.0 + rng.gen_range(-4.0..4.0)]);
        for p in &mut lm {
            *p = [round4(p[0]), round4(p[1])];
        }

        let target = script.distraction_at(t).map_or(ROAD_FOCUS, |i| OFF_ROAD_TARGETS[i]);
        let focus = [target[0] + rng.gen_range(-0.06..0.06), target[1] + rng.gen_range(-0.06..0.06)];
        let head_share = rng.gen_range(0.6..0.8);
        let head_pose = [round4(focus[0] * head_share), round4(focus[1] * head_share)];
        let eye_gaze = [round4(focus[0] - head_pose[0]), round4(focus[1] - head_pose[1])];

        let emotion = script.emotion_at(t);
        let mut aus = ActionUnits::default();
        for au in ALL_AUS {
            aus.set(au, round4(rng.gen_range(0.0..0.3)));
        }
        for &au in emotion.action_units() {
            aus.set(au, round4(rng.gen_range(0.65..0.95)));
        }

        frames.push(FaceFrame {
            t: round4(t),
            landmarks: lm,
            head_pose,
            eye_gaze,
            aus,
            gps: [0.0, 0.0],
            speed: 0.0,
        });
    }
    frames
}

/// Gaze calibration session: fixations on the road and on each off-road
/// target.
pub fn calibration_session(seed: u64) -> Calibration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xca1b);
    let mut points = Vec::new();
    for (center, n) in [(ROAD_FOCUS, 20), (OFF_ROAD_TARGETS[0], 10), (OFF_ROAD_TARGETS[1], 10)] {
        for _ in 0..n {
            points.push([
                round4(center[0] + rng.gen_range(-0.05..0.05)),
                round4(center[1] + rng.gen_range(-0.05..0.05)),
            ]);
        }
    }
    Calibration {
        points,
        road_reference: ROAD_FOCUS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::{ear, eyes_closed, emotion_from_aus, mar, mouth_open};
    use crate::sim::profile::Behavior;

    fn closed_episodes(frames: &[FaceFrame]) -> usize {
        let mut count = 0;
        let mut prev = false;
        for f in frames {
            let c = eyes_closed(ear(f).unwrap());
            if c && !prev {
                count += 1;
            }
            prev = c;
        }
        count
    }

    #[test]
    fn no_blinks_keeps_eyes_open() {
        let mut p = DriverProfile::for_behavior(Behavior::Normal);
        p.blink_rate = 0.0;
        let frames = generate_driver_stream(&p, 60.0, 3);
        assert_eq!(frames.len(), 601);
        assert!(frames.iter().all(|f| ear(f).unwrap() >= 0.26));
    }

    #[test]
    fn blink_rate_is_detected() {
        let mut p = DriverProfile::for_behavior(Behavior::Normal);
        p.blink_rate = 0.33;
        for seed in 0..20 {
            let n = closed_episodes(&generate_driver_stream(&p, 60.0, seed));
            assert!((18..=22).contains(&n), "seed {seed}: {n}");
        }
    }

    #[test]
    fn pinned_emotion_round_trips() {
        let mut p = DriverProfile::for_behavior(Behavior::Aggressive);
        p.pinned_emotion = Some(Emotion::Happiness);
        let frames = generate_driver_stream(&p, 60.0, 11);
        let hits = frames.iter().filter(|f| emotion_from_aus(&f.aus) == Emotion::Happiness).count();
        assert!(hits as f64 >= 0.95 * frames.len() as f64);
    }

    #[test]
    fn talking_opens_mouth() {
        let p = DriverProfile::for_behavior(Behavior::Normal);
        let script = DriverScript::generate(&p, 300.0, 5);
        let frames = render_stream(&script, 5);
        for f in &frames {
            assert_eq!(mouth_open(mar(f).unwrap()), script.talking_at(f.t), "t={}", f.t);
        }
    }

    #[test]
    fn distraction_moves_focus_off_road() {
        let p = DriverProfile::for_behavior(Behavior::Aggressive);
        let script = DriverScript::generate(&p, 300.0, 9);
        assert!(!script.distractions.is_empty());
        let model = calibration_session(9).fit().unwrap();
        for f in render_stream(&script, 9) {
            let focus = crate::driver::focus_angles(f.head_pose, f.eye_gaze);
            let (_, on_road) = crate::driver::assign_gaze(&model, focus);
            assert_eq!(on_road, !script.distracted(f.t), "t={}", f.t);
        }
    }

    #[test]
    fn deterministic() {
        let p = DriverProfile::for_behavior(Behavior::Defensive);
        assert_eq!(generate_driver_stream(&p, 20.0, 4), generate_driver_stream(&p, 20.0, 4));
    }
}
