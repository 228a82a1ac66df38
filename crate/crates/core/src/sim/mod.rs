//! Desk-scale traffic and in-cabin data generator.

mod face;
mod profile;
pub mod traffic;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use face::{
    calibration_session, generate_driver_stream, render_stream, DriverScript, Episode, BLINK_DURATION, FACE_PERIOD,
    OFF_ROAD_TARGETS, ROAD_FOCUS,
};
pub use profile::{Behavior, DriverProfile};
pub use traffic::{idm, BrakingEvents, Ring, Traffic, Vehicle, EMERGENCY_DECEL, JAM_GAP, MIN_CLEARANCE, VEHICLE_LENGTH};

use crate::driver::Emotion;
use crate::error::{Error, Result};
use crate::fusion::GeoOrigin;
use crate::trajectory::{segment_of, LaneShape, Segment, SegmentMap, Shape, TrackPoint, FRAME_PERIOD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorMix {
    pub aggressive: f64,
    pub normal: f64,
    pub defensive: f64,
}

impl Default for BehaviorMix {
    fn default() -> Self {
        BehaviorMix {
            aggressive: 0.4,
            normal: 0.4,
            defensive: 0.2,
        }
    }
}

impl BehaviorMix {
    /// Vehicle counts per behavior by largest remainder, so every realized
    /// share is within one vehicle of its target.
    pub fn counts(&self, n: usize) -> [usize; 3] {
        let shares = [self.aggressive, self.normal, self.defensive];
        let exact: Vec<f64> = shares.iter().map(|s| s * n as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut rest: Vec<usize> = (0..3).collect();
        rest.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
        let missing = n - counts.iter().sum::<usize>();
        for &k in rest.iter().take(missing) {
            counts[k] += 1;
        }
        [counts[0], counts[1], counts[2]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Recorded seconds, after warm-up.
    pub duration: f64,
    pub warmup: f64,
    pub timestep: f64,
    pub vehicles: usize,
    pub lanes: usize,
    /// Ring road circumference along the inner lane, m.
    pub ring_length: f64,
    pub speed_limit: f64,
    pub mix: BehaviorMix,
    /// Share of vehicles carrying the in-cabin camera app.
    pub equipped_fraction: f64,
    /// Hard-braking events per vehicle per minute.
    pub braking_rate: f64,
    pub braking_decel: (f64, f64),
    pub braking_duration: (f64, f64),
    /// Follower time gap under which a vehicle may brake, s.
    pub braking_headway: f64,
    /// How long the follower looks away when its leader brakes, s.
    pub glance_length: (f64, f64),
    /// One entry per segment; the ring is split into equal arcs.
    pub crashes_per_year: Vec<f64>,
    pub origin: GeoOrigin,
    /// GPS noise half-width of the app's fixes, m.
    pub gps_noise: f64,
    pub pinned_emotion: Option<Emotion>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 7,
            duration: 600.0,
            warmup: 30.0,
            timestep: FRAME_PERIOD,
            vehicles: 50,
            lanes: 3,
            ring_length: 800.0,
            speed_limit: 20.0,
            mix: BehaviorMix::default(),
            equipped_fraction: 0.2,
            braking_rate: 6.0,
            braking_decel: (5.0, 7.0),
            braking_duration: (1.0, 2.5),
            braking_headway: 3.0,
            glance_length: (1.0, 2.5),
            crashes_per_year: vec![2.0, 8.0, 12.0, 3.0, 7.0, 1.0, 11.0],
            origin: GeoOrigin {
                lon: -84.396,
                lat: 33.776,
            },
            gps_noise: 1.0,
            pinned_emotion: None,
        }
    }
}

fn range_ok(r: (f64, f64)) -> bool {
    r.0.is_finite() && r.1.is_finite() && r.0 > 0.0 && r.0 <= r.1
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        let m = &self.mix;
        if [m.aggressive, m.normal, m.defensive].iter().any(|&f| !(0.0..=1.0).contains(&f))
            || (m.aggressive + m.normal + m.defensive - 1.0).abs() > 1e-9
        {
            return bad("behavior mix fractions must be within [0, 1] and sum to 1");
        }
        if !(self.timestep > 0.0) {
            return bad("timestep must be positive");
        }
        let ratio = FRAME_PERIOD / self.timestep;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return bad("timestep must divide the 0.05 s frame period");
        }
        if !(self.duration > 0.0) || !(self.warmup >= 0.0) {
            return bad("duration must be positive and warmup nonnegative");
        }
        if self.vehicles == 0 || self.lanes == 0 {
            return bad("need at least one vehicle and one lane");
        }
        if !(self.ring_length > 0.0) || !(self.speed_limit > 0.0) {
            return bad("ring_length and speed_limit must be positive");
        }
        if !(0.0..=1.0).contains(&self.equipped_fraction) {
            return bad("equipped_fraction must be within [0, 1]");
        }
        if !(self.braking_rate >= 0.0) || !range_ok(self.braking_decel) || !range_ok(self.braking_duration)
            || !(self.braking_headway > 0.0)
            || !range_ok(self.glance_length)
        {
            return bad("braking parameters must be nonnegative rates and ascending positive ranges");
        }
        if self.crashes_per_year.is_empty() || self.crashes_per_year.iter().any(|c| !(*c >= 0.0)) {
            return bad("crashes_per_year needs one nonnegative entry per segment");
        }
        if !(self.gps_noise >= 0.0) {
            return bad("gps_noise must be nonnegative");
        }
        Ok(())
    }

    pub fn ring(&self) -> Ring {
        Ring {
            lanes: self.lanes,
            length: self.ring_length,
            speed_limit: self.speed_limit,
        }
    }

    pub fn lane_shapes(&self) -> Vec<LaneShape> {
        (0..self.lanes)
            .map(|k| LaneShape {
                lane_id: lane_id(k),
                shape: Shape::Straight,
                speed_limit: self.speed_limit,
                length: self.ring_length,
                closed_loop: true,
            })
            .collect()
    }

    pub fn segment_map(&self) -> SegmentMap {
        let n = self.crashes_per_year.len();
        let lanes: Vec<String> = (0..self.lanes).map(lane_id).collect();
        SegmentMap {
            segments: self
                .crashes_per_year
                .iter()
                .enumerate()
                .map(|(k, &c)| Segment {
                    id: format!("S{}", k + 1),
                    lanes: lanes.clone(),
                    start: self.ring_length * k as f64 / n as f64,
                    end: self.ring_length * (k + 1) as f64 / n as f64,
                    crashes_per_year: c,
                })
                .collect(),
        }
    }
}

pub fn lane_id(k: usize) -> String {
    format!("L{}", k + 1)
}

pub fn vehicle_id(k: usize) -> String {
    format!("veh-{k:03}")
}

pub use crate::pipeline::DriverStream;
use crate::pipeline::Site;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub lanes: Vec<LaneShape>,
    pub segments: SegmentMap,
    pub tracks: BTreeMap<String, Vec<TrackPoint>>,
    pub behaviors: BTreeMap<String, Behavior>,
    pub streams: Vec<DriverStream>,
    /// Which vehicle each app stream rode in; for tests only, the pipeline
    /// recovers it from GPS.
    pub stream_vehicle: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    /// Overlap corrections applied by the hard clearance floor.
    pub clamps: usize,
}

impl Scenario {
    /// The site description a roadside unit would be configured with.
    pub fn site(&self) -> Site {
        Site {
            origin: self.config.origin,
            lanes: self.lanes.clone(),
            segments: self.segments.clone(),
        }
    }
}

/// Runs the ring-road simulation and renders tracks and app streams.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let ring = config.ring();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let counts = config.mix.counts(config.vehicles);
    let mut behaviors: Vec<Behavior> = Behavior::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&b, c)| std::iter::repeat(b).take(c))
        .collect();
    behaviors.shuffle(&mut rng);

    let mut equipped: Vec<usize> = (0..config.vehicles).collect();
    equipped.shuffle(&mut rng);
    equipped.truncate((config.equipped_fraction * config.vehicles as f64).round() as usize);
    equipped.sort_unstable();

    let per_lane = config.vehicles.div_ceil(config.lanes);
    let spacing = config.ring_length / per_lane as f64;
    let mut warnings = Vec::new();
    let mut vehicles = Vec::new();
    let mut ids = Vec::new();
    let mut scripts_seed = Vec::new();
    for (k, &behavior) in behaviors.iter().enumerate() {
        let lane = k % config.lanes;
        let slot = k / config.lanes;
        let mut profile = DriverProfile::for_behavior(behavior);
        profile.pinned_emotion = config.pinned_emotion.or(profile.pinned_emotion);
        let desired = profile.speed_factor * config.speed_limit;
        if spacing < VEHICLE_LENGTH + JAM_GAP + 1.0 {
            warnings.push(format!("{}: no safe insertion gap on lane {}, skipped", vehicle_id(k), lane_id(lane)));
            continue;
        }
        let jitter = rng.gen_range(-0.1..0.1) * spacing.min(20.0);
        let s = (slot as f64 * spacing + lane as f64 * spacing / config.lanes as f64 + jitter).rem_euclid(config.ring_length);
        let script_seed: u64 = rng.gen();
        let mut vrng = ChaCha8Rng::seed_from_u64(config.seed);
        vrng.set_stream(k as u64 + 1);
        let script = DriverScript::generate(&profile, config.duration, script_seed);
        vehicles.push(Vehicle::new(profile, script, desired, lane, s, 0.6 * desired.min(config.speed_limit), vrng));
        ids.push(k);
        scripts_seed.push(script_seed);
    }

    let mut sim = Traffic::new(
        ring,
        config.timestep,
        BrakingEvents {
            rate: config.braking_rate,
            decel: config.braking_decel,
            duration: config.braking_duration,
            headway: config.braking_headway,
            glance: config.glance_length,
        },
        vehicles,
    );

    let substeps = (FRAME_PERIOD / config.timestep).round() as usize;
    let frames = (config.duration / FRAME_PERIOD).round() as usize;
    let warm_frames = (config.warmup / FRAME_PERIOD).round() as usize;
    let mut tracks: Vec<Vec<TrackPoint>> = vec![Vec::with_capacity(frames + 1); sim.vehicles.len()];
    let segments = config.segment_map();
    let lane_ids: Vec<String> = (0..config.lanes).map(lane_id).collect();
    let vehicle_ids: Vec<String> = ids.iter().map(|&k| vehicle_id(k)).collect();

    for f in 0..=(warm_frames + frames) {
        let t_frame = (f as f64 - warm_frames as f64) * FRAME_PERIOD;
        if f >= warm_frames {
            for (i, veh) in sim.vehicles.iter().enumerate() {
                let (x, y, heading) = ring.place(veh.lane, veh.s, veh.lateral);
                let lane = &lane_ids[veh.lane];
                tracks[i].push(TrackPoint {
                    vehicle_id: vehicle_ids[i].clone(),
                    t: t_frame,
                    s: veh.s,
                    lane_id: lane.clone(),
                    segment_id: Some(segment_of(&segments, lane, veh.s)?.to_string()),
                    heading,
                    speed: veh.v,
                    accel: veh.a,
                    x: Some(x),
                    y: Some(y),
                });
            }
        }
        if f == warm_frames + frames {
            break;
        }
        for sub in 0..substeps {
            sim.step(t_frame + sub as f64 * config.timestep);
        }
    }

    let mut stream_ids: Vec<usize> = (0..equipped.len()).collect();
    stream_ids.shuffle(&mut rng);
    let mut streams = Vec::new();
    let mut stream_vehicle = BTreeMap::new();
    for (e, &k) in equipped.iter().enumerate() {
        let Some(i) = ids.iter().position(|&x| x == k) else { continue };
        let stream_id = format!("app-{:02}", stream_ids[e]);
        let seed = scripts_seed[i];
        let mut frames = render_stream(&sim.vehicles[i].script, seed);
        let mut noise = ChaCha8Rng::seed_from_u64(seed ^ 0x6e55);
        for frame in &mut frames {
            let idx = ((frame.t / FRAME_PERIOD).round() as usize).min(tracks[i].len() - 1);
            let p = &tracks[i][idx];
            let (x, y) = p.planar().unwrap_or((0.0, 0.0));
            let g = config.gps_noise;
            let (dx, dy) = if g > 0.0 { (noise.gen_range(-g..g), noise.gen_range(-g..g)) } else { (0.0, 0.0) };
            let (lon, lat) = config.origin.to_geo(x + dx, y + dy);
            frame.gps = [lon, lat];
            frame.speed = p.speed;
        }
        stream_vehicle.insert(stream_id.clone(), vehicle_ids[i].clone());
        streams.push(DriverStream {
            id: stream_id,
            frames,
            calibration: calibration_session(seed),
        });
    }
    streams.sort_by(|a, b| a.id.cmp(&b.id));

    Ok(Scenario {
        config: config.clone(),
        lanes: config.lane_shapes(),
        segments,
        tracks: vehicle_ids.iter().cloned().zip(tracks).collect(),
        behaviors: ids.iter().map(|&k| (vehicle_id(k), behaviors[k])).collect(),
        streams,
        stream_vehicle,
        warnings,
        clamps: sim.clamps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            duration: 60.0,
            vehicles: 15,
            ring_length: 400.0,
            ..Default::default()
        }
    }

    #[test]
    fn mix_counts_within_one() {
        let mix = BehaviorMix::default();
        for n in 1..120 {
            let c = mix.counts(n);
            assert_eq!(c.iter().sum::<usize>(), n);
            for (k, share) in [mix.aggressive, mix.normal, mix.defensive].into_iter().enumerate() {
                assert!((c[k] as f64 - share * n as f64).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn rejects_bad_fractions() {
        let mut c = ScenarioConfig::default();
        c.mix.defensive = 0.3;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = ScenarioConfig {
            timestep: 0.03,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn same_seed_same_scenario() {
        let a = generate_scenario(&small()).unwrap();
        let b = generate_scenario(&small()).unwrap();
        assert_eq!(a.tracks, b.tracks);
        assert_eq!(a.streams, b.streams);
        let c = generate_scenario(&ScenarioConfig { seed: 8, ..small() }).unwrap();
        assert_ne!(a.tracks, c.tracks);
    }

    #[test]
    fn no_teleporting_and_no_overlap() {
        let cfg = small();
        let sc = generate_scenario(&cfg).unwrap();
        let v_max = 1.2 * cfg.speed_limit + 3.0;
        for track in sc.tracks.values() {
            for w in track.windows(2) {
                let ds = (w[1].s - w[0].s).rem_euclid(cfg.ring_length);
                assert!(ds <= v_max * FRAME_PERIOD + 0.5 * 3.0 * FRAME_PERIOD * FRAME_PERIOD + 1e-9);
                assert!(w[1].speed >= 0.0);
            }
        }
        let n = sc.tracks.values().next().unwrap().len();
        for f in 0..n {
            let mut per_lane: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for tr in sc.tracks.values() {
                per_lane.entry(&tr[f].lane_id).or_default().push(tr[f].s);
            }
            for (_, mut s) in per_lane {
                s.sort_by(f64::total_cmp);
                for k in 0..s.len() {
                    if s.len() < 2 {
                        break;
                    }
                    let next = if k + 1 < s.len() { s[k + 1] } else { s[0] + cfg.ring_length };
                    assert!(next - s[k] > VEHICLE_LENGTH, "overlap at frame {f}");
                }
            }
        }
    }

    #[test]
    fn equipped_vehicles_have_streams() {
        let sc = generate_scenario(&small()).unwrap();
        assert_eq!(sc.streams.len(), 3);
        for s in &sc.streams {
            assert_eq!(s.frames.len(), 601);
            assert!(sc.tracks.contains_key(&sc.stream_vehicle[&s.id]));
        }
    }
}
