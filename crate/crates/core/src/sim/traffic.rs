//! Intelligent Driver Model on a multi-lane ring road, with reaction delay,
//! distraction, hazard braking and gap-checked lane changes.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::face::DriverScript;
use super::profile::DriverProfile;

pub const VEHICLE_LENGTH: f64 = 4.5;
/// Bumper-to-bumper distance at standstill.
pub const JAM_GAP: f64 = 2.0;
pub const EMERGENCY_DECEL: f64 = 9.0;
/// Hard floor on bumper-to-bumper distance.
pub const MIN_CLEARANCE: f64 = 0.5;
pub const LANE_WIDTH: f64 = 3.5;
pub const LANE_CHANGE_FLAG: f64 = 3.0;
/// A vehicle only brakes hard when moving faster than this, m/s.
pub const BRAKING_MIN_SPEED: f64 = 8.0;
/// Extra trigger on the reflex of a driver looking away, m/s².
const DISTRACTED_REFLEX_PENALTY: f64 = 2.0;
/// Nobody waits past this required deceleration, distracted or not.
const REFLEX_CAP: f64 = 7.0;
/// Steady-state spread and correlation time of the in-lane lateral wander.
const LATERAL_SPREAD: f64 = 0.3;
const LATERAL_TAU: f64 = 5.0;
const IDM_DELTA: f64 = 4.0;
/// Share of the loop taken by each straight.
const STRAIGHT_SHARE: f64 = 0.25;

/// Closed multi-lane loop shaped like a stadium: two straights joined by
/// semicircles. Positions along every lane are measured on the inner lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub lanes: usize,
    pub length: f64,
    pub speed_limit: f64,
}

impl Ring {
    /// Length of each straight, m.
    pub fn straight(&self) -> f64 {
        STRAIGHT_SHARE * self.length
    }

    /// Radius of the inner lane on the bends, m.
    pub fn radius(&self) -> f64 {
        (self.length - 2.0 * self.straight()) / (2.0 * PI)
    }

    /// Planar position and heading of a point on a lane (counter-clockwise
    /// travel), `lateral` metres outward of the lane centre.
    pub fn place(&self, lane: usize, s: f64, lateral: f64) -> (f64, f64, f64) {
        let (straight, r) = (self.straight(), self.radius());
        let bend = PI * r;
        let offset = lane as f64 * LANE_WIDTH + lateral;
        let s = s.rem_euclid(self.length);
        // centre-line point, unit outward normal, heading
        let (cx, cy, theta) = if s < straight {
            (s - straight / 2.0, -r, -PI / 2.0)
        } else if s < straight + bend {
            (straight / 2.0, 0.0, -PI / 2.0 + (s - straight) / r)
        } else if s < 2.0 * straight + bend {
            (straight / 2.0 - (s - straight - bend), r, PI / 2.0)
        } else {
            (-straight / 2.0, 0.0, PI / 2.0 + (s - 2.0 * straight - bend) / r)
        };
        let (nx, ny) = (theta.cos(), theta.sin());
        let (x, y) = if s < straight || (s >= straight + bend && s < 2.0 * straight + bend) {
            (cx + offset * nx, cy + offset * ny)
        } else {
            (cx + (r + offset) * nx, cy + (r + offset) * ny)
        };
        (x, y, crate::trajectory::wrap_angle(theta + PI / 2.0))
    }

    fn ahead(&self, from: f64, to: f64) -> f64 {
        (to - from).rem_euclid(self.length)
    }
}

/// Hazard braking: an armed vehicle that is being followed closely brakes
/// hard, and its follower happens to glance away at that moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakingEvents {
    /// Events per vehicle per minute.
    pub rate: f64,
    pub decel: (f64, f64),
    pub duration: (f64, f64),
    /// Follower time gap below which an armed vehicle brakes, s.
    pub headway: f64,
    /// Length of the follower's glance away, s.
    pub glance: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub profile: DriverProfile,
    pub script: DriverScript,
    pub desired_speed: f64,
    pub lane: usize,
    pub s: f64,
    pub v: f64,
    pub a: f64,
    /// Offset from the lane centre, m.
    pub lateral: f64,
    pub lane_change_until: f64,
    commands: VecDeque<(f64, f64)>,
    applied: f64,
    last_due: f64,
    brake_until: f64,
    brake_decel: f64,
    next_brake: f64,
    rng: ChaCha8Rng,
}

impl Vehicle {
    pub fn new(profile: DriverProfile, script: DriverScript, desired_speed: f64, lane: usize, s: f64, v: f64, rng: ChaCha8Rng) -> Self {
        Vehicle {
            profile,
            script,
            desired_speed,
            lane,
            s,
            v,
            a: 0.0,
            lateral: 0.0,
            lane_change_until: f64::NEG_INFINITY,
            commands: VecDeque::new(),
            applied: 0.0,
            last_due: f64::NEG_INFINITY,
            brake_until: f64::NEG_INFINITY,
            brake_decel: 0.0,
            next_brake: f64::NAN,
            rng,
        }
    }

    pub fn lane_changing(&self, t: f64) -> bool {
        t < self.lane_change_until
    }

    pub fn braking_event(&self, t: f64) -> bool {
        t < self.brake_until
    }

    fn reaction_time(&self, t: f64) -> f64 {
        let perf = if t >= 0.0 { self.script.performance_at(t) } else { 1.0 };
        self.profile.base_reaction + self.profile.mood_reaction * (1.0 - perf)
    }

    fn distracted(&self, t: f64) -> bool {
        t >= 0.0 && self.script.distracted(t)
    }

    fn wander(&mut self, dt: f64) {
        let decay = (-dt / LATERAL_TAU).exp();
        let z: f64 = self.rng.sample(StandardNormal);
        self.lateral = self.lateral * decay + LATERAL_SPREAD * (1.0 - decay * decay).sqrt() * z;
    }
}

/// Desired acceleration for a follower with bumper-to-bumper `gap` to a
/// leader moving at `v_leader` (no leader: free road).
pub fn idm(profile: &DriverProfile, desired_speed: f64, v: f64, leader: Option<(f64, f64)>) -> f64 {
    let a = profile.max_accel;
    let free = 1.0 - (v / desired_speed).powf(IDM_DELTA);
    let interaction = match leader {
        Some((gap, v_leader)) => {
            let dv = v - v_leader;
            let s_star = JAM_GAP + (v * profile.time_headway + profile.anticipation * v * dv / (2.0 * (a * profile.comfortable_decel).sqrt())).max(0.0);
            (s_star / gap.max(0.1)).powi(2)
        }
        None => 0.0,
    };
    a * (free - interaction)
}

/// Constant deceleration the follower needs to stay a metre behind the
/// leader, assuming the leader keeps its current deceleration until it stops.
pub fn required_decel(gap: f64, v: f64, v_leader: f64, a_leader: f64) -> f64 {
    let room = (gap - 1.0).max(0.3);
    let matching = if v > v_leader { (v - v_leader).powi(2) / (2.0 * room) } else { 0.0 };
    if a_leader >= -0.5 {
        return matching;
    }
    let leader_stop = v_leader * v_leader / (2.0 * -a_leader);
    matching.max(v * v / (2.0 * (room + leader_stop)))
}

pub struct Traffic {
    pub ring: Ring,
    pub dt: f64,
    pub braking: BrakingEvents,
    pub vehicles: Vec<Vehicle>,
    /// Per lane, vehicle indices in increasing `s`.
    order: Vec<Vec<usize>>,
    /// Moves shortened by the collision floor.
    pub clamps: usize,
}

impl Traffic {
    pub fn new(ring: Ring, dt: f64, braking: BrakingEvents, vehicles: Vec<Vehicle>) -> Self {
        let mut t = Traffic {
            ring,
            dt,
            braking,
            vehicles,
            order: Vec::new(),
            clamps: 0,
        };
        t.reorder();
        t
    }

    fn reorder(&mut self) {
        let mut order = vec![Vec::new(); self.ring.lanes];
        for (i, v) in self.vehicles.iter().enumerate() {
            order[v.lane].push(i);
        }
        for lane in &mut order {
            lane.sort_by(|&a, &b| self.vehicles[a].s.total_cmp(&self.vehicles[b].s).then(a.cmp(&b)));
        }
        self.order = order;
    }

    /// Leader index and front-to-front gap for every vehicle.
    pub fn leaders(&self) -> Vec<Option<(usize, f64)>> {
        let mut out = vec![None; self.vehicles.len()];
        for lane in &self.order {
            if lane.len() < 2 {
                continue;
            }
            for (k, &i) in lane.iter().enumerate() {
                let j = lane[(k + 1) % lane.len()];
                out[i] = Some((j, self.ring.ahead(self.vehicles[i].s, self.vehicles[j].s)));
            }
        }
        out
    }

    fn exp_wait(rng: &mut ChaCha8Rng, rate_per_min: f64) -> f64 {
        if rate_per_min <= 0.0 {
            return f64::INFINITY;
        }
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        -60.0 / rate_per_min * u.ln()
    }

    /// Advances from `t` to `t + dt`. Negative `t` is warm-up: no scripted
    /// events, no lane changes.
    pub fn step(&mut self, t: f64) {
        let dt = self.dt;
        let leaders = self.leaders();
        let n = self.vehicles.len();
        let mut accel = vec![0.0; n];
        // closest follower of each vehicle and its time gap
        let mut follower: Vec<Option<(usize, f64)>> = vec![None; n];
        for (i, l) in leaders.iter().enumerate() {
            if let Some((j, gap)) = *l {
                let headway = gap / self.vehicles[i].v.max(0.1);
                if follower[j].map_or(true, |(_, h)| headway < h) {
                    follower[j] = Some((i, headway));
                }
            }
        }
        let mut glances = Vec::new();

        for i in 0..n {
            let leader = leaders[i].map(|(j, gap)| (gap - VEHICLE_LENGTH, self.vehicles[j].v));
            let leader_accel = leaders[i].map_or(0.0, |(j, _)| self.vehicles[j].a);
            let braking = self.braking;
            let veh = &mut self.vehicles[i];
            let distracted = veh.distracted(t);
            if !distracted {
                let due = (t + veh.reaction_time(t)).max(veh.last_due);
                veh.last_due = due;
                let cmd = idm(&veh.profile, veh.desired_speed, veh.v, leader);
                veh.commands.push_back((due, cmd));
            }
            while let Some(&(due, cmd)) = veh.commands.front() {
                if due > t + 1e-9 {
                    break;
                }
                veh.applied = cmd;
                veh.commands.pop_front();
            }
            let mut a = veh.applied.min(veh.profile.max_accel);

            if t >= 0.0 {
                if veh.next_brake.is_nan() {
                    veh.next_brake = t + Self::exp_wait(&mut veh.rng, braking.rate);
                }
                let tailgated = follower[i].filter(|&(_, h)| h < braking.headway);
                if let Some((f, _)) = tailgated {
                    if t >= veh.next_brake && !veh.braking_event(t) && veh.v > BRAKING_MIN_SPEED {
                        veh.brake_decel = veh.rng.gen_range(braking.decel.0..=braking.decel.1);
                        veh.brake_until = t + veh.rng.gen_range(braking.duration.0..=braking.duration.1);
                        veh.next_brake = t + Self::exp_wait(&mut veh.rng, braking.rate);
                        let length = veh.rng.gen_range(braking.glance.0..=braking.glance.1);
                        let target = veh.rng.gen_range(0..2usize);
                        glances.push((f, length, target));
                    }
                }
                if veh.braking_event(t) {
                    a = a.min(-veh.brake_decel);
                }
            }

            // Reflex: stamp on the brake when the situation demands more than
            // the driver's threshold, whatever the delayed command says.
            if let Some((gap, v_leader)) = leader {
                let needed = required_decel(gap, veh.v, v_leader, leader_accel);
                let penalty = if distracted { DISTRACTED_REFLEX_PENALTY } else { 0.0 };
                let trigger = (veh.profile.reflex_threshold + penalty).min(REFLEX_CAP);
                if needed > trigger {
                    a = a.min(-(needed * 1.2).min(EMERGENCY_DECEL));
                }
            }
            accel[i] = a.max(-EMERGENCY_DECEL);
            veh.wander(dt);
        }

        for (f, length, target) in glances {
            self.vehicles[f].script.insert_distraction(t, length, target);
        }
        let mut disp = vec![0.0; n];
        let mut v_new = vec![0.0; n];
        for i in 0..n {
            let (v, a) = (self.vehicles[i].v, accel[i]);
            let v1 = v + a * dt;
            if v1 <= 0.0 {
                v_new[i] = 0.0;
                disp[i] = if a < 0.0 { (v * v / (-2.0 * a)).min(v * dt) } else { 0.0 };
            } else {
                v_new[i] = v1;
                disp[i] = 0.5 * (v + v1) * dt;
            }
        }

        // Resolve overlaps; clamping only shortens moves, so this settles.
        for _ in 0..n.max(1) {
            let mut changed = false;
            for i in 0..n {
                let Some((j, gap)) = leaders[i] else { continue };
                let limit = gap + disp[j] - (VEHICLE_LENGTH + MIN_CLEARANCE);
                if disp[i] > limit + 1e-12 {
                    disp[i] = limit.max(0.0);
                    v_new[i] = v_new[i].min(v_new[j]);
                    changed = true;
                    self.clamps += 1;
                }
            }
            if !changed {
                break;
            }
        }

        for i in 0..n {
            let veh = &mut self.vehicles[i];
            veh.a = (v_new[i] - veh.v) / dt;
            veh.v = v_new[i];
            veh.s = (veh.s + disp[i]).rem_euclid(self.ring.length);
        }
        self.reorder();
        if t >= 0.0 {
            self.lane_changes(t + dt);
        }
    }

    /// Nearest vehicles ahead and behind position `s` on `lane`, excluding
    /// `me`, as `(index, distance)`.
    fn neighbors(&self, lane: usize, s: f64, me: usize) -> (Option<(usize, f64)>, Option<(usize, f64)>) {
        let mut ahead: Option<(usize, f64)> = None;
        let mut behind: Option<(usize, f64)> = None;
        for &j in &self.order[lane] {
            if j == me {
                continue;
            }
            let d = self.ring.ahead(s, self.vehicles[j].s);
            if ahead.map_or(true, |(_, a)| d < a) {
                ahead = Some((j, d));
            }
            let b = self.ring.length - d;
            if behind.map_or(true, |(_, x)| b < x) {
                behind = Some((j, b));
            }
        }
        (ahead, behind)
    }

    fn lane_changes(&mut self, t: f64) {
        let dt = self.dt;
        for i in 0..self.vehicles.len() {
            let (rate, lane, s, v) = {
                let veh = &self.vehicles[i];
                (veh.profile.lane_change_rate, veh.lane, veh.s, veh.v)
            };
            if self.ring.lanes < 2 || self.vehicles[i].braking_event(t) {
                continue;
            }
            let roll: f64 = self.vehicles[i].rng.gen();
            if roll >= rate * dt {
                continue;
            }
            let target = if lane == 0 {
                1
            } else if lane + 1 == self.ring.lanes || self.vehicles[i].rng.gen_bool(0.5) {
                lane - 1
            } else {
                lane + 1
            };
            let (cur_ahead, _) = self.neighbors(lane, s, i);
            let (ahead, behind) = self.neighbors(target, s, i);
            let cur_gap = cur_ahead.map_or(f64::INFINITY, |(_, d)| d);
            let new_gap = ahead.map_or(f64::INFINITY, |(_, d)| d);
            let p = &self.vehicles[i].profile;
            if new_gap < cur_gap + p.lane_change_incentive {
                continue;
            }
            let needed_ahead = VEHICLE_LENGTH + p.gap_acceptance * (JAM_GAP + v * p.time_headway);
            if new_gap < needed_ahead {
                continue;
            }
            if let Some((j, d)) = behind {
                let f = &self.vehicles[j];
                if d < VEHICLE_LENGTH + p.gap_acceptance * (JAM_GAP + f.v * f.profile.time_headway) {
                    continue;
                }
            }
            let veh = &mut self.vehicles[i];
            veh.lane = target;
            veh.lane_change_until = t + LANE_CHANGE_FLAG;
            self.reorder();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::profile::Behavior;
    use rand::SeedableRng;

    fn quiet(behavior: Behavior) -> DriverProfile {
        let mut p = DriverProfile::for_behavior(behavior);
        p.distraction_rate = 0.0;
        p.lane_change_rate = 0.0;
        p.pinned_emotion = Some(crate::driver::Emotion::Happiness);
        p
    }

    fn vehicle(p: DriverProfile, s: f64, v: f64, desired: f64) -> Vehicle {
        let script = DriverScript::generate(&p, 120.0, 1);
        Vehicle::new(p, script, desired, 0, s, v, ChaCha8Rng::seed_from_u64(1))
    }

    fn no_braking() -> BrakingEvents {
        BrakingEvents {
            rate: 0.0,
            decel: (5.0, 7.0),
            duration: (1.0, 2.5),
            headway: 2.5,
            glance: (1.0, 2.0),
        }
    }

    #[test]
    fn free_flow_reaches_desired_speed() {
        let ring = Ring { lanes: 1, length: 800.0, speed_limit: 20.0 };
        let mut sim = Traffic::new(ring, 0.05, no_braking(), vec![vehicle(quiet(Behavior::Normal), 0.0, 10.0, 20.0)]);
        for k in 0..1200 {
            sim.step(-60.0 + k as f64 * 0.05);
        }
        assert!((sim.vehicles[0].v - 20.0).abs() < 0.1, "{}", sim.vehicles[0].v);
    }

    #[test]
    fn follower_survives_hard_braking_leader() {
        let ring = Ring { lanes: 1, length: 5000.0, speed_limit: 20.0 };
        let leader = vehicle(quiet(Behavior::Normal), 40.0, 20.0, 20.0);
        let follower = vehicle(quiet(Behavior::Normal), 0.0, 20.0, 20.0);
        let mut sim = Traffic::new(ring, 0.05, no_braking(), vec![follower, leader]);
        sim.vehicles[1].brake_until = 2.0;
        sim.vehicles[1].brake_decel = 7.0;
        sim.vehicles[1].next_brake = f64::INFINITY;
        sim.vehicles[0].next_brake = f64::INFINITY;
        let mut min_gap = f64::INFINITY;
        for k in 0..400 {
            sim.step(k as f64 * 0.05);
            let gap = sim.vehicles[1].s - sim.vehicles[0].s - VEHICLE_LENGTH;
            min_gap = min_gap.min(gap);
        }
        assert!(min_gap > 0.0);
        assert_eq!(sim.clamps, 0);
    }

    #[test]
    fn stadium_is_continuous_and_heading_follows_travel() {
        let ring = Ring { lanes: 3, length: 800.0, speed_limit: 20.0 };
        for lane in 0..3 {
            let mut prev = ring.place(lane, 0.0, 0.0);
            for k in 1..=1600 {
                let here = ring.place(lane, k as f64 * 0.5, 0.0);
                let step = ((here.0 - prev.0).powi(2) + (here.1 - prev.1).powi(2)).sqrt();
                assert!(step > 0.0 && step < 0.5 * (1.0 + lane as f64 * LANE_WIDTH / ring.radius()) + 1e-9);
                let dir = (here.1 - prev.1).atan2(here.0 - prev.0);
                assert!(crate::trajectory::wrap_angle(dir - prev.2).abs() < 0.01);
                prev = here;
            }
        }
        // outer lanes sit outside the inner one
        let (x0, y0, _) = ring.place(0, 0.0, 0.0);
        let (x2, y2, _) = ring.place(2, 0.0, 0.0);
        assert!((x2 - x0).abs() < 1e-9 && (y0 - y2 - 2.0 * LANE_WIDTH).abs() < 1e-9);
    }

    #[test]
    fn idm_fixed_point() {
        let p = quiet(Behavior::Normal);
        assert!(idm(&p, 20.0, 20.0, None).abs() < 1e-12);
        assert!(idm(&p, 20.0, 10.0, None) > 0.0);
        assert!(idm(&p, 20.0, 10.0, Some((3.0, 0.0))) < -5.0);
    }
}
