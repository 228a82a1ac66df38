use serde::{Deserialize, Serialize};

use crate::driver::Emotion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    Aggressive,
    Normal,
    Defensive,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [Behavior::Aggressive, Behavior::Normal, Behavior::Defensive];

    pub fn name(self) -> &'static str {
        match self {
            Behavior::Aggressive => "aggressive",
            Behavior::Normal => "normal",
            Behavior::Defensive => "defensive",
        }
    }
}

/// Car-following and in-cabin parameters of one simulated driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverProfile {
    pub behavior: Behavior,
    /// Desired speed as a multiple of the speed limit.
    pub speed_factor: f64,
    /// Desired time headway, s.
    pub time_headway: f64,
    pub max_accel: f64,
    pub comfortable_decel: f64,
    /// Lane-change attempts per second.
    pub lane_change_rate: f64,
    /// Share of the safe distance this driver accepts when cutting in.
    pub gap_acceptance: f64,
    /// Extra room ahead that makes a lane change worth it, m.
    pub lane_change_incentive: f64,
    /// Weight on closing speed when choosing a following gap; below one the
    /// driver brakes late.
    pub anticipation: f64,
    /// Required deceleration at which the driver stamps on the brake, m/s².
    pub reflex_threshold: f64,
    /// Reaction time of a driver in the best mood, s.
    pub base_reaction: f64,
    /// Extra reaction time at zero performance score, s.
    pub mood_reaction: f64,
    pub blink_rate: f64,
    /// Glances away from the road per minute.
    pub distraction_rate: f64,
    pub distraction_length: (f64, f64),
    pub talking_rate: f64,
    /// Mean time between mood changes, s.
    pub emotion_dwell: f64,
    /// Relative odds of each emotion, in `Emotion::ALL` order.
    pub emotion_weights: [f64; 6],
    pub pinned_emotion: Option<Emotion>,
}

impl DriverProfile {
    pub fn for_behavior(behavior: Behavior) -> Self {
        let base = DriverProfile {
            behavior,
            speed_factor: 1.0,
            time_headway: 1.5,
            max_accel: 2.0,
            comfortable_decel: 2.0,
            lane_change_rate: 0.02,
            gap_acceptance: 0.6,
            lane_change_incentive: 10.0,
            anticipation: 0.6,
            reflex_threshold: 5.0,
            base_reaction: 0.6,
            mood_reaction: 0.6,
            blink_rate: 0.3,
            distraction_rate: 1.5,
            distraction_length: (1.0, 3.0),
            talking_rate: 0.5,
            emotion_dwell: 40.0,
            emotion_weights: [3.0, 1.0, 1.0, 1.0, 1.0, 4.0],
            pinned_emotion: None,
        };
        match behavior {
            Behavior::Aggressive => DriverProfile {
                speed_factor: 1.2,
                time_headway: 0.9,
                max_accel: 3.0,
                comfortable_decel: 3.0,
                lane_change_rate: 0.06,
                gap_acceptance: 0.3,
                lane_change_incentive: 0.0,
                base_reaction: 0.5,
                anticipation: 0.2,
                reflex_threshold: 7.0,
                distraction_rate: 2.0,
                emotion_weights: [1.0, 0.5, 2.0, 0.5, 4.0, 2.0],
                ..base
            },
            Behavior::Normal => base,
            Behavior::Defensive => DriverProfile {
                speed_factor: 0.8,
                time_headway: 2.2,
                max_accel: 1.5,
                comfortable_decel: 1.5,
                lane_change_rate: 0.005,
                gap_acceptance: 1.0,
                lane_change_incentive: 20.0,
                base_reaction: 0.8,
                anticipation: 1.0,
                reflex_threshold: 4.0,
                distraction_rate: 1.0,
                emotion_weights: [2.0, 2.0, 0.5, 2.0, 0.5, 5.0],
                ..base
            },
        }
    }
}
