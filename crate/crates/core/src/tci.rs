//! Traffic conflict indicators: time to collision, modified time to
//! collision and deceleration rate to avoid a crash.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this relative acceleration MTTC falls back to plain TTC.
pub const MTTC_ACCEL_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Indicator {
    Ttc,
    Mttc,
    Drac,
}

impl Indicator {
    pub const ALL: [Indicator; 3] = [Indicator::Ttc, Indicator::Mttc, Indicator::Drac];

    pub fn name(self) -> &'static str {
        match self {
            Indicator::Ttc => "ttc",
            Indicator::Mttc => "mttc",
            Indicator::Drac => "drac",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Indicator::ALL.into_iter().find(|i| i.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    #[serde(rename = "ttc_threshold_s")]
    pub ttc: f64,
    #[serde(rename = "mttc_threshold_s")]
    pub mttc: f64,
    #[serde(rename = "drac_threshold_ms2")]
    pub drac: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ttc: 1.5,
            mttc: 1.5,
            drac: 3.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TciValues {
    pub ttc: f64,
    pub mttc: f64,
    pub drac: f64,
}

impl TciValues {
    /// Values for a vehicle with nobody in front.
    pub const FREE: TciValues = TciValues {
        ttc: f64::INFINITY,
        mttc: f64::INFINITY,
        drac: 0.0,
    };

    pub fn compute(gap: f64, v_f: f64, v_l: f64, a_f: f64, a_l: f64) -> Result<Self> {
        Ok(TciValues {
            ttc: compute_ttc(gap, v_f, v_l)?,
            mttc: compute_mttc(gap, v_f - v_l, a_f - a_l)?,
            drac: compute_drac(gap, v_f, v_l)?,
        })
    }

    pub fn get(&self, indicator: Indicator) -> f64 {
        match indicator {
            Indicator::Ttc => self.ttc,
            Indicator::Mttc => self.mttc,
            Indicator::Drac => self.drac,
        }
    }

    pub fn flags(&self, th: &Thresholds) -> ConflictFlags {
        ConflictFlags {
            ttc: self.ttc < th.ttc,
            mttc: self.mttc < th.mttc,
            drac: self.drac >= th.drac,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConflictFlags {
    pub ttc: bool,
    pub mttc: bool,
    pub drac: bool,
}

impl ConflictFlags {
    pub fn new(ttc: bool, mttc: bool, drac: bool) -> Self {
        ConflictFlags { ttc, mttc, drac }
    }

    pub fn get(&self, indicator: Indicator) -> bool {
        match indicator {
            Indicator::Ttc => self.ttc,
            Indicator::Mttc => self.mttc,
            Indicator::Drac => self.drac,
        }
    }

    pub fn set(&mut self, indicator: Indicator, value: bool) {
        match indicator {
            Indicator::Ttc => self.ttc = value,
            Indicator::Mttc => self.mttc = value,
            Indicator::Drac => self.drac = value,
        }
    }

    pub fn count(&self) -> usize {
        self.ttc as usize + self.mttc as usize + self.drac as usize
    }

    pub fn any(&self) -> bool {
        self.count() > 0
    }
}

fn check_gap(gap: f64) -> Result<()> {
    if gap > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(gap))
    }
}

/// Gap over closing speed; infinite when the follower is not closing in.
pub fn compute_ttc(gap: f64, v_f: f64, v_l: f64) -> Result<f64> {
    check_gap(gap)?;
    let closing = v_f - v_l;
    Ok(if closing > 0.0 { gap / closing } else { f64::INFINITY })
}

/// Earliest positive time at which the gap closes under constant relative
/// acceleration, i.e. the smallest positive root of
/// `0.5*delta_a*t^2 + delta_v*t - gap = 0`.
pub fn compute_mttc(gap: f64, delta_v: f64, delta_a: f64) -> Result<f64> {
    check_gap(gap)?;
    if delta_a.abs() < MTTC_ACCEL_EPS {
        return Ok(if delta_v > 0.0 { gap / delta_v } else { f64::INFINITY });
    }
    let a = 0.5 * delta_a;
    let b = delta_v;
    let c = -gap;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Ok(f64::INFINITY);
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    let mut best = f64::INFINITY;
    for root in [q / a, if q != 0.0 { c / q } else { f64::NAN }] {
        if root > 0.0 && root < best {
            best = root;
        }
    }
    Ok(best)
}

/// Deceleration the follower needs to match the leader's speed within the gap.
pub fn compute_drac(gap: f64, v_f: f64, v_l: f64) -> Result<f64> {
    check_gap(gap)?;
    let closing = v_f - v_l;
    Ok(if closing > 0.0 {
        closing * closing / (2.0 * gap)
    } else {
        0.0
    })
}

/// One sample of a follower's relation to whatever vehicle is in front of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub t: f64,
    /// `None` when the follower has no leader at this instant.
    pub gap: Option<f64>,
    pub v_f: f64,
    pub v_l: f64,
    pub a_f: f64,
    pub a_l: f64,
}

impl PairSample {
    pub fn values(&self) -> Result<TciValues> {
        match self.gap {
            Some(gap) => TciValues::compute(gap, self.v_f, self.v_l, self.a_f, self.a_l),
            None => Ok(TciValues::FREE),
        }
    }
}

/// Conflict flags over the window `(t0, t0 + horizon]`: a flag is set when its
/// indicator crosses the threshold at any sample in the window.
pub fn label_future(timeline: &[PairSample], t0: f64, horizon: f64, th: &Thresholds) -> Result<ConflictFlags> {
    const EPS: f64 = 1e-9;
    let end = t0 + horizon;
    let available = timeline.last().map_or(f64::NEG_INFINITY, |s| s.t);
    if available < end - EPS {
        return Err(Error::LabelUnavailable { needed: end, available });
    }
    let start = timeline.partition_point(|s| s.t <= t0 + EPS);
    let mut flags = ConflictFlags::default();
    for sample in timeline[start..].iter().take_while(|s| s.t <= end + EPS) {
        let f = sample.values()?.flags(th);
        flags.ttc |= f.ttc;
        flags.mttc |= f.mttc;
        flags.drac |= f.drac;
    }
    Ok(flags)
}
