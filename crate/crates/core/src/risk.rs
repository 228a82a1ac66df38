//! Fuzzy risk scoring of road segments from crash history and conflict flags.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tci::ConflictFlags;

pub const DEFAULT_WINDOW: f64 = 60.0;

/// Crash-count memberships and output triangles of the inference engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzyParams {
    /// Low is full up to `[0]` and falls to zero at `[1]`.
    pub crash_low: [f64; 2],
    /// Trapezoid `[zero, full, full, zero]`.
    pub crash_medium: [f64; 4],
    /// High is zero up to `[0]` and full from `[1]`.
    pub crash_high: [f64; 2],
    pub small: [f64; 3],
    pub medium: [f64; 3],
    pub large: [f64; 3],
}

impl Default for FuzzyParams {
    fn default() -> Self {
        FuzzyParams {
            crash_low: [5.0, 6.5],
            crash_medium: [5.0, 6.5, 9.5, 11.0],
            crash_high: [9.5, 11.0],
            small: [0.0, 10.0, 40.0],
            medium: [30.0, 50.0, 70.0],
            large: [60.0, 90.0, 100.0],
        }
    }
}

fn ascending(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] <= w[1])
}

impl FuzzyParams {
    pub fn validate(&self) -> Result<()> {
        let crash_ok = ascending(&self.crash_low)
            && ascending(&self.crash_medium)
            && ascending(&self.crash_high)
            && self.crash_low[0] >= 0.0
            && self.crash_low[0] < self.crash_low[1]
            && self.crash_high[0] < self.crash_high[1];
        if !crash_ok {
            return Err(Error::Config("crash membership breakpoints must be ascending and nonnegative".into()));
        }
        // every crash count must belong to some level
        if self.crash_medium[0] > self.crash_low[0]
            || self.crash_medium[3] < self.crash_high[1]
            || self.crash_medium[1] > self.crash_low[1]
            || self.crash_medium[2] < self.crash_high[0]
        {
            return Err(Error::Config("crash memberships leave a gap".into()));
        }
        for t in [&self.small, &self.medium, &self.large] {
            if !ascending(t) || t[0] == t[2] || t[0] < 0.0 || t[2] > 100.0 {
                return Err(Error::Config(format!("output triangle {t:?} must be ascending within [0, 100]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrashMembership {
    pub low: f64,
    pub medium: f64,
    pub high: f64,
}

fn ramp_up(x: f64, zero: f64, full: f64) -> f64 {
    if x <= zero {
        0.0
    } else if x >= full {
        1.0
    } else {
        (x - zero) / (full - zero)
    }
}

pub fn fuzzify_crashes_with(p: &FuzzyParams, crashes: f64) -> Result<CrashMembership> {
    if !(crashes >= 0.0) || !crashes.is_finite() {
        return Err(Error::Domain(format!("crashes per year must be a nonnegative number, got {crashes}")));
    }
    let [a, b, c, d] = p.crash_medium;
    Ok(CrashMembership {
        low: 1.0 - ramp_up(crashes, p.crash_low[0], p.crash_low[1]),
        medium: ramp_up(crashes, a, b).min(1.0 - ramp_up(crashes, c, d)),
        high: ramp_up(crashes, p.crash_high[0], p.crash_high[1]),
    })
}

pub fn fuzzify_crashes(crashes: f64) -> Result<CrashMembership> {
    fuzzify_crashes_with(&FuzzyParams::default(), crashes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consequent {
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashLevel {
    Low,
    Medium,
    High,
}

impl CrashLevel {
    pub const ALL: [CrashLevel; 3] = [CrashLevel::Low, CrashLevel::Medium, CrashLevel::High];
}

/// Rule table: Large needs an elevated crash level and at least two
/// conflicts, Small needs a low crash level and at most one, everything else
/// is Medium.
pub fn consequent(level: CrashLevel, conflicts: usize) -> Consequent {
    match level {
        CrashLevel::Low if conflicts <= 1 => Consequent::Small,
        CrashLevel::Medium | CrashLevel::High if conflicts >= 2 => Consequent::Large,
        _ => Consequent::Medium,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    VerySmall,
    Small,
    Medium,
    Large,
    VeryLarge,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 5] = [
        RiskLevel::VerySmall,
        RiskLevel::Small,
        RiskLevel::Medium,
        RiskLevel::Large,
        RiskLevel::VeryLarge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RiskLevel::VerySmall => "very_small",
            RiskLevel::Small => "small",
            RiskLevel::Medium => "medium",
            RiskLevel::Large => "large",
            RiskLevel::VeryLarge => "very_large",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == s)
    }

    pub fn color_name(self) -> &'static str {
        match self {
            RiskLevel::VerySmall => "green",
            RiskLevel::Small => "blue",
            RiskLevel::Medium => "yellow",
            RiskLevel::Large => "orange",
            RiskLevel::VeryLarge => "red",
        }
    }

    pub fn hex(self) -> &'static str {
        match self {
            RiskLevel::VerySmall => "#008000",
            RiskLevel::Small => "#0000ff",
            RiskLevel::Medium => "#ffff00",
            RiskLevel::Large => "#ffa500",
            RiskLevel::VeryLarge => "#ff0000",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

pub fn bin_level(score: f64) -> Result<RiskLevel> {
    if !(0.0..=100.0).contains(&score) {
        return Err(Error::Domain(format!("risk score {score} outside [0, 100]")));
    }
    Ok(RiskLevel::ALL[((score / 20.0).floor() as usize).min(4)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyInput {
    pub crashes_per_year: f64,
    pub flags: ConflictFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskScore {
    pub score: f64,
    pub level: RiskLevel,
}

impl RiskScore {
    pub fn from_score(score: f64) -> Result<Self> {
        Ok(RiskScore {
            score,
            level: bin_level(score)?,
        })
    }
}

fn triangle(t: &[f64; 3], x: f64) -> f64 {
    let [a, b, c] = *t;
    if x < a || x > c {
        0.0
    } else if x <= b {
        if b == a { 1.0 } else { (x - a) / (b - a) }
    } else if c == b {
        1.0
    } else {
        (c - x) / (c - b)
    }
}

/// Centroid of `max_i min(strength_i, triangle_i(x))` over [0, 100].
///
/// The aggregate is piecewise linear, so the integrals are evaluated exactly
/// after splitting at every vertex, clip point and crossing of two clipped
/// terms.
pub fn clipped_centroid(terms: &[([f64; 3], f64)]) -> Option<f64> {
    let active: Vec<&([f64; 3], f64)> = terms.iter().filter(|(_, s)| *s > 0.0).collect();
    if active.is_empty() {
        return None;
    }
    let mut cuts = vec![0.0, 100.0];
    for (t, s) in &active {
        cuts.extend_from_slice(t);
        let s = s.min(1.0);
        cuts.push(t[0] + s * (t[1] - t[0]));
        cuts.push(t[2] - s * (t[2] - t[1]));
    }
    cuts.retain(|x| (0.0..=100.0).contains(x));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let term = |i: usize, x: f64| triangle(&active[i].0, x).min(active[i].1);
    let mut area = 0.0;
    let mut moment = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        // inside (a, b) every clipped term is linear; add crossings
        let mut pts = vec![a, b];
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                let (ia, ib) = (term(i, a), term(i, b));
                let (ja, jb) = (term(j, a), term(j, b));
                let (da, db) = (ia - ja, ib - jb);
                if da * db < 0.0 {
                    pts.push(a + (b - a) * da / (da - db));
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        for p in pts.windows(2) {
            let (x0, x1) = (p[0], p[1]);
            if x1 <= x0 {
                continue;
            }
            // evaluate just inside the interval to avoid vertex discontinuities
            let mu = |x: f64| (0..active.len()).map(|i| term(i, x)).fold(0.0, f64::max);
            let (m0, m1) = (mu(x0), mu(x1));
            area += 0.5 * (x1 - x0) * (m0 + m1);
            moment += (x1 - x0) / 6.0 * (x0 * (2.0 * m0 + m1) + x1 * (m0 + 2.0 * m1));
        }
    }
    (area > 0.0).then(|| moment / area)
}

/// Firing strength per consequent for one input. Rules that share a
/// consequent are combined with a bounded sum; the crash memberships form a
/// partition, so an elevated crash rate keeps full strength for Large across
/// the medium/high overlap instead of dipping to one half.
pub fn rule_strengths(p: &FuzzyParams, input: &FuzzyInput) -> Result<BTreeMap<Consequent, f64>> {
    let m = fuzzify_crashes_with(p, input.crashes_per_year)?;
    let conflicts = input.flags.count();
    let mut out = BTreeMap::new();
    for (level, degree) in CrashLevel::ALL.into_iter().zip([m.low, m.medium, m.high]) {
        // flags are crisp, so only the rule matching the observed pattern fires
        let c = consequent(level, conflicts);
        let e = out.entry(c).or_insert(0.0f64);
        *e = (*e + degree).min(1.0);
    }
    Ok(out)
}

pub fn infer_risk_with(p: &FuzzyParams, input: &FuzzyInput) -> Result<RiskScore> {
    let strengths = rule_strengths(p, input)?;
    let terms: Vec<([f64; 3], f64)> = strengths
        .iter()
        .map(|(c, &s)| {
            let t = match c {
                Consequent::Small => p.small,
                Consequent::Medium => p.medium,
                Consequent::Large => p.large,
            };
            (t, s)
        })
        .collect();
    let score = clipped_centroid(&terms)
        .ok_or_else(|| Error::Domain("no rule fired".into()))?
        .clamp(0.0, 100.0);
    RiskScore::from_score(score)
}

pub fn infer_risk(input: &FuzzyInput) -> Result<RiskScore> {
    infer_risk_with(&FuzzyParams::default(), input)
}

/// Memoizes scores: a segment has one crash rate and flags have eight
/// patterns, so the engine only runs a handful of times per segment.
#[derive(Debug, Clone, Default)]
pub struct RiskEngine {
    params: FuzzyParams,
    cache: BTreeMap<(u64, u8), RiskScore>,
}

impl RiskEngine {
    pub fn new(params: FuzzyParams) -> Result<Self> {
        params.validate()?;
        Ok(RiskEngine {
            params,
            cache: BTreeMap::new(),
        })
    }

    pub fn params(&self) -> &FuzzyParams {
        &self.params
    }

    pub fn score(&mut self, crashes_per_year: f64, flags: ConflictFlags) -> Result<RiskScore> {
        let key = (crashes_per_year.to_bits(), flags.ttc as u8 | (flags.mttc as u8) << 1 | (flags.drac as u8) << 2);
        if let Some(s) = self.cache.get(&key) {
            return Ok(*s);
        }
        let s = infer_risk_with(&self.params, &FuzzyInput { crashes_per_year, flags })?;
        self.cache.insert(key, s);
        Ok(s)
    }
}

pub fn segment_risk(scores: impl IntoIterator<Item = f64>) -> f64 {
    scores.into_iter().fold(0.0, f64::max)
}

/// Tumbling-window means of `(t, score)` samples. Windows start at
/// multiples of `window`; a window with no samples is omitted.
pub fn window_average(series: &[(f64, f64)], window: f64) -> Result<Vec<(f64, f64)>> {
    if !(window > 0.0) {
        return Err(Error::Domain(format!("window must be positive, got {window}")));
    }
    let mut acc: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for &(t, v) in series {
        let e = acc.entry((t / window).floor() as i64).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(k, (sum, n))| (k as f64 * window, sum / n as f64))
        .collect())
}

/// One line of the score export. Horizons that were not scored are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub segment_id: String,
    pub t: f64,
    pub actual_1s: Option<f64>,
    pub predicted_1s: Option<f64>,
    pub actual_2s: Option<f64>,
    pub predicted_2s: Option<f64>,
    pub level_actual_1s: Option<RiskLevel>,
    pub level_predicted_1s: Option<RiskLevel>,
    pub level_actual_2s: Option<RiskLevel>,
    pub level_predicted_2s: Option<RiskLevel>,
}

pub const SCORE_COLUMNS: [&str; 10] = [
    "segment_id",
    "t",
    "actual_1s",
    "predicted_1s",
    "actual_2s",
    "predicted_2s",
    "level_actual_1s",
    "level_predicted_1s",
    "level_actual_2s",
    "level_predicted_2s",
];

impl ScoreRow {
    pub fn new(segment_id: &str, t: f64) -> Self {
        ScoreRow {
            segment_id: segment_id.to_string(),
            t,
            actual_1s: None,
            predicted_1s: None,
            actual_2s: None,
            predicted_2s: None,
            level_actual_1s: None,
            level_predicted_1s: None,
            level_actual_2s: None,
            level_predicted_2s: None,
        }
    }

    pub fn set(&mut self, horizon: u8, actual: f64, predicted: f64) -> Result<()> {
        let (a, p) = (Some(actual), Some(predicted));
        let (la, lp) = (Some(bin_level(actual)?), Some(bin_level(predicted)?));
        match horizon {
            1 => {
                (self.actual_1s, self.predicted_1s) = (a, p);
                (self.level_actual_1s, self.level_predicted_1s) = (la, lp);
            }
            2 => {
                (self.actual_2s, self.predicted_2s) = (a, p);
                (self.level_actual_2s, self.level_predicted_2s) = (la, lp);
            }
            _ => return Err(Error::Domain(format!("unsupported horizon {horizon}"))),
        }
        Ok(())
    }

    /// `(actual, predicted)` for a horizon, when scored.
    pub fn pair(&self, horizon: u8) -> Option<(f64, f64)> {
        match horizon {
            1 => self.actual_1s.zip(self.predicted_1s),
            2 => self.actual_2s.zip(self.predicted_2s),
            _ => None,
        }
    }
}

fn fmt_score(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_default()
}

pub fn write_scores<W: Write>(w: W, rows: &[ScoreRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SCORE_COLUMNS)?;
    for r in rows {
        let level = |l: Option<RiskLevel>| l.map(|l| l.name()).unwrap_or("").to_string();
        out.write_record([
            r.segment_id.clone(),
            format!("{:.2}", r.t),
            fmt_score(r.actual_1s),
            fmt_score(r.predicted_1s),
            fmt_score(r.actual_2s),
            fmt_score(r.predicted_2s),
            level(r.level_actual_1s),
            level(r.level_predicted_1s),
            level(r.level_actual_2s),
            level(r.level_predicted_2s),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_scores<R: Read>(r: R) -> Result<Vec<ScoreRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != SCORE_COLUMNS {
        return Err(Error::Schema {
            expected: SCORE_COLUMNS.join(","),
            found: header.join(","),
        });
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Parse(format!("score row {}: bad {what}", line + 2));
        let num = |i: usize| -> Result<Option<f64>> {
            let s = &rec[i];
            if s.is_empty() {
                return Ok(None);
            }
            let v: f64 = s.parse().map_err(|_| bad(SCORE_COLUMNS[i]))?;
            if !(0.0..=100.0).contains(&v) {
                return Err(bad(SCORE_COLUMNS[i]));
            }
            Ok(Some(v))
        };
        let lvl = |i: usize| -> Result<Option<RiskLevel>> {
            let s = &rec[i];
            if s.is_empty() {
                return Ok(None);
            }
            RiskLevel::parse(s).map(Some).ok_or_else(|| bad(SCORE_COLUMNS[i]))
        };
        let t: f64 = rec[1].parse().map_err(|_| bad("t"))?;
        if !t.is_finite() {
            return Err(bad("t"));
        }
        rows.push(ScoreRow {
            segment_id: rec[0].to_string(),
            t,
            actual_1s: num(2)?,
            predicted_1s: num(3)?,
            actual_2s: num(4)?,
            predicted_2s: num(5)?,
            level_actual_1s: lvl(6)?,
            level_predicted_1s: lvl(7)?,
            level_actual_2s: lvl(8)?,
            level_predicted_2s: lvl(9)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flags(n: usize) -> ConflictFlags {
        ConflictFlags::new(n >= 1, n >= 2, n >= 3)
    }

    fn all_patterns() -> impl Iterator<Item = ConflictFlags> {
        (0..8u8).map(|b| ConflictFlags::new(b & 1 != 0, b & 2 != 0, b & 4 != 0))
    }

    /// Centroid of a triangle by midpoint quadrature, independent of the
    /// piecewise-exact integrator.
    fn quadrature(terms: &[([f64; 3], f64)]) -> f64 {
        let n = 200_000;
        let (mut a, mut m) = (0.0, 0.0);
        for i in 0..n {
            let x = (i as f64 + 0.5) * 100.0 / n as f64;
            let mu = terms.iter().map(|(t, s)| triangle(t, x).min(*s)).fold(0.0, f64::max);
            a += mu;
            m += mu * x;
        }
        m / a
    }

    #[test]
    fn crash_memberships() {
        let m = fuzzify_crashes(2.0).unwrap();
        assert_eq!((m.low, m.medium, m.high), (1.0, 0.0, 0.0));
        let m = fuzzify_crashes(8.0).unwrap();
        assert_eq!((m.low, m.medium, m.high), (0.0, 1.0, 0.0));
        let m = fuzzify_crashes(12.0).unwrap();
        assert_eq!((m.low, m.medium, m.high), (0.0, 0.0, 1.0));
        let m = fuzzify_crashes(5.75).unwrap();
        assert!((m.low - 0.5).abs() < 1e-12 && (m.medium - 0.5).abs() < 1e-12);
        assert!(fuzzify_crashes(-1.0).is_err());
    }

    #[test]
    fn crisp_core_centroids() {
        let large = infer_risk(&FuzzyInput { crashes_per_year: 12.0, flags: flags(3) }).unwrap();
        assert!((large.score - 250.0 / 3.0).abs() < 1e-9);
        assert_eq!(large.level, RiskLevel::VeryLarge);
        let small = infer_risk(&FuzzyInput { crashes_per_year: 2.0, flags: flags(0) }).unwrap();
        assert!((small.score - 50.0 / 3.0).abs() < 1e-9);
        assert_eq!(small.level, RiskLevel::VerySmall);
        let medium = infer_risk(&FuzzyInput { crashes_per_year: 8.0, flags: flags(1) }).unwrap();
        assert!((medium.score - 50.0).abs() < 1e-9);
        assert_eq!(medium.level, RiskLevel::Medium);
    }

    #[test]
    fn exact_centroid_matches_quadrature() {
        let p = FuzzyParams::default();
        let cases = [
            vec![(p.small, 0.4), (p.medium, 0.6)],
            vec![(p.medium, 0.3), (p.large, 0.7)],
            vec![(p.small, 1.0), (p.medium, 0.5), (p.large, 0.25)],
            vec![(p.small, 0.2), (p.large, 0.9)],
        ];
        for terms in cases {
            let exact = clipped_centroid(&terms).unwrap();
            assert!((exact - quadrature(&terms)).abs() < 1e-3, "{terms:?}");
        }
    }

    #[test]
    fn no_dip_across_medium_high_overlap() {
        for x in [9.5, 9.9, 10.25, 10.7, 11.0] {
            let s = infer_risk(&FuzzyInput { crashes_per_year: x, flags: flags(2) }).unwrap().score;
            assert!((s - 250.0 / 3.0).abs() < 1e-9, "{x}: {s}");
        }
    }

    #[test]
    fn bins() {
        assert_eq!(bin_level(0.0).unwrap(), RiskLevel::VerySmall);
        assert_eq!(bin_level(20.0).unwrap(), RiskLevel::Small);
        assert_eq!(bin_level(59.999).unwrap(), RiskLevel::Medium);
        assert_eq!(bin_level(100.0).unwrap(), RiskLevel::VeryLarge);
        assert_eq!(bin_level(100.0).unwrap().hex(), "#ff0000");
        assert!(bin_level(100.5).is_err());
        assert!(bin_level(-0.1).is_err());
    }

    #[test]
    fn rule_table_counts() {
        let mut counts = BTreeMap::new();
        for level in CrashLevel::ALL {
            for f in all_patterns() {
                *counts.entry(consequent(level, f.count())).or_insert(0) += 1;
            }
        }
        assert_eq!(counts[&Consequent::Small], 4);
        assert_eq!(counts[&Consequent::Medium], 12);
        assert_eq!(counts[&Consequent::Large], 8);
    }

    #[test]
    fn segment_max() {
        assert_eq!(segment_risk([]), 0.0);
        assert_eq!(segment_risk([16.7, 50.0]), 50.0);
        assert_eq!(segment_risk([33.0]), 33.0);
    }

    #[test]
    fn windows() {
        let constant: Vec<(f64, f64)> = (0..240).map(|i| (i as f64 * 0.5, 42.0)).collect();
        assert!(window_average(&constant, 60.0).unwrap().iter().all(|&(_, m)| m == 42.0));
        let alt: Vec<(f64, f64)> = (0..1200).map(|i| (i as f64 * 0.05, if i % 2 == 0 { 0.0 } else { 100.0 })).collect();
        assert_eq!(window_average(&alt, 60.0).unwrap(), vec![(0.0, 50.0)]);
        let partial = [(0.0, 10.0), (1.0, 20.0), (2.0, 60.0)];
        assert_eq!(window_average(&partial, 60.0).unwrap(), vec![(0.0, 30.0)]);
        assert!(window_average(&partial, 0.0).is_err());
    }

    #[test]
    fn score_csv_round_trip() {
        let mut a = ScoreRow::new("S1", 12.5);
        a.set(1, 16.667, 50.0).unwrap();
        let mut b = ScoreRow::new("S2", 13.0);
        b.set(2, 83.333, 0.0).unwrap();
        let mut buf = Vec::new();
        write_scores(&mut buf, &[a.clone(), b]).unwrap();
        let back = read_scores(&buf[..]).unwrap();
        assert_eq!(back[0], a);
        assert_eq!(back[1].level_actual_2s, Some(RiskLevel::VeryLarge));
        assert_eq!(back[1].actual_1s, None);
        let mut empty = Vec::new();
        write_scores(&mut empty, &[]).unwrap();
        assert!(read_scores(&empty[..]).unwrap().is_empty());
        assert!(read_scores("a,b\n1,2\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_conflicts(crashes in 0.0f64..20.0) {
            let mut prev = 0.0;
            for n in 0..=3 {
                let s = infer_risk(&FuzzyInput { crashes_per_year: crashes, flags: flags(n) }).unwrap().score;
                prop_assert!(s >= prev - 1e-9);
                prev = s;
            }
        }

        #[test]
        fn monotone_in_crashes(a in 0.0f64..20.0, b in 0.0f64..20.0, bits in 0u8..8) {
            let f = ConflictFlags::new(bits & 1 != 0, bits & 2 != 0, bits & 4 != 0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s_lo = infer_risk(&FuzzyInput { crashes_per_year: lo, flags: f }).unwrap().score;
            let s_hi = infer_risk(&FuzzyInput { crashes_per_year: hi, flags: f }).unwrap().score;
            prop_assert!(s_hi >= s_lo - 1e-9);
        }

        #[test]
        fn bounded_by_extreme_centroids(crashes in 0.0f64..30.0, bits in 0u8..8) {
            let f = ConflictFlags::new(bits & 1 != 0, bits & 2 != 0, bits & 4 != 0);
            let s = infer_risk(&FuzzyInput { crashes_per_year: crashes, flags: f }).unwrap().score;
            prop_assert!(s >= 50.0 / 3.0 - 1e-9 && s <= 250.0 / 3.0 + 1e-9);
        }
    }
}
