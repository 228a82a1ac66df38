//! Simulator-to-scores flow on a short recording, plus file round trips.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::sync::OnceLock;

use srm_core::driver::{read_calibration, read_face_frames, write_calibration, write_face_frames};
use srm_core::fusion::Variant;
use srm_core::learn::{GbdtParams, LabeledTable};
use srm_core::pipeline::{
    build_rows, build_tables, fuse, score_segments, train_models, Fused, MatchOptions, ModelKey, RowOptions, Site,
    VehicleRow,
};
use srm_core::risk::{bin_level, read_scores, write_scores, RiskEngine};
use srm_core::sim::{generate_scenario, Scenario, ScenarioConfig};
use srm_core::trajectory::{read_track_records, resolve_records, write_track_points, TrackPoint};

struct Short {
    scenario: Scenario,
    site: Site,
    fused: Fused,
    rows: Vec<VehicleRow>,
}

fn short() -> &'static Short {
    static DATA: OnceLock<Short> = OnceLock::new();
    DATA.get_or_init(|| {
        let config = ScenarioConfig {
            seed: 13,
            duration: 90.0,
            vehicles: 24,
            ring_length: 500.0,
            ..ScenarioConfig::default()
        };
        let scenario = generate_scenario(&config).unwrap();
        let site = scenario.site();
        let fused = fuse(&site, &scenario.tracks, &scenario.streams, &MatchOptions::default()).unwrap();
        let rows = build_rows(&site, &scenario.tracks, &fused.drivers, &RowOptions::default()).unwrap();
        Short { scenario, site, fused, rows }
    })
}

#[test]
fn tracks_survive_a_file_round_trip() {
    let data = short();
    let mut buf = Vec::new();
    for points in data.scenario.tracks.values() {
        write_track_points(&mut buf, points).unwrap();
    }
    let records = read_track_records(Cursor::new(buf)).unwrap();
    let back: BTreeMap<String, Vec<TrackPoint>> = resolve_records(records, Some(&data.site.segments)).unwrap();
    assert_eq!(back, data.scenario.tracks);
}

#[test]
fn face_streams_survive_a_file_round_trip() {
    let stream = &short().scenario.streams[0];
    let mut buf = Vec::new();
    write_face_frames(&mut buf, &stream.frames).unwrap();
    assert_eq!(read_face_frames(Cursor::new(buf)).unwrap(), stream.frames);
    let mut buf = Vec::new();
    write_calibration(&mut buf, &stream.calibration).unwrap();
    assert_eq!(read_calibration(Cursor::new(buf)).unwrap(), stream.calibration);
}

#[test]
fn fusion_finds_the_vehicle_each_app_rode_in() {
    let data = short();
    assert!(!data.scenario.stream_vehicle.is_empty());
    for (stream, vehicle) in &data.scenario.stream_vehicle {
        assert_eq!(data.fused.matches.vehicle_for(stream), Some(vehicle.as_str()), "{stream}");
    }
    assert_eq!(data.fused.drivers.len(), data.scenario.stream_vehicle.len());
}

#[test]
fn only_equipped_vehicles_have_driver_inputs() {
    let data = short();
    let equipped: Vec<&str> = data.scenario.stream_vehicle.values().map(String::as_str).collect();
    for row in &data.rows {
        if !equipped.contains(&row.vehicle_id.as_str()) {
            assert!(!row.has_driver(), "{} at {}", row.vehicle_id, row.t);
        }
    }
    assert!(data.rows.iter().any(VehicleRow::has_driver));
}

#[test]
fn labels_are_unknown_only_near_the_end() {
    let data = short();
    let end = data.scenario.tracks.values().flatten().map(|p| p.t).fold(0.0, f64::max);
    for row in &data.rows {
        for (&h, label) in &row.labels {
            if label.is_none() {
                assert!(row.t + h as f64 > end - 1e-6, "{} at {} lacks a {h} s label", row.vehicle_id, row.t);
            }
        }
    }
}

#[test]
fn tables_round_trip_through_csv() {
    let data = short();
    let keys = ModelKey::all(&[1], &[Variant::Full, Variant::Simplified]);
    for (key, table) in build_tables(&data.rows, &keys) {
        let mut buf = Vec::new();
        table.write_csv(&mut buf, &[format!("model {key}")]).unwrap();
        let back = LabeledTable::read_csv(Cursor::new(buf)).unwrap();
        assert_eq!(back.data.schema_hash(), table.data.schema_hash(), "{key}");
        assert_eq!(back.data.labels, table.data.labels, "{key}");
        assert_eq!(back.keys, table.keys, "{key}");
        for i in 0..table.data.n_rows() {
            assert_eq!(back.data.row(i), table.data.row(i), "{key} row {i}");
        }
    }
}

#[test]
fn scores_cover_every_segment_and_carry_consistent_levels() {
    let data = short();
    let keys = ModelKey::all(&[1, 2], &[Variant::Full, Variant::Simplified]);
    let params = GbdtParams { trees: 15, ..GbdtParams::default() };
    let models = train_models(&build_tables(&data.rows, &keys), &params).unwrap();
    let mut engine = RiskEngine::default();
    let summary = score_segments(&data.site, &data.rows, &models, &[1, 2], &mut engine).unwrap();
    assert_eq!(summary.unscored, 0);

    let segments = data.site.segments.segments.len();
    assert_eq!(summary.rows.len() % segments, 0);
    for r in &summary.rows {
        for (score, level) in [
            (r.actual_1s, r.level_actual_1s),
            (r.predicted_1s, r.level_predicted_1s),
            (r.actual_2s, r.level_actual_2s),
            (r.predicted_2s, r.level_predicted_2s),
        ] {
            assert_eq!(score.map(|s| bin_level(s).unwrap()), level);
        }
        assert!(r.predicted_1s.is_some() && r.predicted_2s.is_some());
    }

    let mut buf = Vec::new();
    write_scores(&mut buf, &summary.rows).unwrap();
    let back = read_scores(Cursor::new(&buf)).unwrap();
    let mut again = Vec::new();
    write_scores(&mut again, &back).unwrap();
    assert_eq!(buf, again, "score CSV is stable under a read and rewrite");
}
