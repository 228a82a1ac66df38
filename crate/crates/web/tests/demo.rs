use srm_core::tci::ConflictFlags;
use srm_web::{emotions, indicators, level_color, performance_grid, segment_score, surface};

#[test]
fn indicator_report_for_a_closing_pair() {
    let r = indicators(30.0, 20.0, 10.0, 0.0, 0.0).unwrap();
    assert_eq!(r.ttc, Some(3.0));
    assert_eq!(r.mttc, Some(3.0));
    assert!((r.drac.unwrap() - 100.0 / 60.0).abs() < 1e-12);
    assert_eq!(r.conflict, ConflictFlags::default());

    let close = indicators(5.0, 20.0, 10.0, 0.0, 0.0).unwrap();
    assert_eq!(close.conflict, ConflictFlags::new(true, true, true));
}

#[test]
fn opening_gap_has_no_bounded_indicators() {
    let r = indicators(30.0, 10.0, 20.0, 0.0, 0.0).unwrap();
    assert_eq!((r.ttc, r.mttc, r.drac), (None, None, Some(0.0)));
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"ttc\":null"), "{json}");
}

#[test]
fn invalid_gap_is_an_error() {
    assert!(indicators(0.0, 10.0, 5.0, 0.0, 0.0).is_err());
    assert!(indicators(f64::NAN, 10.0, 5.0, 0.0, 0.0).is_err());
}

#[test]
fn segment_scores_carry_level_colors() {
    let low = segment_score(2.0, ConflictFlags::default()).unwrap();
    assert_eq!((low.level, low.color), ("very_small", "#008000"));
    let mid = segment_score(8.0, ConflictFlags::new(true, false, false)).unwrap();
    assert!((mid.score - 50.0).abs() < 1e-9);
    assert_eq!(mid.color, "#ffff00");
    assert!(segment_score(-1.0, ConflictFlags::default()).is_err());
}

#[test]
fn surface_rows_are_monotone() {
    let steps = 41;
    let s = surface(15.0, steps).unwrap();
    assert_eq!(s.len(), 4 * steps);
    for row in s.chunks(steps) {
        assert!(row.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }
    for k in 0..steps {
        assert!((0..3).all(|c| s[(c + 1) * steps + k] >= s[c * steps + k] - 1e-9));
    }
    assert!(surface(0.0, 10).is_err());
    assert!(surface(10.0, 1).is_err());
}

#[test]
fn performance_grid_is_normalized() {
    let g = performance_grid(101);
    assert_eq!(g.len(), 101 * 101);
    assert!(g.iter().all(|&p| (0.0..=1.0).contains(&p)));
    let peak = g.iter().cloned().fold(0.0, f64::max);
    assert!(peak > 0.99);
}

#[test]
fn six_emotions_listed() {
    let e = emotions();
    assert_eq!(e.len(), 6);
    let calm = e.iter().find(|p| p.name == "calm").unwrap();
    assert_eq!((calm.valence, calm.arousal), (-0.09, -0.11));
}

#[test]
fn colors_by_score() {
    assert_eq!(level_color(10.0), "#008000");
    assert_eq!(level_color(30.0), "#0000ff");
    assert_eq!(level_color(50.0), "#ffff00");
    assert_eq!(level_color(70.0), "#ffa500");
    assert_eq!(level_color(100.0), "#ff0000");
    assert_eq!(level_color(150.0), "#ff0000");
}
