use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use srm_core::config::PipelineConfig;
use srm_core::fusion::Variant;
use srm_core::heatmap::{cells_grid, render_svg, timeline_grid, write_grid_csv, Grid};
use srm_core::learn::{cross_validate, evaluate, Confusion, LabeledTable, Metrics};
use srm_core::pipeline::{
    build_rows, build_tables, conflict_prevalence, fuse, importance_by_role, level_accuracy, predict_flags,
    recording_midpoint, score_segments, table_comments, train_models, train_models_balanced, ModelKey, ModelSet,
    Site, VehicleRow,
};
use srm_core::risk::{read_scores, write_scores, RiskEngine};
use srm_core::sim::generate_scenario;
use srm_core::tci::Indicator;
use srm_core::Error;

use crate::files::*;
use crate::{CliError, CliResult, HeatmapArgs, ModeArg};

fn model_keys(config: &PipelineConfig) -> Vec<ModelKey> {
    let variants: &[Variant] = if config.simplified { &[Variant::Full, Variant::Simplified] } else { &[Variant::Full] };
    ModelKey::all(&config.horizons, variants)
}

pub fn simulate(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let scenario = generate_scenario(&config.scenario)?;
    for w in &scenario.warnings {
        eprintln!("warning: {w}");
    }
    write_site(&out.join(SITE), &scenario.site())?;
    write_tracks(&out.join(TRACKS), &scenario.tracks)?;
    write_streams(&out.join(FACES), &scenario.streams)?;
    #[derive(Serialize)]
    struct Truth<'a> {
        stream_vehicle: &'a BTreeMap<String, String>,
        behaviors: &'a BTreeMap<String, srm_core::sim::Behavior>,
    }
    write_json(
        &out.join(TRUTH),
        &Truth {
            stream_vehicle: &scenario.stream_vehicle,
            behaviors: &scenario.behaviors,
        },
    )?;
    println!(
        "simulated {} vehicles for {} s; {} app streams; wrote {}",
        scenario.tracks.len(),
        config.scenario.duration,
        scenario.streams.len(),
        out.display()
    );
    Ok(())
}

struct Ingested {
    site: Site,
    rows: Vec<VehicleRow>,
    split_at: Option<f64>,
    matched: usize,
}

fn ingest_rows(config: &PipelineConfig, layout: &Layout) -> CliResult<Ingested> {
    let site = read_site(&layout.site)?;
    let tracks = read_tracks(&layout.tracks, &site)?;
    let streams = read_streams(&layout.faces)?;
    let fused = fuse(&site, &tracks, &streams, &config.matching)?;
    for w in &fused.warnings {
        eprintln!("warning: {w}");
    }
    let rows = at(&layout.tracks, build_rows(&site, &tracks, &fused.drivers, &config.row_options()))?;
    Ok(Ingested {
        site,
        rows,
        split_at: recording_midpoint(&tracks),
        matched: fused.matches.pairs.len(),
    })
}

pub fn ingest(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let layout = Layout::new(config, out);
    let data = ingest_rows(config, &layout)?;
    let keys = model_keys(config);
    let tables = build_tables(&data.rows, &keys);
    let dir = out.join(DATASETS);
    let mut summaries = BTreeMap::new();
    for (key, table) in &tables {
        write_table(&dir.join(format!("{}.csv", key.stem())), table, &table_comments(key))?;
        summaries.insert(
            key.stem(),
            TableSummary {
                rows: table.data.n_rows(),
                positive_rate: table.data.positive_rate(),
            },
        );
    }
    let prevalence: BTreeMap<u8, f64> = config.horizons.iter().map(|&h| (h, conflict_prevalence(&data.rows, h))).collect();
    write_json(
        &dir.join(MANIFEST),
        &Manifest {
            split_at: data.split_at,
            horizons: config.horizons.clone(),
            rows: data.rows.len(),
            matched_streams: data.matched,
            prevalence: prevalence.clone(),
            tables: summaries,
        },
    )?;
    let shares: Vec<String> = prevalence.iter().map(|(h, p)| format!("{h} s: {:.1}%", 100.0 * p)).collect();
    println!(
        "{} vehicle rows, {} matched app streams; conflict prevalence {}; wrote {} tables to {}",
        data.rows.len(),
        data.matched,
        shares.join(", "),
        tables.len(),
        dir.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct ModelReport {
    train_rows: usize,
    positive_rate: f64,
    cv: Option<Metrics>,
    cv_smote: Option<Metrics>,
    holdout_rows: usize,
    holdout: Option<Metrics>,
    holdout_confusion: Option<Confusion>,
}

#[derive(Debug, Serialize)]
struct TrainReport {
    folds: usize,
    temporal_split: bool,
    split_at: Option<f64>,
    rebalanced_training: bool,
    models: BTreeMap<String, ModelReport>,
    importance: Vec<(String, f64)>,
}

fn split_table(table: &LabeledTable, cut: f64) -> (LabeledTable, LabeledTable) {
    let (a, b): (Vec<usize>, Vec<usize>) = (0..table.keys.len()).partition(|&i| table.keys[i].t < cut);
    (table.subset(&a), table.subset(&b))
}

/// Cross-validated metrics, or `None` when the table cannot be split or
/// rebalanced.
fn try_cv(key: &ModelKey, table: &LabeledTable, config: &PipelineConfig, rebalance: bool) -> CliResult<Option<Metrics>> {
    match cross_validate(&table.data, &config.gbdt, config.folds, rebalance, config.seed) {
        Ok(r) => Ok(Some(r.mean)),
        Err(e @ (Error::InsufficientData(_) | Error::InsufficientMinority { .. } | Error::DegenerateLabels)) => {
            let kind = if rebalance { "rebalanced cross-validation" } else { "cross-validation" };
            eprintln!("warning: {key}: {kind} skipped: {e}");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn train(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let layout = Layout::new(config, out);
    let keys = model_keys(config);
    let tables = read_tables(&layout.datasets, &keys)?;
    if tables.is_empty() {
        return Err(CliError::Data {
            path: layout.datasets.clone(),
            source: Error::InsufficientData("no training tables for the configured models".into()),
        });
    }
    let split_at = if config.temporal_split {
        let manifest: Manifest = read_json(&layout.datasets.join(MANIFEST))?;
        manifest.split_at
    } else {
        None
    };
    let (train_tables, held): (BTreeMap<_, _>, BTreeMap<_, _>) = match split_at {
        Some(cut) => tables
            .iter()
            .map(|(k, t)| {
                let (a, b) = split_table(t, cut);
                ((*k, a), (*k, b))
            })
            .unzip(),
        None => (tables.clone(), BTreeMap::new()),
    };

    let models = if config.smote {
        train_models_balanced(&train_tables, &config.gbdt, config.seed)
    } else {
        train_models(&train_tables, &config.gbdt)
    };
    let models = at(&layout.datasets, models)?;

    let mut reports = BTreeMap::new();
    for (key, table) in &train_tables {
        let holdout = match held.get(key) {
            Some(h) if h.data.n_rows() > 0 => Some(evaluate(&models[key], &h.data)?),
            _ => None,
        };
        reports.insert(
            key.stem(),
            ModelReport {
                train_rows: table.data.n_rows(),
                positive_rate: table.data.positive_rate(),
                cv: try_cv(key, table, config, false)?,
                cv_smote: try_cv(key, table, config, true)?,
                holdout_rows: held.get(key).map_or(0, |h| h.data.n_rows()),
                holdout: holdout.map(|c| c.metrics()),
                holdout_confusion: holdout,
            },
        );
    }
    write_models(&out.join(MODELS), &models)?;
    let importance = importance_by_role(&models);
    let mut w = csv_writer(&out.join(IMPORTANCE))?;
    let path = out.join(IMPORTANCE);
    at(&path, w.write_record(["feature", "gain_share"]).map_err(Into::into))?;
    for (name, share) in &importance {
        at(&path, w.write_record([name.clone(), format!("{share:.6}")]).map_err(Into::into))?;
    }
    at(&path, w.flush().map_err(Into::into))?;
    let report = TrainReport {
        folds: config.folds,
        temporal_split: split_at.is_some(),
        split_at,
        rebalanced_training: config.smote,
        models: reports,
        importance,
    };
    write_json(&out.join(CV_REPORT), &report)?;
    print!("{}", metrics_table(&report, config));
    println!("wrote {} models to {}", models.len(), out.join(MODELS).display());
    Ok(())
}

fn metrics_table(report: &TrainReport, config: &PipelineConfig) -> String {
    let mut columns = Vec::new();
    for indicator in Indicator::ALL {
        for &h in &config.horizons {
            columns.push((indicator, h));
        }
    }
    let mut s = format!("{:<36}{:<20}", "Case", "Evaluation Metric");
    for (i, h) in &columns {
        s += &format!("{:>17}", format!("{} in next {h}s", i.name().to_uppercase()));
    }
    s.push('\n');
    type Pick = fn(&ModelReport) -> Option<Metrics>;
    let cases: [(&str, Pick); 3] = [
        ("cross-validated", |r| r.cv),
        ("cross-validated, SMOTE", |r| r.cv_smote),
        ("held-out", |r| r.holdout),
    ];
    let metrics: [(&str, fn(&Metrics) -> f64); 4] = [
        ("Accuracy", |m| m.accuracy),
        ("Precision", |m| m.precision),
        ("Recall", |m| m.recall),
        ("F1-Score", |m| m.f1),
    ];
    let variants: &[Variant] = if config.simplified { &[Variant::Full, Variant::Simplified] } else { &[Variant::Full] };
    for (metric, value) in metrics {
        for &variant in variants {
            for (case, pick) in cases {
                let cells: Vec<Option<f64>> = columns
                    .iter()
                    .map(|&(i, h)| report.models.get(&ModelKey::new(i, h, variant).stem()).and_then(pick).map(|m| value(&m)))
                    .collect();
                if cells.iter().all(Option::is_none) {
                    continue;
                }
                let name = format!("{}, {case}", variant.name());
                s += &format!("{name:<36}{metric:<20}");
                for c in cells {
                    s += &format!("{:>17}", c.map_or("-".to_string(), |v| format!("{v:.3}")));
                }
                s.push('\n');
            }
        }
    }
    s
}

/// Vehicle rows to predict on: the held-out half under a temporal split,
/// otherwise everything.
fn scoring_rows(config: &PipelineConfig, layout: &Layout) -> CliResult<(Site, Vec<VehicleRow>)> {
    let data = ingest_rows(config, layout)?;
    let rows = match (config.temporal_split, data.split_at) {
        (true, Some(cut)) => data.rows.into_iter().filter(|r| r.t >= cut).collect(),
        _ => data.rows,
    };
    Ok((data.site, rows))
}

fn load_models(layout: &Layout) -> CliResult<ModelSet> {
    let models = read_models(&layout.models)?;
    if models.is_empty() {
        return Err(CliError::Data {
            path: layout.models.clone(),
            source: Error::InsufficientData("no models found".into()),
        });
    }
    Ok(models)
}

pub fn predict(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let layout = Layout::new(config, out);
    let models = load_models(&layout)?;
    let (_, rows) = scoring_rows(config, &layout)?;
    let path = out.join(PREDICTIONS);
    let mut w = csv_writer(&path)?;
    let mut write = |rec: Vec<String>| at(&path, w.write_record(&rec).map_err(Into::into));
    write(["vehicle_id", "t", "segment_id", "horizon", "variant", "ttc", "mttc", "drac"].map(String::from).to_vec())?;
    let mut unscored = 0;
    for row in &rows {
        for &h in &config.horizons {
            let flags = predict_flags(&models, row, h)?;
            let full = row.has_driver() && Indicator::ALL.iter().all(|&i| models.contains_key(&ModelKey::new(i, h, Variant::Full)));
            let variant = match flags {
                None => {
                    unscored += 1;
                    ""
                }
                Some(_) if full => Variant::Full.name(),
                Some(_) => Variant::Simplified.name(),
            };
            let flag = |i: Indicator| flags.map_or(String::new(), |f| (f.get(i) as u8).to_string());
            write(vec![
                row.vehicle_id.clone(),
                format!("{:.2}", row.t),
                row.segment_id.clone(),
                h.to_string(),
                variant.to_string(),
                flag(Indicator::Ttc),
                flag(Indicator::Mttc),
                flag(Indicator::Drac),
            ])?;
        }
    }
    at(&path, w.flush().map_err(Into::into))?;
    println!("predicted {} vehicle rows ({unscored} without a usable model); wrote {}", rows.len(), path.display());
    Ok(())
}

pub fn score(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let layout = Layout::new(config, out);
    let models = load_models(&layout)?;
    let (site, rows) = scoring_rows(config, &layout)?;
    let mut engine = RiskEngine::new(config.fuzzy.clone())?;
    let summary = score_segments(&site, &rows, &models, &config.horizons, &mut engine)?;
    let path = out.join(SCORES);
    write_with(&path, |w| write_scores(w, &summary.rows))?;
    for &h in &config.horizons {
        if let Some(acc) = level_accuracy(&summary.rows, h) {
            println!("risk level accuracy, {h} s horizon: {acc:.3}");
        }
    }
    println!("scored {} segment-timestamps; wrote {}", summary.rows.len(), path.display());
    Ok(())
}

fn write_grid(out: &Path, name: &str, grid: &Grid) -> CliResult<()> {
    let svg_path = out.join(format!("{name}.svg"));
    write_text(&svg_path, &at(&svg_path, render_svg(grid))?)?;
    let csv_path = out.join(format!("{name}.csv"));
    write_with(&csv_path, |w| write_grid_csv(w, grid))
}

pub fn heatmap(config: &PipelineConfig, out: &Path, args: &HeatmapArgs) -> CliResult<()> {
    let layout = Layout::new(config, out);
    let file = std::fs::File::open(&layout.scores).map_err(|e| CliError::Data {
        path: layout.scores.clone(),
        source: e.into(),
    })?;
    let rows = at(&layout.scores, read_scores(std::io::BufReader::new(file)))?;
    if matches!(args.mode, ModeArg::Cells | ModeArg::Both) {
        write_grid(out, "heatmap_cells", &cells_grid(&rows, args.at)?)?;
    }
    if matches!(args.mode, ModeArg::Timeline | ModeArg::Both) {
        let horizon = config.horizons[0];
        write_grid(out, "heatmap_timeline", &timeline_grid(&rows, horizon, !args.actual, config.window)?)?;
    }
    println!("drew heat maps from {} score rows into {}", rows.len(), out.display());
    Ok(())
}

/// The full protocol: both model variants, trained on the first half of the
/// recording and scored on the second.
pub fn run_all(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let mut config = config.clone();
    config.simplified = true;
    config.temporal_split = true;
    let config = &config;
    simulate(config, out)?;
    ingest(config, out)?;
    train(config, out)?;
    predict(config, out)?;
    score(config, out)?;
    heatmap(config, out, &HeatmapArgs::default())
}
