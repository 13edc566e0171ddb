//! The subcommands as library functions. Each returns the lines it reports.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use voxhand_core::eval::{annotator_agreement, default_thresholds, evaluate, AgreementReport};
use voxhand_core::pipeline::{build_db, Estimator};
use voxhand_core::synth::{augment_background, composite, generate_set, seed_backgrounds};
use voxhand_core::voxel::ExemplarDb;
use voxhand_dataset::import::write_imported;
use voxhand_dataset::{
    import_dataset, load_dataset, load_exemplar_db, merged_annotations, read_accepted, save_exemplar_db, Annotation,
    Dataset, DatasetWriter, PredictionRecord, PredictionSet,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Frames decoded at once while building a database.
const BUILD_CHUNK: usize = 1024;
/// Stream offset separating background augmentation from pose sampling.
const BACKGROUND_STREAM: u64 = 1 << 40;

/// Runs `f` on a pool of `workers` threads, or the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| CliError::Internal(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn cmd_synth(cfg: &RunConfig) -> CliResult<Vec<String>> {
    let out = cfg.require(&cfg.paths.out, "out")?;
    let count = cfg.synth.count.ok_or_else(|| CliError::Usage("missing --count".into()))?;
    if count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let gen = cfg.generate_config()?;
    let seed = cfg.seed();
    let n_bg = cfg.synth.backgrounds.unwrap_or(0);
    let negatives = cfg.synth.negatives.unwrap_or(0);
    if negatives > 0 && n_bg == 0 {
        return Err(CliError::Usage("--negatives needs --backgrounds".into()));
    }

    with_workers(cfg.workers, || -> CliResult<Vec<String>> {
        let set = generate_set(count, seed, &gen)?;
        let bgs = if n_bg > 0 { seed_backgrounds(n_bg, seed, &gen.render)? } else { Vec::new() };
        let augmented = |i: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(BACKGROUND_STREAM + i);
            augment_background(&bgs[i as usize % bgs.len()], &mut rng)
        };
        let samples = if bgs.is_empty() {
            set.samples
        } else {
            set.samples
                .par_iter()
                .enumerate()
                .map(|(i, s)| composite(s, &augmented(i as u64)))
                .collect::<voxhand_core::Result<Vec<_>>>()?
        };

        let r = &gen.render;
        let mut w = DatasetWriter::create(out, format!("synth-{seed}"), r.intrinsics, r.width, r.height)?;
        for (i, s) in samples.iter().enumerate() {
            w.add_frame(&format!("{i:06}"), &s.frame, &[Annotation { annotator: "synth".into(), pose: s.pose.clone() }])?;
        }
        for k in 0..negatives {
            w.add_frame(&format!("neg-{k:06}"), &augmented((count + k) as u64), &[])?;
        }
        w.finish()?;
        Ok(vec![
            format!("wrote {} frames ({negatives} without hands) to {}", count + negatives, out.display()),
            format!("pose rejections {}, render retries {}", set.pose_rejections, set.render_failures),
        ])
    })?
}

pub fn cmd_import(cfg: &RunConfig, format: &str) -> CliResult<Vec<String>> {
    let root = cfg.require(&cfg.paths.dataset, "path")?;
    let m = import_dataset(format, root)?;
    let path = write_imported(root, &m)?;
    Ok(vec![format!("imported {} frames into {}", m.frames.len(), path.display())])
}

/// Builds templates from every annotated hand in the training set.
pub fn build_from_dataset(cfg: &RunConfig, ds: &Dataset) -> CliResult<(ExemplarDb, usize)> {
    let grid = cfg.grid()?;
    let options = cfg.exemplar_options();
    let mut db = ExemplarDb::new(grid);
    let mut skipped = 0;
    let jobs: Vec<(usize, usize)> = (0..ds.len()).flat_map(|i| (0..ds.annotations(i).len()).map(move |h| (i, h))).collect();
    for chunk in jobs.chunks(BUILD_CHUNK) {
        let mut frames: Vec<_> = chunk.iter().map(|(i, _)| *i).collect();
        frames.dedup();
        let decoded = frames.par_iter().map(|i| ds.depth(*i).map(|d| (*i, d))).collect::<Result<Vec<_>, _>>()?;
        let lookup = |i: usize| &decoded[decoded.binary_search_by_key(&i, |(j, _)| *j).expect("decoded")].1;
        let items: Vec<_> = chunk
            .iter()
            .map(|&(i, h)| {
                let id = ds.entry(i).expect("in range").id.clone();
                let id = if ds.annotations(i).len() > 1 { format!("{id}#{h}") } else { id };
                (lookup(i), &ds.annotations(i)[h].pose, id)
            })
            .collect();
        let (part, report) = build_db(items, &grid, &options)?;
        skipped += report.skipped.len();
        for t in part.templates() {
            db.push(t.clone())?;
        }
    }
    Ok((db, skipped))
}

pub fn cmd_build_db(cfg: &RunConfig) -> CliResult<Vec<String>> {
    let train = cfg.require(&cfg.paths.train, "train")?;
    let out = cfg.require(&cfg.paths.out, "out")?;
    let ds = load_dataset(train)?;
    if ds.is_empty() {
        return Err(CliError::Data(format!("{}: manifest lists no frames", train.display())));
    }
    let (db, skipped) = with_workers(cfg.workers, || build_from_dataset(cfg, &ds))??;
    if db.is_empty() {
        return Err(CliError::Data(format!("no usable exemplars: all {skipped} annotated hands were rejected")));
    }
    save_exemplar_db(&db, out)?;
    Ok(vec![format!("built {} exemplars, skipped {skipped}; wrote {}", db.len(), out.display())])
}

pub fn estimate_dataset(cfg: &RunConfig, db: &ExemplarDb, ds: &Dataset) -> CliResult<PredictionSet> {
    if cfg.grid_overridden() && cfg.grid()? != db.config {
        return Err(CliError::Data(format!(
            "grid mismatch: configured {:?} but the database was built on {:?}",
            cfg.grid()?,
            db.config
        )));
    }
    let est = Estimator::new(db, cfg.search_options()?)?;
    let frames = (0..ds.len())
        .into_par_iter()
        .map(|i| -> CliResult<PredictionRecord> {
            let id = ds.entry(i).expect("in range").id.clone();
            Ok(match est.detect(&ds.depth(i)?)? {
                Some(d) => PredictionRecord::from_detection(id, &d),
                None => PredictionRecord::none(id),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(PredictionSet { dataset: ds.name().to_owned(), frames })
}

pub fn cmd_estimate(cfg: &RunConfig) -> CliResult<Vec<String>> {
    let test = cfg.require(&cfg.paths.test, "test")?;
    let db_path = cfg.require(&cfg.paths.db, "db")?;
    let out = cfg.require(&cfg.paths.out, "out")?;
    let ds = load_dataset(test)?;
    let db = load_exemplar_db(db_path)?;
    if db.is_empty() {
        return Err(CliError::Data(format!("{}: exemplar database is empty", db_path.display())));
    }
    let preds = with_workers(cfg.workers, || estimate_dataset(cfg, &db, &ds))??;
    write_file(out, preds.to_json())?;
    let hits = preds.frames.iter().filter(|f| f.hand.is_some()).count();
    Ok(vec![format!("{} frames, {hits} detections; wrote {}", preds.frames.len(), out.display())])
}

pub fn cmd_evaluate(cfg: &RunConfig) -> CliResult<Vec<String>> {
    let pred_path = cfg.require(&cfg.paths.predictions, "predictions")?;
    let test = cfg.require(&cfg.paths.test, "test")?;
    let out = cfg.require(&cfg.paths.out, "out")?;
    let mode = cfg.error_mode()?;
    let preds = PredictionSet::from_json(&read_file(pred_path)?, pred_path)?;
    let ds = load_dataset(test)?;
    if preds.frames.len() != ds.len() {
        return Err(CliError::Data(format!(
            "frame count mismatch: {} predictions for {} test frames",
            preds.frames.len(),
            ds.len()
        )));
    }
    let mut partials = Vec::with_capacity(ds.len());
    let mut gts = Vec::with_capacity(ds.len());
    for (i, p) in preds.frames.iter().enumerate() {
        let id = &ds.entry(i).expect("in range").id;
        if &p.frame != id {
            return Err(CliError::Data(format!("prediction {i} is for frame {:?}, test frame is {id:?}", p.frame)));
        }
        partials.push(p.partial()?);
        gts.push(ds.annotations(i).iter().map(|a| a.pose.clone()).collect());
    }
    let report = evaluate(&partials, &gts, mode)?;
    create_dir(out)?;
    write_file(&out.join("report.json"), report.to_json())?;
    write_file(&out.join("report.csv"), report.to_csv())?;
    write_file(&out.join("report.svg"), report.to_svg())?;
    let mut lines = vec![format!("{} frames, {} failures, mode {mode:?}", report.frame_count, report.failures)];
    for p in &report.highlights {
        lines.push(format!("  within {} mm: {:.1}%", p.threshold_mm, 100.0 * p.proportion));
    }
    lines.push(format!("wrote report.json, report.csv, report.svg to {}", out.display()));
    Ok(lines)
}

/// Agreement between the first two annotators on every frame that has two.
pub fn agreement_for(ds: &Dataset, accepted_path: Option<&Path>, cfg: &RunConfig) -> CliResult<AgreementReport> {
    let accepted = match accepted_path {
        Some(p) => read_accepted(p)?,
        None => Vec::new(),
    };
    let frames: Vec<Vec<(String, _)>> = merged_annotations(ds, &accepted)
        .into_iter()
        .map(|hands| hands.into_iter().map(|a| (a.annotator, a.pose)).collect())
        .collect();
    Ok(annotator_agreement(&frames, cfg.error_mode()?, &default_thresholds())?)
}

pub fn agreement_csv(r: &AgreementReport) -> String {
    let mut s = String::from("threshold_mm,proportion\n");
    for (t, p) in r.thresholds.iter().zip(&r.curve) {
        s.push_str(&format!("{t},{p}\n"));
    }
    s
}

pub fn cmd_agreement(cfg: &RunConfig) -> CliResult<Vec<String>> {
    let root = cfg.require(&cfg.paths.dataset, "dataset")?;
    let out = cfg.require(&cfg.paths.out, "out")?;
    let ds = load_dataset(root)?;
    let report = agreement_for(&ds, cfg.paths.annotations.as_deref(), cfg)?;
    create_dir(out)?;
    write_file(&out.join("agreement.json"), serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    write_file(&out.join("agreement.csv"), agreement_csv(&report))?;
    Ok(vec![format!("{} frames compared; wrote agreement.json, agreement.csv to {}", report.frames_compared, out.display())])
}
