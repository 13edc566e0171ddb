//! Flag definitions. Every flag maps onto a [`RunConfig`] key.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "voxhand", version, about = "Volumetric exemplar hand pose estimation")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic dataset.
    Synth(SynthArgs),
    /// Convert an external layout in place by writing manifest.json.
    Import(ImportArgs),
    /// Build an exemplar database from a training dataset.
    BuildDb(BuildDbArgs),
    /// Run the nearest-exemplar estimator on a test dataset.
    Estimate(EstimateArgs),
    /// Score predictions against test annotations.
    Evaluate(EvaluateArgs),
    /// Inter-annotator agreement report.
    Agreement(AgreementArgs),
    /// Serve the annotation API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Composite every hand over one of this many augmented room scenes.
    #[arg(long)]
    pub backgrounds: Option<usize>,
    /// Extra hand-free background frames.
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub edge_dropout: Option<f64>,
    /// Camera tilt range, radians: LO,HI
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub tilt: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub yaw: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub roll: Option<[f64; 2]>,
    /// Hand centroid depth, millimeters.
    #[arg(long)]
    pub depth: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[arg(long)]
    pub format: String,
    #[arg(long)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub scene_side: Option<usize>,
    #[arg(long)]
    pub template_side: Option<usize>,
    #[arg(long)]
    pub voxel_size: Option<f64>,
    /// Grid corner, millimeters: X,Y,Z
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub origin: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
pub struct BuildDbArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub min_columns: Option<usize>,
    #[arg(long)]
    pub max_protrusion: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Detection threshold as a fraction of the exemplar's voxel count.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub absolute_threshold: Option<u64>,
    #[arg(long)]
    pub no_threshold: bool,
    /// Coarse-to-fine scan (approximate).
    #[arg(long)]
    pub coarse: bool,
    /// Expected grid; an error if the database differs.
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// max or mean
    #[arg(long)]
    pub mode: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Accepted-annotation log to merge in.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Accepted-annotation log; default `<dataset>/accepted.jsonl`.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
}

fn parse_floats<const K: usize>(s: &str) -> Result<[f64; K], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| format!("expected {K} comma-separated numbers"))
}

fn parse_range(s: &str) -> Result<[f64; 2], String> {
    parse_floats::<2>(s)
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    parse_floats::<3>(s)
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

impl GridArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.grid.scene_side, self.scene_side);
        set(&mut cfg.grid.template_side, self.template_side);
        set(&mut cfg.grid.voxel_size, self.voxel_size);
        set(&mut cfg.grid.origin, self.origin);
    }
}

impl Cli {
    /// Layers the flags over `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.workers, self.workers);
        let p = &mut cfg.paths;
        match &self.command {
            Command::Synth(a) => {
                set(&mut p.out, a.out.clone());
                let s = &mut cfg.synth;
                set(&mut s.count, a.count);
                set(&mut s.backgrounds, a.backgrounds);
                set(&mut s.negatives, a.negatives);
                set(&mut s.noise_sigma, a.noise_sigma);
                set(&mut s.edge_dropout, a.edge_dropout);
                set(&mut s.tilt, a.tilt);
                set(&mut s.yaw, a.yaw);
                set(&mut s.roll, a.roll);
                set(&mut s.depth, a.depth);
            }
            Command::Import(a) => set(&mut p.dataset, a.path.clone()),
            Command::BuildDb(a) => {
                set(&mut p.train, a.train.clone());
                set(&mut p.out, a.out.clone());
                a.grid.apply(cfg);
                set(&mut cfg.exemplar.min_columns, a.min_columns);
                set(&mut cfg.exemplar.max_protrusion, a.max_protrusion);
            }
            Command::Estimate(a) => {
                set(&mut p.test, a.test.clone());
                set(&mut p.db, a.db.clone());
                set(&mut p.out, a.out.clone());
                a.grid.apply(cfg);
                let s = &mut cfg.search;
                set(&mut s.threshold, a.threshold);
                set(&mut s.absolute_threshold, a.absolute_threshold);
                if a.no_threshold {
                    s.no_threshold = Some(true);
                }
                if a.coarse {
                    s.coarse = Some(true);
                }
            }
            Command::Evaluate(a) => {
                set(&mut p.predictions, a.predictions.clone());
                set(&mut p.test, a.test.clone());
                set(&mut p.out, a.out.clone());
                set(&mut cfg.eval.mode, a.mode.clone());
            }
            Command::Agreement(a) => {
                set(&mut p.dataset, a.dataset.clone());
                set(&mut p.annotations, a.annotations.clone());
                set(&mut p.out, a.out.clone());
                set(&mut cfg.eval.mode, a.mode.clone());
            }
            Command::Serve(a) => {
                set(&mut p.dataset, a.dataset.clone());
                set(&mut p.annotations, a.annotations.clone());
                set(&mut cfg.serve.host, a.host.clone());
                set(&mut cfg.serve.port, a.port);
            }
        }
    }
}
