//! The `voxattr` command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage error, 3 missing file, 4 malformed
//! input, 5 shape mismatch.

mod writers;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    additivity, additivity_csv, additivity_record, correlation_csv, correlation_histogram, empty_grid_score,
    histogram_csv, method_correlation,
};
use crate::attribution::{
    clrp, coordinate_gradients, empty_space_relevance, mask_atoms, mask_fragments, mask_residues, masking_combined,
    write_score_table, AtomScoreMap, RelevanceLayer, RelevanceTape,
};
use crate::error::{Error, Result};
use crate::filterviz::{
    averages_csv, channel_averages, channel_labels, cluster_filters, filter_activity, flatten_filters, flattened_csv,
    ConvFilters,
};
use crate::gridder::{random_transform, voxelize, DxGrid, GridSpec};
use crate::molio::{parse_complex, AtomTypeTable, Complex};
use crate::tensornet::{
    load_model, save_model, synthetic_dataset, toy_architecture, train_toy, Head, ModelSpec, ModelWeights, Network,
    Target, TrainConfig,
};

pub use writers::{
    arrows_csv, arrows_pymol_script, bfactor_structure, parse_bfactors, vector_arrows, write_bfactor_structure,
    write_vector_script, Arrow, DEFAULT_ARROW_SCALE, DEFAULT_ARROW_THRESHOLD,
};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "VOXATTR_THREADS";

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISSING_FILE: i32 = 3;
pub const EXIT_BAD_FORMAT: i32 = 4;
pub const EXIT_SHAPE: i32 = 5;

#[derive(Parser, Debug)]
#[command(name = "voxattr", version, about = "Score protein-ligand complexes with a voxel CNN and explain the scores per atom")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HeadArg {
    Pose,
    Affinity,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetArg {
    Logit,
    Prob,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MaskMode {
    Atom,
    Fragment,
    Residue,
    Combined,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Architecture {
    Default,
    Toy,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Complex file; repeat for commands that take several.
    #[arg(long = "complex")]
    complexes: Vec<PathBuf>,
    /// Atom type radius overrides (`TYPE <name> <L|R> <radius>` lines).
    #[arg(long)]
    types: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pose")]
    head: HeadArg,
    /// Pose-head quantity to explain.
    #[arg(long, value_enum, default_value = "logit")]
    target: TargetArg,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest fragment size, in bonds, for fragment masking.
    #[arg(long, default_value_t = 6)]
    bond_budget: usize,
    /// Grid edge length in Å.
    #[arg(long)]
    grid_dim: Option<f64>,
    /// Grid spacing in Å.
    #[arg(long)]
    grid_res: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the head outputs for a complex.
    Score(Common),
    /// Masking scores per atom.
    Mask {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "combined")]
        mode: MaskMode,
    },
    /// Coordinate gradients per atom, with arrow files.
    Gradient {
        #[command(flatten)]
        common: Common,
        /// Also report receptor atoms.
        #[arg(long)]
        receptor: bool,
        /// Length in Å of the largest arrow.
        #[arg(long, default_value_t = DEFAULT_ARROW_SCALE)]
        arrow_scale: f64,
        /// Smallest gradient norm drawn as an arrow.
        #[arg(long, default_value_t = DEFAULT_ARROW_THRESHOLD)]
        arrow_threshold: f64,
    },
    /// Conserved relevance propagation per atom.
    Clrp(Common),
    /// Relevance that reached empty space, as an OpenDX grid.
    Emptyspace(Common),
    /// First-convolution filter tables; complexes, if given, are the probe set.
    Filters(Common),
    /// Sums of atom and fragment masking scores against the totals.
    Additivity(Common),
    /// Per-atom correlation between masking, gradient and relevance scores.
    Compare(Common),
    /// Train a small model on synthetic poses.
    TrainToy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        examples: usize,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        /// Randomly rotate and translate examples at every step.
        #[arg(long)]
        augment: bool,
    },
    /// Write a complex's density grid as OpenDX.
    Voxelize {
        #[command(flatten)]
        common: Common,
        /// Single channel to write; all channels are summed otherwise.
        #[arg(long)]
        channel: Option<usize>,
        /// Apply a random rigid transform drawn from the seed.
        #[arg(long)]
        augment: bool,
        #[arg(long, default_value_t = 2.0)]
        max_translate: f64,
    },
    /// Write a model file with zero or random weights.
    InitModel {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "default")]
        architecture: Architecture,
        /// He-normal weights from the seed instead of zeros.
        #[arg(long)]
        random: bool,
        #[arg(long, default_value = "model.vxattr")]
        file_name: String,
    },
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING_FILE,
        Error::Parse { .. } | Error::ModelFormat(_) => EXIT_BAD_FORMAT,
        Error::Shape(_) => EXIT_SHAPE,
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_OTHER,
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let mut stdout = String::new();
    match execute(cli.command, &mut stdout) {
        Ok(()) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            print!("{stdout}");
            eprintln!("voxattr: error: {e}");
            exit_code(&e)
        }
    }
}

struct Context {
    common: Common,
    command: &'static str,
}

impl Context {
    fn head(&self) -> Head {
        match self.common.head {
            HeadArg::Pose => Head::Pose,
            HeadArg::Affinity => Head::Affinity,
        }
    }

    fn target(&self) -> Target {
        match self.common.target {
            TargetArg::Logit => Target::Logit,
            TargetArg::Prob => Target::Probability,
        }
    }

    fn target_name(&self) -> &'static str {
        match self.common.target {
            TargetArg::Logit => "logit",
            TargetArg::Prob => "prob",
        }
    }

    fn types(&self) -> Result<Arc<AtomTypeTable>> {
        Ok(Arc::new(match &self.common.types {
            Some(p) => AtomTypeTable::load_overrides(p)?,
            None => AtomTypeTable::default(),
        }))
    }

    fn network(&self, types: &AtomTypeTable) -> Result<Network<f64>> {
        let path = self
            .common
            .model
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("{} needs --model", self.command)))?;
        let (spec, weights) = load_model::<f64>(path)?;
        if spec.input_channels != types.len() {
            return Err(Error::Shape(format!(
                "model has {} input channels, type table {} types",
                spec.input_channels,
                types.len()
            )));
        }
        self.check_grid_flags(&spec)?;
        Network::new(spec, weights)
    }

    /// Grid overrides must agree with the model's grid.
    fn check_grid_flags(&self, spec: &ModelSpec) -> Result<()> {
        let dim = self.common.grid_dim.unwrap_or(spec.grid_dimension());
        let res = self.common.grid_res.unwrap_or(spec.resolution);
        if (dim - spec.grid_dimension()).abs() > 1e-9 || (res - spec.resolution).abs() > 1e-12 {
            return Err(Error::Shape(format!(
                "grid {dim} Å at {res} Å does not match the model's {} Å at {} Å",
                spec.grid_dimension(),
                spec.resolution
            )));
        }
        Ok(())
    }

    fn complexes(&self, types: &Arc<AtomTypeTable>) -> Result<Vec<(String, Complex)>> {
        self.common
            .complexes
            .iter()
            .map(|p| Ok((stem(p), parse_complex(p, types.clone())?)))
            .collect()
    }

    fn complex(&self, types: &Arc<AtomTypeTable>) -> Result<(String, Complex)> {
        match self.common.complexes.as_slice() {
            [p] => Ok((stem(p), parse_complex(p, types.clone())?)),
            [] => Err(Error::InvalidArgument(format!("{} needs --complex", self.command))),
            _ => Err(Error::InvalidArgument(format!("{} takes a single --complex", self.command))),
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        let dir = self.common.out.as_path();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(dir)
    }

    fn out_path(&self, name: &str) -> Result<PathBuf> {
        Ok(self.out_dir()?.join(name))
    }

    /// Provenance lines echoed at the top of every output file.
    fn header(&self) -> Vec<String> {
        let mut h = vec![format!("voxattr {} seed {}", self.command, self.common.seed)];
        if let Some(m) = &self.common.model {
            h.push(format!("model {}", file_name(m)));
        }
        for c in &self.common.complexes {
            h.push(format!("complex {}", file_name(c)));
        }
        h.push(format!("head {} target {}", self.head().name(), self.target_name()));
        h
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.out_path(name)?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn write_map(&self, complex: &Complex, map: &AtomScoreMap<f64>, extra: &[String], stdout: &mut String) -> Result<()> {
        let stem = format!("{}_{}", map.method.name(), map.head.name());
        let mut h = self.header();
        h.extend_from_slice(extra);
        let csv = self.out_path(&format!("{stem}.csv"))?;
        write_score_table(&csv, complex, map, &h)?;
        let pdb = self.out_path(&format!("{stem}.pdb"))?;
        write_bfactor_structure(complex, map, &pdb, &h)?;
        writeln!(stdout, "wrote {}", csv.display()).unwrap();
        writeln!(stdout, "wrote {}", pdb.display()).unwrap();
        Ok(())
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn layer_label(l: RelevanceLayer) -> String {
    match l {
        RelevanceLayer::Head(h) => format!("{}_head", h.name()),
        RelevanceLayer::Trunk(i) => format!("trunk.{i}"),
    }
}

fn relevance_layers_csv(rt: &RelevanceTape<f64>, header: &[String]) -> String {
    let mut out = String::new();
    for c in header {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str("layer,nodes,total,dead_count,dead_relevance,lost\n");
    for l in &rt.layers {
        writeln!(
            out,
            "{},{},{:.15e},{},{:.15e},{:.15e}",
            layer_label(l.layer),
            l.relevance.len(),
            l.total(),
            l.dead_count,
            l.dead_relevance,
            l.lost
        )
        .unwrap();
    }
    writeln!(out, "input,{},{:.15e},0,0.000000000000000e0,0.000000000000000e0", rt.input.len(), rt.input_total()).unwrap();
    out
}

fn run_clrp(ctx: &Context, net: &Network<f64>, complex: &Complex) -> Result<(GridSpec, RelevanceTape<f64>, AtomScoreMap<f64>)> {
    let spec = net.spec().grid(complex.center())?;
    let grid = voxelize(complex, &spec, None)?;
    let (_, tape) = net.forward_recorded(&grid)?;
    let (rt, map) = clrp(net, &tape, complex, &spec, ctx.head(), ctx.target())?;
    Ok((spec, rt, map))
}

fn execute(command: Command, stdout: &mut String) -> Result<()> {
    match command {
        Command::Score(common) => {
            let ctx = Context { common, command: "score" };
            let types = ctx.types()?;
            let net = ctx.network(&types)?;
            let (_, complex) = ctx.complex(&types)?;
            let spec = net.spec().grid(complex.center())?;
            let out = net.forward(&voxelize(&complex, &spec, None)?)?;
            for h in ctx.header() {
                writeln!(stdout, "# {h}").unwrap();
            }
            writeln!(stdout, "pose_logit_0 {:.9}", out.pose_logits[0]).unwrap();
            writeln!(stdout, "pose_logit_1 {:.9}", out.pose_logits[1]).unwrap();
            writeln!(stdout, "pose_probability {:.9}", out.pose_probability).unwrap();
            writeln!(stdout, "affinity {:.9}", out.affinity).unwrap();
        }
        Command::Mask { common, mode } => {
            let ctx = Context { common, command: "mask" };
            let types = ctx.types()?;
            let net = ctx.network(&types)?;
            let (_, complex) = ctx.complex(&types)?;
            let (head, target, budget) = (ctx.head(), ctx.target(), ctx.common.bond_budget);
            let map = match mode {
                MaskMode::Atom => mask_atoms(&complex, &net, head, target)?,
                MaskMode::Fragment => mask_fragments(&complex, &net, head, target, budget)?,
                MaskMode::Residue => mask_residues(&complex, &net, head, target)?,
                MaskMode::Combined => masking_combined(&complex, &net, head, target, budget)?,
            };
            let extra = [format!("bond_budget {budget}"), format!("head_scalar {:.15e}", map.baseline_score)];
            ctx.write_map(&complex, &map, &extra, stdout)?;
        }
        Command::Gradient {
            common,
            receptor,
            arrow_scale,
            arrow_threshold,
        } => {
            let ctx = Context { common, command: "gradient" };
            let types = ctx.types()?;
            let net = ctx.network(&types)?;
            let (_, complex) = ctx.complex(&types)?;
            let map = coordinate_gradients(&complex, &net, ctx.head(), ctx.target(), receptor)?;
            let extra = [format!("head_scalar {:.15e}", map.baseline_score)];
            ctx.write_map(&complex, &map, &extra, stdout)?;
            let stem = format!("gradient_{}", map.head.name());
            let mut h = ctx.header();
            h.push(format!("arrow_scale {arrow_scale} arrow_threshold {arrow_threshold:e}"));
            let csv = ctx.out_path(&format!("{stem}_arrows.csv"))?;
            let script = ctx.out_path(&format!("{stem}_arrows.py"))?;
            let arrows = write_vector_script(&complex, &map, arrow_scale, arrow_threshold, &csv, Some(&script), &h)?;
            writeln!(stdout, "wrote {} ({} arrows)", csv.display(), arrows.len()).unwrap();
            writeln!(stdout, "wrote {}", script.display()).unwrap();
        }
        Command::Clrp(common) => {
            let ctx = Context { common, command: "clrp" };
            let types = ctx.types()?;
            let net = ctx.network(&types)?;
            let (_, complex) = ctx.complex(&types)?;
            let (_, rt, map) = run_clrp(&ctx, &net, &complex)?;
            let extra = [format!("head_scalar {:.15e}", rt.start), format!("lost {:.15e}", rt.lost())];
            ctx.write_map(&complex, &map, &extra, stdout)?;
            let mut h = ctx.header();
            h.extend_from_slice(&extra);
            let layers = ctx.write(&format!("clrp_{}_layers.csv", map.head.name()), &relevance_layers_csv(&rt, &h))?;
            writeln!(stdout, "wrote {}", layers.display()).unwrap();
            writeln!(stdout, "head_scalar {:.15e}", rt.start).unwrap();
            writeln!(stdout, "atom_sum {:.15e}", map.sum()).unwrap();
            writeln!(stdout, "lost {:.15e}", rt.lost()).unwrap();
        }
        Command::Emptyspace(common) => {
            let ctx = Context { common, command: "emptyspace" };
            let types = ctx.types()?;
            let net = ctx.network(&types)?;
            let (_, complex) = ctx.complex(&types)?;
            let (spec, rt, _) = run_clrp(&ctx, &net, &complex)?;
            let es = empty_space_relevance(&rt, net.spec(), &spec)?;
            let head = ctx.head().name();
            let dx_path = ctx.out_path(&format!("emptyspace_{head}.dx"))?;
            es.to_dx().write(&dx_path, &ctx.header().join("; "))?;
            let mut t = String::new();
            for c in ctx.header() {
                writeln!(t, "# {c}").unwrap();
            }
            writeln!(t, "# head_scalar {:.15e}", rt.start).unwrap();
            t.push_str("layer,nodes,dead_count,dead_fraction,dead_relevance,relevance_fraction\n");
            for l in &es.layers {
                writeln!(
                    t,
                    "{},{},{},{:.9},{:.15e},{:.9}",
                    layer_label(l.layer),
                    l.nodes,
                    l.dead_count,
                    l.count_fraction(),
                    l.dead_relevance,
                    l.relevance_fraction
                )
                .unwrap();
            }
            let csv = ctx.write(&format!("emptyspace_{head}_layers.csv"), &t)?;
            writeln!(stdout, "wrote {}", dx_path.display()).unwrap();
            writeln!(stdout, "wrote {}", csv.display()).unwrap();
            writeln!(stdout, "empty_space_total {:.15e}", es.total).unwrap();
        }
        Command::Filters(common) => {
            let ctx = Context { common, command: "filters" };
            let types = ctx.types()?;
            let net = ctx.network(&types)?;
            let filters = ConvFilters::first_conv(&net)?;
            let averages = channel_averages(&filters);
            let flat = flatten_filters(&filters);
            let dendrogram = cluster_filters(&flat)?;
            let labels = if filters.in_channels == types.len() {
                channel_labels(&types)
            } else {
                (0..filters.in_channels).map(|c| format!("c{c}")).collect()
            };
            let probes = ctx
                .complexes(&types)?
                .into_iter()
                .map(|(_, c)| Ok(voxelize::<f64>(&c, &net.spec().grid(c.center())?, None)?.values))
                .collect::<Result<Vec<_>>>()?;
            let activity = if probes.is_empty() { None } else { Some(filter_activity(&net, &probes)?) };
            let h = ctx.header();
            let avg = ctx.write("filters_averages.csv", &averages_csv(&averages, &dendrogram.order, &labels, activity.as_deref(), &h))?;
            let fl = ctx.write("filters_flattened.csv", &flattened_csv(&flat, &dendrogram.order, &labels, &h))?;
            let mut d = String::new();
            for c in &h {
                writeln!(d, "# {c}").unwrap();
            }
            d.push_str("merge,left,right,distance,size\n");
            for (i, m) in dendrogram.merges.iter().enumerate() {
                writeln!(d, "{},{},{},{:.9e},{}", dendrogram.leaves + i, m.left, m.right, m.distance, m.size).unwrap();
            }
            let dd = ctx.write("filters_dendrogram.csv", &d)?;
            for p in [avg, fl, dd] {
                writeln!(stdout, "wrote {}", p.display()).unwrap();
            }
            if let Some(a) = &activity {
                writeln!(stdout, "switched_off {}", a.iter().filter(|f| f.switched_off).count()).unwrap();
            }
        }
        Command::Additivity(common) => {
            let ctx = Context { common, command: "additivity" };
            let types = ctx.types()?;
            let net = ctx.network(&types)?;
            let complexes = ctx.complexes(&types)?;
            if complexes.is_empty() {
                return Err(Error::InvalidArgument("additivity needs at least one --complex".into()));
            }
            let (head, target) = (ctx.head(), ctx.target());
            let empty = empty_grid_score(&net, head, target)?;
            let mut records = Vec::new();
            for (id, c) in &complexes {
                records.push(additivity_record(id, &mask_atoms(c, &net, head, target)?, empty));
                records.push(additivity_record(id, &mask_fragments(c, &net, head, target, ctx.common.bond_budget)?, empty));
            }
            let summary = additivity(records);
            let mut h = ctx.header();
            h.push(format!("empty_grid_score {empty:.15e}"));
            let p = ctx.write(&format!("additivity_{}.csv", head.name()), &additivity_csv(&summary, &h))?;
            writeln!(stdout, "wrote {}", p.display()).unwrap();
        }
        Command::Compare(common) => {
            let ctx = Context { common, command: "compare" };
            let types = ctx.types()?;
            let net = ctx.network(&types)?;
            let complexes = ctx.complexes(&types)?;
            if complexes.is_empty() {
                return Err(Error::InvalidArgument("compare needs at least one --complex".into()));
            }
            let (head, target) = (ctx.head(), ctx.target());
            let mut records = Vec::new();
            for (id, c) in &complexes {
                let masking = masking_combined(c, &net, head, target, ctx.common.bond_budget)?;
                let gradient = coordinate_gradients(c, &net, head, target, false)?;
                let (_, _, relevance) = run_clrp(&ctx, &net, c)?;
                records.push(method_correlation(id, &masking, &gradient));
                records.push(method_correlation(id, &masking, &relevance));
                records.push(method_correlation(id, &gradient, &relevance));
            }
            let h = ctx.header();
            let p = ctx.write(&format!("correlation_{}.csv", head.name()), &correlation_csv(&records, &h))?;
            let hist = ctx.write(
                &format!("correlation_{}_histogram.csv", head.name()),
                &histogram_csv(&correlation_histogram(&records), &h),
            )?;
            writeln!(stdout, "wrote {}", p.display()).unwrap();
            writeln!(stdout, "wrote {}", hist.display()).unwrap();
        }
        Command::TrainToy {
            common,
            examples,
            iterations,
            learning_rate,
            augment,
        } => {
            let ctx = Context { common, command: "train-toy" };
            let types = ctx.types()?;
            let data = synthetic_dataset(examples, ctx.common.seed, types.clone())?;
            let spec = toy_architecture(types.len());
            let config = TrainConfig {
                learning_rate,
                iterations,
                seed: ctx.common.seed,
                augment,
                ..TrainConfig::default()
            };
            let report = train_toy::<f64>(&data, &spec, &config)?;
            let model = ctx.out_path("toy_model.vxattr")?;
            save_model(&spec, &report.weights, &model)?;
            let mut t = String::new();
            for c in ctx.header() {
                writeln!(t, "# {c}").unwrap();
            }
            writeln!(t, "# learning_rate {learning_rate} examples {examples} augment {augment}").unwrap();
            t.push_str("iteration,loss\n");
            for (i, l) in report.loss_history.iter().enumerate() {
                writeln!(t, "{i},{l:.12e}").unwrap();
            }
            let hist = ctx.write("toy_training.csv", &t)?;
            writeln!(stdout, "wrote {}", model.display()).unwrap();
            writeln!(stdout, "wrote {}", hist.display()).unwrap();
            writeln!(stdout, "initial_pose_loss {:.9}", report.initial_pose_loss).unwrap();
            writeln!(stdout, "final_pose_loss {:.9}", report.final_pose_loss).unwrap();
        }
        Command::Voxelize {
            common,
            channel,
            augment,
            max_translate,
        } => {
            let ctx = Context { common, command: "voxelize" };
            let types = ctx.types()?;
            let (_, complex) = ctx.complex(&types)?;
            let spec = match &ctx.common.model {
                Some(_) => ctx.network(&types)?.spec().grid(complex.center())?,
                None => GridSpec::new(
                    ctx.common.grid_dim.unwrap_or(24.0),
                    ctx.common.grid_res.unwrap_or(0.5),
                    types.len(),
                    complex.center(),
                )?,
            };
            let transform = augment.then(|| random_transform(ctx.common.seed, max_translate)).transpose()?;
            let grid = voxelize::<f64>(&complex, &spec, transform.as_ref())?;
            let (dx, name) = match channel {
                Some(c) => (DxGrid::channel(&grid, c)?, format!("voxelize_c{c}.dx")),
                None => (DxGrid::summed(&grid)?, "voxelize.dx".to_string()),
            };
            let path = ctx.out_path(&name)?;
            let mut h = ctx.header();
            h.push(format!("augment {augment} max_translate {max_translate}"));
            dx.write(&path, &h.join("; "))?;
            writeln!(stdout, "wrote {}", path.display()).unwrap();
        }
        Command::InitModel {
            common,
            architecture,
            random,
            file_name,
        } => {
            let ctx = Context { common, command: "init-model" };
            let types = ctx.types()?;
            let spec = match architecture {
                Architecture::Toy => toy_architecture(types.len()),
                Architecture::Default => {
                    let dim = ctx.common.grid_dim.unwrap_or(24.0);
                    let res = ctx.common.grid_res.unwrap_or(0.5);
                    let g = GridSpec::new(dim, res, types.len(), [0.0; 3])?;
                    ModelSpec::default_architecture(types.len(), g.points_per_side, res)
                }
            };
            let weights = if random {
                ModelWeights::<f64>::random(&spec, ctx.common.seed)?
            } else {
                ModelWeights::<f64>::zeros(&spec)?
            };
            let path = ctx.out_path(&file_name)?;
            save_model(&spec, &weights, &path)?;
            writeln!(stdout, "wrote {}", path.display()).unwrap();
        }
    }
    Ok(())
}
