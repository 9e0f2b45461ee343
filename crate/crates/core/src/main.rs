use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cutclust::metrics::NmiNormalization;
use cutclust::pipeline::{
    export_embeddings, format_table, generate_synthetic, load_graph, run, run_ablation, run_pretrain_only,
    run_sweep, write_dataset, DataSource, GridAxis, ParameterGrid, ProportionMode, RunConfig, SyntheticSpec,
};
use cutclust::{Error, Result};

#[derive(Parser)]
#[command(name = "cutclust", version, about = "Cut-informed attributed graph clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pretrain the encoder, then train the clustering head.
    Run(RunArgs),
    /// Encoder stage only; scored by K-means on the embedding.
    Pretrain(RunArgs),
    /// Full method against every single-component ablation.
    Ablate(RunArgs),
    /// One run per point of a hyperparameter grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Grid axis such as `alpha=0.1,0.5,0.9`; repeat for a product grid.
        #[arg(long = "grid", value_name = "PARAM=V1,V2")]
        grid: Vec<GridAxis>,
    },
    /// Write a stochastic block model fixture in the dataset format.
    GenSynthetic {
        /// `blocks=3,nodes=20,p_in=0.9,p_out=0.05,features=16,separation=6,seed=0`
        #[arg(long, default_value = "")]
        synthetic: SyntheticSpec,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        #[arg(long, default_value = "synthetic")]
        name: String,
    },
    /// Run the pipeline and write per-node embeddings as CSV.
    Export {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_name = "CSV")]
        embeddings: PathBuf,
        /// Append the top two principal-component coordinates.
        #[arg(long)]
        pca: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProportionArg {
    Fixed,
    PerEpoch,
}

#[derive(Clone, Copy, ValueEnum)]
enum NmiArg {
    Geometric,
    Arithmetic,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags below override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Shipped hyperparameter preset (acm, citeseer, cora, dblp, amazon, pubmed, synthetic).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Dataset manifest.
    #[arg(long, value_name = "MANIFEST", conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,
    /// Generate a synthetic graph instead of loading one.
    #[arg(long, value_name = "SPEC")]
    synthetic: Option<SyntheticSpec>,

    #[arg(long = "clusters")]
    n_clusters: Option<usize>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    hidden_dims: Option<Vec<usize>>,
    #[arg(long = "lr")]
    learning_rate: Option<f64>,
    #[arg(long = "wd")]
    weight_decay: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    train_epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Single-threaded batch runners; `--deterministic=false` lets sweeps
    /// and ablations run concurrently.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    deterministic: Option<bool>,
    #[arg(long, value_enum)]
    proportions: Option<ProportionArg>,
    #[arg(long)]
    proportion_floor: Option<f64>,
    #[arg(long)]
    kmeans_restarts: Option<usize>,
    #[arg(long)]
    sinkhorn_max_iterations: Option<usize>,
    #[arg(long)]
    sinkhorn_tolerance: Option<f64>,
    #[arg(long, value_enum)]
    nmi: Option<NmiArg>,
    #[arg(long)]
    record_epoch_metrics: bool,

    #[arg(long)]
    no_structure: bool,
    #[arg(long)]
    no_attribute: bool,
    #[arg(long)]
    no_encoding_trace: bool,
    #[arg(long)]
    no_orthogonality: bool,
    #[arg(long)]
    sdcn_target: bool,

    /// Write the report (JSON) here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Print only `ACC=<v> NMI=<v> ARI=<v> F1=<v>`.
    #[arg(long)]
    metrics_only: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(name)) => RunConfig::preset(name)?,
            (None, None) => RunConfig::default(),
        };
        if let Some(p) = &self.dataset {
            cfg.data = Some(DataSource::Manifest(p.clone()));
        }
        if let Some(s) = &self.synthetic {
            cfg.data = Some(DataSource::Synthetic(s.clone()));
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        set!(
            embedding_dim,
            hidden_dims,
            learning_rate,
            weight_decay,
            alpha,
            beta,
            gamma,
            lambda,
            theta,
            pretrain_epochs,
            train_epochs,
            seed,
            deterministic,
            kmeans_restarts,
            sinkhorn_max_iterations,
            sinkhorn_tolerance
        );
        if self.n_clusters.is_some() {
            cfg.n_clusters = self.n_clusters;
        }
        if self.proportion_floor.is_some() {
            cfg.proportion_floor = self.proportion_floor;
        }
        if let Some(p) = self.proportions {
            cfg.proportions = match p {
                ProportionArg::Fixed => ProportionMode::Fixed,
                ProportionArg::PerEpoch => ProportionMode::PerEpoch,
            };
        }
        if let Some(n) = self.nmi {
            cfg.nmi_normalization = match n {
                NmiArg::Geometric => NmiNormalization::Geometric,
                NmiArg::Arithmetic => NmiNormalization::Arithmetic,
            };
        }
        cfg.record_epoch_metrics |= self.record_epoch_metrics;
        cfg.ablation.no_structure |= self.no_structure;
        cfg.ablation.no_attribute |= self.no_attribute;
        cfg.ablation.no_encoding_trace |= self.no_encoding_trace;
        cfg.ablation.no_orthogonality |= self.no_orthogonality;
        cfg.ablation.sdcn_target |= self.sdcn_target;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json(path: &std::path::Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let graph = load_graph(&cfg)?;
            let report = run(&cfg, &graph)?.report;
            if let Some(out) = &args.out {
                report.write(out)?;
            }
            if args.metrics_only {
                println!("{}", report.metrics_line());
            } else {
                println!(
                    "nodes={} clusters={} seed={} time={:.2}s",
                    report.n_nodes, report.n_clusters, report.seed, report.wall_clock_secs
                );
                println!("{}", report.metrics_line());
            }
        }
        Command::Pretrain(args) => {
            let cfg = args.config()?;
            let graph = load_graph(&cfg)?;
            let (_, report) = run_pretrain_only(&cfg, &graph)?;
            if let Some(out) = &args.out {
                report.write(out)?;
            }
            if !args.metrics_only {
                if let (Some(first), Some(last)) = (report.pretrain.first(), report.pretrain.last()) {
                    println!("encoding loss {:.6} -> {:.6}", first.loss, last.loss);
                }
            }
            println!("{}", report.metrics_line());
        }
        Command::Ablate(args) => {
            let cfg = args.config()?;
            let graph = load_graph(&cfg)?;
            let rows = run_ablation(&cfg, &graph)?;
            if let Some(out) = &args.out {
                write_json(out, &rows)?;
            }
            if args.metrics_only {
                for row in &rows {
                    println!("{}\t{}", row.variant, row.report.metrics_line());
                }
            } else {
                print!(
                    "{}",
                    format_table(rows.iter().map(|r| (r.variant.to_string(), &r.report)))
                );
            }
        }
        Command::Sweep { run: args, grid } => {
            let cfg = args.config()?;
            let grid = ParameterGrid::new(grid);
            let rows = if grid.points().is_empty() {
                Vec::new()
            } else {
                run_sweep(&cfg, &load_graph(&cfg)?, &grid)?
            };
            if let Some(out) = &args.out {
                write_json(out, &rows)?;
            }
            if args.metrics_only {
                for row in &rows {
                    println!("{}\t{}", row.point, row.report.metrics_line());
                }
            } else {
                print!("{}", format_table(rows.iter().map(|r| (r.point.to_string(), &r.report))));
            }
        }
        Command::GenSynthetic {
            synthetic,
            out_dir,
            name,
        } => {
            let graph = generate_synthetic(&synthetic)?;
            let manifest = write_dataset(&out_dir, &name, &graph)?;
            println!("{}", manifest.display());
        }
        Command::Export {
            run: args,
            embeddings,
            pca,
        } => {
            let cfg = args.config()?;
            let graph = load_graph(&cfg)?;
            let outcome = run(&cfg, &graph)?;
            export_embeddings(
                &outcome.embeddings.view(),
                graph.labels(),
                &outcome.predictions,
                &embeddings,
                pca,
            )?;
            if let Some(out) = &args.out {
                outcome.report.write(out)?;
            }
            println!("{}", outcome.report.metrics_line());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::FAILURE
        }
    }
}
