use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use soak::engine::{execute, plan, plan_with_folds, ExecuteOptions, JobStatus, RunManifest};
use soak::io::{self, ListOrCsv, PartialRunConfig, RunConfig};
use soak::learners::{Learner, LearnerSpec};
use soak::{assign_folds, error_table, soak_compare, summarize_dataset, Dataset};

#[derive(Parser)]
#[command(name = "soak", version, about = "Same/Other/All K-fold cross-validation")]
struct Cli {
    /// JSON file with defaults for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print one row of meta-data per data set
    Meta(DataArgs),
    /// Run every Same/Other/All split and write records and comparison tables
    Run(RunArgs),
    /// Draw SVG figures from the tables written by `run`
    Plot(PlotArgs),
    /// Export or import fold assignments
    #[command(subcommand)]
    Folds(FoldsCommand),
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// CSV data file; repeat or comma-separate for several
    #[arg(long, value_delimiter = ',')]
    data: Vec<PathBuf>,
    #[arg(long)]
    label_col: Option<String>,
    #[arg(long)]
    subset_col: Option<String>,
    #[arg(long)]
    group_col: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Number of folds K
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma list of featureless, knn, l1_logistic
    #[arg(long)]
    learners: Option<String>,
    /// Comma list of same, other, all
    #[arg(long)]
    policies: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Use folds from a `row_id,fold` CSV instead of assigning them (one data set only)
    #[arg(long)]
    fold_file: Option<PathBuf>,
    /// Discard results in the output directory from a run with a different configuration
    #[arg(long)]
    overwrite: bool,
    /// Stop after this many jobs; a later run resumes
    #[arg(long, hide = true)]
    max_jobs: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory written by `run`; figures are written here too
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comparison table (default OUT/comparisons.csv)
    #[arg(long)]
    comparisons: Option<PathBuf>,
    /// Error table (default OUT/error_table.csv)
    #[arg(long)]
    errors: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FoldsCommand {
    /// Assign folds and write them as `row_id,fold` CSV
    Export {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check a `row_id,fold` CSV against a data set and print per-subset fold sizes
    Import {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        folds: Option<usize>,
    },
}

impl RunArgs {
    fn to_partial(&self) -> PartialRunConfig {
        let d = &self.data;
        PartialRunConfig {
            data: (!d.data.is_empty())
                .then(|| ListOrCsv::List(d.data.iter().map(|p| p.display().to_string()).collect())),
            label_col: d.label_col.clone(),
            subset_col: d.subset_col.clone(),
            group_col: d.group_col.clone(),
            folds: self.folds,
            seed: self.seed,
            learners: self.learners.clone().map(ListOrCsv::Csv),
            policies: self.policies.clone().map(ListOrCsv::Csv),
            out: d.out.clone(),
            workers: self.workers,
        }
    }
}

/// The resolved config, plus the output path if one was given at all.
fn config(file: Option<&Path>, args: &RunArgs) -> Result<(RunConfig, Option<PathBuf>)> {
    let base = match file {
        Some(p) => PartialRunConfig::from_json_file(p)?,
        None => PartialRunConfig::default(),
    };
    let merged = base.overlay(args.to_partial());
    let out = merged.out.clone();
    Ok((merged.resolve()?, out))
}

fn load_all(cfg: &RunConfig) -> Result<Vec<Dataset>> {
    let roles = cfg.roles();
    cfg.data
        .iter()
        .map(|p| io::load_csv(p, &roles).with_context(|| format!("loading {}", p.display())))
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn cmd_meta(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let datasets = load_all(cfg)?;
    let rows = io::meta_table(&datasets);
    io::write_meta_csv(&rows, std::io::stdout().lock())?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        io::write_meta_csv(&rows, create(&dir.join("meta.csv"))?)?;
    }
    Ok(())
}

fn cmd_run(cfg: &RunConfig, args: &RunArgs) -> Result<bool> {
    let datasets = load_all(cfg)?;
    let specs: Vec<LearnerSpec> = cfg.learners.iter().map(|l| l.parse()).collect::<soak::Result<_>>()?;
    let learners: Vec<&dyn Learner> = specs.iter().map(|s| s as &dyn Learner).collect();

    let mut manifest = match &args.fold_file {
        Some(path) => {
            if datasets.len() != 1 {
                bail!("--fold-file needs exactly one data set");
            }
            let fa = io::read_folds_csv(&datasets[0], File::open(path)?, Some(cfg.folds), cfg.seed)?;
            plan_with_folds(&datasets, &[fa], &learners, cfg.seed, &cfg.policies)?
        }
        None => plan(&datasets, &learners, cfg.folds, cfg.seed, &cfg.policies)?,
    };
    for entry in &manifest.datasets {
        for w in &entry.folds.warnings {
            eprintln!("warning: {}: {w}", entry.name);
        }
    }

    let out = &cfg.out;
    fs::create_dir_all(out)?;
    let manifest_path = out.join("manifest.json");
    let results_path = out.join("results.ndjson");
    if manifest_path.exists() {
        let old = RunManifest::read(&manifest_path)?;
        if old.config_digest != manifest.config_digest {
            if !args.overwrite {
                bail!(
                    "{} holds results of a different configuration; pass --overwrite to discard them",
                    out.display()
                );
            }
            if results_path.exists() {
                fs::remove_file(&results_path)?;
            }
        }
    }
    manifest.write(&manifest_path)?;

    let opts = ExecuteOptions {
        workers: cfg.workers,
        results_path: Some(results_path),
        max_jobs: args.max_jobs,
    };
    let report = execute(&mut manifest, &datasets, &learners, &opts)?;
    manifest.write(&manifest_path)?;

    let pending = manifest.count(JobStatus::Pending);
    eprintln!(
        "{} jobs: {} done, {} failed, {} skipped, {} pending ({} run now)",
        manifest.jobs.len(),
        manifest.count(JobStatus::Done),
        manifest.count(JobStatus::Failed),
        manifest.count(JobStatus::Skipped),
        pending,
        report.executed
    );
    for job in manifest.jobs.iter().filter(|j| j.status == JobStatus::Failed) {
        eprintln!(
            "failed: {} {} subset {} fold {} {}: {}",
            job.data,
            job.learner,
            job.test_subset,
            job.test_fold + 1,
            job.policy,
            job.message.as_deref().unwrap_or("")
        );
    }

    let mut records = report.records;
    soak::stats::sort_records(&mut records);
    io::write_records_csv(&records, create(&out.join("records.csv"))?)?;
    let comparisons = soak_compare(&records);
    for n in &comparisons.notices {
        eprintln!("note: {n}");
    }
    io::write_comparisons_csv(&comparisons.rows, create(&out.join("comparisons.csv"))?)?;
    let mut json = create(&out.join("comparisons.json"))?;
    serde_json::to_writer_pretty(&mut json, &comparisons.rows)?;
    writeln!(json)?;
    json.flush()?;
    io::write_summary_csv(&summarize_dataset(&comparisons.rows), create(&out.join("summary.csv"))?)?;
    io::write_error_table_csv(&error_table(&records), create(&out.join("error_table.csv"))?)?;
    if pending > 0 {
        eprintln!("run stopped early; rerun the same command to resume");
    }
    Ok(manifest.count(JobStatus::Failed) == 0 && pending == 0)
}

fn write_svg(path: &Path, svg: &str) -> Result<()> {
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}

fn safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn cmd_plot(args: &PlotArgs, file_out: Option<PathBuf>) -> Result<()> {
    let out = args.out.clone().or(file_out).unwrap_or_else(|| "soak-out".into());
    let cmp_path = args.comparisons.clone().unwrap_or_else(|| out.join("comparisons.csv"));
    let err_path = args.errors.clone().unwrap_or_else(|| out.join("error_table.csv"));
    let comparisons = io::read_comparisons_csv(
        File::open(&cmp_path).with_context(|| format!("opening {}", cmp_path.display()))?,
    )?;
    let charts = soak::plot::segment_charts(&comparisons)?;
    fs::create_dir_all(&out)?;
    for (kind, svg) in charts {
        let path = out.join(format!("segments_{kind}.svg"));
        write_svg(&path, &svg)?;
        eprintln!("wrote {}", path.display());
    }
    if err_path.exists() {
        let errors = io::read_error_table_csv(File::open(&err_path)?)?;
        if !errors.is_empty() {
            for (key, svg) in soak::plot::error_dot_plots(&errors)? {
                let path = out.join(format!("errors_{}.svg", safe(&key)));
                write_svg(&path, &svg)?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn cmd_folds_export(cfg: &RunConfig, explicit_out: Option<&Path>) -> Result<()> {
    let datasets = load_all(cfg)?;
    for ds in &datasets {
        let fa = assign_folds(ds, cfg.folds, cfg.seed)?;
        for w in &fa.warnings {
            eprintln!("warning: {}: {w}", ds.name());
        }
        match explicit_out {
            Some(p) if datasets.len() == 1 && p.extension().is_some_and(|e| e == "csv") => {
                io::write_folds_csv(&fa, create(p)?)?;
            }
            Some(dir) => {
                fs::create_dir_all(dir)?;
                io::write_folds_csv(&fa, create(&dir.join(format!("{}_folds.csv", ds.name())))?)?;
            }
            None => io::write_folds_csv(&fa, std::io::stdout().lock())?,
        }
    }
    Ok(())
}

fn cmd_folds_import(cfg: &RunConfig, file: &Path, k: Option<usize>) -> Result<()> {
    let datasets = load_all(cfg)?;
    if datasets.len() != 1 {
        bail!("folds import needs exactly one data set");
    }
    let ds = &datasets[0];
    let fa = io::read_folds_csv(ds, File::open(file)?, k, cfg.seed)?;
    for w in &fa.warnings {
        eprintln!("warning: {w}");
    }
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    let mut header = vec!["subset".to_string()];
    header.extend((1..=fa.k).map(|f| format!("fold{f}")));
    w.write_record(&header)?;
    for (s, name) in ds.subset_names().iter().enumerate() {
        let mut counts = vec![0usize; fa.k];
        for (i, &f) in fa.folds.iter().enumerate() {
            if ds.subsets()[i] == s {
                counts[f] += 1;
            }
        }
        let mut rec = vec![name.clone()];
        rec.extend(counts.iter().map(ToString::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    let file = cli.config.as_deref();
    match &cli.command {
        Command::Meta(d) => {
            let args = RunArgs {
                data: d.clone(),
                ..RunArgs::default()
            };
            let (cfg, out) = config(file, &args)?;
            cmd_meta(&cfg, out.as_deref())?;
        }
        Command::Run(args) => return cmd_run(&config(file, args)?.0, args),
        Command::Plot(args) => {
            let file_out = match file {
                Some(p) => PartialRunConfig::from_json_file(p)?.out,
                None => None,
            };
            cmd_plot(args, file_out)?;
        }
        Command::Folds(FoldsCommand::Export { run }) => {
            let (cfg, out) = config(file, run)?;
            cmd_folds_export(&cfg, out.as_deref())?;
        }
        Command::Folds(FoldsCommand::Import { data, file: folds_file, folds }) => {
            let args = RunArgs {
                data: data.clone(),
                ..RunArgs::default()
            };
            cmd_folds_import(&config(file, &args)?.0, folds_file, *folds)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
