use std::path::{Path, PathBuf};

use clap::Subcommand;
use ldatune_core::analysis::{
    config_hardness, kmeans_silhouette, pca2, pca2_unscaled, pearson_corr, scatter_svg, ward_order,
    write_correlation_csv, write_projection_csv, Projection2D, ScatterPoint,
};
use ldatune_core::{FeatureRow, Source, FEATURE_NAMES};

use crate::config::Config;
use crate::error::{input_error, InputContext};
use crate::io::{create, load_features, load_matrix, write_text};

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Feature correlation matrix in Ward leaf order
    Corr(CorrArgs),
    /// 2-D PCA projection of the feature table
    Pca(PcaArgs),
    /// Silhouette-selected k-means on the PCA projection
    Cluster(ClusterArgs),
    /// Configurations within a tolerance of each corpus' best value
    Hardness(HardnessArgs),
}

#[derive(Debug, clap::Args)]
pub struct FeatureInput {
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    /// Keep only rows from this source
    #[arg(long)]
    source: Option<Source>,
}

impl FeatureInput {
    fn load(&self, config: &Config) -> anyhow::Result<Vec<FeatureRow>> {
        let path: PathBuf = config.require(self.features.clone(), "features")?;
        let source: Option<String> = config.pick(self.source.map(|s| s.to_string()), "source")?;
        let source: Option<Source> = source.map(|s| s.parse().map_err(input_error)).transpose()?;
        let rows: Vec<FeatureRow> =
            load_features(&path)?.into_iter().filter(|r| source.is_none_or(|s| r.source == s)).collect();
        Ok(rows)
    }
}

fn values(rows: &[FeatureRow]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.features.as_slice().to_vec()).collect()
}

#[derive(Debug, clap::Args)]
pub struct CorrArgs {
    #[command(flatten)]
    input: FeatureInput,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ProjectionArgs {
    #[command(flatten)]
    input: FeatureInput,
    /// Project raw values instead of standardised ones
    #[arg(long)]
    unscaled: bool,
    /// Projection CSV
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Scatter plot
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
}

impl ProjectionArgs {
    fn project(&self, config: &Config) -> anyhow::Result<(Vec<String>, Projection2D)> {
        let rows = self.input.load(config)?;
        let unscaled = config.or(Some(self.unscaled).filter(|u| *u), "unscaled", false)?;
        let x = values(&rows);
        let proj = if unscaled { pca2_unscaled(&x) } else { pca2(&x) }.input("projection")?;
        Ok((rows.into_iter().map(|r| r.corpus_id).collect(), proj))
    }
}

#[derive(Debug, clap::Args)]
pub struct PcaArgs {
    #[command(flatten)]
    projection: ProjectionArgs,
}

#[derive(Debug, clap::Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    projection: ProjectionArgs,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// k-means++ restarts per k [default: 10]
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, clap::Args)]
pub struct HardnessArgs {
    #[arg(long, value_name = "FILE")]
    matrix: Option<PathBuf>,
    /// Relative distance from the best value [default: 0.05]
    #[arg(long)]
    tolerance: Option<f64>,
    /// With a feature table, the output is a projection CSV coloured by hardness
    #[command(flatten)]
    projection: ProjectionArgs,
}

pub fn run(c: AnalyzeCommand, config: &Config) -> anyhow::Result<()> {
    match c {
        AnalyzeCommand::Corr(a) => corr_cmd(a, config),
        AnalyzeCommand::Pca(a) => pca_cmd(a, config),
        AnalyzeCommand::Cluster(a) => cluster_cmd(a, config),
        AnalyzeCommand::Hardness(a) => hardness_cmd(a, config),
    }
}

fn corr_cmd(a: CorrArgs, config: &Config) -> anyhow::Result<()> {
    let rows = a.input.load(config)?;
    let out: PathBuf = config.require(a.out, "out")?;
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let corr = pearson_corr(&names, &values(&rows)).input("correlation")?;
    let order = ward_order(&corr);
    write_correlation_csv(create(&out)?, &corr, &order)?;
    for (i, _) in corr.zero_variance.iter().enumerate().filter(|(_, z)| **z) {
        eprintln!("warning: {} has no variance; its correlations are reported as 0", corr.names[i]);
    }
    println!("wrote {}x{} correlations over {} corpora to {}", names.len(), names.len(), rows.len(), out.display());
    Ok(())
}

fn write_outputs(
    a: &ProjectionArgs,
    config: &Config,
    ids: &[String],
    proj: &Projection2D,
    clusters: Option<&[usize]>,
    hardness: Option<&[usize]>,
    legend: &str,
) -> anyhow::Result<()> {
    let out: PathBuf = config.require(a.out.clone(), "out")?;
    write_projection_csv(create(&out)?, ids, proj, clusters, hardness)?;
    if let Some(svg) = config.pick::<PathBuf>(a.svg.clone(), "svg")? {
        let groups = clusters.or(hardness);
        let points: Vec<ScatterPoint> = ids
            .iter()
            .zip(&proj.coords)
            .enumerate()
            .map(|(i, (id, &[x, y]))| ScatterPoint { label: id.clone(), x, y, group: groups.map_or(0, |g| g[i]) })
            .collect();
        let title = format!(
            "PCA (explained {:.1}% / {:.1}%)",
            100.0 * proj.explained[0],
            100.0 * proj.explained[1]
        );
        write_text(Path::new(&svg), &scatter_svg(&points, &title, legend))?;
    }
    println!(
        "projected {} corpora; explained variance {:.4} {:.4}",
        ids.len(),
        proj.explained[0],
        proj.explained[1]
    );
    Ok(())
}

fn pca_cmd(a: PcaArgs, config: &Config) -> anyhow::Result<()> {
    let (ids, proj) = a.projection.project(config)?;
    write_outputs(&a.projection, config, &ids, &proj, None, None, "")
}

fn cluster_cmd(a: ClusterArgs, config: &Config) -> anyhow::Result<()> {
    let k_min = config.or(a.k_min, "k-min", 2)?;
    let k_max = config.or(a.k_max, "k-max", 12)?;
    let restarts = config.or(a.restarts, "restarts", 10)?;
    let seed = config.or(a.seed, "seed", 0)?;
    if k_min < 2 || k_max < k_min || restarts == 0 {
        return Err(input_error("need 2 <= --k-min <= --k-max and --restarts >= 1"));
    }
    let (ids, proj) = a.projection.project(config)?;
    let points: Vec<Vec<f64>> = proj.coords.iter().map(|c| c.to_vec()).collect();
    let c = kmeans_silhouette(&points, k_min, k_max, restarts, seed).input("clustering")?;
    for (k, s) in &c.silhouette_by_k {
        println!("k={k} silhouette {s:.4}");
    }
    println!("chosen k={}", c.chosen_k);
    write_outputs(&a.projection, config, &ids, &proj, Some(&c.labels), None, "cluster")
}

fn hardness_cmd(a: HardnessArgs, config: &Config) -> anyhow::Result<()> {
    let m = load_matrix(&config.require::<PathBuf>(a.matrix, "matrix")?)?;
    let tolerance = config.or(a.tolerance, "tolerance", 0.05)?;
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(input_error("--tolerance must be a non-negative number"));
    }
    let counts = config_hardness(&m, tolerance);
    let has_features = config.pick::<PathBuf>(a.projection.input.features.clone(), "features")?.is_some();
    if !has_features {
        let out: PathBuf = config.require(a.projection.out, "out")?;
        let mut text = String::from("corpusId,hardness\n");
        for (id, c) in m.corpus_ids.iter().zip(&counts) {
            text.push_str(&format!("{id},{c}\n"));
        }
        write_text(&out, &text)?;
        println!("wrote hardness for {} corpora to {}", counts.len(), out.display());
        return Ok(());
    }
    let (ids, proj) = a.projection.project(config)?;
    let hardness: Vec<usize> = ids
        .iter()
        .map(|id| {
            m.corpus_ids
                .iter()
                .position(|c| c == id)
                .map(|j| counts[j])
                .ok_or_else(|| input_error(format!("corpus {id:?} is missing from the matrix")))
        })
        .collect::<anyhow::Result<_>>()?;
    write_outputs(&a.projection, config, &ids, &proj, None, Some(&hardness), "configs within tolerance")
}
