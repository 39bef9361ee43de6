use std::fs::File;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use voxskel::planners::Planner;
use voxskel::world::MazeSpec;
use voxskel_cli::bench::{
    bench_stability, build_maze_map, path_length_ratios, run_maze_bench, summarize_maze, summarize_stability, write_records,
    MazeBenchConfig,
};
use voxskel_cli::commands::{audit_artifacts, cmd_build, cmd_export, cmd_plan, cmd_world, load_artifacts, ExportKind, PlanArgs};
use voxskel_cli::config::{PipelineConfig, WorldSource};

#[derive(Parser)]
#[command(name = "voxskel", version, about = "Skeleton diagrams, sparse graphs and planners on voxel maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a world file.
    World(WorldArgs),
    /// Build ESDF, skeleton and sparse graph artifacts.
    Build(BuildArgs),
    /// Plan between two points on built artifacts.
    Plan(PlanCli),
    /// Graph size across voxel sizes and depth noise on the fixture room.
    BenchStability(StabilityArgs),
    /// All planners on a maze.
    BenchMaze(MazeArgs),
    /// Write artifacts as PLY.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum WorldKind {
    Fixture,
    Maze,
}

#[derive(Args)]
struct MazeFlags {
    /// Maze side length in meters.
    #[arg(long)]
    maze_side: Option<f64>,
    #[arg(long)]
    maze_seed: Option<u64>,
    /// Use the full 30 m maze instead of the 15 m one.
    #[arg(long)]
    full_scale: bool,
}

impl MazeFlags {
    fn spec(&self) -> MazeSpec {
        let base = if self.full_scale { MazeSpec::default() } else { MazeSpec::desk() };
        MazeSpec { side: self.maze_side.unwrap_or(base.side), seed: self.maze_seed.unwrap_or(base.seed), ..base }
    }
}

#[derive(Args)]
struct WorldArgs {
    #[arg(long, value_enum, default_value = "fixture")]
    kind: WorldKind,
    #[command(flatten)]
    maze: MazeFlags,
    #[arg(long, default_value = "world.json")]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// JSON pipeline config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Primitive world file.
    #[arg(long, conflicts_with_all = ["maze", "fixture"])]
    world: Option<PathBuf>,
    /// Generate a maze world scanned from scripted coverage poses.
    #[arg(long)]
    maze: bool,
    #[arg(long)]
    fixture: bool,
    #[command(flatten)]
    maze_flags: MazeFlags,
    /// Start from an ESDF dump instead of simulating scans.
    #[arg(long)]
    esdf: Option<PathBuf>,
    #[arg(long)]
    voxel_size: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    /// Use the analytic distance field.
    #[arg(long)]
    ground_truth: bool,
    #[arg(long)]
    pose_count: Option<usize>,
    #[arg(long)]
    pose_seed: Option<u64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long)]
    robot_radius: Option<f64>,
    #[arg(long)]
    time_limit: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl BuildArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(p) = &self.world {
            c.world = WorldSource::File { path: p.clone() };
        } else if self.maze {
            c.world = WorldSource::Maze { spec: self.maze_flags.spec() };
        } else if self.fixture {
            c.world = WorldSource::Fixture;
        }
        let m = &mut c.map;
        m.voxel_size = self.voxel_size.unwrap_or(m.voxel_size);
        m.noise_sigma = self.noise.unwrap_or(m.noise_sigma);
        m.ground_truth |= self.ground_truth;
        m.pose_count = self.pose_count.unwrap_or(m.pose_count);
        m.pose_seed = self.pose_seed.unwrap_or(m.pose_seed);
        m.noise_seed = self.noise_seed.unwrap_or(m.noise_seed);
        c.robot_radius = self.robot_radius.unwrap_or(c.robot_radius);
        c.time_limit = self.time_limit.unwrap_or(c.time_limit);
        if let Some(o) = &self.out {
            c.output_dir = o.clone();
        }
        Ok(c)
    }
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected x,y,z".to_string())
}

fn parse_planner(s: &str) -> Result<Planner, String> {
    s.parse().map_err(|e: voxskel::planners::PlanError| e.to_string())
}

#[derive(Args)]
struct PlanCli {
    /// Directory written by `build`.
    #[arg(long)]
    dir: PathBuf,
    /// sparse_graph, astar_diagram, rrt_connect, rrt_star or astar_esdf.
    #[arg(long, value_parser = parse_planner)]
    planner: Planner,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    start: [f64; 3],
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    goal: [f64; 3],
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    robot_radius: Option<f64>,
    #[arg(long)]
    time_limit: Option<f64>,
    /// Result JSON; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Path polyline as PLY.
    #[arg(long)]
    ply: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long, default_value = "stability.csv")]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.10, 0.15, 0.25])]
    voxel_sizes: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.2])]
    sigmas: Vec<f64>,
    #[arg(long)]
    pose_count: Option<usize>,
    #[arg(long)]
    pose_seed: Option<u64>,
}

#[derive(Args)]
struct MazeArgs {
    /// Per-run records.
    #[arg(long, default_value = "maze_runs.csv")]
    out: PathBuf,
    /// Per-planner medians.
    #[arg(long, default_value = "maze_summary.csv")]
    summary: PathBuf,
    #[command(flatten)]
    maze: MazeFlags,
    #[arg(long, default_value_t = 10)]
    queries: usize,
    #[arg(long, default_value_t = 0)]
    query_seed: u64,
    /// Number of planner seeds, 0..n.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 10.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1.0)]
    rrt_star_time_limit: f64,
    #[arg(long, default_value_t = 0.3)]
    robot_radius: f64,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    dir: PathBuf,
    /// esdf, medial, diagram or graph.
    #[arg(long)]
    what: ExportKind,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::World(a) => {
            let source = match a.kind {
                WorldKind::Fixture => WorldSource::Fixture,
                WorldKind::Maze => WorldSource::Maze { spec: a.maze.spec() },
            };
            let w = cmd_world(&source, &a.out)?;
            eprintln!("wrote {} primitives to {}", w.primitives.len(), a.out.display());
        }
        Command::Build(a) => {
            let config = a.config()?;
            let out = cmd_build(&config, a.esdf.as_deref())?;
            audit_artifacts(&load_artifacts(&config.output_dir)?).context("artifact audit")?;
            for (stage, t) in &out.timings.stages {
                eprintln!("{stage:>16} {t:>10.4} s");
            }
            eprintln!(
                "diagram voxels {}, vertices {}, edges {}, subgraphs {}",
                voxskel::layers::diagram_voxel_count(&out.skeleton),
                out.graph.vertices.len(),
                out.graph.edges.len(),
                out.graph.subgraph_count()
            );
        }
        Command::Plan(a) => {
            let args = PlanArgs {
                dir: a.dir,
                planner: a.planner.to_string(),
                start: a.start,
                goal: a.goal,
                seed: a.seed,
                robot_radius: a.robot_radius,
                time_limit: a.time_limit,
                out: a.out.clone(),
                ply: a.ply,
            };
            let res = cmd_plan(&args)?;
            if a.out.is_none() {
                println!("{}", serde_json::to_string_pretty(&res)?);
            }
            if !res.success {
                eprintln!("no path found");
            }
        }
        Command::BenchStability(a) => {
            if a.voxel_sizes.is_empty() || a.sigmas.is_empty() {
                bail!("need at least one voxel size and one sigma");
            }
            let mut base = PipelineConfig::default().map;
            base.pose_count = a.pose_count.unwrap_or(base.pose_count);
            base.pose_seed = a.pose_seed.unwrap_or(base.pose_seed);
            let world = voxskel::world::scenes::fixture_room();
            let rows = bench_stability(&world, &base, &Default::default(), &a.voxel_sizes, &a.sigmas)?;
            write_records(&rows, File::create(&a.out)?)?;
            let s = summarize_stability(&rows);
            for r in &rows {
                eprintln!("{:>14} diagram {:>6} graph {:>4}", r.config, r.diagram_voxels, r.graph_size());
            }
            eprintln!("diagram finest/coarsest per sigma: {:?}", s.diagram_ratios);
            eprintln!("graph max/min: {:.2} (with ground truth {:.2})", s.graph_ratio, s.graph_ratio_with_truth);
        }
        Command::BenchMaze(a) => {
            let cfg = MazeBenchConfig {
                spec: a.maze.spec(),
                queries: a.queries,
                query_seed: a.query_seed,
                seeds: (0..a.seeds).collect(),
                time_limit: a.time_limit,
                rrt_star_time_limit: a.rrt_star_time_limit,
                robot_radius: a.robot_radius,
                ..MazeBenchConfig::default()
            };
            let map = build_maze_map(&cfg)?;
            eprintln!("built {} in {:.1} s", map.map_id, map.timings.total());
            let bench = run_maze_bench(&map, &cfg)?;
            write_records(&bench.records, File::create(&a.out)?)?;
            let summary = summarize_maze(&bench.records);
            write_records(&summary, File::create(&a.summary)?)?;
            for s in &summary {
                eprintln!(
                    "{:>16} time {:>10.5} s  length {:>7.2} m  vertices {:>5.0}  success {:.2}",
                    s.planner, s.median_time_s, s.median_path_length_m, s.median_solution_vertices, s.success_rate
                );
            }
            let worst = path_length_ratios(&bench.records).into_iter().map(|(_, r)| r).fold(f64::NAN, f64::max);
            eprintln!("worst sparse/rrt_star length ratio {worst:.3}");
            eprintln!("audit failures {} of {}", bench.audit_failures, bench.audited);
        }
        Command::Export(a) => cmd_export(&a.dir, a.what, &a.out)?,
    }
    Ok(())
}
