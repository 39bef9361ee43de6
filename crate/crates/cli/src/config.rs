//! Pipeline configuration shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use voxskel::pipeline::{MapConfig, SkeletonConfig};
use voxskel::planners::RrtConfig;
use voxskel::world::scenes::{fixture_room, maze_coverage_poses};
use voxskel::world::{generate_maze, MazeSpec, Pose, PrimitiveWorld};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorldSource {
    Fixture,
    Maze { spec: MazeSpec },
    File { path: PathBuf },
}

impl WorldSource {
    pub fn load(&self) -> Result<PrimitiveWorld> {
        let world = match self {
            WorldSource::Fixture => fixture_room(),
            WorldSource::Maze { spec } => generate_maze(spec)?,
            WorldSource::File { path } => {
                PrimitiveWorld::load(path).with_context(|| format!("loading world {}", path.display()))?
            }
        };
        world.validate()?;
        Ok(world)
    }

    /// Scripted scan poses, if the source has them. Other worlds are scanned
    /// from random free poses.
    pub fn coverage_poses(&self) -> Option<Vec<Pose>> {
        match self {
            WorldSource::Maze { spec } => Some(maze_coverage_poses(spec)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub world: WorldSource,
    pub map: MapConfig,
    pub skeleton: SkeletonConfig,
    pub rrt: RrtConfig,
    pub robot_radius: f64,
    /// Budget of the sampling planners, seconds.
    pub time_limit: f64,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            world: WorldSource::Fixture,
            map: MapConfig::default(),
            skeleton: SkeletonConfig::default(),
            rrt: RrtConfig::default(),
            robot_radius: 0.3,
            time_limit: 10.0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        match &self.world {
            WorldSource::File { path } if !path.is_file() => bail!("world file {} does not exist", path.display()),
            WorldSource::Maze { spec } => spec.validate()?,
            _ => {}
        }
        let m = &self.map;
        if !(m.voxel_size > 0.0) {
            bail!("voxel_size must be positive");
        }
        if !(m.noise_sigma >= 0.0) {
            bail!("noise_sigma must be >= 0");
        }
        if !(m.tsdf.truncation_voxels > 0.0) {
            bail!("truncation_voxels must be positive");
        }
        if !(m.esdf.max_distance > 0.0) {
            bail!("esdf max_distance must be positive");
        }
        m.camera.validate()?;
        self.skeleton.medial.validate()?;
        self.skeleton.graph.validate()?;
        if self.skeleton.thinning.max_passes == 0 {
            bail!("thinning max_passes must be positive");
        }
        self.rrt.validate()?;
        if !(self.robot_radius > 0.0) {
            bail!("robot_radius must be positive");
        }
        if !(self.time_limit >= 0.0) {
            bail!("time_limit must be >= 0");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut c = PipelineConfig::default();
        c.world = WorldSource::Maze { spec: MazeSpec::desk() };
        c.map.noise_sigma = 0.1;
        let back: PipelineConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"robot_radius": 0.5}"#).unwrap();
        assert_eq!(c.robot_radius, 0.5);
        assert_eq!(c.map, MapConfig::default());
    }

    #[test]
    fn rejects_missing_world_file() {
        let c = PipelineConfig { world: WorldSource::File { path: "/nonexistent/world.json".into() }, ..Default::default() };
        assert!(c.validate().is_err());
        assert!(PipelineConfig::default().validate().is_ok());
        let c = PipelineConfig { robot_radius: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
