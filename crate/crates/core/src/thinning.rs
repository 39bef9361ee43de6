//! Topology-preserving thinning of the thick edge set into a one-voxel-thin
//! skeleton diagram.
//!
//! Deletion candidates are edge voxels matching a deletion template. They are
//! collected per border direction from a snapshot and deleted one at a time,
//! each re-checked against the current state: a voxel goes only if it is
//! simple and not an end point.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layers::SkeletonLayer;
use crate::voxel::{connected_components, Connectivity, GridIndex, Neighborhood, CENTER_BIT, OFFSETS_6};

const BUILTIN_TEMPLATES: &str = include_str!("../data/thinning_templates.json");

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("template {name}: {reason}")]
    Invalid { name: String, reason: String },
}

/// 3×3×3 pattern: `foreground` cells must be set, `background` cells clear,
/// everything else is don't-care.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelTemplate {
    pub foreground: u32,
    pub background: u32,
}

impl VoxelTemplate {
    pub fn new(foreground: u32, background: u32) -> Self {
        Self { foreground, background }
    }

    pub fn is_valid(&self) -> bool {
        self.foreground & self.background == 0
            && self.foreground & (1 << CENTER_BIT) != 0
            && (self.foreground | self.background) >> 27 == 0
    }

    #[inline]
    pub fn matches(&self, n: Neighborhood) -> bool {
        n.0 & self.foreground == self.foreground && n.0 & self.background == 0
    }

    pub fn transformed(&self, t: &Symmetry) -> Self {
        Self {
            foreground: t.apply_mask(self.foreground),
            background: t.apply_mask(self.background),
        }
    }
}

/// Signed axis permutation: output axis `i` takes input axis `perm[i]`
/// multiplied by `sign[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Symmetry {
    pub perm: [usize; 3],
    pub sign: [i64; 3],
}

impl Symmetry {
    /// All 48 rotations and reflections of the cube.
    pub fn all() -> Vec<Symmetry> {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut out = Vec::with_capacity(48);
        for perm in PERMS {
            for s in 0..8 {
                let sign = [1 - 2 * (s & 1), 1 - (s & 2), 1 - ((s & 4) >> 1)];
                out.push(Symmetry { perm, sign });
            }
        }
        out
    }

    pub fn apply(&self, o: GridIndex) -> GridIndex {
        let c = [o.x, o.y, o.z];
        GridIndex::new(
            self.sign[0] * c[self.perm[0]],
            self.sign[1] * c[self.perm[1]],
            self.sign[2] * c[self.perm[2]],
        )
    }

    pub fn apply_mask(&self, mask: u32) -> u32 {
        let mut out = 0;
        let mut m = mask;
        while m != 0 {
            let b = m.trailing_zeros();
            let o = self.apply(Neighborhood::offset_of(b));
            out |= 1 << Neighborhood::bit(o.x, o.y, o.z);
            m &= m - 1;
        }
        out
    }
}

/// Templates closed under the cube symmetries, duplicates removed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TemplateSet {
    pub templates: Vec<VoxelTemplate>,
}

impl TemplateSet {
    pub fn from_bases(bases: &[VoxelTemplate]) -> Self {
        let mut templates: Vec<VoxelTemplate> = bases.iter().flat_map(|b| expand_symmetries(b).templates).collect();
        templates.sort();
        templates.dedup();
        Self { templates }
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn matches_any(&self, n: Neighborhood) -> bool {
        self.templates.iter().any(|t| t.matches(n))
    }
}

/// Every distinct image of `template` under the 48 cube symmetries.
pub fn expand_symmetries(template: &VoxelTemplate) -> TemplateSet {
    let mut templates: Vec<VoxelTemplate> = Symmetry::all().iter().map(|s| template.transformed(s)).collect();
    templates.sort();
    templates.dedup();
    TemplateSet { templates }
}

#[derive(Deserialize, Serialize)]
struct TemplateRecord {
    name: String,
    foreground: Vec<[i64; 3]>,
    background: Vec<[i64; 3]>,
}

#[derive(Deserialize, Serialize)]
struct TemplateFile {
    deletion: Vec<TemplateRecord>,
    corner: Vec<TemplateRecord>,
}

fn cells_to_mask(name: &str, cells: &[[i64; 3]]) -> Result<u32, TemplateError> {
    let mut mask = 0u32;
    for c in cells {
        if c.iter().any(|v| !(-1..=1).contains(v)) {
            return Err(TemplateError::Invalid {
                name: name.into(),
                reason: format!("cell {c:?} outside the 3x3x3 neighborhood"),
            });
        }
        mask |= 1 << Neighborhood::bit(c[0], c[1], c[2]);
    }
    Ok(mask)
}

fn parse_record(r: &TemplateRecord) -> Result<VoxelTemplate, TemplateError> {
    let t = VoxelTemplate::new(cells_to_mask(&r.name, &r.foreground)?, cells_to_mask(&r.name, &r.background)?);
    if t.foreground & t.background != 0 {
        return Err(TemplateError::Invalid { name: r.name.clone(), reason: "foreground and background overlap".into() });
    }
    if t.foreground & (1 << CENTER_BIT) == 0 {
        return Err(TemplateError::Invalid { name: r.name.clone(), reason: "center must be foreground".into() });
    }
    Ok(t)
}

/// Deletion templates and corner templates, each closed under symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct ThinningTemplates {
    pub deletion: TemplateSet,
    pub corner: TemplateSet,
}

impl ThinningTemplates {
    pub fn from_json(s: &str) -> Result<Self, TemplateError> {
        let f: TemplateFile = serde_json::from_str(s)?;
        let deletion: Vec<_> = f.deletion.iter().map(parse_record).collect::<Result<_, _>>()?;
        let corner: Vec<_> = f.corner.iter().map(parse_record).collect::<Result<_, _>>()?;
        Ok(Self {
            deletion: TemplateSet::from_bases(&deletion),
            corner: TemplateSet::from_bases(&corner),
        })
    }

    /// Templates shipped with the crate.
    pub fn builtin() -> &'static ThinningTemplates {
        static CELL: OnceLock<ThinningTemplates> = OnceLock::new();
        CELL.get_or_init(|| ThinningTemplates::from_json(BUILTIN_TEMPLATES).expect("bundled templates are valid"))
    }
}

/// A foreground center is simple when the foreground around it forms exactly
/// one 26-connected component and the background exactly one 6-connected
/// component touching the center's faces.
pub fn is_simple(n: Neighborhood) -> bool {
    connected_components(n, Connectivity::TwentySix) == 1
        && connected_components(n.complement(), Connectivity::Six) == 1
}

/// End point test with the built-in corner templates.
pub fn is_end_point(n: Neighborhood) -> bool {
    is_end_point_with(n, Some(&ThinningTemplates::builtin().corner))
}

/// Curve tips (exactly one 26-neighbor) are end points; so are voxels with at
/// most one face neighbor that match a corner template, if given.
pub fn is_end_point_with(n: Neighborhood, corner: Option<&TemplateSet>) -> bool {
    let n = n.with_center(true);
    if n.count26() == 1 {
        return true;
    }
    match corner {
        Some(c) => n.count6() <= 1 && c.matches_any(n),
        None => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinningConfig {
    pub use_corner_template: bool,
    /// Safety cap on full passes over all six directions.
    pub max_passes: usize,
}

impl Default for ThinningConfig {
    fn default() -> Self {
        Self {
            use_corner_template: true,
            max_passes: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ThinningStats {
    pub passes: usize,
    pub deleted: usize,
}

fn neighborhood(skeleton: &SkeletonLayer, idx: GridIndex) -> Neighborhood {
    Neighborhood::gather(idx, |i| skeleton.get(i).is_some_and(|v| v.is_edge))
}

/// Whether a voxel would be removed right now by [`thin`].
pub fn is_deletable(n: Neighborhood, templates: &ThinningTemplates, use_corner_template: bool) -> bool {
    let corner = use_corner_template.then_some(&templates.corner);
    templates.deletion.matches_any(n) && is_simple(n) && !is_end_point_with(n, corner)
}

/// Thins the `is_edge` set in place to a fixpoint.
pub fn thin(skeleton: &mut SkeletonLayer, config: &ThinningConfig) -> ThinningStats {
    thin_with(skeleton, config, ThinningTemplates::builtin())
}

pub fn thin_with(skeleton: &mut SkeletonLayer, config: &ThinningConfig, templates: &ThinningTemplates) -> ThinningStats {
    let mut stats = ThinningStats::default();
    let mut foreground: Vec<GridIndex> = skeleton.iter().filter(|(_, v)| v.is_edge).map(|(i, _)| i).collect();
    while stats.passes < config.max_passes {
        stats.passes += 1;
        let mut changed = false;
        for dir in OFFSETS_6 {
            let candidates: Vec<GridIndex> = foreground
                .iter()
                .copied()
                .filter(|&i| {
                    let n = neighborhood(skeleton, i);
                    !n.get(dir) && templates.deletion.matches_any(n)
                })
                .collect();
            for idx in candidates {
                let n = neighborhood(skeleton, idx);
                if is_deletable(n, templates, config.use_corner_template) {
                    let v = skeleton.get_mut(idx).expect("foreground voxel exists");
                    v.is_edge = false;
                    v.is_vertex = false;
                    v.vertex_id = None;
                    stats.deleted += 1;
                    changed = true;
                }
            }
            foreground.retain(|&i| skeleton.get(i).is_some_and(|v| v.is_edge));
        }
        if !changed {
            break;
        }
    }
    stats
}
