//! Block-organized dense voxel storage and 3×3×3 neighborhood utilities.
//!
//! Voxels live in fixed-size cubic blocks of [`BLOCK_SIDE`]³ voxels kept in a
//! hash map keyed by block index, so sparse worlds only pay for the blocks
//! they touch. A voxel at [`GridIndex`] `i` has its center at
//! `(i + 0.5) * voxel_size` on every axis.

use std::cmp::Ordering;
use std::ops::{Add, Neg, Sub};

use nalgebra::{Point3, Vector3};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Voxels per block edge.
pub const BLOCK_SIDE: i64 = 16;
const BLOCK_SHIFT: u32 = 4;
const BLOCK_MASK: i64 = BLOCK_SIDE - 1;
/// Voxels stored in one block.
pub const VOXELS_PER_BLOCK: usize = (BLOCK_SIDE * BLOCK_SIDE * BLOCK_SIDE) as usize;

#[derive(Debug, Error, PartialEq)]
pub enum VoxelError {
    #[error("voxel size must be positive and finite, got {0}")]
    InvalidVoxelSize(f64),
}

/// Integer voxel coordinate. Also used for grid offsets between voxels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridIndex {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl GridIndex {
    pub const ZERO: GridIndex = GridIndex { x: 0, y: 0, z: 0 };

    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Self { x, y, z }
    }

    /// Index of the voxel containing `p`.
    pub fn from_position(p: &Point3<f64>, voxel_size: f64) -> Self {
        Self::new(
            (p.x / voxel_size).floor() as i64,
            (p.y / voxel_size).floor() as i64,
            (p.z / voxel_size).floor() as i64,
        )
    }

    /// World position of the voxel center.
    pub fn center(&self, voxel_size: f64) -> Point3<f64> {
        Point3::new(
            (self.x as f64 + 0.5) * voxel_size,
            (self.y as f64 + 0.5) * voxel_size,
            (self.z as f64 + 0.5) * voxel_size,
        )
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x as f64, self.y as f64, self.z as f64)
    }

    pub fn norm_squared(&self) -> i64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        (self.norm_squared() as f64).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// Largest absolute component.
    pub fn chebyshev(&self) -> i64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn block(&self) -> GridIndex {
        GridIndex::new(
            self.x >> BLOCK_SHIFT,
            self.y >> BLOCK_SHIFT,
            self.z >> BLOCK_SHIFT,
        )
    }

    /// Linear index of this voxel inside its block, x fastest.
    pub fn local_linear(&self) -> usize {
        ((self.x & BLOCK_MASK) + BLOCK_SIDE * ((self.y & BLOCK_MASK) + BLOCK_SIDE * (self.z & BLOCK_MASK)))
            as usize
    }

    fn from_block_local(block: GridIndex, linear: usize) -> Self {
        let l = linear as i64;
        GridIndex::new(
            block.x * BLOCK_SIDE + (l & BLOCK_MASK),
            block.y * BLOCK_SIDE + ((l >> BLOCK_SHIFT) & BLOCK_MASK),
            block.z * BLOCK_SIDE + (l >> (2 * BLOCK_SHIFT)),
        )
    }

    /// Total order used for every deterministic scan: block first, then the
    /// voxel's linear index inside the block.
    pub fn scan_cmp(&self, other: &GridIndex) -> Ordering {
        let (a, b) = (self.block(), other.block());
        (a.z, a.y, a.x, self.local_linear()).cmp(&(b.z, b.y, b.x, other.local_linear()))
    }

    pub fn neighbors26(self) -> impl Iterator<Item = GridIndex> {
        OFFSETS_26.iter().map(move |o| self + *o)
    }

    pub fn neighbors6(self) -> impl Iterator<Item = GridIndex> {
        OFFSETS_6.iter().map(move |o| self + *o)
    }
}

impl Ord for GridIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.scan_cmp(other)
    }
}

impl PartialOrd for GridIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for GridIndex {
    type Output = GridIndex;
    fn add(self, o: GridIndex) -> GridIndex {
        GridIndex::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for GridIndex {
    type Output = GridIndex;
    fn sub(self, o: GridIndex) -> GridIndex {
        GridIndex::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for GridIndex {
    type Output = GridIndex;
    fn neg(self) -> GridIndex {
        GridIndex::new(-self.x, -self.y, -self.z)
    }
}

const fn build_offsets26() -> [GridIndex; 26] {
    let mut out = [GridIndex::ZERO; 26];
    let mut n = 0;
    let mut dz = -1;
    while dz <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dx = -1;
            while dx <= 1 {
                if !(dx == 0 && dy == 0 && dz == 0) {
                    out[n] = GridIndex::new(dx, dy, dz);
                    n += 1;
                }
                dx += 1;
            }
            dy += 1;
        }
        dz += 1;
    }
    out
}

/// All offsets with Chebyshev norm 1, x fastest, then y, then z.
pub const OFFSETS_26: [GridIndex; 26] = build_offsets26();

/// Face offsets in the order −x, +x, −y, +y, −z, +z.
pub const OFFSETS_6: [GridIndex; 6] = [
    GridIndex::new(-1, 0, 0),
    GridIndex::new(1, 0, 0),
    GridIndex::new(0, -1, 0),
    GridIndex::new(0, 1, 0),
    GridIndex::new(0, 0, -1),
    GridIndex::new(0, 0, 1),
];

pub fn neighbors26(index: GridIndex) -> [GridIndex; 26] {
    OFFSETS_26.map(|o| index + o)
}

pub fn neighbors6(index: GridIndex) -> [GridIndex; 6] {
    OFFSETS_6.map(|o| index + o)
}

/// Dense voxel storage split into hash-mapped blocks.
#[derive(Clone, Debug)]
pub struct Layer<V> {
    voxel_size: f64,
    blocks: FxHashMap<GridIndex, Box<[V]>>,
}

impl<V: Copy + Default> Layer<V> {
    pub fn new(voxel_size: f64) -> Result<Self, VoxelError> {
        if !(voxel_size > 0.0 && voxel_size.is_finite()) {
            return Err(VoxelError::InvalidVoxelSize(voxel_size));
        }
        Ok(Self {
            voxel_size,
            blocks: FxHashMap::default(),
        })
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn has_block(&self, block: GridIndex) -> bool {
        self.blocks.contains_key(&block)
    }

    #[inline]
    pub fn get(&self, index: GridIndex) -> Option<&V> {
        self.blocks
            .get(&index.block())
            .map(|b| &b[index.local_linear()])
    }

    #[inline]
    pub fn get_mut(&mut self, index: GridIndex) -> Option<&mut V> {
        self.blocks
            .get_mut(&index.block())
            .map(|b| &mut b[index.local_linear()])
    }

    pub fn get_at(&self, p: &Point3<f64>) -> Option<&V> {
        self.get(GridIndex::from_position(p, self.voxel_size))
    }

    /// Allocates (if needed) the block holding `index` and returns the voxel.
    pub fn get_or_allocate_mut(&mut self, index: GridIndex) -> &mut V {
        let block = self
            .blocks
            .entry(index.block())
            .or_insert_with(|| vec![V::default(); VOXELS_PER_BLOCK].into_boxed_slice());
        &mut block[index.local_linear()]
    }

    pub fn allocate_block(&mut self, block: GridIndex) {
        self.blocks
            .entry(block)
            .or_insert_with(|| vec![V::default(); VOXELS_PER_BLOCK].into_boxed_slice());
    }

    /// Allocates every block overlapping the closed voxel range `[min, max]`.
    pub fn allocate_range(&mut self, min: GridIndex, max: GridIndex) {
        let (bmin, bmax) = (min.block(), max.block());
        for bz in bmin.z..=bmax.z {
            for by in bmin.y..=bmax.y {
                for bx in bmin.x..=bmax.x {
                    self.allocate_block(GridIndex::new(bx, by, bz));
                }
            }
        }
    }

    /// Block indices in scan order.
    pub fn sorted_blocks(&self) -> Vec<GridIndex> {
        let mut keys: Vec<GridIndex> = self.blocks.keys().copied().collect();
        keys.sort_by(|a, b| (a.z, a.y, a.x).cmp(&(b.z, b.y, b.x)));
        keys
    }

    pub fn block_voxels(&self, block: GridIndex) -> Option<&[V]> {
        self.blocks.get(&block).map(|b| &b[..])
    }

    pub(crate) fn block_voxels_mut(&mut self, block: GridIndex) -> Option<&mut [V]> {
        self.blocks.get_mut(&block).map(|b| &mut b[..])
    }

    pub(crate) fn insert_block(&mut self, block: GridIndex, voxels: Vec<V>) {
        debug_assert_eq!(voxels.len(), VOXELS_PER_BLOCK);
        self.blocks.insert(block, voxels.into_boxed_slice());
    }

    /// Every voxel in scan order.
    pub fn iter(&self) -> impl Iterator<Item = (GridIndex, &V)> + '_ {
        self.sorted_blocks().into_iter().flat_map(move |b| {
            self.blocks[&b]
                .iter()
                .enumerate()
                .map(move |(i, v)| (GridIndex::from_block_local(b, i), v))
        })
    }

    /// Every voxel in arbitrary order; cheaper than [`Layer::iter`].
    pub fn iter_unordered(&self) -> impl Iterator<Item = (GridIndex, &V)> + '_ {
        self.blocks.iter().flat_map(|(b, vs)| {
            let b = *b;
            vs.iter()
                .enumerate()
                .map(move |(i, v)| (GridIndex::from_block_local(b, i), v))
        })
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(GridIndex, &mut V)) {
        for (b, vs) in self.blocks.iter_mut() {
            for (i, v) in vs.iter_mut().enumerate() {
                f(GridIndex::from_block_local(*b, i), v);
            }
        }
    }

    /// Inclusive voxel range covered by allocated blocks.
    pub fn index_bounds(&self) -> Option<(GridIndex, GridIndex)> {
        let mut it = self.blocks.keys();
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for b in it {
            lo = GridIndex::new(lo.x.min(b.x), lo.y.min(b.y), lo.z.min(b.z));
            hi = GridIndex::new(hi.x.max(b.x), hi.y.max(b.y), hi.z.max(b.z));
        }
        let min = GridIndex::new(lo.x * BLOCK_SIDE, lo.y * BLOCK_SIDE, lo.z * BLOCK_SIDE);
        let max = GridIndex::new(
            (hi.x + 1) * BLOCK_SIDE - 1,
            (hi.y + 1) * BLOCK_SIDE - 1,
            (hi.z + 1) * BLOCK_SIDE - 1,
        );
        Some((min, max))
    }

    /// Applies `f` to every voxel, producing a layer with the same blocks.
    pub fn map<W: Copy + Default>(&self, mut f: impl FnMut(GridIndex, &V) -> W) -> Layer<W> {
        let mut out = Layer {
            voxel_size: self.voxel_size,
            blocks: FxHashMap::default(),
        };
        out.blocks.reserve(self.blocks.len());
        for (b, vs) in &self.blocks {
            let mapped: Vec<W> = vs
                .iter()
                .enumerate()
                .map(|(i, v)| f(GridIndex::from_block_local(*b, i), v))
                .collect();
            out.blocks.insert(*b, mapped.into_boxed_slice());
        }
        out
    }
}

impl<V: Copy + Default + PartialEq> PartialEq for Layer<V> {
    fn eq(&self, other: &Self) -> bool {
        self.voxel_size == other.voxel_size
            && self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .all(|(k, v)| other.blocks.get(k).is_some_and(|o| o == v))
    }
}

/// Boolean 3×3×3 neighborhood. Bit `(dx+1) + 3(dy+1) + 9(dz+1)` holds the
/// cell at offset `(dx, dy, dz)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Neighborhood(pub u32);

pub const CENTER_BIT: u32 = 13;
const ALL_CELLS: u32 = (1 << 27) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connectivity {
    Six,
    Eighteen,
    TwentySix,
}

impl Neighborhood {
    #[inline]
    pub const fn bit(dx: i64, dy: i64, dz: i64) -> u32 {
        ((dx + 1) + 3 * (dy + 1) + 9 * (dz + 1)) as u32
    }

    pub const fn offset_of(bit: u32) -> GridIndex {
        let b = bit as i64;
        GridIndex::new(b % 3 - 1, (b / 3) % 3 - 1, b / 9 - 1)
    }

    pub fn from_fn(mut f: impl FnMut(GridIndex) -> bool) -> Self {
        let mut m = 0;
        for bit in 0..27 {
            if f(Self::offset_of(bit)) {
                m |= 1 << bit;
            }
        }
        Neighborhood(m)
    }

    /// Reads the neighborhood of `center` from any predicate over voxels.
    pub fn gather(center: GridIndex, mut f: impl FnMut(GridIndex) -> bool) -> Self {
        Self::from_fn(|o| f(center + o))
    }

    #[inline]
    pub fn get(&self, o: GridIndex) -> bool {
        self.0 & (1 << Self::bit(o.x, o.y, o.z)) != 0
    }

    pub fn set(&mut self, o: GridIndex, value: bool) {
        let b = 1 << Self::bit(o.x, o.y, o.z);
        if value {
            self.0 |= b;
        } else {
            self.0 &= !b;
        }
    }

    pub fn center(&self) -> bool {
        self.0 & (1 << CENTER_BIT) != 0
    }

    pub fn with_center(self, value: bool) -> Self {
        if value {
            Neighborhood(self.0 | (1 << CENTER_BIT))
        } else {
            Neighborhood(self.0 & !(1 << CENTER_BIT))
        }
    }

    pub fn complement(self) -> Self {
        Neighborhood(!self.0 & ALL_CELLS)
    }

    /// Number of set cells among the 26 non-center cells.
    pub fn count26(&self) -> u32 {
        (self.0 & !(1 << CENTER_BIT)).count_ones()
    }

    /// Number of set face cells.
    pub fn count6(&self) -> u32 {
        (self.0 & FACE_MASK).count_ones()
    }
}

const fn cell_class(bit: u32) -> i64 {
    let o = Neighborhood::offset_of(bit);
    o.x.abs() + o.y.abs() + o.z.abs()
}

const fn class_mask(class: i64) -> u32 {
    let mut m = 0;
    let mut b = 0;
    while b < 27 {
        if cell_class(b) == class {
            m |= 1 << b;
        }
        b += 1;
    }
    m
}

/// The six face cells.
pub const FACE_MASK: u32 = class_mask(1);
/// The twelve edge cells.
pub const EDGE_MASK: u32 = class_mask(2);
/// The eight corner cells.
pub const CORNER_MASK: u32 = class_mask(3);

const fn build_adjacency(max_l1: i64) -> [u32; 27] {
    let mut adj = [0u32; 27];
    let mut a = 0;
    while a < 27 {
        let oa = Neighborhood::offset_of(a);
        let mut b = 0;
        while b < 27 {
            let ob = Neighborhood::offset_of(b);
            let (dx, dy, dz) = ((oa.x - ob.x).abs(), (oa.y - ob.y).abs(), (oa.z - ob.z).abs());
            let cheb = if dx > dy { dx } else { dy };
            let cheb = if cheb > dz { cheb } else { dz };
            if a != b && cheb == 1 && dx + dy + dz <= max_l1 {
                adj[a as usize] |= 1 << b;
            }
            b += 1;
        }
        a += 1;
    }
    adj
}

const ADJ6: [u32; 27] = build_adjacency(1);
const ADJ18: [u32; 27] = build_adjacency(2);
const ADJ26: [u32; 27] = build_adjacency(3);

/// Connected pieces of `cells` under the given adjacency table.
#[inline]
fn components(cells: u32, adj: &[u32; 27], mut on_component: impl FnMut(u32)) {
    let mut remaining = cells;
    while remaining != 0 {
        let seed = remaining & remaining.wrapping_neg();
        let mut comp = seed;
        let mut frontier = seed;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                next |= adj[f.trailing_zeros() as usize];
                f &= f - 1;
            }
            next &= remaining & !comp;
            comp |= next;
            frontier = next;
        }
        remaining &= !comp;
        on_component(comp);
    }
}

/// Counts connected components of the set cells around the center.
///
/// The center cell is always ignored. For [`Connectivity::Six`] only the
/// 18-neighborhood is considered and only components containing a face cell
/// are counted, which is the convention used for background components in
/// simple-point tests.
pub fn connected_components(mask: Neighborhood, connectivity: Connectivity) -> usize {
    let cells = mask.0 & ALL_CELLS & !(1 << CENTER_BIT);
    let mut count = 0;
    match connectivity {
        Connectivity::Six => components(cells & !CORNER_MASK, &ADJ6, |c| {
            if c & FACE_MASK != 0 {
                count += 1;
            }
        }),
        Connectivity::Eighteen => components(cells, &ADJ18, |_| count += 1),
        Connectivity::TwentySix => components(cells, &ADJ26, |_| count += 1),
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn neighbors26_are_all_unit_chebyshev() {
        let n = neighbors26(GridIndex::ZERO);
        assert_eq!(n.len(), 26);
        assert!(n.iter().all(|o| o.chebyshev() == 1));
        assert!(n.contains(&GridIndex::new(1, 1, 1)));
        assert!(n.contains(&GridIndex::new(-1, -1, -1)));
        let faces = n.iter().filter(|o| o.norm_squared() == 1).count();
        assert_eq!(faces, 6);
        let unique: HashSet<_> = n.iter().collect();
        assert_eq!(unique.len(), 26);
    }

    #[test]
    fn neighbors26_order_is_x_fastest() {
        assert_eq!(OFFSETS_26[0], GridIndex::new(-1, -1, -1));
        assert_eq!(OFFSETS_26[1], GridIndex::new(0, -1, -1));
        assert_eq!(OFFSETS_26[3], GridIndex::new(-1, 0, -1));
        assert_eq!(OFFSETS_26[25], GridIndex::new(1, 1, 1));
        assert_eq!(neighbors26(GridIndex::new(3, 4, 5)), neighbors26(GridIndex::new(3, 4, 5)));
    }

    #[test]
    fn neighbors6_are_faces_and_subset_of_26() {
        let n6 = neighbors6(GridIndex::ZERO);
        assert!(n6.iter().all(|o| o.norm() == 1.0));
        let n26: HashSet<_> = neighbors26(GridIndex::ZERO).into_iter().collect();
        assert!(n6.iter().all(|o| n26.contains(o)));
        let expected: HashSet<_> = [
            GridIndex::new(1, 0, 0),
            GridIndex::new(-1, 0, 0),
            GridIndex::new(0, 1, 0),
            GridIndex::new(0, -1, 0),
            GridIndex::new(0, 0, 1),
            GridIndex::new(0, 0, -1),
        ]
        .into_iter()
        .collect();
        assert_eq!(n6.into_iter().collect::<HashSet<_>>(), expected);
    }

    #[test]
    fn position_round_trip() {
        let s = 0.1;
        for idx in [
            GridIndex::new(0, 0, 0),
            GridIndex::new(-1, 5, -17),
            GridIndex::new((1 << 20) - 1, -(1 << 20) + 1, 12345),
        ] {
            assert_eq!(GridIndex::from_position(&idx.center(s), s), idx);
        }
    }

    #[test]
    fn block_local_round_trip() {
        for idx in [GridIndex::new(-1, -16, 17), GridIndex::new(31, 0, -33)] {
            let back = GridIndex::from_block_local(idx.block(), idx.local_linear());
            assert_eq!(back, idx);
        }
        assert_eq!(GridIndex::new(-1, 0, 15).block(), GridIndex::new(-1, 0, 0));
    }

    #[test]
    fn layer_get_and_allocate() {
        let mut layer: Layer<u8> = Layer::new(0.2).unwrap();
        assert!(layer.get(GridIndex::new(3, 3, 3)).is_none());
        *layer.get_or_allocate_mut(GridIndex::new(-3, 3, 3)) = 7;
        assert_eq!(layer.get(GridIndex::new(-3, 3, 3)), Some(&7));
        assert_eq!(layer.get(GridIndex::new(-4, 3, 3)), Some(&0));
        assert_eq!(layer.block_count(), 1);
        assert!(Layer::<u8>::new(0.0).is_err());
        assert!(Layer::<u8>::new(f64::NAN).is_err());
    }

    #[test]
    fn layer_iter_is_scan_ordered() {
        let mut layer: Layer<u8> = Layer::new(1.0).unwrap();
        layer.allocate_range(GridIndex::new(-20, 0, 0), GridIndex::new(20, 0, 17));
        let idx: Vec<_> = layer.iter().map(|(i, _)| i).collect();
        assert_eq!(idx.len(), layer.block_count() * VOXELS_PER_BLOCK);
        assert!(idx.windows(2).all(|w| w[0].scan_cmp(&w[1]) == Ordering::Less));
    }

    #[test]
    fn components_trivial_cases() {
        assert_eq!(connected_components(Neighborhood(0), Connectivity::TwentySix), 0);
        let mut m = Neighborhood::default();
        m.set(GridIndex::new(1, 0, 0), true);
        m.set(GridIndex::new(-1, 0, 0), true);
        assert_eq!(connected_components(m, Connectivity::TwentySix), 2);
        m.set(GridIndex::new(0, 1, 0), true);
        assert_eq!(connected_components(m, Connectivity::TwentySix), 1);
        assert_eq!(connected_components(m, Connectivity::Eighteen), 1);
        // Without the center the face cells only touch through edge cells.
        assert_eq!(connected_components(m, Connectivity::Six), 3);
    }

    #[test]
    fn six_connectivity_ignores_unanchored_components() {
        let mut m = Neighborhood::default();
        m.set(GridIndex::new(1, 1, 0), true);
        assert_eq!(connected_components(m, Connectivity::Six), 0);
        m.set(GridIndex::new(1, 0, 0), true);
        assert_eq!(connected_components(m, Connectivity::Six), 1);
    }

    #[test]
    fn cell_class_masks() {
        assert_eq!(FACE_MASK.count_ones(), 6);
        assert_eq!(EDGE_MASK.count_ones(), 12);
        assert_eq!(CORNER_MASK.count_ones(), 8);
        assert_eq!(FACE_MASK & EDGE_MASK & CORNER_MASK, 0);
    }
}
