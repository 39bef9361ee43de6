//! Binary layer dumps and PLY point-cloud export.
//!
//! Dump layout (all little-endian):
//!
//! ```text
//! "SKPL" | version u32 | voxel_size f64 | block side u32 | block count u64
//! per block: block index 3×i64, then BLOCK_SIDE³ records of
//!            distance f32 | parent 3×i8 | flags u8
//! ```
//!
//! Blocks are written in scan order so identical layers produce identical
//! bytes.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::layers::{EsdfVoxel, SkeletonLayer, SkeletonVoxel};
use crate::voxel::{GridIndex, Layer, BLOCK_SIDE, VOXELS_PER_BLOCK};

pub const MAGIC: &[u8; 4] = b"SKPL";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_OBSERVED: u8 = 1 << 0;
const FLAG_FIXED: u8 = 1 << 1;
const FLAG_MEDIAL: u8 = 1 << 2;
const FLAG_EDGE: u8 = 1 << 3;
const FLAG_VERTEX: u8 = 1 << 4;

#[derive(Debug, Error)]
pub enum LayerIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported block side {0}")]
    UnsupportedBlockSide(u32),
    #[error("invalid layer: {0}")]
    Invalid(String),
}

/// Fixed-size on-disk record of a voxel.
pub trait VoxelRecord: Copy + Default {
    fn to_record(&self) -> (f32, [i8; 3], u8);
    fn from_record(distance: f32, parent: [i8; 3], flags: u8) -> Self;
}

impl VoxelRecord for EsdfVoxel {
    fn to_record(&self) -> (f32, [i8; 3], u8) {
        let mut flags = 0;
        if self.observed {
            flags |= FLAG_OBSERVED;
        }
        if self.fixed {
            flags |= FLAG_FIXED;
        }
        (self.distance, self.parent, flags)
    }

    fn from_record(distance: f32, parent: [i8; 3], flags: u8) -> Self {
        EsdfVoxel {
            distance,
            parent,
            observed: flags & FLAG_OBSERVED != 0,
            fixed: flags & FLAG_FIXED != 0,
        }
    }
}

/// Vertex ids are not stored; they are restored from the sparse graph.
impl VoxelRecord for SkeletonVoxel {
    fn to_record(&self) -> (f32, [i8; 3], u8) {
        let mut flags = 0;
        if self.on_medial_axis {
            flags |= FLAG_MEDIAL;
        }
        if self.is_edge {
            flags |= FLAG_EDGE;
        }
        if self.is_vertex {
            flags |= FLAG_VERTEX;
        }
        (self.distance, [0; 3], flags)
    }

    fn from_record(distance: f32, _parent: [i8; 3], flags: u8) -> Self {
        SkeletonVoxel {
            on_medial_axis: flags & FLAG_MEDIAL != 0,
            is_edge: flags & FLAG_EDGE != 0,
            is_vertex: flags & FLAG_VERTEX != 0,
            vertex_id: None,
            distance,
        }
    }
}

pub fn write_layer<V: VoxelRecord, W: Write>(layer: &Layer<V>, mut out: W) -> Result<(), LayerIoError> {
    let blocks = layer.sorted_blocks();
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&layer.voxel_size().to_le_bytes())?;
    out.write_all(&(BLOCK_SIDE as u32).to_le_bytes())?;
    out.write_all(&(blocks.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(24 + VOXELS_PER_BLOCK * 8);
    for b in blocks {
        buf.clear();
        for c in [b.x, b.y, b.z] {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        for v in layer.block_voxels(b).expect("listed block") {
            let (d, p, f) = v.to_record();
            buf.extend_from_slice(&d.to_le_bytes());
            buf.extend(p.iter().map(|c| *c as u8));
            buf.push(f);
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_layer<V: VoxelRecord, R: Read>(mut input: R) -> Result<Layer<V>, LayerIoError> {
    let magic = read_array::<4, _>(&mut input)?;
    if &magic != MAGIC {
        return Err(LayerIoError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != FORMAT_VERSION {
        return Err(LayerIoError::UnsupportedVersion(version));
    }
    let voxel_size = f64::from_le_bytes(read_array(&mut input)?);
    let side = u32::from_le_bytes(read_array(&mut input)?);
    if side as i64 != BLOCK_SIDE {
        return Err(LayerIoError::UnsupportedBlockSide(side));
    }
    let count = u64::from_le_bytes(read_array(&mut input)?);
    let mut layer = Layer::new(voxel_size).map_err(|e| LayerIoError::Invalid(e.to_string()))?;
    let mut rec = vec![0u8; VOXELS_PER_BLOCK * 8];
    for _ in 0..count {
        let x = i64::from_le_bytes(read_array(&mut input)?);
        let y = i64::from_le_bytes(read_array(&mut input)?);
        let z = i64::from_le_bytes(read_array(&mut input)?);
        input.read_exact(&mut rec)?;
        let voxels: Vec<V> = rec
            .chunks_exact(8)
            .map(|c| {
                V::from_record(
                    f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                    [c[4] as i8, c[5] as i8, c[6] as i8],
                    c[7],
                )
            })
            .collect();
        let block = GridIndex::new(x, y, z);
        if layer.has_block(block) {
            return Err(LayerIoError::Invalid(format!("duplicate block {block:?}")));
        }
        layer.insert_block(block, voxels);
    }
    Ok(layer)
}

pub fn save_layer<V: VoxelRecord>(layer: &Layer<V>, path: &std::path::Path) -> Result<(), LayerIoError> {
    let f = std::fs::File::create(path)?;
    let mut w = io::BufWriter::new(f);
    write_layer(layer, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_layer<V: VoxelRecord>(path: &std::path::Path) -> Result<Layer<V>, LayerIoError> {
    let f = std::fs::File::open(path)?;
    read_layer(io::BufReader::new(f))
}

/// ASCII PLY of the diagram (or full medial axis) with distance as a scalar.
pub fn write_skeleton_ply<W: Write>(
    skeleton: &SkeletonLayer,
    medial_axis: bool,
    mut out: W,
) -> io::Result<()> {
    let s = skeleton.voxel_size();
    let pts: Vec<_> = skeleton
        .iter()
        .filter(|(_, v)| if medial_axis { v.on_medial_axis } else { v.is_edge })
        .map(|(i, v)| (i.center(s), v.distance))
        .collect();
    writeln!(out, "ply\nformat ascii 1.0")?;
    writeln!(out, "element vertex {}", pts.len())?;
    writeln!(out, "property float x\nproperty float y\nproperty float z")?;
    writeln!(out, "property float distance\nend_header")?;
    for (p, d) in pts {
        writeln!(out, "{} {} {} {}", p.x, p.y, p.z, d)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_esdf() -> Layer<EsdfVoxel> {
        let mut l = Layer::new(0.1).unwrap();
        for (i, idx) in [GridIndex::new(0, 0, 0), GridIndex::new(-17, 40, 3)].iter().enumerate() {
            *l.get_or_allocate_mut(*idx) = EsdfVoxel {
                distance: 0.25 * (i as f32 + 1.0),
                parent: [-3, 127, -128],
                observed: true,
                fixed: i == 1,
            };
        }
        l
    }

    #[test]
    fn header_layout() {
        let mut bytes = Vec::new();
        write_layer(&sample_esdf(), &mut bytes).unwrap();
        assert_eq!(&bytes[0..4], b"SKPL");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), 0.1);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 16);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 28 + 2 * (24 + 4096 * 8));
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let mut bytes = Vec::new();
        write_layer(&sample_esdf(), &mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_layer::<EsdfVoxel, _>(&bad[..]),
            Err(LayerIoError::BadMagic(_))
        ));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            read_layer::<EsdfVoxel, _>(&bad[..]),
            Err(LayerIoError::UnsupportedVersion(9))
        ));
        assert!(read_layer::<EsdfVoxel, _>(&bytes[..100]).is_err());
    }

    proptest! {
        #[test]
        fn esdf_dump_is_bit_exact(
            voxels in proptest::collection::vec(
                ((-40i64..40, -40i64..40, -40i64..40), any::<f32>(), any::<[i8; 3]>(), any::<bool>(), any::<bool>()),
                0..20,
            ),
            voxel_size in 0.01f64..1.0,
        ) {
            let mut l = Layer::new(voxel_size).unwrap();
            for ((x, y, z), d, p, o, f) in voxels {
                *l.get_or_allocate_mut(GridIndex::new(x, y, z)) =
                    EsdfVoxel { distance: d, parent: p, observed: o, fixed: f };
            }
            let mut bytes = Vec::new();
            write_layer(&l, &mut bytes).unwrap();
            let back: Layer<EsdfVoxel> = read_layer(&bytes[..]).unwrap();
            let mut again = Vec::new();
            write_layer(&back, &mut again).unwrap();
            prop_assert_eq!(bytes, again);
        }
    }

    #[test]
    fn skeleton_flags_round_trip() {
        let mut l: SkeletonLayer = Layer::new(0.2).unwrap();
        *l.get_or_allocate_mut(GridIndex::new(1, 2, 3)) = SkeletonVoxel {
            on_medial_axis: true,
            is_edge: true,
            is_vertex: true,
            vertex_id: None,
            distance: 0.75,
        };
        let mut bytes = Vec::new();
        write_layer(&l, &mut bytes).unwrap();
        let back: SkeletonLayer = read_layer(&bytes[..]).unwrap();
        assert_eq!(back, l);
    }
}
