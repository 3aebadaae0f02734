//! Binary checkpoint format for embedding stores.
//!
//! Layout, all integers 32-bit little-endian, all floats f32 little-endian:
//!
//! ```text
//! magic "KGEB" | version | model tag | num_entities | num_relations | dim
//! entity matrix, row-major
//! per relation in id order: translation vector (TransE/TransR),
//!                           then matrix row-major (TransR/RESCAL)
//! ```
//!
//! Model tags: 0 = TransE, 1 = TransR, 2 = RESCAL.

use super::{EmbeddingStore, ModelKind};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"KGEB";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic bytes; not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("unknown model tag {0}")]
    BadModelTag(u32),
    #[error("checkpoint contains a non-finite value")]
    NonFinite,
    #[error("unexpected trailing bytes")]
    TrailingData,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn model_tag(model: ModelKind) -> u32 {
    match model {
        ModelKind::TransE => 0,
        ModelKind::TransR => 1,
        ModelKind::Rescal => 2,
    }
}

fn model_from_tag(tag: u32) -> Result<ModelKind, CheckpointError> {
    match tag {
        0 => Ok(ModelKind::TransE),
        1 => Ok(ModelKind::TransR),
        2 => Ok(ModelKind::Rescal),
        other => Err(CheckpointError::BadModelTag(other)),
    }
}

impl EmbeddingStore {
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        for v in [
            VERSION,
            model_tag(self.model),
            self.num_entities as u32,
            self.num_relations as u32,
            self.dim as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        let write_f32s = |w: &mut BufWriter<File>, vals: &[f64]| -> std::io::Result<()> {
            for &v in vals {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
            Ok(())
        };
        write_f32s(&mut w, &self.entities)?;
        let d = self.dim;
        for r in 0..self.num_relations {
            if self.model.has_rel_vecs() {
                write_f32s(&mut w, &self.rel_vecs[r * d..(r + 1) * d])?;
            }
            if self.model.has_rel_mats() {
                write_f32s(&mut w, &self.rel_mats[r * d * d..(r + 1) * d * d])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut u32_buf = [0u8; 4];
        let mut read_u32 = |r: &mut BufReader<File>| -> Result<u32, CheckpointError> {
            r.read_exact(&mut u32_buf)?;
            Ok(u32::from_le_bytes(u32_buf))
        };
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(CheckpointError::BadVersion(version));
        }
        let model = model_from_tag(read_u32(&mut r)?)?;
        let num_entities = read_u32(&mut r)? as usize;
        let num_relations = read_u32(&mut r)? as usize;
        let dim = read_u32(&mut r)? as usize;

        let mut store = EmbeddingStore::zeros(model, num_entities, num_relations, dim);
        let read_f32s = |r: &mut BufReader<File>, out: &mut [f64]| -> Result<(), CheckpointError> {
            let mut buf = [0u8; 4];
            for slot in out.iter_mut() {
                r.read_exact(&mut buf)?;
                let v = f32::from_le_bytes(buf) as f64;
                if !v.is_finite() {
                    return Err(CheckpointError::NonFinite);
                }
                *slot = v;
            }
            Ok(())
        };
        read_f32s(&mut r, &mut store.entities)?;
        for rel in 0..num_relations {
            if model.has_rel_vecs() {
                read_f32s(&mut r, &mut store.rel_vecs[rel * dim..(rel + 1) * dim])?;
            }
            if model.has_rel_mats() {
                let sq = dim * dim;
                read_f32s(&mut r, &mut store.rel_mats[rel * sq..(rel + 1) * sq])?;
            }
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(CheckpointError::TrailingData);
        }
        Ok(store)
    }

    /// Round every parameter to its f32 representation, matching what a
    /// save/load round trip produces.
    pub fn quantized(&self) -> Self {
        let mut out = self.clone();
        for v in out
            .entities
            .iter_mut()
            .chain(out.rel_vecs.iter_mut())
            .chain(out.rel_mats.iter_mut())
        {
            *v = *v as f32 as f64;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_store(model: ModelKind, rng: &mut StdRng) -> EmbeddingStore {
        let mut s = EmbeddingStore::zeros(model, 4, 2, 3);
        let (ents, vecs, mats) = s.params_mut();
        for v in ents
            .iter_mut()
            .chain(vecs.iter_mut())
            .chain(mats.iter_mut())
        {
            *v = rng.random_range(-1.0..1.0);
        }
        s
    }

    #[test]
    fn save_load_round_trips_quantized_values() {
        let mut rng = StdRng::seed_from_u64(1);
        for model in [ModelKind::TransE, ModelKind::TransR, ModelKind::Rescal] {
            let store = random_store(model, &mut rng);
            let f = tempfile::NamedTempFile::new().unwrap();
            store.save(f.path()).unwrap();
            let loaded = EmbeddingStore::load(f.path()).unwrap();
            assert_eq!(loaded, store.quantized());
            assert_eq!(loaded.model(), model);
        }
    }

    #[test]
    fn header_is_as_documented() {
        let store = EmbeddingStore::zeros(ModelKind::TransR, 2, 1, 2);
        let f = tempfile::NamedTempFile::new().unwrap();
        store.save(f.path()).unwrap();
        let bytes = std::fs::read(f.path()).unwrap();
        assert_eq!(&bytes[0..4], b"KGEB");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1); // TransR tag
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 2);
        // header + entities (2*2) + rel vec (2) + rel mat (4) f32s
        assert_eq!(bytes.len(), 24 + 4 * (4 + 2 + 4));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), b"NOPE").unwrap();
        assert!(matches!(
            EmbeddingStore::load(f.path()),
            Err(CheckpointError::BadMagic) | Err(CheckpointError::Io(_))
        ));

        let store = EmbeddingStore::zeros(ModelKind::TransE, 2, 1, 2);
        let f = tempfile::NamedTempFile::new().unwrap();
        store.save(f.path()).unwrap();
        let mut bytes = std::fs::read(f.path()).unwrap();
        bytes.push(0);
        std::fs::write(f.path(), &bytes).unwrap();
        assert!(matches!(
            EmbeddingStore::load(f.path()),
            Err(CheckpointError::TrailingData)
        ));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let store = EmbeddingStore::zeros(ModelKind::TransE, 2, 1, 2);
        let f = tempfile::NamedTempFile::new().unwrap();
        store.save(f.path()).unwrap();
        let mut bytes = std::fs::read(f.path()).unwrap();
        bytes[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(f.path(), &bytes).unwrap();
        assert!(matches!(
            EmbeddingStore::load(f.path()),
            Err(CheckpointError::NonFinite)
        ));
    }
}
