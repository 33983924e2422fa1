//! Content-addressed on-disk cache for meshes and basis fields.
//!
//! Each entry is `<key>.<ext>` plus `<key>.<ext>.sha256` holding the digest of the
//! entry's bytes. Entries whose digest does not match are recomputed with a warning.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{generate_mesh, GeometrySpec, Mesh};

const FIELD_MAGIC: &[u8; 8] = b"HCFIELD1";

/// Hex SHA-256 of the concatenation of `parts`, each prefixed by its length.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Whether a lookup was served from disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
    /// An entry existed but failed its integrity check and was rebuilt.
    Rebuilt,
    Disabled,
}

/// Cache rooted at a directory, or a pass-through when no directory is configured.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir: dir.map(Path::to_path_buf) })
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn is_enabled(&self) -> bool {
        self.dir.is_some()
    }

    /// Mesh generated from `spec`, keyed by the spec's JSON form.
    pub fn mesh(&self, spec: &GeometrySpec) -> Result<(Mesh, CacheStatus)> {
        let key = digest(&[b"mesh", serde_json::to_vec(spec).expect("spec serializes").as_slice()]);
        self.entry(&key, "json", || Ok(generate_mesh(spec)?.to_json().into_bytes()), |bytes| {
            let text = std::str::from_utf8(bytes).map_err(|e| Error::validation(e.to_string()))?;
            Mesh::from_json(text)
        })
    }

    /// Fields stored under `key`, computed by `compute` on a miss.
    pub fn fields<F>(&self, key: &str, compute: F) -> Result<(Vec<Vec<f64>>, CacheStatus)>
    where
        F: FnOnce() -> Result<Vec<Vec<f64>>>,
    {
        self.entry(key, "bin", || compute().map(|f| encode_fields(&f)), decode_fields)
    }

    /// Stored fields under `key`, if present and intact.
    pub fn get_fields(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        match self.get(key, "bin")? {
            Some(bytes) => match decode_fields(&bytes) {
                Ok(f) => Ok(Some(f)),
                Err(e) => {
                    eprintln!("warning: cache entry {key} unreadable ({e}); recomputing");
                    Ok(None)
                }
            },
            None => Ok(None),
        }
    }

    pub fn put_fields(&self, key: &str, fields: &[Vec<f64>]) -> Result<()> {
        self.put(key, "bin", &encode_fields(fields))
    }

    /// Drops the entry under `key`, e.g. after its content failed a semantic check.
    pub fn evict_fields(&self, key: &str) -> Result<()> {
        if let Some(dir) = &self.dir {
            for path in [dir.join(format!("{key}.bin")), dir.join(format!("{key}.bin.sha256"))] {
                if path.exists() {
                    fs::remove_file(path)?;
                }
            }
        }
        Ok(())
    }

    /// Entry bytes if the entry exists and matches its recorded digest.
    fn get(&self, key: &str, ext: &str) -> Result<Option<Vec<u8>>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let path = dir.join(format!("{key}.{ext}"));
        if !path.exists() {
            return Ok(None);
        }
        let bytes = fs::read(&path)?;
        let stored = fs::read_to_string(dir.join(format!("{key}.{ext}.sha256"))).unwrap_or_default();
        if stored.trim() == digest(&[&bytes]) {
            Ok(Some(bytes))
        } else {
            eprintln!("warning: cache entry {} failed its hash check; recomputing", path.display());
            Ok(None)
        }
    }

    fn put(&self, key: &str, ext: &str, bytes: &[u8]) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        write_atomic(&dir.join(format!("{key}.{ext}")), bytes)?;
        write_atomic(&dir.join(format!("{key}.{ext}.sha256")), format!("{}\n", digest(&[bytes])).as_bytes())
    }

    fn entry<T, C, D>(&self, key: &str, ext: &str, compute: C, decode: D) -> Result<(T, CacheStatus)>
    where
        C: FnOnce() -> Result<Vec<u8>>,
        D: Fn(&[u8]) -> Result<T>,
    {
        if self.dir.is_none() {
            return Ok((decode(&compute()?)?, CacheStatus::Disabled));
        }
        let existed = self.dir.as_ref().is_some_and(|d| d.join(format!("{key}.{ext}")).exists());
        if let Some(bytes) = self.get(key, ext)? {
            match decode(&bytes) {
                Ok(value) => return Ok((value, CacheStatus::Hit)),
                Err(e) => eprintln!("warning: cache entry {key} unreadable ({e}); recomputing"),
            }
        }
        let bytes = compute()?;
        let value = decode(&bytes)?;
        self.put(key, ext, &bytes)?;
        Ok((value, if existed { CacheStatus::Rebuilt } else { CacheStatus::Miss }))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn encode_fields(fields: &[Vec<f64>]) -> Vec<u8> {
    let len = fields.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(24 + 8 * fields.len() * len);
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&(fields.len() as u64).to_le_bytes());
    out.extend_from_slice(&(len as u64).to_le_bytes());
    for f in fields {
        for v in f {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn decode_fields(bytes: &[u8]) -> Result<Vec<Vec<f64>>> {
    let bad = || Error::validation("malformed field cache entry");
    if bytes.len() < 24 || &bytes[..8] != FIELD_MAGIC {
        return Err(bad());
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().map_err(|_| bad())?) as usize;
    let len = u64::from_le_bytes(bytes[16..24].try_into().map_err(|_| bad())?) as usize;
    let body = &bytes[24..];
    if count.checked_mul(len).and_then(|n| n.checked_mul(8)) != Some(body.len()) {
        return Err(bad());
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight")))
        .collect();
    Ok(if len == 0 { vec![Vec::new(); count] } else { values.chunks(len).map(<[f64]>::to_vec).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;

    #[test]
    fn fields_round_trip_and_hit() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(Some(dir.path())).unwrap();
        let data = vec![vec![1.0, -2.5, f64::MIN_POSITIVE], vec![0.0, 3.0, 1e300]];
        let (a, s1) = cache.fields("k", || Ok(data.clone())).unwrap();
        let (b, s2) = cache.fields("k", || panic!("must not recompute")).unwrap();
        assert_eq!((s1, s2), (CacheStatus::Miss, CacheStatus::Hit));
        assert_eq!(a, data);
        assert_eq!(b, data);
    }

    #[test]
    fn corrupted_entry_is_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(Some(dir.path())).unwrap();
        cache.fields("k", || Ok(vec![vec![1.0]])).unwrap();
        let path = dir.path().join("k.bin");
        let mut bytes = fs::read(&path).unwrap();
        *bytes.last_mut().unwrap() ^= 1;
        fs::write(&path, bytes).unwrap();
        let (v, status) = cache.fields("k", || Ok(vec![vec![2.0]])).unwrap();
        assert_eq!(status, CacheStatus::Rebuilt);
        assert_eq!(v, vec![vec![2.0]]);
    }

    #[test]
    fn mesh_entries_follow_the_geometry() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(Some(dir.path())).unwrap();
        let spec = GeometrySpec::new(Shape::rectangle(0.0, 0.0, 1.0, 1.0), vec![Shape::disk(0.5, 0.5, 0.2)], 0.1);
        let (m1, s1) = cache.mesh(&spec).unwrap();
        let (m2, s2) = cache.mesh(&spec).unwrap();
        assert_eq!((s1, s2), (CacheStatus::Miss, CacheStatus::Hit));
        assert_eq!(m1.to_json(), m2.to_json());
        let moved = GeometrySpec::new(Shape::rectangle(0.0, 0.0, 1.0, 1.0), vec![Shape::disk(0.5, 0.5, 0.25)], 0.1);
        assert_eq!(cache.mesh(&moved).unwrap().1, CacheStatus::Miss);
    }

    #[test]
    fn disabled_cache_always_computes() {
        let cache = Cache::disabled();
        let (v, s) = cache.fields("k", || Ok(vec![vec![1.0]])).unwrap();
        assert_eq!((v, s), (vec![vec![1.0]], CacheStatus::Disabled));
    }
}
