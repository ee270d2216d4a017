use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// Raw payloads stored under `objects/<sha256>.json`, with `index/<CVE id>`
/// naming the object. Both files are written atomically, object first, so a
/// reader never sees an index entry without its payload.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().expect("cache paths have a parent");
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl Cache {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Cache> {
        let root = root.into();
        fs::create_dir_all(root.join("objects"))?;
        fs::create_dir_all(root.join("index"))?;
        Ok(Cache { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn index_path(&self, cve: &str) -> io::Result<PathBuf> {
        // ids are validated upstream; refuse anything path-like regardless
        if cve.is_empty() || !cve.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-') {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "bad cache key"));
        }
        Ok(self.root.join("index").join(cve))
    }

    fn object_path(&self, digest: &str) -> PathBuf {
        self.root.join("objects").join(format!("{digest}.json"))
    }

    pub fn get(&self, cve: &str) -> io::Result<Option<String>> {
        let digest = match fs::read_to_string(self.index_path(cve)?) {
            Ok(d) => d.trim().to_string(),
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let body = fs::read(self.object_path(&digest))?;
        // a damaged object is treated as a miss rather than trusted
        if hex::encode(Sha256::digest(&body)) != digest {
            return Ok(None);
        }
        String::from_utf8(body)
            .map(Some)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    /// Stores `body` and returns its digest.
    pub fn put(&self, cve: &str, body: &str) -> io::Result<String> {
        let index = self.index_path(cve)?;
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        let object = self.object_path(&digest);
        if !object.exists() {
            atomic_write(&object, body.as_bytes())?;
        }
        atomic_write(&index, digest.as_bytes())?;
        Ok(digest)
    }

    /// Number of indexed ids.
    pub fn len(&self) -> io::Result<usize> {
        Ok(fs::read_dir(self.root.join("index"))?.count())
    }

    pub fn is_empty(&self) -> io::Result<bool> {
        Ok(self.len()? == 0)
    }
}
