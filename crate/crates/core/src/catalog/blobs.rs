use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

/// Content-addressed file store: `<root>/<first two hex digits>/<sha256>`.
pub(super) struct BlobStore {
    root: PathBuf,
    tmp_counter: AtomicU64,
}

pub(super) struct Stored {
    pub hash: String,
    /// False when identical content was already present.
    pub created: bool,
}

impl BlobStore {
    pub(super) fn open(root: PathBuf) -> io::Result<BlobStore> {
        fs::create_dir_all(root.join("tmp"))?;
        // leftovers from writes that never reached the rename
        for entry in fs::read_dir(root.join("tmp"))? {
            let _ = fs::remove_file(entry?.path());
        }
        Ok(BlobStore {
            root,
            tmp_counter: AtomicU64::new(0),
        })
    }

    pub(super) fn path_of(&self, hash: &str) -> PathBuf {
        self.root.join(&hash[..2]).join(hash)
    }

    pub(super) fn put(&self, bytes: &[u8]) -> io::Result<Stored> {
        let hash = hex::encode(Sha256::digest(bytes));
        let path = self.path_of(&hash);
        if path.exists() {
            return Ok(Stored { hash, created: false });
        }
        fs::create_dir_all(path.parent().expect("blob path has a parent"))?;
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        let tmp = self.root.join("tmp").join(format!("{}-{n}", std::process::id()));
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        drop(file);
        fs::rename(&tmp, &path)?;
        Ok(Stored { hash, created: true })
    }

    pub(super) fn get(&self, hash: &str) -> io::Result<Vec<u8>> {
        fs::read(self.path_of(hash))
    }

    pub(super) fn remove(&self, hash: &str) {
        if let Err(e) = fs::remove_file(self.path_of(hash)) {
            log::warn!("could not remove blob {hash}: {e}");
        }
    }
}
