//! Output bookkeeping: everything a command writes is removed again unless
//! the command finishes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Default)]
pub struct ArtifactGuard {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
    committed: bool,
}

impl ArtifactGuard {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates `dir` (and parents); it is removed on failure only if it did
    /// not exist before.
    pub fn create_dir(&mut self, dir: &Path) -> io::Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        fs::create_dir_all(dir)?;
        // deepest first, so removal can go in order
        self.dirs.extend(missing);
        Ok(())
    }

    /// Writes `bytes` to `path` through a temporary sibling and a rename.
    pub fn write(&mut self, path: &Path, bytes: impl AsRef<[u8]>) -> io::Result<()> {
        self.files.push(path.to_path_buf());
        write_atomic(path, bytes.as_ref())
    }

    /// Registers a file written by other means.
    pub fn track(&mut self, path: &Path) {
        self.files.push(path.to_path_buf());
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for ArtifactGuard {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        for d in &self.dirs {
            let _ = fs::remove_dir(d);
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}
