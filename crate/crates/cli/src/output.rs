//! Writes a command's files into the output directory, all or nothing.

use std::fs;
use std::path::{Path, PathBuf};

use eegbi::{Error, Result};

/// Removes everything it wrote (and the directory, if it created it) unless
/// [`Staged::keep`] is called.
pub struct Staged {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    keep: bool,
}

impl Staged {
    pub fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        Ok(Staged {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
            keep: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, contents).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(path)
    }

    pub fn write_all(&mut self, files: &[(String, String)]) -> Result<()> {
        for (name, contents) in files {
            self.write(name, contents)?;
        }
        Ok(())
    }

    pub fn keep(mut self) {
        self.keep = true;
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        if self.keep {
            return;
        }
        if self.created_dir {
            let _ = fs::remove_dir_all(&self.dir);
        } else {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}
