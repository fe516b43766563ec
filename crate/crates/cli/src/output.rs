//! Output files of one command. Everything written is removed again unless
//! the command finishes and calls [`Outputs::commit`].

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;

pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// Renders into memory through `f`, then writes `name`.
    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> anyhow::Result<PathBuf> {
        let mut buf = Vec::new();
        f(&mut buf).with_context(|| format!("rendering {name}"))?;
        self.write(name, &buf)
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            if fs::remove_file(p).is_ok() {
                log::info!("removed partial output {}", p.display());
            }
        }
    }
}
