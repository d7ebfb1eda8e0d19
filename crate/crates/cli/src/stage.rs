//! Output directories that appear only once a subcommand succeeds.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Files are written to `<outdir>/.<name>.partial` and moved to
/// `<outdir>/<name>` by [`Stage::commit`]. Dropping an uncommitted stage
/// deletes the partial directory.
pub struct Stage {
    tmp: PathBuf,
    dest: PathBuf,
    committed: bool,
}

impl Stage {
    pub fn new(outdir: &Path, name: &str) -> Result<Self> {
        let tmp = outdir.join(format!(".{name}.partial"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).with_context(|| format!("removing stale {}", tmp.display()))?;
        }
        fs::create_dir_all(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        Ok(Self {
            tmp,
            dest: outdir.join(name),
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.tmp
    }

    /// Creates `file` in the stage and hands a buffered writer to `fill`.
    pub fn write<F>(&self, file: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.tmp.join(file);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        fill(&mut w).with_context(|| format!("writing {file}"))?;
        w.flush().with_context(|| format!("writing {file}"))?;
        Ok(())
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn json<T: Serialize>(&self, file: &str, value: &T) -> Result<()> {
        self.write(file, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn commit(mut self) -> Result<PathBuf> {
        if self.dest.exists() {
            fs::remove_dir_all(&self.dest).with_context(|| format!("replacing {}", self.dest.display()))?;
        }
        fs::rename(&self.tmp, &self.dest).with_context(|| format!("moving output to {}", self.dest.display()))?;
        self.committed = true;
        Ok(self.dest.clone())
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}
