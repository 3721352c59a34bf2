use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn instance_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Rows as CSV with a leading `# instance-hash` comment.
pub fn csv_string<R: Serialize>(hash: &str, rows: &[R]) -> Result<String> {
    let mut buf = format!("# instance-hash: sha256:{hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf)?)
}

/// Where results go: a directory, or stdout for the primary one.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
        })
    }

    /// Writes `name` into the output directory, or prints it when it is
    /// the primary result and there is no directory.
    pub fn emit(&self, name: &str, body: &str, primary: bool) -> Result<()> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                log::info!("wrote {}", path.display());
            }
            None if primary => {
                let mut out = std::io::stdout().lock();
                out.write_all(body.as_bytes())?;
                if !body.ends_with('\n') {
                    out.write_all(b"\n")?;
                }
            }
            None => {}
        }
        Ok(())
    }

    pub fn emit_json<T: Serialize>(&self, name: &str, value: &T, primary: bool) -> Result<()> {
        self.emit(name, &serde_json::to_string_pretty(value)?, primary)
    }
}
