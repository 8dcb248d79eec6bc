//! Artifact writing. CSV files start with a `# config_sha256=` line, JSON
//! files carry a `config_hash` key, and every file is listed in the summary
//! with its content digest.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use sdl_core::field::Field;
use sdl_core::semigroup::{write_kernel, KernelSlice};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
}

pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    records: Mutex<Vec<ArtifactRecord>>,
}

fn digest(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl Artifacts {
    pub fn new(dir: &Path, hash: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), hash: hash.to_string(), records: Mutex::new(Vec::new()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn record(&self, name: &str) -> Result<()> {
        let sha256 = digest(&self.dir.join(name))?;
        let mut r = self.records.lock().expect("artifact lock");
        r.retain(|a| a.path != name);
        r.push(ArtifactRecord { path: name.to_string(), sha256 });
        Ok(())
    }

    /// Written verbatim: the resolved scenario, whose digest is the hash.
    pub fn raw(&self, name: &str, body: &str) -> Result<String> {
        fs::write(self.dir.join(name), body)?;
        self.record(name)?;
        Ok(name.to_string())
    }

    pub fn csv(&self, name: &str, body: &str) -> Result<String> {
        fs::write(self.dir.join(name), format!("# config_sha256={}\n{body}", self.hash))?;
        self.record(name)?;
        Ok(name.to_string())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<String> {
        let mut v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(m) = &mut v {
            m.insert("config_hash".into(), self.hash.clone().into());
        }
        fs::write(self.dir.join(name), serde_json::to_string_pretty(&v)? + "\n")?;
        self.record(name)?;
        Ok(name.to_string())
    }

    /// Binary kernel dump plus its header and metadata sidecars.
    pub fn kernel(&self, name: &str, k: &KernelSlice) -> Result<Vec<String>> {
        let bin = self.dir.join(name);
        write_kernel(&bin, k)?;
        let side = [
            sdl_core::fieldio::sidecar_path(&bin),
            sdl_core::semigroup::kernel_meta_path(&bin),
        ];
        let mut names = vec![name.to_string()];
        for p in side {
            names.push(p.file_name().expect("sidecar name").to_string_lossy().into_owned());
        }
        for n in &names {
            self.record(n)?;
        }
        Ok(names)
    }

    pub fn field_csv(&self, name: &str, f: &Field) -> Result<String> {
        let mut s = String::from("site,value\n");
        for (i, z) in f.values().iter().enumerate() {
            s.push_str(&format!("{i},{}\n", z.re));
        }
        self.csv(name, &s)
    }

    pub fn records(&self) -> Vec<ArtifactRecord> {
        let mut r = self.records.lock().expect("artifact lock").clone();
        r.sort_by(|a, b| a.path.cmp(&b.path));
        r
    }
}

/// Shortest round-trip rendering; empty for `None`.
pub fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
