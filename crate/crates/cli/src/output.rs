use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Record written next to every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Map<String, Value>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub argv: Vec<String>,
}

/// Collects files written under the output directory for one command.
pub struct Run {
    dir: PathBuf,
    command: String,
    params: Map<String, Value>,
    outputs: Vec<String>,
    seed: Option<u64>,
}

impl Run {
    pub fn new(dir: &Path, command: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            params: Map::new(),
            outputs: Vec::new(),
            seed: None,
        })
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.params.insert(key.to_string(), v);
    }

    pub fn seed(&mut self, seed: Option<u64>) {
        self.seed = seed;
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes `<stem>.manifest.json` and returns its path.
    pub fn finish(self, stem: &str) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            command: self.command,
            params: self.params,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            outputs: self.outputs,
            seed: self.seed,
            argv: std::env::args().collect(),
        };
        let path = self.dir.join(format!("{stem}.manifest.json"));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// File-name-safe form of a parameter such as `7/2` or `rotation:1.0:4`.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '.' | '-' => c,
            _ => '_',
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("7/2"), "7_2");
        assert_eq!(slug("rotation:1.0472:4"), "rotation_1.0472_4");
    }

    #[test]
    fn manifest_lists_outputs() {
        let tmp = std::env::temp_dir().join(format!("bn-ergodic-manifest-{}", std::process::id()));
        let mut run = Run::new(&tmp, "demo").unwrap();
        run.param("n", 3);
        run.seed(Some(9));
        run.write("a.csv", "x\n").unwrap();
        let path = run.finish("a").unwrap();
        let m: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(m["outputs"][0], "a.csv");
        assert_eq!(m["seed"], 9);
        assert_eq!(m["params"]["n"], 3);
        fs::remove_dir_all(tmp).unwrap();
    }
}
