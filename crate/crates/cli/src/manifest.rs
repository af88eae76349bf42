//! Run manifests: the resolved configuration plus provenance, written next
//! to every output file. A manifest is itself a loadable config file, so
//! rerunning from it reproduces the outputs byte for byte (wall-times and
//! other `meta.` keys are ignored on load).

use crate::config::ResolvedConfig;
use loopda_core::error::Result;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: String,
    pub started_utc: String,
    pub finished_utc: String,
    pub outputs: Vec<(String, PathBuf)>,
}

impl Manifest {
    pub fn begin(command: &str) -> Self {
        Manifest {
            command: command.to_string(),
            started_utc: now_utc(),
            finished_utc: String::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_output(&mut self, label: &str, path: &Path) {
        self.outputs.push((label.to_string(), path.to_path_buf()));
    }

    /// Finish and write `manifest.txt` into `out_dir`.
    pub fn write(mut self, config: &ResolvedConfig, out_dir: &Path) -> Result<PathBuf> {
        self.finished_utc = now_utc();
        let mut text = String::new();
        text.push_str("# loopda run manifest; rerunnable via --config\n");
        text.push_str(&format!("meta.tool_version = {}\n", env!("CARGO_PKG_VERSION")));
        text.push_str(&format!("meta.command = {}\n", self.command));
        text.push_str(&format!("meta.started_utc = {}\n", self.started_utc));
        text.push_str(&format!("meta.finished_utc = {}\n", self.finished_utc));
        text.push_str(&format!("meta.config_fingerprint = {:016x}\n", config.fingerprint()));
        for (label, path) in &self.outputs {
            text.push_str(&format!("output.{label} = {}\n", path.display()));
        }
        for (key, value) in config.entries() {
            text.push_str(&format!("{key} = {value}\n"));
        }
        let path = out_dir.join("manifest.txt");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

fn now_utc() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;

    #[test]
    fn manifest_round_trips_as_config() {
        let dir = tempfile::tempdir().unwrap();
        let config = ResolvedConfig::from_text("seed = 42\nrun.n_windows = 25\nrun.spin_up_windows = 5\n", &Overrides::default()).unwrap();
        let mut manifest = Manifest::begin("run");
        manifest.add_output("result", &dir.path().join("result.csv"));
        let path = manifest.write(&config, dir.path()).unwrap();

        let text = std::fs::read_to_string(path).unwrap();
        let reloaded = ResolvedConfig::from_text(&text, &Overrides::default()).unwrap();
        assert_eq!(reloaded.get("seed"), "42");
        assert_eq!(reloaded.get("run.n_windows"), "25");
        assert_eq!(reloaded.fingerprint(), config.fingerprint());
    }
}
