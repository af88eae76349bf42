//! Flat key-value configuration with dotted section keys.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown keys are
//! rejected with their line number. Precedence is command-line overrides
//! over file values over defaults, resolved before the manifest is
//! captured, so a manifest is itself a complete, replayable config file.

use loopda_core::assimilation::InflationConfig;
use loopda_core::error::{Error, Result};
use loopda_core::experiments::{FilterConfig, FilterKind, ObsConfig, TwinExperimentConfig};
use loopda_core::localization::{LocalityScheme, LoopGeometry, RingTestModel};
use loopda_core::models::{
    EhrhardMullerParams, IntegratorConfig, Lorenz63Params, Model, Scheme,
};
use loopda_core::observations::ObservationOperatorSpec;
use std::collections::BTreeMap;
use std::path::Path;

/// Every key the loader understands, with its default value (empty string
/// means unset). Keys under `meta.` and `output.` are manifest metadata and
/// are ignored on load.
const KNOWN_KEYS: &[(&str, &str)] = &[
    ("model.kind", "lorenz63"),
    ("model.sigma", "10"),
    ("model.rho", "28"),
    ("model.beta", "2.6666666666666665"),
    ("model.alpha", "10"),
    ("model.beta_em", "28"),
    ("model.k_wall", "0"),
    ("model.n_sites", "4"),
    ("integrator.scheme", "rk2"),
    ("integrator.dt", "0.01"),
    ("integrator.time_scale_seconds", "1500"),
    ("filter.kind", "etkf"),
    ("filter.ensemble_size", "10"),
    ("inflation.delta", "0"),
    ("inflation.mu", "0"),
    ("locality.kind", "radius"),
    ("locality.r_meters", "0.5"),
    ("locality.r_slice", "1"),
    ("window.model_units", "0.25"),
    ("window.seconds", ""),
    ("run.n_windows", "600"),
    ("run.spin_up_windows", "100"),
    ("obs.observed_indices", "0"),
    ("obs.noise_variance", "0.05"),
    ("init.error_sd", "0.1"),
    ("truth.spin_up", "10"),
    ("scored.variables", "0"),
    ("record.spread", "false"),
    ("seed", "0"),
    ("geometry.enabled", "false"),
    ("geometry.n_slices", "8"),
    ("geometry.cells_per_slice", "1"),
    ("geometry.loop_radius", "1.0"),
    ("geometry.tube_radius", "0.05"),
    ("sweep.kind", "windows"),
    ("sweep.windows.model_units", ""),
    ("sweep.windows.seconds", ""),
    ("sweep.filters", "etkf"),
    ("sweep.deltas", "0,0.1,0.2,0.5,1.0"),
    ("sweep.mus", "0,0.1,0.2,0.5,1.0"),
    ("sweep.counts", "1,2,3"),
    ("sweep.seeds", ""),
    ("sweep.n_seeds", "10"),
    ("climatology.spin_up", "10"),
    ("climatology.duration", "1000"),
];

/// Resolved key-value map plus the typed views built from it.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    values: BTreeMap<String, String>,
}

/// Typed command-line overrides; `None` leaves the file/default value.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Paper-scale sweep settings: 100 seeds, 1000 windows, 500 spin-up.
    pub full_scale: bool,
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse { line: idx + 1, message: "empty key".to_string() });
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Parse { line: idx + 1, message: format!("duplicate key '{key}'") });
        }
    }
    Ok(map)
}

impl ResolvedConfig {
    /// Defaults alone.
    pub fn defaults() -> Self {
        let values = KNOWN_KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        ResolvedConfig { values }
    }

    /// Apply a parsed file over the defaults, then the overrides.
    pub fn from_text(text: &str, overrides: &Overrides) -> Result<Self> {
        let mut resolved = Self::defaults();
        let parsed = parse_key_values(text)?;
        for (key, value) in parsed {
            if key.starts_with("meta.") || key.starts_with("output.") {
                continue;
            }
            if !resolved.values.contains_key(&key) {
                let line = text
                    .lines()
                    .position(|l| l.trim_start().starts_with(&key))
                    .map(|i| i + 1)
                    .unwrap_or(0);
                return Err(Error::Parse { line, message: format!("unknown key '{key}'") });
            }
            resolved.values.insert(key, value);
        }
        resolved.apply_overrides(overrides);
        Ok(resolved)
    }

    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config file {}: {e}", path.display())))?;
        Self::from_text(&text, overrides)
    }

    fn apply_overrides(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.values.insert("seed".into(), seed.to_string());
        }
        if overrides.full_scale {
            self.values.insert("run.n_windows".into(), "1000".into());
            self.values.insert("run.spin_up_windows".into(), "500".into());
            self.values.insert("sweep.n_seeds".into(), "100".into());
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(|s| s.as_str()).unwrap_or("")
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn f64_of(&self, key: &str) -> Result<f64> {
        self.get(key)
            .parse()
            .map_err(|_| Error::invalid(format!("key '{key}': expected a number, got '{}'", self.get(key))))
    }

    fn usize_of(&self, key: &str) -> Result<usize> {
        self.get(key)
            .parse()
            .map_err(|_| Error::invalid(format!("key '{key}': expected an integer, got '{}'", self.get(key))))
    }

    fn u64_of(&self, key: &str) -> Result<u64> {
        self.get(key)
            .parse()
            .map_err(|_| Error::invalid(format!("key '{key}': expected an integer, got '{}'", self.get(key))))
    }

    fn bool_of(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::invalid(format!("key '{key}': expected true/false, got '{other}'"))),
        }
    }

    fn list_f64(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|tok| {
                tok.trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("key '{key}': bad number '{}'", tok.trim())))
            })
            .collect()
    }

    fn list_usize(&self, key: &str) -> Result<Vec<usize>> {
        let raw = self.get(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|tok| {
                tok.trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("key '{key}': bad integer '{}'", tok.trim())))
            })
            .collect()
    }

    pub fn model(&self) -> Result<Model> {
        match self.get("model.kind") {
            "lorenz63" => Ok(Model::Lorenz63(Lorenz63Params {
                sigma: self.f64_of("model.sigma")?,
                rho: self.f64_of("model.rho")?,
                beta: self.f64_of("model.beta")?,
            })),
            "ehrhard_muller" => Ok(Model::EhrhardMuller(EhrhardMullerParams {
                alpha: self.f64_of("model.alpha")?,
                beta_em: self.f64_of("model.beta_em")?,
                k_wall: self.f64_of("model.k_wall")?,
            })),
            "ring" => {
                let n = self.usize_of("model.n_sites")?;
                let params = Lorenz63Params {
                    sigma: self.f64_of("model.sigma")?,
                    rho: self.f64_of("model.rho")?,
                    beta: self.f64_of("model.beta")?,
                };
                Ok(Model::Ring(vec![params; n]))
            }
            other => Err(Error::invalid(format!("unknown model.kind '{other}'"))),
        }
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        let scheme = match self.get("integrator.scheme") {
            "rk2" => Scheme::Rk2,
            "euler" => Scheme::Euler,
            other => return Err(Error::invalid(format!("unknown integrator.scheme '{other}'"))),
        };
        Ok(IntegratorConfig {
            scheme,
            dt: self.f64_of("integrator.dt")?,
            time_scale_seconds: self.f64_of("integrator.time_scale_seconds")?,
        })
    }

    /// Window length in model units; `window.seconds` wins when set.
    pub fn window_model_units(&self) -> Result<f64> {
        let integrator = self.integrator()?;
        if !self.get("window.seconds").is_empty() {
            return Ok(integrator.seconds_to_model_time(self.f64_of("window.seconds")?));
        }
        self.f64_of("window.model_units")
    }

    pub fn geometry(&self) -> Result<Option<LoopGeometry>> {
        let model = self.model()?;
        if let Model::Ring(sites) = &model {
            let ring = RingTestModel::evenly_spaced(sites.len(), self.f64_of("geometry.loop_radius")?)?;
            return Ok(Some(ring.geometry()?));
        }
        if !self.bool_of("geometry.enabled")? {
            return Ok(None);
        }
        Ok(Some(LoopGeometry::ring(
            self.usize_of("geometry.n_slices")?,
            self.usize_of("geometry.cells_per_slice")?,
            self.f64_of("geometry.loop_radius")?,
            self.f64_of("geometry.tube_radius")?,
            1,
        )?))
    }

    pub fn filter(&self, kind_name: &str) -> Result<FilterConfig> {
        let kind = FilterKind::parse(kind_name)?;
        let locality = match self.get("locality.kind") {
            "radius" => Some(LocalityScheme::Radius { r_meters: self.f64_of("locality.r_meters")? }),
            "slice" => Some(LocalityScheme::Slice { r_slice: self.usize_of("locality.r_slice")? }),
            other => return Err(Error::invalid(format!("unknown locality.kind '{other}'"))),
        };
        Ok(FilterConfig {
            kind,
            ensemble_size: self.usize_of("filter.ensemble_size")?,
            inflation: InflationConfig {
                delta: self.f64_of("inflation.delta")?,
                mu: self.f64_of("inflation.mu")?,
            },
            locality,
        })
    }

    pub fn twin_experiment(&self) -> Result<TwinExperimentConfig> {
        let model = self.model()?;
        let config = TwinExperimentConfig {
            model,
            integrator: self.integrator()?,
            filter: self.filter(self.get("filter.kind"))?,
            window: self.window_model_units()?,
            n_windows: self.usize_of("run.n_windows")?,
            spin_up_windows: self.usize_of("run.spin_up_windows")?,
            obs: ObsConfig {
                operator: ObservationOperatorSpec::SelectIndices(self.list_usize("obs.observed_indices")?),
                noise_variance: self.f64_of("obs.noise_variance")?,
            },
            initial_error_sd: self.f64_of("init.error_sd")?,
            truth_spin_up: self.f64_of("truth.spin_up")?,
            scored_variables: self.list_usize("scored.variables")?,
            geometry: self.geometry()?,
            record_spread: self.bool_of("record.spread")?,
            seed: self.u64_of("seed")?,
        };
        config.validate()?;
        Ok(config)
    }

    /// Seed list for sweeps: explicit `sweep.seeds` or `sweep.n_seeds`
    /// consecutive seeds starting at `seed`.
    pub fn sweep_seeds(&self) -> Result<Vec<u64>> {
        let explicit = self.get("sweep.seeds");
        if !explicit.is_empty() {
            return explicit
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::invalid(format!("sweep.seeds: bad integer '{}'", t.trim())))
                })
                .collect();
        }
        let base = self.u64_of("seed")?;
        let n = self.usize_of("sweep.n_seeds")?;
        Ok((0..n as u64).map(|i| base + i).collect())
    }

    /// Sweep windows in model units; seconds take precedence.
    pub fn sweep_windows(&self) -> Result<Vec<f64>> {
        let integrator = self.integrator()?;
        let seconds = self.list_f64("sweep.windows.seconds")?;
        if !seconds.is_empty() {
            return Ok(seconds.iter().map(|&s| integrator.seconds_to_model_time(s)).collect());
        }
        let units = self.list_f64("sweep.windows.model_units")?;
        if !units.is_empty() {
            return Ok(units);
        }
        Ok(vec![self.window_model_units()?])
    }

    pub fn sweep_filters(&self) -> Result<Vec<FilterConfig>> {
        self.get("sweep.filters")
            .split(',')
            .map(|name| self.filter(name.trim()))
            .collect()
    }

    pub fn sweep_deltas(&self) -> Result<Vec<f64>> {
        self.list_f64("sweep.deltas")
    }

    pub fn sweep_mus(&self) -> Result<Vec<f64>> {
        self.list_f64("sweep.mus")
    }

    pub fn sweep_counts(&self) -> Result<Vec<usize>> {
        self.list_usize("sweep.counts")
    }

    /// FNV-1a of the resolved entries; guards sweep resume against mixing
    /// cell files from different configurations.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for (k, v) in self.entries() {
            if k == "seed" || k.starts_with("sweep.seeds") {
                // Seeds are recorded per cell; the fingerprint covers the
                // protocol itself.
                continue;
            }
            for byte in k.bytes().chain([b'='].into_iter()).chain(v.bytes()).chain([b'\n'].into_iter()) {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }
}
