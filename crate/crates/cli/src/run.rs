use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use plateflow::modal::{ModalState, ModalSystem};
use plateflow::spectrum::{find_spectrum, SpectrumTable};
use plateflow::stability::random_battery;
use plateflow::stationary::{build_unimodal, project_unimodal};
use plateflow::{ModeKey, Parity};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Experiment, InitialData, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::ops;

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const MANIFEST_FILE: &str = "manifest.json";

/// What the command line asked for, before merging with a config file.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Relative tolerance; the absolute one is set to 1e-2 of it.
    pub tol: Option<f64>,
    pub experiment: Option<Experiment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub m_max: u32,
    pub per_m: usize,
    pub modes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: String,
    pub seed: u64,
    /// Digest over every spectrum table the run computed.
    pub spectrum_hash: Option<String>,
    pub spectra: Vec<SpectrumRecord>,
    pub scenario: ScenarioConfig,
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
    pub summary: serde_json::Value,
}

/// Merges the config file, subcommand flags and global flags into a
/// fully resolved scenario.
pub fn prepare(inv: &Invocation) -> Result<ScenarioConfig> {
    let mut cfg = match &inv.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    match (&mut cfg.experiment, &inv.experiment) {
        (Some(e), Some(flags)) => e.overlay(flags)?,
        (None, Some(flags)) => cfg.experiment = Some(flags.clone()),
        (Some(_), None) => {}
        (None, None) => return Err(CliError::schema("experiment", "no experiment given in config or on the command line")),
    }
    if let Some(s) = inv.seed {
        cfg.seed = s;
    }
    if let Some(t) = inv.tol {
        if !(t > 0.0) {
            return Err(CliError::schema("tol", "must be positive"));
        }
        cfg.truncation.tol.rtol = t;
        cfg.truncation.tol.atol = 1e-2 * t;
    }
    if let Some(e) = cfg.experiment.as_mut() {
        e.resolve();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the scenario into `out`, writing the resolved scenario, the
/// artifacts and finally the manifest.
pub fn execute(cfg: &ScenarioConfig, out: &Path, argv: Vec<String>) -> Result<RunManifest> {
    let exp = cfg
        .experiment
        .as_ref()
        .ok_or_else(|| CliError::schema("experiment", "missing"))?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let scen = out.join(SCENARIO_FILE);
    std::fs::write(&scen, cfg.to_toml()?).map_err(|e| CliError::io(&scen, e))?;

    let start = Instant::now();
    let ctx = Ctx::new(cfg, out);
    let summary = ops::dispatch(&ctx, exp)?;
    let spectra = ctx.spectra.into_inner().expect("ctx lock");
    let spectrum_hash = (!spectra.is_empty()).then(|| {
        let mut h = Sha256::new();
        for s in &spectra {
            h.update(s.sha256.as_bytes());
        }
        hex::encode(h.finalize())
    });
    let manifest = RunManifest {
        command: exp.name().to_string(),
        argv,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        spectrum_hash,
        spectra,
        scenario: cfg.clone(),
        artifacts: ctx.artifacts.into_inner().expect("ctx lock"),
        wall_time_s: start.elapsed().as_secs_f64(),
        summary,
    };
    let path = out.join(MANIFEST_FILE);
    let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &manifest)?;
    Ok(manifest)
}

/// Counter-based expansion of the run seed (splitmix64).
pub fn subseed(seed: u64, counter: u64) -> u64 {
    let mut z = seed ^ counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn key_label(k: &ModeKey) -> String {
    let p = match k.parity {
        Parity::Even => 'e',
        Parity::Odd => 'o',
    };
    format!("m{}{}{}", k.m, p, k.branch)
}

pub struct Ctx<'a> {
    pub cfg: &'a ScenarioConfig,
    pub out: &'a Path,
    spectra: Mutex<Vec<SpectrumRecord>>,
    artifacts: Mutex<Vec<String>>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ScenarioConfig, out: &'a Path) -> Self {
        Self {
            cfg,
            out,
            spectra: Mutex::new(Vec::new()),
            artifacts: Mutex::new(Vec::new()),
        }
    }

    pub fn table(&self, m_max: u32, per_m: usize) -> Result<SpectrumTable> {
        let t = find_spectrum(&self.cfg.params, m_max, per_m)?;
        let digest = Sha256::digest(serde_json::to_vec(&t)?);
        self.spectra.lock().expect("ctx lock").push(SpectrumRecord {
            m_max,
            per_m,
            modes: t.len(),
            sha256: hex::encode(digest),
        });
        Ok(t)
    }

    pub fn keys(&self, table: &SpectrumTable) -> Vec<ModeKey> {
        let t = &self.cfg.truncation;
        match &t.keys {
            Some(k) => k.clone(),
            None => table
                .keys()
                .into_iter()
                .filter(|k| t.max_branch.is_none_or(|b| k.branch <= b))
                .collect(),
        }
    }

    /// Spectrum table and modal system of the truncation block.
    pub fn system(&self) -> Result<(SpectrumTable, ModalSystem)> {
        let t = &self.cfg.truncation;
        let table = self.table(t.m_max, t.per_m)?;
        let sys = ModalSystem::new(&self.cfg.params, &table, &self.keys(&table))?;
        Ok((table, sys))
    }

    pub fn initial(&self, table: &SpectrumTable, sys: &ModalSystem) -> Result<ModalState> {
        let n = sys.dim();
        match &self.cfg.initial {
            InitialData::Zero => Ok(ModalState::zeros(n)),
            InitialData::Modal { h, hdot } => {
                if h.len() != n {
                    return Err(CliError::schema("initial.h", format!("expected {n} coefficients, got {}", h.len())));
                }
                let v = hdot.clone().unwrap_or_else(|| vec![0.0; n]);
                if v.len() != n {
                    return Err(CliError::schema("initial.hdot", format!("expected {n} coefficients, got {}", v.len())));
                }
                Ok(ModalState::new(h.clone(), v))
            }
            InitialData::Unimodal { m, alpha, phi0, dphi0 } => {
                let a = alpha.unwrap_or(self.cfg.params.alpha);
                let u = build_unimodal(*m, a, &self.cfg.params)?;
                let modes: Vec<_> = sys.table_index.iter().map(|&i| table.modes[i].clone()).collect();
                let c = project_unimodal(&u, &modes, 96);
                Ok(ModalState::new(
                    c.iter().map(|x| phi0 * x).collect(),
                    c.iter().map(|x| dphi0 * x).collect(),
                ))
            }
            InitialData::Random { norm } => {
                let mut v = random_battery(&sys.lambda, 1, (*norm, *norm), subseed(self.cfg.seed, 0))?;
                Ok(v.remove(0))
            }
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn record(&self, name: &str) {
        self.artifacts.lock().expect("ctx lock").push(name.to_string());
    }

    pub fn csv(&self, name: &str) -> Result<csv::Writer<File>> {
        let p = self.path(name);
        let w = csv::Writer::from_path(&p)?;
        self.record(name);
        Ok(w)
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        let f = File::create(&p).map_err(|e| CliError::io(&p, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), value)?;
        self.record(name);
        Ok(())
    }

    pub fn mkdir(&self, name: &str) -> Result<PathBuf> {
        let p = self.path(name);
        std::fs::create_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }
}
