mod dynamics;
mod identities;
mod orbits;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use magflow::io::system_hash;
use magflow::smbundle::UnitTangent;
use magflow::system::MagneticSystem;
use magflow::variational::IdentityRecord;
use magflow::{Error, Result};

use crate::config::RunConfig;
use crate::{Command, Common};

pub use identities::random_torus_system;
pub use orbits::{find_orbits, FoundOrbit, Search};

pub struct Context {
    pub cfg: RunConfig,
    pub sys: MagneticSystem,
    pub hash: String,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub dry_run: bool,
    pub command: &'static str,
}

/// Result file of one command. Contains no timestamps; those go to `meta.json`.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub system_hash: String,
    pub seed: Option<u64>,
    pub pass: bool,
    pub records: Vec<IdentityRecord>,
    pub details: serde_json::Value,
}

pub enum Outcome {
    Plan(Vec<String>),
    Report(Report),
}

impl Context {
    pub fn new(cfg: RunConfig, common: &Common, command: &'static str) -> Result<Self> {
        let sys = cfg.system_file().build()?;
        let hash = system_hash(&sys)?;
        Ok(Self {
            seed: common.seed.or(cfg.seed),
            cfg,
            sys,
            hash,
            out: common.out.clone(),
            dry_run: common.dry_run,
            command,
        })
    }

    /// The seed, which randomized suites require.
    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config(format!("{} is randomized: pass --seed or set `seed` in the config", self.command)))
    }

    pub fn rng(&self) -> Result<ChaCha8Rng> {
        Ok(ChaCha8Rng::seed_from_u64(self.seed()?))
    }

    pub fn report(&self, records: Vec<IdentityRecord>, details: impl Serialize) -> Result<Report> {
        Ok(Report {
            command: self.command.to_string(),
            system_hash: self.hash.clone(),
            seed: self.seed,
            pass: records.iter().all(|r| r.pass),
            records,
            details: serde_json::to_value(details).map_err(|e| Error::Parse(e.to_string()))?,
        })
    }

    fn ensure_out(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        Ok(())
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        self.ensure_out()?;
        std::fs::write(self.out.join(name), bytes)?;
        Ok(())
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Write the report and the run metadata.
    pub fn finish(&self, report: &Report, jobs: Option<usize>) -> Result<()> {
        self.write_json(&format!("{}.json", self.command), report)?;
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = serde_json::json!({
            "command": self.command,
            "unix_time": stamp,
            "version": env!("CARGO_PKG_VERSION"),
            "jobs": jobs,
            "parallel": magflow::parallel::is_parallel(),
        });
        self.write_json(&format!("{}.meta.json", self.command), &meta)
    }
}

pub fn dispatch(cmd: &Command, ctx: &Context) -> Result<Outcome> {
    match cmd {
        Command::VerifyIdentities(_) => identities::verify_identities(ctx),
        Command::Commutators(_) => identities::commutators(ctx),
        Command::JacobiCheck(_) => dynamics::jacobi_check(ctx),
        Command::Lyapunov(_) => dynamics::lyapunov(ctx),
        Command::IndexForm(_) => orbits::index_form(ctx),
        Command::Orbits(_) => orbits::orbits(ctx),
        Command::Spectrum(_) => orbits::spectrum(ctx),
        Command::Deform(_) => orbits::deform(ctx),
        Command::ActionVariation(_) => orbits::action_variation(ctx),
    }
}

/// Uniform point of `SM` over the fundamental square (torus) or over the disk
/// of chart radius 0.6 (hyperbolic).
pub fn random_point<R: Rng + ?Sized>(sys: &MagneticSystem, rng: &mut R) -> UnitTangent {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    if sys.surface.is_torus() {
        UnitTangent::new(rng.gen(), rng.gen(), theta)
    } else {
        let r = 0.6 * rng.gen::<f64>().sqrt();
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        UnitTangent::new(r * a.cos(), r * a.sin(), theta)
    }
}

pub(crate) fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0, |m: f64, v: f64| if m.is_nan() || v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}
