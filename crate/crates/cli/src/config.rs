use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;

use crate::error::CliError;

/// Options shared by every subcommand. Any of them may also be given in a
/// `key = value` config file; command-line flags take precedence.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Pump strength relative to threshold, |chi| < 1.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub chi: Option<f64>,
    /// Real part of the unraveling parameter u = r + ih.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// Imaginary part of the unraveling parameter u = r + ih.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// Number of trajectories.
    #[arg(long, global = true)]
    pub n_traj: Option<usize>,
    /// Trajectory time step.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Final time (relaxation time for `simulate`).
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    /// RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Fock-basis truncation.
    #[arg(long, global = true)]
    pub fock_dim: Option<usize>,
    /// Boundary samples per curve (`region`).
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Number of time intervals (`survival`).
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Smallest chi of the grid (`fig2`).
    #[arg(long, global = true)]
    pub chi_min: Option<f64>,
    /// Largest chi of the grid (`fig2`).
    #[arg(long, global = true)]
    pub chi_max: Option<f64>,
    /// Number of chi values (`fig2`).
    #[arg(long, global = true)]
    pub chi_steps: Option<usize>,
    /// Radial grid size (`optimize`).
    #[arg(long, global = true)]
    pub n_radii: Option<usize>,
    /// Angular grid size (`optimize`).
    #[arg(long, global = true)]
    pub n_angles: Option<usize>,
    /// Output CSV path; stdout if omitted.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Plain-text `key = value` file with defaults for the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

const KEYS: [&str; 16] = [
    "chi", "r", "h", "n-traj", "dt", "t-max", "seed", "fock-dim", "points", "steps", "chi-min", "chi-max",
    "chi-steps", "n-radii", "n-angles", "output",
];

fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", n + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn fill<T: FromStr>(slot: &mut Option<T>, map: &BTreeMap<String, String>, key: &str) -> Result<(), CliError> {
    if slot.is_none() {
        if let Some(v) = map.get(key) {
            let parsed = v
                .parse()
                .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{v}`")))?;
            *slot = Some(parsed);
        }
    }
    Ok(())
}

impl Flags {
    /// Merges values from `--config`, keeping any flag given explicitly.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let map = parse_config(&text)?;
        fill(&mut self.chi, &map, "chi")?;
        fill(&mut self.r, &map, "r")?;
        fill(&mut self.h, &map, "h")?;
        fill(&mut self.n_traj, &map, "n-traj")?;
        fill(&mut self.dt, &map, "dt")?;
        fill(&mut self.t_max, &map, "t-max")?;
        fill(&mut self.seed, &map, "seed")?;
        fill(&mut self.fock_dim, &map, "fock-dim")?;
        fill(&mut self.points, &map, "points")?;
        fill(&mut self.steps, &map, "steps")?;
        fill(&mut self.chi_min, &map, "chi-min")?;
        fill(&mut self.chi_max, &map, "chi-max")?;
        fill(&mut self.chi_steps, &map, "chi-steps")?;
        fill(&mut self.n_radii, &map, "n-radii")?;
        fill(&mut self.n_angles, &map, "n-angles")?;
        fill(&mut self.output, &map, "output")?;
        Ok(self)
    }

    pub fn require_chi(&self) -> Result<f64, CliError> {
        let chi = self.chi.ok_or_else(|| CliError::Usage("--chi is required".into()))?;
        if !chi.is_finite() || chi.abs() >= 1.0 {
            return Err(CliError::Usage(format!("--chi must satisfy |chi| < 1, got {chi}")));
        }
        Ok(chi)
    }

    /// The unraveling `(r, h)`, defaulting to `u = -1`.
    pub fn unraveling(&self) -> Result<unravel::UnravelingParam, CliError> {
        let r = self.r.unwrap_or(if self.h.is_some() { 0.0 } else { -1.0 });
        let h = self.h.unwrap_or(0.0);
        unravel::UnravelingParam::new(r, h).map_err(|e| CliError::Usage(e.to_string()))
    }
}

pub fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let map = parse_config("# comment\nchi = 0.5\nn_traj=10  # trailing\n\n").unwrap();
        assert_eq!(map["chi"], "0.5");
        assert_eq!(map["n-traj"], "10");
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("chi 0.5").is_err());
    }

    #[test]
    fn flags_win_over_config() {
        let map = parse_config("chi = 0.5\nseed = 3").unwrap();
        let mut chi = Some(0.9);
        let mut seed: Option<u64> = None;
        fill(&mut chi, &map, "chi").unwrap();
        fill(&mut seed, &map, "seed").unwrap();
        assert_eq!(chi, Some(0.9));
        assert_eq!(seed, Some(3));
        let bad = parse_config("seed = x").unwrap();
        assert!(fill(&mut None::<u64>, &bad, "seed").is_err());
    }

    #[test]
    fn default_unraveling_is_robust() {
        let f = Flags::default();
        assert_eq!(f.unraveling().unwrap(), unravel::UnravelingParam::ROBUST);
        let f = Flags { h: Some(1.0), ..Flags::default() };
        assert_eq!(f.unraveling().unwrap().r(), 0.0);
        let f = Flags { r: Some(1.0), h: Some(1.0), ..Flags::default() };
        assert!(f.unraveling().is_err());
    }
}
