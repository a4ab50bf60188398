//! Optional TOML settings file. Command-line flags win over the file, the
//! file wins over built-in defaults.
//!
//! ```toml
//! window = 50
//! merge_ratio = 5.0
//! rate = 10
//! k = 0.7
//! kernel = "poly"
//! c_powers = "-5..4"
//! folds = 5
//! seed = 0
//! task = "snap"
//! ```

use crate::exit::CliError;
use rcbht::classifier::{KernelKind, KernelSpec};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub window: Option<usize>,
    pub merge_ratio: Option<f64>,
    pub rate: Option<f64>,
    pub k: Option<f64>,
    pub kernel: Option<String>,
    pub c_powers: Option<String>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub task: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

pub const ALLOWED_RATES: [f64; 3] = [2.0, 10.0, 100.0];

pub fn check_rate(rate: f64) -> Result<f64, CliError> {
    if ALLOWED_RATES.contains(&rate) {
        Ok(rate)
    } else {
        Err(CliError::Usage(format!("rate must be 2, 10 or 100 Hz, got {rate}")))
    }
}

pub fn parse_rate(s: &str) -> Result<f64, String> {
    let rate: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    check_rate(rate).map_err(|e| e.to_string())
}

pub fn check_k(k: f64) -> Result<f64, CliError> {
    if (0.5..1.0).contains(&k) {
        Ok(k)
    } else {
        Err(CliError::Usage(format!("threshold k must lie in [0.5, 1), got {k}")))
    }
}

pub fn parse_k(s: &str) -> Result<f64, String> {
    let k: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    check_k(k).map_err(|e| e.to_string())
}

/// `lo..hi`, inclusive on both ends.
pub fn parse_powers(s: &str) -> Result<(i32, i32), String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got '{s}'"))?;
    let lo: i32 = lo.trim().parse().map_err(|_| format!("bad lower power in '{s}'"))?;
    let hi: i32 = hi.trim().parse().map_err(|_| format!("bad upper power in '{s}'"))?;
    if lo > hi || hi - lo > 40 {
        return Err(format!("power range '{s}' is empty or too wide"));
    }
    Ok((lo, hi))
}

/// `poly`, `linear`, `rbf` or `all`.
pub fn parse_kernels(s: &str) -> Result<Vec<KernelSpec>, String> {
    if s == "all" {
        return Ok(KernelKind::ALL.iter().map(|&k| KernelSpec::of(k)).collect());
    }
    s.split(',').map(|name| name.trim().parse::<KernelKind>().map(KernelSpec::of)).collect()
}

pub fn check_merge_ratio(r: f64) -> Result<f64, CliError> {
    if r.is_finite() && r > 1.0 {
        Ok(r)
    } else {
        Err(CliError::Usage(format!("merge ratio must be > 1, got {r}")))
    }
}

pub fn check_window(w: usize) -> Result<usize, CliError> {
    if w >= 2 {
        Ok(w)
    } else {
        Err(CliError::Usage(format!("window must be at least 2 samples, got {w}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_ranges() {
        assert_eq!(parse_powers("-5..4"), Ok((-5, 4)));
        assert_eq!(parse_powers("0..0"), Ok((0, 0)));
        assert!(parse_powers("3..1").is_err());
        assert!(parse_powers("3").is_err());
    }

    #[test]
    fn rates_and_thresholds() {
        assert_eq!(parse_rate("10"), Ok(10.0));
        assert!(parse_rate("5").is_err());
        assert_eq!(parse_k("0.7"), Ok(0.7));
        assert!(parse_k("1.0").is_err());
        assert!(parse_k("0.4").is_err());
    }

    #[test]
    fn kernel_lists() {
        assert_eq!(parse_kernels("all").unwrap().len(), 3);
        assert_eq!(parse_kernels("poly,linear").unwrap(), vec![KernelSpec::poly(), KernelSpec::linear()]);
        assert!(parse_kernels("sigmoid").is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "window = 40\nrate = 10\n").unwrap();
        let c = FileConfig::load(Some(&p)).unwrap();
        assert_eq!((c.window, c.rate), (Some(40), Some(10.0)));
        std::fs::write(&p, "windw = 40\n").unwrap();
        assert!(FileConfig::load(Some(&p)).is_err());
    }
}
