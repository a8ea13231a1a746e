//! Helpers shared by the subcommands.

use revdeconv::{load_weights, select_tiling, Error, NetworkConfig, Result, WeightTensor};
use std::path::{Path, PathBuf};

/// Weights named on the command line win over the config's `weights`
/// entry; a relative path in the config resolves against the config
/// file's directory.
pub fn load_weights_for(
    config: &NetworkConfig,
    config_path: &Path,
    flag: Option<&Path>,
) -> Result<Vec<WeightTensor>> {
    let path: PathBuf = match flag {
        Some(p) => p.to_path_buf(),
        None => match &config.weights {
            Some(p) if p.is_relative() => config_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(p),
            Some(p) => p.clone(),
            None => {
                return Err(Error::Param(
                    "no weight file: pass --weights or set `weights` in the config".into(),
                ))
            }
        },
    };
    load_weights(&path, config)
}

/// An explicit --t-oh wins; otherwise use the DSE selection for the
/// config's platform.
pub fn resolve_t_oh(config: &NetworkConfig, flag: Option<usize>) -> Result<usize> {
    match flag {
        Some(t) => Ok(t),
        None => Ok(select_tiling(&config.params(), &config.platform)?.t_oh),
    }
}
