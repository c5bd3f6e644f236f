//! Flat `key = value` configuration files mirroring `FitConfig`.

use lurk_core::estimator::LikelihoodConstant;
use lurk_core::FitConfig;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value '{value}' for '{key}': {reason}")]
    Value {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
}

pub const KEYS: &[&str] = &[
    "tol",
    "max_outer",
    "k_folds",
    "lambda_grid_size",
    "seed",
    "theta_bounds",
    "eta_bounds",
    "optimizer_restarts",
    "optimizer_max_evals",
    "one_se_rule",
    "likelihood_constant",
    "include_sudden",
];

fn parse_pair(v: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|_| format!("'{a}' is not a number"))?,
            b.parse().map_err(|_| format!("'{b}' is not a number"))?,
        )),
        _ => Err("expected 'lo, hi'".into()),
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| "not a valid number".to_string())
}

/// Applies one setting to `cfg`.
pub fn set(cfg: &mut FitConfig, key: &str, value: &str) -> Result<(), String> {
    match key {
        "tol" => cfg.tol = parse_num(value)?,
        "max_outer" => cfg.max_outer = parse_num(value)?,
        "k_folds" => cfg.k_folds = parse_num(value)?,
        "lambda_grid_size" => cfg.lambda_grid_size = parse_num(value)?,
        "seed" => cfg.seed = parse_num(value)?,
        "theta_bounds" => cfg.theta_bounds = parse_pair(value)?,
        "eta_bounds" => cfg.eta_bounds = parse_pair(value)?,
        "optimizer_restarts" => cfg.optimizer_restarts = parse_num(value)?,
        "optimizer_max_evals" => cfg.optimizer_max_evals = parse_num(value)?,
        "one_se_rule" => cfg.one_se_rule = parse_bool(value)?,
        "include_sudden" => cfg.include_sudden = parse_bool(value)?,
        "likelihood_constant" => {
            cfg.likelihood_constant = match value {
                "3n" => LikelihoodConstant::ThreeN,
                "n" => LikelihoodConstant::N,
                _ => return Err("expected 3n or n".into()),
            }
        }
        _ => return Err(format!("unknown key '{key}'")),
    }
    Ok(())
}

/// Parses a config file body on top of the defaults. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse(text: &str) -> Result<FitConfig, ConfigError> {
    let mut cfg = FitConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        set(&mut cfg, key, value).map_err(|reason| ConfigError::Value {
            line,
            key: key.to_string(),
            value: value.to_string(),
            reason,
        })?;
    }
    cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse("").unwrap(), FitConfig::default());
        assert_eq!(parse("# nothing\n\n").unwrap(), FitConfig::default());
    }

    #[test]
    fn every_key_parses() {
        let text = "tol = 1e-5\nmax_outer=7\nk_folds = 5\nlambda_grid_size = 20\nseed = 9\n\
                    theta_bounds = 0.1, 100\neta_bounds = 1e-6,1\noptimizer_restarts = 0\n\
                    optimizer_max_evals = 50\none_se_rule = true\nlikelihood_constant = n\ninclude_sudden = off\n";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.tol, 1e-5);
        assert_eq!(cfg.max_outer, 7);
        assert_eq!(cfg.k_folds, 5);
        assert_eq!(cfg.lambda_grid_size, 20);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.theta_bounds, (0.1, 100.0));
        assert_eq!(cfg.eta_bounds, (1e-6, 1.0));
        assert_eq!(cfg.optimizer_restarts, 0);
        assert_eq!(cfg.optimizer_max_evals, 50);
        assert!(cfg.one_se_rule);
        assert_eq!(cfg.likelihood_constant, LikelihoodConstant::N);
        assert!(!cfg.include_sudden);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse("tol = 1\nnope\n"), Err(ConfigError::Syntax { line: 2 }));
        assert!(matches!(parse("colour = red"), Err(ConfigError::UnknownKey { line: 1, .. })));
        assert!(matches!(parse("\nk_folds = many"), Err(ConfigError::Value { line: 2, .. })));
        assert!(matches!(parse("k_folds = 1"), Err(ConfigError::Invalid(_))));
    }
}
