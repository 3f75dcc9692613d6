//! Flat `key = value` configuration files.
//!
//! Keys are the long flag names without dashes prefix (`max-axis = 8`).
//! Blank lines and `#` comments are ignored. Flags given on the command line
//! take precedence over the file, which takes precedence over defaults.

use std::collections::BTreeMap;
use std::str::FromStr;

pub const KNOWN_KEYS: &[&str] = &[
    "scene",
    "n",
    "sd",
    "seed",
    "k",
    "alpha",
    "sigma",
    "mode",
    "gamma",
    "max-axis",
    "order",
    "bn",
    "patch-radius",
    "h-n",
    "kernel",
    "axes",
    "scenes",
    "sizes",
    "sds",
    "L",
    "methods",
    "threads",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(format!("config line {}: unknown key `{key}`", lineno + 1));
            }
            values.insert(key.to_owned(), value.trim().to_owned());
        }
        Ok(ConfigFile { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        debug_assert!(KNOWN_KEYS.contains(&key), "{key}");
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| format!("config key `{key}`: cannot parse `{v}`"))
            })
            .transpose()
    }

    /// Flag value if given, else the config value, else `default`.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, String> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

/// Comma-separated list, e.g. `5,10,20`.
pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| format!("cannot parse list item `{s}`"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let cfg = ConfigFile::parse("# tuning\n\ngamma = 4 # pixels\nmax-axis=9\n").unwrap();
        assert_eq!(cfg.get::<f64>("gamma").unwrap(), Some(4.0));
        assert_eq!(cfg.get::<f64>("max-axis").unwrap(), Some(9.0));
        assert_eq!(cfg.get::<f64>("alpha").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(ConfigFile::parse("colour = red")
            .unwrap_err()
            .contains("unknown key"));
        assert!(ConfigFile::parse("gamma 4").is_err());
        let cfg = ConfigFile::parse("gamma = four").unwrap();
        assert!(cfg.get::<f64>("gamma").is_err());
    }

    #[test]
    fn precedence() {
        let cfg = ConfigFile::parse("gamma = 4").unwrap();
        assert_eq!(cfg.resolve(Some(2.0), "gamma", 3.0).unwrap(), 2.0);
        assert_eq!(cfg.resolve(None, "gamma", 3.0).unwrap(), 4.0);
        assert_eq!(cfg.resolve(None, "alpha", 0.05).unwrap(), 0.05);
    }

    #[test]
    fn lists() {
        assert_eq!(
            parse_list::<f64>("5, 10,20").unwrap(),
            vec![5.0, 10.0, 20.0]
        );
        assert!(parse_list::<usize>("64,x").is_err());
    }
}
