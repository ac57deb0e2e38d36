//! Flat key = value config files. One assignment per line, `#` starts a
//! comment, keys use snake_case and mirror the long CLI flags. Flags always
//! win over file values; file values win over built-in defaults.

use std::collections::HashMap;
use std::path::Path;

/// Every key any subcommand understands. A key outside this set is a typo
/// and gets rejected outright.
const ALLOWED_KEYS: &[&str] = &[
    "init_mean",
    "init_std",
    "v_verify_s1",
    "delta_vpp",
    "gamma_x",
    "gamma_y",
    "gamma_xy",
    "alpha",
    "sigma_read",
    "eta",
    "eta_pre",
    "seed",
    "trials",
    "max_failures",
    "alphas",
    "eta_pres",
    "allocations",
    "l",
    "r",
    "bins",
    "count",
    "epsilon",
    "p",
];

#[derive(Debug, Default)]
pub struct FileConfig {
    values: HashMap<String, String>,
    source: String,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let source = path.display().to_string();
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "{source}:{}: expected 'key = value', got '{raw}'",
                    lineno + 1
                ));
            };
            let key = key.trim();
            if !ALLOWED_KEYS.contains(&key) {
                return Err(format!("{source}:{}: unknown config key '{key}'", lineno + 1));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values, source })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, kind: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                format!("{}: key '{key}' needs {kind}, got '{raw}'", self.source)
            }),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, String> {
        self.parse(key, "a number")
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, String> {
        self.parse(key, "a nonnegative integer")
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, String> {
        self.parse(key, "a nonnegative integer")
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|item| {
                    item.trim().parse::<f64>().map_err(|_| {
                        format!(
                            "{}: key '{key}' needs comma-separated numbers, got '{item}'",
                            self.source
                        )
                    })
                })
                .collect::<Result<Vec<f64>, String>>()
                .map(Some),
        }
    }

    pub fn get_alloc_list(&self, key: &str) -> Result<Option<Vec<(usize, usize)>>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|item| {
                    parse_allocation(item.trim()).map_err(|e| format!("{}: {e}", self.source))
                })
                .collect::<Result<Vec<_>, String>>()
                .map(Some),
        }
    }
}

/// "l:r" pair, e.g. "10:90".
pub fn parse_allocation(s: &str) -> Result<(usize, usize), String> {
    let err = || format!("allocation must look like 'l:r', got '{s}'");
    let (l, r) = s.split_once(':').ok_or_else(err)?;
    Ok((
        l.trim().parse::<usize>().map_err(|_| err())?,
        r.trim().parse::<usize>().map_err(|_| err())?,
    ))
}
