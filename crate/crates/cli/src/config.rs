//! Flat `key=value` experiment configs.
//!
//! A config file holds the command name on its first non-comment line and
//! one `key=value` pair per following line; `#` starts a comment. Every key
//! has a default, and unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Certify,
    OperatorCheck,
    Evolve,
    ResolventCheck,
    Feller,
    Simulate,
    Martingale,
    Slope,
    Collapse,
    PhaseDiagram,
    WeightedEstimates,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::OperatorCheck => "operator-check",
            Command::Evolve => "evolve",
            Command::ResolventCheck => "resolvent-check",
            Command::Feller => "feller",
            Command::Simulate => "simulate",
            Command::Martingale => "martingale",
            Command::Slope => "slope",
            Command::Collapse => "collapse",
            Command::PhaseDiagram => "phase-diagram",
            Command::WeightedEstimates => "weighted-estimates",
        }
    }

    /// Accepted keys with their defaults, in header order.
    pub fn keys(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Command::Certify => &[("c", "0.2"), ("d", "3"), ("output", "-")],
            Command::OperatorCheck => &[
                ("c", "0.2"),
                ("d", "3"),
                ("n", "8"),
                ("L", "4"),
                ("grid", "32"),
                ("lambda", "1"),
                ("iters", "1000"),
                ("tol", "1e-10"),
                ("output", "-"),
            ],
            Command::Evolve => &[
                ("c", "0.2"),
                ("d", "3"),
                ("n", "4"),
                ("L", "4"),
                ("grid", "32"),
                ("dt", "0.01"),
                ("t", "0,0.25,0.5,1"),
                ("k", "1"),
                ("boundary", "absorbing"),
                ("scheme", "implicit"),
                ("points", "axis"),
                ("output", "-"),
            ],
            Command::ResolventCheck => &[
                ("c", "0.2"),
                ("d", "3"),
                ("n", "8"),
                ("L", "4"),
                ("grid", "32"),
                ("lambda", "1"),
                ("output", "-"),
            ],
            Command::Feller => &[
                ("c", "0.2"),
                ("d", "3"),
                ("n", "2,4,8,16"),
                ("L", "4"),
                ("grid", "32"),
                ("dt", "0.01"),
                ("t", "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"),
                ("k", "1"),
                ("boundary", "absorbing"),
                ("output", "-"),
            ],
            Command::Simulate => &[
                ("c", "0.2"),
                ("d", "3"),
                ("n", "8"),
                ("x0", "1"),
                ("dt", "1e-3"),
                ("t", "0.5"),
                ("N", "10000"),
                ("seed", "1"),
                ("R", "1,2,4"),
                ("dump", ""),
                ("output", "-"),
            ],
            Command::Martingale => &[
                ("c", "0.2"),
                ("d", "3"),
                ("n", "8"),
                ("x0", "0.6,0.4,-0.2"),
                ("dt", "1e-3"),
                ("t", "0.5"),
                ("N", "20000"),
                ("seed", "1"),
                ("f", "y1,y1y2,norm2,cutoff_y1y2,cutoff_norm2"),
                ("windows", "0:0.1,0.1:0.3,0.3:0.5,0:0.5"),
                ("output", "-"),
            ],
            Command::Slope => &[
                ("c", "0.2"),
                ("d", "3"),
                ("n", "16"),
                ("x0", "1"),
                ("dt", "1e-4"),
                ("t", "0.5"),
                ("N", "50000"),
                ("seed", "20240601"),
                ("windows", "10"),
                ("output", "-"),
            ],
            Command::Collapse => &[
                ("c", "4"),
                ("d", "3"),
                ("n", "2,4,8"),
                ("dt", "1e-4"),
                ("t", "0.25"),
                ("N", "20000"),
                ("seed", "7"),
                ("output", "-"),
            ],
            Command::PhaseDiagram => &[
                ("d", "3,4,5"),
                ("c", "0.1,0.2,0.3,1,3,4"),
                ("n", "8"),
                ("dt", "1e-3"),
                ("t", "0.25"),
                ("budget", "60000"),
                ("seed", "1"),
                ("output", "-"),
            ],
            Command::WeightedEstimates => &[
                ("c", "0.2"),
                ("d", "3"),
                ("n", "2,4,8,16"),
                ("L", "4"),
                ("grid", "32"),
                ("mu", "2"),
                ("p", "2"),
                ("l", "0.01"),
                ("nu", "2"),
                ("output", "-"),
            ],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Command as ValueEnum>::value_variants()
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown command `{s}`")))
    }
}

/// A command with every key resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub command: Command,
    values: BTreeMap<&'static str, String>,
}

impl Config {
    /// Applies `pairs` over the defaults. Later pairs override earlier ones.
    pub fn resolve<S: AsRef<str>>(command: Command, pairs: &[S]) -> Result<Self, CliError> {
        let mut values: BTreeMap<&'static str, String> = command
            .keys()
            .iter()
            .map(|(k, v)| (*k, v.to_string()))
            .collect();
        for pair in pairs {
            let pair = pair.as_ref();
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("expected key=value, got `{pair}`")))?;
            let key = command
                .keys()
                .iter()
                .map(|(k, _)| *k)
                .find(|known| *known == k.trim())
                .ok_or_else(|| {
                    CliError::Config(format!("unknown key `{}` for {command}", k.trim()))
                })?;
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { command, values })
    }

    /// Parses a config file, then applies `overrides`.
    pub fn from_file_text<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self, CliError> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let command: Command = lines
            .next()
            .ok_or_else(|| CliError::Config("config file names no command".into()))?
            .parse()?;
        let mut pairs: Vec<String> = lines.map(str::to_string).collect();
        pairs.extend(overrides.iter().map(|s| s.as_ref().to_string()));
        Self::resolve(command, &pairs)
    }

    /// The config as file text: command line, then `key=value` in key order.
    pub fn to_file_text(&self) -> String {
        let mut out = format!("{}\n", self.command);
        for (k, _) in self.command.keys() {
            out.push_str(&format!("{k}={}\n", self.values[k]));
        }
        out
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("key `{key}` not declared for {}", self.command))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|e| CliError::Config(format!("bad value for {key}: `{raw}` ({e})")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| CliError::Config(format!("bad entry in {key}: `{s}` ({e})")))
            })
            .collect()
    }

    /// `s:t` pairs separated by commas.
    pub fn windows(&self, key: &str) -> Result<Vec<(f64, f64)>, CliError> {
        self.raw(key)
            .split(',')
            .map(|w| {
                let (s, t) = w
                    .split_once(':')
                    .ok_or_else(|| CliError::Config(format!("window `{w}` is not s:t")))?;
                let num = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::Config(format!("bad window `{w}` ({e})")))
                };
                Ok((num(s)?, num(t)?))
            })
            .collect()
    }

    /// A point given as `d` coordinates, or as one radius meaning `r e_1`.
    pub fn point(&self, key: &str, d: usize) -> Result<Vec<f64>, CliError> {
        let vals: Vec<f64> = self.list(key)?;
        match vals.len() {
            1 => {
                let mut x = vec![0.0; d];
                x[0] = vals[0];
                Ok(x)
            }
            n if n == d => Ok(vals),
            n => Err(CliError::Config(format!(
                "{key} has {n} coordinates, expected 1 or {d}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = Config::resolve(Command::Certify, &["c=3"]).unwrap();
        assert_eq!(cfg.get::<f64>("c").unwrap(), 3.0);
        assert_eq!(cfg.get::<usize>("d").unwrap(), 3);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = Config::resolve(Command::Certify, &["foo=1"]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(Config::resolve(Command::Certify, &["c"]).is_err());
    }

    #[test]
    fn file_text_round_trips() {
        let cfg = Config::resolve(Command::Martingale, &["N=500", "f=y1"]).unwrap();
        let text = cfg.to_file_text();
        let back = Config::from_file_text(&text, &[] as &[&str]).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_file_text(), text);
    }

    #[test]
    fn comments_and_overrides_in_files() {
        let text = "# experiment\nslope\nc=0.5 # strength\n\nN=100\n";
        let cfg = Config::from_file_text(text, &["N=200"]).unwrap();
        assert_eq!(cfg.command, Command::Slope);
        assert_eq!(cfg.get::<f64>("c").unwrap(), 0.5);
        assert_eq!(cfg.get::<usize>("N").unwrap(), 200);
    }

    #[test]
    fn points_and_windows() {
        let cfg = Config::resolve(Command::Simulate, &["x0=2"]).unwrap();
        assert_eq!(cfg.point("x0", 3).unwrap(), vec![2.0, 0.0, 0.0]);
        let cfg = Config::resolve(Command::Simulate, &["x0=1,2"]).unwrap();
        assert!(cfg.point("x0", 3).is_err());
        let cfg = Config::resolve(Command::Martingale, &[] as &[&str]).unwrap();
        assert_eq!(cfg.windows("windows").unwrap()[1], (0.1, 0.3));
    }
}
