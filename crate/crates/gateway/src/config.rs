use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use stacksim::par::Execution;
use thiserror::Error;

pub const CONFIG_ENV: &str = "STACKSIM_CONFIG";

#[derive(Debug, Error, PartialEq)]
#[error("{path}:{line}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub line: usize,
    pub message: String,
}

/// Service settings. Sources in increasing precedence: defaults, the config
/// file, command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub state_dir: PathBuf,
    /// Concurrent jobs.
    pub workers: usize,
    pub execution: Execution,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            state_dir: PathBuf::from("stacksim-state"),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            execution: Execution::Parallel,
        }
    }
}

impl ServiceConfig {
    /// Applies `key value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path, text: &str) -> Result<(), ConfigError> {
        let err = |line: usize, message: String| ConfigError { path: path.display().to_string(), line, message };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once(char::is_whitespace)
                .map(|(k, v)| (k, v.trim()))
                .ok_or_else(|| err(line, format!("expected '<key> <value>', found '{content}'")))?;
            match key {
                "bind" => self.bind = value.parse().map_err(|_| err(line, format!("invalid address '{value}'")))?,
                "state_dir" => self.state_dir = PathBuf::from(value),
                "workers" => {
                    self.workers = match value.parse::<usize>() {
                        Ok(n) if n > 0 => n,
                        _ => return Err(err(line, format!("workers must be a positive integer, found '{value}'"))),
                    }
                }
                "execution" => {
                    self.execution = parse_execution(value)
                        .ok_or_else(|| err(line, format!("execution must be 'parallel' or 'sequential', found '{value}'")))?
                }
                other => return Err(err(line, format!("unknown key '{other}'"))),
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ServiceConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { path: path.display().to_string(), line: 0, message: e.to_string() })?;
        let mut c = ServiceConfig::default();
        c.apply_file(path, &text)?;
        Ok(c)
    }
}

pub fn parse_execution(s: &str) -> Option<Execution> {
    match s {
        "parallel" => Some(Execution::Parallel),
        "sequential" => Some(Execution::Sequential),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let mut c = ServiceConfig::default();
        c.apply_file(Path::new("svc.conf"), "# service\nbind 0.0.0.0:9000\nworkers 3\n\nexecution sequential\n")
            .unwrap();
        assert_eq!(c.bind.port(), 9000);
        assert_eq!(c.workers, 3);
        assert_eq!(c.execution, Execution::Sequential);
        assert_eq!(c.state_dir, ServiceConfig::default().state_dir);
    }

    #[test]
    fn errors_carry_line() {
        let mut c = ServiceConfig::default();
        let e = c.apply_file(Path::new("svc.conf"), "bind 127.0.0.1:1\nworkers 0\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = c.apply_file(Path::new("svc.conf"), "colour blue").unwrap_err();
        assert!(e.to_string().starts_with("svc.conf:1: unknown key"));
    }
}
