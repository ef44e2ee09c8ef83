//! Configuration text, binary snapshots, CSV telemetry and run manifests.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::diagnostics::DiagnosticsRecord;
use crate::solver::{SimulationState, SolverConfig, SolverError};
use crate::transform::SpectralField;

/// Keys accepted in configuration files and overrides.
pub const CONFIG_KEYS: [&str; 8] = [
    "L_max",
    "dt",
    "t_end",
    "alpha",
    "nu",
    "dealias_fraction",
    "sample_every",
    "seed",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown key '{key}'; valid keys: {}", CONFIG_KEYS.join(", "))]
    UnknownKey { key: String },
    #[error("line {line}: expected key=value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("cannot parse value '{value}' for key '{key}'")]
    BadValue { key: String, value: String },
    #[error(transparent)]
    Invalid(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn set_key(c: &mut SolverConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    let bad = || ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    };
    let real = || value.parse::<f64>().map_err(|_| bad());
    match key {
        "L_max" | "lmax" => c.lmax = value.parse().map_err(|_| bad())?,
        "dt" => c.dt = real()?,
        "t_end" => c.t_end = real()?,
        "alpha" => c.alpha = real()?,
        "nu" => c.nu = real()?,
        "dealias_fraction" | "dealias" => c.dealias_fraction = real()?,
        "sample_every" => c.sample_every = value.parse().map_err(|_| bad())?,
        "seed" => c.seed = value.parse().map_err(|_| bad())?,
        _ => {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
            })
        }
    }
    Ok(())
}

/// Parses flat `key=value` lines (`#` starts a comment) over the defaults,
/// then applies `overrides` in order and validates.
pub fn parse_config(
    text: &str,
    overrides: &[(String, String)],
) -> Result<SolverConfig, ConfigError> {
    let mut c = SolverConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        set_key(&mut c, k.trim(), v.trim())?;
    }
    for (k, v) in overrides {
        set_key(&mut c, k, v)?;
    }
    c.validate()?;
    Ok(c)
}

/// Reads and parses a configuration file; see [`parse_config`].
pub fn load_config(
    path: &Path,
    overrides: &[(String, String)],
) -> Result<SolverConfig, ConfigError> {
    parse_config(&fs::read_to_string(path)?, overrides)
}

/// Renders a configuration in the file format accepted by [`parse_config`].
pub fn format_config(c: &SolverConfig) -> String {
    format!(
        "L_max={}\ndt={}\nt_end={}\nalpha={}\nnu={}\ndealias_fraction={}\nsample_every={}\nseed={}\n",
        c.lmax, c.dt, c.t_end, c.alpha, c.nu, c.dealias_fraction, c.sample_every, c.seed
    )
}

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"SQG2";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("snapshot truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("degree {0} out of range")]
    Degree(u32),
    #[error(transparent)]
    Io(#[from] io::Error),
}

const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 8;

/// Contents of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: SimulationState,
    pub alpha: f64,
}

/// Little-endian snapshot bytes: magic, version, `L`, alpha, time, step,
/// then `(L+1)²` coefficients as `(re, im)` ordered by `ℓ` then `m = −ℓ..ℓ`.
pub fn encode_snapshot(state: &SimulationState, alpha: f64) -> Vec<u8> {
    let coeffs = state.theta.coeffs();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * coeffs.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(state.theta.lmax() as u32).to_le_bytes());
    out.extend_from_slice(&alpha.to_le_bytes());
    out.extend_from_slice(&state.time.to_le_bytes());
    out.extend_from_slice(&state.step_index.to_le_bytes());
    for c in coeffs {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    let truncated = |expected| SnapshotError::Truncated {
        expected,
        found: bytes.len(),
    };
    if bytes.len() < 8 {
        return Err(truncated(HEADER_LEN));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if &magic != SNAPSHOT_MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::Version(version));
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated(HEADER_LEN));
    }
    let l = u32_at(8);
    if l as usize > crate::transform::MAX_LMAX {
        return Err(SnapshotError::Degree(l));
    }
    let n = (l as usize + 1).pow(2);
    let expected = HEADER_LEN + 16 * n;
    if bytes.len() != expected {
        return Err(truncated(expected));
    }
    let coeffs = (0..n)
        .map(|i| {
            let o = HEADER_LEN + 16 * i;
            Complex64::new(f64_at(o), f64_at(o + 8))
        })
        .collect();
    Ok(Snapshot {
        alpha: f64_at(12),
        state: SimulationState {
            time: f64_at(20),
            step_index: u64::from_le_bytes(bytes[28..36].try_into().unwrap()),
            theta: SpectralField::from_coeffs(l as usize, coeffs),
        },
    })
}

pub fn write_snapshot(
    path: &Path,
    state: &SimulationState,
    alpha: f64,
) -> Result<(), SnapshotError> {
    fs::write(path, encode_snapshot(state, alpha))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_snapshot(&bytes)
}

pub const TELEMETRY_HEADER: &str = "time,l2,linf,grad_sup,h1,h1_5,h2,h3,maxpoint_lambda";

/// One CSV row (no newline); floats use the shortest round-trip form.
pub fn telemetry_row(r: &DiagnosticsRecord) -> String {
    let h = &r.h_norms;
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.time, r.l2, r.linf, r.grad_sup, h[0], h[1], h[2], h[3], r.maxpoint_lambda
    )
}

/// Streams telemetry rows after writing the header.
pub struct TelemetryWriter<W: Write> {
    out: W,
}

impl<W: Write> TelemetryWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{TELEMETRY_HEADER}")?;
        Ok(TelemetryWriter { out })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> io::Result<()> {
        writeln!(self.out, "{}", telemetry_row(r))
    }

    pub fn into_inner(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Parses a telemetry CSV back into `(time, values…)` rows.
pub fn parse_telemetry(text: &str) -> Result<Vec<[f64; 9]>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(TELEMETRY_HEADER) {
        return Err("missing telemetry header".into());
    }
    lines
        .map(|l| {
            let v: Vec<f64> = l
                .split(',')
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| format!("{e}: {l}"))?;
            v.try_into().map_err(|_| format!("expected 9 columns: {l}"))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub sha256: String,
}

/// Record of one run: configuration, wall-clock span, code version and every
/// emitted file with its checksum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SolverConfig,
    pub initial_condition: String,
    /// Seconds since the Unix epoch.
    pub start_time: f64,
    pub end_time: f64,
    pub version: String,
    pub files: Vec<ManifestEntry>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let digest = Sha256::digest(fs::read(path)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn new(config: SolverConfig, initial_condition: String) -> Self {
        RunManifest {
            config,
            initial_condition,
            start_time: unix_now(),
            end_time: 0.0,
            version: crate::VERSION.to_string(),
            files: Vec::new(),
        }
    }

    /// Adds `path` (stored relative to `root` when possible) with its checksum.
    pub fn add_file(&mut self, root: &Path, path: &Path) -> io::Result<()> {
        let sha256 = sha256_file(path)?;
        let rel = path.strip_prefix(root).unwrap_or(path).to_path_buf();
        self.files.push(ManifestEntry { path: rel, sha256 });
        Ok(())
    }

    /// Paths under `root` whose current checksum differs from the record.
    pub fn verify(&self, root: &Path) -> Vec<PathBuf> {
        self.files
            .iter()
            .filter(|e| {
                sha256_file(&root.join(&e.path))
                    .map(|h| h != e.sha256)
                    .unwrap_or(true)
            })
            .map(|e| e.path.clone())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::record;
    use crate::solver::InitialCondition;

    fn kv(k: &str, v: &str) -> (String, String) {
        (k.to_string(), v.to_string())
    }

    #[test]
    fn config_examples() {
        assert_eq!(parse_config("", &[]).unwrap(), SolverConfig::default());
        let c = parse_config("# comment\nalpha = 1.5\nL_max=32  # trailing\n", &[]).unwrap();
        assert_eq!((c.alpha, c.lmax), (1.5, 32));
        let c = parse_config("alpha=1.5\n", &[kv("alpha", "0.5"), kv("dealias", "0.75")]).unwrap();
        assert_eq!((c.alpha, c.dealias_fraction), (0.5, 0.75));
        match parse_config("dt=-1", &[]) {
            Err(ConfigError::Invalid(SolverError::InvalidConfig(m))) => assert_eq!(m, "dt > 0"),
            other => panic!("{other:?}"),
        }
        let e = parse_config("gamma=2", &[]).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { .. }) && e.to_string().contains("L_max, dt"));
        assert!(matches!(
            parse_config("alpha", &[]),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("dt=abc", &[]),
            Err(ConfigError::BadValue { .. })
        ));
        let c = SolverConfig {
            lmax: 40,
            dt: 2.5e-4,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(parse_config(&format_config(&c), &[]).unwrap(), c);
    }

    fn sample_state() -> SimulationState {
        let th = InitialCondition::RandomBand {
            lo: 1,
            hi: 9,
            amplitude: 0.7,
            seed: Some(3),
        }
        .build(9, 0)
        .unwrap();
        SimulationState {
            time: 0.123456789,
            theta: th,
            step_index: 42,
        }
    }

    #[test]
    fn snapshot_round_trip_and_errors() {
        let s = sample_state();
        let bytes = encode_snapshot(&s, 1.25);
        assert_eq!(bytes.len(), HEADER_LEN + 16 * 100);
        let back = decode_snapshot(&bytes).unwrap();
        assert_eq!(
            back,
            Snapshot {
                state: s.clone(),
                alpha: 1.25
            }
        );
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_snapshot(&bad),
            Err(SnapshotError::BadMagic(_))
        ));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(
            decode_snapshot(&bad),
            Err(SnapshotError::Version(2))
        ));
        assert!(matches!(
            decode_snapshot(&bytes[..bytes.len() - 5]),
            Err(SnapshotError::Truncated { .. })
        ));
        assert!(matches!(
            decode_snapshot(&bytes[..20]),
            Err(SnapshotError::Truncated { .. })
        ));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        write_snapshot(&p, &s, 1.0).unwrap();
        assert_eq!(read_snapshot(&p).unwrap().state, s);
    }

    #[test]
    fn telemetry_round_trip() {
        let r = record(&sample_state(), 1.0).unwrap();
        let mut w = TelemetryWriter::new(Vec::new()).unwrap();
        w.write(&r).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let rows = parse_telemetry(&text).unwrap();
        assert_eq!(rows.len(), 1);
        let want = [
            r.time,
            r.l2,
            r.linf,
            r.grad_sup,
            r.h_norms[0],
            r.h_norms[1],
            r.h_norms[2],
            r.h_norms[3],
            r.maxpoint_lambda,
        ];
        assert_eq!(rows[0], want);
    }

    #[test]
    fn manifest_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        fs::write(&p, "abc").unwrap();
        let mut m = RunManifest::new(SolverConfig::default(), "zonal:2".into());
        m.add_file(dir.path(), &p).unwrap();
        assert_eq!(
            m.files[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(m.verify(dir.path()).is_empty());
        let back = RunManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        fs::write(&p, "abd").unwrap();
        assert_eq!(m.verify(dir.path()), vec![PathBuf::from("a.txt")]);
    }
}
