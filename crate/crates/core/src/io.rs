//! Flat-file emission and parsing: learning-curve and sweep CSVs plus the
//! run manifest that makes every data file reproducible.

use crate::error::{Error, Result};
use crate::harness::SweepRow;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Significant digits written to data files.
pub const CSV_SIG_DIGITS: usize = 6;

/// Render with a fixed number of significant digits, plain decimal where
/// reasonable and scientific notation for extreme magnitudes.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -4 || exp >= sig as i32 + 4 {
        format!("{:.*e}", sig - 1, x)
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    }
}

/// Write a learning curve as `iteration,msd_db`.
pub fn write_curve_csv(path: &Path, msd_db: &[f64]) -> Result<()> {
    let mut text = String::with_capacity(16 * msd_db.len() + 32);
    text.push_str("iteration,msd_db\n");
    for (i, &v) in msd_db.iter().enumerate() {
        writeln!(text, "{},{}", i, fmt_sig(v, CSV_SIG_DIGITS)).expect("string write");
    }
    fs::write(path, text)?;
    Ok(())
}

/// Parse a curve CSV back into per-iteration values.
pub fn read_curve_csv(path: &Path) -> Result<Vec<(usize, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "iteration,msd_db" {
                return Err(Error::Config {
                    field: "csv header".into(),
                    message: format!("unexpected header `{line}`"),
                });
            }
            continue;
        }
        let (a, b) = line.split_once(',').ok_or_else(|| Error::Config {
            field: format!("csv line {}", lineno + 1),
            message: "expected two comma-separated columns".into(),
        })?;
        let iter: usize = a.parse().map_err(|_| Error::Config {
            field: format!("csv line {}", lineno + 1),
            message: format!("bad iteration `{a}`"),
        })?;
        let val: f64 = b.parse().map_err(|_| Error::Config {
            field: format!("csv line {}", lineno + 1),
            message: format!("bad value `{b}`"),
        })?;
        out.push((iter, val));
    }
    Ok(out)
}

/// Write a step-size sweep as `mu,sim_msd_db,theory_msd_db,stable`. Unstable
/// or diverged cells carry a flag word instead of a number.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut text = String::new();
    text.push_str("mu,sim_msd_db,theory_msd_db,stable\n");
    for row in rows {
        let sim = row
            .sim_msd_db
            .map(|v| fmt_sig(v, CSV_SIG_DIGITS))
            .unwrap_or_else(|| "diverged".into());
        let theory = row
            .theory_msd_db
            .map(|v| fmt_sig(v, CSV_SIG_DIGITS))
            .unwrap_or_else(|| "unstable".into());
        writeln!(
            text,
            "{},{},{},{}",
            fmt_sig(row.mu, CSV_SIG_DIGITS),
            sim,
            theory,
            row.stable
        )
        .expect("string write");
    }
    fs::write(path, text)?;
    Ok(())
}

/// Parse a sweep CSV back into rows.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "mu,sim_msd_db,theory_msd_db,stable" {
                return Err(Error::Config {
                    field: "csv header".into(),
                    message: format!("unexpected header `{line}`"),
                });
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Config {
                field: format!("csv line {}", lineno + 1),
                message: "expected four columns".into(),
            });
        }
        let parse_num = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Config {
                field: format!("csv line {}", lineno + 1),
                message: format!("bad {what} `{s}`"),
            })
        };
        let mu = parse_num(cols[0], "mu")?;
        let sim = if cols[1] == "diverged" {
            None
        } else {
            Some(parse_num(cols[1], "sim value")?)
        };
        let theory = if cols[2] == "unstable" {
            None
        } else {
            Some(parse_num(cols[2], "theory value")?)
        };
        let stable = match cols[3] {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Config {
                    field: format!("csv line {}", lineno + 1),
                    message: format!("bad stable flag `{other}`"),
                })
            }
        };
        out.push(SweepRow {
            mu,
            sim_msd_db: sim,
            theory_msd_db: theory,
            stable,
        });
    }
    Ok(out)
}

/// Everything needed to trace a set of data files back to the exact
/// command, configuration and seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub artifact_version: String,
    pub command: String,
    pub created_unix: u64,
    pub master_seed: u64,
    /// The fully resolved config (defaults included), echoed key by key.
    pub config_entries: Vec<(String, String)>,
    /// Data files emitted alongside this manifest.
    pub outputs: Vec<String>,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = String::new();
    text.push_str("# ptlms run manifest\n");
    writeln!(text, "artifact_version = {}", manifest.artifact_version).unwrap();
    writeln!(text, "command = {}", manifest.command).unwrap();
    writeln!(text, "created_unix = {}", manifest.created_unix).unwrap();
    writeln!(text, "master_seed = {}", manifest.master_seed).unwrap();
    for (k, v) in &manifest.config_entries {
        writeln!(text, "config.{k} = {v}").unwrap();
    }
    for (i, out) in manifest.outputs.iter().enumerate() {
        writeln!(text, "output.{i} = {out}").unwrap();
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)?;
    let mut manifest = Manifest {
        artifact_version: String::new(),
        command: String::new(),
        created_unix: 0,
        master_seed: 0,
        config_entries: Vec::new(),
        outputs: Vec::new(),
    };
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            field: line.to_string(),
            message: "manifest lines must be `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(cfg_key) = key.strip_prefix("config.") {
            manifest
                .config_entries
                .push((cfg_key.to_string(), value.to_string()));
        } else if key.starts_with("output.") {
            manifest.outputs.push(value.to_string());
        } else {
            match key {
                "artifact_version" => manifest.artifact_version = value.to_string(),
                "command" => manifest.command = value.to_string(),
                "created_unix" => {
                    manifest.created_unix = value.parse().map_err(|_| Error::Config {
                        field: "created_unix".into(),
                        message: format!("bad timestamp `{value}`"),
                    })?
                }
                "master_seed" => {
                    manifest.master_seed = value.parse().map_err(|_| Error::Config {
                        field: "master_seed".into(),
                        message: format!("bad seed `{value}`"),
                    })?
                }
                other => {
                    return Err(Error::Config {
                        field: other.to_string(),
                        message: "unknown manifest key".into(),
                    })
                }
            }
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_digit_formatting() {
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(-32.123449, 6), "-32.1234");
        assert_eq!(fmt_sig(0.0042160012, 6), "0.00421600");
        assert_eq!(fmt_sig(123456.7, 6), "123457");
        assert_eq!(fmt_sig(1.0e-7, 6), "1.00000e-7");
        assert_eq!(fmt_sig(2.0, 6), "2.00000");
    }

    #[test]
    fn curve_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        let values = vec![0.0, -3.01234567, -17.5, -120.25];
        write_curve_csv(&path, &values).unwrap();
        let back = read_curve_csv(&path).unwrap();
        assert_eq!(back.len(), values.len());
        for (i, (iter, v)) in back.iter().enumerate() {
            assert_eq!(*iter, i);
            // The reader recovers exactly what was printed.
            let expected: f64 = fmt_sig(values[i], CSV_SIG_DIGITS).parse().unwrap();
            assert_eq!(*v, expected);
        }
    }

    #[test]
    fn sweep_round_trip_with_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let rows = vec![
            SweepRow {
                mu: 0.0125,
                sim_msd_db: Some(-31.25),
                theory_msd_db: Some(-31.5),
                stable: true,
            },
            SweepRow {
                mu: 0.9,
                sim_msd_db: None,
                theory_msd_db: None,
                stable: false,
            },
        ];
        write_sweep_csv(&path, &rows).unwrap();
        let back = read_sweep_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back[0].stable);
        assert_eq!(back[0].sim_msd_db, Some(-31.25));
        assert!(!back[1].stable);
        assert_eq!(back[1].sim_msd_db, None);
        assert_eq!(back[1].theory_msd_db, None);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.txt");
        let manifest = Manifest {
            artifact_version: "0.1.0".into(),
            command: "simulate".into(),
            created_unix: 1_700_000_000,
            master_seed: 42,
            config_entries: vec![("l".into(), "32".into()), ("rules".into(), "plms".into())],
            outputs: vec!["curve_plms.csv".into()],
        };
        write_manifest(&path, &manifest).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), manifest);
    }
}
