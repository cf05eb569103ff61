//! Columnar text format for radial states and profiles.
//!
//! A file starts with `# key=value` header lines and continues with one row
//! per grid node holding `r u u_hat theta Theta E_r phi`. Node fields are
//! sampled at `r`; `E_r` is the face value at `r + dr/2` (the last row holds
//! the field at `r_max`), which the header records as `e_r_at=faces`.
//! Floats are written with 17 significant digits so that reading a file back
//! reproduces every sample bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::fields::FieldState;
use crate::grid::{GridError, RadialGrid};
use crate::solver::SolitonProfile;

pub const FORMAT_NAME: &str = "qball-profile";
pub const COLUMNS: [&str; 7] = ["r", "u", "u_hat", "theta", "Theta", "E_r", "phi"];

/// Relative tolerance when checking the `r` column against the grid.
const RADIUS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileIoError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing header key `{0}`")]
    MissingKey(&'static str),
    #[error("header key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("header declares {declared} rows, file has {found}")]
    RowCount { declared: usize, found: usize },
    #[error("line {line}: radius {found} does not match grid node {expected}")]
    RadiusMismatch { line: usize, found: f64, expected: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // Keeps the sign of negative zero.
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

/// Header metadata. `omega` and `delta` are absent for plain states.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMeta {
    pub q: f64,
    pub m: Option<f64>,
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    /// Keys not interpreted by the reader, in sorted order.
    pub extra: BTreeMap<String, String>,
}

/// Parsed contents of a profile file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFile {
    pub meta: ProfileMeta,
    pub state: FieldState,
    pub phi: Vec<f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), fmt_f64)
}

/// Serializes a state and its potential.
pub fn write_state(state: &FieldState, phi: &[f64], meta: &ProfileMeta) -> String {
    let g = &state.grid;
    let mut out = String::new();
    let mut header = |k: &str, v: String| {
        let _ = writeln!(out, "# {k}={v}");
    };
    header("format", FORMAT_NAME.into());
    header("q", fmt_f64(meta.q));
    header("m", opt(meta.m));
    header("omega", opt(meta.omega));
    header("delta", opt(meta.delta));
    header("r_max", fmt_f64(g.r_max()));
    header("n", g.n().to_string());
    header("e_r_at", "faces".into());
    for (k, v) in &meta.extra {
        header(k, v.clone());
    }
    header("columns", COLUMNS.join(" "));
    for i in 0..g.n() {
        let row = [
            g.radius(i),
            state.u[i],
            state.u_hat[i],
            state.theta[i],
            state.theta_vec[i],
            state.e_r[i],
            phi[i],
        ];
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

/// Serializes a soliton profile with its functionals in the header.
pub fn write_profile(p: &SolitonProfile, m: f64) -> String {
    let mut extra = BTreeMap::new();
    for (k, v) in [
        ("energy", p.energy),
        ("charge", p.charge),
        ("ratio", p.ratio),
        ("res1", p.res1),
        ("res2", p.res2),
        ("omega_fit_residual", p.omega_fit_residual),
    ] {
        extra.insert(k.to_string(), fmt_f64(v));
    }
    let meta = ProfileMeta {
        q: p.q,
        m: Some(m),
        omega: Some(p.omega),
        delta: p.delta,
        extra,
    };
    write_state(&p.field_state(), &p.phi, &meta)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ProfileIoError> {
    value.parse::<f64>().map_err(|_| ProfileIoError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

fn parse_opt(key: &str, value: Option<&String>) -> Result<Option<f64>, ProfileIoError> {
    match value.map(String::as_str) {
        None | Some("none") => Ok(None),
        Some(v) => parse_f64(key, v).map(Some),
    }
}

/// Parses a profile file. Never panics on malformed input.
pub fn read_profile(text: &str) -> Result<ProfileFile, ProfileIoError> {
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut rows: Vec<(usize, [f64; 7])> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(body) = trimmed.strip_prefix('#') {
            if !rows.is_empty() {
                return Err(ProfileIoError::Syntax {
                    line,
                    message: "header line after data rows".into(),
                });
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ProfileIoError::Syntax {
                    line,
                    message: "header line is not `# key=value`".into(),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ProfileIoError::Syntax {
                    line,
                    message: "empty header key".into(),
                });
            }
            if header.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ProfileIoError::Syntax {
                    line,
                    message: format!("duplicate header key `{k}`"),
                });
            }
            continue;
        }
        let mut row = [0.0; 7];
        let mut cells = trimmed.split_whitespace();
        for (j, slot) in row.iter_mut().enumerate() {
            let cell = cells.next().ok_or_else(|| ProfileIoError::Syntax {
                line,
                message: format!("expected 7 columns, found {j}"),
            })?;
            *slot = cell.parse().map_err(|_| ProfileIoError::Syntax {
                line,
                message: format!("column `{}`: cannot parse `{cell}`", COLUMNS[j]),
            })?;
        }
        if cells.next().is_some() {
            return Err(ProfileIoError::Syntax {
                line,
                message: "more than 7 columns".into(),
            });
        }
        rows.push((line, row));
    }

    if let Some(f) = header.get("format") {
        if f != FORMAT_NAME {
            return Err(ProfileIoError::BadValue {
                key: "format".into(),
                value: f.clone(),
            });
        }
    }
    let get = |k: &'static str| header.get(k).ok_or(ProfileIoError::MissingKey(k));
    let q = parse_f64("q", get("q")?)?;
    let r_max = parse_f64("r_max", get("r_max")?)?;
    let n_text = get("n")?;
    let n: usize = n_text.parse().map_err(|_| ProfileIoError::BadValue {
        key: "n".into(),
        value: n_text.clone(),
    })?;
    if let Some(at) = header.get("e_r_at") {
        if at != "faces" {
            return Err(ProfileIoError::BadValue {
                key: "e_r_at".into(),
                value: at.clone(),
            });
        }
    }
    if rows.len() != n {
        return Err(ProfileIoError::RowCount {
            declared: n,
            found: rows.len(),
        });
    }
    let grid = Arc::new(RadialGrid::new(r_max, n)?);
    for (i, (line, row)) in rows.iter().enumerate() {
        let expected = grid.radius(i);
        if !((row[0] - expected).abs() <= RADIUS_TOL * r_max) {
            return Err(ProfileIoError::RadiusMismatch {
                line: *line,
                found: row[0],
                expected,
            });
        }
    }
    let column = |j: usize| rows.iter().map(|(_, r)| r[j]).collect::<Vec<f64>>();
    let state = FieldState {
        u: column(1),
        u_hat: column(2),
        theta: column(3),
        theta_vec: column(4),
        e_r: column(5),
        q,
        grid,
    };
    let meta = ProfileMeta {
        q,
        m: parse_opt("m", header.get("m"))?,
        omega: parse_opt("omega", header.get("omega"))?,
        delta: parse_opt("delta", header.get("delta"))?,
        extra: header
            .iter()
            .filter(|(k, _)| {
                !matches!(
                    k.as_str(),
                    "format" | "q" | "m" | "omega" | "delta" | "r_max" | "n" | "e_r_at" | "columns"
                )
            })
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect(),
    };
    Ok(ProfileFile {
        meta,
        phi: column(6),
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_state(n: usize) -> (FieldState, Vec<f64>) {
        let grid = Arc::new(RadialGrid::new(10.0, n).unwrap());
        let mut s = FieldState::zeros(grid.clone(), 0.1);
        s.u = grid.sample(|r| (-r * r).exp());
        s.theta = grid.sample(|r| -0.8 * (-r * r).exp() / 3.0);
        s.e_r = grid.sample_faces(|r| 1.0 / (1.0 + r * r));
        (s, grid.sample(|r| 1.0 / (1.0 + r)))
    }

    fn meta() -> ProfileMeta {
        ProfileMeta {
            q: 0.1,
            m: Some(1.0),
            omega: Some(0.8),
            delta: None,
            extra: BTreeMap::new(),
        }
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, -0.0] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn header_and_columns_follow_the_layout() {
        let (s, phi) = sample_state(5);
        let text = write_state(&s, &phi, &meta());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# format=qball-profile");
        assert!(lines.contains(&"# delta=none"));
        assert!(lines.contains(&"# e_r_at=faces"));
        assert!(lines.contains(&"# columns=r u u_hat theta Theta E_r phi"));
        assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 5);
    }

    #[test]
    fn round_trip_is_exact() {
        let (s, phi) = sample_state(50);
        let mut m = meta();
        m.extra.insert("energy".into(), fmt_f64(12.5));
        let text = write_state(&s, &phi, &m);
        let back = read_profile(&text).unwrap();
        assert_eq!(back.state, s);
        assert_eq!(back.phi, phi);
        assert_eq!(back.meta, m);
    }

    #[test]
    fn rejects_malformed_files() {
        let (s, phi) = sample_state(4);
        let good = write_state(&s, &phi, &meta());
        let cases = [
            good.replace("# n=4", "# n=5"),
            good.replace("# q=", "# q_missing="),
            good.replace("# e_r_at=faces", "# e_r_at=nodes"),
            format!("{good}# late=1\n"),
            good.replacen("0 ", "zero ", 1),
            format!("{good}1 2 3\n"),
            good.replace("# format=qball-profile", "# format=other"),
        ];
        for (i, bad) in cases.iter().enumerate() {
            assert!(read_profile(bad).is_err(), "case {i} accepted");
        }
    }

    proptest! {
        #[test]
        fn arbitrary_samples_round_trip(
            vals in proptest::collection::vec(-1e6f64..1e6, 6 * 8),
            q in 0.0f64..2.0,
        ) {
            let grid = Arc::new(RadialGrid::new(7.5, 8).unwrap());
            let mut s = FieldState::zeros(grid, q);
            for i in 0..8 {
                s.u[i] = vals[i];
                s.u_hat[i] = vals[8 + i];
                s.theta[i] = vals[16 + i];
                s.theta_vec[i] = vals[24 + i];
                s.e_r[i] = vals[32 + i];
            }
            let phi = vals[40..48].to_vec();
            let m = ProfileMeta { q, m: None, omega: None, delta: Some(1e-4), extra: BTreeMap::new() };
            let back = read_profile(&write_state(&s, &phi, &m)).unwrap();
            prop_assert_eq!(back.state, s);
            prop_assert_eq!(back.phi, phi);
            prop_assert_eq!(back.meta, m);
        }

        #[test]
        fn reader_never_panics(text in "(# [a-z_]{1,6}=[0-9a-z.e-]{0,8}\n){0,6}([0-9.e -]{0,40}\n){0,4}") {
            let _ = read_profile(&text);
        }
    }
}
