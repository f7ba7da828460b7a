//! Versioned on-disk format for traced branches.
//!
//! A branch file is a CSV body preceded by `# key: value` header lines:
//!
//! ```text
//! # spiralwave branch file
//! # format_version: 1
//! # config: {...}             compact JSON echo of the run configuration
//! # termination: norm-ceiling
//! # near_singular: [...]
//! # points: 12
//! # body_sha256: <hex>
//! step,alpha,beta,sup_norm,l2_norm,residual,arclength
//! 0,...
//! ```
//!
//! Profiles go to a companion `*.profile.csv` with rows `step,node,r,re,im`.
//! Numbers are written in Rust's shortest round-trip form, so parsing
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use spiralwave::continuation::{NearSingularEvent, Termination};
use spiralwave::{Branch, BranchPoint, Complex64, RadialProfile};

use crate::config::BranchConfig;
use crate::error::CliError;
use crate::write_atomic;

pub const FORMAT_VERSION: u32 = 1;
const BRANCH_MAGIC: &str = "# spiralwave branch file";
const PROFILE_MAGIC: &str = "# spiralwave profile file";
const BRANCH_COLUMNS: &str = "step,alpha,beta,sup_norm,l2_norm,residual,arclength";
const PROFILE_COLUMNS: &str = "step,node,r,re,im";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRow {
    pub step: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sup_norm: f64,
    pub l2_norm: f64,
    pub residual: f64,
    pub arclength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchFile {
    pub format_version: u32,
    pub config: BranchConfig,
    pub termination: Termination,
    pub near_singular: Vec<NearSingularEvent<f64>>,
    pub rows: Vec<BranchRow>,
    /// One profile per row, when the companion file is present.
    pub profiles: Option<Vec<RadialProfile>>,
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn malformed(what: &str, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{what} line {line}: {msg}"))
}

type Headers<'a> = Vec<(&'a str, &'a str)>;

/// Splits `text` into `# key: value` headers and the body that follows.
fn split_header<'a>(text: &'a str, magic: &str, what: &str) -> Result<(Headers<'a>, &'a str), CliError> {
    let mut offset = 0;
    let mut headers = Vec::new();
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        if !raw.starts_with('#') {
            break;
        }
        offset += raw.len();
        let line = raw.trim_end_matches('\n');
        if i == 0 {
            if line != magic {
                return Err(malformed(what, 1, format!("expected `{magic}`")));
            }
            continue;
        }
        let (key, value) = line[1..]
            .trim_start()
            .split_once(": ")
            .ok_or_else(|| malformed(what, i + 1, "header is not `# key: value`"))?;
        headers.push((key, value));
    }
    if offset == 0 {
        return Err(malformed(what, 1, format!("expected `{magic}`")));
    }
    Ok((headers, &text[offset..]))
}

fn header<'a>(headers: &[(&str, &'a str)], key: &str, what: &str) -> Result<&'a str, CliError> {
    headers
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| CliError::Usage(format!("{what}: missing `{key}` header")))
}

fn check_version(headers: &[(&str, &str)], what: &str) -> Result<u32, CliError> {
    let v: u32 = header(headers, "format_version", what)?
        .parse()
        .map_err(|e| CliError::Usage(format!("{what}: format_version: {e}")))?;
    if v != FORMAT_VERSION {
        return Err(CliError::Usage(format!(
            "{what}: unsupported format_version {v} (this build reads {FORMAT_VERSION})"
        )));
    }
    Ok(v)
}

/// Parses the CSV body, checking the column header and field count.
fn body_rows<'a>(
    body: &'a str,
    columns: &str,
    first_line: usize,
    what: &str,
) -> Result<Vec<(usize, Vec<&'a str>)>, CliError> {
    let mut lines = body.lines();
    if lines.next() != Some(columns) {
        return Err(malformed(
            what,
            first_line,
            format!("expected column header `{columns}`"),
        ));
    }
    let width = columns.split(',').count();
    lines
        .enumerate()
        .map(|(i, l)| {
            let line = first_line + 1 + i;
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != width {
                return Err(malformed(
                    what,
                    line,
                    format!("expected {width} fields, got {}", fields.len()),
                ));
            }
            Ok((line, fields))
        })
        .collect()
}

fn field<T: std::str::FromStr>(fields: &[&str], i: usize, line: usize, what: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    fields[i]
        .parse()
        .map_err(|e| malformed(what, line, format!("column {}: `{}`: {e}", i + 1, fields[i])))
}

impl BranchFile {
    pub fn from_branch(config: &BranchConfig, branch: &Branch) -> Self {
        BranchFile {
            format_version: FORMAT_VERSION,
            config: config.clone(),
            termination: branch.termination,
            near_singular: branch.near_singular.clone(),
            rows: branch
                .points
                .iter()
                .enumerate()
                .map(|(step, p)| BranchRow {
                    step,
                    alpha: p.alpha,
                    beta: p.beta,
                    sup_norm: p.sup_norm,
                    l2_norm: p.l2_norm,
                    residual: p.residual,
                    arclength: p.arclength,
                })
                .collect(),
            profiles: Some(branch.points.iter().map(|p| p.profile.clone()).collect()),
        }
    }

    /// Rebuilds the branch; needs the profiles.
    pub fn to_branch(&self) -> Result<Branch, CliError> {
        let profiles = self
            .profiles
            .as_ref()
            .ok_or_else(|| CliError::Usage("branch has no profile data".into()))?;
        Ok(Branch {
            mode: self.config.mode,
            params: self.config.params()?,
            nonlinearity: self.config.nonlinearity.build()?.id().to_string(),
            grid: self.config.grid()?,
            points: self
                .rows
                .iter()
                .zip(profiles)
                .map(|(r, p)| BranchPoint {
                    alpha: r.alpha,
                    beta: r.beta,
                    profile: p.clone(),
                    sup_norm: r.sup_norm,
                    l2_norm: r.l2_norm,
                    residual: r.residual,
                    arclength: r.arclength,
                })
                .collect(),
            termination: self.termination,
            near_singular: self.near_singular.clone(),
        })
    }

    /// Column header and data rows, the hashed part of the branch file.
    pub fn body(&self) -> String {
        let mut out = String::new();
        out.push_str(BRANCH_COLUMNS);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.step,
                num(r.alpha),
                num(r.beta),
                num(r.sup_norm),
                num(r.l2_norm),
                num(r.residual),
                num(r.arclength)
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let body = self.body();
        let config = serde_json::to_string(&self.config).expect("config serialises");
        let events = serde_json::to_string(&self.near_singular).expect("events serialise");
        format!(
            "{BRANCH_MAGIC}\n# format_version: {}\n# config: {config}\n# termination: {}\n# near_singular: {events}\n# points: {}\n# body_sha256: {}\n{body}",
            self.format_version,
            self.termination,
            self.rows.len(),
            sha256_hex(body.as_bytes()),
        )
    }

    /// Companion profile file, or `None` when profiles are absent.
    pub fn profile_text(&self) -> Option<String> {
        let profiles = self.profiles.as_ref()?;
        let mut body = String::new();
        body.push_str(PROFILE_COLUMNS);
        body.push('\n');
        for (step, p) in profiles.iter().enumerate() {
            let first = spiralwave::RadialGrid::first_node(p.m);
            let radii = p.radii();
            for (k, (v, r)) in p.values.iter().zip(&radii).enumerate() {
                let _ = writeln!(body, "{step},{},{},{},{}", k + first, num(*r), num(v.re), num(v.im));
            }
        }
        Some(format!(
            "{PROFILE_MAGIC}\n# format_version: {}\n# branch_body_sha256: {}\n# body_sha256: {}\n{body}",
            self.format_version,
            sha256_hex(self.body().as_bytes()),
            sha256_hex(body.as_bytes())
        ))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        const WHAT: &str = "branch file";
        let (headers, body) = split_header(text, BRANCH_MAGIC, WHAT)?;
        let format_version = check_version(&headers, WHAT)?;
        let config: BranchConfig = serde_json::from_str(header(&headers, "config", WHAT)?)
            .map_err(|e| CliError::Usage(format!("{WHAT}: config header: {e}")))?;
        let termination = header(&headers, "termination", WHAT)?
            .parse()
            .map_err(|e| CliError::Usage(format!("{WHAT}: {e}")))?;
        let near_singular = serde_json::from_str(header(&headers, "near_singular", WHAT)?)
            .map_err(|e| CliError::Usage(format!("{WHAT}: near_singular header: {e}")))?;
        let expected = header(&headers, "body_sha256", WHAT)?;
        let actual = sha256_hex(body.as_bytes());
        if expected != actual {
            return Err(CliError::Usage(format!(
                "{WHAT}: body hash mismatch (header {expected}, body {actual})"
            )));
        }
        let first = headers.len() + 2;
        let mut rows = Vec::new();
        for (line, f) in body_rows(body, BRANCH_COLUMNS, first, WHAT)? {
            let row = BranchRow {
                step: field(&f, 0, line, WHAT)?,
                alpha: field(&f, 1, line, WHAT)?,
                beta: field(&f, 2, line, WHAT)?,
                sup_norm: field(&f, 3, line, WHAT)?,
                l2_norm: field(&f, 4, line, WHAT)?,
                residual: field(&f, 5, line, WHAT)?,
                arclength: field(&f, 6, line, WHAT)?,
            };
            if row.step != rows.len() {
                return Err(malformed(
                    WHAT,
                    line,
                    format!("expected step {}, got {}", rows.len(), row.step),
                ));
            }
            rows.push(row);
        }
        let declared: usize = header(&headers, "points", WHAT)?
            .parse()
            .map_err(|e| CliError::Usage(format!("{WHAT}: points: {e}")))?;
        if declared != rows.len() {
            return Err(CliError::Usage(format!(
                "{WHAT}: header declares {declared} points, body has {}",
                rows.len()
            )));
        }
        Ok(BranchFile {
            format_version,
            config,
            termination,
            near_singular,
            rows,
            profiles: None,
        })
    }

    /// Attaches profiles parsed from the companion file.
    pub fn attach_profiles(&mut self, text: &str) -> Result<(), CliError> {
        const WHAT: &str = "profile file";
        let (headers, body) = split_header(text, PROFILE_MAGIC, WHAT)?;
        check_version(&headers, WHAT)?;
        let branch_hash = sha256_hex(self.body().as_bytes());
        if header(&headers, "branch_body_sha256", WHAT)? != branch_hash {
            return Err(CliError::Usage(format!("{WHAT}: belongs to a different branch file")));
        }
        if header(&headers, "body_sha256", WHAT)? != sha256_hex(body.as_bytes()) {
            return Err(CliError::Usage(format!("{WHAT}: body hash mismatch")));
        }
        let grid = self.config.grid()?;
        let m = self.config.mode.m;
        let first_node = spiralwave::RadialGrid::first_node(m);
        let width = grid.unknowns(m);
        let mut values: Vec<Vec<Complex64>> = vec![Vec::with_capacity(width); self.rows.len()];
        for (line, f) in body_rows(body, PROFILE_COLUMNS, headers.len() + 2, WHAT)? {
            let step: usize = field(&f, 0, line, WHAT)?;
            let node: usize = field(&f, 1, line, WHAT)?;
            let slot = values
                .get_mut(step)
                .ok_or_else(|| malformed(WHAT, line, format!("step {step} out of range")))?;
            if node != first_node + slot.len() {
                return Err(malformed(WHAT, line, format!("unexpected node {node}")));
            }
            slot.push(Complex64::new(field(&f, 3, line, WHAT)?, field(&f, 4, line, WHAT)?));
        }
        let profiles = values
            .into_iter()
            .map(|v| RadialProfile::new(m, grid, v).map_err(|e| CliError::Usage(format!("{WHAT}: {e}"))))
            .collect::<Result<_, _>>()?;
        self.profiles = Some(profiles);
        Ok(())
    }

    pub fn profile_path(path: &Path) -> PathBuf {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        path.with_file_name(format!("{stem}.profile.csv"))
    }

    /// Writes the branch file and, if present, its profile companion.
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.to_text().as_bytes())?;
        if let Some(p) = self.profile_text() {
            write_atomic(&Self::profile_path(path), p.as_bytes())?;
        }
        Ok(())
    }

    /// Reads a branch file plus its companion profile file when it exists.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read branch file {}: {e}", path.display())))?;
        let mut file = Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let companion = Self::profile_path(path);
        if companion.exists() {
            let text = std::fs::read_to_string(&companion).map_err(CliError::io(companion.display().to_string()))?;
            file.attach_profiles(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", companion.display())))?;
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NonlinearitySpec;
    use spiralwave::continuation::continue_branch;
    use spiralwave::{ContinuationConfig, ModeIndex, SolverConfig};

    fn sample() -> (BranchConfig, Branch) {
        let cfg = BranchConfig {
            eta: 0.1,
            omega: 1.0,
            mode: ModeIndex::new(1, 0),
            nonlinearity: NonlinearitySpec::Cubic,
            grid_points: 24,
            continuation: ContinuationConfig {
                max_steps: 4,
                ..Default::default()
            },
            solver: SolverConfig::default(),
        };
        let b = continue_branch(
            &cfg.params().unwrap(),
            cfg.mode,
            cfg.grid().unwrap(),
            &cfg.nonlinearity.build().unwrap(),
            &cfg.continuation,
            &cfg.solver,
        )
        .unwrap();
        (cfg, b)
    }

    fn bits(b: &Branch) -> Vec<u64> {
        b.points
            .iter()
            .flat_map(|p| {
                [p.alpha, p.beta, p.sup_norm, p.l2_norm, p.residual, p.arclength]
                    .into_iter()
                    .chain(p.profile.values.iter().flat_map(|z| [z.re, z.im]))
            })
            .map(f64::to_bits)
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (cfg, b) = sample();
        let file = BranchFile::from_branch(&cfg, &b);
        let mut back = BranchFile::parse(&file.to_text()).unwrap();
        back.attach_profiles(&file.profile_text().unwrap()).unwrap();
        assert_eq!(back, file);
        let rebuilt = back.to_branch().unwrap();
        assert_eq!(bits(&rebuilt), bits(&b));
        assert_eq!(rebuilt, b);
        assert_eq!(back.to_text(), file.to_text());
    }

    #[test]
    fn extreme_numbers_survive() {
        let (cfg, b) = sample();
        let mut file = BranchFile::from_branch(&cfg, &b);
        file.profiles = None;
        for (r, v) in file.rows.iter_mut().zip([1e-300, -0.0, 5e-324, f64::MAX]) {
            r.residual = v;
        }
        let back = BranchFile::parse(&file.to_text()).unwrap();
        for (a, b) in back.rows.iter().zip(&file.rows) {
            assert_eq!(a.residual.to_bits(), b.residual.to_bits());
        }
    }

    #[test]
    fn tampering_is_detected() {
        let (cfg, b) = sample();
        let file = BranchFile::from_branch(&cfg, &b);
        let text = file.to_text();
        let last_digit = text.rfind(|c: char| c.is_ascii_digit()).unwrap();
        let mut tampered = text.clone();
        let d = if &text[last_digit..=last_digit] == "1" {
            "2"
        } else {
            "1"
        };
        tampered.replace_range(last_digit..=last_digit, d);
        assert!(BranchFile::parse(&tampered)
            .unwrap_err()
            .to_string()
            .contains("hash mismatch"));

        let bad_version = text.replace("# format_version: 1", "# format_version: 9");
        assert!(BranchFile::parse(&bad_version)
            .unwrap_err()
            .to_string()
            .contains("format_version"));
        assert!(BranchFile::parse("step,alpha\n").is_err());

        let mut other = file.clone();
        other.rows.pop();
        let mut parsed = BranchFile::parse(&text).unwrap();
        assert!(parsed.attach_profiles(&other.profile_text().unwrap()).is_err());
    }

    #[test]
    fn files_on_disk() {
        let (cfg, b) = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("branch.csv");
        BranchFile::from_branch(&cfg, &b).write(&path).unwrap();
        assert!(dir.path().join("branch.profile.csv").exists());
        let back = BranchFile::read(&path).unwrap();
        assert_eq!(back.to_branch().unwrap(), b);
        let names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 2, "no temporary files left behind: {names:?}");
    }
}
