//! On-disk formats.
//!
//! A field file is a header line `ns-field v1 l=<period> cutoff=<cutoff>`
//! followed by one `j1,j2,variant,coefficient` row per canonical mode.
//! Reals are written in Rust's shortest round-trip form, so reading a file
//! back reproduces every coefficient bit for bit.
//!
//! A trajectory is a directory holding `meta.json` and one field file per
//! sample. A ladder run is a directory with `ladder.json`, the forcing and
//! initial state, and `level<k>/{p,q,u}` trajectory directories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::{spectral_params, ModeIndex, SpectralField, SpectralParams, Variant};
use crate::error::{Error, Result};
use crate::integrate::{Provenance, Trajectory};
use crate::ladder::{LadderResult, LevelRecord};
use crate::problem::ProblemSpec;

const FIELD_MAGIC: &str = "ns-field v1";

pub fn field_to_string(f: &SpectralField) -> String {
    let mut s = format!("{FIELD_MAGIC} l={:?} cutoff={}\n", f.period(), f.cutoff());
    for (mode, c) in f.iter() {
        let _ = writeln!(s, "{},{},{},{:?}", mode.j1, mode.j2, mode.variant.code(), c);
    }
    s
}

pub fn field_from_str(text: &str, origin: &Path) -> Result<SpectralField> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        msg: format!("line {line}: {msg}"),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let rest = header
        .strip_prefix(FIELD_MAGIC)
        .ok_or_else(|| err(1, format!("expected header starting with {FIELD_MAGIC:?}")))?;
    let mut period = None;
    let mut cutoff = None;
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some(("l", v)) => period = v.parse::<f64>().ok(),
            Some(("cutoff", v)) => cutoff = v.parse::<usize>().ok(),
            _ => return Err(err(1, format!("unexpected header token {tok:?}"))),
        }
    }
    let period = period.ok_or_else(|| err(1, "missing or invalid l=".into()))?;
    let cutoff = cutoff.ok_or_else(|| err(1, "missing or invalid cutoff=".into()))?;
    let mut field = SpectralField::zeros(period, cutoff).map_err(|e| err(1, e.to_string()))?;
    for (n, line) in lines.enumerate() {
        let lineno = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(err(lineno, format!("expected 4 columns, got {}", cols.len())));
        }
        let j1: usize = cols[0].trim().parse().map_err(|_| err(lineno, "bad j1".into()))?;
        let j2: usize = cols[1].trim().parse().map_err(|_| err(lineno, "bad j2".into()))?;
        let v: u8 = cols[2].trim().parse().map_err(|_| err(lineno, "bad variant".into()))?;
        let variant = Variant::from_code(v).ok_or_else(|| err(lineno, format!("variant {v} not in 1..=4")))?;
        let c: f64 = cols[3].trim().parse().map_err(|_| err(lineno, "bad coefficient".into()))?;
        let mode = ModeIndex::new(j1, j2, variant).map_err(|e| err(lineno, e.to_string()))?;
        field.set(mode, c).map_err(|e| err(lineno, e.to_string()))?;
    }
    Ok(field)
}

pub fn write_field(path: &Path, f: &SpectralField) -> Result<()> {
    fs::write(path, field_to_string(f)).map_err(|e| Error::io(path, e))
}

pub fn read_field(path: &Path) -> Result<SpectralField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    field_from_str(&text, path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TrajectoryMeta {
    t0: f64,
    h: f64,
    count: usize,
    producer: String,
    level: Option<usize>,
    component: Option<String>,
    config_hash: String,
}

fn sample_name(i: usize) -> String {
    format!("sample_{i:06}.csv")
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    create_dir(dir)?;
    let meta = TrajectoryMeta {
        t0: traj.t0,
        h: traj.h,
        count: traj.len(),
        producer: traj.meta.producer.clone(),
        level: traj.meta.level,
        component: traj.meta.component.clone(),
        config_hash: traj.meta.config_hash.clone(),
    };
    write_json(&dir.join("meta.json"), &meta)?;
    for (i, s) in traj.samples().iter().enumerate() {
        write_field(&dir.join(sample_name(i)), s)?;
    }
    Ok(())
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let meta: TrajectoryMeta = read_json(&dir.join("meta.json"))?;
    let samples = (0..meta.count)
        .map(|i| read_field(&dir.join(sample_name(i))))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(
        meta.t0,
        meta.h,
        samples,
        Provenance {
            producer: meta.producer,
            level: meta.level,
            component: meta.component,
            config_hash: meta.config_hash,
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecEcho {
    pub period: f64,
    pub nu: f64,
    pub m: usize,
    pub m_out: usize,
    pub t_end: f64,
    pub h: f64,
    pub levels: usize,
    pub fingerprint: String,
}

impl SpecEcho {
    pub fn of(spec: &ProblemSpec) -> Self {
        SpecEcho {
            period: spec.period,
            nu: spec.nu,
            m: spec.m,
            m_out: spec.m_out,
            t_end: spec.t_end,
            h: spec.h,
            levels: spec.levels,
            fingerprint: spec.fingerprint(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelManifest {
    pub k: usize,
    pub wall_clock_s: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderManifest {
    pub spec: SpecEcho,
    pub params: SpectralParams,
    pub levels: Vec<LevelManifest>,
}

impl LadderManifest {
    pub fn of(result: &LadderResult) -> Self {
        LadderManifest {
            spec: SpecEcho::of(&result.spec),
            params: result.params,
            levels: result
                .levels
                .iter()
                .map(|l| LevelManifest {
                    k: l.k,
                    wall_clock_s: l.wall_clock_s,
                    samples: l.u.len(),
                })
                .collect(),
        }
    }
}

fn level_dir(root: &Path, k: usize, component: &str) -> PathBuf {
    root.join(format!("level{k}")).join(component)
}

/// Manifest only, without the trajectories.
pub fn write_ladder_manifest(dir: &Path, result: &LadderResult) -> Result<()> {
    create_dir(dir)?;
    write_json(&dir.join("ladder.json"), &LadderManifest::of(result))
}

pub fn write_ladder(dir: &Path, result: &LadderResult) -> Result<()> {
    write_ladder_manifest(dir, result)?;
    write_field(&dir.join("forcing.csv"), &result.spec.forcing)?;
    write_field(&dir.join("initial.csv"), &result.spec.initial)?;
    for level in &result.levels {
        write_trajectory(&level_dir(dir, level.k, "p"), &level.p)?;
        write_trajectory(&level_dir(dir, level.k, "q"), &level.q)?;
        write_trajectory(&level_dir(dir, level.k, "u"), &level.u)?;
    }
    Ok(())
}

pub fn read_ladder(dir: &Path) -> Result<LadderResult> {
    let manifest: LadderManifest = read_json(&dir.join("ladder.json"))?;
    let e = &manifest.spec;
    let spec = ProblemSpec {
        period: e.period,
        nu: e.nu,
        forcing: read_field(&dir.join("forcing.csv"))?,
        m: e.m,
        m_out: e.m_out,
        t_end: e.t_end,
        h: e.h,
        initial: read_field(&dir.join("initial.csv"))?,
        levels: e.levels,
    };
    spec.validate()?;
    let levels = manifest
        .levels
        .iter()
        .map(|l| {
            Ok(LevelRecord {
                k: l.k,
                p: read_trajectory(&level_dir(dir, l.k, "p"))?,
                q: read_trajectory(&level_dir(dir, l.k, "q"))?,
                u: read_trajectory(&level_dir(dir, l.k, "u"))?,
                wall_clock_s: l.wall_clock_s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let params = spectral_params(spec.m, spec.period)?;
    Ok(LadderResult { levels, spec, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::random_field;

    #[test]
    fn field_text_layout() {
        let mode = ModeIndex::new(1, 0, Variant::SinPlus).unwrap();
        let f = SpectralField::single_mode(1.0, 1, mode, 0.1).unwrap();
        let text = field_to_string(&f);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("ns-field v1 l=1.0 cutoff=1"));
        assert_eq!(lines.next(), Some("0,1,1,0.0"));
        assert!(text.contains("\n1,0,1,0.1\n"));
        assert_eq!(text.lines().count(), 1 + 8);
    }

    #[test]
    fn field_round_trips_exactly() {
        let f = random_field(std::f64::consts::TAU, 5, 17, 1.3).unwrap().scaled(1e-7);
        let back = field_from_str(&field_to_string(&f), Path::new("mem")).unwrap();
        assert_eq!(back.period().to_bits(), f.period().to_bits());
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn malformed_fields_are_rejected() {
        let p = Path::new("mem");
        assert!(field_from_str("", p).is_err());
        assert!(field_from_str("ns-field v2 l=1 cutoff=1\n", p).is_err());
        assert!(field_from_str("ns-field v1 l=1 cutoff=1\n0,1,2,1.0\n", p).is_err());
        assert!(field_from_str("ns-field v1 l=1 cutoff=1\n2,1,1,1.0\n", p).is_err());
        assert!(field_from_str("ns-field v1 l=1 cutoff=1\n1,1,1,nan\n", p).is_err());
        assert!(field_from_str("ns-field v1 l=1 cutoff=1\n1,1,1\n", p).is_err());
        let ok = field_from_str("ns-field v1 l=1 cutoff=1\n1,1,4,-2.5\n", p).unwrap();
        assert_eq!(ok.get(ModeIndex::new(1, 1, Variant::CosMinus).unwrap()), -2.5);
    }
}
