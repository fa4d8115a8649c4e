//! Error tables, convergence-rate fits and small-scale diagnostics.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{delta, project, NormKind, Projection, SpectralField};
use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::ladder::LadderResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub m: usize,
    pub delta: f64,
    pub k: usize,
    pub norm: NormKind,
    /// Error at the final time.
    pub err_t: f64,
    /// Largest error over the grid times in `[t_skip, T]`.
    pub err_sup: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorMetric {
    #[serde(rename = "err_T")]
    AtEnd,
    #[serde(rename = "err_sup")]
    Sup,
}

impl ErrorRow {
    pub fn value(&self, metric: ErrorMetric) -> f64 {
        match metric {
            ErrorMetric::AtEnd => self.err_t,
            ErrorMetric::Sup => self.err_sup,
        }
    }
}

impl ErrorTable {
    pub fn extend(&mut self, other: ErrorTable) {
        self.rows.extend(other.rows);
        self.rows.sort_by_key(|r| (r.m, r.k, r.norm));
    }

    pub fn get(&self, m: usize, k: usize, norm: NormKind) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.m == m && r.k == k && r.norm == norm)
    }

    pub fn cutoffs(&self) -> Vec<usize> {
        let mut ms: Vec<_> = self.rows.iter().map(|r| r.m).collect();
        ms.dedup();
        ms
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,delta,k,norm,err_T,err_sup\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:?},{},{},{:?},{:?}", r.m, r.delta, r.k, r.norm, r.err_t, r.err_sup);
        }
        s
    }

    pub fn from_csv(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::Parse {
            path: origin.to_path_buf(),
            msg: format!("line {line}: {msg}"),
        };
        let mut lines = text.lines();
        if lines.next() != Some("m,delta,k,norm,err_T,err_sup") {
            return Err(err(1, "unexpected header"));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 6 {
                return Err(err(i + 2, "expected 6 columns"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(i + 2, "bad number"));
            rows.push(ErrorRow {
                m: c[0].parse().map_err(|_| err(i + 2, "bad m"))?,
                delta: num(c[1])?,
                k: c[2].parse().map_err(|_| err(i + 2, "bad k"))?,
                norm: c[3].parse()?,
                err_t: num(c[4])?,
                err_sup: num(c[5])?,
            });
        }
        Ok(ErrorTable { rows })
    }
}

/// Reference value at `t`, exact when `t` is one of its grid times.
fn reference_at(reference: &Trajectory, t: f64) -> Result<SpectralField> {
    match reference.index_of(t) {
        Some(i) => Ok(reference.samples()[i].clone()),
        None => reference.sample_interpolate(t),
    }
}

/// Per-level, per-norm errors `u - u_k` at `T` and over `[t_skip, T]`.
///
/// The whole reference field enters the difference, so the part of the
/// solution beyond `m_out` counts against the method.
pub fn error_table(ladder: &LadderResult, reference: &Trajectory, t_skip: f64, norms: &[NormKind]) -> Result<ErrorTable> {
    let m = ladder.spec.m;
    let mut rows = Vec::new();
    for level in &ladder.levels {
        let u = &level.u;
        let mut sup = vec![0.0f64; norms.len()];
        let mut at_end = vec![0.0f64; norms.len()];
        for i in 0..u.len() {
            let t = u.time(i);
            if t < t_skip - 1e-9 * u.h && i + 1 != u.len() {
                continue;
            }
            let diff = reference_at(reference, t)?.sub(&u.samples()[i])?;
            for (j, norm) in norms.iter().enumerate() {
                let e = diff.norm(*norm);
                if !e.is_finite() {
                    return Err(Error::NonFinite { step: i, time: t });
                }
                sup[j] = sup[j].max(e);
                if i + 1 == u.len() {
                    at_end[j] = e;
                }
            }
        }
        for (j, norm) in norms.iter().enumerate() {
            rows.push(ErrorRow {
                m,
                delta: delta(m),
                k: level.k,
                norm: *norm,
                err_t: at_end[j],
                err_sup: sup[j],
            });
        }
    }
    let mut table = ErrorTable::default();
    table.extend(ErrorTable { rows });
    Ok(table)
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| {
            let ok = **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite();
            if !ok {
                log::warn!("dropping non-positive point ({x}, {y}) from log-log fit");
            }
            ok
        })
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a log-log fit needs at least 2 usable points, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    Ok(LogLogFit {
        slope,
        intercept: my - slope * mx,
        points: pts.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EocFit {
    pub k: usize,
    pub norm: NormKind,
    pub metric: ErrorMetric,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
    /// Rate `5/4 + k/2` expected for the L2 error.
    pub predicted_l2_slope: f64,
}

/// Slope of `ln(error)` against `ln(delta)` across the sweep.
pub fn eoc_fit(table: &ErrorTable, k: usize, norm: NormKind, metric: ErrorMetric) -> Result<EocFit> {
    let rows: Vec<_> = table.rows.iter().filter(|r| r.k == k && r.norm == norm).collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value(metric)).collect();
    let fit = fit_loglog(&xs, &ys)?;
    Ok(EocFit {
        k,
        norm,
        metric,
        slope: fit.slope,
        intercept: fit.intercept,
        points: fit.points,
        predicted_l2_slope: 1.25 + 0.5 * k as f64,
    })
}

/// Fits for every `(k, norm)` in the table that has enough points.
pub fn eoc_summary(table: &ErrorTable, metric: ErrorMetric) -> Vec<EocFit> {
    let mut keys: Vec<(usize, NormKind)> = table.rows.iter().map(|r| (r.k, r.norm)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|(k, norm)| match eoc_fit(table, k, norm, metric) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("no fit for k={k} {norm}: {e}");
                None
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub m: usize,
    pub delta: f64,
    /// `sup |Q_m u|` over `[t_skip, T]`.
    pub q_l2: f64,
    /// `sup ||Q_m u||`.
    pub q_h1: f64,
    /// `sup |Laplacian Q_m u|`.
    pub q_lap: f64,
    /// `sup |(Q_m u)'|` from backward differences.
    pub dq_l2: f64,
    /// `sup |P_q u|` and `sup ||P_q u||` when the split is requested.
    pub pq_l2: Option<f64>,
    pub pq_h1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagSlopes {
    pub q_l2: Option<f64>,
    pub q_h1: Option<f64>,
    pub q_lap: Option<f64>,
    pub dq_l2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallScaleDiagnostics {
    pub rows: Vec<DiagRow>,
    pub slopes: DiagSlopes,
}

impl SmallScaleDiagnostics {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,delta,q_l2,q_h1,q_lap,dq_l2,pq_l2,pq_h1\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:?},{:?},{:?},{:?},{:?},{},{}",
                r.m,
                r.delta,
                r.q_l2,
                r.q_h1,
                r.q_lap,
                r.dq_l2,
                opt(r.pq_l2),
                opt(r.pq_h1)
            );
        }
        s
    }
}

/// Sup-in-time norms of `q = Q_m u` along a resolved trajectory for every
/// `m`, with slopes fitted against `delta(m)`.
pub fn smallscale_diagnostics(reference: &Trajectory, m_list: &[usize], t_skip: f64, split: bool) -> Result<SmallScaleDiagnostics> {
    let m_ref = reference.cutoff();
    let mut rows = Vec::new();
    for &m in m_list {
        if m >= m_ref {
            return Err(Error::InvalidArgument(format!(
                "cutoff {m} is not below the reference cutoff {m_ref}"
            )));
        }
        if split && m % 2 != 0 {
            return Err(Error::OddCutoff(m));
        }
        let mut row = DiagRow {
            m,
            delta: delta(m),
            q_l2: 0.0,
            q_h1: 0.0,
            q_lap: 0.0,
            dq_l2: 0.0,
            pq_l2: split.then_some(0.0),
            pq_h1: split.then_some(0.0),
        };
        for i in 0..reference.len() {
            if reference.time(i) < t_skip - 1e-9 * reference.h {
                continue;
            }
            let u = &reference.samples()[i];
            let q = project(u, Projection::Qm, m)?;
            row.q_l2 = row.q_l2.max(q.norm_l2());
            row.q_h1 = row.q_h1.max(q.norm_h1());
            row.q_lap = row.q_lap.max(q.norm_lap());
            if reference.len() > 1 {
                let dq = project(&reference.time_derivative(i)?, Projection::Qm, m)?;
                row.dq_l2 = row.dq_l2.max(dq.norm_l2());
            }
            if split {
                let pq = project(u, Projection::Pq, m)?;
                row.pq_l2 = row.pq_l2.map(|v| v.max(pq.norm_l2()));
                row.pq_h1 = row.pq_h1.map(|v| v.max(pq.norm_h1()));
            }
        }
        rows.push(row);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let slope = |f: fn(&DiagRow) -> f64| -> Option<f64> {
        let ys: Vec<f64> = rows.iter().map(f).collect();
        fit_loglog(&xs, &ys).ok().map(|fit| fit.slope)
    };
    let slopes = DiagSlopes {
        q_l2: slope(|r| r.q_l2),
        q_h1: slope(|r| r.q_h1),
        q_lap: slope(|r| r.q_lap),
        dq_l2: slope(|r| r.dq_l2),
    };
    Ok(SmallScaleDiagnostics { rows, slopes })
}
