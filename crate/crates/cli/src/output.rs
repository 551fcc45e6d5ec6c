//! File writers. Every number is emitted at full precision (17 significant
//! digits in CSV/dat, shortest-round-trip JSON), so outputs parse back to
//! the exact f64 values and identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

use whitham_soliton::asymptotics::PhysicalWave;
use whitham_soliton::solver::MinimizerResult;
use whitham_soliton::sweep::SweepRecord;

/// 17 significant digits: round-trips any f64.
pub fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_full).unwrap_or_default()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// result.json: the scalar fields of a MinimizerResult.
pub fn write_result(path: &Path, result: &MinimizerResult) -> Result<()> {
    write_json(path, result)
}

/// profile.csv with columns x, u, eta, v.
pub fn write_profile(
    path: &Path,
    result: &MinimizerResult,
    wave: Option<&PhysicalWave>,
) -> Result<()> {
    let grid = result.u.grid;
    let mut text = String::from("x,u,eta,v\n");
    for j in 0..grid.n() {
        let (eta, v) = match wave {
            Some(w) => (w.eta.values[j], w.v.values[j]),
            None => (f64::NAN, f64::NAN),
        };
        let _ = writeln!(
            text,
            "{},{},{},{}",
            fmt_full(grid.point(j)),
            fmt_full(result.u.values[j]),
            fmt_full(eta),
            fmt_full(v)
        );
    }
    write_text(path, &text)
}

/// sweep.csv: one SweepRecord per row; missing KdV fields stay empty.
pub fn write_sweep_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut text = String::from(
        "q,i_q,lambda,speed_c,el_residual,h1_kdv_distance,ratio_q16,sup_norm_ratio,converged\n",
    );
    for r in records {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            fmt_full(r.q),
            fmt_full(r.i_q),
            fmt_full(r.lambda),
            fmt_full(r.speed_c),
            fmt_full(r.el_residual),
            fmt_opt(r.h1_kdv_distance),
            fmt_opt(r.ratio_q16),
            fmt_full(r.sup_norm_ratio),
            r.converged
        );
    }
    write_text(path, &text)
}

/// Two-column gnuplot-compatible data file.
pub fn write_dat(path: &Path, comment: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut text = format!("# {comment}\n");
    for (x, y) in rows {
        let _ = writeln!(text, "{} {}", fmt_full(*x), fmt_full(*y));
    }
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_precision_round_trips() {
        for v in [
            1.0 / 3.0,
            -0.7143304733856898,
            1.1905507889761495e-300,
            6.02e23,
            -1e-9,
        ] {
            let s = fmt_full(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s}");
        }
    }
}
