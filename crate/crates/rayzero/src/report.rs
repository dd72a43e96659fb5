//! Human-readable summaries.

use std::fmt::Write as _;

use rayzero_core::inversion::{InversionProblem, InversionResult};
use rayzero_core::{LevelKey, SpectrumScan, ZeroMethod, ZeroRecord};

use crate::scan::depolarization_dips;

/// Threshold on `P_L` used to flag zeros of the parallel amplitude.
pub const DIP_THRESHOLD: f64 = -0.999;

fn offset_note(omega: f64, origin: Option<(LevelKey, f64)>) -> String {
    match origin {
        Some((key, w)) => format!("{omega:.4} cm-1 ({:+.4} from {key})", omega - w),
        None => format!("{omega:.4} cm-1"),
    }
}

pub fn spectrum_summary(scan: &SpectrumScan, origin: Option<(LevelKey, f64)>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} points evaluated, {} skipped inside the guard band",
        scan.points.len(),
        scan.rejected.len()
    );
    if scan.truncated {
        out.push_str("note: no tail estimate attached; level sums are truncated\n");
    }
    let min = scan
        .points
        .iter()
        .filter(|p| !p.p_l.is_nan())
        .min_by(|a, b| a.p_l.total_cmp(&b.p_l));
    if let Some(p) = min {
        let _ = writeln!(out, "min P_L = {:.9} at {}", p.p_l, offset_note(p.omega, origin));
    }
    let dips = depolarization_dips(scan, DIP_THRESHOLD);
    let _ = writeln!(out, "{} region(s) with P_L < {DIP_THRESHOLD}", dips.len());
    for (first, last, at) in dips {
        let p = &scan.points[at];
        let _ = writeln!(
            out,
            "  P_L = {:.9} at {} [{:.4}, {:.4}]",
            p.p_l,
            offset_note(p.omega, origin),
            scan.points[first].omega,
            scan.points[last].omega
        );
    }
    out
}

pub fn spectrum_table(scan: &SpectrumScan, origin: Option<(LevelKey, f64)>) -> String {
    let mut out = format!(
        "{:>16} {:>12} {:>14} {:>14} {:>13}\n",
        "omega_cm1", "offset", "a_zz", "a_xz", "p_l"
    );
    let w0 = origin.map_or(0.0, |o| o.1);
    for p in &scan.points {
        let _ = writeln!(
            out,
            "{:>16.4} {:>12.4} {:>14.6e} {:>14.6e} {:>13.9}",
            p.omega,
            p.omega - w0,
            p.a_zz,
            p.a_xz,
            p.p_l
        );
    }
    out
}

/// Zero offsets arranged as one row per multiplet and one column per method.
pub fn zero_table(rows: &[(u32, Vec<ZeroRecord>)], methods: &[ZeroMethod]) -> String {
    let mut out = format!("{:>4}", "n");
    for m in methods {
        let _ = write!(out, " {:>18}", m.label());
    }
    out.push('\n');
    for (n, records) in rows {
        let _ = write!(out, "{n:>4}");
        for m in methods {
            match records.iter().find(|r| r.method == *m) {
                Some(r) => {
                    let _ = write!(out, " {:>18.4}", r.offset);
                }
                None => {
                    let _ = write!(out, " {:>18}", "-");
                }
            }
        }
        out.push('\n');
    }
    out.push_str("offsets in cm-1 from each multiplet's reference level\n");
    out
}

pub fn zero_list(records: &[ZeroRecord]) -> String {
    let mut out = format!(
        "{:>16} {:>18} {:>12} {:>10}  {:<}\n",
        "method", "omega_zero_cm1", "offset", "from", "bracket"
    );
    for r in records {
        let _ = writeln!(
            out,
            "{:>16} {:>18.6} {:>12.4} {:>10}  ({:.4}, {:.4})",
            r.method.label(),
            r.omega_zero,
            r.offset,
            r.reference.to_string(),
            r.bracket.0,
            r.bracket.1
        );
    }
    out
}

pub fn fit_report(
    problem: &InversionProblem,
    result: &InversionResult,
    truth: Option<&[f64]>,
    tail_shift: Option<(f64, &[f64])>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} unknown(s), {} measurement(s), chi2 = {:.6}, {} iteration(s)",
        result.values.len(),
        problem.measurements().len(),
        result.chi2,
        result.iterations
    );
    if problem.system().is_truncated() {
        out.push_str("note: no tail estimate attached; level sums are truncated\n");
    }
    let _ = writeln!(
        out,
        "{:>8} {:>16} {:>11} {:>11} {:>11} {:>11} {:>12}",
        "target", "m_sq (a0^2)", "rel stat", "rel fid", "rel remote", "rel total", "truth dev"
    );
    for (k, target) in result.targets.iter().enumerate() {
        let v = result.values[k];
        let dev = truth
            .map(|t| format!("{:+.3e}", v / t[k] - 1.0))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:>8} {:>16.9e} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>12}",
            target.to_string(),
            v,
            result.stat_sigma(k) / v,
            result.fiducial_sigma(k) / v,
            result.remote_sigma(k) / v,
            result.total_sigma(k) / v,
            dev
        );
    }
    out.push_str("residuals (predicted - measured, cm-1):\n");
    for (m, r) in problem.measurements().iter().zip(&result.residuals) {
        let lower = m
            .bracket
            .lower
            .map_or_else(|| "0".to_string(), |k| k.to_string());
        let _ = writeln!(
            out,
            "  {:>7} .. {:<7} {:>18.6} {:+.3e} ({:+.2} sigma)",
            lower,
            m.bracket.upper.to_string(),
            m.omega_zero,
            r,
            r / m.sigma_omega
        );
    }
    if !result.sensitivity.is_empty() {
        out.push_str("sensitivity d ln(m_sq) / d ln(source), weighted by the source's rel. uncertainty:\n");
        for s in &result.sensitivity {
            let _ = write!(out, "  {:<18} rel_unc {:>9.3e}:", s.source.to_string(), s.rel_unc);
            for d in &s.d_ln_value {
                let _ = write!(out, " {:>+11.3e} ({:.2e})", d, (d * s.rel_unc).abs());
            }
            out.push('\n');
        }
    }
    if let Some((p, shifts)) = tail_shift {
        let _ = write!(out, "refit with remote levels and tail scaled by 1 ± {p}:");
        for (t, s) in result.targets.iter().zip(shifts) {
            let _ = write!(out, " {t} {s:.3e}");
        }
        out.push_str(" (max relative shift)\n");
    }
    out
}
