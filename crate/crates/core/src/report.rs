//! Byte-stable CSV rendering of bound reports: fixed column order, LF
//! line endings, 17 significant digits, and the token `inf` for
//! infinities. Identical inputs render to identical bytes on every
//! platform.

use crate::bounds::BoundReport;

pub const REPORT_HEADER: &str =
    "bound_id,mode,n,lambda,rho,gamma,alpha,t,delta,lhs,lhs_se,rhs,slack,verdict";

/// 17-significant-digit decimal rendering, `inf`/`-inf` for infinities.
pub fn format_value(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x == 0.0 {
        // Canonicalize -0.0.
        "0.0000000000000000e0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn format_optional(x: Option<f64>) -> String {
    x.map(format_value).unwrap_or_default()
}

pub fn report_row(r: &BoundReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.bound_id,
        r.mode.token(),
        r.n,
        format_optional(r.lambda),
        format_optional(r.rho),
        format_optional(r.gamma),
        format_optional(r.alpha),
        format_optional(r.t),
        format_optional(r.delta),
        format_value(r.lhs),
        format_value(r.lhs_se),
        format_value(r.rhs),
        format_value(r.slack),
        r.verdict.token(),
    )
}

/// Header plus one line per report, LF-terminated.
pub fn emit_report(rows: &[BoundReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&report_row(row));
        out.push('\n');
    }
    out
}
