//! CSV rendering of experiment results. Column order is fixed, every table
//! starts with a header row, and floats use 6 significant digits.

use std::fmt::Write;

use crate::experiments::{EndToEndReport, ErasureEstimate, RatePoint, TradeoffRow};
use crate::stats::Proportion;

pub const RATE_SWEEP_HEADER: &str = "n,N,target_bler,epsilon,K,rate,bler_point,bler_lo,bler_hi,trials,seed";
pub const ERASURE_HEADER: &str = "inner_rate,speed_kmh,snr_db,blocks,erasures,epsilon_hat,lo,hi,seed";
pub const TRADEOFF_HEADER: &str = "inner_from,inner_to,polar_from,polar_to,tau,tau_rounded";
pub const BLER_HEADER: &str = "n,N,K,epsilon,trials,failures,bler_point,bler_lo,bler_hi,exact_bler,seed";
pub const END_TO_END_HEADER: &str =
    "speed_kmh,inner_rate,epsilon,epsilon_lo,epsilon_hi,n,target_bler,K,polar_rate,tau,tau_rounded,seed";

const UNDEFINED: &str = "undefined";

/// Formats like C's `%.6g`.
pub fn g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `exact` fills the `exact_bler` column, which is empty otherwise.
pub fn bler_csv(n: u32, k: usize, epsilon: f64, estimate: &Proportion, exact: Option<f64>, seed: u64) -> String {
    format!(
        "{BLER_HEADER}\n{n},{},{k},{},{},{},{},{},{},{},{seed}\n",
        1u64 << n,
        g6(epsilon),
        estimate.trials,
        estimate.failures,
        g6(estimate.point),
        g6(estimate.lo),
        g6(estimate.hi),
        exact.map(g6).unwrap_or_default(),
    )
}

pub fn rate_sweep_csv(rows: &[RatePoint]) -> String {
    let mut out = format!("{RATE_SWEEP_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            1u64 << r.n,
            g6(r.target_bler),
            g6(r.epsilon),
            r.k,
            g6(r.rate),
            g6(r.bler.point),
            g6(r.bler.lo),
            g6(r.bler.hi),
            r.bler.trials,
            r.seed
        )
        .unwrap();
    }
    out
}

pub fn erasure_csv(rows: &[ErasureEstimate]) -> String {
    let mut out = format!("{ERASURE_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            g6(r.inner_rate.value()),
            g6(r.speed_kmh),
            g6(r.snr_db),
            r.estimate.trials,
            r.estimate.failures,
            g6(r.estimate.point),
            g6(r.estimate.lo),
            g6(r.estimate.hi),
            r.seed
        )
        .unwrap();
    }
    out
}

fn tau_fields(row: &TradeoffRow) -> (String, String) {
    match (row.tau, row.tau_rounded()) {
        (Some(t), Some(r)) => (g6(t), format!("{r}:1")),
        _ => (UNDEFINED.into(), UNDEFINED.into()),
    }
}

pub fn tradeoff_csv(rows: &[TradeoffRow]) -> String {
    let mut out = format!("{TRADEOFF_HEADER}\n");
    for r in rows {
        let (tau, rounded) = tau_fields(r);
        writeln!(
            out,
            "{},{},{},{},{tau},{rounded}",
            g6(r.inner_rate_from),
            g6(r.inner_rate_to),
            g6(r.polar_rate_from),
            g6(r.polar_rate_to),
        )
        .unwrap();
    }
    out
}

/// One row per inner rate; `tau` refers to the step from the previous row
/// and is empty on the first.
pub fn end_to_end_csv(report: &EndToEndReport) -> String {
    let mut out = format!("{END_TO_END_HEADER}\n");
    for (i, row) in report.rows.iter().enumerate() {
        let (lo, hi) = match &row.erasure {
            Some(e) => (g6(e.estimate.lo), g6(e.estimate.hi)),
            None => (String::new(), String::new()),
        };
        let (tau, rounded) = match i.checked_sub(1).and_then(|j| report.tradeoff.get(j)) {
            Some(t) => tau_fields(t),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{lo},{hi},{},{},{},{},{tau},{rounded},{}",
            g6(report.speed_kmh),
            g6(row.inner_rate.value()),
            g6(row.epsilon),
            report.n,
            g6(report.target_bler),
            row.polar.k,
            g6(row.polar.rate),
            report.seed
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_matches_printf() {
        let cases = [
            (0.25, "0.25"),
            (2.0 / 3.0, "0.666667"),
            (0.054, "0.054"),
            (1.0, "1"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (0.000012345678, "1.23457e-05"),
            (0.0001, "0.0001"),
            (999999.5, "1e+06"),
            (-2.5, "-2.5"),
            (2.0875, "2.0875"),
            (4.771428571, "4.77143"),
        ];
        for (x, s) in cases {
            assert_eq!(g6(x), s, "{x}");
        }
    }

    #[test]
    fn tradeoff_table_marks_undefined() {
        let rows = crate::experiments::tradeoff_ratio(&[(0.5, 0.84), (0.667, 0.76), (0.75, 0.8)]).unwrap();
        assert_eq!(
            tradeoff_csv(&rows),
            "inner_from,inner_to,polar_from,polar_to,tau,tau_rounded\n\
             0.5,0.667,0.84,0.76,2.0875,2:1\n\
             0.667,0.75,0.76,0.8,undefined,undefined\n"
        );
    }
}
