use crate::programs::{SdpProblem, Sense};
use std::fmt::Write;

/// SDPA sparse (`.dat-s`) text for the min-form problem
/// `min c.x  s.t.  sum_j x_j F_j - F_0 >= 0`.
///
/// Maximisation objectives are negated. Equality rows become a trailing
/// diagonal block holding `a.x - f >= 0` and `f - a.x >= 0` per row. The
/// objective constant has no SDPA representation and is dropped.
pub fn export_sdpa(problem: &SdpProblem) -> String {
    let m = problem.num_variables();
    let sign = if problem.sense == Sense::Maximize {
        -1.0
    } else {
        1.0
    };
    let mut sizes: Vec<String> = problem.blocks.iter().map(|b| b.size.to_string()).collect();
    let has_rows = !problem.equalities.is_empty();
    if has_rows {
        sizes.push(format!("-{}", 2 * problem.equalities.len()));
    }
    let c = problem.objective_dense();

    // (matno, blkno, i, j, value), 1-based, i <= j
    let mut entries: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (b, blk) in problem.blocks.iter().enumerate() {
        for (i, j, v) in blk.constant.upper() {
            entries.push((0, b + 1, i + 1, j + 1, -v));
        }
        for (var, f) in &blk.coefficients {
            for (i, j, v) in f.upper() {
                entries.push((var + 1, b + 1, i + 1, j + 1, v));
            }
        }
    }
    if has_rows {
        let blk = problem.blocks.len() + 1;
        for (r, row) in problem.equalities.iter().enumerate() {
            let (up, down) = (2 * r + 1, 2 * r + 2);
            if row.rhs != 0.0 {
                entries.push((0, blk, up, up, row.rhs));
                entries.push((0, blk, down, down, -row.rhs));
            }
            let mut terms = row.terms.clone();
            terms.sort_by_key(|t| t.0);
            let mut merged: Vec<(usize, f64)> = Vec::new();
            for (j, a) in terms {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += a,
                    _ => merged.push((j, a)),
                }
            }
            for (j, a) in merged.into_iter().filter(|t| t.1 != 0.0) {
                entries.push((j + 1, blk, up, up, a));
                entries.push((j + 1, blk, down, down, -a));
            }
        }
    }
    entries.sort_by_key(|a| (a.0, a.1, a.2, a.3));

    let mut out = String::new();
    let _ = writeln!(out, "{m}");
    let _ = writeln!(out, "{}", sizes.len());
    let _ = writeln!(out, "{}", sizes.join(" "));
    let obj: Vec<String> = c.iter().map(|v| fmt(sign * v)).collect();
    let _ = writeln!(out, "{}", obj.join(" "));
    for (k, b, i, j, v) in entries {
        let _ = writeln!(out, "{k} {b} {i} {j} {}", fmt(v));
    }
    out
}

/// Shortest round-trip decimal; `-0` printed as `0`.
fn fmt(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}
