use super::evaluate::EvaluationRecord;
use crate::consistency::Metric;
use crate::error::{Error, Result};

/// `a` is no worse in both objectives and better in at least one.
pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Indices of the non-dominated points (both objectives minimized), ordered
/// by the first objective, then the second, then index. Identical points
/// do not dominate each other and are all kept.
pub fn pareto_indices(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .0
            .total_cmp(&points[j].0)
            .then(points[i].1.total_cmp(&points[j].1))
            .then(i.cmp(&j))
    });
    let mut front = Vec::new();
    // smallest second objective among points with a strictly smaller first
    let mut best_before = f64::INFINITY;
    let mut k = 0;
    while k < order.len() {
        let f1 = points[order[k]].0;
        let mut end = k;
        while end < order.len() && points[order[end]].0 == f1 {
            end += 1;
        }
        // group sorted by the second objective, so its minimum comes first
        let group_min = points[order[k]].1;
        if group_min < best_before {
            front.extend(order[k..end].iter().copied().filter(|&i| points[i].1 == group_min));
            best_before = group_min;
        }
        k = end;
    }
    front
}

/// Non-dominated records under `(mse, consistency)` with consistency in its
/// minimization form (`-cons` for Spearman). Records missing either value
/// are ignored.
pub fn pareto_front(records: &[EvaluationRecord], metric: Metric) -> Result<Vec<&EvaluationRecord>> {
    let usable: Vec<&EvaluationRecord> = records
        .iter()
        .filter(|r| r.mse.is_some_and(f64::is_finite) && r.consistency.is_some_and(f64::is_finite))
        .collect();
    if usable.is_empty() {
        return Err(Error::config("no records with both MSE and consistency to build a Pareto front from"));
    }
    let points: Vec<(f64, f64)> = usable
        .iter()
        .map(|r| (r.mse.unwrap_or_default(), metric.to_minimize(r.consistency.unwrap_or_default())))
        .collect();
    Ok(pareto_indices(&points).into_iter().map(|i| usable[i]).collect())
}
