//! Constrained dominance, non-dominated sorting, crowding distance and the
//! two-objective hypervolume.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::metrics::ObjectiveVector;

/// Plain Pareto dominance on `(f1, f2)`, both minimized.
pub fn pareto_dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2)
}

/// Feasibility-first dominance: a feasible point beats an infeasible one,
/// two infeasible points compare by constraint violation, and two feasible
/// points by Pareto dominance.
pub fn constrained_dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.g < b.g,
        (true, true) => pareto_dominates(a, b),
    }
}

/// Partitions indices of `points` into successive non-dominated fronts.
/// Indices within a front are ascending.
pub fn fast_nondominated_sort(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();

    for p in 0..n {
        for q in (p + 1)..n {
            if constrained_dominates(&points[p], &points[q]) {
                dominated_by[p].push(q);
                domination_count[q] += 1;
            } else if constrained_dominates(&points[q], &points[p]) {
                dominated_by[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    for (p, &count) in domination_count.iter().enumerate() {
        if count == 0 {
            current.push(p);
        }
    }
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(core::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each member of `front` (indices into `points`),
/// returned in the order of `front`.
pub fn crowding_distance(points: &[ObjectiveVector], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0f64; n];
    if n <= 2 {
        distance.iter_mut().for_each(|d| *d = f64::INFINITY);
        return distance;
    }
    let objectives: [fn(&ObjectiveVector) -> f64; 2] = [|o| o.f1, |o| o.f2];
    for objective in objectives {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            objective(&points[front[a]]).total_cmp(&objective(&points[front[b]]))
        });
        let lo = objective(&points[front[order[0]]]);
        let hi = objective(&points[front[order[n - 1]]]);
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for k in 1..n - 1 {
            let gap =
                objective(&points[front[order[k + 1]]]) - objective(&points[front[order[k - 1]]]);
            distance[order[k]] += gap / range;
        }
    }
    distance
}

/// Area dominated by `front` inside the box bounded by `reference`.
/// Infeasible points and points not strictly inside the box are ignored.
pub fn hypervolume_2d(front: &[ObjectiveVector], reference: (f64, f64)) -> f64 {
    let (r1, r2) = reference;
    let mut points: Vec<(f64, f64)> = front
        .iter()
        .filter(|o| o.is_feasible() && o.f1 < r1 && o.f2 < r2)
        .map(|o| (o.f1, o.f2))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // staircase of points that improve f2
    let mut stairs: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in points {
        match stairs.last() {
            Some(last) if p.1 >= last.1 => {}
            _ => stairs.push(p),
        }
    }
    let mut area = 0.0;
    for (i, &(f1, f2)) in stairs.iter().enumerate() {
        let next = stairs.get(i + 1).map_or(r1, |p| p.0);
        area += (next - f1) * (r2 - f2);
    }
    area
}

/// Lexicographic comparison used for canonical ordering of objective vectors.
pub fn objective_order(a: &ObjectiveVector, b: &ObjectiveVector) -> Ordering {
    a.f1.total_cmp(&b.f1)
        .then(a.f2.total_cmp(&b.f2))
        .then(a.g.total_cmp(&b.g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(f1: f64, f2: f64) -> ObjectiveVector {
        ObjectiveVector {
            f1,
            f2,
            g: f2 - 1.0,
        }
    }

    fn with_g(f1: f64, f2: f64, g: f64) -> ObjectiveVector {
        ObjectiveVector { f1, f2, g }
    }

    #[test]
    fn dominance_examples() {
        assert!(constrained_dominates(
            &with_g(0.1, 0.5, -0.5),
            &with_g(0.2, 0.6, -0.4)
        ));
        assert!(constrained_dominates(
            &with_g(0.9, 0.9, -0.1),
            &with_g(0.1, 0.1, 0.5)
        ));
        let a = ov(0.1, 0.9);
        let b = ov(0.9, 0.1);
        assert!(!constrained_dominates(&a, &b));
        assert!(!constrained_dominates(&b, &a));
        assert!(!constrained_dominates(&a, &a));
        assert!(constrained_dominates(
            &with_g(0.5, 1.2, 0.2),
            &with_g(0.1, 1.5, 0.5)
        ));
    }

    #[test]
    fn sort_example() {
        let pts = [ov(0.1, 0.9), ov(0.5, 0.5), ov(0.9, 0.1), ov(0.6, 0.6)];
        assert_eq!(fast_nondominated_sort(&pts), vec![vec![0, 1, 2], vec![3]]);
        assert_eq!(fast_nondominated_sort(&pts[..1]), vec![vec![0]]);
        assert!(fast_nondominated_sort(&[]).is_empty());
    }

    #[test]
    fn crowding_examples() {
        let pts = [ov(0.0, 1.0), ov(0.5, 0.5), ov(1.0, 0.0)];
        let d = crowding_distance(&pts, &[0, 1, 2]);
        assert_eq!(d, vec![f64::INFINITY, 2.0, f64::INFINITY]);
        assert_eq!(crowding_distance(&pts, &[0, 2]), vec![f64::INFINITY; 2]);
        let same = [ov(0.3, 0.3); 4];
        let d = crowding_distance(&same, &[0, 1, 2, 3]);
        assert_eq!(d.iter().filter(|d| d.is_infinite()).count(), 2);
        assert_eq!(d.iter().filter(|&&d| d == 0.0).count(), 2);
    }

    #[test]
    fn hypervolume_examples() {
        assert!((hypervolume_2d(&[ov(0.2, 0.4)], (1.0, 1.0)) - 0.48).abs() < 1e-12);
        assert_eq!(hypervolume_2d(&[], (1.0, 1.0)), 0.0);
        let two = [ov(0.2, 0.4), ov(0.5, 0.1)];
        assert!((hypervolume_2d(&two, (1.0, 1.0)) - 0.63).abs() < 1e-12);
        // dominated and out-of-box points add nothing
        let noisy = [
            ov(0.2, 0.4),
            ov(0.5, 0.1),
            ov(0.6, 0.5),
            ov(1.2, 0.0),
            with_g(0.0, 1.5, 0.5),
        ];
        assert!((hypervolume_2d(&noisy, (1.0, 1.0)) - 0.63).abs() < 1e-12);
    }
}
