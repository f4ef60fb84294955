//! Symmetric Hausdorff distance between polylines.

/// Largest distance from a point of `a` (vertices plus densified edge points)
/// to the polyline `b`.
fn directed(a: &[(f64, f64)], b: &[(f64, f64)], spacing: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut visit = |p: (f64, f64)| {
        let d = distance_to_polyline(p, b);
        if d > worst {
            worst = d;
        }
    };
    if let Some(&first) = a.first() {
        visit(first);
    }
    for w in a.windows(2) {
        let len = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
        let pieces = if spacing > 0.0 { (len / spacing).ceil().max(1.0) as usize } else { 1 };
        for j in 1..=pieces {
            let t = j as f64 / pieces as f64;
            visit((w[0].0 + t * (w[1].0 - w[0].0), w[0].1 + t * (w[1].1 - w[0].1)));
        }
    }
    worst
}

fn distance_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

pub fn distance_to_polyline(p: (f64, f64), poly: &[(f64, f64)]) -> f64 {
    match poly {
        [] => f64::INFINITY,
        [q] => (p.0 - q.0).hypot(p.1 - q.1),
        _ => poly
            .windows(2)
            .map(|w| distance_to_segment(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Drops vertices closer than `min_gap` to the previously kept one; the last
/// vertex is always kept.
pub fn thin(poly: &[(f64, f64)], min_gap: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(poly.len());
    for (i, &p) in poly.iter().enumerate() {
        let keep = match out.last() {
            None => true,
            Some(&q) => i + 1 == poly.len() || (p.0 - q.0).hypot(p.1 - q.1) >= min_gap,
        };
        if keep {
            out.push(p);
        }
    }
    out
}

fn diameter_hint(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in a.iter().chain(b) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    (x1 - x0).hypot(y1 - y0)
}

/// Symmetric Hausdorff distance. Edges are sampled at spacing
/// `diameter / 2000`, which bounds the discretization error by that spacing.
pub fn hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let spacing = diameter_hint(a, b) / 2000.0;
    let a = thin(a, spacing / 4.0);
    let b = thin(b, spacing / 4.0);
    directed(&a, &b, spacing).max(directed(&b, &a, spacing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(offset: f64) -> Vec<(f64, f64)> {
        vec![(offset, 0.0), (offset + 1.0, 0.0), (offset + 1.0, 1.0), (offset, 1.0), (offset, 0.0)]
    }

    #[test]
    fn identical_is_zero() {
        assert_eq!(hausdorff(&square(0.0), &square(0.0)), 0.0);
    }

    #[test]
    fn shifted_square() {
        let d = hausdorff(&square(0.0), &square(0.5));
        assert!((d - 0.5).abs() < 1e-3);
    }

    #[test]
    fn edge_interior_is_seen() {
        // the far point of b lies over the middle of a's long edge
        let a = vec![(0.0, 0.0), (2.0, 0.0)];
        let b = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)];
        assert!((hausdorff(&a, &b) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn empty_is_infinite() {
        assert!(hausdorff(&[], &square(0.0)).is_infinite());
    }

    proptest! {
        #[test]
        fn symmetric(pts_a in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..20),
                     pts_b in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..20)) {
            let ab = hausdorff(&pts_a, &pts_b);
            let ba = hausdorff(&pts_b, &pts_a);
            prop_assert_eq!(ab, ba);
            prop_assert!(ab >= 0.0);
        }
    }
}
