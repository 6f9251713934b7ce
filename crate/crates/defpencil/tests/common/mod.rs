//! Shared test oracles, independent of the library's computation paths.

#![allow(dead_code)]

/// Exact distance from the origin to the convex hull of a 2-D point set
/// (zero if the origin lies inside). Brute-force over hull edges; the
/// ground truth for Crawford numbers of simultaneously diagonal pencils.
pub fn hull_distance(points: &[(f64, f64)]) -> f64 {
    assert!(!points.is_empty());
    if points.len() == 1 {
        return (points[0].0.powi(2) + points[0].1.powi(2)).sqrt();
    }
    let hull = convex_hull(points);
    if hull.len() == 1 {
        return (hull[0].0.powi(2) + hull[0].1.powi(2)).sqrt();
    }
    if hull.len() > 2 && point_in_hull((0.0, 0.0), &hull) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        best = best.min(dist_to_segment((0.0, 0.0), a, b));
    }
    best
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew monotone chain, counterclockwise.
fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn point_in_hull(p: (f64, f64), hull: &[(f64, f64)]) -> bool {
    let n = hull.len();
    for i in 0..n {
        if cross(hull[i], hull[(i + 1) % n], p) < 0.0 {
            return false;
        }
    }
    true
}

fn dist_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let vv = vx * vx + vy * vy;
    let t = if vv == 0.0 {
        0.0
    } else {
        ((wx * vx + wy * vy) / vv).clamp(0.0, 1.0)
    };
    let (dx, dy) = (p.0 - (a.0 + t * vx), p.1 - (a.1 + t * vy));
    (dx * dx + dy * dy).sqrt()
}

/// Independent scalar model of the dynamically weighted Halley step:
/// re-derives the coefficients from their defining formulas and applies the
/// rational map. Kept separate from the library implementation on purpose.
pub struct ScalarHalley;

impl ScalarHalley {
    pub fn coefficients(l: f64) -> (f64, f64, f64) {
        let g = (4.0 * (1.0 - l * l) / (l * l * l * l)).cbrt();
        let b = (1.0 + g).sqrt()
            + 0.5 * (8.0 - 4.0 * g + 8.0 * (2.0 - l * l) / (l * l * (1.0 + g).sqrt())).sqrt();
        let a = (b - 1.0) * (b - 1.0) / 4.0;
        (a, b, a + b - 1.0)
    }

    pub fn map(l: f64, x: f64) -> f64 {
        let (a, b, c) = Self::coefficients(l);
        x * (a * x * x + b) / (c * x * x + 1.0)
    }

    /// Iterations of the l-recurrence until it reaches `target`.
    pub fn steps_to(l0: f64, target: f64, cap: usize) -> usize {
        let mut l = l0;
        let mut steps = 0;
        while l < target && steps < cap {
            l = Self::map(l, l).min(1.0);
            steps += 1;
        }
        steps
    }
}

/// Least-squares line fit returning the residual sum of squares.
pub fn linear_fit_rss(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let (slope, intercept) = if denom.abs() < 1e-300 {
        (0.0, sy / n)
    } else {
        ((n * sxy - sx * sy) / denom, (sy * sxx - sx * sxy) / denom)
    };
    xs.iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum()
}

/// Collect failure strings, print one acceptance line, and panic on any
/// failure so `cargo test` reports the criterion red.
pub fn report_criterion(name: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("ACCEPTANCE {name}: PASS");
    } else {
        println!("ACCEPTANCE {name}: FAIL ({} problems)", failures.len());
        for f in failures.iter().take(12) {
            println!("  - {f}");
        }
        panic!("acceptance criterion failed: {name}");
    }
}
