//! Small fixed-dimension vector and polygon primitives.
//!
//! Points are plain `[f64; D]` arrays; everything here is dimension-generic
//! except the polygon helpers, which are 2D.

/// A point or vector in `D`-dimensional space.
pub type Point<const D: usize> = [f64; D];

/// A dense `D x D` matrix, row-major.
pub type Matrix<const D: usize> = [[f64; D]; D];

pub fn add<const D: usize>(a: Point<D>, b: Point<D>) -> Point<D> {
    std::array::from_fn(|i| a[i] + b[i])
}

pub fn sub<const D: usize>(a: Point<D>, b: Point<D>) -> Point<D> {
    std::array::from_fn(|i| a[i] - b[i])
}

pub fn scale<const D: usize>(s: f64, a: Point<D>) -> Point<D> {
    std::array::from_fn(|i| s * a[i])
}

pub fn axpy<const D: usize>(s: f64, a: Point<D>, b: Point<D>) -> Point<D> {
    std::array::from_fn(|i| s * a[i] + b[i])
}

pub fn dot<const D: usize>(a: Point<D>, b: Point<D>) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

pub fn norm<const D: usize>(a: Point<D>) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist<const D: usize>(a: Point<D>, b: Point<D>) -> f64 {
    norm(sub(a, b))
}

pub fn is_finite<const D: usize>(a: Point<D>) -> bool {
    a.iter().all(|x| x.is_finite())
}

pub fn zero<const D: usize>() -> Point<D> {
    [0.0; D]
}

pub fn identity<const D: usize>() -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

pub fn mat_vec<const D: usize>(m: &Matrix<D>, v: Point<D>) -> Point<D> {
    std::array::from_fn(|i| dot(m[i], v))
}

pub fn mat_add<const D: usize>(a: &Matrix<D>, b: &Matrix<D>) -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + b[i][j]))
}

pub fn mat_scale<const D: usize>(s: f64, a: &Matrix<D>) -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| s * a[i][j]))
}

/// Largest absolute asymmetry `|m[i][j] - m[j][i]|`.
pub fn asymmetry<const D: usize>(m: &Matrix<D>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..D {
        for j in (i + 1)..D {
            worst = worst.max((m[i][j] - m[j][i]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue of a symmetric matrix.
///
/// Closed form for D = 2; cyclic Jacobi sweeps otherwise.
pub fn min_eigenvalue<const D: usize>(m: &Matrix<D>) -> f64 {
    if D == 1 {
        return m[0][0];
    }
    if D == 2 {
        let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
        let mid = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        return mid - rad;
    }
    let mut a = *m;
    for _ in 0..32 {
        let mut off = 0.0;
        for p in 0..D {
            for q in (p + 1)..D {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..D {
            for q in (p + 1)..D {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..D {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..D {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..D).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// 2D polygon helpers
// ---------------------------------------------------------------------------

/// Signed area of a polygon given by its vertices; positive for CCW order.
pub fn polygon_signed_area(pts: &[Point<2>]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * acc
}

/// Area centroid of a simple polygon (CCW).
pub fn polygon_centroid(pts: &[Point<2>]) -> Point<2> {
    let n = pts.len();
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut area = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let w = a[0] * b[1] - b[0] * a[1];
        area += w;
        cx += (a[0] + b[0]) * w;
        cy += (a[1] + b[1]) * w;
    }
    area *= 0.5;
    [cx / (6.0 * area), cy / (6.0 * area)]
}

/// Largest pairwise vertex distance.
pub fn polygon_diameter(pts: &[Point<2>]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            best = best.max(dist(pts[i], pts[j]));
        }
    }
    best
}

/// True when all cross products of consecutive edges are non-negative
/// within `tol` (CCW convex polygon).
pub fn polygon_is_convex_ccw(pts: &[Point<2>], tol: f64) -> bool {
    let n = pts.len();
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let c = pts[(i + 2) % n];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross < -tol {
            return false;
        }
    }
    true
}

/// Signed distance of `p` to the innermost edge line of a CCW convex polygon.
/// Non-negative means `p` lies in the closed polygon.
pub fn convex_polygon_inset(pts: &[Point<2>], p: Point<2>) -> f64 {
    let n = pts.len();
    let mut worst = f64::INFINITY;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let e = sub(b, a);
        let len = norm(e);
        if len == 0.0 {
            continue;
        }
        // Inward normal of a CCW edge.
        let nrm = [-e[1] / len, e[0] / len];
        worst = worst.min(dot(nrm, sub(p, a)));
    }
    worst
}

/// Circumcenter of a triangle; `None` when the points are collinear.
pub fn circumcenter(a: Point<2>, b: Point<2>, c: Point<2>) -> Option<Point<2>> {
    let d = 2.0 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
    if d.abs() < 1e-300 {
        return None;
    }
    let b2 = dot(sub(b, a), sub(b, a));
    let c2 = dot(sub(c, a), sub(c, a));
    let ux = (c[1] - a[1]) * b2 - (b[1] - a[1]) * c2;
    let uy = (b[0] - a[0]) * c2 - (c[0] - a[0]) * b2;
    Some([a[0] + ux / d, a[1] + uy / d])
}

/// Convex hull (Andrew monotone chain), returned CCW without repetition.
pub fn convex_hull(pts: &[Point<2>]) -> Vec<Point<2>> {
    let mut p: Vec<Point<2>> = pts.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross =
        |o: Point<2>, a: Point<2>, b: Point<2>| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<Point<2>> = Vec::with_capacity(2 * p.len());
    for &pt in p.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
            hull.pop();
        }
        hull.push(pt);
    }
    let lower = hull.len() + 1;
    for &pt in p.iter().rev() {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
            hull.pop();
        }
        hull.push(pt);
    }
    hull.pop();
    hull
}

/// Diameter of a point set (max pairwise distance over the hull).
pub fn point_set_diameter(pts: &[Point<2>]) -> f64 {
    let hull = convex_hull(pts);
    polygon_diameter(&hull)
}
