//! Small geometric kernels shared by the mesh, render and papercraft modules.

use nalgebra::{Point2, Point3, Vector2, Vector3};

pub type P3 = Point3<f64>;
pub type V3 = Vector3<f64>;
pub type P2 = Point2<f64>;
pub type V2 = Vector2<f64>;

/// Unnormalized face normal (twice the area vector).
pub fn triangle_cross(a: &P3, b: &P3, c: &P3) -> V3 {
    (b - a).cross(&(c - a))
}

pub fn triangle_area(a: &P3, b: &P3, c: &P3) -> f64 {
    0.5 * triangle_cross(a, b, c).norm()
}

/// Unit normal, or `None` for a zero-area triangle.
pub fn triangle_normal(a: &P3, b: &P3, c: &P3) -> Option<V3> {
    let n = triangle_cross(a, b, c);
    let len = n.norm();
    (len > 0.0 && len.is_finite()).then(|| n / len)
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &P3, a: &P3, b: &P3, c: &P3) -> P3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = va + vb + vc;
    if denom == 0.0 {
        // Degenerate triangle: fall back to the closest of the three edges.
        let candidates = [
            closest_point_on_segment(p, a, b),
            closest_point_on_segment(p, b, c),
            closest_point_on_segment(p, c, a),
        ];
        return candidates
            .into_iter()
            .min_by(|x, y| (x - p).norm_squared().total_cmp(&(y - p).norm_squared()))
            .unwrap();
    }
    let v = vb / denom;
    let w = vc / denom;
    a + ab * v + ac * w
}

pub fn closest_point_on_segment(p: &P3, a: &P3, b: &P3) -> P3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Exact sign of the 2D orientation of `(a, b, c)`: >0 counter-clockwise.
pub fn orient2d(a: &P2, b: &P2, c: &P2) -> f64 {
    robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    )
}

pub fn signed_area2(t: &[P2; 3]) -> f64 {
    0.5 * ((t[1] - t[0]).perp(&(t[2] - t[0])))
}

/// Exact test for intersecting interiors of two 2D triangles.
///
/// Triangles that only touch along an edge or at a vertex do not overlap.
/// Zero-area triangles have an empty interior and never overlap.
pub fn triangles_interiors_overlap(t1: &[P2; 3], t2: &[P2; 3]) -> bool {
    let s1 = orient2d(&t1[0], &t1[1], &t1[2]);
    let s2 = orient2d(&t2[0], &t2[1], &t2[2]);
    if s1 == 0.0 || s2 == 0.0 {
        return false;
    }
    !has_separating_edge(t1, s1.signum(), t2) && !has_separating_edge(t2, s2.signum(), t1)
}

fn has_separating_edge(t: &[P2; 3], sign: f64, other: &[P2; 3]) -> bool {
    (0..3).any(|i| {
        let a = &t[i];
        let b = &t[(i + 1) % 3];
        other.iter().all(|p| orient2d(a, b, p) * sign <= 0.0)
    })
}

/// Area of the intersection of two triangles (convex clipping).
pub fn triangle_intersection_area(t1: &[P2; 3], t2: &[P2; 3]) -> f64 {
    let mut poly: Vec<P2> = t1.to_vec();
    if signed_area2(t1) < 0.0 {
        poly.reverse();
    }
    let mut clip: Vec<P2> = t2.to_vec();
    if signed_area2(t2) < 0.0 {
        clip.reverse();
    }
    for i in 0..3 {
        let a = clip[i];
        let b = clip[(i + 1) % 3];
        let side = |p: &P2| (b - a).perp(&(p - a));
        let mut out = Vec::with_capacity(poly.len() + 2);
        for j in 0..poly.len() {
            let p = poly[j];
            let q = poly[(j + 1) % poly.len()];
            let sp = side(&p);
            let sq = side(&q);
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push(p + (q - p) * t);
            }
        }
        poly = out;
        if poly.len() < 3 {
            return 0.0;
        }
    }
    polygon_area(&poly).abs()
}

pub fn polygon_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let p = poly[i];
            let q = poly[(i + 1) % n];
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
}

/// Ray/triangle intersection (Möller–Trumbore). Returns the ray parameter.
pub fn ray_triangle(origin: &P3, dir: &V3, a: &P3, b: &P3, c: &P3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&qvec) * inv)
}

/// Any unit vector perpendicular to `n`.
pub fn any_perpendicular(n: &V3) -> V3 {
    let helper = if n.x.abs() < 0.9 { V3::x() } else { V3::y() };
    n.cross(&helper).normalize()
}
