//! Planar polygon helpers over rings stored without the closing vertex.

use super::Point2D;

const EPS: f64 = 1e-9;

/// Signed shoelace area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point2D]) -> f64 {
    let n = ring.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

pub fn area(ring: &[Point2D]) -> f64 {
    signed_area(ring).abs()
}

/// Area centroid. Falls back to the vertex mean for zero-area rings.
pub fn centroid(ring: &[Point2D]) -> Point2D {
    let a = signed_area(ring);
    let n = ring.len();
    if a.abs() < EPS {
        let (sx, sy) = ring.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        return Point2D::new(sx / n as f64, sy / n as f64);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        let cross = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    Point2D::new(cx / (6.0 * a), cy / (6.0 * a))
}

fn cross(o: Point2D, a: Point2D, b: Point2D) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

pub fn on_segment(p: Point2D, a: Point2D, b: Point2D) -> bool {
    let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt().max(1.0);
    cross(a, b, p).abs() <= EPS * len
        && p.x >= a.x.min(b.x) - EPS
        && p.x <= a.x.max(b.x) + EPS
        && p.y >= a.y.min(b.y) - EPS
        && p.y <= a.y.max(b.y) + EPS
}

pub fn on_boundary(p: Point2D, ring: &[Point2D]) -> bool {
    let n = ring.len();
    (0..n).any(|i| on_segment(p, ring[i], ring[(i + 1) % n]))
}

/// Ray-casting containment. Boundary points count as inside.
pub fn contains(ring: &[Point2D], p: Point2D) -> bool {
    if on_boundary(p, ring) {
        return true;
    }
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segments_intersect(p1: Point2D, p2: Point2D, q1: Point2D, q2: Point2D) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS)) && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS)) {
        return true;
    }
    on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2)
}

/// True when no two non-adjacent edges touch. O(n²), fine for footprints.
pub fn is_simple(ring: &[Point2D]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a1, a2) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (b1, b2) = (ring[j], ring[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Drops a repeated closing vertex and consecutive duplicates.
pub fn normalize_ring(points: &[Point2D]) -> Vec<Point2D> {
    let mut out: Vec<Point2D> = Vec::with_capacity(points.len());
    for &p in points {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

pub fn distinct_vertices(ring: &[Point2D]) -> usize {
    let mut seen: Vec<Point2D> = Vec::new();
    for &p in ring {
        if !seen.contains(&p) {
            seen.push(p);
        }
    }
    seen.len()
}

pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point2D> {
    vec![
        Point2D::new(x0, y0),
        Point2D::new(x1, y0),
        Point2D::new(x1, y1),
        Point2D::new(x0, y1),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(s: f64) -> Vec<Point2D> {
        rectangle(0.0, 0.0, s, s)
    }

    #[test]
    fn square_area_and_centroid() {
        let r = sq(10.0);
        assert_eq!(area(&r), 100.0);
        assert_eq!(centroid(&r), Point2D::new(5.0, 5.0));
    }

    #[test]
    fn containment_with_boundary() {
        let r = sq(10.0);
        assert!(contains(&r, Point2D::new(5.0, 5.0)));
        assert!(contains(&r, Point2D::new(10.0, 5.0)));
        assert!(contains(&r, Point2D::new(0.0, 0.0)));
        assert!(!contains(&r, Point2D::new(10.5, 5.0)));
        assert!(!contains(&r, Point2D::new(-1.0, -1.0)));
    }

    #[test]
    fn concave_ring() {
        // U shape open to the top.
        let u = vec![
            Point2D::new(0.0, 0.0),
            Point2D::new(3.0, 0.0),
            Point2D::new(3.0, 3.0),
            Point2D::new(2.0, 3.0),
            Point2D::new(2.0, 1.0),
            Point2D::new(1.0, 1.0),
            Point2D::new(1.0, 3.0),
            Point2D::new(0.0, 3.0),
        ];
        assert!(is_simple(&u));
        assert!(contains(&u, Point2D::new(0.5, 2.0)));
        assert!(!contains(&u, Point2D::new(1.5, 2.0)));
        assert_eq!(area(&u), 7.0);
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bow = vec![
            Point2D::new(0.0, 0.0),
            Point2D::new(1.0, 1.0),
            Point2D::new(1.0, 0.0),
            Point2D::new(0.0, 1.0),
        ];
        assert!(!is_simple(&bow));
    }

    #[test]
    fn normalize_drops_closing_vertex() {
        let mut r = sq(1.0);
        r.push(r[0]);
        assert_eq!(normalize_ring(&r).len(), 4);
    }
}
