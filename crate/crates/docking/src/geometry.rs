//! Convex polygons, half-space sets and the pose-dependent containment
//! residuals that turn "stay inside the operating region" into smooth
//! inequality rows.

use nalgebra::{DMatrix, Vector2};
use thiserror::Error;

use crate::vessel::{rotation_planar, Pose};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("need at least 3 distinct non-collinear points, got {0}")]
    Degenerate(usize),
    #[error("non-convex region: reflex or collinear corner at vertex {0}")]
    NonConvex(usize),
    #[error("polygon does not strictly contain the body origin")]
    OriginOutside,
}

/// Strictly convex polygon, vertices counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vector2<f64>>,
}

impl ConvexPolygon {
    /// Validate an explicit vertex ring. Clockwise input is reversed;
    /// collinear or reflex corners are rejected with the offending vertex.
    pub fn new(mut vertices: Vec<Vector2<f64>>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::Degenerate(vertices.len()));
        }
        let area2: f64 = (0..vertices.len())
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % vertices.len()];
                a.x * b.y - a.y * b.x
            })
            .sum();
        if area2 < 0.0 {
            vertices.reverse();
        }
        let scale = vertices
            .iter()
            .map(|v| v.x.abs().max(v.y.abs()))
            .fold(1.0f64, f64::max);
        let tol = 1e-9 * scale * scale;
        for i in 0..vertices.len() {
            let p = vertices[i];
            let q = vertices[(i + 1) % vertices.len()];
            let r = vertices[(i + 2) % vertices.len()];
            let cross = (q.x - p.x) * (r.y - q.y) - (q.y - p.y) * (r.x - q.x);
            if cross <= tol {
                return Err(GeometryError::NonConvex((i + 1) % vertices.len()));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Vector2<f64>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Scale every vertex by (1 + margin) about the origin. The polygon must
    /// strictly contain the origin for the dilation to grow in all directions.
    pub fn dilate(&self, margin_fraction: f64) -> Result<ConvexPolygon, GeometryError> {
        assert!(margin_fraction >= 0.0, "margin must be nonnegative");
        let hs = self.to_halfspaces();
        let origin_residuals = hs.residuals_at(&Vector2::zeros());
        if origin_residuals.iter().any(|&r| r <= 0.0) {
            return Err(GeometryError::OriginOutside);
        }
        let k = 1.0 + margin_fraction;
        Ok(ConvexPolygon {
            vertices: self.vertices.iter().map(|v| v * k).collect(),
        })
    }

    /// Half-space representation with unit normals, one row per edge, so that
    /// residuals read in meters.
    pub fn to_halfspaces(&self) -> HalfspaceSet {
        let mut rows = Vec::with_capacity(self.vertices.len());
        for i in 0..self.vertices.len() {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % self.vertices.len()];
            let e = q - p;
            let n = Vector2::new(e.y, -e.x).normalize();
            rows.push(Halfspace {
                normal: n,
                offset: n.dot(&p),
            });
        }
        HalfspaceSet { rows }
    }
}

/// One row `normal . x <= offset` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace {
    pub normal: Vector2<f64>,
    pub offset: f64,
}

/// Intersection of half-planes `A x <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceSet {
    pub rows: Vec<Halfspace>,
}

impl HalfspaceSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Signed distances `b - a . x`, nonnegative inside.
    pub fn residuals_at(&self, point: &Vector2<f64>) -> Vec<f64> {
        self.rows
            .iter()
            .map(|h| h.offset - h.normal.dot(point))
            .collect()
    }
}

/// Smallest convex polygon containing all points (monotone chain, collinear
/// boundary points dropped).
pub fn convex_hull(points: &[Vector2<f64>]) -> Result<ConvexPolygon, GeometryError> {
    let mut pts: Vec<Vector2<f64>> = points.to_vec();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return Err(GeometryError::Degenerate(pts.len()));
    }

    let cross = |o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };

    let mut lower: Vec<Vector2<f64>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Vector2<f64>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(GeometryError::Degenerate(lower.len()));
    }
    ConvexPolygon::new(lower)
}

/// Residual matrix of Eq-style containment rows: entry (i, j) is the signed
/// clearance, in meters, of transformed body point i against region row j:
///
/// ```text
/// r_ij = b_j - a_j . (R(psi) x_i + [x, y])
/// ```
///
/// All entries nonnegative iff every transformed point lies in the region.
pub fn containment_residuals(
    region: &HalfspaceSet,
    pose: &Pose,
    body_points: &[Vector2<f64>],
) -> DMatrix<f64> {
    let rot = rotation_planar(pose.psi());
    let p = pose.position();
    DMatrix::from_fn(body_points.len(), region.len(), |i, j| {
        let world = rot * body_points[i] + p;
        region.rows[j].offset - region.rows[j].normal.dot(&world)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    fn unit_square_origin() -> ConvexPolygon {
        ConvexPolygon::new(vec![
            v(0.5, 0.5),
            v(-0.5, 0.5),
            v(-0.5, -0.5),
            v(0.5, -0.5),
        ])
        .unwrap()
    }

    #[test]
    fn hull_removes_interior_point() {
        let hull = convex_hull(&[
            v(0.0, 0.0),
            v(1.0, 0.0),
            v(1.0, 1.0),
            v(0.0, 1.0),
            v(0.5, 0.5),
        ])
        .unwrap();
        assert_eq!(hull.len(), 4);
        for corner in [v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)] {
            assert!(hull.vertices().contains(&corner));
        }
    }

    #[test]
    fn hull_of_convex_pentagon_is_idempotent() {
        let pent = vec![
            v(39.0, 0.0),
            v(20.0, 9.0),
            v(-39.0, 9.0),
            v(-39.0, -9.0),
            v(20.0, -9.0),
        ];
        let hull = convex_hull(&pent).unwrap();
        assert_eq!(hull.len(), 5);
        for p in &pent {
            assert!(hull.vertices().contains(p));
        }
    }

    #[test]
    fn hull_contains_every_input_point() {
        // Brute-force containment of 100 deterministic pseudo-random points.
        let pts: Vec<Vector2<f64>> = (0..100)
            .map(|k| {
                let a = (k as f64 * 0.7313).sin() * 10.0;
                let b = (k as f64 * 1.391).cos() * 10.0;
                v(a, b)
            })
            .collect();
        let hull = convex_hull(&pts).unwrap();
        let hs = hull.to_halfspaces();
        for p in &pts {
            for r in hs.residuals_at(p) {
                assert!(r >= -1e-9, "point {p:?} violates hull by {r}");
            }
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(convex_hull(&[v(0.0, 0.0), v(1.0, 1.0)]).is_err());
        assert!(convex_hull(&[v(0.0, 0.0), v(1.0, 1.0), v(2.0, 2.0), v(3.0, 3.0)]).is_err());
    }

    #[test]
    fn clockwise_ring_is_reoriented() {
        let pg = ConvexPolygon::new(vec![v(0.0, 1.0), v(1.0, 0.0), v(0.0, 0.0)]).unwrap();
        // Positive signed area after normalization.
        let area2: f64 = (0..pg.len())
            .map(|i| {
                let a = pg.vertices()[i];
                let b = pg.vertices()[(i + 1) % pg.len()];
                a.x * b.y - a.y * b.x
            })
            .sum();
        assert!(area2 > 0.0);
    }

    #[test]
    fn reflex_vertex_is_named() {
        let err = ConvexPolygon::new(vec![
            v(0.0, 0.0),
            v(2.0, 0.0),
            v(1.0, 0.1), // dent
            v(2.0, 2.0),
            v(0.0, 2.0),
        ])
        .unwrap_err();
        match err {
            GeometryError::NonConvex(i) => assert_eq!(i, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn dilation_is_a_homothety() {
        let sq = unit_square_origin();
        let same = sq.dilate(0.0).unwrap();
        assert_eq!(sq.vertices(), same.vertices());

        let grown = sq.dilate(0.1).unwrap();
        for vert in grown.vertices() {
            assert_relative_eq!(vert.x.abs(), 0.55, epsilon = 1e-12);
            assert_relative_eq!(vert.y.abs(), 0.55, epsilon = 1e-12);
        }

        // Bow vertex of the supply-vessel hull under the 10% margin.
        let hull = crate::vessel::VesselParams::northern_clipper()
            .hull_polygon()
            .unwrap();
        let safety = hull.dilate(0.1).unwrap();
        assert!(safety
            .vertices()
            .iter()
            .any(|p| (p.x - 42.9).abs() < 1e-9 && p.y.abs() < 1e-12));
    }

    #[test]
    fn dilation_requires_origin_inside() {
        let off = ConvexPolygon::new(vec![v(1.0, 1.0), v(2.0, 1.0), v(2.0, 2.0), v(1.0, 2.0)])
            .unwrap();
        assert!(matches!(
            off.dilate(0.1),
            Err(GeometryError::OriginOutside)
        ));
    }

    #[test]
    fn unit_square_halfspaces() {
        let sq = ConvexPolygon::new(vec![v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)])
            .unwrap();
        let hs = sq.to_halfspaces();
        assert_eq!(hs.len(), 4);
        let mut expect = vec![
            (v(1.0, 0.0), 1.0),
            (v(0.0, 1.0), 1.0),
            (v(-1.0, 0.0), 0.0),
            (v(0.0, -1.0), 0.0),
        ];
        for h in &hs.rows {
            let idx = expect
                .iter()
                .position(|(n, b)| (n - h.normal).norm() < 1e-12 && (b - h.offset).abs() < 1e-12)
                .unwrap_or_else(|| panic!("unexpected row {h:?}"));
            expect.remove(idx);
        }
        assert!(expect.is_empty());
    }

    #[test]
    fn triangle_hypotenuse_row() {
        let tri =
            ConvexPolygon::new(vec![v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)]).unwrap();
        let hs = tri.to_halfspaces();
        let s = 0.5f64.sqrt();
        assert!(hs.rows.iter().any(|h| {
            (h.normal - v(s, s)).norm() < 1e-12 && (h.offset - s).abs() < 1e-12
        }));
    }

    #[test]
    fn halfspace_rows_are_tight_on_their_edges() {
        let hull = crate::vessel::VesselParams::northern_clipper()
            .hull_polygon()
            .unwrap();
        let hs = hull.to_halfspaces();
        let n = hull.len();
        for (i, h) in hs.rows.iter().enumerate() {
            let p = hull.vertices()[i];
            let q = hull.vertices()[(i + 1) % n];
            assert_relative_eq!(h.normal.dot(&p), h.offset, epsilon = 1e-9);
            assert_relative_eq!(h.normal.dot(&q), h.offset, epsilon = 1e-9);
            assert_relative_eq!(h.normal.norm(), 1.0, epsilon = 1e-12);
        }
        // All polygon vertices feasible for all rows.
        for p in hull.vertices() {
            for r in hs.residuals_at(p) {
                assert!(r >= -1e-9);
            }
        }
    }

    #[test]
    fn containment_residual_examples() {
        // +/-100 m square region around the origin.
        let region = ConvexPolygon::new(vec![
            v(100.0, 100.0),
            v(-100.0, 100.0),
            v(-100.0, -100.0),
            v(100.0, -100.0),
        ])
        .unwrap()
        .to_halfspaces();
        let res = containment_residuals(
            &region,
            &Pose::new(0.0, 0.0, 0.0),
            &[Vector2::zeros()],
        );
        for j in 0..4 {
            assert_relative_eq!(res[(0, j)], 100.0, epsilon = 1e-12);
        }

        // Quarter turn moves the bow point (39, 0) onto the +y axis.
        let row = HalfspaceSet {
            rows: vec![Halfspace {
                normal: v(0.0, 1.0),
                offset: 50.0,
            }],
        };
        let res = containment_residuals(
            &row,
            &Pose::new(0.0, 0.0, std::f64::consts::FRAC_PI_2),
            &[v(39.0, 0.0)],
        );
        assert_relative_eq!(res[(0, 0)], 11.0, epsilon = 1e-9);

        // A point on the boundary has residual exactly zero.
        let res = containment_residuals(&row, &Pose::new(0.0, 50.0, 0.0), &[v(0.0, 0.0)]);
        assert_relative_eq!(res[(0, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_pose_matches_direct_halfspace_residuals() {
        let hull = unit_square_origin();
        let hs = hull.to_halfspaces();
        let pts = [v(0.1, 0.2), v(-0.4, 0.4), v(0.0, -0.5)];
        let mat = containment_residuals(&hs, &Pose::new(0.0, 0.0, 0.0), &pts);
        for (i, p) in pts.iter().enumerate() {
            for (j, r) in hs.residuals_at(p).into_iter().enumerate() {
                assert_relative_eq!(mat[(i, j)], r, epsilon = 1e-14);
            }
        }
    }
}
