//! Triangulated unit disk with P1 elements.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::Csr;
use crate::par;

/// Finest refinement level accepted by [`DiskMesh::build`].
pub const MAX_LEVEL: u32 = 9;

/// Conforming triangulation of the closed unit disk.
///
/// Level 0 is a center fan over 8 boundary vertices; each refinement splits
/// every triangle into four and pushes new boundary midpoints onto the unit
/// circle. Triangles are counter-clockwise and the boundary loop runs
/// counter-clockwise.
#[derive(Debug, Clone)]
pub struct DiskMesh {
    pub level: u32,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Boundary vertex indices in counter-clockwise order.
    pub boundary: Vec<usize>,
    boundary_pos: Vec<Option<usize>>,
    areas: Vec<f64>,
    grads: Vec<[[f64; 2]; 3]>,
    mass: Vec<f64>,
    boundary_weight: Vec<f64>,
    h: f64,
}

impl DiskMesh {
    pub fn build(level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidParameter(format!(
                "mesh level {level} exceeds {MAX_LEVEL}"
            )));
        }
        let n0 = 8;
        let mut vertices = vec![[0.0, 0.0]];
        for k in 0..n0 {
            let t = std::f64::consts::TAU * k as f64 / n0 as f64;
            vertices.push([t.cos(), t.sin()]);
        }
        let mut triangles: Vec<[usize; 3]> =
            (0..n0).map(|k| [0, 1 + k, 1 + (k + 1) % n0]).collect();
        let mut boundary: Vec<usize> = (1..=n0).collect();

        for _ in 0..level {
            let mut on_boundary = vec![false; vertices.len()];
            for &b in &boundary {
                on_boundary[b] = true;
            }
            let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
            let mut next = Vec::with_capacity(triangles.len() * 4);
            let mut midpoint = |a: usize, b: usize, vs: &mut Vec<[f64; 2]>| -> usize {
                let key = (a.min(b), a.max(b));
                *mids.entry(key).or_insert_with(|| {
                    let (p, q) = (vs[a], vs[b]);
                    let mut m = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
                    if on_boundary[a] && on_boundary[b] {
                        let r = m[0].hypot(m[1]);
                        m = [m[0] / r, m[1] / r];
                    }
                    vs.push(m);
                    vs.len() - 1
                })
            };
            for &[a, b, c] in &triangles {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.push([a, ab, ca]);
                next.push([ab, b, bc]);
                next.push([ca, bc, c]);
                next.push([ab, bc, ca]);
            }
            let mut loop_next = Vec::with_capacity(boundary.len() * 2);
            for k in 0..boundary.len() {
                let (a, b) = (boundary[k], boundary[(k + 1) % boundary.len()]);
                loop_next.push(a);
                loop_next.push(mids[&(a.min(b), a.max(b))]);
            }
            triangles = next;
            boundary = loop_next;
        }
        let mut mesh = Self::from_parts(vertices, triangles, boundary)?;
        mesh.level = level;
        Ok(mesh)
    }

    /// Assemble a mesh from raw parts, validating orientation and the loop.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<usize>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if boundary.len() < 3 {
            return Err(Error::InvalidParameter("boundary loop too short".into()));
        }
        let mut boundary_pos = vec![None; nv];
        for (k, &b) in boundary.iter().enumerate() {
            if b >= nv || boundary_pos[b].is_some() {
                return Err(Error::InvalidParameter(format!("bad boundary vertex {b}")));
            }
            boundary_pos[b] = Some(k);
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidParameter(format!("triangle {t} out of range")));
            }
            let [p, q, r] = tri.map(|i| vertices[i]);
            let det = (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]);
            if det <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "triangle {t} is degenerate or clockwise"
                )));
            }
            // grad of barycentric coordinate k = rot(opposite edge) / det
            let g = |a: [f64; 2], b: [f64; 2]| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
            grads.push([g(q, r), g(r, p), g(p, q)]);
            areas.push(det / 2.0);
        }
        let mut mass = vec![0.0; nv];
        let mut h: f64 = 0.0;
        for (tri, &a) in triangles.iter().zip(&areas) {
            for k in 0..3 {
                mass[tri[k]] += a / 3.0;
                let (p, q) = (vertices[tri[k]], vertices[tri[(k + 1) % 3]]);
                h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        let nb = boundary.len();
        let edge = |k: usize| {
            let (p, q) = (vertices[boundary[k]], vertices[boundary[(k + 1) % nb]]);
            (p[0] - q[0]).hypot(p[1] - q[1])
        };
        let boundary_weight = (0..nb).map(|k| 0.5 * (edge(k) + edge((k + nb - 1) % nb))).collect();
        Ok(Self {
            level: 0,
            vertices,
            triangles,
            boundary,
            boundary_pos,
            areas,
            grads,
            mass,
            boundary_weight,
            h,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Longest edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    /// Gradients of the three barycentric basis functions on triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.grads[t]
    }

    /// Lumped (row-sum) mass of each vertex.
    pub fn lumped_mass(&self) -> &[f64] {
        &self.mass
    }

    /// Position of vertex `v` in the boundary loop, if it is on the boundary.
    pub fn boundary_position(&self, v: usize) -> Option<usize> {
        self.boundary_pos[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_pos[v].is_some()
    }

    /// Arc-length weight of each boundary loop entry (half the adjacent edges).
    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weight
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Piecewise-constant gradient of a nodal scalar field.
    pub fn gradient(&self, field: &[f64]) -> Result<Vec<[f64; 2]>> {
        self.check_len(field.len())?;
        Ok(par::map_range(self.triangles.len(), |t| {
            let g = &self.grads[t];
            let mut out = [0.0; 2];
            for k in 0..3 {
                let f = field[self.triangles[t][k]];
                out[0] += f * g[k][0];
                out[1] += f * g[k][1];
            }
            out
        }))
    }

    /// Integral of a piecewise-constant density.
    pub fn integrate(&self, density: &[f64]) -> Result<f64> {
        if density.len() != self.triangles.len() {
            return Err(Error::DimensionMismatch {
                expected: self.triangles.len(),
                got: density.len(),
            });
        }
        Ok(par::sum_range(density.len(), |t| density[t] * self.areas[t]))
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if n != self.vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vertices.len(),
                got: n,
            });
        }
        Ok(())
    }

    /// Vertex adjacency lists (sorted, without self).
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for tri in &self.triangles {
            for k in 0..3 {
                adj[tri[k]].push(tri[(k + 1) % 3]);
                adj[tri[k]].push(tri[(k + 2) % 3]);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Scalar P1 stiffness matrix `∫ ∇φ_i·∇φ_j`.
    pub fn stiffness(&self) -> Csr {
        let mut trip = Vec::with_capacity(9 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let g = &self.grads[t];
            for a in 0..3 {
                for b in 0..3 {
                    let v = self.areas[t] * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    trip.push((tri[a], tri[b], v));
                }
            }
        }
        Csr::from_triplets(self.vertices.len(), trip)
    }

    /// Wavefront OBJ with `z = 0`; faces are 1-based.
    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# disk mesh level {}", self.level)?;
        for v in &self.vertices {
            writeln!(w, "v {} {} 0", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    /// Legacy ASCII VTK unstructured grid.
    pub fn write_vtk<W: Write>(&self, mut w: W) -> Result<()> {
        let pts: Vec<[f64; 3]> = self.vertices.iter().map(|v| [v[0], v[1], 0.0]).collect();
        write_vtk_grid(&mut w, "disk mesh", &pts, &self.triangles)
    }
}

pub(crate) fn write_vtk_grid<W: Write>(
    w: &mut W,
    title: &str,
    points: &[[f64; 3]],
    triangles: &[[usize; 3]],
) -> Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", points.len())?;
    for p in points {
        writeln!(w, "{} {} {}", p[0], p[1], p[2])?;
    }
    writeln!(w, "CELLS {} {}", triangles.len(), 4 * triangles.len())?;
    for t in triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {}", triangles.len())?;
    for _ in triangles {
        writeln!(w, "5")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_refinement_recurrence() {
        // V' = V + E, F' = 4F, E' = 2E + 3F
        let (mut v, mut e, mut f) = (9usize, 16usize, 8usize);
        for level in 0..=5 {
            let m = DiskMesh::build(level).unwrap();
            assert_eq!(m.num_vertices(), v);
            assert_eq!(m.num_triangles(), f);
            assert_eq!(m.boundary.len(), 8 << level);
            // Euler characteristic of a disk
            assert_eq!(v + f, e + 1);
            (v, e, f) = (v + e, 2 * e + 3 * f, 4 * f);
        }
    }

    #[test]
    fn level_four_sizes() {
        let m = DiskMesh::build(4).unwrap();
        assert_eq!(m.num_vertices(), 1089);
        assert_eq!(m.num_triangles(), 2048);
        assert_eq!(m.boundary.len(), 128);
    }

    #[test]
    fn boundary_on_circle_and_ccw() {
        let m = DiskMesh::build(3).unwrap();
        for &b in &m.boundary {
            let p = m.vertices[b];
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-15);
        }
        let n = m.boundary.len();
        let mut winding = 0.0;
        for k in 0..n {
            let p = m.vertices[m.boundary[k]];
            let q = m.vertices[m.boundary[(k + 1) % n]];
            let d = q[1].atan2(q[0]) - p[1].atan2(p[0]);
            winding += d.sin().atan2(d.cos());
        }
        assert!((winding - std::f64::consts::TAU).abs() < 1e-12);
    }

    #[test]
    fn area_converges_to_pi() {
        // inscribed polygon area n/2 sin(2π/n)
        for level in 0..5 {
            let m = DiskMesh::build(level).unwrap();
            let n = m.boundary.len() as f64;
            let exact = 0.5 * n * (std::f64::consts::TAU / n).sin();
            let a = m.integrate(&vec![1.0; m.num_triangles()]).unwrap();
            assert!((a - exact).abs() < 1e-12, "{a} vs {exact}");
        }
    }

    #[test]
    fn gradient_exact_on_linear_fields() {
        let m = DiskMesh::build(2).unwrap();
        let f: Vec<f64> = m.vertices.iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 0.5).collect();
        for g in m.gradient(&f).unwrap() {
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 3.0).abs() < 1e-12);
        }
        assert!(m.gradient(&f[1..]).is_err());
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let m = DiskMesh::build(2).unwrap();
        let k = m.stiffness();
        let y = k.mul_vec(&vec![1.0; m.num_vertices()]);
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rejects_clockwise_triangles() {
        let vs = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(DiskMesh::from_parts(vs, vec![[0, 2, 1]], vec![0, 1, 2]).is_err());
    }

    #[test]
    fn obj_and_vtk_shapes() {
        let m = DiskMesh::build(1).unwrap();
        let mut buf = Vec::new();
        m.write_obj(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 25);
        assert_eq!(s.lines().filter(|l| l.starts_with("f ")).count(), 32);
        let mut buf = Vec::new();
        m.write_vtk(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("POINTS 25 double") && s.contains("CELLS 32 128"));
    }
}
