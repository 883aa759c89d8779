use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::DiskMesh;
use crate::surface::{ImplicitSurface, PROJECTION_TOL};
use crate::Vec3;

/// Piecewise-linear map from the disk mesh into `R³`.
#[derive(Debug, Clone)]
pub struct SurfaceMap {
    mesh: Arc<DiskMesh>,
    pub positions: Vec<Vec3>,
}

impl SurfaceMap {
    pub fn new(mesh: Arc<DiskMesh>, positions: Vec<Vec3>) -> Result<Self> {
        mesh.check_len(positions.len())?;
        Ok(Self { mesh, positions })
    }

    pub fn from_fn(mesh: Arc<DiskMesh>, f: impl Fn([f64; 2]) -> Vec3) -> Self {
        let positions = mesh.vertices.iter().map(|&x| f(x)).collect();
        Self { mesh, positions }
    }

    pub fn mesh(&self) -> &Arc<DiskMesh> {
        &self.mesh
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Same mesh and a new set of positions.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self> {
        Self::new(self.mesh.clone(), positions)
    }

    /// `(u_x, u_y)` on triangle `t`.
    pub fn partials(&self, t: usize) -> (Vec3, Vec3) {
        let tri = self.mesh.triangles[t];
        let g = self.mesh.basis_gradients(t);
        let mut ux = Vec3::zeros();
        let mut uy = Vec3::zeros();
        for k in 0..3 {
            ux += self.positions[tri[k]] * g[k][0];
            uy += self.positions[tri[k]] * g[k][1];
        }
        (ux, uy)
    }

    /// Boundary positions in loop order.
    pub fn boundary_loop(&self) -> Vec<Vec3> {
        self.mesh.boundary.iter().map(|&b| self.positions[b]).collect()
    }

    /// Error unless every boundary vertex lies on `surface`.
    pub fn check_boundary(&self, surface: &ImplicitSurface) -> Result<()> {
        for &b in &self.mesh.boundary {
            let value = surface.level(&self.positions[b]);
            if !(value.abs() <= 1e3 * PROJECTION_TOL) {
                return Err(Error::BoundaryConstraint { vertex: b, value });
            }
        }
        Ok(())
    }

    /// Move boundary vertices to their closest points on `surface`.
    pub fn project_boundary(&mut self, surface: &ImplicitSurface) -> Result<()> {
        for &b in &self.mesh.boundary {
            self.positions[b] = surface.closest_point(&self.positions[b])?;
        }
        Ok(())
    }

    /// Largest vertex displacement between two maps on the same mesh.
    pub fn max_distance(&self, other: &SurfaceMap) -> f64 {
        self.positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `(1-s) self + s other`, boundary not re-projected.
    pub fn lerp(&self, other: &SurfaceMap, s: f64) -> SurfaceMap {
        let positions = self
            .positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| a * (1.0 - s) + b * s)
            .collect();
        SurfaceMap { mesh: self.mesh.clone(), positions }
    }

    /// OBJ with positions as `v`, domain coordinates as `vt`, 1-based faces.
    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# surface map: {} vertices, {} faces", self.len(), self.mesh.num_triangles())?;
        for p in &self.positions {
            writeln!(w, "v {} {} {}", p[0], p[1], p[2])?;
        }
        for x in &self.mesh.vertices {
            writeln!(w, "vt {} {}", x[0], x[1])?;
        }
        for t in &self.mesh.triangles {
            let [a, b, c] = t.map(|i| i + 1);
            writeln!(w, "f {a}/{a} {b}/{b} {c}/{c}")?;
        }
        Ok(())
    }

    /// Boundary loop sidecar: 0-based vertex indices, one per line.
    pub fn write_boundary<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# boundary loop, 0-based vertex indices, counter-clockwise")?;
        for b in &self.mesh.boundary {
            writeln!(w, "{b}")?;
        }
        Ok(())
    }

    pub fn write_vtk<W: Write>(&self, mut w: W) -> Result<()> {
        let pts: Vec<[f64; 3]> = self.positions.iter().map(|p| [p[0], p[1], p[2]]).collect();
        crate::mesh::write_vtk_grid(&mut w, "surface map", &pts, &self.mesh.triangles)
    }

    /// Inverse of [`write_obj`](Self::write_obj) + [`write_boundary`](Self::write_boundary).
    pub fn read_obj(obj: &str, boundary: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse(format!("obj line {}: {msg}", line + 1));
        let mut pos = Vec::new();
        let mut dom = Vec::new();
        let mut tris = Vec::new();
        for (ln, line) in obj.lines().enumerate() {
            let mut it = line.split_whitespace();
            let tag = it.next();
            let nums = |it: std::str::SplitWhitespace| -> Result<Vec<f64>> {
                it.map(|s| s.parse::<f64>().map_err(|_| bad(ln, "bad number"))).collect()
            };
            match tag {
                Some("v") => {
                    let v = nums(it)?;
                    if v.len() != 3 {
                        return Err(bad(ln, "expected 3 coordinates"));
                    }
                    pos.push(Vec3::new(v[0], v[1], v[2]));
                }
                Some("vt") => {
                    let v = nums(it)?;
                    if v.len() != 2 {
                        return Err(bad(ln, "expected 2 texture coordinates"));
                    }
                    dom.push([v[0], v[1]]);
                }
                Some("f") => {
                    let idx: Vec<usize> = it
                        .map(|s| {
                            s.split('/')
                                .next()
                                .and_then(|i| i.parse::<usize>().ok())
                                .filter(|&i| i > 0)
                                .map(|i| i - 1)
                                .ok_or_else(|| bad(ln, "bad face index"))
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() != 3 {
                        return Err(bad(ln, "faces must be triangles"));
                    }
                    tris.push([idx[0], idx[1], idx[2]]);
                }
                _ => {}
            }
        }
        if dom.len() != pos.len() {
            return Err(Error::Parse("vt count differs from v count".into()));
        }
        let bnd: Vec<usize> = boundary
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<usize>().map_err(|_| Error::Parse(format!("bad boundary index {l:?}"))))
            .collect::<Result<_>>()?;
        let mut mesh = DiskMesh::from_parts(dom, tris, bnd)?;
        let n = mesh.boundary.len();
        if n % 8 == 0 && (n / 8).is_power_of_two() {
            mesh.level = (n / 8).trailing_zeros();
        }
        Self::new(Arc::new(mesh), pos)
    }
}
