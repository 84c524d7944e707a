//! Triangle meshes: STL and OBJ input plus a few procedural shapes.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

impl TriMesh {
    pub fn corners(&self, t: usize) -> [[f64; 3]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }

    /// Scales about the origin, then translates.
    pub fn transformed(mut self, scale: f64, offset: [f64; 3]) -> Self {
        for v in &mut self.vertices {
            for a in 0..3 {
                v[a] = v[a] * scale + offset[a];
            }
        }
        self
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "stl" => Self::load_stl(path),
            "obj" => Self::load_obj(path),
            _ => Err(Error::Mesh(format!("{}: expected .stl or .obj", path.display()))),
        }
    }

    /// ASCII or binary STL.
    pub fn load_stl(path: &Path) -> Result<Self> {
        let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let m = stl_io::read_stl(&mut file).map_err(|e| Error::Format {
            path: path.into(),
            reason: e.to_string(),
        })?;
        Ok(TriMesh {
            vertices: m.vertices.iter().map(|v| [v[0] as f64, v[1] as f64, v[2] as f64]).collect(),
            triangles: m
                .faces
                .iter()
                .map(|f| [f.vertices[0] as u32, f.vertices[1] as u32, f.vertices[2] as u32])
                .collect(),
        })
    }

    pub fn load_obj(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse_obj(BufReader::new(file)).map_err(|reason| Error::Format {
            path: path.into(),
            reason,
        })
    }

    /// Reads `v` and `f` records; polygons are fan-triangulated, other records
    /// are ignored.
    pub fn parse_obj<R: BufRead>(r: R) -> std::result::Result<Self, String> {
        let mut mesh = TriMesh::default();
        for (ln, line) in r.lines().enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let mut v = [0.0; 3];
                    for c in &mut v {
                        *c = it
                            .next()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| format!("line {}: bad vertex", ln + 1))?;
                    }
                    mesh.vertices.push(v);
                }
                Some("f") => {
                    let n = mesh.vertices.len() as i64;
                    let idx: Vec<u32> = it
                        .map(|tok| {
                            let first = tok.split('/').next().unwrap_or("");
                            let i: i64 = first.parse().map_err(|_| format!("line {}: bad face index", ln + 1))?;
                            let i = if i < 0 { n + i } else { i - 1 };
                            if i < 0 || i >= n {
                                return Err(format!("line {}: face index out of range", ln + 1));
                            }
                            Ok(i as u32)
                        })
                        .collect::<std::result::Result<_, _>>()?;
                    if idx.len() < 3 {
                        return Err(format!("line {}: face with fewer than 3 vertices", ln + 1));
                    }
                    for k in 1..idx.len() - 1 {
                        mesh.triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        Ok(mesh)
    }

    pub fn write_obj<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    /// Radial surface `r(theta, phi)` on a latitude-longitude grid.
    pub fn radial<F: Fn(f64, f64) -> f64>(center: [f64; 3], n_theta: usize, n_phi: usize, r: F) -> Self {
        let mut mesh = TriMesh::default();
        let point = |th: f64, ph: f64| {
            let rr = r(th, ph);
            [
                center[0] + rr * th.sin() * ph.cos(),
                center[1] + rr * th.sin() * ph.sin(),
                center[2] + rr * th.cos(),
            ]
        };
        mesh.vertices.push(point(0.0, 0.0));
        for i in 1..n_theta {
            let th = PI * i as f64 / n_theta as f64;
            for j in 0..n_phi {
                mesh.vertices.push(point(th, 2.0 * PI * j as f64 / n_phi as f64));
            }
        }
        mesh.vertices.push(point(PI, 0.0));
        let south = (mesh.vertices.len() - 1) as u32;
        let ring = |i: usize, j: usize| (1 + (i - 1) * n_phi + j % n_phi) as u32;
        for j in 0..n_phi {
            mesh.triangles.push([0, ring(1, j), ring(1, j + 1)]);
        }
        for i in 1..n_theta - 1 {
            for j in 0..n_phi {
                mesh.triangles.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
                mesh.triangles.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
            }
        }
        for j in 0..n_phi {
            mesh.triangles.push([ring(n_theta - 1, j), south, ring(n_theta - 1, j + 1)]);
        }
        mesh
    }

    pub fn sphere(center: [f64; 3], radius: f64, resolution: usize) -> Self {
        let n = resolution.max(4);
        Self::radial(center, n, 2 * n, |_, _| radius)
    }

    /// Concave test body `R (1 + amp sin(k theta) sin(k phi))`.
    pub fn bumpy_sphere(center: [f64; 3], radius: f64, amp: f64, k: f64, resolution: usize) -> Self {
        let n = resolution.max(8);
        Self::radial(center, n, 2 * n, |th, ph| radius * (1.0 + amp * (k * th).sin() * (k * ph).sin()))
    }

    /// Axis-aligned unit square in the `z = z0` plane.
    pub fn unit_quad(z0: f64) -> Self {
        TriMesh {
            vertices: vec![[0.0, 0.0, z0], [1.0, 0.0, z0], [1.0, 1.0, z0], [0.0, 1.0, z0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_area_converges() {
        let m = TriMesh::sphere([0.0; 3], 2.0, 64);
        let exact = 4.0 * PI * 4.0;
        assert!((m.area() - exact).abs() / exact < 2e-3);
    }

    #[test]
    fn obj_round_trip_and_polygons() {
        let src = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n";
        let m = TriMesh::parse_obj(src.as_bytes()).unwrap();
        assert_eq!(m.triangles.len(), 2);
        assert!((m.area() - 1.0).abs() < 1e-15);
        let mut buf = Vec::new();
        m.write_obj(&mut buf).unwrap();
        assert_eq!(TriMesh::parse_obj(buf.as_slice()).unwrap(), m);
        assert!(TriMesh::parse_obj("f 1 2 3\n".as_bytes()).is_err());
    }

    #[test]
    fn stl_round_trip() {
        let m = TriMesh::unit_quad(0.5);
        let tris: Vec<stl_io::Triangle> = m
            .triangles
            .iter()
            .map(|t| {
                let v = |i: u32| {
                    let p = m.vertices[i as usize];
                    stl_io::Vertex::new([p[0] as f32, p[1] as f32, p[2] as f32])
                };
                stl_io::Triangle {
                    normal: stl_io::Normal::new([0.0, 0.0, 1.0]),
                    vertices: [v(t[0]), v(t[1]), v(t[2])],
                }
            })
            .collect();
        let dir = std::env::temp_dir().join(format!("kinetic-stl-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("quad.stl");
        let mut f = std::fs::File::create(&path).unwrap();
        stl_io::write_stl(&mut f, tris.iter()).unwrap();
        drop(f);
        let back = TriMesh::load(&path).unwrap();
        assert_eq!(back.triangles.len(), 2);
        assert!((back.area() - 1.0).abs() < 1e-6);
        std::fs::remove_dir_all(dir).ok();
    }
}
