//! Poisson-disk sampling of triangle surfaces.

use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoissonMethod {
    /// Area-weighted dart throwing with rejection; stops after a run of
    /// consecutive rejections.
    #[default]
    DartThrowing,
    /// Oversample uniformly, then greedily drop the sample with most
    /// conflicts until no pair is closer than the radius.
    Elimination,
}

/// What a sampling run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub radius: f64,
    pub samples: usize,
    pub attempts: u64,
    pub degenerate_triangles: usize,
    pub area: f64,
    /// Samples per occupied grid cell: min, mean, max.
    pub per_cell: (usize, f64, usize),
}

impl SamplingReport {
    /// Whether the mean cell occupancy is in the 10..=100 band.
    pub fn density_in_band(&self) -> bool {
        (10.0..=100.0).contains(&self.per_cell.1)
    }
}

/// Expected saturated dart-throwing count `~0.547 A / (pi r^2 / 4)`.
pub fn expected_count(area: f64, radius: f64) -> f64 {
    0.547 * area / (std::f64::consts::PI * radius * radius / 4.0)
}

struct HashGrid {
    cell: f64,
    map: HashMap<[i64; 3], Vec<u32>>,
}

impl HashGrid {
    fn new(cell: f64) -> Self {
        HashGrid {
            cell,
            map: HashMap::new(),
        }
    }

    fn key(&self, p: [f64; 3]) -> [i64; 3] {
        [
            (p[0] / self.cell).floor() as i64,
            (p[1] / self.cell).floor() as i64,
            (p[2] / self.cell).floor() as i64,
        ]
    }

    fn insert(&mut self, p: [f64; 3], id: u32) {
        self.map.entry(self.key(p)).or_default().push(id);
    }

    fn neighbours<'a>(&'a self, p: [f64; 3]) -> impl Iterator<Item = u32> + 'a {
        let k = self.key(p);
        (0..27).flat_map(move |n| {
            let d = [n % 3 - 1, (n / 3) % 3 - 1, n / 9 - 1];
            self.map
                .get(&[k[0] + d[0], k[1] + d[1], k[2] + d[2]])
                .into_iter()
                .flatten()
                .copied()
        })
    }
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

struct AreaSampler {
    cdf: Vec<f64>,
    tris: Vec<usize>,
    degenerate: usize,
    area: f64,
}

impl AreaSampler {
    fn new(mesh: &TriMesh) -> Self {
        let mut cdf = Vec::new();
        let mut tris = Vec::new();
        let mut degenerate = 0;
        let mut acc = 0.0;
        for t in 0..mesh.triangles.len() {
            let a = mesh.triangle_area(t);
            if !(a > 1e-14) {
                degenerate += 1;
                continue;
            }
            acc += a;
            cdf.push(acc);
            tris.push(t);
        }
        AreaSampler {
            cdf,
            tris,
            degenerate,
            area: acc,
        }
    }

    fn draw(&self, mesh: &TriMesh, rng: &mut ChaCha8Rng) -> [f64; 3] {
        let x = rng.gen::<f64>() * self.area;
        let i = self.cdf.partition_point(|c| *c < x).min(self.cdf.len() - 1);
        let [a, b, c] = mesh.corners(self.tris[i]);
        let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        let s = r1.sqrt();
        let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
        [
            wa * a[0] + wb * b[0] + wc * c[0],
            wa * a[1] + wb * b[1] + wc * c[1],
            wa * a[2] + wb * b[2] + wc * c[2],
        ]
    }
}

/// Poisson-disk samples on `mesh` with minimum distance `radius`.
pub fn sample_surface(
    mesh: &TriMesh,
    radius: f64,
    seed: u64,
    method: PoissonMethod,
) -> (Vec<[f64; 3]>, SamplingReport) {
    assert!(radius > 0.0, "radius must be positive");
    let sampler = AreaSampler::new(mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r2 = radius * radius;
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut attempts = 0u64;
    if sampler.tris.is_empty() {
        return (points, report(radius, &[], 0, sampler.degenerate, 0.0));
    }
    match method {
        PoissonMethod::DartThrowing => {
            let mut grid = HashGrid::new(radius);
            let max_fail = 2000 + (expected_count(sampler.area, radius) as u64).min(20_000) / 4;
            let mut fails = 0u64;
            while fails < max_fail {
                attempts += 1;
                let p = sampler.draw(mesh, &mut rng);
                if grid.neighbours(p).any(|j| dist2(points[j as usize], p) < r2) {
                    fails += 1;
                    continue;
                }
                fails = 0;
                grid.insert(p, points.len() as u32);
                points.push(p);
            }
        }
        PoissonMethod::Elimination => {
            let n = (4.0 * expected_count(sampler.area, radius)).ceil().max(8.0) as usize;
            let cand: Vec<[f64; 3]> = (0..n).map(|_| sampler.draw(mesh, &mut rng)).collect();
            attempts = n as u64;
            let mut grid = HashGrid::new(radius);
            for (i, p) in cand.iter().enumerate() {
                grid.insert(*p, i as u32);
            }
            let conflicts: Vec<Vec<u32>> = cand
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    grid.neighbours(*p)
                        .filter(|&j| j as usize != i && dist2(cand[j as usize], *p) < r2)
                        .collect()
                })
                .collect();
            let mut count: Vec<usize> = conflicts.iter().map(Vec::len).collect();
            let mut alive = vec![true; n];
            let mut heap: BinaryHeap<(usize, u32)> = (0..n).map(|i| (count[i], i as u32)).collect();
            while let Some((c, i)) = heap.pop() {
                let i = i as usize;
                if !alive[i] || c != count[i] {
                    continue;
                }
                if c == 0 {
                    break;
                }
                alive[i] = false;
                for &j in &conflicts[i] {
                    let j = j as usize;
                    if alive[j] {
                        count[j] -= 1;
                        heap.push((count[j], j as u32));
                    }
                }
            }
            points = (0..n).filter(|&i| alive[i]).map(|i| cand[i]).collect();
        }
    }
    let rep = report(radius, &points, attempts, sampler.degenerate, sampler.area);
    (points, rep)
}

fn report(radius: f64, points: &[[f64; 3]], attempts: u64, degenerate: usize, area: f64) -> SamplingReport {
    let mut cells: HashMap<[i64; 3], usize> = HashMap::new();
    for p in points {
        *cells.entry([p[0].floor() as i64, p[1].floor() as i64, p[2].floor() as i64]).or_default() += 1;
    }
    let per_cell = if cells.is_empty() {
        (0, 0.0, 0)
    } else {
        let min = *cells.values().min().unwrap();
        let max = *cells.values().max().unwrap();
        (min, points.len() as f64 / cells.len() as f64, max)
    };
    SamplingReport {
        radius,
        samples: points.len(),
        attempts,
        degenerate_triangles: degenerate,
        area,
        per_cell,
    }
}

/// Smallest pairwise distance by brute force.
pub fn min_pair_distance(points: &[[f64; 3]]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min(dist2(points[i], points[j]));
        }
    }
    best.sqrt()
}

/// Barycentric containment test with tolerance `eps`.
pub fn on_triangle(p: [f64; 3], tri: [[f64; 3]; 3], eps: f64) -> bool {
    let [a, b, c] = tri;
    let v0 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v1 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let v2 = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let dot = |x: [f64; 3], y: [f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let (d00, d01, d11, d20, d21) = (dot(v0, v0), dot(v0, v1), dot(v1, v1), dot(v2, v0), dot(v2, v1));
    let den = d00 * d11 - d01 * d01;
    let v = (d11 * d20 - d01 * d21) / den;
    let w = (d00 * d21 - d01 * d20) / den;
    let u = 1.0 - v - w;
    let proj = [a[0] + v * v0[0] + w * v1[0], a[1] + v * v0[1] + w * v1[1], a[2] + v * v0[2] + w * v1[2]];
    u >= -eps && v >= -eps && w >= -eps && dist2(proj, p).sqrt() <= eps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_samples_in_plane_and_separated() {
        let m = TriMesh::unit_quad(0.25);
        for method in [PoissonMethod::DartThrowing, PoissonMethod::Elimination] {
            let (pts, rep) = sample_surface(&m, 0.5, 3, method);
            assert!(!pts.is_empty());
            assert_eq!(rep.samples, pts.len());
            assert!(pts.iter().all(|p| p[2] == 0.25));
            assert!(min_pair_distance(&pts) >= 0.5);
        }
    }

    #[test]
    fn disjoint_triangles_contain_all_samples() {
        let m = TriMesh {
            vertices: vec![
                [0.0, 0.0, 0.0],
                [2.0, 0.0, 0.0],
                [0.0, 2.0, 0.0],
                [5.0, 5.0, 5.0],
                [5.0, 7.0, 5.0],
                [5.0, 5.0, 7.0],
            ],
            triangles: vec![[0, 1, 2], [3, 4, 5]],
        };
        let (pts, _) = sample_surface(&m, 0.2, 9, PoissonMethod::DartThrowing);
        for p in &pts {
            assert!(on_triangle(*p, m.corners(0), 1e-12) || on_triangle(*p, m.corners(1), 1e-12));
        }
    }

    #[test]
    fn degenerate_triangles_counted() {
        let m = TriMesh {
            vertices: vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, 0.0, 0.0]],
            triangles: vec![[0, 1, 2], [0, 1, 3]],
        };
        let (_, rep) = sample_surface(&m, 0.3, 1, PoissonMethod::DartThrowing);
        assert_eq!(rep.degenerate_triangles, 1);
    }

    #[test]
    fn same_seed_same_samples() {
        let m = TriMesh::sphere([0.0; 3], 1.0, 16);
        let a = sample_surface(&m, 0.2, 5, PoissonMethod::DartThrowing).0;
        let b = sample_surface(&m, 0.2, 5, PoissonMethod::DartThrowing).0;
        assert_eq!(a, b);
    }
}
