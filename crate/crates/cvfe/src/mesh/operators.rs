//! Per-simplex geometry: P1 basis gradients, stiffness coefficients,
//! dual-cell measures and the sub-cell quadrature decomposition.

use super::{dist, sub, Mesh, MeshError};

/// Precomputed geometric operators of a mesh.
///
/// `stiffness` holds, per simplex, the full (d+1) x (d+1) symmetric table
/// `a[k][l] = -|S| grad e_k . grad e_l`, whose rows sum to zero because the
/// P1 gradients sum to zero. `dual_measure[v]` is the barycentric dual-cell
/// measure `|K|`, and the sub-cell arrays describe the d! barycentric
/// sub-simplices of each `K ∩ S` used for dual-cell quadrature.
#[derive(Debug, Clone)]
pub struct MeshOperators {
    pub dim: usize,
    pub simplex_measure: Vec<f64>,
    pub simplex_diameter: Vec<f64>,
    pub inradius: Vec<f64>,
    /// One gradient per (simplex, local vertex), stride `dim + 1`.
    pub basis_gradients: Vec<[f64; 3]>,
    /// Row-major (d+1)^2 block per simplex.
    pub stiffness: Vec<f64>,
    pub dual_measure: Vec<f64>,
    pub mesh_size: f64,
    pub regularity: f64,
    /// Measures of the barycentric sub-simplices, `(d+1) * d!` per simplex.
    pub subcell_measures: Vec<f64>,
    /// Centroids matching `subcell_measures`.
    pub subcell_centroids: Vec<[f64; 3]>,
}

impl MeshOperators {
    pub fn n_simplices(&self) -> usize {
        self.simplex_measure.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.dual_measure.len()
    }

    /// Sub-simplices per dual sub-cell (d!).
    pub fn subcells_per_vertex(&self) -> usize {
        if self.dim == 2 {
            2
        } else {
            6
        }
    }

    #[inline]
    pub fn gradient(&self, s: usize, local: usize) -> [f64; 3] {
        self.basis_gradients[s * (self.dim + 1) + local]
    }

    /// Stiffness coefficient between local vertices `k` and `l` of simplex `s`.
    #[inline]
    pub fn stiffness_entry(&self, s: usize, k: usize, l: usize) -> f64 {
        let n = self.dim + 1;
        self.stiffness[s * n * n + k * n + l]
    }
}

/// Computes all geometric operators of `mesh`.
pub fn compute_operators(mesh: &Mesh) -> Result<MeshOperators, MeshError> {
    let d = mesh.dim;
    let nloc = d + 1;
    let ns = mesh.n_simplices();
    let nv = mesh.n_vertices();
    let nsub = if d == 2 { 2 } else { 6 };

    let mut simplex_measure = Vec::with_capacity(ns);
    let mut simplex_diameter = Vec::with_capacity(ns);
    let mut inradius = Vec::with_capacity(ns);
    let mut basis_gradients = Vec::with_capacity(ns * nloc);
    let mut stiffness = Vec::with_capacity(ns * nloc * nloc);
    let mut dual_measure = vec![0.0; nv];
    let mut subcell_measures = Vec::with_capacity(ns * nloc * nsub);
    let mut subcell_centroids = Vec::with_capacity(ns * nloc * nsub);

    for s in 0..ns {
        let vs = mesh.simplex(s);
        let p: Vec<[f64; 3]> = vs.iter().map(|&v| mesh.vertices[v]).collect();

        let measure = super::signed_simplex_measure(d, &p);
        if !(measure > 0.0) || !measure.is_finite() {
            return Err(MeshError::Geometry {
                simplex: s,
                message: format!("zero or negative measure {measure}"),
            });
        }
        simplex_measure.push(measure);

        let mut h: f64 = 0.0;
        for i in 0..nloc {
            for j in i + 1..nloc {
                h = h.max(dist(p[i], p[j]));
            }
        }
        simplex_diameter.push(h);
        inradius.push(simplex_inradius(d, &p, measure));

        let grads = basis_gradient_table(d, &p, measure);
        for k in 0..nloc {
            for l in 0..nloc {
                let g = -measure * dot(grads[k], grads[l]);
                stiffness.push(g);
            }
        }
        basis_gradients.extend_from_slice(&grads);

        for (local, &v) in vs.iter().enumerate() {
            dual_measure[v] += measure / nloc as f64;
        // sub-cell decomposition: chains vertex -> edge midpoint
        // (-> face centroid in 3D) -> simplex centroid
            let centroid = centroid_of(&p);
            let origin = p[local];
            if d == 2 {
                for other in 0..nloc {
                    if other == local {
                        continue;
                    }
                    let mid = scale_add(origin, p[other], 0.5);
                    let tri = [origin, mid, centroid];
                    subcell_measures.push(super::signed_simplex_measure(2, &tri).abs());
                    subcell_centroids.push(centroid_of(&tri));
                }
            } else {
                for w in 0..nloc {
                    if w == local {
                        continue;
                    }
                    for x in 0..nloc {
                        if x == local || x == w {
                            continue;
                        }
                        let mid = scale_add(origin, p[w], 0.5);
                        let face = [
                            (origin[0] + p[w][0] + p[x][0]) / 3.0,
                            (origin[1] + p[w][1] + p[x][1]) / 3.0,
                            (origin[2] + p[w][2] + p[x][2]) / 3.0,
                        ];
                        let tet = [origin, mid, face, centroid];
                        subcell_measures.push(super::signed_simplex_measure(3, &tet).abs());
                        subcell_centroids.push(centroid_of(&tet));
                    }
                }
            }
        }
    }

    let mesh_size = simplex_diameter.iter().copied().fold(0.0, f64::max);
    let regularity = simplex_diameter
        .iter()
        .zip(&inradius)
        .map(|(&h, &r)| h / r)
        .fold(0.0, f64::max);

    Ok(MeshOperators {
        dim: d,
        simplex_measure,
        simplex_diameter,
        inradius,
        basis_gradients,
        stiffness,
        dual_measure,
        mesh_size,
        regularity,
        subcell_measures,
        subcell_centroids,
    })
}

/// Integrates `g` over every barycentric dual cell by one-point centroid
/// quadrature on each sub-simplex; exact for globally affine `g`.
pub fn dual_cell_integral<F>(mesh: &Mesh, ops: &MeshOperators, g: F) -> Vec<f64>
where
    F: Fn([f64; 3]) -> f64,
{
    let nloc = mesh.dim + 1;
    let nsub = ops.subcells_per_vertex();
    let mut out = vec![0.0; mesh.n_vertices()];
    for s in 0..mesh.n_simplices() {
        let vs = mesh.simplex(s);
        for (local, &v) in vs.iter().enumerate() {
            let base = (s * nloc + local) * nsub;
            let mut acc = 0.0;
            for j in 0..nsub {
                acc += ops.subcell_measures[base + j] * g(ops.subcell_centroids[base + j]);
            }
            out[v] += acc;
        }
    }
    out
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn centroid_of(p: &[[f64; 3]]) -> [f64; 3] {
    let n = p.len() as f64;
    let mut c = [0.0; 3];
    for q in p {
        c[0] += q[0];
        c[1] += q[1];
        c[2] += q[2];
    }
    [c[0] / n, c[1] / n, c[2] / n]
}

fn scale_add(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

/// Gradients of the P1 basis functions on one simplex.
///
/// The gradients of the barycentric coordinates of vertices 1..d are the rows
/// of the inverse edge matrix; the first gradient closes the zero sum.
fn basis_gradient_table(d: usize, p: &[[f64; 3]], measure: f64) -> Vec<[f64; 3]> {
    let mut grads = vec![[0.0; 3]; d + 1];
    if d == 2 {
        let det = 2.0 * measure;
        let e1 = sub(p[1], p[0]);
        let e2 = sub(p[2], p[0]);
        // rows of [e1 e2]^-1 (columns are edges)
        grads[1] = [e2[1] / det, -e2[0] / det, 0.0];
        grads[2] = [-e1[1] / det, e1[0] / det, 0.0];
    } else {
        let det = 6.0 * measure;
        let e1 = sub(p[1], p[0]);
        let e2 = sub(p[2], p[0]);
        let e3 = sub(p[3], p[0]);
        grads[1] = [
            (e2[1] * e3[2] - e2[2] * e3[1]) / det,
            (e2[2] * e3[0] - e2[0] * e3[2]) / det,
            (e2[0] * e3[1] - e2[1] * e3[0]) / det,
        ];
        grads[2] = [
            (e3[1] * e1[2] - e3[2] * e1[1]) / det,
            (e3[2] * e1[0] - e3[0] * e1[2]) / det,
            (e3[0] * e1[1] - e3[1] * e1[0]) / det,
        ];
        grads[3] = [
            (e1[1] * e2[2] - e1[2] * e2[1]) / det,
            (e1[2] * e2[0] - e1[0] * e2[2]) / det,
            (e1[0] * e2[1] - e1[1] * e2[0]) / det,
        ];
    }
    for c in 0..3 {
        grads[0][c] = -(1..=d).map(|k| grads[k][c]).sum::<f64>();
    }
    grads
}

fn simplex_inradius(d: usize, p: &[[f64; 3]], measure: f64) -> f64 {
    if d == 2 {
        let perimeter = dist(p[0], p[1]) + dist(p[1], p[2]) + dist(p[2], p[0]);
        2.0 * measure / perimeter
    } else {
        let face_area = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| -> f64 {
            let u = sub(b, a);
            let v = sub(c, a);
            let cx = u[1] * v[2] - u[2] * v[1];
            let cy = u[2] * v[0] - u[0] * v[2];
            let cz = u[0] * v[1] - u[1] * v[0];
            0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
        };
        let total = face_area(p[0], p[1], p[2])
            + face_area(p[0], p[1], p[3])
            + face_area(p[0], p[2], p[3])
            + face_area(p[1], p[2], p[3]);
        3.0 * measure / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, build_rect_mesh, refine_uniform};
    use crate::numeric::compensated_sum;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn unit_right_triangle() -> Mesh {
        Mesh {
            dim: 2,
            vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            simplices: vec![0, 1, 2],
            dirichlet_vertices: vec![],
            boundary_faces: vec![0, 1, 1, 2, 2, 0],
            boundary_tags: vec![1, 2, 3],
            parent: None,
        }
    }

    #[test]
    fn unit_right_triangle_reference_values() {
        let mesh = unit_right_triangle();
        let ops = compute_operators(&mesh).unwrap();
        assert_eq!(ops.gradient(0, 0), [-1.0, -1.0, 0.0]);
        assert_eq!(ops.gradient(0, 1), [1.0, 0.0, 0.0]);
        assert_eq!(ops.gradient(0, 2), [0.0, 1.0, 0.0]);
        assert!((ops.stiffness_entry(0, 0, 1) - 0.5).abs() < 1e-14);
        assert!((ops.stiffness_entry(0, 0, 2) - 0.5).abs() < 1e-14);
        assert!(ops.stiffness_entry(0, 1, 2).abs() < 1e-14);
        for v in 0..3 {
            assert!((ops.dual_measure[v] - 1.0 / 6.0).abs() < 1e-14);
        }
        assert!((ops.mesh_size - 2f64.sqrt()).abs() < 1e-15);
    }

    /// Independent gradient oracle: finite differences of the barycentric
    /// coordinate evaluated through a generic linear solve.
    fn fd_gradient(dim: usize, p: &[[f64; 3]], local: usize, at: [f64; 3]) -> [f64; 3] {
        let eval = |x: [f64; 3]| -> f64 {
            // barycentric coordinates via dense Cramer solve
            let n = dim;
            let mut a = vec![vec![0.0; n]; n];
            let mut b = vec![0.0; n];
            for r in 0..n {
                for c in 0..n {
                    a[r][c] = p[c + 1][r] - p[0][r];
                }
                b[r] = x[r] - p[0][r];
            }
            let lam = if n == 2 {
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                vec![
                    (b[0] * a[1][1] - a[0][1] * b[1]) / det,
                    (a[0][0] * b[1] - b[0] * a[1][0]) / det,
                ]
            } else {
                let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
                let solve_col = |col: usize| {
                    let mut m = a.clone();
                    for r in 0..3 {
                        m[r][col] = b[r];
                    }
                    (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
                        / det
                };
                vec![solve_col(0), solve_col(1), solve_col(2)]
            };
            if local == 0 {
                1.0 - lam.iter().sum::<f64>()
            } else {
                lam[local - 1]
            }
        };
        let h = 1e-6;
        let mut g = [0.0; 3];
        for c in 0..dim {
            let mut hi = at;
            let mut lo = at;
            hi[c] += h;
            lo[c] -= h;
            g[c] = (eval(hi) - eval(lo)) / (2.0 * h);
        }
        g
    }

    #[test]
    fn gradients_match_finite_difference_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let p = [
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0],
                [rng.random_range(1.5..2.5), rng.random_range(-1.0..1.0), 0.0],
                [rng.random_range(-1.0..1.0), rng.random_range(1.5..2.5), 0.0],
            ];
            let mesh = Mesh {
                dim: 2,
                vertices: p.to_vec(),
                simplices: vec![0, 1, 2],
                dirichlet_vertices: vec![],
                boundary_faces: vec![0, 1, 1, 2, 2, 0],
                boundary_tags: vec![0, 0, 0],
                parent: None,
            };
            let ops = compute_operators(&mesh).unwrap();
            let centroid = [
                (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                (p[0][1] + p[1][1] + p[2][1]) / 3.0,
                0.0,
            ];
            for local in 0..3 {
                let g = ops.gradient(0, local);
                let gf = fd_gradient(2, &p, local, centroid);
                for c in 0..2 {
                    assert!((g[c] - gf[c]).abs() < 1e-8, "local {local} comp {c}");
                }
            }
        }
    }

    #[test]
    fn stiffness_rows_sum_to_zero_on_random_meshes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..5 {
            let nx = rng.random_range(2..6);
            let ny = rng.random_range(2..6);
            let mesh = build_rect_mesh(nx, ny, ((0.0, 1.3), (0.0, 0.9))).unwrap();
            let ops = compute_operators(&mesh).unwrap();
            for s in 0..mesh.n_simplices() {
                for k in 0..3 {
                    let row: f64 = (0..3).map(|l| ops.stiffness_entry(s, k, l)).sum();
                    assert!(row.abs() < 1e-13, "trial {trial} simplex {s} row {k}");
                    for l in 0..3 {
                        assert_eq!(
                            ops.stiffness_entry(s, k, l),
                            ops.stiffness_entry(s, l, k)
                        );
                    }
                }
            }
        }
        let mesh = build_box_mesh(2, 2, 2, ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))).unwrap();
        let ops = compute_operators(&mesh).unwrap();
        for s in 0..mesh.n_simplices() {
            for k in 0..4 {
                let row: f64 = (0..4).map(|l| ops.stiffness_entry(s, k, l)).sum();
                assert!(row.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dual_measures_partition_the_domain() {
        let mesh = build_rect_mesh(32, 4, ((0.0, 1.0), (0.0, 0.1))).unwrap();
        let ops = compute_operators(&mesh).unwrap();
        let total = compensated_sum(ops.dual_measure.iter().copied());
        assert!((total - 0.1).abs() < 1e-12 * 0.1);
        for v in 0..mesh.n_vertices() {
            let from_simplices: f64 = (0..mesh.n_simplices())
                .filter(|&s| mesh.simplex(s).contains(&v))
                .map(|s| ops.simplex_measure[s] / 3.0)
                .sum();
            assert!((ops.dual_measure[v] - from_simplices).abs() < 1e-15);
        }
    }

    #[test]
    fn subcell_measures_partition_each_simplex() {
        for mesh in [
            build_rect_mesh(3, 2, ((0.0, 1.1), (0.0, 0.4))).unwrap(),
            build_box_mesh(2, 1, 2, ((0.0, 1.0), (0.0, 0.5), (0.0, 0.8))).unwrap(),
        ] {
            let ops = compute_operators(&mesh).unwrap();
            let nloc = mesh.dim + 1;
            let nsub = ops.subcells_per_vertex();
            for s in 0..mesh.n_simplices() {
                let lo = s * nloc * nsub;
                let hi = (s + 1) * nloc * nsub;
                let sum = compensated_sum(ops.subcell_measures[lo..hi].iter().copied());
                let rel = (sum - ops.simplex_measure[s]).abs() / ops.simplex_measure[s];
                assert!(rel < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_simplex_raises_geometry_error() {
        let mesh = Mesh {
            dim: 2,
            vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
            simplices: vec![0, 1, 2],
            dirichlet_vertices: vec![],
            boundary_faces: vec![],
            boundary_tags: vec![],
            parent: None,
        };
        let err = compute_operators(&mesh).unwrap_err();
        assert!(matches!(err, MeshError::Geometry { simplex: 0, .. }));
    }

    #[test]
    fn dual_integral_of_one_returns_dual_measures() {
        let mesh = build_rect_mesh(4, 3, ((0.0, 1.0), (0.0, 0.5))).unwrap();
        let ops = compute_operators(&mesh).unwrap();
        let ints = dual_cell_integral(&mesh, &ops, |_| 1.0);
        for v in 0..mesh.n_vertices() {
            assert!((ints[v] - ops.dual_measure[v]).abs() < 1e-14);
        }
    }

    #[test]
    fn dual_integral_of_x_on_unit_right_triangle() {
        let mesh = unit_right_triangle();
        let ops = compute_operators(&mesh).unwrap();
        let ints = dual_cell_integral(&mesh, &ops, |p| p[0]);
        let total: f64 = ints.iter().sum();
        assert!((total - 1.0 / 6.0).abs() < 1e-14);
    }

    /// Shoelace-polygon oracle for 2D dual sub-cell moments: the dual region
    /// of a triangle vertex is the quad (v, m1, centroid, m2).
    #[test]
    fn dual_integral_matches_shoelace_oracle_on_random_triangles() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let p = [
                [rng.random_range(-1.0..0.0), rng.random_range(-1.0..0.0), 0.0],
                [rng.random_range(1.0..2.0), rng.random_range(-0.5..0.5), 0.0],
                [rng.random_range(-0.5..0.5), rng.random_range(1.0..2.0), 0.0],
            ];
            let mut simplex = [0usize, 1, 2];
            crate::mesh::generate::orient_positive(&p, 2, &mut simplex);
            let mesh = Mesh {
                dim: 2,
                vertices: p.to_vec(),
                simplices: simplex.to_vec(),
                dirichlet_vertices: vec![],
                boundary_faces: vec![0, 1, 1, 2, 2, 0],
                boundary_tags: vec![0, 0, 0],
                parent: None,
            };
            let ops = compute_operators(&mesh).unwrap();
            let (a, b, c) = (
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let g = |q: [f64; 3]| a + b * q[0] + c * q[1];
            let ints = dual_cell_integral(&mesh, &ops, g);

            let centroid = [
                (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                (p[0][1] + p[1][1] + p[2][1]) / 3.0,
                0.0,
            ];
            for v in 0..3 {
                let others: Vec<usize> = (0..3).filter(|&w| w != v).collect();
                let m1 = [
                    0.5 * (p[v][0] + p[others[0]][0]),
                    0.5 * (p[v][1] + p[others[0]][1]),
                ];
                let m2 = [
                    0.5 * (p[v][0] + p[others[1]][0]),
                    0.5 * (p[v][1] + p[others[1]][1]),
                ];
                let quad = [[p[v][0], p[v][1]], m1, [centroid[0], centroid[1]], m2];
                // polygon area and first moments by the shoelace formula
                let mut area = 0.0;
                let mut mx = 0.0;
                let mut my = 0.0;
                for i in 0..4 {
                    let (x0, y0) = (quad[i][0], quad[i][1]);
                    let (x1, y1) = (quad[(i + 1) % 4][0], quad[(i + 1) % 4][1]);
                    let cr = x0 * y1 - x1 * y0;
                    area += cr;
                    mx += (x0 + x1) * cr;
                    my += (y0 + y1) * cr;
                }
                area /= 2.0;
                mx /= 6.0;
                my /= 6.0;
                if area < 0.0 {
                    area = -area;
                    mx = -mx;
                    my = -my;
                }
                let expected = a * area + b * mx + c * my;
                assert!(
                    (ints[v] - expected).abs() < 1e-13,
                    "vertex {v}: {} vs {}",
                    ints[v],
                    expected
                );
            }
        }
    }

    /// 3D exactness through the affine-mapped reference region: the dual
    /// region of a reference-tet vertex has volume 1/24 and centroid
    /// (23/144, 23/144, 23/144).
    #[test]
    fn dual_integral_matches_reference_region_on_random_tets() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let p0 = [0.0, 0.0, 0.0];
            let p1 = [rng.random_range(1.0..2.0), rng.random_range(-0.2..0.2), 0.0];
            let p2 = [
                rng.random_range(-0.2..0.2),
                rng.random_range(1.0..2.0),
                rng.random_range(-0.2..0.2),
            ];
            let p3 = [
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(1.0..2.0),
            ];
            let verts = vec![p0, p1, p2, p3];
            let mut simplex = [0usize, 1, 2, 3];
            crate::mesh::generate::orient_positive(&verts, 3, &mut simplex);
            let mesh = Mesh {
                dim: 3,
                vertices: verts.clone(),
                simplices: simplex.to_vec(),
                dirichlet_vertices: vec![],
                boundary_faces: vec![0, 1, 2, 0, 1, 3, 0, 2, 3, 1, 2, 3],
                boundary_tags: vec![0; 4],
                parent: None,
            };
            let ops = compute_operators(&mesh).unwrap();
            let (a, b, c, d) = (
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let g = |q: [f64; 3]| a + b * q[0] + c * q[1] + d * q[2];
            let ints = dual_cell_integral(&mesh, &ops, g);

            // affine map F(xi) = base + J xi from the reference tet onto each
            // vertex's local frame
            let ref_centroid = 23.0 / 144.0;
            for (local, &v) in mesh.simplex(0).iter().enumerate() {
                let origin = mesh.vertices[v];
                let others: Vec<[f64; 3]> = (0..4)
                    .filter(|&w| w != local)
                    .map(|w| mesh.vertices[mesh.simplex(0)[w]])
                    .collect();
                let mut cen = [0.0; 3];
                for comp in 0..3 {
                    let mut val = origin[comp];
                    for o in &others {
                        val += ref_centroid * (o[comp] - origin[comp]);
                    }
                    cen[comp] = val;
                }
                let vol = ops.simplex_measure[0] / 4.0;
                let expected = vol * g(cen);
                assert!(
                    (ints[v] - expected).abs() < 1e-13 * vol.max(1.0),
                    "vertex {v}: {} vs {expected}",
                    ints[v]
                );
            }
        }
    }

    #[test]
    fn dual_integral_is_linear_in_g() {
        let mesh = build_rect_mesh(3, 3, ((0.0, 1.0), (0.0, 1.0))).unwrap();
        let ops = compute_operators(&mesh).unwrap();
        let f = |p: [f64; 3]| p[0] * p[1] + 0.3;
        let g = |p: [f64; 3]| p[1] * p[1] - p[0];
        let int_f = dual_cell_integral(&mesh, &ops, f);
        let int_g = dual_cell_integral(&mesh, &ops, g);
        let int_combo = dual_cell_integral(&mesh, &ops, |p| 2.0 * f(p) - 0.5 * g(p));
        for v in 0..mesh.n_vertices() {
            let want = 2.0 * int_f[v] - 0.5 * int_g[v];
            assert!((int_combo[v] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn test1_initial_integral_is_exact_for_affine_data() {
        let mesh = build_rect_mesh(32, 4, ((0.0, 1.0), (0.0, 0.1))).unwrap();
        let ops = compute_operators(&mesh).unwrap();
        let ints = dual_cell_integral(&mesh, &ops, |p| 0.2 + 0.1 * (p[0] - 1.0));
        let total = compensated_sum(ints.iter().copied());
        assert!((total - 0.015).abs() < 1e-14);
    }

    #[test]
    fn refinement_keeps_regularity_bounded() {
        let base = build_rect_mesh(8, 2, ((0.0, 1.0), (0.0, 0.1))).unwrap();
        let ops0 = compute_operators(&base).unwrap();
        let fine = refine_uniform(&base);
        let ops1 = compute_operators(&fine).unwrap();
        assert!((ops1.mesh_size - 0.5 * ops0.mesh_size).abs() < 1e-13);
        assert!(ops1.regularity < ops0.regularity * (1.0 + 1e-12));
    }
}
