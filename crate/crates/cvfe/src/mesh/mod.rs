//! Conforming simplicial meshes (triangles, tetrahedra) with barycentric dual
//! cells: construction, gmsh ingestion, uniform refinement, and the geometric
//! operators used by the discretization.

pub mod dump;
mod generate;
mod msh;
mod operators;
mod refine;

pub use generate::{build_box_mesh, build_rect_mesh};
pub use msh::parse_gmsh;
pub use operators::{compute_operators, dual_cell_integral, MeshOperators};
pub use refine::refine_uniform;

use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("simplex {simplex}: {message}")]
    Geometry { simplex: usize, message: String },
}

/// Provenance of a vertex of a refined mesh relative to its coarse parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexParent {
    /// Same vertex index in the coarse mesh.
    Coarse(usize),
    /// Midpoint of the coarse edge `(a, b)` with `a < b`.
    Edge(usize, usize),
}

/// Conforming simplicial mesh in 2 or 3 dimensions.
///
/// Immutable after construction; cheap to share read-only between workers.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    /// Vertex coordinates; the third component is 0 for 2D meshes.
    pub vertices: Vec<[f64; 3]>,
    /// Simplex vertex indices, flattened with stride `dim + 1`.
    pub simplices: Vec<usize>,
    /// Sorted indices of vertices on the Dirichlet boundary.
    pub dirichlet_vertices: Vec<usize>,
    /// Boundary facet vertex indices, flattened with stride `dim`.
    pub boundary_faces: Vec<usize>,
    /// One integer tag per boundary facet.
    pub boundary_tags: Vec<i32>,
    /// Refinement provenance, present on meshes produced by [`refine_uniform`].
    pub parent: Option<Vec<VertexParent>>,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_simplices(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn simplex(&self, s: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.simplices[s * k..(s + 1) * k]
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.boundary_tags.len()
    }

    pub fn boundary_face(&self, f: usize) -> &[usize] {
        &self.boundary_faces[f * self.dim..(f + 1) * self.dim]
    }

    /// Per-vertex Dirichlet membership flags.
    pub fn dirichlet_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_vertices()];
        for &v in &self.dirichlet_vertices {
            mask[v] = true;
        }
        mask
    }

    /// Signed measure of simplex `s` (area in 2D, volume in 3D).
    pub fn signed_measure(&self, s: usize) -> f64 {
        let vs = self.simplex(s);
        let p: Vec<[f64; 3]> = vs.iter().map(|&v| self.vertices[v]).collect();
        signed_simplex_measure(self.dim, &p)
    }

    /// Marks vertices on the two x-extreme boundary planes as Dirichlet.
    ///
    /// Detection is by coordinate: `|x - x_min| < 1e-12 * width` or the same
    /// at `x_max`.
    pub fn mark_dirichlet_x_extremes(&mut self) {
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            xmin = xmin.min(p[0]);
            xmax = xmax.max(p[0]);
        }
        let tol = 1e-12 * (xmax - xmin).abs().max(f64::MIN_POSITIVE);
        let mut set: Vec<usize> = (0..self.n_vertices())
            .filter(|&v| {
                let x = self.vertices[v][0];
                (x - xmin).abs() < tol || (x - xmax).abs() < tol
            })
            .collect();
        set.sort_unstable();
        self.dirichlet_vertices = set;
    }

    /// Marks vertices lying on boundary faces whose tag is in `tags` as Dirichlet.
    pub fn mark_dirichlet_by_tags(&mut self, tags: &[i32]) {
        let mut mask = vec![false; self.n_vertices()];
        for f in 0..self.n_boundary_faces() {
            if tags.contains(&self.boundary_tags[f]) {
                for &v in self.boundary_face(f) {
                    mask[v] = true;
                }
            }
        }
        self.dirichlet_vertices = mask
            .iter()
            .enumerate()
            .filter_map(|(v, &m)| m.then_some(v))
            .collect();
    }

    /// Checks the structural mesh invariants.
    ///
    /// Verifies index ranges, distinct simplex vertices, positive orientation,
    /// facet multiplicity at most two (no hanging nodes among matching
    /// facets), boundary faces being actual simplex facets, and Dirichlet
    /// vertices lying on boundary faces.
    pub fn validate(&self) -> Result<(), MeshError> {
        let d = self.dim;
        if d != 2 && d != 3 {
            return Err(MeshError::InvalidArgument(format!(
                "dimension must be 2 or 3, got {d}"
            )));
        }
        if self.simplices.len() % (d + 1) != 0 {
            return Err(MeshError::InvalidArgument(
                "simplex index list length is not a multiple of dim + 1".into(),
            ));
        }
        if self.boundary_faces.len() % d != 0
            || self.boundary_faces.len() / d != self.boundary_tags.len()
        {
            return Err(MeshError::InvalidArgument(
                "boundary face list and tag list are inconsistent".into(),
            ));
        }
        let nv = self.n_vertices();
        for s in 0..self.n_simplices() {
            let vs = self.simplex(s);
            for (a, &va) in vs.iter().enumerate() {
                if va >= nv {
                    return Err(MeshError::Geometry {
                        simplex: s,
                        message: format!("vertex index {va} out of range"),
                    });
                }
                if vs[a + 1..].contains(&va) {
                    return Err(MeshError::Geometry {
                        simplex: s,
                        message: format!("repeated vertex index {va}"),
                    });
                }
            }
            let m = self.signed_measure(s);
            if !(m > 0.0) || !m.is_finite() {
                return Err(MeshError::Geometry {
                    simplex: s,
                    message: format!("nonpositive signed measure {m}"),
                });
            }
        }

        let mut facets: HashMap<[usize; 3], usize> = HashMap::new();
        for s in 0..self.n_simplices() {
            let vs = self.simplex(s);
            for omit in 0..=d {
                let key = facet_key(d, vs, omit);
                *facets.entry(key).or_insert(0) += 1;
            }
        }
        if let Some((key, n)) = facets.iter().find(|&(_, &n)| n > 2) {
            return Err(MeshError::InvalidArgument(format!(
                "facet {key:?} shared by {n} simplices (nonconforming mesh)"
            )));
        }
        for f in 0..self.n_boundary_faces() {
            let mut key = [usize::MAX; 3];
            key[..d].copy_from_slice(self.boundary_face(f));
            key[..d].sort_unstable();
            match facets.get(&key) {
                Some(1) => {}
                Some(_) => {
                    return Err(MeshError::InvalidArgument(format!(
                        "boundary face {f} is interior"
                    )))
                }
                None => {
                    return Err(MeshError::InvalidArgument(format!(
                        "boundary face {f} is not a simplex facet"
                    )))
                }
            }
        }

        let mut on_boundary = vec![false; nv];
        for &v in &self.boundary_faces {
            on_boundary[v] = true;
        }
        for &v in &self.dirichlet_vertices {
            if v >= nv {
                return Err(MeshError::InvalidArgument(format!(
                    "Dirichlet vertex {v} out of range"
                )));
            }
            if !on_boundary[v] {
                return Err(MeshError::InvalidArgument(format!(
                    "Dirichlet vertex {v} does not lie on a boundary face"
                )));
            }
        }
        Ok(())
    }
}

/// Sorted facet key; unused slots hold `usize::MAX`.
pub(crate) fn facet_key(dim: usize, simplex: &[usize], omit: usize) -> [usize; 3] {
    let mut key = [usize::MAX; 3];
    let mut n = 0;
    for (i, &v) in simplex.iter().enumerate() {
        if i != omit {
            key[n] = v;
            n += 1;
        }
    }
    debug_assert_eq!(n, dim);
    key[..n].sort_unstable();
    key
}

pub(crate) fn signed_simplex_measure(dim: usize, p: &[[f64; 3]]) -> f64 {
    match dim {
        2 => {
            let ux = p[1][0] - p[0][0];
            let uy = p[1][1] - p[0][1];
            let vx = p[2][0] - p[0][0];
            let vy = p[2][1] - p[0][1];
            0.5 * (ux * vy - uy * vx)
        }
        3 => {
            let u = sub(p[1], p[0]);
            let v = sub(p[2], p[0]);
            let w = sub(p[3], p[0]);
            let cx = u[1] * v[2] - u[2] * v[1];
            let cy = u[2] * v[0] - u[0] * v[2];
            let cz = u[0] * v[1] - u[1] * v[0];
            (cx * w[0] + cy * w[1] + cz * w[2]) / 6.0
        }
        _ => unreachable!("dimension checked on construction"),
    }
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}
