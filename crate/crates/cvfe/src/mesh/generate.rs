//! Structured mesh generators for rectangles and boxes.

use std::collections::HashMap;

use super::{facet_key, signed_simplex_measure, Mesh, MeshError};

/// Triangulates `bounds = ((x_min, x_max), (y_min, y_max))` with an
/// `nx` by `ny` grid of cells, each split into two triangles along the same
/// diagonal. Boundary edges are tagged 1..4 for the x-min, x-max, y-min and
/// y-max sides. No Dirichlet vertices are marked; callers opt in with
/// [`Mesh::mark_dirichlet_x_extremes`] or [`Mesh::mark_dirichlet_by_tags`].
pub fn build_rect_mesh(
    nx: usize,
    ny: usize,
    bounds: ((f64, f64), (f64, f64)),
) -> Result<Mesh, MeshError> {
    let ((x0, x1), (y0, y1)) = bounds;
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidArgument(format!(
            "grid resolution must be at least 1x1, got {nx}x{ny}"
        )));
    }
    if !(x1 > x0) || !(y1 > y0) {
        return Err(MeshError::InvalidArgument(format!(
            "degenerate bounds ({x0}, {x1}) x ({y0}, {y1})"
        )));
    }

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for iy in 0..=ny {
        let y = y0 + (y1 - y0) * iy as f64 / ny as f64;
        for ix in 0..=nx {
            let x = x0 + (x1 - x0) * ix as f64 / nx as f64;
            vertices.push([x, y, 0.0]);
        }
    }
    let at = |ix: usize, iy: usize| iy * (nx + 1) + ix;

    let mut simplices = Vec::with_capacity(6 * nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let v00 = at(ix, iy);
            let v10 = at(ix + 1, iy);
            let v01 = at(ix, iy + 1);
            let v11 = at(ix + 1, iy + 1);
            simplices.extend_from_slice(&[v00, v10, v11]);
            simplices.extend_from_slice(&[v00, v11, v01]);
        }
    }

    let mut mesh = Mesh {
        dim: 2,
        vertices,
        simplices,
        dirichlet_vertices: Vec::new(),
        boundary_faces: Vec::new(),
        boundary_tags: Vec::new(),
        parent: None,
    };
    attach_boundary_faces(&mut mesh, [(x0, x1), (y0, y1), (0.0, 0.0)]);
    mesh.validate()?;
    Ok(mesh)
}

/// Tetrahedralizes a box with `nx * ny * nz` hexahedral cells, each split
/// into six tetrahedra around its main diagonal (Kuhn split, conforming
/// across cell faces). Boundary triangles are tagged 1..6 for the x-min,
/// x-max, y-min, y-max, z-min and z-max sides.
pub fn build_box_mesh(
    nx: usize,
    ny: usize,
    nz: usize,
    bounds: ((f64, f64), (f64, f64), (f64, f64)),
) -> Result<Mesh, MeshError> {
    let ((x0, x1), (y0, y1), (z0, z1)) = bounds;
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(MeshError::InvalidArgument(format!(
            "grid resolution must be at least 1x1x1, got {nx}x{ny}x{nz}"
        )));
    }
    if !(x1 > x0) || !(y1 > y0) || !(z1 > z0) {
        return Err(MeshError::InvalidArgument(format!(
            "degenerate bounds ({x0}, {x1}) x ({y0}, {y1}) x ({z0}, {z1})"
        )));
    }

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for iz in 0..=nz {
        let z = z0 + (z1 - z0) * iz as f64 / nz as f64;
        for iy in 0..=ny {
            let y = y0 + (y1 - y0) * iy as f64 / ny as f64;
            for ix in 0..=nx {
                let x = x0 + (x1 - x0) * ix as f64 / nx as f64;
                vertices.push([x, y, z]);
            }
        }
    }
    let at = |ix: usize, iy: usize, iz: usize| (iz * (ny + 1) + iy) * (nx + 1) + ix;

    // The six tetrahedra of a cell follow the six monotone vertex paths from
    // the low corner to the high corner; the split is translation invariant,
    // so neighbouring cells share matching face triangulations.
    const PATHS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut simplices = Vec::with_capacity(24 * nx * ny * nz);
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                for path in PATHS {
                    let mut c = [ix, iy, iz];
                    let mut tet = [at(c[0], c[1], c[2]), 0, 0, 0];
                    for (step, &axis) in path.iter().enumerate() {
                        c[axis] += 1;
                        tet[step + 1] = at(c[0], c[1], c[2]);
                    }
                    orient_positive(&vertices, 3, &mut tet);
                    simplices.extend_from_slice(&tet);
                }
            }
        }
    }

    let mut mesh = Mesh {
        dim: 3,
        vertices,
        simplices,
        dirichlet_vertices: Vec::new(),
        boundary_faces: Vec::new(),
        boundary_tags: Vec::new(),
        parent: None,
    };
    attach_boundary_faces(&mut mesh, [(x0, x1), (y0, y1), (z0, z1)]);
    mesh.validate()?;
    Ok(mesh)
}

/// Swaps the last two vertices if the simplex is negatively oriented.
pub(crate) fn orient_positive(vertices: &[[f64; 3]], dim: usize, simplex: &mut [usize]) {
    let p: Vec<[f64; 3]> = simplex.iter().map(|&v| vertices[v]).collect();
    if signed_simplex_measure(dim, &p) < 0.0 {
        simplex.swap(dim - 1, dim);
    }
}

/// Extracts facets owned by exactly one simplex and tags them by the
/// axis-aligned side they lie on (1..2d, axis-major, min side first).
fn attach_boundary_faces(mesh: &mut Mesh, extents: [(f64, f64); 3]) {
    let d = mesh.dim;
    let mut count: HashMap<[usize; 3], usize> = HashMap::new();
    for s in 0..mesh.n_simplices() {
        let vs = mesh.simplex(s);
        for omit in 0..=d {
            *count.entry(facet_key(d, vs, omit)).or_insert(0) += 1;
        }
    }
    // second pass in simplex order keeps the face list deterministic
    let mut seen: HashMap<[usize; 3], ()> = HashMap::new();
    let mut faces = Vec::new();
    let mut tags = Vec::new();
    for s in 0..mesh.n_simplices() {
        let vs: Vec<usize> = mesh.simplex(s).to_vec();
        for omit in 0..=d {
            let key = facet_key(d, &vs, omit);
            if count[&key] == 1 && seen.insert(key, ()).is_none() {
                let face = &key[..d];
                faces.extend_from_slice(face);
                tags.push(side_tag(&mesh.vertices, face, d, extents));
            }
        }
    }
    mesh.boundary_faces = faces;
    mesh.boundary_tags = tags;
}

fn side_tag(vertices: &[[f64; 3]], face: &[usize], dim: usize, extents: [(f64, f64); 3]) -> i32 {
    for axis in 0..dim {
        let (lo, hi) = extents[axis];
        let tol = 1e-12 * (hi - lo).abs().max(f64::MIN_POSITIVE);
        let all_lo = face.iter().all(|&v| (vertices[v][axis] - lo).abs() < tol);
        let all_hi = face.iter().all(|&v| (vertices[v][axis] - hi).abs() < tol);
        if all_lo {
            return (2 * axis + 1) as i32;
        }
        if all_hi {
            return (2 * axis + 2) as i32;
        }
    }
    0
}
