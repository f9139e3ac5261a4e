//! Uniform (red) refinement of simplicial meshes.

use std::collections::{HashMap, HashSet};

use super::generate::orient_positive;
use super::{dist, Mesh, VertexParent};

/// Splits every triangle into 4 children (2D) or every tetrahedron into 8
/// children (3D) through the edge midpoints.
///
/// Coarse vertices keep their indices; each new vertex records its generating
/// edge in the parent map, which makes coarse-to-fine nodal injection exact.
/// In 3D the interior octahedron is cut along its shortest diagonal, ties
/// broken by the lexicographically smallest midpoint-vertex pair. Dirichlet
/// status propagates to midpoints of boundary-face edges whose endpoints are
/// both Dirichlet.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let d = mesh.dim;
    let n_coarse = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    let mut parent: Vec<VertexParent> = (0..n_coarse).map(VertexParent::Coarse).collect();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();

    let mut midpoint = |a: usize, b: usize,
                        vertices: &mut Vec<[f64; 3]>,
                        parent: &mut Vec<VertexParent>|
     -> usize {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            let pa = vertices[key.0];
            let pb = vertices[key.1];
            vertices.push([
                0.5 * (pa[0] + pb[0]),
                0.5 * (pa[1] + pb[1]),
                0.5 * (pa[2] + pb[2]),
            ]);
            parent.push(VertexParent::Edge(key.0, key.1));
            vertices.len() - 1
        })
    };

    let mut simplices = Vec::with_capacity(mesh.simplices.len() * if d == 2 { 4 } else { 8 });
    for s in 0..mesh.n_simplices() {
        let vs = mesh.simplex(s);
        if d == 2 {
            let (a, b, c) = (vs[0], vs[1], vs[2]);
            let mab = midpoint(a, b, &mut vertices, &mut parent);
            let mbc = midpoint(b, c, &mut vertices, &mut parent);
            let mca = midpoint(c, a, &mut vertices, &mut parent);
            simplices.extend_from_slice(&[a, mab, mca]);
            simplices.extend_from_slice(&[b, mbc, mab]);
            simplices.extend_from_slice(&[c, mca, mbc]);
            simplices.extend_from_slice(&[mab, mbc, mca]);
        } else {
            let m: Vec<Vec<usize>> = (0..4)
                .map(|i| {
                    (0..4)
                        .map(|j| {
                            if i == j {
                                usize::MAX
                            } else {
                                midpoint(vs[i], vs[j], &mut vertices, &mut parent)
                            }
                        })
                        .collect()
                })
                .collect();
            // corner children
            for i in 0..4 {
                let mut tet = [vs[i], 0, 0, 0];
                let mut k = 1;
                for j in 0..4 {
                    if j != i {
                        tet[k] = m[i][j];
                        k += 1;
                    }
                }
                orient_positive(&vertices, 3, &mut tet);
                simplices.extend_from_slice(&tet);
            }
            // interior octahedron: three candidate diagonals
            let diags = [
                (m[0][1], m[2][3]),
                (m[0][2], m[1][3]),
                (m[0][3], m[1][2]),
            ];
            let mut best = 0;
            for cand in 1..3 {
                let (p, q) = diags[cand];
                let (bp, bq) = diags[best];
                let len = dist(vertices[p], vertices[q]);
                let blen = dist(vertices[bp], vertices[bq]);
                let key = (p.min(q), p.max(q));
                let bkey = (bp.min(bq), bp.max(bq));
                if len < blen || (len == blen && key < bkey) {
                    best = cand;
                }
            }
            let (p, q) = diags[best];
            // the other four midpoints form a cycle around the diagonal;
            // consecutive cycle entries share a coarse endpoint
            let ring: [usize; 4] = match best {
                0 => [m[0][2], m[0][3], m[1][3], m[1][2]],
                1 => [m[0][1], m[0][3], m[2][3], m[1][2]],
                _ => [m[0][1], m[0][2], m[2][3], m[1][3]],
            };
            for r in 0..4 {
                let mut tet = [p, q, ring[r], ring[(r + 1) % 4]];
                orient_positive(&vertices, 3, &mut tet);
                simplices.extend_from_slice(&tet);
            }
        }
    }

    // refine boundary faces, reusing the midpoints created above
    let mut boundary_faces = Vec::with_capacity(mesh.boundary_faces.len() * if d == 2 { 2 } else { 4 });
    let mut boundary_tags = Vec::with_capacity(mesh.boundary_tags.len() * if d == 2 { 2 } else { 4 });
    let mid_of = |a: usize, b: usize, midpoints: &HashMap<(usize, usize), usize>| -> usize {
        midpoints[&(a.min(b), a.max(b))]
    };
    for f in 0..mesh.n_boundary_faces() {
        let face = mesh.boundary_face(f);
        let tag = mesh.boundary_tags[f];
        if d == 2 {
            let (a, b) = (face[0], face[1]);
            let mab = mid_of(a, b, &midpoints);
            boundary_faces.extend_from_slice(&[a, mab]);
            boundary_faces.extend_from_slice(&[mab, b]);
            boundary_tags.extend_from_slice(&[tag, tag]);
        } else {
            let (a, b, c) = (face[0], face[1], face[2]);
            let mab = mid_of(a, b, &midpoints);
            let mbc = mid_of(b, c, &midpoints);
            let mca = mid_of(c, a, &midpoints);
            boundary_faces.extend_from_slice(&[a, mab, mca]);
            boundary_faces.extend_from_slice(&[b, mbc, mab]);
            boundary_faces.extend_from_slice(&[c, mca, mbc]);
            boundary_faces.extend_from_slice(&[mab, mbc, mca]);
            boundary_tags.extend_from_slice(&[tag; 4]);
        }
    }

    // Dirichlet propagation: coarse Dirichlet vertices stay; a midpoint is
    // Dirichlet when its generating edge lies on a boundary face and both
    // endpoints are Dirichlet
    let coarse_mask = mesh.dirichlet_mask();
    let mut boundary_edges: HashSet<(usize, usize)> = HashSet::new();
    for f in 0..mesh.n_boundary_faces() {
        let face = mesh.boundary_face(f);
        if d == 2 {
            boundary_edges.insert((face[0].min(face[1]), face[0].max(face[1])));
        } else {
            for (a, b) in [(face[0], face[1]), (face[1], face[2]), (face[2], face[0])] {
                boundary_edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    let mut dirichlet_vertices: Vec<usize> = mesh.dirichlet_vertices.clone();
    for (v, p) in parent.iter().enumerate().skip(n_coarse) {
        if let VertexParent::Edge(a, b) = *p {
            if coarse_mask[a] && coarse_mask[b] && boundary_edges.contains(&(a, b)) {
                dirichlet_vertices.push(v);
            }
        }
    }
    dirichlet_vertices.sort_unstable();

    Mesh {
        dim: d,
        vertices,
        simplices,
        dirichlet_vertices,
        boundary_faces,
        boundary_tags,
        parent: Some(parent),
    }
}
