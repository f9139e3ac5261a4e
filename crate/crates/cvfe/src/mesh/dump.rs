//! Plain-text mesh dump format for fixtures and debugging.
//!
//! Layout (all indices 0-based, coordinates printed with shortest
//! round-trip precision so write/parse preserves them bitwise):
//!
//! ```text
//! cvfe-mesh 1
//! dim 2
//! vertices <n>
//! <x> <y> [<z>]
//! ...
//! simplices <m>
//! <v0> <v1> <v2> [<v3>]
//! ...
//! boundary_faces <b>
//! <tag> <v0> <v1> [<v2>]
//! ...
//! dirichlet <k>
//! <v0> <v1> ... (single line, possibly empty)
//! ```

use std::fmt::Write as _;

use super::{Mesh, MeshError};

pub fn write_dump(mesh: &Mesh) -> String {
    let d = mesh.dim;
    let mut out = String::new();
    writeln!(out, "cvfe-mesh 1").unwrap();
    writeln!(out, "dim {d}").unwrap();
    writeln!(out, "vertices {}", mesh.n_vertices()).unwrap();
    for p in &mesh.vertices {
        if d == 2 {
            writeln!(out, "{:?} {:?}", p[0], p[1]).unwrap();
        } else {
            writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2]).unwrap();
        }
    }
    writeln!(out, "simplices {}", mesh.n_simplices()).unwrap();
    for s in 0..mesh.n_simplices() {
        let vs = mesh.simplex(s);
        let row: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    writeln!(out, "boundary_faces {}", mesh.n_boundary_faces()).unwrap();
    for f in 0..mesh.n_boundary_faces() {
        let mut row = vec![mesh.boundary_tags[f].to_string()];
        row.extend(mesh.boundary_face(f).iter().map(|v| v.to_string()));
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    writeln!(out, "dirichlet {}", mesh.dirichlet_vertices.len()).unwrap();
    let row: Vec<String> = mesh
        .dirichlet_vertices
        .iter()
        .map(|v| v.to_string())
        .collect();
    writeln!(out, "{}", row.join(" ")).unwrap();
    out
}

pub fn parse_dump(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| -> Result<(usize, &str), MeshError> {
        lines.next().ok_or_else(|| MeshError::Parse {
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })
    };

    let (line, header) = next("header")?;
    if header != "cvfe-mesh 1" {
        return Err(MeshError::Parse {
            line,
            message: format!("bad header {header:?}"),
        });
    }
    let dim = parse_counted(next("dim")?, "dim")?;
    if dim != 2 && dim != 3 {
        return Err(MeshError::Parse {
            line: 2,
            message: format!("dim must be 2 or 3, got {dim}"),
        });
    }

    let nv = parse_counted(next("vertices")?, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = next("vertex coordinates")?;
        let coords: Result<Vec<f64>, _> = l.split_whitespace().map(str::parse).collect();
        let coords = coords.map_err(|e| MeshError::Parse {
            line,
            message: format!("bad coordinate: {e}"),
        })?;
        if coords.len() != dim {
            return Err(MeshError::Parse {
                line,
                message: format!("expected {dim} coordinates, got {}", coords.len()),
            });
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&coords);
        vertices.push(p);
    }

    let ns = parse_counted(next("simplices")?, "simplices")?;
    let mut simplices = Vec::with_capacity(ns * (dim + 1));
    for _ in 0..ns {
        let (line, l) = next("simplex")?;
        let vs = parse_indices(l, line, dim + 1)?;
        simplices.extend_from_slice(&vs);
    }

    let nf = parse_counted(next("boundary_faces")?, "boundary_faces")?;
    let mut boundary_faces = Vec::with_capacity(nf * dim);
    let mut boundary_tags = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = next("boundary face")?;
        let mut it = l.split_whitespace();
        let tag: i32 = it
            .next()
            .ok_or_else(|| MeshError::Parse {
                line,
                message: "missing face tag".into(),
            })?
            .parse()
            .map_err(|_| MeshError::Parse {
                line,
                message: "bad face tag".into(),
            })?;
        let rest: Vec<&str> = it.collect();
        let vs = parse_indices(&rest.join(" "), line, dim)?;
        boundary_tags.push(tag);
        boundary_faces.extend_from_slice(&vs);
    }

    let nd = parse_counted(next("dirichlet")?, "dirichlet")?;
    let (line, l) = next("dirichlet list")?;
    let dirichlet_vertices = parse_indices(l, line, nd)?;

    let mesh = Mesh {
        dim,
        vertices,
        simplices,
        dirichlet_vertices,
        boundary_faces,
        boundary_tags,
        parent: None,
    };
    mesh.validate()?;
    Ok(mesh)
}

fn parse_counted((line, l): (usize, &str), keyword: &str) -> Result<usize, MeshError> {
    let mut it = l.split_whitespace();
    match (it.next(), it.next()) {
        (Some(k), Some(v)) if k == keyword => v.parse().map_err(|_| MeshError::Parse {
            line,
            message: format!("bad {keyword} count {v:?}"),
        }),
        _ => Err(MeshError::Parse {
            line,
            message: format!("expected {keyword:?} line, found {l:?}"),
        }),
    }
}

fn parse_indices(l: &str, line: usize, expected: usize) -> Result<Vec<usize>, MeshError> {
    let vs: Result<Vec<usize>, _> = l.split_whitespace().map(str::parse).collect();
    let vs = vs.map_err(|e| MeshError::Parse {
        line,
        message: format!("bad index: {e}"),
    })?;
    if vs.len() != expected {
        return Err(MeshError::Parse {
            line,
            message: format!("expected {expected} indices, got {}", vs.len()),
        });
    }
    Ok(vs)
}
