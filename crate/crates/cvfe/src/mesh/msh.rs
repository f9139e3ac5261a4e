//! Reader for gmsh MSH 2.2 ASCII files.
//!
//! Supported element types: 1 (2-node line), 2 (3-node triangle),
//! 4 (4-node tetrahedron) and 15 (1-node point, skipped). If tetrahedra are
//! present the mesh is 3D with triangles as boundary faces, otherwise 2D
//! with lines as boundary faces. The first element tag (the physical tag)
//! becomes the boundary tag. Non-contiguous node ids are remapped to dense
//! indices in order of appearance.

use std::collections::HashMap;

use super::generate::orient_positive;
use super::{Mesh, MeshError};

struct RawElement {
    line: usize,
    ty: u32,
    tag: i32,
    nodes: Vec<usize>,
}

pub fn parse_gmsh(bytes: &[u8]) -> Result<Mesh, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::Parse {
        line: 0,
        message: format!("file is not valid UTF-8: {e}"),
    })?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let mut nodes: Vec<[f64; 3]> = Vec::new();
    let mut node_index: HashMap<u64, usize> = HashMap::new();
    let mut elements: Vec<RawElement> = Vec::new();
    let mut elements_line = 0usize;
    let mut saw_nodes = false;
    let mut saw_elements = false;

    while let Some((lineno, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        match line {
            "$MeshFormat" => {
                let (fmt_line, fmt) = lines.next().ok_or_else(|| MeshError::Parse {
                    line: lineno,
                    message: "unterminated $MeshFormat section".into(),
                })?;
                let mut it = fmt.split_whitespace();
                let version = it.next().unwrap_or("");
                if !version.starts_with("2.") {
                    return Err(MeshError::Parse {
                        line: fmt_line,
                        message: format!("unsupported MSH format version {version}, expected 2.x"),
                    });
                }
                let file_type = it.next().unwrap_or("");
                if file_type != "0" {
                    return Err(MeshError::Parse {
                        line: fmt_line,
                        message: "binary MSH files are not supported".into(),
                    });
                }
                expect_section_end(&mut lines, "$EndMeshFormat")?;
            }
            "$Nodes" => {
                saw_nodes = true;
                let (count_line, count) = lines.next().ok_or_else(|| MeshError::Parse {
                    line: lineno,
                    message: "missing node count".into(),
                })?;
                let n: usize = count.parse().map_err(|_| MeshError::Parse {
                    line: count_line,
                    message: format!("invalid node count {count:?}"),
                })?;
                for _ in 0..n {
                    let (node_line, node) = lines.next().ok_or_else(|| MeshError::Parse {
                        line: count_line,
                        message: "unexpected end of file in $Nodes".into(),
                    })?;
                    let mut it = node.split_whitespace();
                    let id: u64 = parse_field(&mut it, node_line, "node id")?;
                    let x: f64 = parse_field(&mut it, node_line, "x coordinate")?;
                    let y: f64 = parse_field(&mut it, node_line, "y coordinate")?;
                    let z: f64 = parse_field(&mut it, node_line, "z coordinate")?;
                    if node_index.insert(id, nodes.len()).is_some() {
                        return Err(MeshError::Parse {
                            line: node_line,
                            message: format!("duplicate node id {id}"),
                        });
                    }
                    nodes.push([x, y, z]);
                }
                expect_section_end(&mut lines, "$EndNodes")?;
            }
            "$Elements" => {
                saw_elements = true;
                elements_line = lineno;
                let (count_line, count) = lines.next().ok_or_else(|| MeshError::Parse {
                    line: lineno,
                    message: "missing element count".into(),
                })?;
                let n: usize = count.parse().map_err(|_| MeshError::Parse {
                    line: count_line,
                    message: format!("invalid element count {count:?}"),
                })?;
                for _ in 0..n {
                    let (el_line, el) = lines.next().ok_or_else(|| MeshError::Parse {
                        line: count_line,
                        message: "unexpected end of file in $Elements".into(),
                    })?;
                    let mut it = el.split_whitespace();
                    let _id: u64 = parse_field(&mut it, el_line, "element id")?;
                    let ty: u32 = parse_field(&mut it, el_line, "element type")?;
                    let n_nodes = match ty {
                        1 => 2,
                        2 => 3,
                        4 => 4,
                        15 => 1,
                        other => {
                            return Err(MeshError::Parse {
                                line: el_line,
                                message: format!("unsupported element type {other}"),
                            })
                        }
                    };
                    let ntags: usize = parse_field(&mut it, el_line, "tag count")?;
                    let mut tag = 0i32;
                    for t in 0..ntags {
                        let v: i32 = parse_field(&mut it, el_line, "tag")?;
                        if t == 0 {
                            tag = v;
                        }
                    }
                    let mut node_ids = Vec::with_capacity(n_nodes);
                    for _ in 0..n_nodes {
                        let id: u64 = parse_field(&mut it, el_line, "node reference")?;
                        let idx = *node_index.get(&id).ok_or_else(|| MeshError::Parse {
                            line: el_line,
                            message: format!("reference to unknown node id {id}"),
                        })?;
                        node_ids.push(idx);
                    }
                    elements.push(RawElement {
                        line: el_line,
                        ty,
                        tag,
                        nodes: node_ids,
                    });
                }
                expect_section_end(&mut lines, "$EndElements")?;
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // skip unknown sections such as $PhysicalNames
                let end = format!("$End{}", &other[1..]);
                loop {
                    match lines.next() {
                        Some((_, l)) if l == end => break,
                        Some(_) => continue,
                        None => {
                            return Err(MeshError::Parse {
                                line: lineno,
                                message: format!("unterminated section {other}"),
                            })
                        }
                    }
                }
            }
            other => {
                return Err(MeshError::Parse {
                    line: lineno,
                    message: format!("unexpected content {other:?} outside any section"),
                })
            }
        }
    }

    if !saw_nodes {
        return Err(MeshError::Parse {
            line: 0,
            message: "missing $Nodes section".into(),
        });
    }
    if !saw_elements {
        return Err(MeshError::Parse {
            line: 0,
            message: "missing $Elements section".into(),
        });
    }

    let has_tets = elements.iter().any(|e| e.ty == 4);
    let has_tris = elements.iter().any(|e| e.ty == 2);
    let (dim, volume_ty, face_ty) = if has_tets {
        (3usize, 4u32, 2u32)
    } else if has_tris {
        (2, 2, 1)
    } else {
        return Err(MeshError::Parse {
            line: elements_line,
            message: "no volume elements".into(),
        });
    };

    let mut simplices = Vec::new();
    let mut boundary_faces = Vec::new();
    let mut boundary_tags = Vec::new();
    for e in &elements {
        if e.ty == volume_ty {
            let mut vs = e.nodes.clone();
            for &v in &vs {
                debug_assert!(v < nodes.len());
            }
            orient_positive(&nodes, dim, &mut vs);
            simplices.extend_from_slice(&vs);
        } else if e.ty == face_ty {
            boundary_faces.extend_from_slice(&e.nodes);
            boundary_tags.push(e.tag);
        }
    }

    let mesh = Mesh {
        dim,
        vertices: nodes,
        simplices,
        dirichlet_vertices: Vec::new(),
        boundary_faces,
        boundary_tags,
        parent: None,
    };
    mesh.validate().map_err(|e| match e {
        MeshError::Geometry { simplex, message } => {
            let line = elements
                .iter()
                .filter(|e| e.ty == volume_ty)
                .nth(simplex)
                .map(|e| e.line)
                .unwrap_or(elements_line);
            MeshError::Parse {
                line,
                message: format!("invalid simplex: {message}"),
            }
        }
        other => other,
    })?;
    Ok(mesh)
}

fn expect_section_end<'a, I>(lines: &mut I, end: &str) -> Result<(), MeshError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    match lines.next() {
        Some((_, l)) if l == end => Ok(()),
        Some((line, l)) => Err(MeshError::Parse {
            line,
            message: format!("expected {end}, found {l:?}"),
        }),
        None => Err(MeshError::Parse {
            line: 0,
            message: format!("unexpected end of file, expected {end}"),
        }),
    }
}

fn parse_field<'a, T: std::str::FromStr>(
    it: &mut impl Iterator<Item = &'a str>,
    line: usize,
    what: &str,
) -> Result<T, MeshError> {
    let tok = it.next().ok_or_else(|| MeshError::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("invalid {what} {tok:?}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TRIANGLES: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
6
1 1 2 1 1 1 2
2 1 2 2 2 2 3
3 1 2 3 3 3 4
4 1 2 4 4 4 1
5 2 2 10 1 1 2 3
6 2 2 10 1 1 3 4
$EndElements
";

    #[test]
    fn minimal_two_triangle_fixture() {
        let mesh = parse_gmsh(TWO_TRIANGLES.as_bytes()).unwrap();
        assert_eq!(mesh.dim, 2);
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.n_simplices(), 2);
        assert_eq!(mesh.n_boundary_faces(), 4);
        assert_eq!(mesh.boundary_tags, vec![1, 2, 3, 4]);
        let area: f64 = (0..2).map(|s| mesh.signed_measure(s)).sum();
        assert!((area - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_from_tag_list() {
        let mut mesh = parse_gmsh(TWO_TRIANGLES.as_bytes()).unwrap();
        mesh.mark_dirichlet_by_tags(&[2, 4]);
        // tag 2: edge 2-3 (x = 1); tag 4: edge 4-1 (x = 0)
        assert_eq!(mesh.dirichlet_vertices, vec![0, 1, 2, 3]);
        mesh.mark_dirichlet_by_tags(&[1]);
        assert_eq!(mesh.dirichlet_vertices, vec![0, 1]);
    }

    #[test]
    fn node_id_gaps_are_remapped() {
        let text = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
5 1 1 0
9 0 1 0
$EndNodes
$Elements
2
1 2 0 1 2 5
2 2 0 1 5 9
$EndElements
";
        let mesh = parse_gmsh(text.as_bytes()).unwrap();
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.n_simplices(), 2);
        assert_eq!(mesh.vertices[2], [1.0, 1.0, 0.0]);
        assert_eq!(mesh.simplex(0), &[0, 1, 2]);
        let area: f64 = (0..2).map(|s| mesh.signed_measure(s)).sum();
        assert!((area - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_elements_is_an_error() {
        let text = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
3
1 0 0 0
2 1 0 0
3 0 1 0
$EndNodes
$Elements
0
$EndElements
";
        let err = parse_gmsh(text.as_bytes()).unwrap_err();
        match err {
            MeshError::Parse { message, .. } => assert!(message.contains("no volume elements")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unsupported_volume_element_names_line() {
        let text = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
1
1 3 0 1 2 3 4
$EndElements
";
        let err = parse_gmsh(text.as_bytes()).unwrap_err();
        match err {
            MeshError::Parse { line, message } => {
                assert_eq!(line, 13);
                assert!(message.contains("unsupported element type 3"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_node_reference_names_line() {
        let text = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
3
1 0 0 0
2 1 0 0
3 0 1 0
$EndNodes
$Elements
1
1 2 0 1 2 7
$EndElements
";
        let err = parse_gmsh(text.as_bytes()).unwrap_err();
        match err {
            MeshError::Parse { line, message } => {
                assert_eq!(line, 12);
                assert!(message.contains("unknown node id 7"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn malformed_header_is_rejected() {
        let err = parse_gmsh(b"$MeshFormat\n4.1 0 8\n$EndMeshFormat\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }));

        let err = parse_gmsh(b"hello\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 1, .. }));
    }

    #[test]
    fn tets_take_precedence_and_triangles_become_faces() {
        let text = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
3
1 2 2 7 1 1 2 3
2 2 2 8 1 1 2 4
3 4 2 1 1 1 2 3 4
$EndElements
";
        let mesh = parse_gmsh(text.as_bytes()).unwrap();
        assert_eq!(mesh.dim, 3);
        assert_eq!(mesh.n_simplices(), 1);
        assert_eq!(mesh.n_boundary_faces(), 2);
        assert_eq!(mesh.boundary_tags, vec![7, 8]);
    }
}
