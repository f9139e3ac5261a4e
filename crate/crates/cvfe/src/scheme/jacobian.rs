//! Unknown packing, stacked residuals and the analytic Jacobian of the
//! coupled time step.
//!
//! Unknowns are interleaved per vertex: `[u_1 .. u_n, phi]`, which keeps the
//! Jacobian's sparsity pattern at one dense `(n+1) x (n+1)` block per pair of
//! adjacent vertices.

use crate::mesh::{Mesh, MeshOperators};
use crate::sparse::SparseMatrix;

use super::{
    edge_weights, poisson_residual, potentials_from_concentrations, species_residual,
    ProblemConfig, SchemeError, State, WeightVariant,
};

/// Index map between `(vertex, component)` pairs and the flat unknown vector.
#[derive(Debug, Clone, Copy)]
pub struct UnknownLayout {
    pub n_species: usize,
    pub n_vertices: usize,
}

impl UnknownLayout {
    pub fn new(n_species: usize, n_vertices: usize) -> Self {
        Self {
            n_species,
            n_vertices,
        }
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_vertices * (self.n_species + 1)
    }

    /// Flat index of ion `i` (0-based) at `vertex`.
    #[inline]
    pub fn ion(&self, vertex: usize, i: usize) -> usize {
        vertex * (self.n_species + 1) + i
    }

    /// Flat index of the potential at `vertex`.
    #[inline]
    pub fn phi(&self, vertex: usize) -> usize {
        vertex * (self.n_species + 1) + self.n_species
    }

    pub fn pack(&self, state: &State) -> Vec<f64> {
        let mut x = vec![0.0; self.n_unknowns()];
        for v in 0..self.n_vertices {
            for i in 0..self.n_species {
                x[self.ion(v, i)] = state.concentrations[i][v];
            }
            x[self.phi(v)] = state.phi[v];
        }
        x
    }

    pub fn unpack(&self, x: &[f64], time_index: usize) -> State {
        assert_eq!(x.len(), self.n_unknowns());
        let mut concentrations = vec![vec![0.0; self.n_vertices]; self.n_species];
        let mut phi = vec![0.0; self.n_vertices];
        for v in 0..self.n_vertices {
            for (i, ui) in concentrations.iter_mut().enumerate() {
                ui[v] = x[self.ion(v, i)];
            }
            phi[v] = x[self.phi(v)];
        }
        State {
            concentrations,
            phi,
            time_index,
        }
    }
}

/// Species and electrostatic residuals stacked in the unknown layout.
pub fn stacked_residual(
    state: &State,
    prev: &State,
    config: &ProblemConfig,
    mesh: &Mesh,
    ops: &MeshOperators,
    tau: f64,
    f_cell: &[f64],
) -> Result<Vec<f64>, SchemeError> {
    let layout = UnknownLayout::new(config.n_species(), mesh.n_vertices());
    let species = species_residual(state, prev, config, mesh, ops, tau)?;
    let poisson = poisson_residual(state, config, mesh, ops, f_cell);
    let mut r = vec![0.0; layout.n_unknowns()];
    for v in 0..layout.n_vertices {
        for (i, ri) in species.iter().enumerate() {
            r[layout.ion(v, i)] = ri[v];
        }
        r[layout.phi(v)] = poisson[v];
    }
    Ok(r)
}

/// Reusable assembly workspace: the block sparsity pattern of the mesh
/// adjacency, built once per (mesh, species count).
pub struct JacobianWorkspace {
    matrix: SparseMatrix,
    layout: UnknownLayout,
}

impl JacobianWorkspace {
    pub fn new(mesh: &Mesh, n_species: usize) -> Self {
        let layout = UnknownLayout::new(n_species, mesh.n_vertices());
        let nloc = mesh.dim + 1;
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(mesh.n_simplices() * nloc * nloc);
        for s in 0..mesh.n_simplices() {
            let vs = mesh.simplex(s);
            for &a in vs {
                for &b in vs {
                    pairs.push((a, b));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let nb = n_species + 1;
        let entries = pairs.iter().flat_map(|&(a, b)| {
            (0..nb).flat_map(move |i| (0..nb).map(move |j| (a * nb + i, b * nb + j)))
        });
        let matrix =
            SparseMatrix::zeros_with_pattern(layout.n_unknowns(), layout.n_unknowns(), entries)
                .expect("pattern indices in range");
        Self { matrix, layout }
    }

    pub fn layout(&self) -> UnknownLayout {
        self.layout
    }
}

/// Assembles the analytic Jacobian of the stacked residual with respect to
/// the interleaved unknowns, reusing the workspace pattern.
///
/// The chemical-potential derivative is
/// `d mu_i,K / d u_j,K = delta_ij / u_i,K + 1 / u_0,K`; the weight factors
/// differentiate per variant (mean: 1/(d+1) per vertex; max: the full
/// derivative lands on the recorded argmax vertex). Dirichlet potential rows
/// are unit diagonal.
pub fn assemble_jacobian<'ws>(
    state: &State,
    config: &ProblemConfig,
    mesh: &Mesh,
    ops: &MeshOperators,
    tau: f64,
    workspace: &'ws mut JacobianWorkspace,
) -> Result<&'ws SparseMatrix, SchemeError> {
    let layout = workspace.layout;
    let n = config.n_species();
    assert_eq!(n, config.n_species());
    assert_eq!(layout.n_vertices, mesh.n_vertices());

    let mu = potentials_from_concentrations(&state.concentrations)?;
    let weights = edge_weights(state, config.weight_variant, mesh);
    let solvent = state.solvent();
    let dirichlet = mesh.dirichlet_mask();
    let beta = config.beta;
    let lambda2 = config.lambda2;
    let nloc = mesh.dim + 1;
    let inv_nloc = 1.0 / nloc as f64;

    let jac = &mut workspace.matrix;
    jac.reset();

    for s in 0..mesh.n_simplices() {
        let vs = mesh.simplex(s);
        let w0 = weights.weight(s, 0);
        for a in 0..nloc {
            for b in a + 1..nloc {
                let (vk, vl) = (vs[a], vs[b]);
                let st = ops.stiffness_entry(s, a, b);
                let dphi = state.phi[vk] - state.phi[vl];
                for (i, sp) in config.species.iter().enumerate() {
                    let wi = weights.weight(s, i + 1);
                    let w = w0 * wi;
                    let dst = sp.diffusion * st;
                    let flux = dst * ((mu[i][vk] - mu[i][vl]) + beta * sp.charge * dphi);
                    let row_k = layout.ion(vk, i);
                    let row_l = layout.ion(vl, i);

                    // flux derivative at fixed weights
                    for j in 0..n {
                        let dmu_k = if i == j {
                            1.0 / state.concentrations[i][vk] + 1.0 / solvent[vk]
                        } else {
                            1.0 / solvent[vk]
                        };
                        let dmu_l = if i == j {
                            1.0 / state.concentrations[i][vl] + 1.0 / solvent[vl]
                        } else {
                            1.0 / solvent[vl]
                        };
                        let ck = w * dst * dmu_k;
                        let cl = w * dst * dmu_l;
                        jac.add_at(row_k, layout.ion(vk, j), ck);
                        jac.add_at(row_k, layout.ion(vl, j), -cl);
                        jac.add_at(row_l, layout.ion(vk, j), -ck);
                        jac.add_at(row_l, layout.ion(vl, j), cl);
                    }
                    let cphi = w * dst * beta * sp.charge;
                    jac.add_at(row_k, layout.phi(vk), cphi);
                    jac.add_at(row_k, layout.phi(vl), -cphi);
                    jac.add_at(row_l, layout.phi(vk), -cphi);
                    jac.add_at(row_l, layout.phi(vl), cphi);

                    // weight derivative at fixed flux
                    match config.weight_variant {
                        WeightVariant::ArithmeticMean => {
                            for &vm in vs {
                                for j in 0..n {
                                    // d(w0)/du_j = -1/(d+1), d(wi)/du_j = delta_ij/(d+1)
                                    let mut dw = -wi * inv_nloc;
                                    if i == j {
                                        dw += w0 * inv_nloc;
                                    }
                                    let c = dw * flux;
                                    jac.add_at(row_k, layout.ion(vm, j), c);
                                    jac.add_at(row_l, layout.ion(vm, j), -c);
                                }
                            }
                        }
                        WeightVariant::MaxVertex => {
                            let arg0 = vs[weights.argmax_local(s, 0).unwrap()];
                            let argi = vs[weights.argmax_local(s, i + 1).unwrap()];
                            for j in 0..n {
                                let c = -wi * flux;
                                jac.add_at(row_k, layout.ion(arg0, j), c);
                                jac.add_at(row_l, layout.ion(arg0, j), -c);
                            }
                            let c = w0 * flux;
                            jac.add_at(row_k, layout.ion(argi, i), c);
                            jac.add_at(row_l, layout.ion(argi, i), -c);
                        }
                    }
                }

                // electrostatic stiffness rows
                if !dirichlet[vk] {
                    let row = layout.phi(vk);
                    jac.add_at(row, layout.phi(vk), lambda2 * st);
                    jac.add_at(row, layout.phi(vl), -lambda2 * st);
                }
                if !dirichlet[vl] {
                    let row = layout.phi(vl);
                    jac.add_at(row, layout.phi(vl), lambda2 * st);
                    jac.add_at(row, layout.phi(vk), -lambda2 * st);
                }
            }
        }
    }

    for v in 0..layout.n_vertices {
        for i in 0..n {
            jac.add_at(layout.ion(v, i), layout.ion(v, i), ops.dual_measure[v] / tau);
        }
        let row = layout.phi(v);
        if dirichlet[v] {
            jac.add_at(row, row, 1.0);
        } else {
            for (j, sp) in config.species.iter().enumerate() {
                jac.add_at(row, layout.ion(v, j), -ops.dual_measure[v] * sp.charge);
            }
        }
    }
    Ok(&workspace.matrix)
}
