//! Residuals of the coupled time step: dual-cell species balances with
//! P1 finite-element fluxes, and the discrete electrostatic equation.

use crate::mesh::{Mesh, MeshOperators};

use super::{
    edge_weights, potentials_from_concentrations, ProblemConfig, SchemeError, State,
};

/// Species balance residuals, one array per ion.
///
/// `R[i][K] = |K| (u_i,K - prev_i,K) / tau + sum_S sum_L w0_S wi_S F_iKL`
/// with `F_iKL = D_i a_KL ((mu_iK - mu_iL) + beta z_i (phi_K - phi_L))`.
/// Each edge contribution is accumulated antisymmetrically, so the spatial
/// part sums to zero over all vertices up to rounding.
pub fn species_residual(
    state: &State,
    prev: &State,
    config: &ProblemConfig,
    mesh: &Mesh,
    ops: &MeshOperators,
    tau: f64,
) -> Result<Vec<Vec<f64>>, SchemeError> {
    let n = config.n_species();
    let nv = mesh.n_vertices();
    let mu = potentials_from_concentrations(&state.concentrations)?;
    let weights = edge_weights(state, config.weight_variant, mesh);
    let beta = config.beta;

    let mut residual = vec![vec![0.0; nv]; n];
    let nloc = mesh.dim + 1;
    for s in 0..mesh.n_simplices() {
        let vs = mesh.simplex(s);
        let w0 = weights.weight(s, 0);
        for a in 0..nloc {
            for b in a + 1..nloc {
                let (vk, vl) = (vs[a], vs[b]);
                let st = ops.stiffness_entry(s, a, b);
                let dphi = state.phi[vk] - state.phi[vl];
                for (i, sp) in config.species.iter().enumerate() {
                    let w = w0 * weights.weight(s, i + 1);
                    let flux = sp.diffusion
                        * st
                        * ((mu[i][vk] - mu[i][vl]) + beta * sp.charge * dphi);
                    let c = w * flux;
                    residual[i][vk] += c;
                    residual[i][vl] -= c;
                }
            }
        }
    }
    for i in 0..n {
        for v in 0..nv {
            residual[i][v] += ops.dual_measure[v]
                * (state.concentrations[i][v] - prev.concentrations[i][v])
                / tau;
        }
    }
    Ok(residual)
}

/// Electrostatic residual.
///
/// Interior and Neumann rows carry the P1 stiffness action minus charge and
/// source terms; Dirichlet rows are `phi_K - phi_D(x_K)`.
pub fn poisson_residual(
    state: &State,
    config: &ProblemConfig,
    mesh: &Mesh,
    ops: &MeshOperators,
    f_cell: &[f64],
) -> Vec<f64> {
    let nv = mesh.n_vertices();
    let lambda2 = config.lambda2;
    let mut residual = vec![0.0; nv];
    let nloc = mesh.dim + 1;
    for s in 0..mesh.n_simplices() {
        let vs = mesh.simplex(s);
        for a in 0..nloc {
            for b in a + 1..nloc {
                let (vk, vl) = (vs[a], vs[b]);
                let c = lambda2 * ops.stiffness_entry(s, a, b) * (state.phi[vk] - state.phi[vl]);
                residual[vk] += c;
                residual[vl] -= c;
            }
        }
    }
    for v in 0..nv {
        let mut charge = 0.0;
        for (i, sp) in config.species.iter().enumerate() {
            charge += sp.charge * state.concentrations[i][v];
        }
        residual[v] -= ops.dual_measure[v] * charge + f_cell[v];
    }
    for &k in &mesh.dirichlet_vertices {
        residual[k] = state.phi[k] - (config.phi_dirichlet)(mesh.vertices[k]);
    }
    residual
}
