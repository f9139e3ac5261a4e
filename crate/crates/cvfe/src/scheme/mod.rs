//! Discrete states and the building blocks of the coupled CVFE time step:
//! the concentration/chemical-potential transform, per-simplex edge weights,
//! residuals and analytic Jacobians.
//!
//! Conventions: ion species are 0-indexed in code; the solvent fraction is
//! never stored, it is always derived as `1 - sum of ion concentrations`, so
//! the volume-filling closure holds identically. Error messages label the
//! solvent as species 0 and ions as species 1..n.

mod jacobian;
mod residual;

pub use jacobian::{assemble_jacobian, stacked_residual, JacobianWorkspace, UnknownLayout};
pub use residual::{poisson_residual, species_residual};

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{dual_cell_integral, Mesh, MeshOperators};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("non-finite potential at vertex {vertex}, species {species}")]
    NonFinite { vertex: usize, species: usize },
    #[error("nonpositive concentration for species {species} at vertex {vertex}")]
    NonPositive { vertex: usize, species: usize },
    #[error("configuration error: {0}")]
    Config(String),
}

/// Scalar field over the domain, evaluated at coordinates `[x, y, z]`.
pub type ScalarField = Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>;

/// Choice of the per-simplex flux weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightVariant {
    /// Maximum of the vertex values over the simplex.
    MaxVertex,
    /// Arithmetic mean of the vertex values.
    ArithmeticMean,
}

impl WeightVariant {
    pub fn name(self) -> &'static str {
        match self {
            WeightVariant::MaxVertex => "max",
            WeightVariant::ArithmeticMean => "mean",
        }
    }
}

/// One ion species: diffusion coefficient, charge and initial datum.
#[derive(Clone)]
pub struct SpeciesSpec {
    pub diffusion: f64,
    pub charge: f64,
    pub initial: ScalarField,
}

/// Time grid of the transient problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    steps: Vec<f64>,
}

impl TimeGrid {
    /// Uniform steps of size `tau` up to `t_end`; if `t_end` is not an
    /// integer multiple of `tau`, a final partial step closes the gap.
    pub fn uniform(tau: f64, t_end: f64) -> Result<Self, SchemeError> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(SchemeError::Config(format!("time step must be positive, got {tau}")));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(SchemeError::Config(format!("final time must be positive, got {t_end}")));
        }
        let n = (t_end / tau).round().max(1.0);
        let remainder = t_end - n * tau;
        let mut steps = vec![tau; n as usize];
        if remainder.abs() > 1e-9 * t_end {
            let n = (t_end / tau).floor().max(0.0) as usize;
            steps = vec![tau; n];
            steps.push(t_end - n as f64 * tau);
        }
        Ok(Self { steps })
    }

    pub fn from_steps(steps: Vec<f64>) -> Result<Self, SchemeError> {
        if steps.is_empty() || steps.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(SchemeError::Config(
                "time step list must be nonempty with positive entries".into(),
            ));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn t_end(&self) -> f64 {
        self.steps.iter().sum()
    }
}

/// Full problem description: species data, coupling constants, boundary and
/// initial data, weight variant and time grid.
#[derive(Clone)]
pub struct ProblemConfig {
    pub species: Vec<SpeciesSpec>,
    /// Inverse thermal voltage.
    pub beta: f64,
    /// Squared permittivity.
    pub lambda2: f64,
    pub phi_dirichlet: ScalarField,
    pub source: ScalarField,
    pub weight_variant: WeightVariant,
    pub time: TimeGrid,
}

impl ProblemConfig {
    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        if self.species.is_empty() {
            return Err(SchemeError::Config("at least one species is required".into()));
        }
        for (i, sp) in self.species.iter().enumerate() {
            if !(sp.diffusion > 0.0) || !sp.diffusion.is_finite() {
                return Err(SchemeError::Config(format!(
                    "species {}: diffusion coefficient must be positive, got {}",
                    i + 1,
                    sp.diffusion
                )));
            }
            if !sp.charge.is_finite() {
                return Err(SchemeError::Config(format!(
                    "species {}: charge must be finite",
                    i + 1
                )));
            }
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(SchemeError::Config(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.lambda2 > 0.0) || !self.lambda2.is_finite() {
            return Err(SchemeError::Config(format!(
                "lambda2 must be positive, got {}",
                self.lambda2
            )));
        }
        Ok(())
    }
}

/// Discrete solution at one time level: ion concentrations and potential,
/// one value per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// `concentrations[i][v]` is ion `i` at vertex `v`, in (0, 1).
    pub concentrations: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub time_index: usize,
}

impl State {
    pub fn n_species(&self) -> usize {
        self.concentrations.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.phi.len()
    }

    /// Solvent fraction at vertex `v`.
    #[inline]
    pub fn solvent_at(&self, v: usize) -> f64 {
        1.0 - self.concentrations.iter().map(|u| u[v]).sum::<f64>()
    }

    /// Solvent fraction at every vertex.
    pub fn solvent(&self) -> Vec<f64> {
        (0..self.n_vertices()).map(|v| self.solvent_at(v)).collect()
    }

    /// True when every ion concentration and the solvent fraction are
    /// strictly positive everywhere.
    pub fn is_strictly_interior(&self) -> bool {
        for v in 0..self.n_vertices() {
            let mut sum = 0.0;
            for u in &self.concentrations {
                if !(u[v] > 0.0) {
                    return false;
                }
                sum += u[v];
            }
            if !(sum < 1.0) {
                return false;
            }
        }
        true
    }
}

/// Recovers ion concentrations from chemical potentials.
///
/// `u_i = exp(mu_i) / (1 + sum_j exp(mu_j))`, evaluated with a shifted
/// exponent so arbitrarily large potentials cannot overflow. Outputs are
/// clamped into the open unit interval.
pub fn concentrations_from_potentials(mu: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SchemeError> {
    let n = mu.len();
    assert!(n > 0, "at least one species required");
    let nv = mu[0].len();
    let mut u = vec![vec![0.0; nv]; n];
    const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;
    for v in 0..nv {
        let mut shift = 0.0f64;
        for (i, mui) in mu.iter().enumerate() {
            if !mui[v].is_finite() {
                return Err(SchemeError::NonFinite {
                    vertex: v,
                    species: i + 1,
                });
            }
            shift = shift.max(mui[v]);
        }
        let mut denom = (-shift).exp();
        for mui in mu.iter() {
            denom += (mui[v] - shift).exp();
        }
        for i in 0..n {
            let val = (mu[i][v] - shift).exp() / denom;
            u[i][v] = val.clamp(f64::MIN_POSITIVE, BELOW_ONE);
        }
    }
    Ok(u)
}

/// Chemical potentials `mu_i = log(u_i / u_0)` of a strictly interior state.
pub fn potentials_from_concentrations(u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SchemeError> {
    let n = u.len();
    assert!(n > 0, "at least one species required");
    let nv = u[0].len();
    let mut mu = vec![vec![0.0; nv]; n];
    for v in 0..nv {
        let mut sum = 0.0;
        for (i, ui) in u.iter().enumerate() {
            if !(ui[v] > 0.0) {
                return Err(SchemeError::NonPositive {
                    vertex: v,
                    species: i + 1,
                });
            }
            sum += ui[v];
        }
        let solvent = 1.0 - sum;
        if !(solvent > 0.0) {
            return Err(SchemeError::NonPositive {
                vertex: v,
                species: 0,
            });
        }
        let log_solvent = solvent.ln();
        for i in 0..n {
            mu[i][v] = u[i][v].ln() - log_solvent;
        }
    }
    Ok(mu)
}

/// Per-simplex flux weights for the solvent and every ion.
///
/// `weight(s, 0)` is the solvent weight, `weight(s, i)` for `i >= 1` the
/// weight of ion `i`. For the max variant, `argmax` records the local index
/// of the maximizing vertex (ties resolved to the smallest global vertex
/// index), which the Jacobian uses as its subgradient choice.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    values: Vec<f64>,
    argmax: Option<Vec<u8>>,
    stride: usize,
}

impl EdgeWeights {
    #[inline]
    pub fn weight(&self, s: usize, component: usize) -> f64 {
        self.values[s * self.stride + component]
    }

    #[inline]
    pub fn argmax_local(&self, s: usize, component: usize) -> Option<usize> {
        self.argmax
            .as_ref()
            .map(|a| a[s * self.stride + component] as usize)
    }
}

/// Evaluates the per-simplex weights of `state` under `variant`.
pub fn edge_weights(state: &State, variant: WeightVariant, mesh: &Mesh) -> EdgeWeights {
    let n = state.n_species();
    let stride = n + 1;
    let nloc = mesh.dim + 1;
    let ns = mesh.n_simplices();
    let solvent = state.solvent();
    let mut values = vec![0.0; ns * stride];
    let mut argmax = match variant {
        WeightVariant::MaxVertex => Some(vec![0u8; ns * stride]),
        WeightVariant::ArithmeticMean => None,
    };
    let component = |c: usize, v: usize| -> f64 {
        if c == 0 {
            solvent[v]
        } else {
            state.concentrations[c - 1][v]
        }
    };
    for s in 0..ns {
        let vs = mesh.simplex(s);
        for c in 0..stride {
            match variant {
                WeightVariant::ArithmeticMean => {
                    let sum: f64 = vs.iter().map(|&v| component(c, v)).sum();
                    values[s * stride + c] = sum / nloc as f64;
                }
                WeightVariant::MaxVertex => {
                    let mut best_local = 0usize;
                    let mut best = component(c, vs[0]);
                    for (local, &v) in vs.iter().enumerate().skip(1) {
                        let val = component(c, v);
                        if val > best || (val == best && v < vs[best_local]) {
                            best = val;
                            best_local = local;
                        }
                    }
                    values[s * stride + c] = best;
                    argmax.as_mut().unwrap()[s * stride + c] = best_local as u8;
                }
            }
        }
    }
    EdgeWeights {
        values,
        argmax,
        stride,
    }
}

/// Result of projecting the initial data onto the dual cells.
#[derive(Debug, Clone)]
pub struct InitialProjection {
    pub state: State,
    /// Number of vertices whose projected values needed clipping into the
    /// strictly interior range.
    pub clipped_vertices: usize,
}

/// Dual-cell averages of the initial data, clipped into `[1e-12, 1 - 1e-12]`
/// with the ion sum capped so the solvent fraction stays strictly positive.
/// The potential is set to the Dirichlet interpolant on boundary vertices
/// and zero elsewhere; it only serves as the Newton initial guess.
pub fn project_initial(
    config: &ProblemConfig,
    mesh: &Mesh,
    ops: &MeshOperators,
) -> Result<InitialProjection, SchemeError> {
    config.validate()?;
    const FLOOR: f64 = 1e-12;
    let n = config.n_species();
    let nv = mesh.n_vertices();
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(n);
    for sp in &config.species {
        let field = sp.initial.clone();
        let ints = dual_cell_integral(mesh, ops, move |p| field(p));
        u.push(
            ints.iter()
                .zip(&ops.dual_measure)
                .map(|(int, m)| int / m)
                .collect(),
        );
    }

    let mut clipped = 0usize;
    for v in 0..nv {
        let raw_sum: f64 = u.iter().map(|ui| ui[v]).sum();
        if raw_sum > 1.0 + 1e-10 {
            return Err(SchemeError::Config(format!(
                "projected ion concentrations sum to {raw_sum} > 1 at vertex {v}"
            )));
        }
        let mut any = false;
        for ui in u.iter_mut() {
            if ui[v] < FLOOR {
                ui[v] = FLOOR;
                any = true;
            } else if ui[v] > 1.0 - FLOOR {
                ui[v] = 1.0 - FLOOR;
                any = true;
            }
        }
        let sum: f64 = u.iter().map(|ui| ui[v]).sum();
        if sum > 1.0 - FLOOR {
            let scale = (1.0 - FLOOR) / sum;
            for ui in u.iter_mut() {
                ui[v] = (ui[v] * scale).max(FLOOR);
            }
            any = true;
        }
        if any {
            clipped += 1;
        }
    }

    let mut phi = vec![0.0; nv];
    for &k in &mesh.dirichlet_vertices {
        phi[k] = (config.phi_dirichlet)(mesh.vertices[k]);
    }
    Ok(InitialProjection {
        state: State {
            concentrations: u,
            phi,
            time_index: 0,
        },
        clipped_vertices: clipped,
    })
}
