//! Spin-chain model: Hamiltonian construction, cached propagators, and
//! single-site projectors in the σ^z product basis.
//!
//! Basis convention used across the crate: a computational index `n`
//! stores site `j` in bit `j` (bit 0 is site 0), and bit value 0 means
//! σ^z = +1 while bit value 1 means σ^z = -1.

use faer::complex_native::c64;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported chain length; the evolution operator is a dense
/// 2^L x 2^L complex matrix, which at L = 14 already weighs 4.3 GB.
pub const MAX_SITES: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Forced-measurement outcome of a single σ^z readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Up,
    Down,
}

impl Outcome {
    pub fn sign(self) -> i8 {
        match self {
            Outcome::Up => 1,
            Outcome::Down => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Up => Outcome::Down,
            Outcome::Down => Outcome::Up,
        }
    }

    /// Bit value that survives the projection: 0 for Up, 1 for Down.
    pub fn kept_bit(self) -> usize {
        match self {
            Outcome::Up => 0,
            Outcome::Down => 1,
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_i8(self.sign())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        match i8::deserialize(de)? {
            1 => Ok(Outcome::Up),
            -1 => Ok(Outcome::Down),
            other => Err(serde::de::Error::custom(format!(
                "measurement outcome must be +1 or -1, got {other}"
            ))),
        }
    }
}

/// Couplings and geometry of the transverse/longitudinal-field Ising chain
///
/// H = sum_j [ J_zz σ^z_{j+1} σ^z_j + h_x σ^x_j + h_z σ^z_j ]
///
/// with the bond sum running over nearest neighbours, wrapping around for
/// periodic boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub l: usize,
    pub j_zz: f64,
    pub h_x: f64,
    pub h_z: f64,
    pub boundary: Boundary,
    pub delta_t: f64,
}

impl ModelParams {
    /// Chaotic point: J_zz = -1, h_x = 1.05, h_z = -0.5, periodic chain.
    pub fn chaotic(l: usize) -> Self {
        Self { l, j_zz: -1.0, h_x: 1.05, h_z: -0.5, boundary: Boundary::Periodic, delta_t: 1.0 }
    }

    /// Integrable point: J_zz = -1, h_x = -1, h_z = 0, open chain.
    pub fn integrable(l: usize) -> Self {
        Self { l, j_zz: -1.0, h_x: -1.0, h_z: 0.0, boundary: Boundary::Open, delta_t: 1.0 }
    }

    /// Measurement-only limit: J_zz = 1, h_x = 0, and a caller-chosen h_z;
    /// the propagator is diagonal so no operator spreading occurs.
    pub fn trivial_integrable(l: usize, h_z: f64) -> Self {
        Self { l, j_zz: 1.0, h_x: 0.0, h_z, boundary: Boundary::Open, delta_t: 1.0 }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_delta_t(mut self, delta_t: f64) -> Self {
        self.delta_t = delta_t;
        self
    }

    /// Hilbert-space dimension 2^L.
    pub fn dim(&self) -> usize {
        1 << self.l
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 sites, got {}", self.l)));
        }
        if self.l > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "L = {} exceeds the supported maximum of {MAX_SITES}",
                self.l
            )));
        }
        for (name, v) in [("j_zz", self.j_zz), ("h_x", self.h_x), ("h_z", self.h_z)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.delta_t.is_finite() && self.delta_t > 0.0) {
            return Err(Error::InvalidParams(format!(
                "delta_t must be positive and finite, got {}",
                self.delta_t
            )));
        }
        Ok(())
    }
}

fn z_sign(n: usize, site: usize) -> f64 {
    if (n >> site) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Dense Hamiltonian in the σ^z product basis. Diagonal entries carry the
/// ZZ bonds and the longitudinal field; σ^x hops connect indices differing
/// in exactly one bit.
pub fn hamiltonian_matrix(params: &ModelParams) -> Result<Mat<f64>> {
    params.validate()?;
    let l = params.l;
    let nd = params.dim();
    let mut h = Mat::<f64>::zeros(nd, nd);
    let n_bonds = match params.boundary {
        Boundary::Open => l - 1,
        Boundary::Periodic => l,
    };
    for n in 0..nd {
        let mut diag = 0.0;
        for j in 0..n_bonds {
            diag += params.j_zz * z_sign(n, (j + 1) % l) * z_sign(n, j);
        }
        for j in 0..l {
            diag += params.h_z * z_sign(n, j);
        }
        h[(n, n)] = diag;
        if params.h_x != 0.0 {
            for j in 0..l {
                h[(n ^ (1 << j), n)] += params.h_x;
            }
        }
    }
    Ok(h)
}

/// Unitary one-step propagator U = exp(-i Δt H), built once per parameter
/// set through the eigendecomposition H = V Λ V^T and kept together with
/// that decomposition so propagators at other time steps cost only a
/// matrix product.
pub struct Propagator {
    params: ModelParams,
    eigvals: Vec<f64>,
    eigvecs: Mat<f64>,
    u: Mat<c64>,
}

impl Propagator {
    pub fn new(params: ModelParams) -> Result<Self> {
        let h = hamiltonian_matrix(&params)?;
        let decomp = h.selfadjoint_eigendecomposition(Side::Lower);
        let eigvecs = decomp.u().to_owned();
        let sv = decomp.s().column_vector();
        let eigvals: Vec<f64> = (0..sv.nrows()).map(|i| sv[i]).collect();
        let u = rebuild(&eigvals, &eigvecs, params.delta_t);
        Ok(Self { params, eigvals, eigvecs, u })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// The cached U(Δt) for the Δt stored in the parameters.
    pub fn matrix(&self) -> faer::MatRef<'_, c64> {
        self.u.as_ref()
    }

    /// Propagator over an arbitrary interval, from the cached spectrum.
    pub fn at(&self, delta_t: f64) -> Mat<c64> {
        rebuild(&self.eigvals, &self.eigvecs, delta_t)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigvals
    }
}

fn rebuild(eigvals: &[f64], eigvecs: &Mat<f64>, delta_t: f64) -> Mat<c64> {
    let nd = eigvals.len();
    // W = V diag(exp(-i Δt λ)), then U = W V^T.
    let mut w = Mat::<c64>::zeros(nd, nd);
    for k in 0..nd {
        let theta = -delta_t * eigvals[k];
        let phase = c64::new(theta.cos(), theta.sin());
        for i in 0..nd {
            w[(i, k)] = phase * eigvecs[(i, k)];
        }
    }
    let vt = Mat::<c64>::from_fn(nd, nd, |i, j| c64::new(eigvecs[(j, i)], 0.0));
    &w * &vt
}

/// Projector onto a σ^z eigenstate of one site, P = (1 + α σ^z_j) / 2.
/// Diagonal in the computational basis, so applying it to an operator
/// from the left reduces to masking rows.
#[derive(Debug, Clone, Copy)]
pub struct ZProjector {
    site: usize,
    outcome: Outcome,
    l: usize,
}

impl ZProjector {
    pub fn new(site: usize, outcome: Outcome, l: usize) -> Result<Self> {
        if l == 0 || l > MAX_SITES {
            return Err(Error::InvalidParams(format!("projector needs 1 <= L <= {MAX_SITES}, got {l}")));
        }
        if site >= l {
            return Err(Error::InvalidParams(format!("site {site} out of range for L = {l}")));
        }
        Ok(Self { site, outcome, l })
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    /// Whether basis state `n` survives the projection.
    pub fn keeps(&self, n: usize) -> bool {
        (n >> self.site) & 1 == self.outcome.kept_bit()
    }

    /// The 0/1 diagonal of the projector.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..1usize << self.l).map(|n| if self.keeps(n) { 1.0 } else { 0.0 }).collect()
    }

    /// Zero every row of `m` that the projector kills.
    pub fn mask_rows(&self, m: &mut Mat<c64>) {
        let zero = c64::new(0.0, 0.0);
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if !self.keeps(i) {
                    m[(i, j)] = zero;
                }
            }
        }
    }
}
