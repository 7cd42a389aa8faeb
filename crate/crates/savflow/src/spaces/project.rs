//! L2 projection of the velocity curl onto the coarse scalar space:
//! solves `M_L S = C u` where `M_L` is the coarse mass matrix and
//! `C[l, v] = (l, curl v)`. The projection satisfies
//! `||S|| <= ||curl u||` in L2.

use super::{
    assemble_curl_coupling, assemble_mass, norms, FeFunction, FeSpace, SpaceError,
};
use crate::linalg::{FillOrdering, LuFactorization, SparseMatrix};
use std::sync::Arc;

/// Precomputed operators for the per-step curl projection.
pub struct CurlProjector {
    coupling: SparseMatrix,
    mass_lu: LuFactorization,
    coarse: Arc<FeSpace>,
}

impl CurlProjector {
    pub fn new(velocity: &Arc<FeSpace>, coarse: &Arc<FeSpace>) -> Result<Self, SpaceError> {
        let coupling = assemble_curl_coupling(velocity, coarse)?;
        let mass = assemble_mass(coarse);
        let ordering = FillOrdering::min_degree(&mass);
        let mass_lu = LuFactorization::factor_with(&mass, &ordering)?;
        Ok(Self {
            coupling,
            mass_lu,
            coarse: Arc::clone(coarse),
        })
    }

    pub fn project(&self, u: &FeFunction) -> Result<FeFunction, SpaceError> {
        let rhs = self.coupling.spmv(u.coeffs())?;
        let s = self.mass_lu.solve(&rhs)?;
        Ok(FeFunction::from_coeffs(&self.coarse, 1, s))
    }
}

/// One-shot projection; experiments cache a [`CurlProjector`] instead.
pub fn l2_project_curl(
    u: &FeFunction,
    coarse: &Arc<FeSpace>,
) -> Result<FeFunction, SpaceError> {
    let projector = CurlProjector::new(u.space(), coarse)?;
    projector.project(u)
}

/// Stability slack `||curl u|| - ||S||`; nonnegative up to rounding for any
/// projection output.
pub fn projection_slack(s: &FeFunction, u: &FeFunction) -> f64 {
    norms(u).curl_l2 - norms(s).l2
}
