//! C1 approximation of a continuous extension that also approximates
//! prescribed derivative data on `Y`.

pub mod cover;
pub mod dual;
pub mod pass;

pub use cover::{oscillation_cover, JetData, OscillationCover};
pub use dual::{duality_map, Measure, Restriction};
pub use pass::{single_pass, PassCertificates, PassOptions, SinglePass, TaylorField, MAX_LEVELS};

use crate::approx::Context;
use crate::base::{ClosedSet, ScalarField};
use crate::error::{Error, Result};

/// `G` with `|F - G| < eps`, `||(G' - f')|_Z|| < eps` on `Y`, and in
/// Lipschitz mode (`0 < eps < Lip F`) `Lip(G) <= C2 Lip(F)`.
///
/// `f` must carry its gradient; `ext` is a continuous extension of `f|_Y`.
pub fn approximate_with_derivative_control(
    f: &ScalarField,
    y: &ClosedSet,
    ext: &ScalarField,
    eps: f64,
    lipschitz: bool,
    ctx: &Context,
) -> Result<SinglePass> {
    if lipschitz {
        let l = ext.lip_bound().ok_or(Error::Missing("lip_bound"))?;
        if !(eps < l) {
            return Err(Error::InvalidInput(format!(
                "Lipschitz mode needs eps < Lip F = {l}, got {eps}"
            )));
        }
    }
    let jet = JetData::from_field(f, y)?;
    single_pass(&jet, ext, PassOptions::new(eps, lipschitz), ctx)
}

/// Same for jet data `(f, D)`: `|F - G| < eps`, `||(G' - D)|_Z|| < eps`
/// and `Lip((f - G)|_Y) < eps`.
pub fn approximate_with_jet_control(
    jet: &JetData,
    ext: &ScalarField,
    eps: f64,
    lipschitz: bool,
    ctx: &Context,
) -> Result<SinglePass> {
    single_pass(jet, ext, PassOptions::new(eps, lipschitz), ctx)
}
