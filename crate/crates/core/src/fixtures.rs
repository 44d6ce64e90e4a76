//! Deterministic reference instances shipped as JSON documents.

use crate::error::Result;
use crate::games::StateEnsemble;
use crate::io::Document;
use crate::linalg::{max_entangled, HermitianOperator};
use crate::qobj::{
    bell_measurement, build_distributed, build_free_distributed, random_povm, random_separable, random_subroutine,
    teleportation_instrument, BipartiteState, DistributedMeasurement,
};

pub const ISOTROPIC_FAMILY: [f64; 3] = [0.5, 0.8, 1.0];

pub fn phi_plus() -> BipartiteState {
    BipartiteState::new(max_entangled(2)).expect("φ₊ is a state")
}

/// Bell measurements on both sides sharing ρ.
pub fn bell_bell(rho: &BipartiteState) -> Result<DistributedMeasurement> {
    crate::games::bell_bell(rho)
}

pub fn free_measurement() -> Result<DistributedMeasurement> {
    let ma = random_povm(vec![2, 2], 2, 3)?;
    let mb = random_povm(vec![2, 2], 2, 4)?;
    build_free_distributed(&ma, &mb, &random_separable(2, 2, 3, 5)?)
}

/// (|00⟩⟨00| + |11⟩⟨11|)/2.
pub fn classically_correlated() -> BipartiteState {
    BipartiteState::new(HermitianOperator::diagonal(vec![2, 2], &[0.5, 0.0, 0.0, 0.5]).expect("diagonal"))
        .expect("valid state")
}

pub fn product_state() -> BipartiteState {
    let z = HermitianOperator::diagonal(vec![2], &[1.0, 0.0]).expect("diagonal");
    let plus = HermitianOperator::maximally_mixed(vec![2]);
    BipartiteState::product(&z, &plus).expect("valid state")
}

/// p(x, y) = 1/4, σ_xy = |x⟩⟨x| ⊗ |y⟩⟨y|.
pub fn orthogonal_product_ensemble() -> Result<StateEnsemble> {
    let basis = |k: usize| HermitianOperator::diagonal(vec![2], &[(k == 0) as u8 as f64, (k == 1) as u8 as f64]);
    let mut states = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            states.push(BipartiteState::product(&basis(x)?, &basis(y)?)?.op().clone());
        }
    }
    StateEnsemble::new((2, 2), vec![0.25; 4], states)
}

/// Every fixture as (file name, document), in a fixed order.
pub fn all() -> Result<Vec<(String, Document)>> {
    let bell = bell_measurement(2);
    let phi = phi_plus();
    let mut out = vec![
        ("bell_povm.json".to_string(), Document::Povm(bell.clone())),
        ("phi_plus_state.json".to_string(), Document::State(phi.clone())),
        ("product_state.json".to_string(), Document::State(product_state())),
        ("free_measurement.json".to_string(), Document::Measurement(free_measurement()?)),
        ("bell_phi_plus.json".to_string(), Document::Measurement(build_distributed(&bell, &bell, &phi)?)),
    ];
    for p in ISOTROPIC_FAMILY {
        let s = BipartiteState::isotropic(2, p)?;
        let tag = format!("{:03}", (p * 100.0).round() as u32);
        out.push((format!("isotropic_p{tag}_state.json"), Document::State(s.clone())));
        out.push((format!("isotropic_p{tag}_bell_bell.json"), Document::Measurement(bell_bell(&s)?)));
    }
    out.push((
        "classical_instrument.json".to_string(),
        Document::Instrument(teleportation_instrument(&bell, &classically_correlated())?),
    ));
    out.push(("teleportation_instrument.json".to_string(), Document::Instrument(teleportation_instrument(&bell, &phi)?)));
    out.push(("orthogonal_product_ensemble.json".to_string(), Document::Ensemble(orthogonal_product_ensemble()?)));
    out.push(("random_subroutine.json".to_string(), Document::Subroutine(random_subroutine((4, 4), (4, 4), (2, 2), 2, 7)?)));
    Ok(out)
}
