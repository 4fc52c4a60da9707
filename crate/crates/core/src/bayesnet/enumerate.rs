//! Brute-force inference by summing the full joint distribution.

use super::{normalise, DiscreteNetwork, Evidence, NetworkError, Posterior, Result};

/// Largest joint table [`enumerate_joint`] will build.
pub const ENUMERATION_CAP: usize = 4096;

/// Full joint over all nodes, indexed row-major in node declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    pub cards: Vec<usize>,
    pub probabilities: Vec<f64>,
}

/// Target posterior computed from the explicit joint. Hard evidence zeroes
/// inconsistent assignments; soft evidence replaces root priors.
pub fn enumerate_joint(net: &DiscreteNetwork, ev: &Evidence) -> Result<(Posterior, JointDistribution)> {
    let n = net.node_count();
    let cards: Vec<usize> = (0..n).map(|i| net.cardinality(i)).collect();
    let size = cards.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c)).unwrap_or(usize::MAX);
    if size > ENUMERATION_CAP {
        return Err(NetworkError::TooLarge { size, cap: ENUMERATION_CAP });
    }
    let (hard, soft) = net.resolve(ev)?;
    let target_name = net.target().to_owned();
    let target = net.node_names().position(|s| s == target_name).unwrap();

    let mut probabilities = Vec::with_capacity(size);
    let mut marginal = vec![0.0; cards[target]];
    let mut assignment = vec![0usize; n];
    for _ in 0..size {
        let mut p = 1.0;
        for &v in net.topo_order() {
            p *= net.local_probability(v, &assignment, &soft);
        }
        probabilities.push(p);
        let consistent = hard.iter().enumerate().all(|(v, h)| h.is_none_or(|s| assignment[v] == s));
        if consistent {
            marginal[assignment[target]] += p;
        }
        for i in (0..n).rev() {
            assignment[i] += 1;
            if assignment[i] < cards[i] {
                break;
            }
            assignment[i] = 0;
        }
    }
    let states = net.states(&target_name)?.to_vec();
    let posterior = Posterior { states, probabilities: normalise(marginal)? };
    Ok((posterior, JointDistribution { cards, probabilities }))
}
