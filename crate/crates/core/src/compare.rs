//! Welfare comparisons between the mechanisms of two assignments, possibly
//! for different constraints over the same agents and objects.

use crate::alpha::CompromiserAssignment;
use crate::consistency::{is_backward_consistent, is_forward_consistent, Reading};
use crate::engine::{implementability, tabulate_in, MechanismTable};
use crate::error::{Error, Result};
use crate::instance::AgentSet;
use crate::preference::ProfileSpace;
use crate::verdict::{Hypothesis, Report, Verdict, Witness};

use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DominanceMode {
    /// Every agent weakly prefers the first mechanism.
    Pointwise,
    /// The given agent weakly prefers the second mechanism.
    Agent(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominanceReport {
    pub mode: DominanceMode,
    pub report: Report,
}

impl DominanceReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.report.hypotheses_hold()
    }

    /// Whether the dominance itself holds at every profile, regardless of the
    /// hypotheses.
    pub fn dominance_holds(&self) -> bool {
        self.report.conclusion.holds
    }

    pub fn witness(&self) -> Option<&Witness> {
        self.report.conclusion.witness.as_ref()
    }
}

fn same_instance(a: &CompromiserAssignment, b: &CompromiserAssignment) -> Result<()> {
    if a.instance() != b.instance() {
        return Err(Error::InstanceMismatch(
            "comparisons need the same agents and objects".into(),
        ));
    }
    Ok(())
}

/// First cell where `check(x, left, right)` fails, as a cell witness.
fn cell_relation<F>(left: &CompromiserAssignment, right: &CompromiserAssignment, check: F) -> Verdict
where
    F: Fn(AgentSet, AgentSet) -> bool,
{
    let inst = left.instance();
    let hit = (0..inst.num_allocations() as u32).find(|&x| !check(left.cell(x), right.cell(x)));
    Verdict::from_witness(hit.map(|x| Witness::Cell {
        x: inst.decode(x),
        left: left.cell(x),
        right: right.cell(x),
    }))
}

/// First profile where some agent in `agents` strictly prefers the outcome of
/// `other` to that of `preferred`.
fn dominance_sweep(preferred: &MechanismTable, other: &MechanismTable, agents: AgentSet) -> Verdict {
    let space = preferred.space();
    let inst = preferred.instance();
    let hit = (0..space.len()).find_map(|k| {
        let (a, b) = (preferred.code(k), other.code(k));
        if a == b {
            return None;
        }
        agents
            .iter()
            .find(|&i| {
                let pref = space.pref(space.digit(k, i));
                pref.prefers(inst.object_at(b, i), inst.object_at(a, i))
            })
            .map(|i| (k, i))
    });
    Verdict::from_witness(hit.map(|(k, agent)| Witness::Dominance {
        profile: space.profile(k),
        agent,
        preferred: preferred.outcome(k),
        other: other.outcome(k),
    }))
}

/// Checks a dominance witness directly against the two tables it claims to
/// come from.
pub fn recheck_dominance(w: &Witness, preferred: &MechanismTable, other: &MechanismTable) -> bool {
    let Witness::Dominance {
        profile,
        agent,
        preferred: x,
        other: y,
    } = w
    else {
        return false;
    };
    match (preferred.outcome_of(profile), other.outcome_of(profile)) {
        (Ok(a), Ok(b)) => a == *x && b == *y && profile.get(*agent).prefers(y.get(*agent), x.get(*agent)),
        _ => false,
    }
}

fn implementable_both(
    a: &CompromiserAssignment,
    b: &CompromiserAssignment,
    space: &ProfileSpace,
) -> Verdict {
    let v = implementability(a, space);
    if v.holds {
        implementability(b, space)
    } else {
        v
    }
}

/// Whether every agent weakly prefers the outcome under `alpha` to the one
/// under `alpha_prime` at every profile, with the hypotheses that both are
/// implementable, `alpha_prime` is forward consistent, and `alpha` is
/// pointwise contained in `alpha_prime`.
pub fn check_pointwise_dominance(
    alpha: &CompromiserAssignment,
    alpha_prime: &CompromiserAssignment,
) -> Result<DominanceReport> {
    same_instance(alpha, alpha_prime)?;
    let space = Arc::new(ProfileSpace::new(alpha.instance())?);
    let implementable = implementable_both(alpha, alpha_prime, &space);
    let conclusion = if implementable.holds {
        let f = tabulate_in(alpha, space.clone())?;
        let g = tabulate_in(alpha_prime, space.clone())?;
        dominance_sweep(&f, &g, alpha.instance().all_agents())
    } else {
        Verdict::pass()
    };
    let hypotheses = vec![
        Hypothesis {
            name: "implementable",
            verdict: implementable,
        },
        Hypothesis {
            name: "forward_consistent",
            verdict: is_forward_consistent(alpha_prime),
        },
        Hypothesis {
            name: "pointwise_subset",
            verdict: cell_relation(alpha, alpha_prime, |a, b| a.is_subset(b)),
        },
    ];
    Ok(DominanceReport {
        mode: DominanceMode::Pointwise,
        report: Report {
            hypotheses,
            conclusion,
        },
    })
}

/// Whether `agent` weakly prefers the outcome under `alpha_prime` to the one
/// under `alpha` at every profile, with the hypotheses that both are
/// consistent and implementable for the same constraint, every other agent
/// compromising under `alpha` also compromises under `alpha_prime`, and
/// `agent` compromising under `alpha_prime` also compromises under `alpha`.
pub fn check_agent_dominance(
    alpha: &CompromiserAssignment,
    alpha_prime: &CompromiserAssignment,
    agent: usize,
    reading: Reading,
) -> Result<DominanceReport> {
    same_instance(alpha, alpha_prime)?;
    let inst = alpha.instance();
    if agent >= inst.num_agents() {
        return Err(Error::UnknownAgent(format!("#{agent}")));
    }
    let space = Arc::new(ProfileSpace::new(inst)?);
    let implementable = implementable_both(alpha, alpha_prime, &space);
    let conclusion = if implementable.holds {
        let f = tabulate_in(alpha, space.clone())?;
        let g = tabulate_in(alpha_prime, space.clone())?;
        dominance_sweep(&g, &f, AgentSet::singleton(agent))
    } else {
        Verdict::pass()
    };
    let same_constraint = if alpha.constraint() == alpha_prime.constraint() {
        Verdict::pass()
    } else {
        cell_relation(alpha, alpha_prime, |a, b| a.is_empty() == b.is_empty())
    };
    let consistent = |a: &CompromiserAssignment| -> Result<Verdict> {
        let fwd = is_forward_consistent(a);
        if !fwd.holds {
            return Ok(fwd);
        }
        is_backward_consistent(a, reading)
    };
    let c1 = consistent(alpha)?;
    let consistent_both = if c1.holds { consistent(alpha_prime)? } else { c1 };
    let hypotheses = vec![
        Hypothesis {
            name: "implementable",
            verdict: implementable,
        },
        Hypothesis {
            name: "same_constraint",
            verdict: same_constraint,
        },
        Hypothesis {
            name: "consistent",
            verdict: consistent_both,
        },
        Hypothesis {
            name: "others_included",
            verdict: cell_relation(alpha, alpha_prime, |a, b| a.without(agent).is_subset(b)),
        },
        Hypothesis {
            name: "agent_excluded",
            verdict: cell_relation(alpha, alpha_prime, |a, b| !b.contains(agent) || a.contains(agent)),
        },
    ];
    Ok(DominanceReport {
        mode: DominanceMode::Agent(agent),
        report: Report {
            hypotheses,
            conclusion,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::Constraint;
    use crate::engine::tabulate;
    use crate::instance::{Allocation, Instance};

    fn three() -> Arc<Instance> {
        Arc::new(Instance::new(["1", "2", "3"], ["a", "b", "c"]).unwrap())
    }

    #[test]
    fn counterexample_without_forward_consistency() {
        let inst = three();
        let c = Constraint::explicit(
            inst.clone(),
            (0..27).map(|k| inst.decode(k)).filter(|x| {
                *x != Allocation::new([0, 0, 0]) && *x != Allocation::new([1, 0, 0])
            }),
        )
        .unwrap();
        let cells = |first: AgentSet| {
            let mut v = vec![AgentSet::EMPTY; 27];
            v[0] = first;
            v[1] = AgentSet::full(3);
            CompromiserAssignment::new(c.clone(), v).unwrap()
        };
        let alpha = cells(AgentSet::singleton(0));
        let alpha_prime = cells(AgentSet::from_agents([0, 1]));
        let r = check_pointwise_dominance(&alpha, &alpha_prime).unwrap();
        assert!(!r.dominance_holds());
        assert_eq!(r.report.failed_hypothesis().unwrap().name, "forward_consistent");
        let w = r.witness().unwrap();
        assert!(recheck_dominance(w, &tabulate(&alpha).unwrap(), &tabulate(&alpha_prime).unwrap()));
    }

    #[test]
    fn identical_assignments() {
        let inst = three();
        let c = Constraint::house(inst).unwrap();
        let alpha = crate::mechanisms::sd_alpha(&c, &crate::mechanisms::DictatorOrder::identity(3));
        let r = check_pointwise_dominance(&alpha, &alpha).unwrap();
        assert!(r.report.holds());
        let r = check_agent_dominance(&alpha, &alpha, 1, Reading::Strict).unwrap();
        assert!(r.report.holds());
    }
}
