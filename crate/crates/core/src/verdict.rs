//! Pass/fail results with counterexamples that can be checked again
//! independently of the sweep that produced them.

use crate::alpha::CompromiserAssignment;
use crate::engine::{run_lp, MechanismTable, Outcome};
use crate::instance::{diff, AgentSet, Allocation};
use crate::preference::Profile;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn pass() -> Self {
        Verdict {
            holds: true,
            witness: None,
        }
    }

    pub fn fail(witness: Witness) -> Self {
        Verdict {
            holds: false,
            witness: Some(witness),
        }
    }

    pub fn from_witness(witness: Option<Witness>) -> Self {
        match witness {
            Some(w) => Verdict::fail(w),
            None => Verdict::pass(),
        }
    }
}

/// A named precondition of a conditional claim, with its own verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypothesis {
    pub name: &'static str,
    pub verdict: Verdict,
}

/// Outcome of checking a claim of the form "hypotheses imply conclusion".
///
/// The conclusion is evaluated even when a hypothesis fails, whenever it is
/// still meaningful, so that counterexamples to the unconditional statement
/// can be exhibited.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub hypotheses: Vec<Hypothesis>,
    pub conclusion: Verdict,
}

impl Report {
    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.verdict.holds)
    }

    pub fn failed_hypothesis(&self) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| !h.verdict.holds)
    }

    /// The claim is confirmed: hypotheses hold and so does the conclusion.
    pub fn holds(&self) -> bool {
        self.hypotheses_hold() && self.conclusion.holds
    }

    /// The claim is refuted: hypotheses hold but the conclusion fails.
    pub fn refuted(&self) -> bool {
        self.hypotheses_hold() && !self.conclusion.holds
    }
}

/// A counterexample to one of the checked properties.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// The local priority algorithm ran out of objects for `agent`.
    Exhausted {
        profile: Profile,
        agent: usize,
        step: usize,
    },
    /// A profile whose top-choice vector is attainable but not chosen.
    Unanimity { profile: Profile, outcome: Allocation },
    /// A coalition misreport that weakly helps every member and strictly
    /// helps one.
    Manipulation {
        profile: Profile,
        coalition: AgentSet,
        report: Profile,
        truthful: Allocation,
        manipulated: Allocation,
    },
    /// A misreport that leaves the agent's own object unchanged but moves
    /// someone else.
    Bossy {
        profile: Profile,
        agent: usize,
        report: Profile,
        truthful: Allocation,
        manipulated: Allocation,
    },
    /// `transformed` expands every lower contour at `before`, yet the
    /// outcome changes.
    Maskin {
        profile: Profile,
        transformed: Profile,
        before: Allocation,
        after: Allocation,
    },
    /// `dominating` is feasible and Pareto improves on `outcome`.
    Pareto {
        profile: Profile,
        outcome: Allocation,
        dominating: Allocation,
    },
    /// Every agent receives their top choice somewhere in `profiles`, all of
    /// which have tops `mu`.
    FixedCompromiser {
        mu: Allocation,
        profiles: Vec<Profile>,
        outcomes: Vec<Allocation>,
    },
    /// Bottom-ranking the fixed compromisers' tops changes the outcome.
    CompromiserInvariance {
        mu: Allocation,
        profile: Profile,
        compromisers: AgentSet,
        transformed: Profile,
        before: Allocation,
        after: Allocation,
    },
    /// Two mechanisms disagree at `profile`.
    TableMismatch {
        profile: Profile,
        left: Allocation,
        right: Allocation,
    },
    /// `y` differs from `x` only among `α(x)`, yet misses the compromisers
    /// `missing` from `α(x) − d(x,y)`.
    Forward {
        x: Allocation,
        y: Allocation,
        missing: AgentSet,
    },
    /// `x` and `y` are `agent`-connected along `path`, `x_prime` differs
    /// from `x` only within `α(y)` minus `agent`, and `agent ∉ α(x_prime)`.
    Backward {
        agent: usize,
        x: Allocation,
        y: Allocation,
        path: Vec<Allocation>,
        x_prime: Allocation,
    },
    /// Cells of two assignments at `x` fail a required relation.
    Cell {
        x: Allocation,
        left: AgentSet,
        right: AgentSet,
    },
    /// `agent` strictly prefers `other` to `preferred` at `profile`, although
    /// `preferred` was supposed to be weakly better.
    Dominance {
        profile: Profile,
        agent: usize,
        preferred: Allocation,
        other: Allocation,
    },
}

impl Witness {
    pub fn kind(&self) -> &'static str {
        match self {
            Witness::Exhausted { .. } => "exhausted",
            Witness::Unanimity { .. } => "unanimity",
            Witness::Manipulation { .. } => "manipulation",
            Witness::Bossy { .. } => "bossy",
            Witness::Maskin { .. } => "maskin",
            Witness::Pareto { .. } => "pareto",
            Witness::FixedCompromiser { .. } => "fixed_compromiser",
            Witness::CompromiserInvariance { .. } => "compromiser_invariance",
            Witness::TableMismatch { .. } => "table_mismatch",
            Witness::Forward { .. } => "forward",
            Witness::Backward { .. } => "backward",
            Witness::Cell { .. } => "cell",
            Witness::Dominance { .. } => "dominance",
        }
    }

    /// Re-evaluates a mechanism-level witness directly against `f`.
    ///
    /// Returns `None` for witnesses that are about assignments rather than
    /// mechanisms.
    pub fn recheck_table(&self, f: &MechanismTable) -> Option<bool> {
        let out = |p: &Profile| f.outcome_of(p).ok();
        Some(match self {
            Witness::Unanimity { profile, outcome } => {
                let top = profile.tops();
                f.image().contains(f.instance().encode(&top) as usize)
                    && out(profile).as_ref() == Some(outcome)
                    && *outcome != top
            }
            Witness::Manipulation {
                profile,
                coalition,
                report,
                truthful,
                manipulated,
            } => {
                let (Some(t), Some(m)) = (out(profile), out(report)) else {
                    return Some(false);
                };
                let outside_same = (0..profile.len())
                    .filter(|&i| !coalition.contains(i))
                    .all(|i| profile.get(i) == report.get(i));
                let weak = coalition
                    .iter()
                    .all(|i| profile.get(i).weakly_prefers(m.get(i), t.get(i)));
                let strict = coalition
                    .iter()
                    .any(|i| profile.get(i).prefers(m.get(i), t.get(i)));
                t == *truthful && m == *manipulated && outside_same && weak && strict
            }
            Witness::Bossy {
                profile,
                agent,
                report,
                truthful,
                manipulated,
            } => {
                let (Some(t), Some(m)) = (out(profile), out(report)) else {
                    return Some(false);
                };
                let only_agent = (0..profile.len())
                    .all(|i| i == *agent || profile.get(i) == report.get(i));
                t == *truthful
                    && m == *manipulated
                    && only_agent
                    && t.get(*agent) == m.get(*agent)
                    && t != m
            }
            Witness::Maskin {
                profile,
                transformed,
                before,
                after,
            } => {
                let (Some(b), Some(a)) = (out(profile), out(transformed)) else {
                    return Some(false);
                };
                let expands = (0..profile.len()).all(|i| {
                    profile
                        .get(i)
                        .lower_contour(b.get(i))
                        .is_subset(transformed.get(i).lower_contour(b.get(i)))
                });
                b == *before && a == *after && expands && a != b
            }
            Witness::Pareto {
                profile,
                outcome,
                dominating,
            } => {
                let feasible = f.constraint().contains(dominating);
                let weak = (0..profile.len())
                    .all(|i| profile.get(i).weakly_prefers(dominating.get(i), outcome.get(i)));
                out(profile).as_ref() == Some(outcome)
                    && feasible
                    && weak
                    && dominating != outcome
            }
            Witness::FixedCompromiser {
                mu,
                profiles,
                outcomes,
            } => {
                let image = f.image();
                let mut common = f.instance().all_agents();
                for (p, o) in profiles.iter().zip(outcomes) {
                    if p.tops() != *mu || out(p).as_ref() != Some(o) {
                        return Some(false);
                    }
                    common = common.intersection(diff(o, mu));
                }
                !image.contains(f.instance().encode(mu) as usize) && common.is_empty()
            }
            Witness::CompromiserInvariance {
                mu,
                profile,
                compromisers,
                transformed,
                before,
                after,
            } => {
                let expected = bottom_rank_tops(profile, *compromisers);
                profile.tops() == *mu
                    && expected == *transformed
                    && out(profile).as_ref() == Some(before)
                    && out(transformed).as_ref() == Some(after)
                    && before != after
            }
            Witness::TableMismatch { profile, left, .. } => {
                out(profile).as_ref() == Some(left)
            }
            _ => return None,
        })
    }

    /// Re-evaluates an assignment-level witness directly against `alpha`.
    pub fn recheck_alpha(&self, alpha: &CompromiserAssignment) -> Option<bool> {
        let inst = alpha.instance();
        Some(match self {
            Witness::Exhausted {
                profile,
                agent,
                step,
            } => matches!(
                run_lp(alpha, profile),
                Ok(Outcome::Exhausted { agent: a, step: s, .. }) if a == *agent && s == *step
            ),
            Witness::Forward { x, y, missing } => {
                let ax = alpha.cell_of(x);
                let d = diff(x, y);
                !missing.is_empty()
                    && d.is_subset(ax)
                    && missing.is_subset(ax.difference(d))
                    && missing.intersection(alpha.cell_of(y)).is_empty()
            }
            Witness::Backward {
                agent,
                x,
                y,
                path,
                x_prime,
            } => {
                let ay = alpha.cell_of(y);
                let d = diff(x, x_prime);
                crate::consistency::is_valid_connecting_path(alpha, path, *agent)
                    && path.first() == Some(x)
                    && path.last() == Some(y)
                    && !alpha.is_feasible(inst.encode(x))
                    && !alpha.is_feasible(inst.encode(y))
                    && d.is_subset(ay)
                    && !d.contains(*agent)
                    && !alpha.cell_of(x_prime).contains(*agent)
            }
            _ => return None,
        })
    }
}

/// `p` with every agent in `agents` moving their top object to the bottom.
pub fn bottom_rank_tops(p: &Profile, agents: AgentSet) -> Profile {
    let mut q = p.clone();
    for i in agents.iter() {
        q = q.with(i, p.get(i).with_bottom(p.get(i).top()));
    }
    q
}
