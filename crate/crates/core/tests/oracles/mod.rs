//! Brute-force reference implementations, written directly from the
//! definitions and sharing nothing with the library beyond its data types.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use lp_core::{CompromiserAssignment, Constraint, MechanismTable};
use rand::seq::SliceRandom;
use rand::Rng;

/// All permutations of `0..m`, lexicographically sorted.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, m: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        for o in 0..m {
            if !prefix.contains(&o) {
                prefix.push(o);
                go(prefix, m, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), m, &mut out);
    out
}

/// All allocations in `0..m` for `n` agents.
pub fn allocations(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|x| {
                (0..m).map(move |o| {
                    let mut y = x.clone();
                    y.push(o);
                    y
                })
            })
            .collect();
    }
    out
}

/// A mechanism as a dense list over every profile, with its own indexing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub n: usize,
    pub m: usize,
    pub prefs: Vec<Vec<usize>>,
    /// `rank[d][o]`: position of object `o` in preference `d`.
    pub rank: Vec<Vec<usize>>,
    pub outcomes: Vec<Vec<usize>>,
}

impl Table {
    fn shell(n: usize, m: usize) -> Table {
        let prefs = permutations(m);
        let rank = prefs
            .iter()
            .map(|p| {
                let mut r = vec![0; m];
                for (k, &o) in p.iter().enumerate() {
                    r[o] = k;
                }
                r
            })
            .collect();
        Table {
            n,
            m,
            prefs,
            rank,
            outcomes: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.prefs.len().pow(self.n as u32)
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        let k = self.prefs.len();
        let mut d = vec![0; self.n];
        let mut r = index;
        for i in (0..self.n).rev() {
            d[i] = r % k;
            r /= k;
        }
        d
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * self.prefs.len() + d)
    }

    pub fn profile(&self, index: usize) -> Vec<Vec<usize>> {
        self.digits(index).into_iter().map(|d| self.prefs[d].clone()).collect()
    }

    /// Tabulates `f`, or `None` if it fails at some profile.
    pub fn try_from_fn<F>(n: usize, m: usize, f: F) -> Option<Table>
    where
        F: Fn(&[Vec<usize>]) -> Option<Vec<usize>>,
    {
        let mut t = Table::shell(n, m);
        let outcomes: Option<Vec<_>> = (0..t.size()).map(|k| f(&t.profile(k))).collect();
        t.outcomes = outcomes?;
        Some(t)
    }

    pub fn from_fn<F>(n: usize, m: usize, f: F) -> Table
    where
        F: Fn(&[Vec<usize>]) -> Vec<usize>,
    {
        Table::try_from_fn(n, m, |p| Some(f(p))).unwrap()
    }

    /// Reads a library table by evaluating it at each of our profiles.
    pub fn from_lib(f: &MechanismTable) -> Table {
        let inst = f.instance();
        let by_profile: HashMap<Vec<Vec<usize>>, Vec<usize>> = (0..f.len())
            .map(|k| {
                let p = f.profile(k);
                let key = p.prefs().iter().map(|q| q.ranking().collect()).collect();
                (key, f.outcome(k).to_vec())
            })
            .collect();
        Table::from_fn(inst.num_agents(), inst.num_objects(), |p| by_profile[p].clone())
    }

    fn prefers(&self, digit: usize, a: usize, b: usize) -> bool {
        self.rank[digit][a] < self.rank[digit][b]
    }
}

pub fn strategy_proof(t: &Table) -> bool {
    (0..t.size()).all(|k| {
        let d = t.digits(k);
        (0..t.n).all(|i| {
            (0..t.prefs.len()).all(|r| {
                let mut e = d.clone();
                e[i] = r;
                !t.prefers(d[i], t.outcomes[t.index(&e)][i], t.outcomes[k][i])
            })
        })
    })
}

pub fn nonbossy(t: &Table) -> bool {
    (0..t.size()).all(|k| {
        let d = t.digits(k);
        (0..t.n).all(|i| {
            (0..t.prefs.len()).all(|r| {
                let mut e = d.clone();
                e[i] = r;
                let other = &t.outcomes[t.index(&e)];
                other[i] != t.outcomes[k][i] || *other == t.outcomes[k]
            })
        })
    })
}

/// No coalition of any size gains by a joint misreport.
pub fn group_strategy_proof(t: &Table) -> bool {
    let k_prefs = t.prefs.len();
    (0..t.size()).all(|k| {
        let d = t.digits(k);
        let truthful = &t.outcomes[k];
        (1u32..(1 << t.n)).all(|coalition| {
            let members: Vec<usize> = (0..t.n).filter(|i| coalition >> i & 1 == 1).collect();
            (0..k_prefs.pow(members.len() as u32)).all(|mut joint| {
                let mut e = d.clone();
                for &i in &members {
                    e[i] = joint % k_prefs;
                    joint /= k_prefs;
                }
                let lie = &t.outcomes[t.index(&e)];
                let weak = members
                    .iter()
                    .all(|&i| lie[i] == truthful[i] || t.prefers(d[i], lie[i], truthful[i]));
                let strict = members.iter().any(|&i| t.prefers(d[i], lie[i], truthful[i]));
                !(weak && strict)
            })
        })
    })
}

/// Whenever every agent's lower contour set at their assigned object weakly
/// grows, the outcome stays.
pub fn maskin_monotonic(t: &Table) -> bool {
    let lower = |digit: usize, o: usize| -> u32 {
        (0..t.m)
            .filter(|&b| t.rank[digit][b] > t.rank[digit][o])
            .fold(0, |s, b| s | 1 << b)
    };
    (0..t.size()).all(|k| {
        let d = t.digits(k);
        let x = &t.outcomes[k];
        (0..t.size()).all(|l| {
            let e = t.digits(l);
            let expands = (0..t.n).all(|i| lower(d[i], x[i]) & !lower(e[i], x[i]) == 0);
            !expands || t.outcomes[l] == *x
        })
    })
}

pub fn pareto_efficient(t: &Table, feasible: &dyn Fn(&[usize]) -> bool) -> bool {
    let all = allocations(t.n, t.m);
    let feasible: Vec<&Vec<usize>> = all.iter().filter(|y| feasible(y)).collect();
    (0..t.size()).all(|k| {
        let d = t.digits(k);
        let x = &t.outcomes[k];
        !feasible.iter().any(|y| {
            (0..t.n).all(|i| y[i] == x[i] || t.prefers(d[i], y[i], x[i]))
                && (0..t.n).any(|i| t.prefers(d[i], y[i], x[i]))
        })
    })
}

/// A compromiser assignment as a plain map from infeasible allocations to
/// sorted agent lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alpha {
    pub n: usize,
    pub m: usize,
    pub cells: HashMap<Vec<usize>, Vec<usize>>,
}

impl Alpha {
    pub fn from_lib(alpha: &CompromiserAssignment) -> Alpha {
        let inst = alpha.instance();
        let cells = alpha
            .infeasible_cells()
            .map(|(x, s)| (inst.decode(x).to_vec(), s.iter().collect()))
            .collect();
        Alpha {
            n: inst.num_agents(),
            m: inst.num_objects(),
            cells,
        }
    }

    pub fn cell(&self, x: &[usize]) -> &[usize] {
        self.cells.get(x).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn feasible(&self, x: &[usize]) -> bool {
        !self.cells.contains_key(x)
    }
}

/// Runs the local priority algorithm straight from its description.
pub fn local_priority(alpha: &Alpha, profile: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut pos = vec![0; alpha.n];
    loop {
        let x: Vec<usize> = (0..alpha.n).map(|i| profile[i][pos[i]]).collect();
        if alpha.feasible(&x) {
            return Some(x);
        }
        for &i in alpha.cell(&x) {
            pos[i] += 1;
            if pos[i] == alpha.m {
                return None;
            }
        }
    }
}

/// The table of the local priority mechanism, or `None` if some run gets
/// stuck.
pub fn lp_table(alpha: &Alpha) -> Option<Table> {
    Table::try_from_fn(alpha.n, alpha.m, |p| local_priority(alpha, p))
}

fn differing(x: &[usize], y: &[usize]) -> Vec<usize> {
    (0..x.len()).filter(|&i| x[i] != y[i]).collect()
}

fn subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|i| b.contains(i))
}

pub fn forward_consistent(alpha: &Alpha) -> bool {
    let all = allocations(alpha.n, alpha.m);
    alpha.cells.iter().all(|(x, ax)| {
        all.iter().all(|y| {
            let d = differing(x, y);
            if !subset(&d, ax) {
                return true;
            }
            let rest: Vec<usize> = ax.iter().copied().filter(|i| !d.contains(i)).collect();
            subset(&rest, alpha.cell(y))
        })
    })
}

/// Infeasible allocations reachable from `x` by an acyclic path whose first
/// move is `i` alone and whose every move is a nonempty set of current
/// compromisers.
pub fn connected(alpha: &Alpha, x: &[usize], i: usize) -> HashSet<Vec<usize>> {
    type State = (Vec<usize>, Vec<Vec<usize>>);
    let mut reached = HashSet::new();
    let mut seen: HashSet<State> = HashSet::new();
    let mut queue: VecDeque<State> = VecDeque::new();
    let start_left = vec![vec![]; alpha.n];
    let moves = |z: &[usize], left: &[Vec<usize>], movers: &[usize]| -> Vec<State> {
        let mut out: Vec<State> = vec![(z.to_vec(), left.to_vec())];
        for &j in movers {
            out = out
                .into_iter()
                .flat_map(|(w, l)| {
                    (0..alpha.m)
                        .filter(|&o| o != z[j] && !l[j].contains(&o))
                        .map(|o| {
                            let mut w2 = w.clone();
                            let mut l2 = l.clone();
                            l2[j].push(z[j]);
                            l2[j].sort();
                            w2[j] = o;
                            (w2, l2)
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        out
    };
    for s in moves(x, &start_left, &[i]) {
        if seen.insert(s.clone()) {
            queue.push_back(s);
        }
    }
    while let Some((z, left)) = queue.pop_front() {
        let az = alpha.cell(&z).to_vec();
        if az.is_empty() {
            continue;
        }
        reached.insert(z.clone());
        for mask in 1u32..(1 << az.len()) {
            let movers: Vec<usize> = (0..az.len()).filter(|b| mask >> b & 1 == 1).map(|b| az[b]).collect();
            for s in moves(&z, &left, &movers) {
                if seen.insert(s.clone()) {
                    queue.push_back(s);
                }
            }
        }
    }
    reached
}

pub fn backward_consistent(alpha: &Alpha, strict: bool) -> bool {
    let all = allocations(alpha.n, alpha.m);
    alpha.cells.iter().all(|(x, ax)| {
        ax.iter().all(|&i| {
            connected(alpha, x, i).iter().all(|y| {
                let ay = alpha.cell(y);
                all.iter().all(|xp| {
                    let d = differing(x, xp);
                    if d.contains(&i) || !subset(&d, ay) {
                        return true;
                    }
                    if alpha.feasible(xp) {
                        return !strict;
                    }
                    alpha.cell(xp).contains(&i)
                })
            })
        })
    })
}

/// Cumulative deferred acceptance; returns the final allocation and the
/// proposals of every round.
pub fn cumulative_da(
    capacities: &[usize],
    priorities: &[Vec<usize>],
    profile: &[Vec<usize>],
) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n = profile.len();
    let mut rejected = vec![HashSet::new(); n];
    let mut rounds = Vec::new();
    loop {
        let proposal: Vec<usize> = (0..n)
            .map(|i| *profile[i].iter().find(|s| !rejected[i].contains(*s)).unwrap())
            .collect();
        rounds.push(proposal.clone());
        let mut any = false;
        for (s, cap) in capacities.iter().enumerate() {
            let mut applicants: Vec<usize> = (0..n).filter(|&i| proposal[i] == s).collect();
            applicants.sort_by_key(|&i| priorities[s].iter().position(|&j| j == i).unwrap());
            for &i in applicants.iter().skip(*cap) {
                rejected[i].insert(s);
                any = true;
            }
        }
        if !any {
            return (proposal, rounds);
        }
    }
}

/// Gale's top trading cycles from an endowment `endowment[agent] = object`.
pub fn top_trading_cycles(endowment: &[usize], profile: &[Vec<usize>]) -> Vec<usize> {
    let n = profile.len();
    let mut result: Vec<Option<usize>> = vec![None; n];
    let mut owner: HashMap<usize, usize> = endowment.iter().enumerate().map(|(i, &o)| (o, i)).collect();
    while let Some(first) = (0..n).find(|&i| result[i].is_none()) {
        let points = |i: usize| *profile[i].iter().find(|o| owner.contains_key(o)).unwrap();
        let mut walk = vec![first];
        let start = loop {
            let next = owner[&points(*walk.last().unwrap())];
            if let Some(start) = walk.iter().position(|&a| a == next) {
                break start;
            }
            walk.push(next);
        };
        let cycle: Vec<(usize, usize)> = walk[start..].iter().map(|&a| (a, points(a))).collect();
        for (a, o) in cycle {
            result[a] = Some(o);
            owner.remove(&o);
        }
    }
    result.into_iter().map(Option::unwrap).collect()
}

/// Serial dictatorship over an explicit feasible list.
pub fn serial_dictatorship(feasible: &[Vec<usize>], order: &[usize], profile: &[Vec<usize>]) -> Vec<usize> {
    let mut live: Vec<&Vec<usize>> = feasible.iter().collect();
    for &i in order {
        let best = *profile[i].iter().find(|&&o| live.iter().any(|y| y[i] == o)).unwrap();
        live.retain(|y| y[i] == best);
    }
    live[0].clone()
}

pub fn feasible_list(c: &Constraint) -> Vec<Vec<usize>> {
    c.feasible_codes().map(|x| c.instance().decode(x).to_vec()).collect()
}

pub fn random_permutation<R: Rng>(rng: &mut R, k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..k).collect();
    v.shuffle(rng);
    v
}

/// A random nonempty set of allocation codes, each kept with probability `p`.
pub fn random_codes<R: Rng>(rng: &mut R, total: usize, p: f64) -> Vec<u32> {
    loop {
        let v: Vec<u32> = (0..total as u32).filter(|_| rng.gen_bool(p)).collect();
        if !v.is_empty() {
            return v;
        }
    }
}
