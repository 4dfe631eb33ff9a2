//! Strict preferences, profiles, and the canonical indexing of the profile
//! space.
//!
//! Preferences over `m` objects are numbered by the lexicographic rank of
//! their ranking (best object first). A profile index is the mixed-radix
//! number whose digits are these ranks, agent 0 being the most significant
//! digit, so increasing index order is lexicographic order on profiles.

use std::fmt;

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance, ObjectSet};

/// Default cap on the number of profiles a dense sweep may visit.
pub const DEFAULT_PROFILE_BUDGET: u128 = 1 << 22;

/// A strict ranking of all objects, best first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Preference {
    ranking: Vec<u8>,
    position: Vec<u8>,
}

impl Preference {
    pub fn new<I: IntoIterator<Item = usize>>(ranking: I) -> Result<Self> {
        let ranking: Vec<usize> = ranking.into_iter().collect();
        let m = ranking.len();
        let mut position = vec![u8::MAX; m];
        for (k, &o) in ranking.iter().enumerate() {
            if o >= m {
                return Err(Error::InvalidPreference(format!(
                    "object #{o} out of range for {m} objects"
                )));
            }
            if position[o] != u8::MAX {
                return Err(Error::InvalidPreference(format!("object #{o} ranked twice")));
            }
            position[o] = k as u8;
        }
        Ok(Preference {
            ranking: ranking.into_iter().map(|o| o as u8).collect(),
            position,
        })
    }

    /// The identity ranking `0 ≻ 1 ≻ … ≻ m-1`.
    pub fn identity(m: usize) -> Self {
        Preference::new(0..m).expect("identity is a permutation")
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    pub fn ranking(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranking.iter().map(|&o| o as usize)
    }

    pub fn top(&self) -> usize {
        self.ranking[0] as usize
    }

    /// Zero-based position of `object` (0 = top choice).
    pub fn rank(&self, object: usize) -> usize {
        self.position[object] as usize
    }

    /// The `k`-th ranked object, 1-based.
    pub fn tau(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.len() {
            return Err(Error::InvalidPreference(format!(
                "rank {k} outside 1..={}",
                self.len()
            )));
        }
        Ok(self.ranking[k - 1] as usize)
    }

    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.position[a] < self.position[b]
    }

    pub fn weakly_prefers(&self, a: usize, b: usize) -> bool {
        self.position[a] <= self.position[b]
    }

    /// Strict lower and upper contour sets of `object`.
    pub fn contours(&self, object: usize) -> Result<(ObjectSet, ObjectSet)> {
        if object >= self.len() {
            return Err(Error::UnknownObject(format!("#{object}")));
        }
        let p = self.rank(object);
        let upper = self.ranking[..p].iter().map(|&o| o as usize).collect();
        let lower = self.ranking[p + 1..].iter().map(|&o| o as usize).collect();
        Ok((lower, upper))
    }

    pub fn lower_contour(&self, object: usize) -> ObjectSet {
        let p = self.rank(object);
        self.ranking[p + 1..].iter().map(|&o| o as usize).collect()
    }

    /// Best object strictly below `object`, if any.
    pub fn next_below(&self, object: usize) -> Option<usize> {
        self.ranking
            .get(self.rank(object) + 1)
            .map(|&o| o as usize)
    }

    /// Same ranking with `object` moved to the bottom.
    pub fn with_bottom(&self, object: usize) -> Preference {
        let ranking = self
            .ranking()
            .filter(|&o| o != object)
            .chain(std::iter::once(object));
        Preference::new(ranking).expect("still a permutation")
    }

    /// Same ranking with `object` moved to the top.
    pub fn with_top(&self, object: usize) -> Preference {
        let ranking = std::iter::once(object).chain(self.ranking().filter(|&o| o != object));
        Preference::new(ranking).expect("still a permutation")
    }

    /// Lexicographic rank of this ranking among all `m!` rankings.
    pub fn lex_rank(&self) -> usize {
        let m = self.len();
        let mut used = 0u64;
        let mut rank = 0usize;
        for (k, &o) in self.ranking.iter().enumerate() {
            let smaller_unused = (0..o as usize).filter(|&q| used >> q & 1 == 0).count();
            rank += smaller_unused * factorial(m - 1 - k) as usize;
            used |= 1 << o;
        }
        rank
    }

    /// Inverse of [`Preference::lex_rank`].
    pub fn from_lex_rank(m: usize, mut rank: usize) -> Preference {
        let mut pool: Vec<usize> = (0..m).collect();
        let mut ranking = Vec::with_capacity(m);
        for k in (0..m).rev() {
            let f = factorial(k) as usize;
            let q = rank / f;
            rank %= f;
            ranking.push(pool.remove(q));
        }
        Preference::new(ranking).expect("permutation by construction")
    }

    pub fn display(&self, inst: &Instance) -> String {
        self.ranking()
            .map(|o| inst.object_name(o))
            .collect::<Vec<_>>()
            .join(">")
    }
}

impl fmt::Debug for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.ranking().map(|o| o.to_string()).collect();
        write!(f, "{}", items.join(">"))
    }
}

/// One preference per agent.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile(Vec<Preference>);

impl Profile {
    pub fn new(prefs: Vec<Preference>) -> Result<Self> {
        if let Some(first) = prefs.first() {
            if prefs.iter().any(|p| p.len() != first.len()) {
                return Err(Error::InvalidPreference(
                    "preferences rank different numbers of objects".into(),
                ));
            }
        }
        Ok(Profile(prefs))
    }

    /// Every agent holds the same ranking.
    pub fn uniform(n: usize, pref: Preference) -> Self {
        Profile(vec![pref; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, agent: usize) -> &Preference {
        &self.0[agent]
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.0
    }

    pub fn with(&self, agent: usize, pref: Preference) -> Profile {
        let mut p = self.clone();
        p.0[agent] = pref;
        p
    }

    /// Allocation giving every agent their `k`-th choice (1-based).
    pub fn tau(&self, k: usize) -> Result<Allocation> {
        self.0
            .iter()
            .map(|p| p.tau(k))
            .collect::<Result<Vec<_>>>()
            .map(Allocation::new)
    }

    pub fn tops(&self) -> Allocation {
        Allocation::new(self.0.iter().map(Preference::top))
    }

    pub fn display(&self, inst: &Instance) -> String {
        self.0
            .iter()
            .map(|p| p.display(inst))
            .collect::<Vec<_>>()
            .join(" | ")
    }

    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.len() != inst.num_agents() {
            return Err(Error::InvalidPreference(format!(
                "profile has {} preferences for {} agents",
                self.len(),
                inst.num_agents()
            )));
        }
        if self.0.iter().any(|p| p.len() != inst.num_objects()) {
            return Err(Error::InvalidPreference(format!(
                "every preference must rank all {} objects",
                inst.num_objects()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

pub fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

/// Upper contour set sizes of `x` under `p`, one per agent.
pub fn upper_counts(p: &Profile, x: &Allocation) -> Vec<usize> {
    (0..p.len()).map(|i| p.get(i).rank(x.get(i))).collect()
}

/// Dense index over all `(m!)^n` profiles of an instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileSpace {
    n: usize,
    m: usize,
    perms: Vec<Preference>,
    strides: Vec<usize>,
    len: usize,
}

impl ProfileSpace {
    pub fn new(inst: &Instance) -> Result<Self> {
        Self::with_budget(inst, DEFAULT_PROFILE_BUDGET)
    }

    pub fn with_budget(inst: &Instance, budget: u128) -> Result<Self> {
        let (n, m) = (inst.num_agents(), inst.num_objects());
        let per_agent = (1..=m as u128).product::<u128>();
        let needed = per_agent.checked_pow(n as u32).unwrap_or(u128::MAX);
        if needed > budget {
            return Err(Error::Budget {
                what: "profile sweep (|O|!)^n",
                needed,
                budget,
            });
        }
        let per_agent = per_agent as usize;
        let perms = (0..per_agent)
            .map(|r| Preference::from_lex_rank(m, r))
            .collect();
        let strides = (0..n)
            .map(|i| per_agent.pow((n - 1 - i) as u32))
            .collect();
        Ok(ProfileSpace {
            n,
            m,
            perms,
            strides,
            len: needed as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_agents(&self) -> usize {
        self.n
    }

    pub fn num_objects(&self) -> usize {
        self.m
    }

    /// Number of rankings per agent, `m!`.
    pub fn num_prefs(&self) -> usize {
        self.perms.len()
    }

    pub fn pref(&self, digit: usize) -> &Preference {
        &self.perms[digit]
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.perms
    }

    pub fn digit(&self, index: usize, agent: usize) -> usize {
        index / self.strides[agent] % self.perms.len()
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.n).map(|i| self.digit(index, i)).collect()
    }

    pub fn with_digit(&self, index: usize, agent: usize, digit: usize) -> usize {
        let s = self.strides[agent];
        index - self.digit(index, agent) * s + digit * s
    }

    pub fn index_of_digits(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn profile(&self, index: usize) -> Profile {
        Profile((0..self.n).map(|i| self.perms[self.digit(index, i)].clone()).collect())
    }

    pub fn index(&self, p: &Profile) -> usize {
        p.prefs()
            .iter()
            .zip(&self.strides)
            .map(|(pref, s)| pref.lex_rank() * s)
            .sum()
    }

    /// Digits of the rankings whose top choice is `object`.
    pub fn top_block(&self, object: usize) -> std::ops::Range<usize> {
        let block = self.perms.len() / self.m;
        object * block..(object + 1) * block
    }

    /// Indices of the profiles whose vector of tops is `mu`, increasing.
    pub fn indices_with_tops(&self, mu: &Allocation) -> Vec<usize> {
        let blocks: Vec<_> = (0..self.n).map(|i| self.top_block(mu.get(i))).collect();
        let mut out = vec![0usize];
        for (i, b) in blocks.iter().enumerate() {
            out = out
                .into_iter()
                .flat_map(|base| b.clone().map(move |d| (base, d)))
                .map(|(base, d)| base + d * self.strides[i])
                .collect();
        }
        out
    }
}

/// Profiles whose top choices equal `mu`, in lexicographic order.
///
/// Yields `((|O|-1)!)^n` profiles without materialising the profile space.
pub fn profiles_with_tops(inst: &Instance, mu: &Allocation) -> impl Iterator<Item = Profile> {
    let n = inst.num_agents();
    let m = inst.num_objects();
    let tops: Vec<usize> = mu.iter().collect();
    let rests: Vec<Vec<usize>> = tops
        .iter()
        .map(|&t| (0..m).filter(|&o| o != t).collect())
        .collect();
    let mut state: Option<Vec<Vec<usize>>> = Some(rests);
    std::iter::from_fn(move || {
        let cur = state.as_ref()?.clone();
        let profile = Profile(
            (0..n)
                .map(|i| {
                    Preference::new(std::iter::once(tops[i]).chain(cur[i].iter().copied()))
                        .expect("permutation")
                })
                .collect(),
        );
        // Odometer over agents, last agent fastest.
        let st = state.as_mut().unwrap();
        let mut advanced = false;
        for i in (0..n).rev() {
            if next_permutation(&mut st[i]) {
                advanced = true;
                break;
            }
            st[i].sort_unstable();
        }
        if !advanced {
            state = None;
        }
        Some(profile)
    })
}

/// Rearranges `xs` into the next lexicographic permutation; returns false
/// (leaving `xs` unchanged) when it is already the last one.
pub fn next_permutation<T: Ord>(xs: &mut [T]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}
