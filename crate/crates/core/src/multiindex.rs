//! Multi-indices over `{-1, 0, 1, ..., m}` and the hierarchical sets built from them.
//!
//! A component `0` stands for a time integration, `j >= 1` for integration
//! against the `j`-th Brownian component and `-1` for integration against the
//! Poisson random measure. The empty index is written `v`.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Component value marking a jump integral.
pub const JUMP: i32 = -1;
/// Component value marking a time integral.
pub const TIME: i32 = 0;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    components: Vec<i32>,
    m: u32,
}

impl MultiIndex {
    /// The length-zero index `v`.
    pub fn empty(m: u32) -> Self {
        MultiIndex {
            components: Vec::new(),
            m,
        }
    }

    pub fn new(components: Vec<i32>, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("noise dimension m must be positive"));
        }
        if let Some(bad) = components.iter().find(|&&j| j < JUMP || j > m as i32) {
            return Err(Error::invalid(format!(
                "component {bad} outside {{-1, 0, ..., {m}}}"
            )));
        }
        Ok(MultiIndex { components, m })
    }

    pub fn components(&self) -> &[i32] {
        &self.components
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// l(α)
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// n(α), the number of time components.
    pub fn count_zeros(&self) -> usize {
        self.components.iter().filter(|&&j| j == TIME).count()
    }

    /// s(α), the number of jump components.
    pub fn count_jumps(&self) -> usize {
        self.components.iter().filter(|&&j| j == JUMP).count()
    }

    /// `-α`: the index with its first component removed.
    pub fn drop_first(&self) -> Result<Self> {
        match self.components.split_first() {
            Some((_, rest)) => Ok(MultiIndex {
                components: rest.to_vec(),
                m: self.m,
            }),
            None => Err(Error::invalid("drop_first on the empty multi-index")),
        }
    }

    /// `α-`: the index with its last component removed.
    pub fn drop_last(&self) -> Result<Self> {
        match self.components.split_last() {
            Some((_, rest)) => Ok(MultiIndex {
                components: rest.to_vec(),
                m: self.m,
            }),
            None => Err(Error::invalid("drop_last on the empty multi-index")),
        }
    }

    fn prepend(&self, j: i32) -> Self {
        let mut components = Vec::with_capacity(self.len() + 1);
        components.push(j);
        components.extend_from_slice(&self.components);
        MultiIndex {
            components,
            m: self.m,
        }
    }
}

/// Canonical order: by length, then lexicographic with `-1 < 0 < 1 < ... < m`.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.components.cmp(&other.components))
            .then_with(|| self.m.cmp(&other.m))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("v");
        }
        for (i, j) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{j}")?;
        }
        Ok(())
    }
}

/// A set of multi-indices sharing the same `m`, iterated in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    elements: BTreeSet<MultiIndex>,
    m: u32,
}

impl IndexSet {
    pub fn new(m: u32) -> Self {
        IndexSet {
            elements: BTreeSet::new(),
            m,
        }
    }

    pub fn from_indices<I: IntoIterator<Item = MultiIndex>>(m: u32, indices: I) -> Result<Self> {
        let mut set = IndexSet::new(m);
        for alpha in indices {
            set.insert(alpha)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, alpha: MultiIndex) -> Result<bool> {
        if alpha.m != self.m {
            return Err(Error::invalid(format!(
                "index {alpha} has m = {}, set has m = {}",
                alpha.m, self.m
            )));
        }
        Ok(self.elements.insert(alpha))
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        self.elements.contains(alpha)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.elements.iter()
    }

    pub fn max_len(&self) -> usize {
        self.elements.iter().map(MultiIndex::len).max().unwrap_or(0)
    }

    /// Non-empty and closed under `drop_first`. Boundedness is automatic for a
    /// finite set.
    pub fn is_hierarchical(&self) -> bool {
        !self.is_empty()
            && self.elements.iter().filter(|a| !a.is_empty()).all(|a| {
                a.drop_first()
                    .map(|rest| self.contains(&rest))
                    .unwrap_or(false)
            })
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::collections::btree_set::Iter<'a, MultiIndex>;

    fn into_iter(self) -> Self::IntoIter {
        self.elements.iter()
    }
}

/// A non-negative half-integer stored as its double, so `0.5` is `HalfInteger(1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInteger(u32);

impl HalfInteger {
    pub fn from_doubled(doubled: u32) -> Self {
        HalfInteger(doubled)
    }

    pub fn doubled(self) -> u32 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl FromStr for HalfInteger {
    type Err = Error;

    /// Accepts `1`, `1.0`, `0.5`, `1.50` and the like; anything that is not an
    /// exact multiple of one half is rejected.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("'{s}' is not a non-negative half-integer"));
        let s = s.trim();
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f.trim_end_matches('0')),
            None => (s, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        let whole: u32 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let half = match frac {
            "" => 0,
            "5" => 1,
            _ => return Err(bad()),
        };
        whole
            .checked_mul(2)
            .and_then(|w| w.checked_add(half))
            .map(HalfInteger)
            .ok_or_else(bad)
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 2, if self.0 % 2 == 1 { 5 } else { 0 })
    }
}

/// Every multi-index over `{-1, ..., m}` of length at most `max_len`, in canonical order.
fn all_indices(m: u32, max_len: usize) -> Vec<MultiIndex> {
    let alphabet: Vec<i32> = (JUMP..=m as i32).collect();
    let mut out = vec![MultiIndex::empty(m)];
    let mut layer = vec![MultiIndex::empty(m)];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for alpha in &layer {
            for &j in &alphabet {
                let mut components = alpha.components.clone();
                components.push(j);
                next.push(MultiIndex { components, m });
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// 𝒜_γ = {α : l(α) + n(α) ≤ 2γ, or l(α) = n(α) = γ + 1/2}.
pub fn strong_hierarchical_set(gamma: HalfInteger, m: u32) -> Result<IndexSet> {
    let two_gamma = gamma.doubled();
    if two_gamma == 0 {
        return Err(Error::invalid("strong order must be at least 0.5"));
    }
    if m == 0 {
        return Err(Error::invalid("noise dimension m must be positive"));
    }
    // l = n = γ + 1/2 needs 2γ + 1 even, i.e. 2γ odd.
    let all_time_len = (two_gamma % 2 == 1).then_some((two_gamma as usize + 1) / 2);
    let selected = all_indices(m, two_gamma as usize).into_iter().filter(|a| {
        let (l, n) = (a.len(), a.count_zeros());
        l + n <= two_gamma as usize || (Some(l) == all_time_len && n == l)
    });
    IndexSet::from_indices(m, selected)
}

/// Γ_η = {α : l(α) ≤ η}.
pub fn weak_hierarchical_set(eta: u32, m: u32) -> Result<IndexSet> {
    if eta == 0 {
        return Err(Error::invalid("weak order must be at least 1"));
    }
    if m == 0 {
        return Err(Error::invalid("noise dimension m must be positive"));
    }
    IndexSet::from_indices(m, all_indices(m, eta as usize))
}

/// ℬ(𝒜) = {α ∉ 𝒜 : -α ∈ 𝒜}.
pub fn remainder_set(set: &IndexSet) -> Result<IndexSet> {
    if !set.is_hierarchical() {
        return Err(Error::invalid(
            "remainder set requires a hierarchical set (non-empty, closed under drop_first)",
        ));
    }
    let m = set.m();
    let mut out = IndexSet::new(m);
    for beta in set {
        for j in JUMP..=m as i32 {
            let alpha = beta.prepend(j);
            if !set.contains(&alpha) {
                out.insert(alpha)?;
            }
        }
    }
    Ok(out)
}
