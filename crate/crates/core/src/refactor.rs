//! Refactor detection: greedy removal of crossing edges from a sentence
//! match graph, plus an exhaustive minimum-removal oracle for small graphs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::aligner::Edge;
use crate::error::{Error, Result};

/// Largest graph accepted by [`min_removal_bruteforce`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Two edges cross when their endpoints are in strictly opposite order.
/// Edges sharing an endpoint never cross.
pub fn crossing_of(a: Edge, b: Edge) -> bool {
    let d_old = a.old as i64 - b.old as i64;
    let d_new = a.new as i64 - b.new as i64;
    d_old * d_new < 0
}

/// Every edge with at least one crossing, mapped to the edges it crosses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrossingMap {
    map: BTreeMap<Edge, BTreeSet<Edge>>,
}

impl CrossingMap {
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Number of edges that cross something.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn crossings(&self, e: Edge) -> Option<&BTreeSet<Edge>> {
        self.map.get(&e)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, &BTreeSet<Edge>)> {
        self.map.iter().map(|(e, c)| (*e, c))
    }

    /// Number of unordered crossing pairs.
    pub fn pair_count(&self) -> usize {
        self.map.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Drops `e` and every reference to it; edges left without crossings are
    /// removed from the map.
    pub fn remove_edge(&mut self, e: Edge) {
        let Some(partners) = self.map.remove(&e) else {
            return;
        };
        for p in partners {
            if let Some(set) = self.map.get_mut(&p) {
                set.remove(&e);
                if set.is_empty() {
                    self.map.remove(&p);
                }
            }
        }
    }
}

/// Exact pairwise crossing map, `O(E^2)`.
pub fn find_crossings(edges: &[Edge]) -> CrossingMap {
    let mut map: BTreeMap<Edge, BTreeSet<Edge>> = BTreeMap::new();
    for (i, &a) in edges.iter().enumerate() {
        for &b in &edges[i + 1..] {
            if crossing_of(a, b) {
                map.entry(a).or_default().insert(b);
                map.entry(b).or_default().insert(a);
            }
        }
    }
    CrossingMap { map }
}

/// Number of crossing pairs in `O(E log E)`: sort by `(old, new)` and count
/// strict inversions of `new` with a Fenwick tree.
pub fn count_crossings(edges: &[Edge]) -> usize {
    let mut sorted: Vec<Edge> = edges.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut ranks: Vec<usize> = sorted.iter().map(|e| e.new).collect();
    ranks.sort_unstable();
    ranks.dedup();
    let mut tree = vec![0usize; ranks.len() + 1];
    let mut crossings = 0usize;
    for (seen, e) in sorted.iter().enumerate() {
        let r = ranks.binary_search(&e.new).expect("rank present") + 1;
        // seen edges with new <= e.new
        let mut le = 0;
        let mut k = r;
        while k > 0 {
            le += tree[k];
            k &= k - 1;
        }
        crossings += seen - le;
        let mut k = r;
        while k < tree.len() {
            tree[k] += 1;
            k += k & k.wrapping_neg();
        }
    }
    crossings
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `Up` when the sentence moved toward the top of the article. An edge that
/// keeps its index is reported as `Down`.
pub fn refactor_direction(e: Edge) -> Direction {
    if e.new < e.old {
        Direction::Up
    } else {
        Direction::Down
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refactor {
    pub edge: Edge,
    pub direction: Direction,
    /// 1-based position in the removal sequence.
    pub rank: usize,
}

/// Edges removed by the greedy crossing elimination, in removal order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefactorSet {
    pub removed: Vec<Refactor>,
}

impl RefactorSet {
    pub fn len(&self) -> usize {
        self.removed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.removed.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.removed.iter().map(|r| r.edge)
    }

    pub fn direction_of_old(&self, old: usize) -> Option<Direction> {
        self.removed.iter().find(|r| r.edge.old == old).map(|r| r.direction)
    }
}

fn distance(e: Edge) -> usize {
    e.old.abs_diff(e.new)
}

/// Picks the next edge to remove: most crossings, then longest move, then
/// upward movers, then the first in `(old, new)` order.
fn select_candidate(crossings: &CrossingMap) -> Option<Edge> {
    let most = crossings.iter().map(|(_, c)| c.len()).max()?;
    let mut candidates: Vec<Edge> = crossings
        .iter()
        .filter(|(_, c)| c.len() == most)
        .map(|(e, _)| e)
        .collect();
    if candidates.len() > 1 {
        let far = candidates.iter().map(|&e| distance(e)).max().unwrap_or(0);
        candidates.retain(|&e| distance(e) == far);
        if candidates.len() > 1 {
            let up: Vec<Edge> = candidates.iter().copied().filter(|e| e.new < e.old).collect();
            if !up.is_empty() {
                candidates = up;
            }
        }
    }
    candidates.first().copied()
}

/// Greedy crossing elimination over a match graph's edges.
pub fn identify_refactors(edges: &[Edge]) -> RefactorSet {
    let mut crossings = find_crossings(edges);
    let mut removed = Vec::new();
    while let Some(edge) = select_candidate(&crossings) {
        crossings.remove_edge(edge);
        removed.push(Refactor {
            edge,
            direction: refactor_direction(edge),
            rank: removed.len() + 1,
        });
    }
    RefactorSet { removed }
}

/// Smallest edge subset whose removal leaves no crossings; among equally
/// small subsets the lexicographically first in `(old, new)` order.
pub fn min_removal_bruteforce(edges: &[Edge]) -> Result<Vec<Edge>> {
    let mut canonical: Vec<Edge> = edges.to_vec();
    canonical.sort_unstable();
    canonical.dedup();
    if canonical.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::GraphTooLarge {
            edges: canonical.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let n = canonical.len();
    // crossing adjacency as bitmasks
    let mut cross = vec![0u32; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && crossing_of(canonical[i], canonical[j]) {
                cross[i] |= 1 << j;
            }
        }
    }
    for k in 0..=n {
        for subset in (0..n).combinations(k) {
            let removed: u32 = subset.iter().fold(0, |m, &i| m | (1 << i));
            let clean = (0..n).all(|i| removed & (1 << i) != 0 || cross[i] & !removed == 0);
            if clean {
                return Ok(subset.into_iter().map(|i| canonical[i]).collect());
            }
        }
    }
    unreachable!("removing every edge always leaves no crossings")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(old: usize, new: usize) -> Edge {
        Edge::new(old, new)
    }

    #[test]
    fn crossing_examples() {
        assert!(crossing_of(e(1, 2), e(2, 1)));
        assert!(!crossing_of(e(1, 1), e(2, 2)));
        assert!(!crossing_of(e(1, 2), e(2, 2)));
        assert!(!crossing_of(e(1, 2), e(1, 3)));
        assert!(!crossing_of(e(1, 2), e(1, 2)));
    }

    #[test]
    fn find_crossings_examples() {
        assert!(find_crossings(&[]).is_empty());
        let c = find_crossings(&[e(1, 3), e(2, 1), e(3, 2)]);
        assert_eq!(c.crossings(e(1, 3)).unwrap(), &BTreeSet::from([e(2, 1), e(3, 2)]));
        assert_eq!(c.crossings(e(2, 1)).unwrap(), &BTreeSet::from([e(1, 3)]));
        assert_eq!(c.crossings(e(3, 2)).unwrap(), &BTreeSet::from([e(1, 3)]));
        assert_eq!(c.pair_count(), 2);
        let ident: Vec<Edge> = (1..=50).map(|i| e(i, i)).collect();
        assert!(find_crossings(&ident).is_empty());
        assert_eq!(count_crossings(&ident), 0);
    }

    #[test]
    fn identify_examples() {
        assert!(identify_refactors(&[e(1, 1), e(2, 2)]).is_empty());
        let r = identify_refactors(&[e(1, 2), e(2, 1)]);
        assert_eq!(r.edges().collect::<Vec<_>>(), vec![e(2, 1)]);
        assert_eq!(r.removed[0].direction, Direction::Up);
        assert_eq!(r.removed[0].rank, 1);
        let r = identify_refactors(&[e(1, 3), e(2, 1), e(3, 2)]);
        assert_eq!(r.edges().collect::<Vec<_>>(), vec![e(1, 3)]);
    }

    #[test]
    fn far_moved_sentence_is_the_only_refactor() {
        // sentence 1 moves to the end of a ten-sentence article
        let mut edges: Vec<Edge> = (2..=10).map(|i| e(i, i - 1)).collect();
        edges.push(e(1, 10));
        let r = identify_refactors(&edges);
        assert_eq!(r.edges().collect::<Vec<_>>(), vec![e(1, 10)]);
        assert_eq!(r.removed[0].direction, Direction::Down);
    }

    #[test]
    fn direction_examples() {
        assert_eq!(refactor_direction(e(5, 2)), Direction::Up);
        assert_eq!(refactor_direction(e(2, 5)), Direction::Down);
        assert_eq!(refactor_direction(e(3, 3)), Direction::Down);
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(min_removal_bruteforce(&[e(1, 2), e(2, 1)]).unwrap().len(), 1);
        assert!(min_removal_bruteforce(&[e(1, 1), e(2, 2)]).unwrap().is_empty());
        let r = min_removal_bruteforce(&[e(1, 3), e(2, 2), e(3, 1)]).unwrap();
        assert_eq!(r, vec![e(1, 3), e(2, 2)]);
        let big: Vec<Edge> = (1..=21).map(|i| e(i, i)).collect();
        assert!(matches!(min_removal_bruteforce(&big), Err(Error::GraphTooLarge { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn graph() -> impl Strategy<Value = Vec<Edge>> {
            prop::collection::btree_set((1usize..10, 1usize..10), 0..14)
                .prop_map(|s| s.into_iter().map(|(o, n)| Edge::new(o, n)).collect())
        }

        proptest! {
            #[test]
            fn fast_count_matches_pairwise(edges in graph()) {
                prop_assert_eq!(count_crossings(&edges), find_crossings(&edges).pair_count());
            }

            #[test]
            fn crossing_map_is_symmetric(edges in graph()) {
                let c = find_crossings(&edges);
                for (a, partners) in c.iter() {
                    prop_assert!(!partners.contains(&a));
                    for &b in partners {
                        prop_assert!(c.crossings(b).unwrap().contains(&a));
                        prop_assert!(a.old != b.old && a.new != b.new);
                    }
                }
            }

            #[test]
            fn incremental_removal_equals_recompute(edges in graph(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..6)) {
                let mut live = edges.clone();
                let mut c = find_crossings(&live);
                for p in picks {
                    if live.is_empty() { break; }
                    let victim = live.remove(p.index(live.len()));
                    c.remove_edge(victim);
                    prop_assert_eq!(&c, &find_crossings(&live));
                }
            }

            #[test]
            fn greedy_leaves_no_crossings(edges in graph()) {
                let original = find_crossings(&edges);
                let r = identify_refactors(&edges);
                let removed: BTreeSet<Edge> = r.edges().collect();
                let rest: Vec<Edge> = edges.iter().copied().filter(|e| !removed.contains(e)).collect();
                prop_assert!(find_crossings(&rest).is_empty());
                for e in &removed {
                    prop_assert!(original.crossings(*e).is_some());
                }
            }
        }
    }
}
