//! Minimum set cover over finite point samples.
//!
//! Sets are membership bitsets over the sample. Sets contained in another are
//! removed first (they never help a minimum cover). If at most
//! [`EXACT_CUTOFF`] sets survive, a branch-and-bound search returns the exact
//! minimum; otherwise the greedy cover is returned and flagged.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use fixedbitset::FixedBitSet;

pub const EXACT_CUTOFF: usize = 24;

/// Above this many distinct sets the quadratic dominance scan is skipped.
const DOMINANCE_LIMIT: usize = 6000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetCoverSolution {
    pub count: usize,
    pub exact: bool,
    /// Indices into the input, ascending.
    pub chosen: Vec<usize>,
}

/// Indices of nonempty sets not contained in another set; among equal sets
/// the lowest index survives. Result is ascending.
pub fn undominated(sets: &[FixedBitSet]) -> Vec<usize> {
    let mut seen = HashSet::with_capacity(sets.len());
    let mut distinct: Vec<usize> = (0..sets.len())
        .filter(|&i| sets[i].count_ones(..) > 0 && seen.insert(&sets[i]))
        .collect();
    if distinct.len() > DOMINANCE_LIMIT {
        return distinct;
    }
    let counts: Vec<usize> = sets.iter().map(|s| s.count_ones(..)).collect();
    distinct.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in distinct {
        let first = sets[i].ones().next().unwrap();
        let dominated = kept
            .iter()
            .any(|&k| sets[k].contains(first) && sets[i].is_subset(&sets[k]));
        if !dominated {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Minimum cover of `0..universe`. `Err(p)` names the first point lying in no set.
///
/// `incumbent`, if given, must be a valid cover; it bounds the search and is
/// returned when greedy does no better.
pub fn solve(
    sets: &[FixedBitSet],
    universe: usize,
    incumbent: Option<&[usize]>,
) -> Result<SetCoverSolution, usize> {
    let mut union = FixedBitSet::with_capacity(universe);
    let mut total = 0;
    for s in sets {
        union.union_with(s);
        total += s.count_ones(..);
    }
    if let Some(p) = (0..universe).find(|&p| !union.contains(p)) {
        return Err(p);
    }
    if universe == 0 {
        return Ok(SetCoverSolution { count: 0, exact: true, chosen: vec![] });
    }
    if total == union.count_ones(..) {
        // pairwise disjoint: every nonempty set is needed
        let chosen: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].count_ones(..) > 0).collect();
        return Ok(SetCoverSolution { count: chosen.len(), exact: true, chosen });
    }

    let kept = undominated(sets);
    let mut best = greedy(sets, &kept, universe);
    if let Some(inc) = incumbent {
        if inc.len() < best.len() {
            best = inc.to_vec();
            best.sort_unstable();
        }
    }
    if kept.len() <= EXACT_CUTOFF {
        let chosen = exact(sets, &kept, universe, best);
        return Ok(SetCoverSolution { count: chosen.len(), exact: true, chosen });
    }
    Ok(SetCoverSolution { count: best.len(), exact: false, chosen: best })
}

/// Largest-uncovered-first greedy with ties to the lowest index.
fn greedy(sets: &[FixedBitSet], candidates: &[usize], universe: usize) -> Vec<usize> {
    let mut uncovered = FixedBitSet::with_capacity(universe);
    uncovered.insert_range(..);
    let mut remaining = universe;
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> =
        candidates.iter().map(|&i| (sets[i].count_ones(..), Reverse(i))).collect();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let Some((stale, Reverse(i))) = heap.pop() else { break };
        let fresh = sets[i].intersection_count(&uncovered);
        if fresh == 0 {
            continue;
        }
        if fresh < stale {
            heap.push((fresh, Reverse(i)));
            continue;
        }
        uncovered.difference_with(&sets[i]);
        remaining -= fresh;
        chosen.push(i);
    }
    chosen.sort_unstable();
    chosen
}

fn exact(sets: &[FixedBitSet], kept: &[usize], universe: usize, incumbent: Vec<usize>) -> Vec<usize> {
    // each point becomes the bitmask of kept sets containing it
    let mut masks: Vec<u32> = (0..universe)
        .map(|p| {
            kept.iter()
                .enumerate()
                .filter(|(_, &k)| sets[k].contains(p))
                .fold(0u32, |m, (b, _)| m | (1 << b))
        })
        .collect();
    masks.sort_unstable_by_key(|m| (m.count_ones(), *m));
    masks.dedup();
    // a point whose mask contains another point's mask is hit whenever that one is
    let mut minimal: Vec<u32> = Vec::new();
    for &m in &masks {
        if !minimal.iter().any(|&q| q & m == q) {
            minimal.push(m);
        }
    }

    let mut best_len = incumbent.len();
    let mut best_mask: Option<u32> = None;
    search(&minimal, 0, 0, &mut best_len, &mut best_mask);
    match best_mask {
        Some(mask) => (0..kept.len()).filter(|b| mask & (1 << b) != 0).map(|b| kept[b]).collect(),
        None => incumbent,
    }
}

fn search(masks: &[u32], chosen: u32, depth: usize, best_len: &mut usize, best: &mut Option<u32>) {
    let mut branch: Option<u32> = None;
    let mut packed = 0u32;
    let mut lower = 0;
    for &m in masks {
        if m & chosen != 0 {
            continue;
        }
        if branch.is_none_or(|b| m.count_ones() < b.count_ones()) {
            branch = Some(m);
        }
        if m & packed == 0 {
            packed |= m;
            lower += 1;
        }
    }
    let Some(branch) = branch else {
        if depth < *best_len {
            *best_len = depth;
            *best = Some(chosen);
        }
        return;
    };
    if depth + lower >= *best_len {
        return;
    }
    let mut bits = branch;
    while bits != 0 {
        let b = bits.trailing_zeros();
        bits &= bits - 1;
        search(masks, chosen | (1 << b), depth + 1, best_len, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(universe: usize, members: &[usize]) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(universe);
        for &m in members {
            s.insert(m);
        }
        s
    }

    fn brute_force(sets: &[FixedBitSet], universe: usize) -> usize {
        let m = sets.len();
        (0u32..1 << m)
            .filter(|sel| {
                let mut u = FixedBitSet::with_capacity(universe);
                for (i, s) in sets.iter().enumerate() {
                    if sel & (1 << i) != 0 {
                        u.union_with(s);
                    }
                }
                u.count_ones(..) == universe
            })
            .map(|sel| sel.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn greedy_is_not_optimal_but_exact_is() {
        // greedy takes the big middle set first and then needs two more
        let u = 6;
        let sets = vec![set(u, &[0, 1, 2]), set(u, &[3, 4, 5]), set(u, &[1, 2, 3, 4])];
        let sol = solve(&sets, u, None).unwrap();
        assert_eq!(sol.count, 2);
        assert!(sol.exact);
        assert_eq!(sol.chosen, vec![0, 1]);
    }

    #[test]
    fn reports_uncovered_point() {
        let sets = vec![set(4, &[0, 1]), set(4, &[3])];
        assert_eq!(solve(&sets, 4, None), Err(2));
    }

    #[test]
    fn dominance_keeps_lowest_of_equals() {
        let sets = vec![set(4, &[0]), set(4, &[1, 2]), set(4, &[0, 1, 2]), set(4, &[0, 1, 2]), set(4, &[])];
        assert_eq!(undominated(&sets), vec![2]);
    }

    #[test]
    fn exact_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let u = rng.gen_range(1..20);
            let m = rng.gen_range(1..12);
            let mut sets: Vec<FixedBitSet> = (0..m)
                .map(|_| {
                    let members: Vec<usize> = (0..u).filter(|_| rng.gen_bool(0.3)).collect();
                    set(u, &members)
                })
                .collect();
            let all: Vec<usize> = (0..u).collect();
            if rng.gen_bool(0.5) {
                sets.push(set(u, &all[..u / 2]));
                sets.push(set(u, &all[u / 2..]));
            } else {
                for p in 0..u {
                    if !sets.iter().any(|s| s.contains(p)) {
                        sets[p % m].insert(p);
                    }
                }
            }
            let sol = solve(&sets, u, None).unwrap();
            assert!(sol.exact);
            assert_eq!(sol.count, brute_force(&sets, u));
        }
    }

    #[test]
    fn incumbent_caps_greedy() {
        let u = 64;
        // many overlapping sets to force the greedy path
        let sets: Vec<FixedBitSet> = (0..40).map(|i| set(u, &[i, (i + 1) % u, (i + 7) % u, 40 + i % 24])).collect();
        let mut covered = sets.clone();
        covered.push(set(u, &(0..u).collect::<Vec<_>>()));
        let sol = solve(&covered, u, Some(&[40])).unwrap();
        assert_eq!(sol.count, 1);
    }
}
