//! Exhaustive reference computations for the combinatorial routines.

/// All permutations of `1..=n` in lexicographic order.
pub fn permutations(n: u32) -> Vec<Vec<u32>> {
    let mut p: Vec<u32> = (1..=n).collect();
    let mut out = vec![p.clone()];
    // next lexicographic permutation until the sequence is decreasing
    loop {
        let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return out };
        let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap_or(i);
        p.swap(i - 1, j);
        p[i..].reverse();
        out.push(p.clone());
    }
}

fn increasing_masks(p: &[u32]) -> Vec<u32> {
    let n = p.len();
    (0u32..(1 << n))
        .filter(|&mask| {
            let mut last = 0;
            (0..n).filter(|i| mask >> i & 1 == 1).all(|i| {
                let ok = p[i] > last;
                last = p[i];
                ok
            })
        })
        .collect()
}

/// Longest increasing subsequence by checking every subset.
pub fn brute_lis(p: &[u32]) -> usize {
    increasing_masks(p).iter().map(|m| m.count_ones() as usize).max().unwrap_or(0)
}

/// `(a1, a1 + a2 - a1)` where `a_k` is the largest union of `k` increasing
/// subsequences; the first two RSK row lengths.
pub fn brute_greene2(p: &[u32]) -> (usize, usize) {
    let masks = increasing_masks(p);
    let a1 = masks.iter().map(|m| m.count_ones()).max().unwrap_or(0);
    let mut a2 = 0;
    for &x in &masks {
        for &y in &masks {
            a2 = a2.max((x | y).count_ones());
        }
    }
    (a1 as usize, (a2 - a1) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_counts() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![1]]);
        let mut all = permutations(5);
        all.dedup();
        assert_eq!(all.len(), 120);
    }

    #[test]
    fn small_shapes() {
        assert_eq!(brute_greene2(&[2, 1, 3]), (2, 1));
        assert_eq!(brute_greene2(&[3, 2, 1]), (1, 1));
        assert_eq!(brute_lis(&[1, 2, 3]), 3);
    }
}
