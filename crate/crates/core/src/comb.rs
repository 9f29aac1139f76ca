//! Combinatorial helpers: binomials, colex subset ranking, set partitions.

/// Binomial coefficient as u64; saturates are avoided by desk-scale inputs.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Falling factorial `n (n-1) ... (n-k+1)`.
pub fn falling(n: usize, k: usize) -> u64 {
    let mut acc: u64 = 1;
    for i in 0..k {
        acc *= (n - i) as u64;
    }
    acc
}

/// Colex rank of a sorted k-subset of 0..n. Ranks run over `0..binomial(n,k)`
/// and the dense edge tables are keyed by them.
pub fn colex_rank(set: &[u32]) -> u64 {
    set.iter().enumerate().map(|(i, &v)| binomial(v as usize, i + 1)).sum()
}

/// Visits every sorted k-subset of 0..n in colex order, so the i-th call sees
/// the subset of rank i.
pub fn for_each_subset<F: FnMut(&[u32])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    if k == 0 {
        f(&[]);
        return;
    }
    let mut cur: Vec<u32> = (0..k as u32).collect();
    loop {
        f(&cur);
        // colex successor: bump the lowest coordinate that can move.
        let mut i = 0;
        while i + 1 < k && cur[i] + 1 == cur[i + 1] {
            i += 1;
        }
        cur[i] += 1;
        if cur[i] as usize >= n && i + 1 == k {
            return;
        }
        if cur[i] as usize >= n {
            return;
        }
        for j in 0..i {
            cur[j] = j as u32;
        }
        if *cur.last().unwrap() as usize >= n {
            return;
        }
    }
}

/// All sorted k-subsets of 0..n in colex order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(binomial(n, k) as usize);
    for_each_subset(n, k, |s| out.push(s.to_vec()));
    out
}

/// Set partitions of `0..t` with at most `max_blocks` blocks, as restricted
/// growth strings (labels[i] = block of element i, blocks numbered by first
/// appearance).
pub fn set_partitions(t: usize, max_blocks: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; t];
    fn rec(labels: &mut Vec<usize>, i: usize, used: usize, max_blocks: usize, out: &mut Vec<Vec<usize>>) {
        if i == labels.len() {
            out.push(labels.clone());
            return;
        }
        for b in 0..=used.min(max_blocks - 1) {
            labels[i] = b;
            let nused = used.max(b + 1);
            rec(labels, i + 1, nused, max_blocks, out);
        }
    }
    if t == 0 {
        out.push(Vec::new());
        return out;
    }
    rec(&mut labels, 1, 1, max_blocks, &mut out);
    out
}

/// All permutations of 0..n (Heap's algorithm). Small n only.
pub fn permutations(n: usize) -> Vec<Vec<u32>> {
    let mut items: Vec<u32> = (0..n as u32).collect();
    let mut out = Vec::new();
    fn heap(k: usize, items: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    if n == 0 {
        out.push(Vec::new());
    } else {
        heap(n, &mut items, &mut out);
    }
    out
}

/// Iterates over `0..base^len` mixed tuples; calls f with each tuple.
/// Returns false (and stops) only if the visitor asks to stop.
pub fn for_each_tuple<F: FnMut(&[usize])>(base: usize, len: usize, mut f: F) {
    let mut cur = vec![0usize; len];
    loop {
        f(&cur);
        let mut i = 0;
        loop {
            if i == len {
                return;
            }
            cur[i] += 1;
            if cur[i] < base {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(8, 3), 56);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(falling(5, 3), 60);
    }

    #[test]
    fn colex_ranks_are_dense() {
        for (n, k) in [(4usize, 2usize), (7, 3), (6, 1), (5, 5)] {
            let subs = subsets(n, k);
            assert_eq!(subs.len() as u64, binomial(n, k));
            for (i, s) in subs.iter().enumerate() {
                assert_eq!(colex_rank(s), i as u64, "subset {s:?}");
            }
        }
    }

    #[test]
    fn partitions_of_four() {
        assert_eq!(set_partitions(4, 4).len(), 15);
        assert_eq!(set_partitions(4, 1).len(), 1);
        assert_eq!(set_partitions(4, 2).len(), 8);
        // every label string is a valid restricted growth string
        for p in set_partitions(5, 3) {
            let mut seen = 0usize;
            for &b in &p {
                assert!(b <= seen);
                seen = seen.max(b + 1);
            }
            assert!(seen <= 3);
        }
    }

    #[test]
    fn tuple_walk_counts() {
        let mut n = 0;
        for_each_tuple(3, 4, |_| n += 1);
        assert_eq!(n, 81);
        let mut m = 0;
        for_each_tuple(5, 0, |_| m += 1);
        assert_eq!(m, 1);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(0).len(), 1);
    }
}
