//! Fill-reducing ordering for unknowns that live on a structured lattice.
//!
//! Q1 couplings only reach the eight lattice neighbours, so every full grid
//! line is a vertex separator. The recursion picks, near the middle of the
//! longer bounding-box side, the line carrying the fewest unknowns. On
//! channel networks that lands on thin crossings and keeps the separators
//! tiny.

const LEAF: usize = 64;

/// Returns `perm` with `perm[new] = old`.
pub fn nested_dissection(coords: &[(u32, u32)]) -> Vec<usize> {
    let mut out = Vec::with_capacity(coords.len());
    let mut idx: Vec<usize> = (0..coords.len()).collect();
    dissect(&mut idx, coords, &mut out);
    debug_assert_eq!(out.len(), coords.len());
    out
}

fn dissect(idx: &mut [usize], coords: &[(u32, u32)], out: &mut Vec<usize>) {
    if idx.len() <= LEAF {
        out.extend_from_slice(idx);
        return;
    }
    let (mut r0, mut r1, mut c0, mut c1) = (u32::MAX, 0, u32::MAX, 0);
    for &k in idx.iter() {
        let (r, c) = coords[k];
        r0 = r0.min(r);
        r1 = r1.max(r);
        c0 = c0.min(c);
        c1 = c1.max(c);
    }
    let by_row = r1 - r0 >= c1 - c0;
    let (lo, hi) = if by_row { (r0, r1) } else { (c0, c1) };
    if hi - lo < 2 {
        out.extend_from_slice(idx);
        return;
    }
    let key = |k: usize| if by_row { coords[k].0 } else { coords[k].1 };

    let mut hist = vec![0usize; (hi - lo + 1) as usize];
    for &k in idx.iter() {
        hist[(key(k) - lo) as usize] += 1;
    }
    let ext = hi - lo;
    let first = (lo + ext / 4).max(lo + 1);
    let last = (hi - ext / 4).min(hi - 1).max(first);
    let mid2 = lo + hi; // twice the midpoint
    let mut split = first;
    let mut best = (usize::MAX, u32::MAX);
    for s in first..=last {
        let score = (hist[(s - lo) as usize], (2 * s).abs_diff(mid2));
        if score < best {
            best = score;
            split = s;
        }
    }

    // stable three-way partition: [< split | > split | == split]
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sep = Vec::new();
    for &k in idx.iter() {
        match key(k).cmp(&split) {
            std::cmp::Ordering::Less => left.push(k),
            std::cmp::Ordering::Greater => right.push(k),
            std::cmp::Ordering::Equal => sep.push(k),
        }
    }
    let (nl, nr) = (left.len(), right.len());
    idx[..nl].copy_from_slice(&left);
    idx[nl..nl + nr].copy_from_slice(&right);
    idx[nl + nr..].copy_from_slice(&sep);
    let (l, rest) = idx.split_at_mut(nl);
    let (r, s) = rest.split_at_mut(nr);
    dissect(l, coords, out);
    dissect(r, coords, out);
    out.extend_from_slice(s);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn is_a_permutation() {
        let coords: Vec<(u32, u32)> = (0..40u32).flat_map(|r| (0..25u32).map(move |c| (r, c))).collect();
        let mut perm = nested_dissection(&coords);
        perm.sort_unstable();
        assert_eq!(perm, (0..coords.len()).collect::<Vec<_>>());
    }

    #[test]
    fn separator_goes_last() {
        let coords: Vec<(u32, u32)> = (0..20u32).flat_map(|r| (0..9u32).map(move |c| (r, c))).collect();
        let perm = nested_dissection(&coords);
        let tail: Vec<_> = perm[perm.len() - 9..].iter().map(|&k| coords[k].0).collect();
        assert!(tail.iter().all(|&r| r == tail[0]));
    }
}
