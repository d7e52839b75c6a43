use crate::error::{Error, Result};

/// Max degree at most `ell`, and the vertices of degree exactly `ell`
/// induce a forest. Under this condition `ell` colours suffice.
pub fn fournier_precondition(n: usize, edges: &[(usize, usize)], ell: usize) -> bool {
    let mut deg = vec![0usize; n];
    for &(x, y) in edges {
        if x >= n || y >= n || x == y {
            return false;
        }
        deg[x] += 1;
        deg[y] += 1;
    }
    if deg.iter().any(|&d| d > ell) {
        return false;
    }
    // union-find over edges between maximum-degree vertices
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(x, y) in edges {
        if deg[x] == ell && deg[y] == ell {
            let (a, b) = (root(&mut parent, x), root(&mut parent, y));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
    }
    true
}

/// Proper edge colouring with `ell` colours whose class sizes differ by at
/// most one. Colours are `0..ell`, one per input edge.
pub fn equalized_coloring(n: usize, edges: &[(usize, usize)], ell: usize) -> Result<Vec<usize>> {
    if ell == 0 && !edges.is_empty() {
        return Err(Error::HypothesisViolated("no colours for a non-empty graph".into()));
    }
    let mut sorted: Vec<(usize, usize)> = edges.iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::HypothesisViolated("repeated edge".into()));
    }
    if ell > 64 || !fournier_precondition(n, edges, ell) {
        return Err(Error::HypothesisViolated("max degree above ell or max-degree vertices contain a cycle".into()));
    }
    let mut colour = vec![usize::MAX; edges.len()];
    let mut at = vec![0u64; n];
    let mut nodes = 0usize;
    if !extend(edges, ell, &mut colour, &mut at, &mut nodes) {
        return Err(Error::SearchExhausted("edge colouring search hit its limit".into()));
    }
    balance(n, edges, ell, &mut colour);
    Ok(colour)
}

fn extend(edges: &[(usize, usize)], ell: usize, colour: &mut [usize], at: &mut [u64], nodes: &mut usize) -> bool {
    *nodes += 1;
    if *nodes > 5_000_000 {
        return false;
    }
    let full = if ell == 64 { u64::MAX } else { (1u64 << ell) - 1 };
    // most constrained uncoloured edge
    let mut pick = None;
    let mut fewest = u32::MAX;
    for (i, &(x, y)) in edges.iter().enumerate() {
        if colour[i] != usize::MAX {
            continue;
        }
        let free = (full & !(at[x] | at[y])).count_ones();
        if free < fewest {
            fewest = free;
            pick = Some(i);
        }
    }
    let i = match pick {
        None => return true,
        Some(i) => i,
    };
    let (x, y) = edges[i];
    let mut free = full & !(at[x] | at[y]);
    while free != 0 {
        let c = free.trailing_zeros() as usize;
        free &= free - 1;
        colour[i] = c;
        at[x] |= 1 << c;
        at[y] |= 1 << c;
        if extend(edges, ell, colour, at, nodes) {
            return true;
        }
        at[x] &= !(1 << c);
        at[y] &= !(1 << c);
        colour[i] = usize::MAX;
        if *nodes > 5_000_000 {
            return false;
        }
    }
    false
}

/// Swaps colours along alternating paths until class sizes are within one.
fn balance(n: usize, edges: &[(usize, usize)], ell: usize, colour: &mut [usize]) {
    loop {
        let mut size = vec![0usize; ell];
        for &c in colour.iter() {
            size[c] += 1;
        }
        let big = (0..ell).max_by_key(|&c| size[c]).unwrap();
        let small = (0..ell).min_by_key(|&c| size[c]).unwrap();
        if size[big] <= size[small] + 1 {
            return;
        }
        // incidence of the two colours at each vertex
        let mut inc: Vec<[Option<usize>; 2]> = vec![[None, None]; n];
        for (i, &(x, y)) in edges.iter().enumerate() {
            let slot = if colour[i] == big { 0 } else if colour[i] == small { 1 } else { continue };
            inc[x][slot] = Some(i);
            inc[y][slot] = Some(i);
        }
        let mut swapped = false;
        for start in 0..n {
            if inc[start][0].is_none() || inc[start][1].is_some() {
                continue;
            }
            // walk the alternating path from an end that has only `big`
            let mut path = Vec::new();
            let mut v = start;
            let mut slot = 0;
            while let Some(e) = inc[v][slot] {
                path.push(e);
                let (x, y) = edges[e];
                v = if x == v { y } else { x };
                slot = 1 - slot;
            }
            if path.len() % 2 == 1 {
                for &e in &path {
                    colour[e] = if colour[e] == big { small } else { big };
                }
                swapped = true;
                break;
            }
        }
        assert!(swapped, "an odd alternating path must exist when classes are unbalanced");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_edge_path_with_two_colours() {
        let c = equalized_coloring(4, &[(0, 1), (1, 2), (2, 3)], 2).unwrap();
        let ones = c.iter().filter(|&&x| x == 1).count();
        assert!(ones == 1 || ones == 2);
        assert_ne!(c[0], c[1]);
        assert_ne!(c[1], c[2]);
    }

    #[test]
    fn rejects_cycle_of_max_degree_vertices() {
        // a triangle: every vertex has degree 2 = ell
        assert!(equalized_coloring(3, &[(0, 1), (1, 2), (0, 2)], 2).is_err());
    }
}
