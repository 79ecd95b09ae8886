/// Maximal cliques of an undirected graph given as an adjacency matrix, by
/// Bron–Kerbosch with Tomita pivoting. Each clique is sorted; the list is
/// sorted lexicographically.
pub fn maximal_cliques(adjacent: &[Vec<bool>], vertices: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut r = Vec::new();
    bron_kerbosch(adjacent, &mut r, vertices.to_vec(), Vec::new(), &mut out);
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort();
    out
}

fn bron_kerbosch(
    adjacent: &[Vec<bool>],
    r: &mut Vec<usize>,
    p: Vec<usize>,
    x: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r.clone());
        }
        return;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&v| adjacent[u][v]).count())
        .expect("p is non-empty");
    let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adjacent[pivot][v]).collect();
    let mut p = p;
    let mut x = x;
    for v in candidates {
        let np = p.iter().copied().filter(|&u| adjacent[v][u]).collect();
        let nx = x.iter().copied().filter(|&u| adjacent[v][u]).collect();
        r.push(v);
        bron_kerbosch(adjacent, r, np, nx, out);
        r.pop();
        p.retain(|&u| u != v);
        x.push(v);
    }
}
