//! Complex sparse matrices and a direct solver for complex-symmetric systems.
//!
//! The factorization is `P A Pᵀ = L D Lᵀ` (plain transpose, no conjugation)
//! without pivoting, computed by a supernodal multifrontal method. The fill
//! reducing order `P` comes from nested dissection on the matrix graph
//! using breadth-first level sets as separators, followed by an
//! elimination-tree postorder.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Sums duplicate entries; column indices end up sorted within each row.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, C64)]) -> Result<Self> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Invariant(format!(
                    "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![C64::new(0.0, 0.0); triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut order: Vec<usize> = Vec::new();
        for r in 0..n_rows {
            order.clear();
            order.extend(counts[r]..counts[r + 1]);
            order.sort_by_key(|&k| cols[k]);
            for &k in &order {
                if indices.len() > indptr[r] && *indices.last().unwrap() == cols[k] {
                    *values.last_mut().unwrap() += vals[k];
                } else {
                    indices.push(cols[k]);
                    values.push(vals[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Ok(Self {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let s = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match s.binary_search(&c) {
            Ok(k) => self.values[self.indptr[r] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let amax = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).norm());
            }
        }
        if amax > 0.0 {
            worst / amax
        } else {
            0.0
        }
    }

    /// Adjacency lists of the symmetric pattern, without the diagonal.
    fn graph(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_rows];
        for r in 0..self.n_rows {
            for (c, _) in self.row(r) {
                if c != r {
                    adj[r].push(c);
                    adj[c].push(r);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Collects triplets and compresses them into CSR in bounded batches.
#[derive(Debug, Clone)]
pub struct TripletAccumulator {
    n: usize,
    batch: Vec<(usize, usize, C64)>,
    merged: Option<CsrMatrix>,
    limit: usize,
}

impl TripletAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            batch: Vec::new(),
            merged: None,
            limit: 1 << 22,
        }
    }

    pub fn push(&mut self, r: usize, c: usize, v: C64) {
        self.batch.push((r, c, v));
        if self.batch.len() >= self.limit {
            self.compress();
        }
    }

    fn compress(&mut self) {
        let mut all = std::mem::take(&mut self.batch);
        if let Some(m) = self.merged.take() {
            for r in 0..m.n_rows {
                all.extend(m.row(r).map(|(c, v)| (r, c, v)));
            }
        }
        let m = CsrMatrix::from_triplets(self.n, self.n, &all).expect("indices checked on push");
        // Grow the threshold with the merged size so merging stays linear overall.
        self.limit = self.limit.max(m.nnz());
        self.merged = Some(m);
    }

    pub fn finish(mut self) -> CsrMatrix {
        self.compress();
        self.merged.expect("compressed")
    }
}

const LEAF_SIZE: usize = 64;

/// Nested-dissection order: `order[k]` is the original index eliminated `k`-th.
pub fn nested_dissection(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut part = vec![0usize; n];
    let mut next_part = 1usize;
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    // Work items: either a set to dissect or a finished block to emit.
    enum Job {
        Split(Vec<usize>, usize),
        Emit(Vec<usize>),
    }
    let mut stack = vec![Job::Split((0..n).collect(), 0)];
    while let Some(job) = stack.pop() {
        let (nodes, pid) = match job {
            Job::Emit(v) => {
                order.extend(v);
                continue;
            }
            Job::Split(v, p) => (v, p),
        };
        if nodes.len() <= LEAF_SIZE {
            order.extend(nodes);
            continue;
        }
        // Connected components within the part.
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let comp_id = next_part;
        next_part += 1;
        for &s in &nodes {
            if part[s] != pid {
                continue;
            }
            let mut comp = vec![s];
            part[s] = comp_id;
            let mut h = 0;
            while h < comp.len() {
                let u = comp[h];
                h += 1;
                for &w in &adj[u] {
                    if part[w] == pid {
                        part[w] = comp_id;
                        comp.push(w);
                    }
                }
            }
            comps.push(comp);
        }
        if comps.len() > 1 {
            for c in comps.into_iter().rev() {
                let id = next_part;
                next_part += 1;
                for &u in &c {
                    part[u] = id;
                }
                stack.push(Job::Split(c, id));
            }
            continue;
        }
        let comp = comps.pop().unwrap();
        let cid = comp_id;
        // Pseudo-peripheral start by repeated BFS.
        let bfs = |start: usize, level: &mut Vec<usize>, part: &Vec<usize>| -> Vec<Vec<usize>> {
            let mut levels: Vec<Vec<usize>> = vec![vec![start]];
            level[start] = 0;
            let mut seen = vec![start];
            loop {
                let mut nxt = Vec::new();
                for &u in levels.last().unwrap() {
                    for &w in &adj[u] {
                        if part[w] == cid && level[w] == usize::MAX {
                            level[w] = levels.len();
                            nxt.push(w);
                            seen.push(w);
                        }
                    }
                }
                if nxt.is_empty() {
                    break;
                }
                levels.push(nxt);
            }
            for u in seen {
                level[u] = usize::MAX;
            }
            levels
        };
        let mut start = comp[0];
        let mut levels = bfs(start, &mut level, &part);
        for _ in 0..4 {
            let last = levels.last().unwrap();
            let cand = *last.iter().min_by_key(|&&u| adj[u].len()).unwrap();
            let l2 = bfs(cand, &mut level, &part);
            if l2.len() > levels.len() {
                start = cand;
                levels = l2;
            } else {
                break;
            }
        }
        let _ = start;
        if levels.len() < 3 {
            order.extend(comp);
            continue;
        }
        // Separator: smallest level in the middle band of the cumulative count.
        let total = comp.len();
        let mut cum = 0;
        let mut best = None;
        for (k, l) in levels.iter().enumerate() {
            let before = cum;
            cum += l.len();
            if k == 0 || k + 1 == levels.len() {
                continue;
            }
            let frac = (before as f64 + 0.5 * l.len() as f64) / total as f64;
            if (0.3..=0.7).contains(&frac) {
                let score = l.len() as f64 * (1.0 + 2.0 * (frac - 0.5).abs());
                if best.is_none_or(|(_, s)| score < s) {
                    best = Some((k, score));
                }
            }
        }
        let k = match best {
            Some((k, _)) => k,
            None => {
                let mut c = 0;
                let mut kk = 1;
                for (i, l) in levels.iter().enumerate() {
                    c += l.len();
                    if 2 * c >= total {
                        kk = i.clamp(1, levels.len() - 2);
                        break;
                    }
                }
                kk
            }
        };
        let a_id = next_part;
        let b_id = next_part + 1;
        next_part += 2;
        let mut a_nodes = Vec::new();
        let mut b_nodes = Vec::new();
        for (i, l) in levels.iter().enumerate() {
            if i < k {
                a_nodes.extend(l.iter().copied());
            } else if i > k {
                b_nodes.extend(l.iter().copied());
            }
        }
        for &u in &a_nodes {
            part[u] = a_id;
        }
        for &u in &b_nodes {
            part[u] = b_id;
        }
        // Separator vertices without neighbours in B move to A.
        let mut sep = Vec::new();
        for &u in &levels[k] {
            if adj[u].iter().any(|&w| part[w] == b_id) {
                sep.push(u);
            } else {
                part[u] = a_id;
                a_nodes.push(u);
            }
        }
        for &u in &sep {
            part[u] = usize::MAX;
        }
        stack.push(Job::Emit(sep));
        stack.push(Job::Split(b_nodes, b_id));
        stack.push(Job::Split(a_nodes, a_id));
    }
    order
}

/// Fill-reducing ordering strategy.
#[derive(Debug, Clone, Copy)]
pub enum Ordering<'a> {
    /// Nested dissection with breadth-first level-set separators.
    Graph,
    /// Nested dissection by axis-aligned cuts through the given unknown positions.
    Geometric(&'a [[f64; 3]]),
}

/// Nested dissection by coordinate cuts.
///
/// Each set is split at a coordinate `c` along its longest extent; the
/// separator is every node at or below `c` with a neighbour above it.
/// A few cut positions around the median are tried and the one with the
/// smallest balance-weighted separator wins.
pub fn geometric_dissection(adj: &[Vec<usize>], coords: &[[f64; 3]]) -> Vec<usize> {
    let n = adj.len();
    assert_eq!(coords.len(), n);
    let mut part = vec![0usize; n];
    let mut next_part = 1usize;
    let mut reach = vec![f64::NEG_INFINITY; n];
    let mut order = Vec::with_capacity(n);
    enum Job {
        Split(Vec<usize>, usize),
        Emit(Vec<usize>),
    }
    let mut stack = vec![Job::Split((0..n).collect(), 0)];
    while let Some(job) = stack.pop() {
        let (nodes, pid) = match job {
            Job::Emit(v) => {
                order.extend(v);
                continue;
            }
            Job::Split(v, p) => (v, p),
        };
        if nodes.len() <= LEAF_SIZE {
            order.extend(nodes);
            continue;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &u in &nodes {
            for a in 0..3 {
                lo[a] = lo[a].min(coords[u][a]);
                hi[a] = hi[a].max(coords[u][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        let x = |u: usize| coords[u][axis];
        for &u in &nodes {
            reach[u] = adj[u]
                .iter()
                .filter(|&&w| part[w] == pid)
                .map(|&w| x(w))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let mut values: Vec<f64> = nodes.iter().map(|&u| x(u)).collect();
        values.sort_by(f64::total_cmp);
        let median = values[values.len() / 2];
        values.dedup();
        let mid = values.partition_point(|&v| v < median);
        let total = nodes.len() as f64;
        let mut best: Option<(f64, f64)> = None;
        for &c in &values[mid.saturating_sub(3)..(mid + 4).min(values.len())] {
            let (mut below, mut above, mut sep) = (0usize, 0usize, 0usize);
            for &u in &nodes {
                if x(u) > c {
                    above += 1;
                } else if reach[u] > c {
                    sep += 1;
                } else {
                    below += 1;
                }
            }
            if below == 0 || above == 0 {
                continue;
            }
            let imbalance = (below as f64 - above as f64).abs() / total;
            let score = sep as f64 * (1.0 + 4.0 * imbalance);
            if best.is_none_or(|(_, b)| score < b) {
                best = Some((c, score));
            }
        }
        let Some((c, _)) = best else {
            order.extend(nodes);
            continue;
        };
        let (a_id, b_id) = (next_part, next_part + 1);
        next_part += 2;
        let (mut a_nodes, mut b_nodes, mut sep) = (Vec::new(), Vec::new(), Vec::new());
        for &u in &nodes {
            if x(u) > c {
                part[u] = b_id;
                b_nodes.push(u);
            } else if reach[u] > c {
                part[u] = usize::MAX;
                sep.push(u);
            } else {
                part[u] = a_id;
                a_nodes.push(u);
            }
        }
        stack.push(Job::Emit(sep));
        stack.push(Job::Split(b_nodes, b_id));
        stack.push(Job::Split(a_nodes, a_id));
    }
    order
}

#[derive(Debug, Clone)]
struct Supernode {
    first: usize,
    width: usize,
    /// Row indices (permuted), the supernode's own columns first.
    rows: Vec<usize>,
    /// Column-major `rows.len() x width` panel of `L`.
    l: Vec<C64>,
    d: Vec<C64>,
    parent: Option<usize>,
}

/// `P A Pᵀ = L D Lᵀ` of a complex-symmetric matrix.
#[derive(Debug, Clone)]
pub struct LdltFactor {
    n: usize,
    /// `perm[k]` = original index of permuted index `k`.
    perm: Vec<usize>,
    supernodes: Vec<Supernode>,
}

/// Statistics of a factorization and solve.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct SolveStats {
    pub n: usize,
    pub nnz_a: usize,
    pub nnz_l: usize,
    pub supernodes: usize,
    pub max_front: usize,
    pub refinement_steps: usize,
    pub relative_residual: f64,
}

impl LdltFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.supernodes
            .iter()
            .map(|s| {
                let m = s.rows.len();
                (0..s.width).map(|k| m - k).sum::<usize>()
            })
            .sum()
    }

    pub fn max_front(&self) -> usize {
        self.supernodes.iter().map(|s| s.rows.len()).max().unwrap_or(0)
    }

    pub fn n_supernodes(&self) -> usize {
        self.supernodes.len()
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut y: Vec<C64> = self.perm.iter().map(|&i| b[i]).collect();
        for s in &self.supernodes {
            let m = s.rows.len();
            for k in 0..s.width {
                let yk = y[s.rows[k]];
                if yk == C64::new(0.0, 0.0) {
                    continue;
                }
                let col = &s.l[k * m..(k + 1) * m];
                for i in k + 1..m {
                    y[s.rows[i]] -= col[i] * yk;
                }
            }
        }
        for s in &self.supernodes {
            for k in 0..s.width {
                y[s.first + k] /= s.d[k];
            }
        }
        for s in self.supernodes.iter().rev() {
            let m = s.rows.len();
            for k in (0..s.width).rev() {
                let col = &s.l[k * m..(k + 1) * m];
                let mut acc = C64::new(0.0, 0.0);
                for i in k + 1..m {
                    acc += col[i] * y[s.rows[i]];
                }
                y[s.rows[k]] -= acc;
            }
        }
        let mut x = vec![C64::new(0.0, 0.0); self.n];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

/// Factorize a square complex-symmetric matrix.
pub fn factorize(a: &CsrMatrix) -> Result<LdltFactor> {
    factorize_with(a, Ordering::Graph)
}

/// Factorize with a chosen fill-reducing ordering.
pub fn factorize_with(a: &CsrMatrix, ordering: Ordering) -> Result<LdltFactor> {
    let n = a.n_rows();
    if n != a.n_cols() {
        return Err(Error::Solver(format!("matrix is {}x{}, not square", n, a.n_cols())));
    }
    if n == 0 {
        return Ok(LdltFactor {
            n,
            perm: Vec::new(),
            supernodes: Vec::new(),
        });
    }
    let adj = a.graph();
    let nd = match ordering {
        Ordering::Graph => nested_dissection(&adj),
        Ordering::Geometric(coords) => {
            if coords.len() != n {
                return Err(Error::Solver(format!(
                    "{} positions given for {n} unknowns",
                    coords.len()
                )));
            }
            geometric_dissection(&adj, coords)
        }
    };
    let mut inv = vec![0usize; n];
    for (k, &i) in nd.iter().enumerate() {
        inv[i] = k;
    }
    // Elimination tree of the permuted pattern.
    let nbrs_lower = |k: usize| adj[nd[k]].iter().map(|&j| inv[j]).filter(move |&j| j < k);
    let mut parent = vec![usize::MAX; n];
    let mut ancestor = vec![usize::MAX; n];
    for i in 0..n {
        for j in nbrs_lower(i) {
            let mut r = j;
            while ancestor[r] != usize::MAX && ancestor[r] != i {
                let nx = ancestor[r];
                ancestor[r] = i;
                r = nx;
            }
            if ancestor[r] == usize::MAX {
                ancestor[r] = i;
                parent[r] = i;
            }
        }
    }
    // Postorder.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for j in 0..n {
        if parent[j] == usize::MAX {
            roots.push(j);
        } else {
            children[parent[j]].push(j);
        }
    }
    let mut post = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for &r in &roots {
        stack.push((r, 0));
        while let Some((v, ci)) = stack.pop() {
            if ci < children[v].len() {
                stack.push((v, ci + 1));
                stack.push((children[v][ci], 0));
            } else {
                post.push(v);
            }
        }
    }
    // Final permutation: position k holds original index perm[k].
    let perm: Vec<usize> = post.iter().map(|&k| nd[k]).collect();
    let mut pinv = vec![0usize; n];
    for (k, &i) in perm.iter().enumerate() {
        pinv[i] = k;
    }
    let mut eparent = vec![usize::MAX; n];
    for (k, &old_k) in post.iter().enumerate() {
        if parent[old_k] != usize::MAX {
            eparent[k] = pinv[nd[parent[old_k]]];
        }
    }
    let mut nchild = vec![0usize; n];
    for k in 0..n {
        if eparent[k] != usize::MAX {
            nchild[eparent[k]] += 1;
        }
    }
    // Symbolic: column structures, kept only for supernode leaders.
    let mut col_struct: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 0..n {
        if eparent[k] != usize::MAX {
            kids[eparent[k]].push(k);
        }
    }
    let mut mark = vec![usize::MAX; n];
    let mut counts = vec![0usize; n];
    let mut leader = vec![0usize; n];
    let mut sn_first: Vec<usize> = Vec::new();
    for k in 0..n {
        let mut s = vec![k];
        mark[k] = k;
        for (c, _) in a.row(perm[k]) {
            let j = pinv[c];
            if j > k && mark[j] != k {
                mark[j] = k;
                s.push(j);
            }
        }
        for &c in &kids[k] {
            let cs = col_struct[c].take().unwrap_or_default();
            for &j in &cs {
                if j > k && mark[j] != k {
                    mark[j] = k;
                    s.push(j);
                }
            }
            // Leaders' structures are rebuilt below from the stored copy.
            if leader[c] == c {
                col_struct[c] = Some(cs);
            }
        }
        s.sort_unstable();
        counts[k] = s.len();
        let joins = k > 0 && eparent[k - 1] == k && nchild[k] == 1 && counts[k - 1] == counts[k] + 1;
        if joins {
            leader[k] = leader[k - 1];
            // The leader keeps its structure; this column's is a suffix.
            col_struct[k] = Some(s);
            if let Some(ls) = &col_struct[leader[k]] {
                let _ = ls;
            }
        } else {
            leader[k] = k;
            sn_first.push(k);
            col_struct[k] = Some(s);
        }
    }
    // Drop non-leader structures that are still held.
    let sn_of = |k: usize| leader[k];
    let mut sn_index = vec![usize::MAX; n];
    for (i, &f) in sn_first.iter().enumerate() {
        sn_index[f] = i;
    }
    let mut supernodes: Vec<Supernode> = Vec::with_capacity(sn_first.len());
    for (i, &f) in sn_first.iter().enumerate() {
        let last = if i + 1 < sn_first.len() { sn_first[i + 1] } else { n };
        let width = last - f;
        let rows = col_struct[f].take().expect("leader structure");
        let p = eparent[last - 1];
        supernodes.push(Supernode {
            first: f,
            width,
            rows,
            l: Vec::new(),
            d: Vec::new(),
            parent: if p == usize::MAX { None } else { Some(sn_index[sn_of(p)]) },
        });
    }
    drop(col_struct);

    // Numeric multifrontal factorization.
    let amax = (0..n)
        .flat_map(|r| a.row(r).map(|(_, v)| v.norm()))
        .fold(0.0, f64::max);
    let mut updates: Vec<Option<(Vec<usize>, Vec<C64>)>> = vec![None; supernodes.len()];
    let mut sn_children: Vec<Vec<usize>> = vec![Vec::new(); supernodes.len()];
    for (i, s) in supernodes.iter().enumerate() {
        if let Some(p) = s.parent {
            sn_children[p].push(i);
        }
    }
    let mut pos = vec![usize::MAX; n];
    for si in 0..supernodes.len() {
        let (first, width) = (supernodes[si].first, supernodes[si].width);
        let rows = supernodes[si].rows.clone();
        let m = rows.len();
        for (t, &r) in rows.iter().enumerate() {
            pos[r] = t;
        }
        let mut f = vec![C64::new(0.0, 0.0); m * m];
        for k in first..first + width {
            let lk = pos[k];
            for (c, v) in a.row(perm[k]) {
                let j = pinv[c];
                if j >= k {
                    f[lk * m + pos[j]] += v;
                }
            }
        }
        for &c in &sn_children[si] {
            if let Some((idx, u)) = updates[c].take() {
                let mu = idx.len();
                let map: Vec<usize> = idx.iter().map(|&r| pos[r]).collect();
                for jj in 0..mu {
                    let dst_col = map[jj] * m;
                    let src = &u[jj * mu..(jj + 1) * mu];
                    for ii in jj..mu {
                        f[dst_col + map[ii]] += src[ii];
                    }
                }
            }
        }
        // Partial factorization of the first `width` columns; the trailing
        // block becomes the Schur complement passed to the parent.
        let mut d = vec![C64::new(0.0, 0.0); width];
        let mu = m - width;
        let trailing = mu > 0 && supernodes[si].parent.is_some();
        if let Err(k) = partial_ldlt(&mut f, m, width, &mut d, trailing, amax) {
            return Err(Error::Solver(format!(
                "zero pivot at row {} (permuted position {})",
                perm[first + k],
                first + k
            )));
        }
        if trailing {
            let mut u = vec![C64::new(0.0, 0.0); mu * mu];
            for jj in 0..mu {
                let src = &f[(width + jj) * m + width..(width + jj + 1) * m];
                u[jj * mu + jj..(jj + 1) * mu].copy_from_slice(&src[jj..]);
            }
            updates[si] = Some((rows[width..].to_vec(), u));
        }
        f.truncate(m * width);
        f.shrink_to_fit();
        for &r in &rows {
            pos[r] = usize::MAX;
        }
        supernodes[si].l = f;
        supernodes[si].d = d;
    }
    Ok(LdltFactor { n, perm, supernodes })
}

const PANEL: usize = 48;
const STRIP: usize = 192;

/// `C[.., ..] -= A · B` on raw column-major storage.
///
/// # Safety
/// The strided ranges must lie inside their buffers and `c` must not alias `a` or `b`.
#[allow(clippy::too_many_arguments)]
unsafe fn gemm_sub(
    m: usize,
    k: usize,
    n: usize,
    a: *const C64,
    rsa: isize,
    csa: isize,
    b: *const C64,
    rsb: isize,
    csb: isize,
    c: *mut C64,
    rsc: isize,
    csc: isize,
) {
    use matrixmultiply::{zgemm, CGemmOption};
    // Complex64 is `repr(C)` with two f64 fields, matching `[f64; 2]`.
    zgemm(
        CGemmOption::Standard,
        CGemmOption::Standard,
        m,
        k,
        n,
        [-1.0, 0.0],
        a as *const [f64; 2],
        rsa,
        csa,
        b as *const [f64; 2],
        rsb,
        csb,
        [1.0, 0.0],
        c as *mut [f64; 2],
        rsc,
        csc,
    );
}

/// Blocked right-looking `LDLᵀ` of the first `width` columns of a dense
/// column-major `m x m` front (lower triangle). With `trailing` the
/// remaining block receives the Schur complement update.
/// On a zero pivot returns its column.
fn partial_ldlt(
    f: &mut [C64],
    m: usize,
    width: usize,
    d: &mut [C64],
    trailing: bool,
    amax: f64,
) -> std::result::Result<(), usize> {
    let zero = C64::new(0.0, 0.0);
    let end = if trailing { m } else { width };
    let mut w = Vec::new();
    let mut k0 = 0;
    while k0 < width {
        let k1 = (k0 + PANEL).min(width);
        for k in k0..k1 {
            let dk = f[k * m + k];
            if !(dk.norm() > amax * 1e-300) || !dk.re.is_finite() || !dk.im.is_finite() {
                return Err(k);
            }
            d[k] = dk;
            let inv_d = C64::new(1.0, 0.0) / dk;
            for i in k + 1..m {
                f[k * m + i] *= inv_d;
            }
            let (head, tail) = f.split_at_mut((k + 1) * m);
            let lk = &head[k * m..];
            for j in k + 1..k1 {
                let t = lk[j] * dk;
                if t == zero {
                    continue;
                }
                let col = &mut tail[(j - k - 1) * m..(j - k) * m];
                for i in j..m {
                    col[i] -= lk[i] * t;
                }
            }
        }
        if k1 < end {
            // W = L[k1.., k0..k1] D, column-major with leading dimension m - k1.
            let ld = m - k1;
            let kb = k1 - k0;
            w.clear();
            w.resize(ld * kb, zero);
            for k in k0..k1 {
                let src = &f[k * m + k1..(k + 1) * m];
                let dst = &mut w[(k - k0) * ld..(k - k0 + 1) * ld];
                for (x, y) in dst.iter_mut().zip(src) {
                    *x = y * d[k];
                }
            }
            let mut j0 = k1;
            while j0 < end {
                let j1 = (j0 + STRIP).min(end);
                // Only rows at or below the strip's first column are needed.
                // SAFETY: A reads columns k0..k1 and C writes columns j0..j1 >= k1
                // of the same buffer, so the two never overlap; all indices are
                // below m * m, and B reads `w`, which has ld * kb entries.
                unsafe {
                    let base = f.as_mut_ptr();
                    gemm_sub(
                        m - j0,
                        kb,
                        j1 - j0,
                        base.add(k0 * m + j0) as *const C64,
                        1,
                        m as isize,
                        w.as_ptr().add(j0 - k1),
                        ld as isize,
                        1,
                        base.add(j0 * m + j0),
                        1,
                        m as isize,
                    );
                }
                j0 = j1;
            }
        }
        k0 = k1;
    }
    Ok(())
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Factorize and solve with a few steps of iterative refinement.
pub fn solve_direct(a: &CsrMatrix, b: &[C64]) -> Result<(Vec<C64>, SolveStats)> {
    solve_direct_with(a, b, Ordering::Graph)
}

/// [`solve_direct`] with a chosen ordering.
pub fn solve_direct_with(a: &CsrMatrix, b: &[C64], ordering: Ordering) -> Result<(Vec<C64>, SolveStats)> {
    if b.len() != a.n_rows() {
        return Err(Error::Solver(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.n_rows()
        )));
    }
    let fac = factorize_with(a, ordering)?;
    let mut x = fac.solve(b);
    let bn = norm(b);
    let mut stats = SolveStats {
        n: a.n_rows(),
        nnz_a: a.nnz(),
        nnz_l: fac.nnz_l(),
        supernodes: fac.n_supernodes(),
        max_front: fac.max_front(),
        ..Default::default()
    };
    if bn == 0.0 {
        return Ok((x, stats));
    }
    let mut rel = f64::INFINITY;
    for step in 0..=4 {
        let ax = a.mul_vec(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        rel = norm(&r) / bn;
        stats.refinement_steps = step;
        if !rel.is_finite() {
            break;
        }
        if rel <= 1e-14 || step == 4 {
            break;
        }
        let dx = fac.solve(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
    }
    stats.relative_residual = rel;
    if !(rel <= 1e-10) {
        return Err(Error::Solver(format!(
            "relative residual {rel:e} after refinement; the factorization is unstable"
        )));
    }
    Ok((x, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let a = CsrMatrix::identity(5);
        let b: Vec<C64> = (0..5).map(|i| C64::new(i as f64, -1.0)).collect();
        let (x, _) = solve_direct(&a, &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn singular_reports_pivot() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, C64::new(1.0, 0.0))]).unwrap();
        let e = factorize(&a).unwrap_err();
        assert!(e.to_string().contains("pivot at row 1"), "{e}");
    }

    fn grid_matrix(nx: usize, ny: usize, shift: C64) -> CsrMatrix {
        let id = |i: usize, j: usize| i + nx * j;
        let mut t = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                t.push((id(i, j), id(i, j), C64::new(4.0, 0.0) + shift));
                if i + 1 < nx {
                    t.push((id(i, j), id(i + 1, j), C64::new(-1.0, 0.1)));
                    t.push((id(i + 1, j), id(i, j), C64::new(-1.0, 0.1)));
                }
                if j + 1 < ny {
                    t.push((id(i, j), id(i, j + 1), C64::new(-1.0, -0.2)));
                    t.push((id(i, j + 1), id(i, j), C64::new(-1.0, -0.2)));
                }
            }
        }
        CsrMatrix::from_triplets(nx * ny, nx * ny, &t).unwrap()
    }

    #[test]
    fn grid_factor_is_accurate() {
        let a = grid_matrix(37, 29, C64::new(-0.5, 0.3));
        assert!(a.symmetry_defect() == 0.0);
        let b: Vec<C64> = (0..a.n_rows()).map(|i| C64::new((i % 7) as f64, (i % 3) as f64 - 1.0)).collect();
        let fac = factorize(&a).unwrap();
        let x = fac.solve(&b);
        let r: Vec<C64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&r) / norm(&b) < 1e-12);
        assert!(fac.n_supernodes() < a.n_rows());
    }

    #[test]
    fn duplicates_are_summed() {
        let one = C64::new(1.0, 0.0);
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, one), (0, 1, one), (1, 1, one)]).unwrap();
        assert_eq!(a.get(0, 1), C64::new(2.0, 0.0));
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn nested_dissection_is_a_permutation() {
        let a = grid_matrix(50, 41, C64::new(0.0, 0.0));
        let mut o = nested_dissection(&a.graph());
        o.sort_unstable();
        assert_eq!(o, (0..a.n_rows()).collect::<Vec<_>>());
    }
}
