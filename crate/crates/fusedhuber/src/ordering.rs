//! Column ordering by agglomerative clustering, and column scaling.
//!
//! The fused penalty couples adjacent coefficients, so features without a
//! natural order are first arranged so that correlated columns sit next to
//! each other: average-linkage clustering under the distance `1 - |corr|`,
//! read off as the dendrogram leaf order.

use fusedhuber_core::Matrix;

use crate::Error;

/// Strict upper triangle of a symmetric matrix with zero diagonal.
struct Condensed {
    n: usize,
    data: Vec<f64>,
}

impl Condensed {
    fn new(n: usize) -> Self {
        Self { n, data: vec![0.0; n * (n - 1) / 2] }
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * (2 * self.n - a - 1) / 2 + (b - a - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.data[k] = v;
    }
}

fn standardized_columns(x: &Matrix) -> Result<Vec<Vec<f64>>, Error> {
    let n = x.nrows() as f64;
    (0..x.ncols())
        .map(|j| {
            let mut c = x.column(j);
            let mean = c.iter().sum::<f64>() / n;
            c.iter_mut().for_each(|v| *v -= mean);
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 1e-12 * (1.0 + mean.abs()) * n.sqrt()) {
                return Err(Error::ZeroVariance { column: j });
            }
            c.iter_mut().for_each(|v| *v /= norm);
            Ok(c)
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Merge {
    left: usize,
    right: usize,
    min_leaf: usize,
}

/// Dendrogram leaf order of the columns of `x`.
///
/// Uses the nearest-neighbour chain algorithm with Lance-Williams updates for
/// average linkage. Equal distances resolve toward the lower column index, and
/// at every merge the subtree containing the lower column index goes first.
pub fn hierarchical_order(x: &Matrix) -> Result<Vec<usize>, Error> {
    let p = x.ncols();
    if p < 2 {
        return Err(Error::InvalidArgument("ordering needs at least two columns".into()));
    }
    if x.nrows() < 2 {
        return Err(Error::InvalidArgument("ordering needs at least two rows".into()));
    }
    let cols = standardized_columns(x)?;
    let mut dist = Condensed::new(p);
    for i in 0..p {
        for j in i + 1..p {
            let corr: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            dist.set(i, j, (1.0 - corr.abs()).max(0.0));
        }
    }

    // Tree nodes: 0..p are leaves, p.. are merges.
    let mut merges: Vec<Merge> = Vec::with_capacity(p - 1);
    let min_leaf = |node: usize, merges: &[Merge]| if node < p { node } else { merges[node - p].min_leaf };
    let mut node_of: Vec<usize> = (0..p).collect();
    let mut size = vec![1usize; p];
    let mut active = vec![true; p];
    let mut chain: Vec<usize> = Vec::with_capacity(p);

    for _ in 0..p - 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster"));
        }
        let (a, b) = loop {
            let a = *chain.last().expect("nonempty chain");
            let prev = chain.len().checked_sub(2).map(|i| chain[i]);
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for k in (0..p).filter(|&k| active[k] && k != a) {
                let d = dist.get(a, k);
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            if let Some(q) = prev {
                if dist.get(a, q) <= best_d {
                    break (a, q);
                }
            }
            chain.push(best);
        };
        chain.truncate(chain.len() - 2);

        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (sa, sb) = (size[lo] as f64, size[hi] as f64);
        for k in (0..p).filter(|&k| active[k] && k != lo && k != hi) {
            let d = (sa * dist.get(k, lo) + sb * dist.get(k, hi)) / (sa + sb);
            dist.set(k, lo, d);
        }
        let (na, nb) = (node_of[lo], node_of[hi]);
        let (ma, mb) = (min_leaf(na, &merges), min_leaf(nb, &merges));
        let (left, right) = if ma <= mb { (na, nb) } else { (nb, na) };
        merges.push(Merge { left, right, min_leaf: ma.min(mb) });
        node_of[lo] = p + merges.len() - 1;
        size[lo] += size[hi];
        active[hi] = false;
    }

    let root = node_of[active.iter().position(|&a| a).expect("root cluster")];
    let mut order = Vec::with_capacity(p);
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node < p {
            order.push(node);
        } else {
            let m = merges[node - p];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
    Ok(order)
}

/// Scales each column to unit root-mean-square, `(1/n) ||x_j||^2 = 1`, so the
/// Gram matrix has a unit diagonal. Columns are not centred: the model has no
/// intercept. Returns the scaled matrix and the per-column divisors.
pub fn normalize_columns(x: &Matrix) -> Result<(Matrix, Vec<f64>), Error> {
    let n = x.nrows() as f64;
    let scales: Vec<f64> = (0..x.ncols())
        .map(|j| {
            let rms = (x.column(j).iter().map(|v| v * v).sum::<f64>() / n).sqrt();
            if rms > 0.0 {
                Ok(rms)
            } else {
                Err(Error::ZeroVariance { column: j })
            }
        })
        .collect::<Result<_, _>>()?;
    let mut out = x.clone();
    for i in 0..x.nrows() {
        for (j, s) in scales.iter().enumerate() {
            out.set(i, j, x.get(i, j) / s);
        }
    }
    Ok((out, scales))
}
