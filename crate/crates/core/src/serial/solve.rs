use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::{SerialError, SignificanceVector};
use crate::graphs::SignificanceGraph;
use crate::netlist::NodeKind;
use crate::scalar::Scalar;

/// Upper bound on flip-flops + inputs accepted by [`direct_solve`].
pub const MAX_DIRECT_UNKNOWNS: usize = 20_000;

/// Largest absolute entry of `[S_F; S_I] - C∘DF · [S_O; S_F]`.
pub fn residual<T: Scalar>(graph: &SignificanceGraph<T>, s: &SignificanceVector<T>) -> T {
    let n = graph.node_count();
    let mut inflow = vec![T::zero(); n];
    for head in 0..n {
        for a in graph.arrows(head) {
            inflow[a.tail] = inflow[a.tail].clone() + a.confidence.clone() * a.df.clone() * s.values[head].clone();
        }
    }
    let mut worst = T::zero();
    for i in graph.flip_flop_range().chain(graph.input_range()) {
        let r = (s.values[i].clone() - inflow[i].clone()).abs();
        if r > worst {
            worst = r;
        }
    }
    worst
}

/// Exact fixed point of the propagation.
///
/// Solves `(I - C∘DF_FF) S_F = C∘DF_OF S_O` with a sparse LU factorisation
/// (no pivoting: the matrix is column diagonally dominant because df leaving
/// a node sums to at most 1), then forms `S_I` from the block products.
pub fn direct_solve<T: Scalar>(graph: &SignificanceGraph<T>, s_out_init: &[T]) -> Result<SignificanceVector<T>, SerialError> {
    if s_out_init.len() != graph.output_count() {
        return Err(SerialError::OutputCount { expected: graph.output_count(), got: s_out_init.len() });
    }
    let unknowns = graph.flip_flop_count() + graph.input_count();
    if unknowns > MAX_DIRECT_UNKNOWNS {
        return Err(SerialError::TooLarge(unknowns));
    }
    let ff0 = graph.output_count();
    let nf = graph.flip_flop_count();

    // rows indexed by tail flip-flop
    let mut rows: Vec<BTreeMap<usize, T>> = (0..nf).map(|i| BTreeMap::from([(i, T::one())])).collect();
    let mut rhs = vec![T::zero(); nf];
    for head in 0..graph.node_count() {
        for a in graph.arrows(head) {
            if graph.kind(a.tail) != NodeKind::FlipFlop {
                continue;
            }
            let t = a.tail - ff0;
            let w = a.confidence.clone() * a.df.clone();
            match graph.kind(head) {
                NodeKind::Output => rhs[t] = rhs[t].clone() + w * s_out_init[head].clone(),
                _ => {
                    let e = rows[t].entry(head - ff0).or_insert_with(T::zero);
                    *e = e.clone() - w;
                }
            }
        }
    }
    let sf = SparseLu::factor(rows)?.solve(rhs);

    let mut values = vec![T::zero(); graph.node_count()];
    values[..ff0].clone_from_slice(s_out_init);
    values[ff0..ff0 + nf].clone_from_slice(&sf);
    for head in 0..ff0 + nf {
        for a in graph.arrows(head) {
            if graph.kind(a.tail) == NodeKind::Input {
                let add = a.confidence.clone() * a.df.clone() * values[head].clone();
                values[a.tail] = values[a.tail].clone() + add;
            }
        }
    }
    Ok(SignificanceVector::new(values, ff0, nf))
}

/// Row-wise ("up-looking") sparse LU without pivoting.
struct SparseLu<T> {
    lower: Vec<Vec<(usize, T)>>,
    /// Row `i` starts with the diagonal entry.
    upper: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> SparseLu<T> {
    fn factor(rows: Vec<BTreeMap<usize, T>>) -> Result<Self, SerialError> {
        let n = rows.len();
        let mut lower: Vec<Vec<(usize, T)>> = Vec::with_capacity(n);
        let mut upper: Vec<Vec<(usize, T)>> = Vec::with_capacity(n);
        let mut work = vec![T::zero(); n];
        let mut marked = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut pending: BinaryHeap<Reverse<usize>> = BinaryHeap::new();

        for (i, row) in rows.into_iter().enumerate() {
            for (c, v) in row {
                work[c] = v;
                marked[c] = true;
                touched.push(c);
                if c < i {
                    pending.push(Reverse(c));
                }
            }
            let mut l_row = Vec::new();
            while let Some(Reverse(j)) = pending.pop() {
                let wj = std::mem::replace(&mut work[j], T::zero());
                if wj.is_zero() {
                    continue;
                }
                let f = wj / upper[j][0].1.clone();
                for (c, u) in &upper[j][1..] {
                    if !marked[*c] {
                        marked[*c] = true;
                        touched.push(*c);
                        if *c < i {
                            pending.push(Reverse(*c));
                        }
                    }
                    work[*c] = work[*c].clone() - f.clone() * u.clone();
                }
                l_row.push((j, f));
            }
            let mut cols: Vec<usize> = touched.iter().copied().filter(|&c| c >= i).collect();
            cols.sort_unstable();
            let diag = work[i].clone();
            if diag.is_negligible() {
                return Err(SerialError::SingularSystem);
            }
            let mut u_row = vec![(i, diag)];
            for c in cols {
                if c != i && !work[c].is_zero() {
                    u_row.push((c, work[c].clone()));
                }
            }
            for &c in &touched {
                work[c] = T::zero();
                marked[c] = false;
            }
            touched.clear();
            lower.push(l_row);
            upper.push(u_row);
        }
        Ok(SparseLu { lower, upper })
    }

    fn solve(&self, mut b: Vec<T>) -> Vec<T> {
        let n = b.len();
        for i in 0..n {
            let mut acc = b[i].clone();
            for (j, l) in &self.lower[i] {
                acc = acc - l.clone() * b[*j].clone();
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = b[i].clone();
            for (c, u) in &self.upper[i][1..] {
                acc = acc - u.clone() * b[*c].clone();
            }
            b[i] = acc / self.upper[i][0].1.clone();
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: Vec<Vec<f64>>, b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.into_iter().zip(b).map(|(mut r, v)| { r.push(v); r }).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs())).unwrap();
            m.swap(k, p);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..=n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
            x[i] = (m[i][n] - s) / m[i][i];
        }
        x
    }

    #[test]
    fn sparse_lu_matches_dense_elimination() {
        // column diagonally dominant with fill-in
        let a = vec![
            vec![1.0, -0.5, 0.0, -0.25],
            vec![-0.25, 1.0, -0.5, 0.0],
            vec![0.0, -0.25, 1.0, -0.5],
            vec![-0.5, 0.0, -0.25, 1.0],
        ];
        let b = vec![1.0, 0.0, 2.0, 0.5];
        let rows = a
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(c, v)| (c, *v)).collect())
            .collect();
        let x = SparseLu::factor(rows).unwrap().solve(b.clone());
        let y = dense_solve(a, b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_ring_is_detected() {
        let rows = vec![BTreeMap::from([(0, 1.0), (1, -1.0)]), BTreeMap::from([(0, -1.0), (1, 1.0)])];
        assert!(matches!(SparseLu::factor(rows), Err(SerialError::SingularSystem)));
    }
}
