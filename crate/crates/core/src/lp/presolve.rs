//! Domination presolve for 0/1 covering programs.
//!
//! A row whose support contains another row's support is implied by it; a
//! column whose row set is contained in another column's row set can be
//! fixed at zero. Both reductions preserve the optimum, and a solution of
//! the reduced program extends to the full program: dropped columns get
//! `y = 0`, dropped rows get dual weight 0.

/// Kept rows and columns after reduction, with supports restricted to the
/// kept index sets.
#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// Support of each kept row, as original column ids.
    pub row_support: Vec<Vec<usize>>,
}

/// `supports[r]` lists the columns of row `r`; all rows need coverage 1.
pub(crate) fn reduce(supports: &[Vec<usize>], ncols: usize) -> Reduced {
    let nrows = supports.len();
    let mut row_alive = vec![true; nrows];
    let mut col_alive = vec![true; ncols];
    let mut rows: Vec<Vec<usize>> = supports.to_vec();
    loop {
        let mut changed = false;
        // column -> live rows
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); ncols];
        for (r, s) in rows.iter().enumerate() {
            if row_alive[r] {
                for &c in s {
                    col_rows[c].push(r);
                }
            }
        }
        // rows: drop r when some other live row's support is inside it
        let mut count = vec![0usize; nrows];
        let mut touched = Vec::new();
        for r in 0..nrows {
            if !row_alive[r] {
                continue;
            }
            for &c in &rows[r] {
                for &v in &col_rows[c] {
                    if count[v] == 0 {
                        touched.push(v);
                    }
                    count[v] += 1;
                }
            }
            let len_r = rows[r].len();
            let dominated = touched.iter().any(|&v| {
                v != r && count[v] == rows[v].len() && (rows[v].len() < len_r || v < r)
            });
            for &v in &touched {
                count[v] = 0;
            }
            touched.clear();
            if dominated {
                row_alive[r] = false;
                changed = true;
            }
        }
        // rebuild column row sets after row removal
        for cr in &mut col_rows {
            cr.retain(|&r| row_alive[r]);
        }
        // columns: drop c when its row set sits inside another column's
        let mut count = vec![0usize; ncols];
        for c in 0..ncols {
            if !col_alive[c] {
                continue;
            }
            if col_rows[c].is_empty() {
                col_alive[c] = false;
                changed = true;
                continue;
            }
            for &r in &col_rows[c] {
                for &w in &rows[r] {
                    if count[w] == 0 {
                        touched.push(w);
                    }
                    count[w] += 1;
                }
            }
            let len_c = col_rows[c].len();
            let dominated = touched.iter().any(|&w| {
                w != c && col_alive[w] && count[w] == len_c && (col_rows[w].len() > len_c || w < c)
            });
            for &w in &touched {
                count[w] = 0;
            }
            touched.clear();
            if dominated {
                col_alive[c] = false;
                changed = true;
            }
        }
        for (r, s) in rows.iter_mut().enumerate() {
            if row_alive[r] {
                s.retain(|&c| col_alive[c]);
            }
        }
        if !changed {
            break;
        }
    }
    let kept_rows: Vec<usize> = (0..nrows).filter(|&r| row_alive[r]).collect();
    Reduced {
        row_support: kept_rows.iter().map(|&r| rows[r].clone()).collect(),
        rows: kept_rows,
        cols: (0..ncols).filter(|&c| col_alive[c]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    fn supports(g: &crate::graph::TrustGraph) -> Vec<Vec<usize>> {
        (0..g.n()).map(|v| g.closed_unchecked(v)).collect()
    }

    #[test]
    fn star_collapses_to_center() {
        let g = star(6);
        let r = reduce(&supports(&g), g.n());
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.cols, vec![0]);
        assert_eq!(r.row_support, vec![vec![0]]);
    }

    #[test]
    fn vertex_transitive_graph_is_untouched() {
        let g = rook(4);
        let r = reduce(&supports(&g), g.n());
        assert_eq!(r.rows.len(), 16);
        assert_eq!(r.cols.len(), 16);
    }

    #[test]
    fn fig1_keeps_two_rows() {
        let g = fig1();
        let r = reduce(&supports(&g), g.n());
        // N[A] ⊂ N[C]? no: N[A] = {A,B,C} ⊂ N[C] = {A,B,C,D}; N[E] ⊂ N[D]
        assert_eq!(r.rows, vec![0, 4]);
        assert!(r.row_support.iter().all(|s| !s.is_empty()));
    }
}
