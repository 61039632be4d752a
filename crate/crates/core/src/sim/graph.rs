use nalgebra::DMatrix;

use crate::error::{check_dims, Result};
use crate::sparselqr::{BlockPartition, FeedbackGain};

/// Agent adjacency of a gain: entry (i, j) is set when agent i's control
/// rows use any patterned nonzero from agent j's state columns. The
/// diagonal holds self-loops.
pub fn information_graph(gain: &FeedbackGain, partition: BlockPartition) -> Result<DMatrix<bool>> {
    let (m, n) = gain.f.shape();
    let BlockPartition { control_block: cb, state_block: sb } = partition;
    check_dims(cb > 0 && sb > 0 && m % cb == 0 && n % sb == 0 && m / cb == n / sb, || {
        format!("{m}x{n} gain does not split into {cb}x{sb} agent blocks")
    })?;
    let agents = m / cb;
    Ok(DMatrix::from_fn(agents, agents, |i, j| {
        (0..cb).any(|r| (0..sb).any(|c| {
            let (row, col) = (i * cb + r, j * sb + c);
            gain.pattern[(row, col)] && gain.f[(row, col)].abs() > 0.0
        }))
    }))
}

/// Directed edges between distinct agents.
pub fn edge_count(adj: &DMatrix<bool>) -> usize {
    let mut count = 0;
    for i in 0..adj.nrows() {
        for j in 0..adj.ncols() {
            if i != j && adj[(i, j)] {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    const PART: BlockPartition = BlockPartition { control_block: 1, state_block: 2 };

    #[test]
    fn full_gain_is_complete() {
        let g = FeedbackGain::full(DMatrix::from_element(3, 6, 1.0));
        let adj = information_graph(&g, PART).unwrap();
        assert!(adj.iter().all(|&e| e));
        assert_eq!(edge_count(&adj), 6);
    }

    #[test]
    fn block_diagonal_has_no_edges() {
        let f = DMatrix::from_fn(3, 6, |i, j| if j / 2 == i { 1.0 } else { 0.0 });
        let adj = information_graph(&FeedbackGain::from_nonzeros(f), PART).unwrap();
        assert_eq!(edge_count(&adj), 0);
        assert!((0..3).all(|i| adj[(i, i)]));
    }

    #[test]
    fn single_entry_single_edge() {
        // agent 0's control reads agent 1's state: edge 1 -> 0
        let mut f = DMatrix::zeros(3, 6);
        f[(0, 3)] = 0.5;
        let adj = information_graph(&FeedbackGain::from_nonzeros(f), PART).unwrap();
        assert_eq!(edge_count(&adj), 1);
        assert!(adj[(0, 1)]);
        assert!(information_graph(&FeedbackGain::full(DMatrix::zeros(3, 5)), PART).is_err());
    }
}
