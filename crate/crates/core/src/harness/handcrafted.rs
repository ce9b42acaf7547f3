use crate::generators::{square_horizontal_edge, square_vertical_edge, GeneratorError};
use crate::sequence::ContractionSequence;

/// The fixed row-by-row baseline sequence for an L x L lattice.
///
/// Rows are absorbed downward one at a time: pass r contracts the vertical
/// edges between rows r and r+1 left to right, so after all passes each
/// column is a single tensor and the lattice is a path of L supervertices
/// joined by bundles of L parallel horizontal edges. The closing sweep then
/// walks the gaps left to right, contracting each gap's bundle top to
/// bottom; the first edge of a bundle merges the two supervertices and the
/// remaining L-1 are traced out as self-loops.
///
/// This is deliberately naive: mid-lattice merges drag every horizontal
/// edge of the absorbed rows along, so step costs reach chi^(2L + 2).
pub fn handcrafted_row_sequence(side: u32) -> Result<ContractionSequence, GeneratorError> {
    if side < 1 {
        return Err(GeneratorError::EmptyLattice);
    }
    let l = side;
    let mut order = Vec::with_capacity((2 * l * (l.saturating_sub(1))) as usize);
    for r in 0..l.saturating_sub(1) {
        for c in 0..l {
            order.push(square_vertical_edge(l, r, c));
        }
    }
    for c in 0..l.saturating_sub(1) {
        for r in 0..l {
            order.push(square_horizontal_edge(l, r, c));
        }
    }
    Ok(ContractionSequence::new(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::EvalBudget;
    use crate::cost::Cost;
    use crate::generators::{square_lattice, SquareSpec};
    use crate::sequence::{sequence_cost, validate_sequence};

    #[test]
    fn sequence_is_valid_for_small_lattices() {
        for side in 1..=6u32 {
            let net = square_lattice(&SquareSpec { side, chi: 2 }).unwrap();
            let seq = handcrafted_row_sequence(side).unwrap();
            assert_eq!(seq.len(), net.edge_count());
            validate_sequence(&net, &seq).unwrap();
        }
    }

    #[test]
    fn two_by_two_cost_is_exact() {
        // Edges: h(0,0)=e0, h(1,0)=e1, v(0,0)=e2, v(0,1)=e3; order e2 e3 e0 e1.
        // Steps: chi^3 (corner merge), chi^3, chi^2 (bundle merge), chi^1
        // (trace), so 8 + 8 + 4 + 2 = 22 at chi = 2.
        let net = square_lattice(&SquareSpec { side: 2, chi: 2 }).unwrap();
        let seq = handcrafted_row_sequence(2).unwrap();
        let mut budget = EvalBudget::new(net.edge_count());
        let total = sequence_cost(&net, &seq, &mut budget).unwrap();
        assert_eq!(total, Cost::from(22u64));
    }

    #[test]
    fn ten_by_ten_chi_ten_lands_above_ten_to_the_nineteen() {
        let net = square_lattice(&SquareSpec { side: 10, chi: 10 }).unwrap();
        let seq = handcrafted_row_sequence(10).unwrap();
        let mut budget = EvalBudget::new(net.edge_count());
        let total = sequence_cost(&net, &seq, &mut budget).unwrap();
        let floor: Cost = "10000000000000000000".parse().unwrap();
        assert!(total > floor, "total {total} does not clear 10^19");
        let mut budget2 = EvalBudget::new(net.edge_count());
        assert_eq!(sequence_cost(&net, &seq, &mut budget2).unwrap(), total);
    }

    #[test]
    fn single_vertex_lattice_needs_no_steps() {
        let seq = handcrafted_row_sequence(1).unwrap();
        assert!(seq.is_empty());
    }
}
