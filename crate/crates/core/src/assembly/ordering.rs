//! Geometric nested dissection on the control-point grid.

use super::SystemPattern;
use crate::mesh::IgaMesh;

const LEAF_EXTENT: usize = 4;
const LEAF_POINTS: usize = 64;

/// Elimination order of the control points of a `dims` grid (x-fastest
/// indices). Boxes are split across their longest side by a separator two
/// points thick, which decouples the halves since quadratic basis functions
/// only couple points at most two indices apart. Both halves are ordered
/// recursively, then the separator.
pub fn nested_dissection(dims: [usize; 3]) -> Vec<usize> {
    let mut out = Vec::with_capacity(dims.iter().product());
    dissect([0; 3], dims, dims, &mut out);
    out
}

fn dissect(lo: [usize; 3], hi: [usize; 3], dims: [usize; 3], out: &mut Vec<usize>) {
    let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let volume: usize = ext.iter().product();
    if volume == 0 {
        return;
    }
    let axis = (0..3).max_by_key(|&d| (ext[d], 3 - d)).unwrap_or(0);
    if ext[axis] <= LEAF_EXTENT || volume <= LEAF_POINTS {
        for z in lo[2]..hi[2] {
            for y in lo[1]..hi[1] {
                for x in lo[0]..hi[0] {
                    out.push(x + dims[0] * (y + dims[1] * z));
                }
            }
        }
        return;
    }
    let mid = lo[axis] + (ext[axis] - 2) / 2;
    let mut left_hi = hi;
    left_hi[axis] = mid;
    let mut right_lo = lo;
    right_lo[axis] = mid + 2;
    let mut sep_lo = lo;
    sep_lo[axis] = mid;
    let mut sep_hi = hi;
    sep_hi[axis] = mid + 2;
    dissect(lo, left_hi, dims, out);
    dissect(right_lo, hi, dims, out);
    for z in sep_lo[2]..sep_hi[2] {
        for y in sep_lo[1]..sep_hi[1] {
            for x in sep_lo[0]..sep_hi[0] {
                out.push(x + dims[0] * (y + dims[1] * z));
            }
        }
    }
}

/// Equation permutation `perm[new] = old` for the free DOFs of `pattern`,
/// keeping the components of each control point adjacent.
pub fn dof_ordering(mesh: &IgaMesh, pattern: &SystemPattern) -> Vec<usize> {
    let n_pts = mesh.n_ctrl_pts();
    let points = nested_dissection([mesh.n_pts(0), mesh.n_pts(1), mesh.n_pts(2)]);
    let mut perm = Vec::with_capacity(pattern.n_free());
    for p in points {
        for block in 0..mesh.dim() {
            if let Some(eq) = pattern.equation(block * n_pts + p) {
                perm.push(eq);
            }
        }
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dissection_is_a_permutation() {
        for dims in [[1, 1, 1], [3, 4, 1], [9, 6, 1], [42, 22, 22], [7, 5, 13]] {
            let mut order = nested_dissection(dims);
            order.sort_unstable();
            let n: usize = dims.iter().product();
            assert_eq!(order, (0..n).collect::<Vec<_>>(), "{dims:?}");
        }
    }

    #[test]
    fn halves_are_decoupled() {
        // The first point of the right half comes after every left point and
        // lies at least three indices away from all of them along the cut.
        let dims = [24, 3, 1];
        let order = nested_dissection(dims);
        let mid = (24 - 2) / 2;
        let left: Vec<usize> = order
            .iter()
            .copied()
            .take_while(|&p| p % 24 < mid)
            .collect();
        assert_eq!(left.len(), mid * 3);
        assert!(order[left.len()..order.len() - 6]
            .iter()
            .all(|&p| p % 24 >= mid + 2));
        let sep = &order[order.len() - 6..];
        assert!(sep.iter().all(|&p| p % 24 == mid || p % 24 == mid + 1));
    }

    #[test]
    fn dof_ordering_skips_fixed() {
        let mesh = IgaMesh::new_2d(3, 2).unwrap();
        let mut fixed = vec![false; mesh.n_dofs()];
        fixed[0] = true;
        fixed[7] = true;
        let pattern = SystemPattern::new(&mesh, &fixed).unwrap();
        let mut perm = dof_ordering(&mesh, &pattern);
        assert_eq!(perm.len(), mesh.n_dofs() - 2);
        perm.sort_unstable();
        assert_eq!(perm, (0..mesh.n_dofs() - 2).collect::<Vec<_>>());
    }
}
