use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDecomposition {
    /// First iteration from which the support stays on the optimal basis
    /// through `t_total`.
    pub t_basis: u64,
    pub t_local: u64,
    /// First traced iteration within `dist_tol` of the optimum.
    pub t_total: u64,
    pub settled: bool,
}

/// Splits a solved run into basis identification and local convergence.
///
/// `support_trace` holds `(iteration, support)` pairs sorted by iteration;
/// the support at an untraced iteration is that of the latest entry before
/// it, so either every iteration or only change points may be listed.
/// `basis` must be sorted. If the support at `t_total` is not the basis,
/// `t_basis = t_total` and `settled = false`.
pub fn detect_stages(
    support_trace: &[(u64, Vec<usize>)],
    dist_trace: &[(u64, f64)],
    basis: &[usize],
    dist_tol: f64,
) -> Result<StageDecomposition> {
    if support_trace.is_empty() || dist_trace.is_empty() {
        return Err(Error::Argument("detect_stages: empty trace".into()));
    }
    let sorted = |it: &mut dyn Iterator<Item = u64>| {
        let v: Vec<u64> = it.collect();
        v.windows(2).all(|w| w[0] < w[1])
    };
    if !sorted(&mut support_trace.iter().map(|e| e.0)) || !sorted(&mut dist_trace.iter().map(|e| e.0)) {
        return Err(Error::Argument("detect_stages: traces must be strictly increasing".into()));
    }
    let t_total = dist_trace
        .iter()
        .find(|&&(_, d)| d <= dist_tol)
        .map(|&(t, _)| t)
        .ok_or(Error::Unsolved)?;

    let mut basis_sorted = basis.to_vec();
    basis_sorted.sort_unstable();
    let upto = support_trace.partition_point(|e| e.0 <= t_total);
    let mut t_basis = None;
    for (t, support) in support_trace[..upto].iter().rev() {
        let mut s = support.clone();
        s.sort_unstable();
        if s != basis_sorted {
            break;
        }
        t_basis = Some(*t);
    }
    let (t_basis, settled) = match t_basis {
        Some(t) => (t, true),
        None => (t_total, false),
    };
    Ok(StageDecomposition {
        t_basis,
        t_local: t_total - t_basis,
        t_total,
        settled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist_until(t_total: u64) -> Vec<(u64, f64)> {
        (0..=t_total).map(|t| (t, if t == t_total { 0.0 } else { 1.0 })).collect()
    }

    #[test]
    fn hand_scan() {
        let sup = vec![(0, vec![1, 2]), (1, vec![1]), (2, vec![1]), (3, vec![1])];
        let st = detect_stages(&sup, &dist_until(3), &[1], 1e-4).unwrap();
        assert_eq!((st.t_basis, st.t_local, st.t_total, st.settled), (1, 2, 3, true));
    }

    #[test]
    fn settled_from_start() {
        let sup: Vec<_> = (0..5).map(|t| (t, vec![0, 3])).collect();
        let st = detect_stages(&sup, &dist_until(4), &[0, 3], 1e-4).unwrap();
        assert_eq!((st.t_basis, st.t_local), (0, 4));
    }

    #[test]
    fn flicker_uses_last_settling() {
        let sup = vec![(0, vec![1]), (1, vec![1, 2]), (2, vec![1])];
        let st = detect_stages(&sup, &dist_until(2), &[1], 1e-4).unwrap();
        assert_eq!((st.t_basis, st.t_local), (2, 0));
    }

    #[test]
    fn never_on_basis() {
        let sup = vec![(0, vec![]), (2, vec![0, 1])];
        let st = detect_stages(&sup, &dist_until(3), &[1], 1e-4).unwrap();
        assert_eq!((st.t_basis, st.t_local, st.settled), (3, 0, false));
    }

    #[test]
    fn change_points_match_full_trace() {
        let full = vec![(0, vec![]), (1, vec![0]), (2, vec![0]), (3, vec![0, 1]), (4, vec![0, 1]), (5, vec![0, 1])];
        let sparse = vec![(0, vec![]), (1, vec![0]), (3, vec![0, 1])];
        let a = detect_stages(&full, &dist_until(5), &[0, 1], 1e-4).unwrap();
        let b = detect_stages(&sparse, &dist_until(5), &[0, 1], 1e-4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.t_basis, 3);
    }

    #[test]
    fn unsolved_is_error() {
        let sup = vec![(0, vec![0])];
        let dist = vec![(0, 1.0), (1, 0.5)];
        assert!(matches!(detect_stages(&sup, &dist, &[0], 1e-4), Err(Error::Unsolved)));
        assert!(detect_stages(&[], &dist, &[0], 1e-4).is_err());
    }

    proptest! {
        #[test]
        fn permutation_equivariant(
            supports in proptest::collection::vec(proptest::collection::btree_set(0usize..6, 0..6), 1..20),
            basis in proptest::collection::btree_set(0usize..6, 1..4),
            perm_seed in any::<u64>(),
        ) {
            let mut perm: Vec<usize> = (0..6).collect();
            let mut s = perm_seed;
            for i in (1..6).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let mut sup: Vec<(u64, Vec<usize>)> = supports
                .iter()
                .enumerate()
                .map(|(t, set)| (t as u64, set.iter().copied().collect()))
                .collect();
            let t_total = sup.len() as u64;
            sup.push((t_total, basis.iter().copied().collect()));
            let basis: Vec<usize> = basis.into_iter().collect();
            let dist = dist_until(t_total);
            let st = detect_stages(&sup, &dist, &basis, 1e-4).unwrap();

            let relabel = |v: &[usize]| v.iter().map(|&j| perm[j]).collect::<Vec<_>>();
            let sup_p: Vec<_> = sup.iter().map(|(t, v)| (*t, relabel(v))).collect();
            let st_p = detect_stages(&sup_p, &dist, &relabel(&basis), 1e-4).unwrap();
            prop_assert_eq!(st, st_p);
            prop_assert_eq!(st.t_basis + st.t_local, st.t_total);
        }
    }
}
