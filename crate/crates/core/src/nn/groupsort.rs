//! GroupSort activation with grouping size 2.
//!
//! Each consecutive pair `(v[2i], v[2i+1])` is emitted in decreasing order.
//! Ties keep their original order (the stable-sort permutation), which also
//! fixes the subgradient used by the backward pass.

use crate::error::{Error, Result};
use crate::tensor::Vector;

/// Only grouping size supported.
pub const GROUP_SIZE: usize = 2;

pub fn groupsort2(v: &Vector) -> Result<Vector> {
    let mut out = v.as_slice().to_vec();
    if !out.len().is_multiple_of(GROUP_SIZE) {
        return Err(Error::Dimension(format!(
            "groupsort needs an even dimension, got {}",
            out.len()
        )));
    }
    sort_pairs_in_place(&mut out, None);
    Ok(Vector::from(out))
}

/// Sorts each pair in decreasing order. When `swaps` is given, records for every
/// pair whether its entries were exchanged.
pub(crate) fn sort_pairs_in_place(v: &mut [f64], mut swaps: Option<&mut [bool]>) {
    debug_assert_eq!(v.len() % GROUP_SIZE, 0);
    for (g, pair) in v.chunks_exact_mut(GROUP_SIZE).enumerate() {
        let swap = pair[0] < pair[1];
        if swap {
            pair.swap(0, 1);
        }
        if let Some(s) = swaps.as_deref_mut() {
            s[g] = swap;
        }
    }
}

/// Routes an upstream gradient back through a recorded pair permutation.
pub(crate) fn unsort_pairs_in_place(grad: &mut [f64], swaps: &[bool]) {
    for (pair, &swap) in grad.chunks_exact_mut(GROUP_SIZE).zip(swaps) {
        if swap {
            pair.swap(0, 1);
        }
    }
}

/// Gradient of `<upstream, groupsort2(input)>` with respect to `input`.
pub fn groupsort2_backward(input: &Vector, upstream: &Vector) -> Result<Vector> {
    if input.dim() != upstream.dim() || !input.dim().is_multiple_of(GROUP_SIZE) {
        return Err(Error::Dimension(format!(
            "groupsort backward: input {} vs upstream {}",
            input.dim(),
            upstream.dim()
        )));
    }
    let mut scratch = input.as_slice().to_vec();
    let mut swaps = vec![false; scratch.len() / GROUP_SIZE];
    sort_pairs_in_place(&mut scratch, Some(&mut swaps));
    let mut grad = upstream.as_slice().to_vec();
    unsort_pairs_in_place(&mut grad, &swaps);
    Ok(Vector::from(grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gs(v: &[f64]) -> Vec<f64> {
        groupsort2(&Vector::from(v.to_vec())).unwrap().into_vec()
    }

    #[test]
    fn sorts_pairs_decreasing() {
        assert_eq!(gs(&[1.0, 3.0, 2.0, 4.0]), vec![3.0, 1.0, 4.0, 2.0]);
        assert_eq!(gs(&[5.0, 5.0]), vec![5.0, 5.0]);
        assert_eq!(gs(&[-1.0, -2.0, 0.0, 7.0]), vec![-1.0, -2.0, 7.0, 0.0]);
    }

    #[test]
    fn odd_dimension_is_rejected() {
        assert!(groupsort2(&Vector::from(vec![1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn backward_transposes_the_permutation() {
        let (a, b) = (0.25, -4.0);
        let g = groupsort2_backward(&Vector::from(vec![1.0, 3.0]), &Vector::from(vec![a, b])).unwrap();
        assert_eq!(g.as_slice(), &[b, a]);
        // tie: identity permutation
        let g = groupsort2_backward(&Vector::from(vec![2.0, 2.0]), &Vector::from(vec![a, b])).unwrap();
        assert_eq!(g.as_slice(), &[a, b]);
    }

    fn even_vec() -> impl Strategy<Value = Vec<f64>> {
        (1usize..8).prop_flat_map(|k| proptest::collection::vec(-10.0f64..10.0, 2 * k))
    }

    proptest! {
        #[test]
        fn idempotent_permutation(v in even_vec()) {
            let once = gs(&v);
            prop_assert_eq!(gs(&once), once.clone());
            let mut a = v.clone();
            let mut b = once;
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn one_lipschitz_in_sup_norm(
            (u, v) in (1usize..8).prop_flat_map(|k| (
                proptest::collection::vec(-10.0f64..10.0, 2 * k),
                proptest::collection::vec(-10.0f64..10.0, 2 * k),
            ))
        ) {
            let su = gs(&u);
            let sv = gs(&v);
            let out = su.iter().zip(&sv).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let inp = u.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(out <= inp);
        }
    }
}
