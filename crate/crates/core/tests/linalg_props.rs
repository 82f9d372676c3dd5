use proptest::prelude::*;
use spiked_amp::linalg::{dot, norm, normalized, SymMatrix};

fn sym(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
        SymMatrix::from_upper(n, |i, j| v[i * n + j])
    })
}

fn naive_matvec(m: &SymMatrix, x: &[f64]) -> Vec<f64> {
    (0..m.n())
        .map(|i| (0..m.n()).map(|j| m.get(i, j) * x[j]).sum())
        .collect()
}

proptest! {
    #[test]
    fn matvec_matches_definition((m, x) in (2usize..12).prop_flat_map(|n| (sym(n), prop::collection::vec(-1.0f64..1.0, n)))) {
        let fast = m.matvec(&x).unwrap();
        let slow = naive_matvec(&m, &x);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn project_out_equals_explicit_congruence(
        (m, z) in (2usize..10).prop_flat_map(|n| (sym(n), prop::collection::vec(-1.0f64..1.0, n)))
    ) {
        let Some((z, _)) = normalized(&z) else { return Ok(()); };
        let n = m.n();
        let p = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 } - z[i] * z[j];
        let explicit = SymMatrix::from_upper(n, |i, j| {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += p(i, a) * m.get(a, b) * p(b, j);
                }
            }
            s
        });
        let mut fast = m.clone();
        fast.project_out(&z).unwrap();
        prop_assert!(fast.max_abs_diff(&explicit) < 1e-11);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(fast.get(i, j), fast.get(j, i));
            }
        }
        prop_assert!(norm(&fast.matvec(&z).unwrap()) < 1e-11);
    }

    #[test]
    fn principal_submatrix_picks_entries(m in sym(8), idx in prop::collection::btree_set(0usize..8, 1..8)) {
        let idx: Vec<usize> = idx.into_iter().collect();
        let s = m.principal_submatrix(&idx);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                prop_assert_eq!(s.get(a, b), m.get(i, j));
            }
        }
    }

    #[test]
    fn quad_form_is_symmetric_bilinear(m in sym(6), x in prop::collection::vec(-1.0f64..1.0, 6)) {
        let q = m.quad_form(&x).unwrap();
        prop_assert!((q - dot(&x, &naive_matvec(&m, &x))).abs() < 1e-12);
    }
}

#[test]
fn dimension_mismatch_is_reported() {
    let m = SymMatrix::identity(3);
    assert!(m.matvec(&[1.0, 2.0]).is_err());
    assert!(SymMatrix::from_row_major(2, vec![1.0, 2.0, 3.0, 4.0]).is_err());
}
