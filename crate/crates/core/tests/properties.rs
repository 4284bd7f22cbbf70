//! Randomized invariants: exact Smith/kernel algebra on arbitrary
//! matrices, saturation of kernel bases, cokernel counts against
//! independent oracles, affinity of the slack embedding, Legendre
//! round trips, and relabeling invariance of the stratum verdicts.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use toric_kahler::convex::{
    fenchel_value, inverse_legendre, legendre_map, ConvexPotential, FlatPotential,
};
use toric_kahler::lattice::{cokernel_order, kernel_basis, smith_normal_form, IntMatrix};
use toric_kahler::polytope::{iota_lambda, ToricSpec};
use toric_kahler::quotient::{stratum_report, StratumVerdict};

fn matrix_strategy(
    max_rows: usize,
    max_cols: usize,
    bound: i64,
) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(move |(r, c)| {
        proptest::collection::vec(proptest::collection::vec(-bound..=bound, c), r)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn snf_decomposition_is_exact(rows in matrix_strategy(8, 8, 10)) {
        let a = IntMatrix::from_rows(&rows);
        let snf = smith_normal_form(&a);
        prop_assert_eq!(snf.u.mul(&a).mul(&snf.v), snf.d.clone());
        prop_assert_eq!(snf.u.det().abs(), BigInt::from(1));
        prop_assert_eq!(snf.v.det().abs(), BigInt::from(1));
        let f = snf.invariant_factors();
        for w in f.windows(2) {
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
    }

    #[test]
    fn kernel_annihilates_and_saturates(rows in matrix_strategy(3, 5, 3)) {
        let a = IntMatrix::from_rows(&rows);
        let b = kernel_basis(&a);
        prop_assert!(a.mul(&b).is_zero());
        // Every small integer kernel vector must be an exact integer
        // combination of the basis columns.
        let cols = a.cols();
        if cols <= 4 {
            for v in small_vectors(cols, 2) {
                if !in_kernel(&a, &v) {
                    continue;
                }
                prop_assert!(
                    integer_combination(&b, &v),
                    "kernel vector {:?} not an integer combination", v
                );
            }
        }
    }

    #[test]
    fn cokernel_order_matches_det_for_2x2(
        a in -6i64..=6, b in -6i64..=6, c in -6i64..=6, d in -6i64..=6
    ) {
        let m = IntMatrix::from_rows(&[vec![a, b], vec![c, d]]);
        let det = (a * d - b * c).abs();
        if det == 0 {
            prop_assert!(cokernel_order(&m).is_err());
        } else {
            prop_assert_eq!(cokernel_order(&m).unwrap(), det as u64);
        }
    }

    #[test]
    fn cokernel_order_matches_minor_gcd_for_2x3(
        entries in proptest::collection::vec(-5i64..=5, 6)
    ) {
        let m = IntMatrix::from_rows(&[entries[..3].to_vec(), entries[3..].to_vec()]);
        let mut g: i64 = 0;
        for j0 in 0..3 {
            for j1 in (j0 + 1)..3 {
                let minor = entries[j0] * entries[3 + j1] - entries[j1] * entries[3 + j0];
                g = g.gcd(&minor);
            }
        }
        if g == 0 {
            prop_assert!(cokernel_order(&m).is_err());
        } else {
            prop_assert_eq!(cokernel_order(&m).unwrap(), g as u64);
        }
    }

    #[test]
    fn slack_embedding_is_affine(
        ax in -3.0f64..3.0, ay in -3.0f64..3.0,
        bx in -3.0f64..3.0, by in -3.0f64..3.0,
        t in -1.0f64..2.0
    ) {
        let spec = ToricSpec::new(
            vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
            vec![0.0, 0.0, -1.0],
        ).unwrap();
        let a = [ax, ay];
        let b = [bx, by];
        let mix = [t * ax + (1.0 - t) * bx, t * ay + (1.0 - t) * by];
        let la = iota_lambda(&spec, &a).unwrap();
        let lb = iota_lambda(&spec, &b).unwrap();
        let lm = iota_lambda(&spec, &mix).unwrap();
        for j in 0..3 {
            prop_assert!((lm[j] - (t * la[j] + (1.0 - t) * lb[j])).abs() < 1e-12);
        }
    }

    #[test]
    fn legendre_round_trip_on_flat(
        x in proptest::collection::vec(-2.0f64..2.0, 1..=4)
    ) {
        let flat = FlatPotential::new(x.len());
        let eta = legendre_map(&flat, &x).unwrap();
        let back = inverse_legendre(&flat, &eta, &vec![0.0; x.len()]).unwrap();
        for (a, b) in back.x.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        let fx = flat.value(&x);
        let dual = fenchel_value(&flat, &eta).unwrap();
        let dot: f64 = eta.iter().zip(&x).map(|(e, xi)| e * xi).sum();
        prop_assert!((fx + dual - dot).abs() <= 1e-8 * (1.0 + fx.abs()));
    }

    #[test]
    fn stratum_verdicts_survive_relabeling_and_shear(
        perm_seed in 0usize..6,
        shear in -3i64..=3,
    ) {
        let base = ToricSpec::new(
            vec![vec![1, 0], vec![0, 1], vec![-1, -2]],
            vec![0.0, 0.0, -1.0],
        ).unwrap();
        let perms = [
            [0usize, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0],
        ];
        let perm = perms[perm_seed];
        let normals: Vec<Vec<i64>> = perm
            .iter()
            .map(|&j| {
                let u = base.normal(j);
                vec![u[0], shear * u[0] + u[1]]
            })
            .collect();
        let offsets: Vec<f64> = perm.iter().map(|&j| base.offset(j)).collect();
        let changed = ToricSpec::new(normals, offsets).unwrap();
        let summarize = |spec: &ToricSpec| {
            let mut v: Vec<(usize, String)> = stratum_report(spec)
                .unwrap()
                .iter()
                .map(|e| (e.face.dim(), format!("{:?}", e.class.verdict)))
                .collect();
            v.sort();
            v
        };
        prop_assert_eq!(summarize(&base), summarize(&changed));
    }
}

#[test]
fn weighted_vertex_orbifold_count_is_stable() {
    let spec = ToricSpec::new(
        vec![vec![1, 0], vec![0, 1], vec![-1, -2]],
        vec![0.0, 0.0, -1.0],
    )
    .unwrap();
    let orbifolds = stratum_report(&spec)
        .unwrap()
        .into_iter()
        .filter(|e| matches!(e.class.verdict, StratumVerdict::Orbifold(_)))
        .count();
    assert_eq!(orbifolds, 1);
}

fn small_vectors(dim: usize, bound: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for v in &out {
            for x in -bound..=bound {
                let mut w = v.clone();
                w.push(x);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn in_kernel(a: &IntMatrix, v: &[i64]) -> bool {
    (0..a.rows()).all(|i| {
        let s: i64 = (0..a.cols())
            .map(|j| {
                let e: BigInt = a.get(i, j).clone();
                // entries are small by construction
                i64::try_from(e).unwrap() * v[j]
            })
            .sum();
        s == 0
    })
}

/// Solve B w = v over the integers by forward substitution down the
/// column-echelon pivots; true iff an exact solution exists.
fn integer_combination(b: &IntMatrix, v: &[i64]) -> bool {
    let rows = b.rows();
    let cols = b.cols();
    let mut residual: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
    let mut w = vec![BigInt::ZERO; cols];
    for c in 0..cols {
        let pivot_row = (0..rows).find(|&r| !b.get(r, c).is_zero());
        let r = match pivot_row {
            Some(r) => r,
            None => continue,
        };
        let (q, rem) = residual[r].div_rem(b.get(r, c));
        if !rem.is_zero() {
            return false;
        }
        w[c] = q.clone();
        for i in 0..rows {
            let delta = b.get(i, c) * &q;
            residual[i] -= delta;
        }
    }
    residual.iter().all(|x| x.is_zero())
}
