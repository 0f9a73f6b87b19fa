use proptest::prelude::*;
use repairopt::gf::{is_prime, smallest_prime_geq, FieldMatrix, PrimeField};

const PRIMES: [u64; 4] = [2, 5, 11, 727];

fn field() -> impl Strategy<Value = PrimeField> {
    prop::sample::select(PRIMES.to_vec()).prop_map(|q| PrimeField::new(q).unwrap())
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = (PrimeField, Vec<Vec<u64>>)> {
    field().prop_flat_map(move |f| {
        let q = f.modulus();
        (Just(f), prop::collection::vec(prop::collection::vec(0..q, cols), rows))
    })
}

fn to_matrix(f: PrimeField, rows: &[Vec<u64>]) -> FieldMatrix {
    let signed: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
    FieldMatrix::from_rows(f, &signed).unwrap()
}

/// Determinant by permutation expansion.
fn leibniz(f: PrimeField, m: &[Vec<u64>]) -> u64 {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for i in 0..n {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }
    let n = m.len();
    perms(n).into_iter().fold(0, |acc, p| {
        let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
        let term = (0..n).fold(1, |t, i| f.mul(t, m[i][p[i]]));
        if inversions % 2 == 0 { f.add(acc, term) } else { f.sub(acc, term) }
    })
}

fn combos(n: usize, r: usize) -> Vec<Vec<usize>> {
    repairopt::combinatorics::subsets(&(0..n).collect::<Vec<_>>(), r)
}

/// Largest order of a nonzero minor.
fn rank_by_minors(f: PrimeField, m: &[Vec<u64>]) -> usize {
    let (rows, cols) = (m.len(), m[0].len());
    (1..=rows.min(cols))
        .rev()
        .find(|&r| {
            combos(rows, r).iter().any(|rs| {
                combos(cols, r).iter().any(|cs| {
                    let sub: Vec<Vec<u64>> = rs.iter().map(|&i| cs.iter().map(|&j| m[i][j]).collect()).collect();
                    leibniz(f, &sub) != 0
                })
            })
        })
        .unwrap_or(0)
}

proptest! {
    #[test]
    fn field_axioms(f in field(), a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let q = f.modulus();
        let (a, b, c) = (a % q, b % q, c % q);
        prop_assert_eq!(f.add(a, b), f.add(b, a));
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), 0);
        prop_assert_eq!(f.sub(a, b), f.add(a, f.neg(b)));
        prop_assert_eq!(f.mul(a, 1), a);
        if a == 0 {
            prop_assert!(f.inv(a).is_none());
        } else {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
            prop_assert_eq!(f.pow(a, q - 1), 1);
        }
    }

    #[test]
    fn elements_follow_operators(f in field(), a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (f.element(a), f.element(b));
        prop_assert_eq!((x + y).value(), f.add(a % f.modulus(), b % f.modulus()));
        prop_assert_eq!((x * y).value(), f.mul(a % f.modulus(), b % f.modulus()));
        prop_assert_eq!((x - y + y).value(), x.value());
        if y.value() != 0 {
            prop_assert_eq!((x / y * y).value(), x.value());
        }
    }

    #[test]
    fn rank_matches_minors((f, m) in (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| matrix(r, c))) {
        prop_assert_eq!(to_matrix(f, &m).rank(), rank_by_minors(f, &m));
    }

    #[test]
    fn det_matches_expansion((f, m) in (1usize..=4).prop_flat_map(|n| matrix(n, n))) {
        prop_assert_eq!(to_matrix(f, &m).det().unwrap().value(), leibniz(f, &m));
    }

    #[test]
    fn solve_multiplies_back((f, m) in (1usize..=5).prop_flat_map(|n| matrix(n, n)), seed in any::<u64>()) {
        let a = to_matrix(f, &m);
        let b: Vec<u64> = (0..m.len() as u64).map(|i| (seed.wrapping_mul(i + 7)) % f.modulus()).collect();
        match a.solve(&b) {
            Ok(x) => prop_assert_eq!(a.mul_vec(&x).unwrap(), b),
            Err(_) => prop_assert!(a.rank() < m.len()),
        }
        if let Ok(inv) = a.inverse() {
            prop_assert_eq!(a.mul(&inv).unwrap(), FieldMatrix::identity(f, m.len()));
        }
    }

    #[test]
    fn next_prime_is_minimal(x in 2u64..100_000) {
        let p = smallest_prime_geq(x).unwrap();
        prop_assert!(p >= x && is_prime(p));
        prop_assert!((x..p).all(|y| !is_prime(y)));
    }
}
