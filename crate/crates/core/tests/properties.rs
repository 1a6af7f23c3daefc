//! Cross-module invariants, checked on deterministic random samples and with
//! proptest. The sampling generator is a fixed SplitMix64 stream so every run
//! sees the same cases.

use std::collections::BTreeSet;

use proptest::prelude::*;

use modegap::{
    bayes_set, binary_threshold, expected_loss, find_counterexample, format_rational, mode_set,
    parse_rational, regret, ternary_conditions, CanonicalCostMatrix, CostMatrix, ProbVector,
    Rational, RegionLabel,
};

// ---------------------------------------------------------------------------
// deterministic sampling
// ---------------------------------------------------------------------------

struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(seed)
    }

    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

fn rat(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn rat_frac(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

/// Zero diagonal, off-diagonals j/8 with j uniform in 0..=32, redrawn until
/// some entry is positive (the reasonableness filter).
fn random_reasonable_matrix(rng: &mut Rng, k: usize) -> CostMatrix {
    loop {
        let mut any_positive = false;
        let entries: Vec<Vec<Rational>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if i == j {
                            Rational::from_integer(0.into())
                        } else {
                            let numer = rng.below(33) as i64;
                            any_positive |= numer > 0;
                            rat_frac(numer, 8)
                        }
                    })
                    .collect()
            })
            .collect();
        if any_positive {
            return CostMatrix::new(entries).unwrap();
        }
    }
}

fn random_prob_vector(rng: &mut Rng, k: usize) -> ProbVector {
    loop {
        let numerators: Vec<u64> = (0..k).map(|_| rng.below(25)).collect();
        let total: u64 = numerators.iter().sum();
        if total == 0 {
            continue;
        }
        let den = Rational::from_integer(total.into());
        return ProbVector::new(
            numerators
                .iter()
                .map(|&n| Rational::from_integer(n.into()) / den.clone())
                .collect(),
        )
        .unwrap();
    }
}

fn random_permutation(rng: &mut Rng, k: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    perm
}

// ---------------------------------------------------------------------------
// cost_matrix invariants
// ---------------------------------------------------------------------------

#[test]
fn canonicalization_is_idempotent_and_exact() {
    let mut rng = Rng::new(11);
    for k in 2..=5 {
        for _ in 0..50 {
            let m = random_reasonable_matrix(&mut rng, k);
            let canon = m.canonicalize().unwrap();

            assert_eq!(canon.inner().canonicalize().unwrap(), canon);

            let mut sum = Rational::from_integer(0.into());
            for i in 1..=k {
                assert_eq!(*canon.entry(i, i), rat("0"));
                for j in 1..=k {
                    if i != j {
                        assert!(*canon.entry(i, j) >= rat("0"));
                        sum += canon.entry(i, j);
                    }
                }
            }
            assert_eq!(sum, Rational::from_integer((k * (k - 1)).into()));
        }
    }
}

#[test]
fn canonicalization_preserves_bayes_argmin_sets() {
    let mut rng = Rng::new(23);
    let mut checked = 0;
    while checked < 1000 {
        let k = 2 + rng.below(4) as usize;
        let m = random_reasonable_matrix(&mut rng, k);
        let canon = m.canonicalize().unwrap();
        let p = random_prob_vector(&mut rng, k);
        assert_eq!(
            bayes_set(&m, &p).unwrap().labels(),
            bayes_set(canon.inner(), &p).unwrap().labels(),
            "matrix {m:?} at {p:?}"
        );
        checked += 1;
    }
}

#[test]
fn canonicalization_absorbs_column_shifts_and_scaling() {
    let mut rng = Rng::new(37);
    let mut closed = 0;
    for _ in 0..400 {
        let k = 2 + rng.below(4) as usize;
        let m = random_reasonable_matrix(&mut rng, k);
        let scale = rat_frac(1 + rng.below(32) as i64, 8);
        let shifts: Vec<Rational> = (0..k)
            .map(|_| rat_frac(rng.below(33) as i64 - 16, 8))
            .collect();
        let shifted = CostMatrix::new(
            m.entries()
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .map(|(j, e)| e * &scale + &shifts[j])
                        .collect()
                })
                .collect(),
        )
        .unwrap();

        // Bayes sets are invariant regardless of whether the shifted matrix
        // is still reasonable.
        let p = random_prob_vector(&mut rng, k);
        assert_eq!(
            bayes_set(&m, &p).unwrap().labels(),
            bayes_set(&shifted, &p).unwrap().labels()
        );

        if shifted.validate_reasonable().is_reasonable {
            if let Ok(canon_shifted) = shifted.canonicalize() {
                assert_eq!(canon_shifted, m.canonicalize().unwrap());
                closed += 1;
            }
        }
    }
    assert!(closed > 50, "want a meaningful number of closed cases, got {closed}");
}

// ---------------------------------------------------------------------------
// decision invariants
// ---------------------------------------------------------------------------

#[test]
fn zero_one_bayes_equals_mode() {
    let mut rng = Rng::new(41);
    for k in 2..=6 {
        let zo = CostMatrix::zero_one(k);
        for _ in 0..200 {
            let p = random_prob_vector(&mut rng, k);
            assert_eq!(bayes_set(&zo, &p).unwrap().labels(), mode_set(&p).labels());
        }
    }
}

#[test]
fn regret_sign_and_zero_characterization() {
    let mut rng = Rng::new(43);
    for _ in 0..1000 {
        let k = 2 + rng.below(4) as usize;
        let m = random_reasonable_matrix(&mut rng, k);
        let p = random_prob_vector(&mut rng, k);
        let r = regret(&m, &p).unwrap();
        assert!(r >= rat("0"));
        let mode = mode_set(&p);
        let bayes = bayes_set(&m, &p).unwrap();
        let subset = mode.labels().is_subset(bayes.labels());
        assert_eq!(r == rat("0"), subset, "matrix {m:?} at {p:?}");
    }
}

#[test]
fn relabeling_permutes_decisions_and_keeps_regret() {
    let mut rng = Rng::new(47);
    for _ in 0..400 {
        let k = 2 + rng.below(4) as usize;
        let m = random_reasonable_matrix(&mut rng, k);
        let p = random_prob_vector(&mut rng, k);
        let perm = random_permutation(&mut rng, k);

        let m_new = CostMatrix::new(
            (0..k)
                .map(|i| (0..k).map(|j| m.entries()[perm[i]][perm[j]].clone()).collect())
                .collect(),
        )
        .unwrap();
        let p_new =
            ProbVector::new((0..k).map(|i| p.probs()[perm[i]].clone()).collect()).unwrap();

        let relabel = |labels: &BTreeSet<usize>| -> BTreeSet<usize> {
            (1..=k).filter(|&l| labels.contains(&(perm[l - 1] + 1))).collect()
        };

        assert_eq!(
            *mode_set(&p_new).labels(),
            relabel(mode_set(&p).labels())
        );
        assert_eq!(
            *bayes_set(&m_new, &p_new).unwrap().labels(),
            relabel(bayes_set(&m, &p).unwrap().labels())
        );
        assert_eq!(regret(&m_new, &p_new).unwrap(), regret(&m, &p).unwrap());
    }
}

// ---------------------------------------------------------------------------
// certify invariants
// ---------------------------------------------------------------------------

#[test]
fn binary_witnesses_sit_strictly_inside_the_disagreement_interval() {
    let mut rng = Rng::new(53);
    let half = rat("1/2");
    for _ in 0..100 {
        let c = rat_frac(1 + rng.below(199) as i64, 100);
        if c == rat("1") {
            continue;
        }
        let m = CostMatrix::new(vec![
            vec![rat("0"), c.clone()],
            vec![rat("2") - &c, rat("0")],
        ])
        .unwrap();
        let threshold = binary_threshold(&m.canonicalize().unwrap()).unwrap();
        let ce = find_counterexample(&m).unwrap().expect("c != 1 must disagree");
        assert!(ce.verify(&m));
        let p1 = ce.p.prob(1);
        if c < rat("1") {
            assert!(*p1 > threshold && *p1 < half, "c={c:?} p1={p1:?}");
        } else {
            assert!(*p1 > half && *p1 < threshold, "c={c:?} p1={p1:?}");
        }
    }
}

#[test]
fn ternary_conditions_agree_with_bayes_membership_on_a_grid() {
    let mut rng = Rng::new(59);
    let n: u64 = 20;
    for _ in 0..12 {
        let a_num = rng.below(25) as i64;
        let b_num = rng.below(25 - a_num as u64) as i64;
        let canonical =
            CostMatrix::symmetric_ternary(rat_frac(a_num, 8), rat_frac(b_num, 8))
                .canonicalize()
                .unwrap();
        let systems: Vec<_> = (1..=3)
            .map(|t| ternary_conditions(&canonical, t).unwrap())
            .collect();
        for i in 0..=n {
            for j in 0..=n - i {
                let p = ProbVector::new(vec![
                    rat_frac(i as i64, n as i64),
                    rat_frac(j as i64, n as i64),
                    rat_frac((n - i - j) as i64, n as i64),
                ])
                .unwrap();
                let bayes = bayes_set(canonical.inner(), &p).unwrap();
                for t in 1..=3 {
                    assert_eq!(
                        systems[t - 1].satisfied_weak(&p).unwrap(),
                        bayes.labels().contains(&t),
                        "a={a_num}/8 b={b_num}/8 target={t} p={p:?}"
                    );
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// region invariants
// ---------------------------------------------------------------------------

/// Rebuild the half-plane constraints that define each polygon and check that
/// every output vertex satisfies all of them, with at least two tight (the
/// simplex facets counting as constraints).
#[test]
fn clip_output_vertices_are_two_constraint_tight() {
    let mut rng = Rng::new(61);
    let facets = |idx: usize| -> Vec<Rational> {
        let mut c = vec![rat("0"), rat("0"), rat("0")];
        c[idx] = rat("1");
        c
    };
    for _ in 0..20 {
        let canonical = random_reasonable_matrix(&mut rng, 3).canonicalize().unwrap();
        let defining = |label: RegionLabel| -> Vec<Vec<Rational>> {
            let mut cons: Vec<Vec<Rational>> = (0..3).map(facets).collect();
            let row = |l: usize| canonical.inner().entries()[l - 1].clone();
            match label {
                RegionLabel::Mode(t) => {
                    for j in 1..=3 {
                        if j != t {
                            let mut c = vec![rat("0"), rat("0"), rat("0")];
                            c[t - 1] = rat("1");
                            c[j - 1] = rat("-1");
                            cons.push(c);
                        }
                    }
                }
                RegionLabel::Bayes(t) => {
                    for j in 1..=3 {
                        if j != t {
                            let (rj, rt) = (row(j), row(t));
                            cons.push((0..3).map(|i| &rj[i] - &rt[i]).collect());
                        }
                    }
                }
                RegionLabel::Disagreement { mode, better } => {
                    for j in 1..=3 {
                        if j != mode {
                            let mut c = vec![rat("0"), rat("0"), rat("0")];
                            c[mode - 1] = rat("1");
                            c[j - 1] = rat("-1");
                            cons.push(c);
                        }
                    }
                    let (rm, rw) = (row(mode), row(better));
                    cons.push((0..3).map(|i| &rm[i] - &rw[i]).collect());
                }
            }
            cons
        };

        let sets = [
            modegap::mode_regions_ternary(),
            modegap::bayes_regions_ternary(&canonical).unwrap(),
            modegap::disagreement_region(&canonical).unwrap(),
        ];
        for set in &sets {
            for poly in set.polygons() {
                let cons = defining(poly.label());
                for v in poly.vertices() {
                    let mut tight = 0;
                    for c in &cons {
                        let val: Rational =
                            c.iter().zip(v.probs()).map(|(ci, pi)| ci * pi).sum();
                        assert!(
                            val >= rat("0"),
                            "vertex {v:?} violates a defining constraint of {:?}",
                            poly.label()
                        );
                        if val == rat("0") {
                            tight += 1;
                        }
                    }
                    assert!(
                        tight >= 2,
                        "vertex {v:?} of {:?} is tight on {tight} constraints",
                        poly.label()
                    );
                }
            }
        }
    }
}

#[test]
fn region_membership_matches_decisions_at_random_points() {
    let mut rng = Rng::new(67);
    for _ in 0..10 {
        let canonical = random_reasonable_matrix(&mut rng, 3).canonicalize().unwrap();
        let bayes_regions = modegap::bayes_regions_ternary(&canonical).unwrap();
        let mode_regions = modegap::mode_regions_ternary();
        for _ in 0..100 {
            let p = random_prob_vector(&mut rng, 3);
            let mode = mode_set(&p);
            let bayes = bayes_set(canonical.inner(), &p).unwrap();
            for t in 1..=3 {
                assert_eq!(
                    mode_regions.polygons()[t - 1].contains(&p),
                    mode.labels().contains(&t)
                );
                assert_eq!(
                    bayes_regions.polygons()[t - 1].contains(&p),
                    bayes.labels().contains(&t),
                    "label {t} at {p:?} under {canonical:?}"
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// proptest: shaped invariants
// ---------------------------------------------------------------------------

fn arb_rational() -> impl Strategy<Value = Rational> {
    (-400i64..400, 1i64..=16).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

fn arb_prob_vector(k: usize) -> impl Strategy<Value = ProbVector> {
    prop::collection::vec(0u64..32, k)
        .prop_filter("mass", |v| v.iter().sum::<u64>() > 0)
        .prop_map(|v| {
            let total: u64 = v.iter().sum();
            let den = Rational::from_integer(total.into());
            ProbVector::new(
                v.into_iter()
                    .map(|n| Rational::from_integer(n.into()) / den.clone())
                    .collect(),
            )
            .unwrap()
        })
}

proptest! {
    #[test]
    fn format_parse_round_trips(r in arb_rational()) {
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn mode_set_value_is_the_maximum(p in (2usize..=6).prop_flat_map(arb_prob_vector)) {
        let d = mode_set(&p);
        prop_assert!(!d.labels().is_empty());
        let max = p.probs().iter().max().unwrap();
        prop_assert_eq!(d.value(), max);
        for label in 1..=p.k() {
            prop_assert_eq!(d.labels().contains(&label), p.prob(label) == max);
        }
    }

    #[test]
    fn expected_loss_matches_a_reversed_summation(
        p in arb_prob_vector(4),
        rows in prop::collection::vec(prop::collection::vec(0i64..64, 4), 4),
    ) {
        let m = CostMatrix::new(
            rows.iter()
                .map(|r| r.iter().map(|&n| Rational::new(n.into(), 8.into())).collect())
                .collect(),
        ).unwrap();
        for label in 1..=4 {
            let forward = expected_loss(&m, label, &p).unwrap();
            let reverse: Rational = m.entries()[label - 1]
                .iter()
                .zip(p.probs())
                .rev()
                .map(|(c, q)| c * q)
                .sum();
            prop_assert_eq!(&forward, &reverse);
        }
    }
}

// Keep the canonical type in the public surface exercised from the outside.
#[test]
fn canonical_matrix_round_trips_through_json() {
    let mut rng = Rng::new(71);
    for _ in 0..20 {
        let canon: CanonicalCostMatrix =
            random_reasonable_matrix(&mut rng, 3).canonicalize().unwrap();
        let json = canon.to_json().to_string();
        let back = CostMatrix::from_json_str(&json).unwrap();
        assert_eq!(&back, canon.inner());
    }
}
