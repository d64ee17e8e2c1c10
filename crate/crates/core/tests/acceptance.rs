//! Acceptance checks, one line of output per criterion.

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use freewords::extensions::{algebraic_extensions, algebraic_keys, ExtensionConfig, Pi};
use freewords::measures::*;
use freewords::mobius::*;
use freewords::perm_powers::*;
use freewords::stallings::{CoreGraph, PreGraph};
use freewords::words::{enumerate_whitehead_moves, parse, Letter, Word};
use freewords::Error;
use num::{BigInt, BigRational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<(), String>;

fn w(s: &str) -> Word {
    parse(s, None).unwrap()
}

fn w2(s: &str) -> Word {
    parse(s, Some(2)).unwrap()
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exact_trace_of_x3y2() -> Check {
    for n in 3..=6 {
        let got = trw_exact(&w("x^3y^2"), n, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let want = q(1, 1) + q(1, n as i64 - 1);
        ensure(got == want, || format!("N = {n}: got {got}, want {want}"))?;
    }
    Ok(())
}

fn primitive_words_are_flat() -> Check {
    for s in ["x", "xy", "yX"] {
        for n in 1..=6 {
            let got = trw_exact(&w(s), n, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
            ensure(got == q(1, 1), || format!("{s} at N = {n}: {got}"))?;
        }
    }
    Ok(())
}

fn cycle_moments() -> Check {
    let cases: [(usize, usize, std::ops::RangeInclusive<usize>); 5] =
        [(1, 1, 2..=9), (1, 2, 4..=9), (2, 2, 8..=9), (1, 3, 6..=9), (3, 3, 9..=9)];
    let mut mismatches = Vec::new();
    for (b, t, ns) in cases {
        for n in ns {
            let m = moments_exact(b, t, n, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
            let want = (q(1, t as i64), q(b as i64, t as i64) + q(1, (t * t) as i64));
            if (m.first.clone(), m.second.clone()) != want {
                let note = if m.second_in_range { "" } else { ", N < 2bt" };
                mismatches.push(format!(
                    "b={b} t={t} N={n}: exact ({}, {}), formula ({}, {}){note}",
                    m.first, m.second, want.0, want.1
                ));
            }
        }
    }
    ensure(mismatches.is_empty(), || mismatches.join("; "))
}

fn power_criterion_and_roots() -> Check {
    for n in 1..=7 {
        let all = all_permutations(n);
        for d in 2..=6u64 {
            let powers: HashSet<Permutation> = all.iter().map(|t| t.power(d as i64)).collect();
            for s in &all {
                let criterion = is_dth_power(s, d);
                ensure(criterion == powers.contains(s), || format!("{s} in S_{n}, d = {d}"))?;
                match dth_root(s, d) {
                    Some(root) => ensure(root.power(d as i64) == *s, || format!("root of {s}, d = {d}"))?,
                    None => ensure(!criterion, || format!("no root returned for {s}, d = {d}"))?,
                }
            }
        }
    }
    Ok(())
}

fn expansion_equals_direct_enumeration() -> Check {
    let cfg = MobiusConfig::default();
    let corpus: [&[&str]; 5] = [&["x"], &["x^2"], &["x^3"], &["[x,y]"], &["x^2", "xy"]];
    for gens in corpus {
        let words: Vec<Word> = gens.iter().map(|s| w2(s)).collect();
        let h = CoreGraph::from_generators(&words, 2);
        for n in 3..=5 {
            let via = phi_via_expansion(&h, 2, n, &cfg).map_err(|e| e.to_string())?;
            let direct = phi_exact(&words, 2, n, cfg.budget).map_err(|e| e.to_string())?;
            ensure(via == direct, || format!("{gens:?} at N = {n}: {via} vs {direct}"))?;
        }
    }
    Ok(())
}

fn commutator_expansion() -> Check {
    let cfg = MobiusConfig::default();
    let rep = fit_expansion(&w("[x,y]"), &[4, 5, 6, 7], &cfg).map_err(|e| e.to_string())?;
    ensure(rep.fit.pi_estimate == Pi::Finite(2), || format!("pi estimate {}", rep.fit.pi_estimate))?;
    ensure((rep.fit.c_estimate - 1.0).abs() <= 0.2, || format!("C estimate {}", rep.fit.c_estimate))?;
    let h = CoreGraph::from_generators(&[w2("[x,y]")], 2);
    let poset = algebraic_extensions(&h, &ExtensionConfig::default()).map_err(|e| e.to_string())?;
    let want: BTreeSet<Vec<u8>> =
        [h.canonical_key().to_vec(), CoreGraph::rose(2).canonical_key().to_vec()].into_iter().collect();
    ensure(algebraic_keys(&poset) == want, || "algebraic extensions differ from {H, F_2}".into())?;
    ensure(rep.combinatorial == (Pi::Finite(2), 1), || format!("combinatorial {:?}", rep.combinatorial))
}

fn trace_comparison_instance() -> Check {
    let cfg = MobiusConfig::default();
    let rep = check_theorem_1_4(&w("[x,y]"), &[w("a^2"), w("b")], &[5, 6, 7], &cfg).map_err(|e| e.to_string())?;
    ensure(rep.all_strict && rep.rows.len() == 3, || format!("rows {:?}", rep.rows))?;
    for k in 2..=4 {
        let images = [w(&format!("a^{k}")), w("b")];
        match check_theorem_1_4(&w("xy"), &images, &[5], &cfg) {
            Err(Error::Hypothesis { name: "w algebraic in F_k", .. }) => {}
            other => return Err(format!("xy with a^{k}: {other:?}")),
        }
    }
    Ok(())
}

fn power_gap() -> Check {
    for d in 2..=4u64 {
        let ns: Vec<usize> = (d as usize..=7).collect();
        let rep = check_power_gap(&w("x"), d, &ns, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let target = BigRational::from_integer(BigInt::from(divisor_count(d) - 1));
        for row in &rep.rows {
            ensure(row.lhs == target, || format!("d = {d}, N = {}: {}", row.n, row.lhs))?;
        }
    }
    Ok(())
}

fn measure_comparisons() -> Check {
    for n in 2..=5 {
        let g = FiniteGroupTable::symmetric(n).map_err(|e| e.to_string())?;
        let v = compare_measures(&w("[x,y]"), &w("xyxY"), &g, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        ensure(v == MeasureComparison::Equal, || format!("S_{n}: {v:?}"))?;
    }
    let s3 = FiniteGroupTable::symmetric(3).map_err(|e| e.to_string())?;
    match compare_measures(&w("x"), &w("x^2"), &s3, DEFAULT_BUDGET).map_err(|e| e.to_string())? {
        MeasureComparison::Unequal { class, first, second } if class == "2+1" => {
            ensure(first == q(1, 2) && second == q(0, 1), || format!("probabilities {first}, {second}"))
        }
        other => Err(format!("x vs x^2 on S_3: {other:?}")),
    }
}

fn random_word(rng: &mut ChaCha8Rng, rank: usize, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len);
    Word::from_letters(rank, (0..len).map(|_| Letter::from_slot(rng.gen_range(0..2 * rank)))).unwrap()
}

fn property_suites() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // fold confluence
    for graph in 0..50 {
        let rank = rng.gen_range(1..=3);
        let mut pre = PreGraph::new(rank);
        for _ in 0..rng.gen_range(1..=4) {
            pre.add_loop(&random_word(&mut rng, rank, 8));
        }
        let reference = pre.fold();
        for _ in 0..10 {
            let mut choose = |k: usize| rng.gen_range(0..k);
            let g = pre.fold_stepwise(&mut choose);
            ensure(g.canonical_key() == reference.canonical_key(), || format!("fold order changed graph {graph}"))?;
        }
    }
    // invariance under automorphisms
    let moves = enumerate_whitehead_moves(2);
    for _ in 0..20 {
        let u = random_word(&mut rng, 2, 8);
        let m = &moves[rng.gen_range(0..moves.len())];
        let v = m.apply(&u).map_err(|e| e.to_string())?;
        for n in 1..=5 {
            let a = trw_exact(&u, n, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
            let b = trw_exact(&v, n, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{u} vs {v} at N = {n}"))?;
        }
    }
    // worker-count independence
    let csv = |threads: usize| -> std::result::Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| {
            let rows: Vec<(usize, BigRational)> = (1..=6)
                .map(|n| Ok((n, trw_exact(&w("x^3y^2"), n, DEFAULT_BUDGET)?)))
                .collect::<freewords::Result<_>>()
                .map_err(|e| e.to_string())?;
            let table = word_measure_exact(&w("[x,y]"), &FiniteGroupTable::symmetric(4).unwrap(), DEFAULT_BUDGET)
                .map_err(|e| e.to_string())?;
            Ok(exact_csv(&rows) + &table.to_csv())
        })
    };
    ensure(csv(1)? == csv(4)?, || "CSV output depends on the worker count".into())?;
    // Monte Carlo against exact values, three strikes per case
    for (s, n) in [("x", 5), ("x^2", 5), ("[x,y]", 5), ("x^3y^2", 5)] {
        let exact = to_f64(&trw_exact(&w(s), n, DEFAULT_BUDGET).map_err(|e| e.to_string())?);
        let ok = (0..3u64).any(|seed| {
            let mc = trw_monte_carlo(&w(s), n, 200_000, seed).unwrap();
            (mc.estimate - exact).abs() < 5.0 * mc.standard_error
        });
        ensure(ok, || format!("Monte Carlo misses Tr_{s}({n}) on three seeds"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 10] = [
        ("exact Tr of x^3y^2 is 1 + 1/(N-1), N = 3..6", exact_trace_of_x3y2),
        ("Tr of x, xy, yx^-1 is 1, N = 1..6", primitive_words_are_flat),
        ("moments of c_t(sigma^b) are 1/t and b/t + 1/t^2", cycle_moments),
        ("d-th power criterion matches root search, N <= 7, d = 2..6", power_criterion_and_roots),
        ("Phi via the derivation equals direct enumeration, N = 3..5", expansion_equals_direct_enumeration),
        ("[x,y]: fitted pi = 2, |C - 1| <= 0.2, extensions {H, F_2}", commutator_expansion),
        ("Tr_[x,y] < Tr_[a^2,b] at N = 5..7; xy rejected", trace_comparison_instance),
        ("Tr_{x^d} - Tr_x = delta(d) - 1, d = 2..4", power_gap),
        ("[x,y] and xyxY agree on S_2..S_5; x vs x^2 split on S_3", measure_comparisons),
        ("confluence, invariance, determinism, Monte Carlo", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {:>2}: PASS  {name} ({secs:.2}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} ({secs:.2}s): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
