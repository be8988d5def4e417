//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use chrkit::cli;
use chrkit::engine::{
    answers, check_preservation_lemma, check_replication_lemma, Answer, AnswerSet, Limits, PropagationMode,
    RuleApplications, SearchOptions, Verdict,
};
use chrkit::minsky::{
    check_no_halting_answer, compile_chr1, compile_chr1_sa, compile_multihead, corpus, machine_search, run_2cm,
    standard_goal, verify_sa_variant, verify_chr1_encoding, verify_multihead_encoding, MinskyMachine, Op, Register, RunOutcome, Target,
};
use chrkit::syntax::{head_arity_class, is_function_free, parse_goal, parse_program, Goal, Program};
use chrkit::terms::{FreshSupply, Term};
use chrkit::theory::{answers_equal, BuiltinAtom, BuiltinStore, TheoryKind};
use rand::Rng;
use common::{rng, small_limits, RandomChr1, LESSEQUAL, PRIMES};

const MAX_STEPS: u64 = 10_000;
const RANDOM_PROGRAMS: u64 = 120;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, budget: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < budget, format!("{what} took {:.2}s, budget {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()))
}

fn sorted_user_part(a: &Answer) -> Vec<String> {
    a.canonical_user_part()
}

fn run(program: &Program, goal: &str, opts: SearchOptions) -> Result<AnswerSet, String> {
    let g = parse_goal(goal).map_err(|e| e.to_string())?;
    answers(program, &g, opts).map_err(|e| e.to_string())
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let p = parse_program(PRIMES).map_err(|e| e.to_string())?;
    let r4 = run(&p, "upto(4)", SearchOptions::default())?;
    ensure(r4.exhausted, "upto(4) search truncated")?;
    ensure(r4.sa.is_empty(), format!("upto(4) has data sufficient answers: {:?}", r4.sa))?;
    let want4 = vec!["prime(2)".to_string(), "prime(3)".to_string()];
    let qa4: Vec<Vec<String>> = r4.qa.iter().map(sorted_user_part).collect();
    ensure(qa4.contains(&want4), format!("upto(4) answers {qa4:?}"))?;
    let t4 = started.elapsed();
    within(t4, Duration::from_secs(5), "upto(4)")?;

    let started = Instant::now();
    let r10 = run(&p, "upto(10)", SearchOptions::default())?;
    let want10: Vec<String> = [2, 3, 5, 7].iter().map(|k| format!("prime({k})")).collect();
    let qa10: Vec<Vec<String>> = r10.qa.iter().map(sorted_user_part).collect();
    ensure(qa10.contains(&want10), format!("upto(10) answers {qa10:?}"))?;
    let t10 = started.elapsed();
    within(t10, Duration::from_secs(5), "upto(10)")?;
    Ok(format!(
        "upto(4) -> {{prime(3), prime(2)}}, no SA ({:.3}s); upto(10) -> primes 2,3,5,7 ({:.3}s)",
        t4.as_secs_f64(),
        t10.as_secs_f64()
    ))
}

fn criterion_2() -> Outcome {
    let p = parse_program(LESSEQUAL).map_err(|e| e.to_string())?;
    let goal = "leq(A,B), leq(B,C), leq(C,A)";
    // Transitivity re-derives duplicates forever even under token
    // propagation, so this search is bounded by depth, not exhausted.
    let token = SearchOptions::new(PropagationMode::Token, Limits { max_depth: 12, ..Limits::default() });
    let started = Instant::now();
    let r = run(&p, goal, token)?;
    let elapsed = started.elapsed();
    within(elapsed, Duration::from_secs(5), "token search")?;
    let v = |n: &str| Term::var(n);
    let cyc = [BuiltinAtom::eq(v("A"), v("B")), BuiltinAtom::eq(v("B"), v("C")), BuiltinAtom::eq(v("C"), v("A"))];
    let store = BuiltinStore::new(TheoryKind::Equality).tell_all(&cyc).map_err(|e| e.to_string())?;
    let vars: BTreeSet<_> = ["A", "B", "C"].iter().map(|s| (*s).into()).collect();
    let expected = store.project(&vars);
    ensure(
        r.sa.iter().any(|a| answers_equal(&a.builtin_part, &expected)),
        format!("no SA equivalent to A=B, B=C, C=A among {:?}", r.sa.iter().map(|a| a.to_string()).collect::<Vec<_>>()),
    )?;

    let naive = SearchOptions::new(PropagationMode::Naive, Limits { max_depth: 25, max_configs: 2_000, ..Limits::default() });
    let rn = run(&p, goal, naive)?;
    ensure(rn.truncation.depth, "naive search did not reach the depth limit")?;
    let path = std::env::temp_dir().join(format!("chrkit-acceptance-{}.chr", std::process::id()));
    std::fs::write(&path, LESSEQUAL).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(
        ["chrkit", "answers", path.to_str().unwrap(), goal, "--propagation", "naive", "--max-depth", "25", "--max-configs", "2000"],
        &mut out,
        &mut err,
    );
    let _ = std::fs::remove_file(&path);
    ensure(code == cli::EXIT_TRUNCATED, format!("naive CLI run exited {code}"))?;
    Ok(format!(
        "token: SA {} found in {:.3}s ({} configs, depth-bounded); naive: depth limit hit, CLI exit 2",
        expected,
        elapsed.as_secs_f64(),
        r.configs_explored
    ))
}

fn corpus_run(check: impl Fn(&MinskyMachine) -> Result<Verdict, String>, target: Target) -> Outcome {
    let started = Instant::now();
    let machines = corpus::standard();
    let mut halting = 0;
    let mut diverging = 0;
    for (name, m, expected) in &machines {
        let oracle = run_2cm(m, MAX_STEPS);
        match (oracle, expected) {
            (RunOutcome::Halted { r1, .. }, Some(k)) => {
                ensure(r1 == *k, format!("{name}: oracle says {r1}, corpus says {k}"))?;
                let v = check(m)?;
                ensure(v.is_pass(), format!("{name}: {v}"))?;
                halting += 1;
            }
            (RunOutcome::Diverged, None) => {
                let limits = Limits { max_depth: 2_000, ..Limits::default() };
                let v = check_no_halting_answer(m, target, MAX_STEPS, machine_search(limits)).map_err(|e| e.to_string())?;
                ensure(v.is_pass(), format!("{name}: {v}"))?;
                diverging += 1;
            }
            (got, want) => return Err(format!("{name}: oracle {got:?}, corpus expects {want:?}")),
        }
    }
    let elapsed = started.elapsed();
    within(elapsed, Duration::from_secs(60), "corpus")?;
    ensure(machines.len() >= 10, "corpus too small")?;
    Ok(format!("{halting} halting + {diverging} diverging machines agree with the oracle ({:.2}s)", elapsed.as_secs_f64()))
}

fn criterion_3() -> Outcome {
    let opts = machine_search(Limits::default());
    corpus_run(
        |m| {
            let v = verify_chr1_encoding(m, MAX_STEPS, opts).map_err(|e| e.to_string())?;
            let sa = verify_sa_variant(m, MAX_STEPS, opts).map_err(|e| e.to_string())?;
            Ok(if v.is_pass() { sa } else { v })
        },
        Target::Chr1,
    )
}

fn criterion_4() -> Outcome {
    let opts = machine_search(Limits::default());
    corpus_run(|m| verify_multihead_encoding(m, MAX_STEPS, opts).map_err(|e| e.to_string()), Target::ChrMulti)
}

fn criterion_5() -> Outcome {
    let mut machines = vec![corpus::standard().into_iter().find(|(n, ..)| n == "jump_on_zero").unwrap().1];
    for l in 1..=3 {
        for tail in [vec![Op::Halt, Op::Halt], vec![Op::Succ(Register::R1), Op::Halt], vec![Op::Succ(Register::R2), Op::Halt]] {
            let mut ops = vec![Op::DecJump(Register::R1, l)];
            ops.extend(tail);
            machines.push(MinskyMachine::new(ops).map_err(|e| e.to_string())?);
        }
    }
    let goal = parse_goal("i(p1,X,0)").map_err(|e| e.to_string())?;
    for m in &machines {
        let p = compile_chr1(m);
        let r = answers(&p, &goal, machine_search(Limits::default())).map_err(|e| e.to_string())?;
        let qa: Vec<String> = r.qa.iter().map(|a| a.to_string()).collect();
        ensure(r.exhausted && qa == ["QA: i(p1,X,0) ; true"], format!("{}: answers {qa:?}", m.to_string().trim()))?;
        ensure(r.configs_explored == 1, "a rule was applied to the stuck goal")?;
        let mut config = chrkit::engine::Configuration::initial(&goal, TheoryKind::Equality);
        let supply = FreshSupply::new();
        let introduced = chrkit::engine::successors(&config, &p, PropagationMode::Token, &supply).map_err(|e| e.to_string())?;
        config = introduced.into_iter().next().ok_or("no introduce step")?;
        ensure(RuleApplications::new(config, &p, PropagationMode::Token, &supply).next().is_none(), "rule applicable")?;
    }
    Ok(format!("{} DecJump(r1)-at-p1 programs leave i(p1,X,0) untouched", machines.len()))
}

fn criterion_6() -> Outcome {
    let p = parse_program("r @ h, h <=> true | k.").map_err(|e| e.to_string())?;
    let qa = |g: &str| -> Result<Vec<String>, String> {
        Ok(run(&p, g, SearchOptions::default())?.qa.iter().map(|a| a.to_string()).collect())
    };
    ensure(qa("h, h")? == ["QA: k ; true"], "goal (h,h)")?;
    ensure(qa("h")? == ["QA: h ; true"], "goal (h)")?;

    let mut rng = rng(0x5eed_0006);
    let (mut pass, mut inconclusive) = (0, 0);
    for i in 0..RANDOM_PROGRAMS {
        let gen = RandomChr1::new(&mut rng);
        let prog = gen.program(&mut rng);
        let g = gen.user_goal(&mut rng, 1);
        let n = rng.random_range(1..=2);
        let h = gen.user_goal(&mut rng, n);
        let c: Vec<BuiltinAtom> = if i % 3 == 0 {
            vec![BuiltinAtom::eq(Term::var("A"), Term::constant("a"))]
        } else {
            Vec::new()
        };
        for v in [
            check_replication_lemma(&prog, &g, small_limits()).map_err(|e| e.to_string())?,
            check_preservation_lemma(&prog, &c, &g, &h, small_limits()).map_err(|e| e.to_string())?,
        ] {
            match v {
                Verdict::Pass => pass += 1,
                Verdict::Inconclusive(_) => inconclusive += 1,
                Verdict::Fail(why) => return Err(format!("counterexample in\n{prog}goal {g} / {h}: {why}")),
            }
        }
    }
    Ok(format!(
        "(h,h) -> k, (h) -> h; {RANDOM_PROGRAMS} random CHR_1 programs: {pass} checks passed, {inconclusive} truncated, 0 counterexamples"
    ))
}

fn sa_subset_of_qa(r: &AnswerSet) -> bool {
    r.sa.iter().all(|s| r.qa.iter().any(|q| q.user_part.is_empty() && answers_equal(&q.builtin_part, &s.builtin_part)))
}

fn criterion_7() -> Outcome {
    let mut checked = 0;
    let mut with_sa = 0;
    let primes = parse_program(PRIMES).map_err(|e| e.to_string())?;
    let leq = parse_program(LESSEQUAL).map_err(|e| e.to_string())?;
    let mult = parse_program("r @ h, h <=> true | k.").map_err(|e| e.to_string())?;
    let bounded = SearchOptions::new(PropagationMode::Token, Limits { max_depth: 12, ..Limits::default() });
    let mut golden: Vec<(Program, Goal, SearchOptions)> = vec![
        (primes.clone(), parse_goal("upto(1)").unwrap(), SearchOptions::default()),
        (primes.clone(), parse_goal("upto(4)").unwrap(), SearchOptions::default()),
        (primes, parse_goal("upto(10)").unwrap(), SearchOptions::default()),
        (leq.clone(), parse_goal("leq(A,B), leq(B,C), leq(C,A)").unwrap(), bounded),
        (leq, parse_goal("leq(A,B), leq(B,A)").unwrap(), bounded),
        (mult.clone(), parse_goal("h, h").unwrap(), SearchOptions::default()),
        (mult, parse_goal("h").unwrap(), SearchOptions::default()),
    ];
    for (_, m, expected) in corpus::standard() {
        if expected.is_some() {
            let opts = machine_search(Limits::default());
            golden.push((compile_chr1(&m), standard_goal(Target::Chr1), opts));
            golden.push((compile_chr1_sa(&m), standard_goal(Target::Chr1Sa), opts));
            golden.push((compile_multihead(&m), standard_goal(Target::ChrMulti), opts));
        }
    }
    for (p, g, opts) in &golden {
        let r = answers(p, g, *opts).map_err(|e| e.to_string())?;
        ensure(sa_subset_of_qa(&r), format!("SA not contained in QA for {g} in\n{p}"))?;
        checked += 1;
        with_sa += usize::from(!r.sa.is_empty());
    }
    let mut rng = rng(0x5eed_0007);
    for _ in 0..RANDOM_PROGRAMS {
        let (p, gen) = common::random_program(&mut rng);
        let n = rng.random_range(1..=3);
        let g = gen.goal(&mut rng, n);
        let r = answers(&p, &g, small_limits()).map_err(|e| e.to_string())?;
        ensure(sa_subset_of_qa(&r), format!("SA not contained in QA for {g} in\n{p}"))?;
        checked += 1;
        with_sa += usize::from(!r.sa.is_empty());
    }
    Ok(format!("{checked} program/goal pairs ({} golden, {RANDOM_PROGRAMS} random), {with_sa} with SA answers", golden.len()))
}

fn criterion_8() -> Outcome {
    let mut count = 0;
    for (name, m, _) in corpus::standard() {
        let single = compile_chr1(&m);
        ensure(head_arity_class(&single) == 1, format!("{name}: compile_chr1 not single-headed"))?;
        let multi = compile_multihead(&m);
        let has_decjump = m.ops().iter().any(|op| matches!(op, Op::DecJump(..)));
        let want = if has_decjump { 2 } else { 1 };
        ensure(head_arity_class(&multi) == want, format!("{name}: compile_multihead head arity {}", head_arity_class(&multi)))?;
        ensure(is_function_free(&multi, &standard_goal(Target::ChrMulti)), format!("{name}: not function-free"))?;
        ensure(!is_function_free(&single, &standard_goal(Target::Chr1)) || single.rules.is_empty(), format!("{name}: succ/1 missed"))?;
        count += 1;
    }
    let leq = parse_program(LESSEQUAL).map_err(|e| e.to_string())?;
    ensure(head_arity_class(&leq) == 2, "lessequal program not head arity 2")?;
    Ok(format!(
        "{count} machines: CHR_1 output arity 1; multi-headed output arity 2 (1 without decjump) and function-free; lessequal arity 2"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("primes example", criterion_1),
        ("lessequal example", criterion_2),
        ("single-headed encoding vs oracle", criterion_3),
        ("multi-headed encoding vs oracle", criterion_4),
        ("matching, not unification", criterion_5),
        ("replication and preservation lemmas", criterion_6),
        ("SA contained in QA", criterion_7),
        ("dialect classifiers", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} [{name}]: PASS - {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL - {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
