//! One line per acceptance criterion. Runs as a plain binary so the lines
//! show up in `cargo test` output; exits nonzero if any criterion fails.
//! Set OUTSPINE_SKIP_LARGE=1 to skip the rank-4 one-leaf build.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{brute_force_automorphisms, brute_force_catalog, PlainGraph};
use outspine::flow::{bent_tree_scene, check_collapsible, check_flow, check_profile, radial_star, FlowReport, TreeSpec};
use outspine::spine::{check_face_identity, BettiReport, SpinePlan};
use outspine::{
    automorphism_group, betti_numbers, build_spine_complex, enumerate_graphs, Executor, RankMode, SparseIntChainComplex,
    Workers,
};

struct Built {
    n: usize,
    s: usize,
    report: BettiReport,
    boundary_squared_zero: bool,
    face_identity: Result<usize, String>,
    connected: bool,
    elapsed: Duration,
    check_time: Duration,
}

fn build(n: usize, s: usize, exec: &Executor) -> Built {
    let start = Instant::now();
    let cat = enumerate_graphs(n, s).expect("catalog");
    let (plan, c): (SpinePlan, SparseIntChainComplex) = build_spine_complex(&cat, None, exec).expect("spine");
    let report = betti_numbers(&c, RankMode::Both, 3, exec);
    let elapsed = start.elapsed();
    let start = Instant::now();
    let boundary_squared_zero = c.check_boundary_squared().is_ok();
    let face_identity = check_face_identity(&plan, &c, exec).map_err(|e| format!("{e:?}"));
    let connected = c.is_connected();
    Built { n, s, report, boundary_squared_zero, face_identity, connected, elapsed, check_time: start.elapsed() }
}

fn acyclic(b: &[usize]) -> bool {
    b.first() == Some(&1) && b[1..].iter().all(|&x| x == 0)
}

struct Line {
    passed: bool,
}

fn line(id: u32, name: &str, passed: bool, elapsed: Duration, detail: String) -> Line {
    println!(
        "criterion {id} {name}: {} ({:.2}s) {detail}",
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    Line { passed }
}

fn main() {
    let exec = Executor::new(Workers::resolve(None));
    let mut lines = Vec::new();

    // 1
    let start = Instant::now();
    let mut ok = true;
    let mut counts = Vec::new();
    for (n, s, expected) in [(2, 0, 3), (1, 1, 1), (1, 0, 0)] {
        let cat = enumerate_graphs(n, s).expect("catalog");
        let ours: BTreeSet<_> = cat.graphs.iter().map(|g| PlainGraph::from_abstract(g).key()).collect();
        let oracle: BTreeSet<_> = brute_force_catalog(n, s).iter().map(PlainGraph::key).collect();
        ok &= cat.len() == expected && ours.len() == expected && ours == oracle;
        counts.push(format!("({n},{s})={}", cat.len()));
    }
    let el = start.elapsed();
    lines.push(line(1, "catalog correctness", ok && el < Duration::from_secs(1), el, counts.join(" ")));

    // 2
    let b20 = build(2, 0, &exec);
    let ok = b20.report.cells == [3, 2] && b20.report.betti == [1, 0] && b20.report.euler == 1 && b20.boundary_squared_zero;
    lines.push(line(
        2,
        "Out(F2) spine",
        ok && b20.elapsed < Duration::from_secs(1),
        b20.elapsed,
        format!("cells {:?} betti {:?} euler {}", b20.report.cells, b20.report.betti, b20.report.euler),
    ));

    // 3
    let b21 = build(2, 1, &exec);
    let b31 = build(3, 1, &exec);
    let ok = acyclic(&b21.report.betti)
        && acyclic(&b31.report.betti)
        && b21.elapsed < Duration::from_secs(5)
        && b31.elapsed < Duration::from_secs(300);
    lines.push(line(
        3,
        "Aut(F2), Aut(F3) acyclic",
        ok,
        b21.elapsed + b31.elapsed,
        format!("(2,1) betti {:?} in {:.2}s; (3,1) betti {:?} in {:.2}s", b21.report.betti, b21.elapsed.as_secs_f64(), b31.report.betti, b31.elapsed.as_secs_f64()),
    ));

    // 4
    let mut built = vec![b20, b21, b31, build(1, 1, &exec), build(3, 0, &exec), build(4, 0, &exec)];
    if std::env::var_os("OUTSPINE_SKIP_LARGE").is_some() {
        println!("criterion 4 H4(Aut(F4)) = Q: SKIP (OUTSPINE_SKIP_LARGE set)");
    } else {
        let b41 = build(4, 1, &exec);
        let b = &b41.report.betti;
        let ok = b.len() == 7 && b[0] == 1 && b[4] == 1 && (1..=6).filter(|&k| k != 4).all(|k| b[k] == 0);
        let in_budget = b41.elapsed <= Duration::from_secs(3600);
        let exact_dims: Vec<usize> = (0..b41.report.ranks.len()).filter(|&k| b41.report.ranks[k].exact).collect();
        lines.push(line(
            4,
            "H4(Aut(F4)) = Q",
            ok && in_budget,
            b41.elapsed,
            format!(
                "cells {:?} betti {:?}; exact ranks in dims {exact_dims:?}, others modular with {} primes agreeing: {}",
                b41.report.cells,
                b,
                3,
                b41.report.consistent
            ),
        ));
        built.push(b41);
    }

    // 5
    let mut failures = Vec::new();
    let mut two_cells = 0;
    for b in &built {
        let r = &b.report;
        let alt: i64 = r.betti.iter().enumerate().map(|(k, &x)| if k % 2 == 0 { x as i64 } else { -(x as i64) }).sum();
        let face = b.face_identity.as_ref().map(|&k| two_cells += k);
        if !(b.boundary_squared_zero && alt == r.euler && r.betti[0] == 1 && b.connected && face.is_ok() && r.consistent) {
            failures.push(format!("({},{})", b.n, b.s));
        }
    }
    let names: Vec<String> = built.iter().map(|b| format!("({},{})", b.n, b.s)).collect();
    lines.push(line(
        5,
        "structural invariants",
        failures.is_empty(),
        built.iter().map(|b| b.check_time).sum(),
        format!("complexes {} ; {two_cells} 2-cells face-checked; failing {:?}", names.join(" "), failures),
    ));

    // 6
    let mut checked = Vec::new();
    let mut ok = true;
    for b in built.iter().filter(|b| b.s == 1) {
        for (k, &x) in b.report.betti.iter().enumerate().skip(1) {
            if b.n > 2 * k + 1 {
                ok &= x == 0;
                checked.push(format!("b{k}(Aut(F{}))={x}", b.n));
            }
        }
    }
    lines.push(line(6, "stable-range vanishing", ok, Duration::ZERO, checked.join(" ")));

    // 7
    let start = Instant::now();
    let star = check_collapsible(&radial_star(3, 4.0, 41), &TreeSpec { vertices: vec![0], edges: vec![] }).expect("star scene");
    let (g, tree) = bent_tree_scene();
    let bent = check_collapsible(&g, &tree).expect("bent scene");
    let reports: Vec<FlowReport> = vec![check_flow(&star, 10), check_flow(&bent, 20)];
    let el = start.elapsed();
    let ok = reports.iter().all(|r| {
        r.radial_identity_error < 1e-9
            && r.identity_at_zero_error < 1e-12
            && r.radial_deviation < 1e-6
            && r.d_increasing
            && r.endpoint_matches_collapse
    });
    let r = &reports[1];
    lines.push(line(
        7,
        "flow invariants",
        ok && el < Duration::from_secs(10),
        el,
        format!(
            "|φ|-λ err {:.1e}, φ0 err {:.1e}, radial dev {:.1e}, d_t increasing {}, endpoint {}",
            r.radial_identity_error, r.identity_at_zero_error, r.radial_deviation, r.d_increasing, r.endpoint_matches_collapse
        ),
    ));

    // 8
    let start = Instant::now();
    let p = check_profile(10_000);
    let el = start.elapsed();
    lines.push(line(
        8,
        "λ profile compliance",
        p.passed() && el < Duration::from_secs(1),
        el,
        format!(
            "monotone {} positive off plateau {} λ'≤λ/r {} (worst excess {:.1e})",
            p.monotone, p.positive_off_plateau, p.derivative_bound, p.worst_excess
        ),
    ));

    // 9
    let start = Instant::now();
    let mut graphs = 0;
    let mut ok = true;
    for (n, s) in [(2, 0), (1, 1), (2, 1)] {
        for g in enumerate_graphs(n, s).expect("catalog").graphs {
            if g.half_edges().len() <= 12 {
                graphs += 1;
                ok &= automorphism_group(&g) == brute_force_automorphisms(&g);
            }
        }
    }
    let el = start.elapsed();
    lines.push(line(9, "automorphism oracle", ok && el < Duration::from_secs(10), el, format!("{graphs} graphs compared")));

    let failed = lines.iter().filter(|l| !l.passed).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
