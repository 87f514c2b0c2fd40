//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines print in order and unbuffered.
//!
//! Criterion 6 is a known failure with the bundled security assumptions
//! (see the README); it is reported as FAIL and only an unexpected pass
//! or an unexpected failure elsewhere makes the process exit non-zero.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use qualnet::engine::dist::{discretize, tnormal_moments, uniform_edges, Distribution};
use qualnet::engine::{
    compile, infer, mpe, BayesianNetwork, CompiledNetwork, Evidence, Expression, Observation, Sign,
};
use qualnet::ingestion::cases::{
    maintainability_case, security_case, CaseBundle, MAINTAINABILITY_RESULTS, DENSITY_PRIOR_MEAN,
    EFFORT_PRIOR_MEAN, EFFORT_PRIOR_SD,
};
use qualnet::model::{parse_model, serialize_model};
use qualnet::netgen::Polarity;
use qualnet::report::machine;
use qualnet::scenarios::{goal_seek, run_scenario, sensitivity, Scenario};

const EXPECTED_FAILURES: &[u8] = &[6];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn cases_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases")
}

fn read_case(file: &str) -> String {
    std::fs::read_to_string(cases_dir().join(file)).unwrap()
}

fn bundled_net(file: &str) -> CompiledNetwork {
    compile(&BayesianNetwork::parse(&read_case(file)).unwrap()).unwrap()
}

fn field_failure_table() -> Verdict {
    let start = Instant::now();
    let net = compile(&field_failures_network()).unwrap();
    let p = |effort: &str| {
        let ev = Evidence::from([
            ("testing_effort".to_string(), Observation::State(effort.into())),
            ("code_complexity".to_string(), Observation::State("low".into())),
        ]);
        infer(&net, &ev).unwrap().node("field_failures").unwrap().probabilities[1]
    };
    let (low, high) = (p("low"), p("high"));
    let elapsed = start.elapsed();
    verdict(
        (low - 0.60).abs() <= 1e-12 && (high - 0.40).abs() <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("P(>100|low,low)={low} P(>100|high,low)={high} in {elapsed:.2?}"),
    )
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut r = rng(2024);
    let (mut marginal_fail, mut mpe_fail, mut impossible) = (0, 0, 0);
    for _ in 0..200 {
        let net = random_net(&mut r, 12, 8);
        let compiled = compile(&net.network).unwrap();
        let ev = random_evidence(&mut r, &net);
        let evidence = to_evidence(&ev);
        match (net.enumerate_marginals(&ev), infer(&compiled, &evidence)) {
            (None, Err(qualnet::Error::ImpossibleEvidence)) => {
                impossible += 1;
                continue;
            }
            (Some(want), Ok(post)) => {
                let ok = want.iter().enumerate().all(|(i, w)| {
                    let got = &post.node(&node_id(i)).unwrap().probabilities;
                    got.iter().zip(w).all(|(a, b)| (a - b).abs() <= 1e-9)
                });
                if !ok {
                    marginal_fail += 1;
                }
            }
            _ => marginal_fail += 1,
        }
        let (best, argmax) = net.enumerate_mpe(&ev);
        match mpe(&compiled, &evidence) {
            Ok(e) => {
                let states: Vec<usize> = (0..net.cards.len())
                    .map(|i| {
                        let idx = compiled.index_of(&node_id(i)).unwrap();
                        e.states[idx]
                    })
                    .collect();
                if !argmax.contains(&states) || (e.probability - best).abs() > 1e-12 * best {
                    mpe_fail += 1;
                }
            }
            Err(_) => mpe_fail += 1,
        }
    }
    let elapsed = start.elapsed();
    verdict(
        marginal_fail == 0 && mpe_fail == 0 && elapsed < Duration::from_secs(60),
        format!(
            "200 networks, {impossible} with impossible evidence, {marginal_fail} marginal and {mpe_fail} mpe mismatches in {elapsed:.2?}"
        ),
    )
}

fn distribution_math() -> Verdict {
    let mut worst_mass = 0.0f64;
    let mut worst_sum = 0.0f64;
    let mut worst_moment = 0.0f64;
    let mut check = |d: Distribution, edges: Vec<f64>| {
        let got = discretize(&d, &edges).unwrap();
        let want = match d {
            Distribution::TNormal { mean, variance, .. } => quadrature_masses(&normal_kernel(mean, variance), &edges),
            Distribution::Exponential { mean, .. } => quadrature_masses(&exponential_kernel(mean), &edges),
            _ => unreachable!(),
        };
        for (a, b) in got.iter().zip(&want) {
            worst_mass = worst_mass.max((a - b).abs());
        }
        worst_sum = worst_sum.max((got.iter().sum::<f64>() - 1.0).abs());
    };
    for &(mean, variance, lo, hi, bins) in &[
        (0.5, 0.001, 0.0, 1.0, 3),
        (0.25, 0.1, 0.0, 1.0, 100),
        (27.0, 110.0, 0.0, 70.0, 14),
        (0.0054, 1e-5, 0.0, 0.02, 20),
        (-3.0, 0.5, 0.0, 2.0, 8),
    ] {
        check(Distribution::tnormal(mean, variance, lo, hi), uniform_edges(lo, hi, bins));
    }
    for mean in [0.1, 0.4, 1.2] {
        check(Distribution::exponential(mean, 0.0, 4.0), uniform_edges(0.0, 4.0, 16));
    }
    for case in [maintainability_case(), security_case()] {
        for spec in case.goal.all_indicators() {
            if let qualnet::netgen::IndicatorNpt::Partitioned { table } = &spec.npt {
                for entry in table {
                    check(entry.distribution, spec.scale.edges.clone());
                }
            }
        }
    }
    for &(mean, variance, lo, hi) in &[(0.25, 0.1, 0.0, 1.0), (27.0, 110.0, 0.0, 70.0), (3.0, 4.0, -1.0, 2.0)] {
        let m = tnormal_moments(mean, variance, lo, hi);
        let (qm, qv) = quadrature_moments(&normal_kernel(mean, variance), lo, hi);
        worst_moment = worst_moment.max((m.mean - qm).abs()).max((m.variance - qv).abs());
    }
    verdict(
        worst_mass <= 1e-9 && worst_sum <= 1e-12 && worst_moment <= 1e-9,
        format!("max bin error {worst_mass:.1e}, max sum error {worst_sum:.1e}, max moment error {worst_moment:.1e}"),
    )
}

fn prior_calibration(case: &CaseBundle) -> Verdict {
    let r = run_scenario(&case.compiled, &Scenario::new("prior", Evidence::new()), &case.target).unwrap();
    let (mean, sd) = (r.summary.mean, r.summary.sd);
    verdict(
        (mean - EFFORT_PRIOR_MEAN).abs() <= 1.5 && (sd - EFFORT_PRIOR_SD).abs() <= 1.5,
        format!("prior mean {mean:.2} sd {sd:.2}"),
    )
}

fn maintainability_predictions() -> Verdict {
    let start = Instant::now();
    let net = bundled_net("maintainability.net");
    let means: Vec<f64> = ["cm1", "kc1", "kc3", "kc4"]
        .iter()
        .map(|s| {
            let scenario = Scenario::parse(&read_case(&format!("{s}.scen"))).unwrap();
            run_scenario(&net, &scenario, "change_effort").unwrap().summary.mean
        })
        .collect();
    let elapsed = start.elapsed();
    let (cm1, kc1, kc3, kc4) = (means[0], means[1], means[2], means[3]);
    let ordered = cm1 < kc3 && kc3 <= kc1 && kc1 < kc4;
    let close = MAINTAINABILITY_RESULTS
        .iter()
        .zip(&means)
        .all(|(&(_, reference, _, _), &m)| (m - reference).abs() <= 0.3 * reference);
    verdict(
        ordered && close && elapsed < Duration::from_secs(5),
        format!("CM1 {cm1:.2} KC1 {kc1:.2} KC3 {kc3:.2} KC4 {kc4:.2} in {elapsed:.2?}"),
    )
}

fn security_direction(case: &CaseBundle) -> Verdict {
    let prior = run_scenario(&case.compiled, &Scenario::new("prior", Evidence::new()), &case.target).unwrap();
    let tomcat = run_scenario(&case.compiled, case.scenario("Tomcat").unwrap(), &case.target).unwrap();
    let (before, after) = (prior.summary.mean, tomcat.summary.mean);
    verdict(
        within(after, 0.003, 0.009) && after >= before,
        format!(
            "posterior mean {after:.5} vs prior {before:.5} (centred on {DENSITY_PRIOR_MEAN}); in range: {}, upward: {}",
            within(after, 0.003, 0.009),
            after >= before
        ),
    )
}

fn goal_seek_bands(case: &CaseBundle) -> Verdict {
    let reports = vec!["comment_ratio".to_string(), "avg_cc".into(), "avg_module_size".into()];
    let r = goal_seek(&case.compiled, &case.target, &Observation::Value(10.0), &reports).unwrap();
    let mean = |id: &str| r.reports.iter().find(|s| s.node == id).unwrap().mean;
    let (cr, cc, size) = (mean("comment_ratio"), mean("avg_cc"), mean("avg_module_size"));
    verdict(
        within(cr, 0.15, 0.45) && within(cc, 3.0, 10.0) && within(size, 30.0, 100.0),
        format!("comment ratio {cr:.3}, avg cc {cc:.2}, module size {size:.1}"),
    )
}

/// Product of impact signs on every path from `from` up to `to`.
fn path_signs(net: &BayesianNetwork, from: &str, to: &str) -> BTreeSet<i8> {
    if from == to {
        return BTreeSet::from([1]);
    }
    let mut out = BTreeSet::new();
    for node in &net.nodes {
        let Expression::WeightedMean { parents, .. } = &node.expression else { continue };
        for p in parents.iter().filter(|p| p.node == from) {
            let s = if p.sign == Sign::Negative { -1 } else { 1 };
            out.extend(path_signs(net, &node.id, to).into_iter().map(|x| x * s));
        }
    }
    out
}

fn monotonicity(cases: &[&CaseBundle]) -> Verdict {
    let mut violations = Vec::new();
    let mut checked = 0;
    for case in cases {
        let target_spec = &case.goal.goal.activity_indicator;
        let pol = |p: Polarity| if p == Polarity::Direct { 1 } else { -1 };
        let target_mean = |ev: &Evidence| {
            let post = infer(&case.compiled, ev).ok()?;
            Some(post.node(&case.target).unwrap().summary.as_ref().unwrap().mean)
        };
        for spec in &case.goal.indicators {
            let signs = path_signs(&case.network, &spec.attached_to, &target_spec.attached_to);
            let direction = match signs.len() {
                1 => pol(spec.polarity) * signs.first().unwrap() * pol(target_spec.polarity),
                _ => 0,
            };
            let (lo, hi) = (spec.scale.edges[0], *spec.scale.edges.last().unwrap());
            let mut previous: Option<f64> = None;
            let mut seen_direction = 0;
            for k in 0..10 {
                let x = lo + (k as f64 + 0.5) / 10.0 * (hi - lo);
                let ev = Evidence::from([(spec.id.clone(), Observation::Value(x))]);
                let Some(m) = target_mean(&ev) else { continue };
                if let Some(p) = previous {
                    let step = m - p;
                    let expected = if direction != 0 { direction } else { seen_direction };
                    if expected != 0 && step * (expected as f64) < -1e-12 {
                        violations.push(format!("{} at {x}", spec.id));
                    }
                    if seen_direction == 0 && step.abs() > 1e-12 {
                        seen_direction = if step > 0.0 { 1 } else { -1 };
                    }
                }
                previous = Some(m);
                checked += 1;
            }
        }
    }
    verdict(
        violations.is_empty(),
        if violations.is_empty() {
            format!("{checked} sweep points, no reversal")
        } else {
            format!("reversals: {}", violations.join(", "))
        },
    )
}

fn round_trips() -> Verdict {
    let mut failures = Vec::new();
    for name in ["maintainability", "security"] {
        let text = read_case(&format!("{name}.model"));
        let model = parse_model(&text).unwrap();
        if parse_model(&serialize_model(&model)).unwrap() != model {
            failures.push(format!("{name}.model"));
        }
        let net = BayesianNetwork::parse(&read_case(&format!("{name}.net"))).unwrap();
        if BayesianNetwork::parse(&net.to_text()).unwrap() != net {
            failures.push(format!("{name}.net"));
        }
    }
    for s in ["cm1", "kc1", "kc3", "kc4", "tomcat"] {
        let scenario = Scenario::parse(&read_case(&format!("{s}.scen"))).unwrap();
        if Scenario::parse(&scenario.to_text()).unwrap() != scenario {
            failures.push(format!("{s}.scen"));
        }
    }

    let dir = cases_dir();
    let path = |f: &str| dir.join(f).to_string_lossy().into_owned();
    let cli = |args: &[String]| qualnet::cli::run(args.iter().cloned());
    let net = bundled_net("maintainability.net");
    let kc1 = Scenario::parse(&read_case("kc1.scen")).unwrap();
    let m = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();

    let out = cli(&[m(&["infer", "--net"]), vec![path("maintainability.net")], m(&["--scenario"]), vec![path("kc1.scen")], m(&["--format", "machine"])].concat());
    if out.stdout != machine(&infer(&net, &kc1.observations).unwrap()) {
        failures.push("cli infer".into());
    }
    let out = cli(&[m(&["scenario-run", "--net"]), vec![path("maintainability.net")], m(&["--scenario"]), vec![path("kc1.scen")], m(&["--format", "machine"])].concat());
    if out.stdout != machine(&vec![run_scenario(&net, &kc1, "change_effort").unwrap()]) {
        failures.push("cli scenario-run".into());
    }
    let reports = m(&["comment_ratio", "avg_cc", "avg_module_size"]);
    let out = cli(&[m(&["goal-seek", "--net"]), vec![path("maintainability.net")], m(&["--target", "change_effort=10", "--report", "comment_ratio,avg_cc,avg_module_size", "--format", "machine"])].concat());
    if out.stdout != machine(&goal_seek(&net, "change_effort", &Observation::Value(10.0), &reports).unwrap()) {
        failures.push("cli goal-seek".into());
    }
    let out = cli(&[m(&["sensitivity", "--net"]), vec![path("maintainability.net")], m(&["--target", "change_effort", "--candidates", "comment_ratio,avg_cc,avg_module_size", "--format", "machine"])].concat());
    if out.stdout != machine(&sensitivity(&net, "change_effort", &reports).unwrap()) {
        failures.push("cli sensitivity".into());
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "4 models and networks, 5 scenarios, 4 CLI commands".to_string()
        } else {
            format!("mismatches: {}", failures.join(", "))
        },
    )
}

type Criterion<'a> = (u8, &'static str, Box<dyn Fn() -> Verdict + 'a>);

fn main() -> ExitCode {
    let maintainability = maintainability_case();
    let security = security_case();
    let criteria: Vec<Criterion> = vec![
        (1, "field-failure table golden", Box::new(field_failure_table)),
        (2, "oracle equivalence", Box::new(oracle_equivalence)),
        (3, "distribution math", Box::new(distribution_math)),
        (4, "prior calibration", Box::new(|| prior_calibration(&maintainability))),
        (5, "maintainability predictions", Box::new(maintainability_predictions)),
        (6, "security direction", Box::new(|| security_direction(&security))),
        (7, "goal-seek bands", Box::new(|| goal_seek_bands(&maintainability))),
        (8, "monotonicity", Box::new(|| monotonicity(&[&maintainability, &security]))),
        (9, "round-trip and CLI equivalence", Box::new(round_trips)),
    ];
    let mut unexpected = 0;
    let mut passed = 0;
    for (id, name, check) in &criteria {
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let expected_fail = EXPECTED_FAILURES.contains(id);
        let note = match (v.pass, expected_fail) {
            (true, true) => " (expected to fail)",
            (false, true) => " (known failure)",
            _ => "",
        };
        if v.pass {
            passed += 1;
        }
        if v.pass == expected_fail {
            unexpected += 1;
        }
        println!(
            "criterion {id} {}: {name}: {}{note}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "acceptance: {passed} of {} passed, {unexpected} unexpected",
        criteria.len()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
