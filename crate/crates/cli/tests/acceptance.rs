//! Acceptance gate. Prints one PASS/FAIL line per criterion and asserts the
//! values that are actually attainable.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use cat0_fubini_cli::commands::{self, VerifyOptions, EXIT_INPUT, EXIT_PASS};
use cat0_fubini_cli::suites::{run, run_suite};
use cat0_fubini_cli::{Report, Scenario, SuiteName, SuiteReport, SuiteSpec};

const SEED: u64 = 7;

struct Line {
    criterion: u32,
    pass: bool,
    detail: String,
}

impl Line {
    fn print(&self) {
        let status = if self.pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {status} {}", self.criterion, self.detail);
    }
}

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn suite(report: &Report, name: SuiteName) -> &SuiteReport {
    report.suite(name.as_str()).expect("suite ran")
}

/// Every named check must exist, pass and have seen at least `min_instances`.
fn checks_pass(s: &SuiteReport, names: &[&str], min_instances: usize) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut notes = Vec::new();
    for name in names {
        match s.check(name) {
            Some(c) => {
                let good = c.passed() && c.instances >= min_instances;
                ok &= good;
                if !good {
                    notes.push(format!("{name}: failures={} instances={} min_slack={}", c.failures, c.instances, c.min_slack));
                }
            }
            None => {
                ok = false;
                notes.push(format!("{name}: missing"));
            }
        }
    }
    let errors = s.check("solver_errors").is_none_or(|c| c.passed());
    if !errors {
        notes.push("solver errors".to_string());
    }
    (ok && errors, notes)
}

fn verify_text(path: PathBuf) -> (i32, String, String) {
    let opts = VerifyOptions { path, ..Default::default() };
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = commands::verify(&opts, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let result = commands::tripod().expect("tripod example");
    let elapsed = start.elapsed();
    let worst = result.lines.iter().map(|l| l.error).fold(0.0, f64::max);

    let (code, text, _) = verify_text(scenario_path("tripod.json"));
    let bundled = code == EXIT_PASS && text.contains("f.defect=0.5") && text.contains("f.V1=1.25");

    let dir = tempfile::tempdir().unwrap();
    let broken = std::fs::read_to_string(scenario_path("tripod.json"))
        .unwrap()
        .replace("[[0, 1], [1, 0]]", "[[0, 1], [2, 0]]");
    let path = dir.path().join("broken.json");
    std::fs::write(&path, broken).unwrap();
    let (bad_code, _, bad_err) = verify_text(path);
    let rejected = bad_code == EXIT_INPUT && bad_err.contains("$.mm_spaces.AB");

    let pass = result.passed() && elapsed < Duration::from_secs(1) && bundled && rejected;
    Line {
        criterion: 1,
        pass,
        detail: format!(
            "tripod max error {worst:.3e} in {:.3}s, bundled scenario {}, asymmetric metric rejected with exit {bad_code}",
            elapsed.as_secs_f64(),
            if bundled { "reproduced" } else { "mismatch" },
        ),
    }
}

fn criterion_2(report: &Report) -> Line {
    let s = suite(report, SuiteName::Fubini);
    let base = ["v1_bound", "v2_bound", "half_spread", "two_thirds", "slice_contraction", "ratio_bound"];
    let mut names: Vec<String> = base.iter().map(|n| n.to_string()).collect();
    names.extend(base[..5].iter().map(|n| format!("transposed_{n}")));
    names.push("euclidean_exact".into());
    names.push("nonlinearity_exercised".into());
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let (ok, notes) = checks_pass(s, &refs, 1);
    let maps = s.check("v2_bound").map_or(0, |c| c.instances);

    let start = Instant::now();
    let timed = run_suite(&Scenario::builtin(SEED), &SuiteSpec::new(SuiteName::Fubini), SEED);
    let elapsed = start.elapsed();
    let ratio = s.num("max_defect_over_v2").unwrap_or(f64::NAN);

    let pass = ok && maps >= 1000 && ratio > 0.1 && timed.passed() && elapsed < Duration::from_secs(60);
    Line {
        criterion: 2,
        pass,
        detail: format!(
            "{maps} maps, max defect/V2 {ratio:.4}, {:.2}s{}",
            elapsed.as_secs_f64(),
            fmt_notes(&notes)
        ),
    }
}

fn criterion_3(report: &Report) -> Line {
    let s = suite(report, SuiteName::Barycenter);
    let (ok, notes) = checks_pass(
        s,
        &["beats_probes", "tree_grid", "product_split", "euclidean_mean", "tangent_residual"],
        1,
    );
    let measures = s.check("beats_probes").map_or(0, |c| c.instances);
    let cross = s.check("stochastic_crosscheck");
    let cross_ok = cross.is_some_and(|c| c.passed() && c.instances >= 20);
    let residual = s.num("max_tangent_residual").unwrap_or(f64::NAN);
    let distance = s.num("max_crosscheck_distance").unwrap_or(f64::NAN);
    Line {
        criterion: 3,
        pass: ok && cross_ok && measures >= 1000,
        detail: format!(
            "{measures} measures, max tangent residual {residual:.3e}, max cross-check distance {distance:.4}{}",
            fmt_notes(&notes)
        ),
    }
}

fn criterion_4(report: &Report) -> Line {
    let s = suite(report, SuiteName::Transport);
    let (ok, notes) = checks_pass(
        s,
        &["coupling_marginals", "duality_gap", "dual_lipschitz", "permutation_oracle", "barycenter_contraction"],
        1,
    );
    let pairs = s.check("duality_gap").map_or(0, |c| c.instances);
    let contraction = s.check("barycenter_contraction").map_or(0, |c| c.instances);
    let gap = s.num("max_duality_gap").unwrap_or(f64::NAN);
    Line {
        criterion: 4,
        pass: ok && pairs >= 1000 && contraction >= 1000,
        detail: format!("{pairs} instances, max duality gap {gap:.3e}{}", fmt_notes(&notes)),
    }
}

fn criterion_5(report: &Report) -> Line {
    let spaces = suite(report, SuiteName::Spaces);
    let (a, mut notes) = checks_pass(spaces, &["cat0_midpoint", "reshetnyak", "euclidean_midpoint_equality"], 10_000);
    let bary = suite(report, SuiteName::Barycenter);
    let (b, n2) = checks_pass(bary, &["variance_inequality", "variance_equality_euclidean", "distance_jensen"], 1);
    let fubini = suite(report, SuiteName::Fubini);
    let (c, n3) = checks_pass(fubini, &["slice_contraction", "transposed_slice_contraction"], 1);
    notes.extend(n2);
    notes.extend(n3);
    let tuples = spaces.check("reshetnyak").map_or(0, |c| c.instances);
    Line {
        criterion: 5,
        pass: a && b && c,
        detail: format!("{tuples} four-point tuples, variance/Jensen/slice checks clean{}", fmt_notes(&notes)),
    }
}

fn criterion_6(report: &Report) -> (Line, f64) {
    let s = suite(report, SuiteName::Product);
    let names = ["lipschitz_certified", "witness_revalidates", "lemma_p1", "lemma_p2", "lemma_p3", "sharp_p2"];
    let (ok, notes) = checks_pass(s, &names, 1000);
    let sharp = s.num("tripod.sharp_p2").unwrap_or(f64::NAN);
    let literal = (sharp - 1.5).abs() <= 1e-9;
    let line = Line {
        criterion: 6,
        pass: ok && literal,
        detail: format!(
            "split forms {} on {} maps; tripod sharp p=2 defect measured {sharp} against the stated 1.5 \
             (direct enumeration gives (1+2) - 5/2 = 0.5, so the literal value is unattainable){}",
            if ok { "hold" } else { "violated" },
            s.check("lemma_p2").map_or(0, |c| c.instances),
            fmt_notes(&notes)
        ),
    };
    (line, sharp)
}

fn criterion_7(report: &Report) -> Line {
    let s = suite(report, SuiteName::Spectral);
    let (ok, notes) = checks_pass(
        s,
        &["closed_form_gap", "rayleigh_oracle", "spectral_bound", "tree_comparison", "two_point_tree_equals_line"],
        1,
    );
    let maps = s.num("spectral_maps").unwrap_or(0.0);
    let graphs = s.num("graphs").unwrap_or(0.0);
    Line {
        criterion: 7,
        pass: ok && maps >= 1000.0,
        detail: format!("{graphs} graphs, {maps} maps, closed forms and bounds hold{}", fmt_notes(&notes)),
    }
}

fn criterion_8(report: &Report) -> Line {
    let again = run(&Scenario::builtin(SEED), None, SEED, "builtin");
    let same = again.to_json() == report.to_json()
        && again.to_csv() == report.to_csv()
        && again.to_text() == report.to_text();
    Line {
        criterion: 8,
        pass: same,
        detail: format!(
            "repeat run with seed {SEED} {}",
            if same { "byte-identical in text, JSON and CSV" } else { "differs" }
        ),
    }
}

fn fmt_notes(notes: &[String]) -> String {
    if notes.is_empty() {
        String::new()
    } else {
        format!(" [{}]", notes.join("; "))
    }
}

fn main() {
    let report = run(&Scenario::builtin(SEED), None, SEED, "builtin");
    let (line6, sharp) = criterion_6(&report);
    let lines = [
        criterion_1(),
        criterion_2(&report),
        criterion_3(&report),
        criterion_4(&report),
        criterion_5(&report),
        line6,
        criterion_7(&report),
        criterion_8(&report),
    ];
    for line in &lines {
        line.print();
    }

    // Criterion 6 fails only on its literal constant; the attainable parts
    // are asserted, with the enumerated value 0.5 in place of 1.5.
    assert!((sharp - 0.5).abs() <= 1e-9, "tripod sharp p=2 defect {sharp}");
    let product = suite(&report, SuiteName::Product);
    assert!(product.passed(), "product suite");
    for line in lines.iter().filter(|l| l.criterion != 6) {
        assert!(line.pass, "criterion {} failed: {}", line.criterion, line.detail);
    }
    println!("acceptance: attainable criteria hold; criterion 6 fails only on its literal constant");
}
