//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qgas_spin::lattice::{qfi_staggered, spin_correlation_map, structure_factor, LatticeGas};
use qgas_spin::moments::{collective_variances, witness_report, Axis};
use qgas_spin::number_resolved::bose_number_resolved;
use qgas_spin::occupancy::{build_occupation_table, GasParameters};
use qgas_spin::oracle::{compare_with_closed_form, sample_boson_ensemble, sample_fermion_ensemble};
use qgas_spin::rng::Lcg64;
use qgas_spin::spectra::SpectrumSetting;
use qgas_spin::sweep::{fermi_moments, find_threshold, singlet_point};
use qgas_spin::Error;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    out.detail.push_str(&format!("; {:.2}s", elapsed.as_secs_f64()));
    if let Some(limit) = limit {
        if elapsed > limit {
            out.passed = false;
            out.detail.push_str(&format!(" exceeds {}s", limit.as_secs()));
        }
    }
    out
}

fn gas_settings() -> [SpectrumSetting; 3] {
    [SpectrumSetting::default_grid(), SpectrumSetting::default_continuum(), SpectrumSetting::default_trap()]
}

fn freespace_threshold() -> Outcome {
    match find_threshold(&SpectrumSetting::default_continuum(), 0.0, (0.5, 2.0)) {
        Ok(t) => outcome((t - 1.12).abs() <= 0.02, format!("T*/mu = {t:.6} (target 1.12 +- 0.02)")),
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn grid_continuum_consistency() -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for t in [0.2, 0.5, 0.8, 1.0] {
        let grid = singlet_point(&SpectrumSetting::default_grid(), t, 0.0);
        let cont = singlet_point(&SpectrumSetting::default_continuum(), t, 0.0);
        match (grid, cont) {
            (Ok(g), Ok(c)) => {
                let d = (g.singlet_fraction() - c.singlet_fraction()).abs();
                worst = worst.max(d);
                parts.push(format!("T={t}: {:.5} vs {:.5}", g.singlet_fraction(), c.singlet_fraction()));
            }
            (g, c) => return outcome(false, format!("T={t}: {:?} / {:?}", g.err(), c.err())),
        }
    }
    outcome(worst < 0.01, format!("max |diff| = {worst:.2e} (< 0.01); {}", parts.join(", ")))
}

fn trap_threshold() -> Outcome {
    let setting = SpectrumSetting::default_trap();
    let threshold = match find_threshold(&setting, 0.0, (0.2, 0.6)) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let mean_n = match fermi_moments(&setting, 0.02, 0.0) {
        Ok((_, m)) => m.mean_n,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let ok_t = (threshold - 0.368).abs() <= 0.005;
    let ok_n = (9.0e3..=2.0e4).contains(&mean_n);
    outcome(
        ok_t && ok_n,
        format!("T*/mu = {threshold:.6} (0.368 +- 0.005); <N>(T=0.02) = {mean_n:.1} (in [9000, 20000])"),
    )
}

fn singlet_limit() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for setting in gas_settings() {
        match singlet_point(&setting, 1e-3, 0.0) {
            Ok(p) => {
                let worst = Axis::ALL.map(|a| p.moments.variance(a) / p.moments.mean_n).into_iter().fold(0.0, f64::max);
                let good = p.singlet_fraction() > 0.999 && worst < 1e-3;
                ok &= good;
                parts.push(format!(
                    "{}: f_s = {:.6}, max Var/N = {:.3e} [{}]",
                    setting.name(),
                    p.singlet_fraction(),
                    worst,
                    if good { "ok" } else { "fail" }
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{}: error {e}", setting.name()));
            }
        }
    }
    outcome(ok, format!("f_s > 0.999 and Var/N < 1e-3; {}", parts.join("; ")))
}

/// Draws a valid Bose parameter set for `setting`: `T` log-uniform in
/// `[0.05, 5]`, `H / T` uniform in `[-4, 4]`, majority-branch fugacity
/// uniform in `[0.01, 0.99]`.
fn sample_bose(rng: &mut Lcg64, setting: &SpectrumSetting) -> GasParameters {
    let t = rng.log_uniform(0.05, 5.0);
    let field = t * rng.uniform(-4.0, 4.0);
    let majority = rng.uniform(0.01, 0.99);
    let fugacity = majority * (-0.5 * field.abs() / t).exp();
    GasParameters::bose_from_fugacity(t, fugacity, field, setting.lowest_energy())
}

/// Inequalities are gated on the exact number-resolved evaluation in the
/// `N >= 2` sector. The mean-N report is evaluated too and its failures are
/// counted, but it is an approximation that breaks down when the particle
/// number distribution is broad.
fn bose_property_suite() -> Outcome {
    let mut rng = Lcg64::new(2024);
    let settings = gas_settings();
    let mut violations = Vec::new();
    let mut mean_n_failures = 0usize;
    let mut mean_n_only = 0usize;
    let mut widest_mean_n = 0.0f64;
    let mut redraws = 0usize;
    let mut tightest = f64::INFINITY;
    for i in 0..1000 {
        let setting = &settings[i % 3];
        let result = loop {
            let params = sample_bose(&mut rng, setting);
            let res = setting
                .model_for(params.chemical_potential, params.temperature, params.field)
                .and_then(|m| build_occupation_table(&m, &params))
                .and_then(|t| collective_variances(&t).map(|m| (t, m)));
            match res {
                Ok((_, m)) if m.mean_n <= 2.0 => redraws += 1,
                other => break other.map(|(t, m)| (params, t, m)),
            }
        };
        let checked = result.and_then(|(params, table, moments)| {
            let exact = match bose_number_resolved(&table) {
                Ok(nr) => Some(nr),
                Err(Error::Precondition(_)) => None,
                Err(e) => return Err(e),
            };
            let report = witness_report(&moments)?;
            // sqrt(Var N) / <N>, with Var N = sum w n (1 + n)
            let spread = table
                .rows
                .iter()
                .map(|r| r.weight * (r.up * r.up_complement + r.down * r.down_complement))
                .sum::<f64>()
                .sqrt()
                / moments.mean_n;
            Ok((params, moments, exact, report, spread))
        });
        let (params, moments, exact, report, spread) = match checked {
            Ok(v) => v,
            Err(e) => {
                violations.push(format!("#{i} {}: error {e}", setting.name()));
                continue;
            }
        };
        if !report.all_satisfied() {
            mean_n_failures += 1;
        }
        let quarter = Axis::ALL.iter().all(|&a| moments.variance(a) > moments.mean_n / 4.0);
        let checks = match &exact {
            Some(nr) => nr.sector.checks(),
            None => {
                // Too many particles for number resolution; the mean-N
                // replacement is then the evaluation of record.
                mean_n_only += 1;
                widest_mean_n = widest_mean_n.max(spread);
                report.checks()
            }
        };
        for chk in checks {
            tightest = tightest.min(chk.margin() / moments.mean_n);
        }
        if !checks.iter().all(|c| c.satisfied) || !quarter {
            let failed: Vec<String> = checks
                .iter()
                .filter(|c| !c.satisfied)
                .map(|c| format!("lhs {:.4e} < rhs {:.4e} ({:?})", c.lhs, c.rhs, c.axis))
                .collect();
            violations.push(format!(
                "#{i} {} T={:.3} H={:.3} mu={:.4} <N>={:.1} P={:.3}: {}{}",
                setting.name(),
                params.temperature,
                params.field,
                params.chemical_potential,
                moments.mean_n,
                moments.polarization,
                failed.join(", "),
                if quarter { "" } else { " Var <= N/4" }
            ));
        }
    }
    for v in violations.iter().take(5) {
        println!("    {v}");
    }
    outcome(
        violations.is_empty(),
        format!(
            "{} violations in 1000 sets ({redraws} redraws with <N> <= 2); {} exact, {mean_n_only} mean-N only; \
             min margin / <N> = {tightest:.3e}; mean-N evaluation alone flags {mean_n_failures}; \
             largest relative number spread among mean-N-only sets {widest_mean_n:.3}",
            violations.len(),
            1000 - mean_n_only
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = Lcg64::new(7);
    let mut worst_f = 0.0f64;
    let mut worst_b = 0.0f64;
    for _ in 0..100 {
        match compare_with_closed_form(&sample_fermion_ensemble(&mut rng, 4)) {
            Ok(c) => worst_f = worst_f.max(c.max_relative_error),
            Err(e) => return outcome(false, format!("fermion error: {e}")),
        }
    }
    for _ in 0..20 {
        match compare_with_closed_form(&sample_boson_ensemble(&mut rng, 2)) {
            Ok(c) => worst_b = worst_b.max(c.max_relative_error),
            Err(e) => return outcome(false, format!("boson error: {e}")),
        }
    }
    outcome(
        worst_f < 1e-10 && worst_b < 1e-6,
        format!("fermions max rel err {worst_f:.2e} (< 1e-10); bosons {worst_b:.2e} (< 1e-6)"),
    )
}

fn lattice_suite() -> Outcome {
    let gas = LatticeGas::half_filled_ground_state(32, 1.0);
    let map = match spin_correlation_map(&gas) {
        Ok(m) => m,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let sf = structure_factor(&map);
    let qfi = qfi_staggered(&sf);
    let l = 32usize;
    let onsite = map.onsite();
    let max_offsite = (0..l * l).filter(|&i| i != 0).map(|i| map.0.values[i]).fold(f64::NEG_INFINITY, f64::max);
    let nn = map.at(1, 0);
    let parseval = (sf.mean() - onsite).abs();
    let s00 = sf.at(0, 0);
    let argmax = sf.0.argmax();
    let spp = sf.staggered();
    let checks = [
        ((onsite - 0.125).abs() <= 1e-6, format!("onsite {onsite:.9}")),
        (max_offsite <= 0.0, format!("max offsite {max_offsite:.3e}")),
        ((nn + 0.0205).abs() <= 5e-4, format!("nn {nn:.6}")),
        (parseval <= 1e-10, format!("sum rule {parseval:.1e}")),
        (s00 <= 2.0 / l as f64, format!("S(0,0) {s00:.3e}")),
        (argmax == (l / 2, l / 2) && spp < 0.25, format!("argmax {argmax:?}, S(pi,pi) {spp:.6}")),
        (qfi.density < 1.0, format!("QFI density {:.6}", qfi.density)),
    ];
    let ok = checks.iter().all(|c| c.0);
    let detail: Vec<String> = checks.iter().map(|(p, d)| if *p { d.clone() } else { format!("{d} FAILED") }).collect();
    outcome(ok, detail.join(", "))
}

fn polarization_linearity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for setting in [SpectrumSetting::default_grid(), SpectrumSetting::default_continuum()] {
        let f0 = match singlet_point(&setting, 0.02, 0.0) {
            Ok(p) => p.singlet_fraction(),
            Err(e) => return outcome(false, format!("error: {e}")),
        };
        let mut worst = 0.0f64;
        for i in 0..=16 {
            let p = 0.05 * i as f64;
            match singlet_point(&setting, 0.02, p) {
                Ok(pt) => worst = worst.max((pt.singlet_fraction() - (1.0 - p) * f0).abs()),
                Err(e) => return outcome(false, format!("error at P={p}: {e}")),
            }
        }
        ok &= worst < 0.05;
        parts.push(format!("{}: max dev {worst:.4}", setting.name()));
    }
    outcome(ok, format!("P in [0, 0.8] step 0.05, bound 0.05; {}", parts.join(", ")))
}

fn cli_reproducibility() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, format!("tempdir: {e}")),
    };
    let runs: [(&str, &[&str]); 4] = [
        ("freespace", &["--set", "t_grid=0.2,0.6", "--set", "p_grid=0:0.5:3"]),
        ("trap", &["--set", "t_grid=0.1,0.3", "--set", "p_grid=0,0.4"]),
        ("validate", &["--set", "fermion_cases=10", "--set", "boson_cases=3", "--format", "json"]),
        ("lattice", &["--set", "lattice_size=16"]),
    ];
    let mut compared = 0;
    for (workflow, extra) in runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{workflow}_{rep}")).join("result.csv");
            let status = Command::new(env!("CARGO_BIN_EXE_qgas-spin"))
                .args(["--workflow", workflow, "--out"])
                .arg(&out)
                .args(extra)
                .output();
            match status {
                Ok(o) if o.status.success() => {}
                Ok(o) => return outcome(false, format!("{workflow}: exit {:?}", o.status.code())),
                Err(e) => return outcome(false, format!("{workflow}: {e}")),
            }
            let mut files: Vec<_> =
                std::fs::read_dir(out.parent().unwrap()).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            let contents: Vec<(String, Vec<u8>)> = files
                .iter()
                .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(f).unwrap()))
                .collect();
            outputs.push(contents);
        }
        // Output paths differ between reps and are echoed in the metadata.
        let strip = |files: &Vec<(String, Vec<u8>)>, rep: usize| -> Vec<(String, String)> {
            files
                .iter()
                .map(|(n, b)| (n.clone(), String::from_utf8_lossy(b).replace(&format!("{workflow}_{rep}"), "RUN")))
                .collect()
        };
        if strip(&outputs[0], 0) != strip(&outputs[1], 1) {
            return outcome(false, format!("{workflow}: outputs differ"));
        }
        compared += outputs[0].len();
    }
    outcome(true, format!("{compared} files identical across repeated runs"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Option<u64>, fn() -> Outcome); 9] = [
        ("free-space threshold", Some(10), freespace_threshold),
        ("grid/continuum consistency", Some(30), grid_continuum_consistency),
        ("trap threshold and particle number", Some(30), trap_threshold),
        ("singlet limit", None, singlet_limit),
        ("Bose property suite", Some(60), bose_property_suite),
        ("oracle equivalence", Some(120), oracle_equivalence),
        ("lattice half filling", Some(30), lattice_suite),
        ("low-T polarization linearity", None, polarization_linearity),
        ("CLI reproducibility", None, cli_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let out = timed(limit.map(Duration::from_secs), run);
        println!("{} {}. {name}: {}", if out.passed { "PASS" } else { "FAIL" }, i + 1, out.detail);
        if !out.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
