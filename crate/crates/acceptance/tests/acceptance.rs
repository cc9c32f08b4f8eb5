//! Acceptance run: one PASS/FAIL line per criterion, details indented below.
//!
//! Pass a criterion number or a word of its title to run a subset, e.g.
//! `cargo test -p cevsim-acceptance --test acceptance -- 6`.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use cevsim::asset::{ijk_step, log_euler_step, SvParams};
use cevsim::cli::{self, ExperimentConfig};
use cevsim::harness::{self, ErrorEstimate, McPlan};
use cevsim::paths::{self, BrownianLattice, Driver, NormalStream, PathKey};
use cevsim::schemes::{self, AlfEquation, StepInput};
use cevsim::{CevParams, SchemeConfig, SchemeId};
use cevsim_acceptance::*;

const SEED: u64 = 20_140_601;
const M: u32 = 100;
const L: u32 = 100;

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("     {line}"));
    }
}

fn plan() -> McPlan {
    McPlan::new(M, L, SEED).unwrap()
}

fn bench() -> CevParams {
    CevParams::benchmark()
}

fn dt_of(level: u32) -> f64 {
    1.0 / (1u64 << level) as f64
}

fn positive_configs() -> Vec<(String, SchemeConfig)> {
    let sd = SchemeConfig::of(SchemeId::Sd);
    vec![
        ("SD(theta=0)".into(), sd.with_theta(0.0).unwrap()),
        ("SD(theta=1/2)".into(), sd.with_theta(0.5).unwrap()),
        ("SD(theta=1)".into(), sd.with_theta(1.0).unwrap()),
        ("HAL".into(), SchemeConfig::of(SchemeId::Hal)),
        ("ALF".into(), SchemeConfig::of(SchemeId::Alf)),
        ("BIM".into(), SchemeConfig::of(SchemeId::Bim)),
        ("BMM(Theta=1/2)".into(), SchemeConfig::of(SchemeId::Bmm).with_big_theta(0.5).unwrap()),
    ]
}

fn positivity() -> Outcome {
    let mut out = Outcome::new();
    let p = bench();
    for (name, config) in positive_configs() {
        let start = Instant::now();
        let (mut negative, mut clamps, mut min_state, mut paths) = (0, 0, f64::INFINITY, 0);
        for level in 5..=13 {
            let s = harness::negativity_stats(&p, &config, level, &plan()).unwrap();
            negative += s.negative_paths;
            clamps += s.clamp_total;
            min_state = min_state.min(s.min_state);
            paths += s.paths;
        }
        out.check(
            negative == 0 && clamps == 0,
            format!(
                "{name}: {negative} negative paths, {clamps} clamps over {paths} paths at dt = 2^-5..2^-13, min state {min_state:.3e} ({:.1} s)",
                start.elapsed().as_secs_f64()
            ),
        );
    }
    out
}

fn finite_life_time() -> Outcome {
    let mut out = Outcome::new();
    let p = bench();
    let c = SchemeConfig::of(SchemeId::Em);
    let v = schemes::em_step(&StepInput {
        y: 0.0625,
        dt: dt_of(5),
        dw: -1.5,
        params: &p,
        config: &c,
    });
    out.check(v < 0.0 && (v + 0.0125).abs() <= 1e-15, format!("em_step(1/16, 2^-5, -1.5) = {v}"));
    let noisy = p.with_k3(1.5).unwrap();
    let s = harness::negativity_stats(&noisy, &c, 5, &plan()).unwrap();
    out.check(
        s.fraction() > 0.0,
        format!("EM, k3 = 1.5, dt = 2^-5: {} of {} paths went negative", s.negative_paths, s.paths),
    );
    out
}

fn table_config(name: &str) -> SchemeConfig {
    SchemeConfig::of(name.parse().unwrap())
}

/// Strong errors of the four table columns, computed once.
fn strong_error_table() -> &'static Vec<(String, Vec<ErrorEstimate>, f64)> {
    static TABLE: OnceLock<Vec<(String, Vec<ErrorEstimate>, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        STRONG_ERRORS
            .iter()
            .map(|(name, _)| {
                let c = table_config(name);
                let start = Instant::now();
                let rows = harness::strong_errors(&bench(), &c, &c, &LEVELS, REF_LEVEL, &plan()).unwrap();
                (name.to_string(), rows, start.elapsed().as_secs_f64())
            })
            .collect()
    })
}

fn strong_errors() -> Outcome {
    let mut out = Outcome::new();
    for ((name, rows, secs), (_, expected)) in strong_error_table().iter().zip(STRONG_ERRORS) {
        for (e, want) in rows.iter().zip(expected) {
            out.check(
                within_relative(e.error, want, STRONG_ERROR_TOLERANCE),
                format!(
                    "{name} dt = 2^{}: error {:.4e} [{:.4e}, {:.4e}] vs {want:.4e} (ratio {:.3})",
                    e.dt.log2(),
                    e.error,
                    e.ci_low,
                    e.ci_high,
                    e.error / want
                ),
            );
        }
        out.note(format!("{name}: {secs:.1} s"));
    }
    out
}

fn order_fits() -> Outcome {
    let mut out = Outcome::new();
    let (_, sd, _) = &strong_error_table()[0];
    let points: Vec<(f64, f64)> = sd.iter().map(|e| (e.dt, e.error)).collect();
    let finest = harness::fit_order(&points[2..]).unwrap();
    let all = harness::fit_order(&points).unwrap();
    let (lo, hi) = SD_ORDER_FINEST3_BAND;
    out.check(
        (lo..=hi).contains(&finest.slope),
        format!("SD 3-point order {:.4} (band [{lo}, {hi}], table {SD_ORDER_FINEST3})", finest.slope),
    );
    let (lo, hi) = SD_ORDER_ALL_BAND;
    out.check(
        (lo..=hi).contains(&all.slope),
        format!("SD 5-point order {:.4} (band [{lo}, {hi}], table {SD_ORDER_ALL})", all.slope),
    );
    out
}

fn distances() -> Outcome {
    let mut out = Outcome::new();
    let p = bench();
    let n = (p.horizon / DISTANCE_DT).round() as usize;
    let sd = SchemeConfig::of(SchemeId::Sd);
    for (other, want) in [(SchemeId::Hal, DISTANCE_SD_HAL), (SchemeId::Alf, DISTANCE_SD_ALF)] {
        let e = harness::scheme_distance(&p, &sd, &SchemeConfig::of(other), n, &plan()).unwrap();
        let ratio = e.error / want;
        out.check(
            (1.0 / DISTANCE_FACTOR..=DISTANCE_FACTOR).contains(&ratio),
            format!(
                "d(SD,{other}) at dt = 1e-3: {:.4e} [{:.4e}, {:.4e}] vs {want:.4e} (ratio {ratio:.3})",
                e.error, e.ci_low, e.ci_high
            ),
        );
    }
    out
}

fn alf_oracle_equivalence() -> Outcome {
    let mut out = Outcome::new();
    let p = bench();
    let c = SchemeConfig::of(SchemeId::Alf);
    let mut u = NormalStream::new(PathKey::new(SEED, 6, 0), Driver::Orthogonal);
    let (mut worst, mut worst_closed) = (0.0f64, 0.0f64);
    let mut bisected = 0;
    for _ in 0..1000 {
        let y = 10f64.powf(-4.0 + 4.0 * u.next_uniform());
        let level = 5 + (u.next_uniform() * 9.0) as u32;
        let dt = dt_of(level);
        let dw = (2.0 * u.next_uniform() - 1.0) * 3.0 * dt.sqrt();

        let newton = schemes::alf_step(&StepInput {
            y,
            dt,
            dw,
            params: &p,
            config: &c,
        })
        .unwrap();
        let oracle = alf_oracle(y, dt, dw, p.k1, p.k2, p.k3, p.q);
        worst = worst.max((newton - oracle).abs());
        bisected += AlfEquation::new(&p, y, dt, dw).solve(c.newton_tol, c.newton_max_iter).unwrap().used_bisection as u32;

        let eq = AlfEquation { q: 0.5, ..AlfEquation::new(&p, y, dt, dw) };
        let root = eq.solve(c.newton_tol, c.newton_max_iter).unwrap().root;
        let closed = alf_square_root_closed_form(y, dt, dw, p.k1, p.k2, p.k3);
        worst_closed = worst_closed.max((root - closed).abs());
    }
    out.check(
        worst <= ALF_ORACLE_TOLERANCE,
        format!("q = 3/4: max |Newton - bisection| = {worst:.3e} over 1000 states ({bisected} needed the fallback)"),
    );
    out.check(
        worst_closed <= ALF_CLOSED_FORM_TOLERANCE,
        format!("q = 1/2: max |Newton - closed form| = {worst_closed:.3e}"),
    );
    out
}

fn stochastic_volatility() -> Outcome {
    let mut out = Outcome::new();
    let var = SchemeConfig::of(SchemeId::Sd).with_theta(SV_THETA).unwrap();
    for (rho, em_want, ijk_want) in SV_ERRORS {
        let start = Instant::now();
        let sv = SvParams::benchmark(rho).unwrap();
        let em = harness::sv_error(&sv, SchemeId::LogEuler, &var, 5, REF_LEVEL, &plan()).unwrap();
        out.check(
            within_relative(em.error, em_want, SV_TOLERANCE),
            format!("rho = {rho}: EM&SD dt = 2^-5: {:.4e} vs {em_want} (ratio {:.2e})", em.error, em.error / em_want),
        );
        let rows = harness::sv_errors(&sv, SchemeId::Ijk, &var, &LEVELS, REF_LEVEL, &plan()).unwrap();
        for (e, want) in rows.iter().zip(ijk_want) {
            out.check(
                within_relative(e.error, want, SV_TOLERANCE),
                format!(
                    "rho = {rho}: IJK&SD dt = 2^{}: {:.4e} vs {want} (ratio {:.2e})",
                    e.dt.log2(),
                    e.error,
                    e.error / want
                ),
            );
        }
        out.note(format!("rho = {rho}: {:.1} s", start.elapsed().as_secs_f64()));
    }
    out
}

fn determinism() -> Outcome {
    let mut out = Outcome::new();
    let dir = tempfile::tempdir().unwrap();
    let text = "schemes = SD, HAL, BMM\nlevels = 4, 6, 8\nref_level = 10\nM = 8\nL = 25\nseed = 11\ntiming = false\n";
    let mut files = Vec::new();
    for (run, threads) in [(0, 1), (1, 1), (2, 4)] {
        let mut cfg = ExperimentConfig::parse(text).unwrap();
        cfg.threads = threads;
        let result = cli::run_converge(&cfg).unwrap();
        let path = dir.path().join(format!("run{run}.csv"));
        cli::write_atomic(&path, &result.csv).unwrap();
        cli::write_atomic(&cli::order_path(&path), &result.order_csv).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let order = std::fs::read(cli::order_path(&path)).unwrap();
        files.push((threads, bytes, order));
    }
    let (_, first, first_order) = &files[0];
    for (i, (threads, bytes, order)) in files.iter().enumerate().skip(1) {
        out.check(
            bytes == first && order == first_order,
            format!("run {i} with {threads} thread(s): {} bytes, identical to run 0: {}", bytes.len(), bytes == first),
        );
    }
    out
}

fn lattice_invariants() -> Outcome {
    let mut out = Outcome::new();
    let fine_level = 12u32;
    let mut exact = true;
    for path in 0..3 {
        let fine = paths::generate_fine_increments(PathKey::new(SEED, 9, path), fine_level, 1.0).unwrap();
        let by_level: Vec<BrownianLattice> = (0..=fine_level).map(|l| fine.coarsen(fine_level - l).unwrap()).collect();
        for c in 0..=fine_level {
            let width = 1usize << (fine_level - c);
            let oracle_ok = by_level[c as usize]
                .increments()
                .iter()
                .enumerate()
                .all(|(i, x)| x.to_bits() == tree_sum(&fine.increments()[i * width..(i + 1) * width]).to_bits());
            exact &= oracle_ok && by_level[c as usize].terminal().to_bits() == fine.terminal().to_bits();
            for f in c..=fine_level {
                exact &= by_level[f as usize].coarsen(f - c).unwrap() == by_level[c as usize];
            }
        }
    }
    out.check(exact, format!("coarsening telescopes bit-exactly for all level pairs up to {fine_level}"));

    let key = PathKey::new(SEED, 9, 100);
    let w_var = paths::generate_increments(key, Driver::Variance, 20, 1.0).unwrap();
    let w_perp = paths::generate_increments(key, Driver::Orthogonal, 20, 1.0).unwrap();
    let w_asset = paths::correlate(&w_var, &w_perp, -0.4).unwrap();
    let r = correlation(w_asset.increments(), w_var.increments());
    out.check((r + 0.4).abs() <= 0.01, format!("empirical correlation {r:.5} over 2^20 pairs (target -0.4)"));

    let level = 17;
    let draws = paths::generate_increments(PathKey::new(SEED, 9, 200), Driver::Variance, level, 1.0).unwrap();
    let xs = &draws.increments()[..100_000];
    let target = dt_of(level);
    let se = target * (2.0 / (xs.len() as f64 - 1.0)).sqrt();
    let var = sample_variance(xs);
    out.check(
        (var - target).abs() <= 3.0 * se,
        format!("increment variance {var:.6e} vs {target:.6e} ({:.2} standard errors)", (var - target) / se),
    );
    out
}

fn step_identities() -> Outcome {
    let mut out = Outcome::new();
    let p = bench();
    let steady = p.steady_state();
    let input = |y, dt, dw, c: &SchemeConfig| -> f64 {
        let st = StepInput {
            y,
            dt,
            dw,
            params: &p,
            config: c,
        };
        match c.scheme {
            SchemeId::Bim => schemes::bim_step(&st),
            SchemeId::Em => schemes::em_step(&st),
            SchemeId::Mil => schemes::milstein_step(&st),
            SchemeId::Sd => schemes::sd_step(&st),
            SchemeId::Hal => schemes::hal_step(&st),
            other => panic!("{other}"),
        }
    };

    let bim = SchemeConfig::of(SchemeId::Bim);
    let fixed = (0..=20).all(|l| input(steady, dt_of(l), 0.0, &bim) == steady);
    out.check(fixed, "BIM keeps k1/k2 fixed under zero noise for dt = 2^0..2^-20".into());

    let em = SchemeConfig::of(SchemeId::Em);
    let mil = SchemeConfig::of(SchemeId::Mil);
    let mut u = NormalStream::new(PathKey::new(SEED, 10, 0), Driver::Orthogonal);
    let (mut exact_even, mut odd_ulps) = (true, 0u64);
    for _ in 0..1000 {
        let y = 2.0 * u.next_uniform();
        for level in 5..=13 {
            let dt = dt_of(level);
            for dw in [dt.sqrt(), -dt.sqrt()] {
                let (a, b) = (input(y, dt, dw, &mil), input(y, dt, dw, &em));
                if level % 2 == 0 {
                    exact_even &= a.to_bits() == b.to_bits();
                } else {
                    odd_ulps = odd_ulps.max(ulps(a, b));
                }
            }
        }
    }
    out.check(exact_even, "Milstein = EM bitwise at dW = +-sqrt(dt), dt = 2^-6..2^-12 (even levels)".into());
    out.check(
        odd_ulps <= 1,
        format!("Milstein vs EM at odd levels, where sqrt(dt)^2 rounds: max {odd_ulps} ulp"),
    );

    let sv = SvParams::benchmark(0.0).unwrap();
    let mut same = true;
    for _ in 0..10_000 {
        let ln_s = 10.0 * u.next_uniform() - 5.0;
        let v = u.next_uniform();
        let dt = dt_of(5 + (u.next_uniform() * 9.0) as u32);
        let (dw, dwv) = (u.next_normal() * dt.sqrt(), u.next_normal() * dt.sqrt());
        same &= ijk_step(ln_s, v, v, dt, dw, dwv, &sv).to_bits() == log_euler_step(ln_s, v, dt, dw, &sv).to_bits();
    }
    out.check(same, "IJK = log-Euler bitwise at rho = 0, v_next = v over 10^4 draws".into());

    let sd = SchemeConfig::of(SchemeId::Sd);
    let got = input(0.0625, dt_of(5), 0.0, &sd);
    let oracle = sd_oracle(0.0625, dt_of(5), 0.0, p.k1, p.k2, p.k3, p.q, 1.0);
    out.check(
        ulps(got, oracle) <= 1 && (got - 0.0622061524).abs() < 5e-11,
        format!("SD(1/16, 2^-5, 0) = {got:.17} ({} ulp from the direct formula)", ulps(got, oracle)),
    );
    let hal = SchemeConfig::of(SchemeId::Hal);
    let got = input(0.0625, dt_of(5), 0.0, &hal);
    out.check(ulps(got, 0.06203125) <= 1, format!("HAL(1/16, 2^-5, 0) = {got:.17} ({} ulp from 0.06203125)", ulps(got, 0.06203125)));
    out
}

fn relative_timing() -> Outcome {
    let mut out = Outcome::new();
    let p = bench();
    let timing_plan = McPlan::new(20, 100, SEED).unwrap();
    let sd = SchemeConfig::of(SchemeId::Sd);
    let n = 1usize << TIMING_LEVEL;
    let per_path = |c: SchemeConfig| harness::scheme_distance(&p, &sd, &c, n, &timing_plan).unwrap().seconds_per_path;
    let t_sd = per_path(sd);
    let t_alf = per_path(SchemeConfig::of(SchemeId::Alf));
    let ratio = t_alf / t_sd;
    out.check(
        ratio >= TIMING_RATIO,
        format!(
            "dt = 2^-{TIMING_LEVEL}: ALF {t_alf:.3e} s/path, SD {t_sd:.3e} s/path, ratio {ratio:.1} (need {TIMING_RATIO})"
        ),
    );
    out
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "positivity of SD, HAL, ALF, BIM, BMM", positivity),
        (2, "finite life time of EM", finite_life_time),
        (3, "strong error table", strong_errors),
        (4, "order fits of SD", order_fits),
        (5, "distance table", distances),
        (6, "ALF solver against oracles", alf_oracle_equivalence),
        (7, "stochastic volatility errors", stochastic_volatility),
        (8, "determinism of converge output", determinism),
        (9, "lattice invariants", lattice_invariants),
        (10, "algebraic step identities", step_identities),
        (11, "relative cost of ALF", relative_timing),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |n: u32, title: &str| {
        filters.is_empty() || filters.iter().any(|f| f == &n.to_string() || title.contains(f.as_str()))
    };

    let mut failed = Vec::new();
    let mut ran = 0;
    for (n, title, run) in criteria {
        if !selected(n, title) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome {
                pass: false,
                details: vec![format!("PANIC {msg}")],
            }
        });
        println!(
            "criterion {n:>2} {} {title} ({:.1} s)",
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for d in &outcome.details {
            println!("    {d}");
        }
        if !outcome.pass {
            failed.push(n);
        }
    }
    println!(
        "\nacceptance: {} of {ran} criteria passed{}",
        ran - failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
