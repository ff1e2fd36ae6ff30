//! The acceptance suite: ten numbered criteria covering the analytic
//! algebra, oracle equivalence, statistical reproduction of the reference
//! visibilities, switching dynamics, determinism, and convention
//! independence. Each criterion prints one pass/fail line; the suite fails
//! if any criterion fails.
//!
//! The suite runs on the shipped default configs (embedded at compile time),
//! so `accept` behaves identically from any working directory.

use std::time::Instant;

use biphoton_core::chip::{split_probability, BellPhaseConfig, BellSourceChip};
use biphoton_core::circuit::SplitterConvention;
use biphoton_core::counting::{point_seed, NoiseModel};
use biphoton_core::fitting::{fit_fringe, BellVerdict, BELL_VISIBILITY_THRESHOLD};
use biphoton_core::oracle::{random_circuit, random_state, CreationPolynomial};
use biphoton_core::spectral::{SpectralEnvelope, SpectralShape};

use crate::config::{ConventionName, ExperimentConfig};
use crate::experiments::{run_experiment, ExperimentSummary};

/// Default master seed of the acceptance suite.
pub const DEFAULT_SEED: u64 = 0x0B1_0705;

/// Reference values the statistical criteria reproduce.
pub mod targets {
    /// Voltage of the split-condition fringe maximum.
    pub const SPLIT_PEAK_VOLTAGE: f64 = 7.47;
    /// Raw HOM visibilities of the two source pairs.
    pub const HOM_VISIBILITY_W12: f64 = 0.910;
    pub const HOM_VISIBILITY_W34: f64 = 0.939;
    /// Raw analyzer-fringe visibilities in the two bases.
    pub const POLARIZATION_VISIBILITY_H0: f64 = 0.895;
    pub const POLARIZATION_VISIBILITY_H22: f64 = 0.777;
    /// Bell-state discrimination contrast of the simplified BSM.
    pub const BSM_VISIBILITY: f64 = 0.872;
}

/// Shipped default configs, embedded so the suite is location independent.
pub mod builtin {
    pub const FRINGE_VS_VOLTAGE: &str = include_str!("../configs/fringe_vs_voltage.toml");
    pub const HOM_W1W2: &str = include_str!("../configs/hom_w1w2.toml");
    pub const HOM_W3W4: &str = include_str!("../configs/hom_w3w4.toml");
    pub const POLARIZATION_H0: &str = include_str!("../configs/polarization_fringe_h0.toml");
    pub const POLARIZATION_H22: &str = include_str!("../configs/polarization_fringe_h22.toml");
    pub const BSM_PHASE_SWEEP: &str = include_str!("../configs/bsm_phase_sweep.toml");
    pub const BSM_DELAY_PLUS: &str = include_str!("../configs/bsm_delay_psi_plus.toml");
    pub const BSM_DELAY_MINUS: &str = include_str!("../configs/bsm_delay_psi_minus.toml");
    pub const MODULATION_1KHZ: &str = include_str!("../configs/modulation_1khz.toml");
    pub const MODULATION_20KHZ: &str = include_str!("../configs/modulation_20khz.toml");

    pub fn all() -> [(&'static str, &'static str); 10] {
        [
            ("fringe_vs_voltage", FRINGE_VS_VOLTAGE),
            ("hom_w1w2", HOM_W1W2),
            ("hom_w3w4", HOM_W3W4),
            ("polarization_fringe_h0", POLARIZATION_H0),
            ("polarization_fringe_h22", POLARIZATION_H22),
            ("bsm_phase_sweep", BSM_PHASE_SWEEP),
            ("bsm_delay_psi_plus", BSM_DELAY_PLUS),
            ("bsm_delay_psi_minus", BSM_DELAY_MINUS),
            ("modulation_1khz", MODULATION_1KHZ),
            ("modulation_20khz", MODULATION_20KHZ),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:2} {:<28} {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details,
            self.seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub outcomes: Vec<CriterionOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

fn config(text: &'static str) -> ExperimentConfig {
    ExperimentConfig::parse(text).expect("builtin config parses and validates")
}

fn with_convention(text: &'static str, convention: ConventionName) -> ExperimentConfig {
    let mut cfg = config(text);
    cfg.bs_convention = convention;
    cfg
}

fn chip(convention: ConventionName) -> BellSourceChip {
    BellSourceChip::new(SplitterConvention::from(convention))
}

fn outcome(
    id: usize,
    name: &'static str,
    started: Instant,
    passed: bool,
    details: String,
) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name,
        passed,
        details,
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// Run every criterion under the default convention.
pub fn run_suite(master_seed: u64) -> SuiteReport {
    let outcomes = vec![
        criterion_1(master_seed, ConventionName::Symmetric),
        criterion_2(master_seed, ConventionName::Symmetric),
        criterion_3(master_seed),
        criterion_4(),
        criterion_5(master_seed),
        criterion_6(master_seed, ConventionName::Symmetric),
        criterion_7(master_seed, ConventionName::Symmetric),
        criterion_8(master_seed),
        criterion_9(master_seed),
        criterion_10(master_seed),
    ];
    SuiteReport { outcomes }
}

/// Criterion 1: Ideal Bell-state algebra: fidelities of the alpha = 0 / pi outputs.
fn criterion_1(_seed: u64, convention: ConventionName) -> CriterionOutcome {
    let started = Instant::now();
    let chip = chip(convention);
    let mut worst = 1.0f64;
    for alpha in [0.0, std::f64::consts::PI] {
        let out = chip
            .output_state(&BellPhaseConfig::split_with_alpha(alpha))
            .expect("ideal output state");
        let f = out
            .state
            .fidelity(&chip.fiber_bell_state(alpha))
            .expect("same registry");
        worst = worst.min(f);
    }
    let within_time = started.elapsed().as_secs_f64() < 1.0;
    outcome(
        1,
        "bell-state-algebra",
        started,
        worst >= 1.0 - 1e-10 && within_time,
        format!("min fidelity 1-{:.2e}", 1.0 - worst),
    )
}

/// Criterion 2: Split/bunch fringe: closed form vs full simulation, and the Monte
/// Carlo voltage fringe peaking at the calibrated voltage.
fn criterion_2(seed: u64, convention: ConventionName) -> CriterionOutcome {
    let started = Instant::now();
    let chip = chip(convention);
    let mut worst_closed = 0.0f64;
    let mut worst_sim = 0.0f64;
    for i in 0..100 {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / 99.0;
        worst_closed =
            worst_closed.max((split_probability(theta) - 0.5 * (1.0 + theta.cos())).abs());
        let sim = chip.split_probability_simulated(theta).expect("simulates");
        worst_sim = worst_sim.max((sim - split_probability(theta)).abs());
    }

    let cfg = with_convention(builtin::FRINGE_VS_VOLTAGE, convention);
    let run = run_experiment(&cfg, seed).expect("fringe run");
    let peak_voltage = match run.summary {
        ExperimentSummary::Fringe { marked, .. } => marked.map(|m| m.volts).unwrap_or(f64::NAN),
        _ => f64::NAN,
    };
    let step = cfg.sweep.as_ref().map(|s| s.step()).unwrap_or(0.05);
    let peak_ok = (peak_voltage - targets::SPLIT_PEAK_VOLTAGE).abs() <= step;

    outcome(
        2,
        "split-bunch-fringe",
        started,
        worst_closed <= 1e-12 && worst_sim <= 1e-12 && peak_ok,
        format!(
            "analytic dev {worst_closed:.1e}, sim dev {worst_sim:.1e}, peak {peak_voltage:.3} V"
        ),
    )
}

/// Criterion 3: Oracle equivalence: 100 random circuits against the symbolic
/// operator-expansion route.
fn criterion_3(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let registry = biphoton_core::modes::ModeRegistry::new(
        (0..4)
            .map(|i| biphoton_core::modes::Mode::on_chip(format!("m{i}"), 193.1))
            .collect(),
    )
    .expect("registry");
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let n_components = 1 + (trial % 6) as usize;
        let graph = random_circuit(
            std::sync::Arc::clone(&registry),
            point_seed(seed, trial),
            n_components,
            SplitterConvention::Symmetric,
        );
        let state = random_state(
            std::sync::Arc::clone(&registry),
            point_seed(seed, 1000 + trial),
        );
        let composed = biphoton_core::circuit::compile_unitary(&graph).expect("compiles");
        let transformed = state.apply_unitary(&composed).expect("applies");
        let mut poly = CreationPolynomial::from_state(&state);
        for stage in graph.stages() {
            for component in stage {
                let single = biphoton_core::circuit::CircuitGraph::new(
                    std::sync::Arc::clone(&registry),
                    vec![vec![component.clone()]],
                    graph.convention(),
                )
                .expect("valid single-component graph");
                poly = poly.substitute(
                    &biphoton_core::circuit::compile_unitary(&single).expect("compiles"),
                );
            }
        }
        worst = worst.max(poly.max_amplitude_deviation(&transformed));
    }
    let within_time = started.elapsed().as_secs_f64() < 10.0;
    outcome(
        3,
        "oracle-equivalence",
        started,
        worst <= 1e-12 && within_time,
        format!("max amplitude deviation {worst:.2e} over 100 circuits"),
    )
}

/// Criterion 4: HOM closed form vs quadrature on 201 delays, both shapes, and the
/// analytic first zero of the 60 GHz rectangular dip.
fn criterion_4() -> CriterionOutcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for shape in [SpectralShape::Rectangular, SpectralShape::Gaussian] {
        let env = SpectralEnvelope::new(shape, 1552.5, 60.0).expect("valid envelope");
        for i in 0..201 {
            let tau = -50.0 + 100.0 * i as f64 / 200.0;
            let closed = env.overlap(tau);
            let quad = env.quadrature_overlap(tau).expect("quadrature converges");
            // Guarded relative error: the overlap underflows near sinc zeros
            // and deep Gaussian tails.
            worst = worst.max((closed - quad).abs() / closed.abs().max(1e-12));
        }
    }

    // First zero by bisection of sin(pi * 60 GHz * tau).
    let f = |tau_ps: f64| (std::f64::consts::PI * 60.0 * tau_ps * 1e-3).sin();
    let (mut lo, mut hi) = (10.0f64, 20.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let zero_ok = (root - 16.667).abs() <= 1e-3; // within 1 fs

    outcome(
        4,
        "hom-closed-form",
        started,
        worst <= 1e-6 && zero_ok,
        format!("max guarded rel err {worst:.2e}, first zero {root:.6} ps"),
    )
}

/// Criterion 5: HOM visibility reproduction: 100 seeded Monte Carlo dips re-fit to the
/// configured visibilities within +-0.02 in at least 95 runs.
fn criterion_5(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let cases = [
        (builtin::HOM_W1W2, targets::HOM_VISIBILITY_W12),
        (builtin::HOM_W3W4, targets::HOM_VISIBILITY_W34),
    ];
    let mut ok = 0usize;
    let mut total = 0usize;
    for (text, target) in cases {
        let cfg = config(text);
        for rep in 0..50u64 {
            total += 1;
            let run_seed = point_seed(seed, 50_000 + total as u64 * 7 + rep);
            if let Ok(run) = run_experiment(&cfg, run_seed) {
                if let ExperimentSummary::Hom { fit } = run.summary {
                    if (fit.visibility - target).abs() <= 0.02 {
                        ok += 1;
                    }
                }
            }
        }
    }
    let within_time = started.elapsed().as_secs_f64() < 60.0;
    outcome(
        5,
        "hom-visibility-mc",
        started,
        ok >= 95 && within_time,
        format!("{ok}/{total} refits within 0.02"),
    )
}

/// Ideal analyzer fringe: the coincidence probability itself over the
/// config's sweep grid (no detector chain, no accidentals).
fn ideal_polarization_curve(cfg: &ExperimentConfig, noise: &NoiseModel) -> Vec<(f64, f64)> {
    let chip = BellSourceChip::new(cfg.convention());
    let phases = BellPhaseConfig::new(cfg.phases.alpha_rad, 0.0, 0.0);
    let h1 = cfg.analyzer.as_ref().expect("analyzer section").hwp1_deg;
    let sweep = cfg.sweep.as_ref().expect("sweep section");
    sweep
        .grid()
        .into_iter()
        .map(|h2| {
            let p = chip
                .analyzer_coincidence(&phases, h1, h2, noise)
                .expect("analyzer probability");
            (h2, 1e4 * p)
        })
        .collect()
}

/// Criterion 6: Polarization fringes: exact unit visibility with ideal noise, and the
/// fitted noise model reproducing the reference visibilities with a Bell
/// violation in both bases.
fn criterion_6(seed: u64, convention: ConventionName) -> CriterionOutcome {
    let started = Instant::now();
    let cfg_h0 = with_convention(builtin::POLARIZATION_H0, convention);
    let cfg_h22 = with_convention(builtin::POLARIZATION_H22, convention);

    // Ideal noise, noiseless expected curves: visibility 1.000 within 1e-6.
    let ideal = NoiseModel::ideal();
    let mut ideal_dev = 0.0f64;
    for cfg in [&cfg_h0, &cfg_h22] {
        let curve = ideal_polarization_curve(cfg, &ideal);
        let fit = fit_fringe(&curve).expect("ideal fringe fits");
        ideal_dev = ideal_dev.max((fit.raw_visibility() - 1.0).abs());
    }

    // Fitted noise model, Monte Carlo counts: reference visibilities.
    let mut details = format!("ideal dev {ideal_dev:.1e}");
    let mut passed = ideal_dev <= 1e-6;
    for (cfg, target) in [
        (&cfg_h0, targets::POLARIZATION_VISIBILITY_H0),
        (&cfg_h22, targets::POLARIZATION_VISIBILITY_H22),
    ] {
        let run = run_experiment(cfg, seed).expect("polarization run");
        if let ExperimentSummary::Fringe { fit, bell, .. } = run.summary {
            let vis = fit.raw_visibility();
            let vis_ok = (vis - target).abs() <= 0.02;
            let bell_ok = bell == Some(BellVerdict::ViolationSupported);
            passed = passed && vis_ok && bell_ok;
            details.push_str(&format!(", V={vis:.4} (target {target})"));
        } else {
            passed = false;
        }
    }
    details.push_str(&format!(
        ", bell threshold {:.5}",
        BELL_VISIBILITY_THRESHOLD
    ));
    outcome(6, "polarization-fringes", started, passed, details)
}

/// Criterion 7: BSM discrimination: exact ideal extremes, the fitted contrast, and the
/// delay-sweep merge/separation structure.
fn criterion_7(seed: u64, convention: ConventionName) -> CriterionOutcome {
    let started = Instant::now();
    let chip = chip(convention);
    let env = SpectralEnvelope::new(SpectralShape::Rectangular, 1552.5, 60.0).expect("envelope");
    let ideal = NoiseModel::ideal();
    let p_plus = chip
        .bsm_coincidence(&BellPhaseConfig::split_with_alpha(0.0), 0.0, &env, &ideal)
        .expect("bsm");
    let p_minus = chip
        .bsm_coincidence(
            &BellPhaseConfig::split_with_alpha(std::f64::consts::PI),
            0.0,
            &env,
            &ideal,
        )
        .expect("bsm");
    let ideal_ok = p_plus.abs() <= 1e-12 && (p_minus - 1.0).abs() <= 1e-12;

    // Fitted noise: Eq.-style contrast from the phase-sweep fringe fit.
    let cfg_sweep = with_convention(builtin::BSM_PHASE_SWEEP, convention);
    let run = run_experiment(&cfg_sweep, seed).expect("bsm phase sweep");
    let f_fitted = match run.summary {
        ExperimentSummary::Fringe { ref fit, .. } => fit.raw_visibility(),
        _ => f64::NAN,
    };
    let f_ok = (f_fitted - targets::BSM_VISIBILITY).abs() <= 0.03;

    // Delay sweep: same seed for both states so the curves share grids.
    let run_plus = run_experiment(&with_convention(builtin::BSM_DELAY_PLUS, convention), seed)
        .expect("delay sweep plus");
    let run_minus = run_experiment(&with_convention(builtin::BSM_DELAY_MINUS, convention), seed)
        .expect("delay sweep minus");
    let counts = |run: &crate::experiments::RunOutput| -> Vec<(f64, f64)> {
        run.dataset
            .rows
            .iter()
            .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
            .collect()
    };
    let plus = counts(&run_plus);
    let minus = counts(&run_minus);
    let wide_delay = 3e3 / 60.0;
    let mut wide_ok = true;
    let mut max_sep = 0.0f64;
    let mut sep_at_zero = 0.0f64;
    for ((tau, cp), (_, cm)) in plus.iter().zip(minus.iter()) {
        let sep = (cm - cp).abs();
        if tau.abs() > wide_delay {
            // Poisson-equal within 3 sigma of the difference.
            if sep > 3.0 * (cp + cm).max(1.0).sqrt() {
                wide_ok = false;
            }
        }
        if sep > max_sep {
            max_sep = sep;
        }
        if *tau == 0.0 {
            sep_at_zero = sep;
        }
    }
    let separation_ok = sep_at_zero >= 0.9 * max_sep && max_sep > 0.0;

    outcome(
        7,
        "bsm-discrimination",
        started,
        ideal_ok && f_ok && wide_ok && separation_ok,
        format!(
            "ideal ({p_plus:.1e}, {p_minus:.6}), F={f_fitted:.4} (target {}), sep(0)/max={:.3}",
            targets::BSM_VISIBILITY,
            sep_at_zero / max_sep.max(1.0)
        ),
    )
}

/// Criterion 8: Modulation dynamics: plateau contrast at 1 kHz and visible transients
/// at 20 kHz.
fn criterion_8(seed: u64) -> CriterionOutcome {
    let started = Instant::now();

    // 1 kHz: plateau ratio within 15% of (1+F)/(1-F).
    let cfg_slow = config(builtin::MODULATION_1KHZ);
    let run_slow = run_experiment(&cfg_slow, seed).expect("1 kHz histogram");
    let (ratio, expected_ratio) = match run_slow.summary {
        ExperimentSummary::Modulation {
            ratio,
            expected_ratio,
            ..
        } => (ratio, expected_ratio),
        _ => (f64::NAN, f64::NAN),
    };
    let ratio_ok = (ratio - expected_ratio).abs() <= 0.15 * expected_ratio;

    // 20 kHz: at least 2 bins per edge strictly between the plateau levels
    // at 3 sigma.
    let cfg_fast = config(builtin::MODULATION_20KHZ);
    let hist =
        crate::experiments::modulation_histogram_for(&cfg_fast, seed).expect("20 kHz histogram");
    let counts: Vec<f64> = hist.bin_counts.iter().map(|&c| c as f64).collect();
    let n = counts.len();
    let mut sorted = counts.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let plateau_low = sorted[..3].iter().sum::<f64>() / 3.0;
    let plateau_high = sorted[n - 3..].iter().sum::<f64>() / 3.0;
    let strictly_between = |c: f64| -> bool {
        let sigma = c.max(1.0).sqrt();
        let lo_margin = plateau_low + 3.0 * plateau_low.max(1.0).sqrt();
        let hi_margin = plateau_high - 3.0 * plateau_high.max(1.0).sqrt();
        c - 3.0 * sigma > lo_margin && c + 3.0 * sigma < hi_margin
    };
    let window = n / 4;
    let edge_1 = (0..window).filter(|&i| strictly_between(counts[i])).count();
    let edge_2 = (n / 2..n / 2 + window)
        .filter(|&i| strictly_between(counts[i]))
        .count();
    let transient_ok = edge_1 >= 2 && edge_2 >= 2;

    let within_time = started.elapsed().as_secs_f64() < 120.0;
    outcome(
        8,
        "modulation-dynamics",
        started,
        ratio_ok && transient_ok && within_time,
        format!(
            "1 kHz ratio {ratio:.2} (expected {expected_ratio:.2}), 20 kHz transient bins {edge_1}/{edge_2}"
        ),
    )
}

/// Seed-sensitive verdicts re-evaluated for criterion 9.
fn seeded_verdicts(seed: u64) -> (bool, bool, bool, bool) {
    let cfg_fringe = config(builtin::FRINGE_VS_VOLTAGE);
    let run = run_experiment(&cfg_fringe, seed).expect("fringe run");
    let peak_ok = match run.summary {
        ExperimentSummary::Fringe { marked, .. } => {
            (marked.map(|m| m.volts).unwrap_or(f64::NAN) - targets::SPLIT_PEAK_VOLTAGE).abs()
                <= cfg_fringe.sweep.as_ref().unwrap().step()
        }
        _ => false,
    };
    let vis = |text: &'static str, target: f64| -> bool {
        let run = run_experiment(&config(text), seed).expect("fringe run");
        match run.summary {
            ExperimentSummary::Fringe { fit, .. } => (fit.raw_visibility() - target).abs() <= 0.02,
            _ => false,
        }
    };
    let v0_ok = vis(
        builtin::POLARIZATION_H0,
        targets::POLARIZATION_VISIBILITY_H0,
    );
    let v22_ok = vis(
        builtin::POLARIZATION_H22,
        targets::POLARIZATION_VISIBILITY_H22,
    );
    let run_bsm = run_experiment(&config(builtin::BSM_PHASE_SWEEP), seed).expect("bsm sweep");
    let f_ok = match run_bsm.summary {
        ExperimentSummary::Fringe { fit, .. } => {
            (fit.raw_visibility() - targets::BSM_VISIBILITY).abs() <= 0.03
        }
        _ => false,
    };
    (peak_ok, v0_ok, v22_ok, f_ok)
}

/// Criterion 9: Determinism: byte-identical CSV on repeated runs, and verdicts of the
/// seed-sensitive criteria stable across 10 distinct master seeds.
fn criterion_9(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let cfg = config(builtin::HOM_W1W2);
    let first = run_experiment(&cfg, seed).expect("run").dataset.render();
    let second = run_experiment(&cfg, seed).expect("run").dataset.render();
    let bytes_ok = first == second;

    let reference = seeded_verdicts(point_seed(seed, 900));
    let mut stable = true;
    for k in 1..10u64 {
        let verdicts = seeded_verdicts(point_seed(seed, 900 + k));
        if verdicts != reference {
            stable = false;
        }
    }
    let all_true = reference == (true, true, true, true);

    outcome(
        9,
        "determinism",
        started,
        bytes_ok && stable && all_true,
        format!("csv identical: {bytes_ok}, verdicts stable over 10 seeds: {stable}"),
    )
}

/// Criterion 10: Splitter-convention independence: criteria 1, 2, 6, 7 pass under the
/// real Hadamard convention exactly as under the symmetric one.
fn criterion_10(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let under = |conv: ConventionName| -> (bool, bool, bool, bool) {
        (
            criterion_1(seed, conv).passed,
            criterion_2(seed, conv).passed,
            criterion_6(seed, conv).passed,
            criterion_7(seed, conv).passed,
        )
    };
    let symmetric = under(ConventionName::Symmetric);
    let hadamard = under(ConventionName::Hadamard);
    let passed = symmetric == hadamard && symmetric == (true, true, true, true);
    outcome(
        10,
        "convention-independence",
        started,
        passed,
        format!("symmetric {symmetric:?} vs hadamard {hadamard:?}"),
    )
}
