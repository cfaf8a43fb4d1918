//! Acceptance campaign: one test per criterion, each printing a PASS/FAIL
//! line with its worst residual, tolerance and wall time.

use std::time::{Duration, Instant};

use coadjoint::core::dialgebra::ROperator;
use coadjoint::core::gaudin::GaudinGroup;
use coadjoint::core::multitime::{action, FlowId, LagrangianSystem, MultiTimePath};
use coadjoint::core::sampling::{self, GaudinSampling};
use coadjoint::core::scalar::Scalar;
use coadjoint::core::toda_aks::AksChart;
use coadjoint::core::toda_cartan::CartanChart;
use coadjoint::harness::{
    run_suite, skew_defect, CheckId, Drifted, ModelKind, SuiteConfig, AKS_MIN_SKEW_DEFECT, ORDER_STEPS,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0;

struct Verdict {
    residual: f64,
    tolerance: f64,
    ok: bool,
}

fn criterion(number: usize, name: &str, budget: Duration, body: impl FnOnce() -> Verdict) {
    let started = Instant::now();
    let v = body();
    let elapsed = started.elapsed();
    let pass = v.ok && elapsed <= budget;
    println!(
        "{} [{number:>2}] {name}: max residual {:.3e}, tolerance {:.0e}, {:.2} s of {} s",
        if pass { "PASS" } else { "FAIL" },
        v.residual,
        v.tolerance,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(v.ok, "criterion {number} ({name}) exceeded its tolerance");
    assert!(
        elapsed <= budget,
        "criterion {number} ({name}) exceeded its time budget"
    );
}

/// Runs one check on each `(model, sites)` pair and keeps the worst result.
fn sweep(check: CheckId, cases: &[(ModelKind, usize)]) -> Verdict {
    let mut worst = Verdict {
        residual: 0.0,
        tolerance: f64::INFINITY,
        ok: true,
    };
    for &(model, sites) in cases {
        let mut cfg = SuiteConfig::new(model, SEED);
        cfg.sites = sites;
        cfg.checks = Some(vec![check]);
        let report = run_suite(&cfg).expect("check runs").remove(0);
        println!(
            "       {model}, {sites} sites: {check} residual {:.3e}",
            report.max_residual
        );
        worst.residual = worst.residual.max(report.max_residual);
        worst.tolerance = worst.tolerance.min(report.tolerance);
        worst.ok &= report.pass;
    }
    worst
}

const TODA: [(ModelKind, usize); 2] = [(ModelKind::TodaAks, 2), (ModelKind::TodaCartan, 2)];
const ALL_MODELS: [(ModelKind, usize); 3] = [
    (ModelKind::TodaAks, 2),
    (ModelKind::TodaCartan, 2),
    (ModelKind::Gaudin, 3),
];

#[test]
fn c01_mcybe() {
    criterion(
        1,
        "modified classical Yang-Baxter equation",
        Duration::from_secs(1),
        || {
            let cases: Vec<_> = (1..=4)
                .flat_map(|n| [(ModelKind::TodaAks, n), (ModelKind::TodaCartan, n)])
                .collect();
            sweep(CheckId::Mcybe, &cases)
        },
    );
}

#[test]
fn c02_skewness_contrast() {
    criterion(2, "skewness contrast", Duration::from_secs(1), || {
        let cartan = sweep(CheckId::Skewness, &[(ModelKind::TodaCartan, 2)]);
        let defect = skew_defect(&ROperator::aks(3)).unwrap();
        println!("       toda-aks basis skewness defect {defect:.3} (required >= {AKS_MIN_SKEW_DEFECT})");
        Verdict {
            ok: cartan.ok && defect >= AKS_MIN_SKEW_DEFECT,
            ..cartan
        }
    });
}

#[test]
fn c03_involution() {
    criterion(3, "involution of the Hamiltonians", Duration::from_secs(1), || {
        sweep(CheckId::Involution, &ALL_MODELS)
    });
}

#[test]
fn c04_el_vs_lax() {
    criterion(
        4,
        "Euler-Lagrange fields equal Lax fields",
        Duration::from_secs(2),
        || sweep(CheckId::ElVsLax, &TODA),
    );
}

#[test]
fn c05_factorisation_oracle() {
    criterion(5, "factorisation oracle and RK4 order", Duration::from_secs(30), || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let pt = sampling::random_flaschka(&mut rng, 2);
        let order = coadjoint::harness::convergence_order(&pt, 1.0, &ORDER_STEPS).unwrap();
        println!("       fitted order {order:.4}");
        sweep(CheckId::FactorisationOracle, &[(ModelKind::TodaAks, 2)])
    });
}

#[test]
fn c06_isospectrality() {
    criterion(6, "isospectrality", Duration::from_secs(30), || {
        sweep(CheckId::Isospectrality, &ALL_MODELS)
    });
}

#[test]
fn c07_flow_commutativity() {
    criterion(7, "flow commutativity", Duration::from_secs(60), || {
        sweep(CheckId::FlowCommutativity, &ALL_MODELS)
    });
}

#[test]
fn c08_closure() {
    criterion(8, "closure relation", Duration::from_secs(60), || {
        sweep(CheckId::Closure, &ALL_MODELS)
    });
}

#[test]
fn c09_double_zero() {
    criterion(9, "double-zero identity", Duration::from_secs(10), || {
        sweep(CheckId::DoubleZeroIdentity, &TODA)
    });
}

fn staircases(a: FlowId, b: FlowId, t: f64) -> (MultiTimePath, MultiTimePath) {
    let h = 1e-3;
    (
        MultiTimePath::new(h).then(a, t).then(b, t),
        MultiTimePath::new(h).then(b, t).then(a, t),
    )
}

fn action_gap<M: LagrangianSystem>(model: &M, start: &[M::Scalar], a: FlowId, b: FlowId) -> f64 {
    let (p, q) = staircases(a, b, 0.2);
    (action(model, &p, start).unwrap() - action(model, &q, start).unwrap()).modulus()
}

#[test]
fn c10_action_path_independence() {
    criterion(10, "action path independence", Duration::from_secs(10), || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let (t1, t2) = (FlowId::level(1), FlowId::level(2));
        let aks = AksChart { sites: 2 };
        let x = sampling::random_ub(&mut rng, 2).to_vec();
        let cartan = CartanChart { sites: 2 };
        let y = sampling::random_wz(&mut rng, 2).to_vec();
        let shape = GaudinSampling {
            sites: 3,
            dim: 2,
            real: false,
        };
        let group = GaudinGroup::new(sampling::random_gaudin(&mut rng, &shape));
        let g0 = group.initial_state();
        let gaps = [
            action_gap(
                &AksChart { sites: 1 },
                &sampling::random_ub(&mut rng, 1).to_vec(),
                t1,
                t2,
            ),
            action_gap(&aks, &x, t1, t2),
            action_gap(&cartan, &y, t1, t2),
            action_gap(&group, &g0, FlowId::new(1, 0), FlowId::new(2, 2)),
        ];
        let drifted = Drifted {
            inner: &aks,
            flow: t1,
            drift: vec![0.5; x.len()],
        };
        let control = action_gap(&drifted, &x, t1, t2);
        let worst = gaps.iter().copied().fold(0.0, f64::max);
        println!("       largest on-shell gap {worst:.3e}; off-shell control {control:.3e} (required >= 1e-2)");
        Verdict {
            residual: worst,
            tolerance: 1e-6,
            ok: worst <= 1e-6 && control >= 1e-2,
        }
    });
}

#[test]
fn c11_hamiltonian_extraction() {
    criterion(11, "Gaudin Hamiltonian extraction", Duration::from_secs(5), || {
        sweep(CheckId::HamiltonianExtraction, &[(ModelKind::Gaudin, 3)])
    });
}
