use nsbh_core::ensemble::SpectrumProfile;
use nsbh_core::lab::prop1::{check_prop1_term, Sextet};
use nsbh_core::solver::{run, snapshot, Dynamics, InitialData, SolverConfig};
use nsbh_core::uniqueness::{prop1_trace, run_pair, PairRun, Perturbation, PerturbationKind};
use nsbh_core::{AnisoGrid, NormEngine, NormSpec};

fn config() -> SolverConfig {
    let mut cfg = SolverConfig::new(AnisoGrid::unit(16, 16).unwrap(), 5.0, 0.04);
    cfg.dt = Some(0.01);
    cfg.record_every = 2;
    cfg
}

fn base(cfg: &SolverConfig) -> nsbh_core::solver::State {
    InitialData::Random {
        profile: SpectrumProfile::PowerLaw { gamma: 1.5 },
        u_l2: 0.05,
        rho_l2: 0.05,
        seed: 21,
    }
    .generate(cfg)
    .unwrap()
}

#[test]
fn recorded_block_sums_match_the_ensemble_check() {
    let cfg = config();
    let p = Perturbation {
        kind: PerturbationKind::WhiteBand { k_max: 4.0 },
        epsilon: 1e-3,
        seed: 2,
    };
    let pr = PairRun::perturbed(cfg.clone(), base(&cfg), p).unwrap();
    let series = run_pair(&pr).unwrap();
    let trace = prop1_trace(&series);
    assert_eq!(trace.len(), 3);

    let dynamics = Dynamics::new(&cfg).unwrap();
    let (mut a, mut b) = (pr.init_a.galerkin(5.0).unwrap(), pr.init_b.galerkin(5.0).unwrap());
    for _ in 0..4 {
        a = dynamics.step(&a, 0.01).unwrap();
        b = dynamics.step(&b, 0.01).unwrap();
    }
    let row = series.rows.last().unwrap();
    assert!((row.t - a.t).abs() < 1e-15);
    let engine = NormEngine::new(cfg.grid);
    let x = Sextet::from_pair(a.u.clone(), a.rho.clone(), b.u.clone(), b.rho.clone());
    for i in 1..=9 {
        let r = check_prop1_term(i, &engine, &x, cfg.s_index).unwrap();
        let (l, bound) = (row.l.unwrap()[i - 1].abs(), row.bounds.unwrap()[i - 1]);
        assert!((r.lhs - l).abs() <= 1e-12 * l.max(1e-300), "L{i}: {} vs {l}", r.lhs);
        assert!((r.rhs_without_constant - bound).abs() <= 1e-12 * bound, "bound {i}");
        assert!((trace[2].1[i - 1] - r.ratio).abs() <= 1e-12 * r.ratio.max(1e-300));
    }
}

#[test]
fn snapshot_restart_reproduces_the_run() {
    let cfg = config();
    let init = base(&cfg);
    let whole = run(&cfg, &init).unwrap();
    let mut half = cfg.clone();
    half.t_end = 0.02;
    let first = run(&half, &init).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mid.snap");
    snapshot::save(&path, &first.final_state).unwrap();
    let restored = snapshot::load(&path).unwrap();
    assert_eq!(restored, first.final_state);
    let second = run(&half, &restored).unwrap();
    assert_eq!(second.final_state.u, whole.final_state.u);
    assert_eq!(second.final_state.rho, whole.final_state.rho);
}

#[test]
fn norm_strings_agree_with_engine_calls() {
    let cfg = config();
    let s = base(&cfg);
    let engine = NormEngine::new(cfg.grid);
    let spec: NormSpec = "H:0:0.75".parse().unwrap();
    let via_spec = engine.norm(&s.rho, &spec).unwrap();
    assert!((via_spec - engine.hts_sq(&s.rho, 0.0, 0.75).sqrt()).abs() <= 1e-14 * via_spec);
    let v = engine.norm_vec(&s.u, &spec).unwrap();
    assert!((v - engine.hts_vec(&s.u, 0.0, 0.75)).abs() <= 1e-14 * v);
}
