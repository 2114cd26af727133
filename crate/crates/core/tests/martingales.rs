use condensa_core::ensemble::{run_ensemble, zero_mean_statistic, EnsembleConfig};
use condensa_core::martingale::MartingaleId;
use condensa_core::trajectory::{run, CheckLevel, CheckpointSchedule};
use condensa_core::SimulationConfig;

#[test]
fn decompositions_hold_at_every_checkpoint() {
    for g in ["1/2", "1", "5/4", "2", "3"] {
        let mut c = SimulationConfig::new(g.parse().unwrap(), 50_000, 3);
        c.k_track = Some(condensa_core::martingale::default_k_track(&c.gamma));
        c.checks = CheckLevel::Checkpoints;
        c.schedule = CheckpointSchedule::geometric(1.5);
        let t = run(&c).unwrap();
        for cp in &t.checkpoints {
            let m = cp.martingale.as_ref().unwrap();
            assert!(m.qv_m.iter().chain(&m.qv_q).all(|&q| q >= 0.0 && q <= cp.n as f64));
            assert!(m.qv_r >= 0.0 && m.qv_r <= cp.n as f64);
        }
    }
}

#[test]
fn martingales_have_mean_zero() {
    let mut t = SimulationConfig::new("5/4".parse().unwrap(), 100_000, 77);
    t.k_track = Some(7);
    t.checks = CheckLevel::Off;
    t.schedule = CheckpointSchedule::geometric(10.0);
    let ens = run_ensemble(&EnsembleConfig::new(t, 400)).unwrap();
    let ids = [1, 2, 3, 4, 5]
        .map(MartingaleId::M)
        .into_iter()
        .chain([2, 3, 4, 5, 6].map(MartingaleId::Q))
        .chain([MartingaleId::R]);
    for id in ids {
        let z = zero_mean_statistic(&ens, id, 100_000).unwrap();
        assert!(z.value.0.abs() <= 4.0 * z.value.1, "{id:?}: {:?}", z.value);
        assert!(z.compensated_square.0.abs() <= 4.0 * z.compensated_square.1, "{id:?}: {:?}", z.compensated_square);
    }
    let m2 = zero_mean_statistic(&ens, MartingaleId::M(2), 100_000).unwrap();
    assert!(m2.value.0.abs() <= 3.0 * m2.value.1);
}
