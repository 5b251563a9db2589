use std::fs;

use openangle::harness::{
    execute_campaign, load_results, run_campaign, Campaign, CampaignFile, EpsGrid, Profile, RunOptions,
};
use openangle::ScalarizerKind;

fn small() -> Campaign {
    let mut f = CampaignFile::profile(Profile::Desk);
    f.rhos = vec![0.0];
    f.runs = 5;
    f.delta.divisions = 10;
    f.scalarizers.truncate(1);
    f.scalarizers[0].eps = EpsGrid::Linear { steps: 4 };
    f.resolve().unwrap()
}

#[test]
fn small_campaign_is_reproducible() {
    let c = small();
    assert_eq!(c.deltas().count(), 9);
    assert_eq!(c.eps_grid(ScalarizerKind::Norm).unwrap().len(), 5);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sa = run_campaign(&c, a.path(), RunOptions::default()).unwrap();
    run_campaign(&c, b.path(), RunOptions { workers: 3, dump_offspring: false }).unwrap();
    assert_eq!(sa.executed, 225);
    for name in ["results.csv", "trajectories.csv", "manifest.toml"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let loaded = load_results(a.path(), true).unwrap();
    assert_eq!(loaded.records().len(), 225);
    let memory = execute_campaign(&c, RunOptions::default()).unwrap();
    assert_eq!(loaded.records(), memory.records());
}

#[test]
fn empty_direction_grid_is_rejected() {
    let mut f = CampaignFile::profile(Profile::Desk);
    f.delta.divisions = 1;
    assert!(f.resolve().is_err());
}
