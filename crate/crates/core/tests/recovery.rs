use coordinfer::evaluate::{cross_validate, CvConfig};
use coordinfer::fit::StrategyLabel;
use coordinfer::simulate::{simulate, Regime, SimSpec};

fn labels(regime: Regime, events: usize, seed: u64) -> Vec<(u32, StrategyLabel)> {
    let data: Vec<_> = (0..events)
        .map(|k| simulate(&SimSpec::new(regime, seed + k as u64)).unwrap())
        .collect();
    let cfg = CvConfig {
        folds: 5,
        ..CvConfig::default()
    };
    cross_validate(&data, &cfg)
        .unwrap()
        .agents
        .iter()
        .filter(|a| !a.informed)
        .map(|a| (a.agent_id, a.label))
        .collect()
}

fn share(l: &[(u32, StrategyLabel)], want: StrategyLabel) -> f64 {
    l.iter().filter(|x| x.1 == want).count() as f64 / l.len() as f64
}

#[test]
fn hierarchical_agents_labelled_hm() {
    let l = labels(Regime::Hm, 20, 300);
    assert!(share(&l, StrategyLabel::Hm) > 0.5, "{l:?}");
    assert!(
        l.iter()
            .all(|x| matches!(x.1, StrategyLabel::Hm | StrategyLabel::Mixed)),
        "{l:?}"
    );
}

#[test]
fn local_agents_labelled_lra() {
    let l = labels(Regime::Lra, 20, 400);
    assert!(share(&l, StrategyLabel::Lra) >= 0.95, "{l:?}");
}

#[test]
fn split_population_recovered() {
    let l = labels(Regime::HmAndLra, 20, 500);
    let hm: Vec<_> = l.iter().filter(|x| x.0 <= 10).copied().collect();
    let lra: Vec<_> = l.iter().filter(|x| x.0 > 10).copied().collect();
    assert!(share(&hm, StrategyLabel::Hm) >= 0.9, "{hm:?}");
    assert!(share(&lra, StrategyLabel::Lra) >= 0.9, "{lra:?}");
}
