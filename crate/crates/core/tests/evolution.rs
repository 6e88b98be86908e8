use nca_pathfind::cli::dataset::generate_samples;
use nca_pathfind::evolve::{
    self, mutate_maze, BudgetedNca, EvolutionConfig, OracleSolver, ZerosSolver,
};
use nca_pathfind::grid::Task;
use nca_pathfind::oracle;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutation_keeps_endpoints_and_reachability(seed in any::<u64>(), flips in 1usize..20) {
        let m = generate_samples(Task::ShortestPath, 1, 10, 10, seed).unwrap().remove(0).maze;
        let mut rng = nca_pathfind::seeded_rng(seed ^ 0x5eed);
        if let Ok(c) = mutate_maze(&m, &mut rng, flips, Task::ShortestPath) {
            prop_assert_eq!(c.source(), m.source());
            prop_assert_eq!(c.target(), m.target());
            prop_assert!(oracle::shortest_path_union(&c).is_ok());
            let changed = (0..m.len()).filter(|&i| m.tile(i) != c.tile(i)).count();
            prop_assert_eq!(changed, flips);
        }
    }
}

fn config(generations: usize) -> EvolutionConfig {
    let mut cfg = EvolutionConfig::for_size(12, 12, Task::ShortestPath, 42);
    cfg.generations = generations;
    cfg.batch_size = 16;
    cfg.loss_threshold = f64::INFINITY;
    cfg
}

#[test]
fn deterministic_under_seed() {
    let data = generate_samples(Task::ShortestPath, 48, 12, 12, 1).unwrap();
    let solver = BudgetedNca { budget: 8 };
    let a = evolve::run_evolution(data.clone(), &solver, &config(6)).unwrap();
    let b = evolve::run_evolution(data, &solver, &config(6)).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}

#[test]
fn zero_generations_is_identity() {
    let data = generate_samples(Task::ShortestPath, 8, 8, 8, 1).unwrap();
    let (out, stats) = evolve::run_evolution(data.clone(), &ZerosSolver, &config(0)).unwrap();
    assert_eq!(out, data);
    assert!(stats.is_empty());
}

#[test]
fn labels_stay_consistent_and_fitness_rises() {
    let data = generate_samples(Task::ShortestPath, 48, 12, 12, 2).unwrap();
    let (out, stats) = evolve::run_evolution(data, &BudgetedNca { budget: 8 }, &config(8)).unwrap();
    for s in &out {
        assert_eq!(evolve::label(&s.maze, s.task).as_ref(), Some(&s.solution));
    }
    assert!(stats.windows(2).all(|w| w[1].mean_loss >= w[0].mean_loss));
    assert!(stats.iter().all(|s| s.replacements <= 16));
}

#[test]
fn diameter_datasets_evolve() {
    let data = generate_samples(Task::Diameter, 16, 6, 6, 3).unwrap();
    let mut cfg = config(2);
    cfg.task = Task::Diameter;
    cfg.batch_size = 4;
    let (out, _) = evolve::run_evolution(data, &OracleSolver, &cfg).unwrap();
    for s in &out {
        assert_eq!(evolve::label(&s.maze, s.task).as_ref(), Some(&s.solution));
    }
}

#[test]
fn oversized_batch_is_rejected() {
    let data = generate_samples(Task::ShortestPath, 4, 6, 6, 1).unwrap();
    assert!(evolve::run_evolution(data, &ZerosSolver, &config(1)).is_err());
}
