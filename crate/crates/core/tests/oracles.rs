mod common;

use common::*;
use planbench::ara_star::{ara_search, LatticeState, SearchGoal};
use planbench::planning::Deadline;
use planbench::{
    check_motion, plan_rrt_connect, validate_path, AraParams, CollisionChecker, GoalSpec,
    MotionPrimitiveSet, Query, RrtParams, WorldModel,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fk_matches_matrix_chain(seed in any::<u64>(), dof in 1usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let robot = random_robot(&mut rng, dof);
        for _ in 0..10 {
            let q = random_config(&mut rng, &robot, 0.0);
            let got = robot.forward_kinematics(&q).unwrap();
            let want = oracle_sphere_centers(&robot, &q);
            prop_assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                for (a, b) in g.center.iter().zip(w) {
                    prop_assert!((a - b).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn check_config_matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dof = rng.gen_range(2..=7);
        let robot = random_robot(&mut rng, dof);
        let world = WorldModel::new(
            (0..rng.gen_range(0..6))
                .map(|_| random_obstacle(&mut rng, [-0.8, -0.8, -0.8], [0.8, 0.8, 0.8], 0.3))
                .collect(),
        );
        let checker = CollisionChecker::new(&robot, &world);
        for _ in 0..20 {
            let q = random_config(&mut rng, &robot, 0.05);
            let free = oracle_status(&robot, &world, &q) == OracleStatus::Free;
            prop_assert_eq!(checker.check_config(&q).unwrap().is_free(), free);
        }
    }

    #[test]
    fn motion_check_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_lattice_instance(&mut rng, 3);
        let a = random_config(&mut rng, &inst.robot, 0.0);
        let b = random_config(&mut rng, &inst.robot, 0.0);
        let step = rng.gen_range(0.01..0.3);
        prop_assert_eq!(
            check_motion(&inst.robot, &inst.world, &a, &b, step).unwrap(),
            check_motion(&inst.robot, &inst.world, &b, &a, step).unwrap()
        );
    }

    #[test]
    fn halving_the_step_never_frees_a_blocked_motion(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_lattice_instance(&mut rng, 3);
        let a = random_config(&mut rng, &inst.robot, 0.0);
        let b = random_config(&mut rng, &inst.robot, 0.0);
        let step = rng.gen_range(0.02..0.3);
        // the halved step tests a superset of the samples only when the
        // segment count exactly doubles
        let x = inst.robot.distance(&a, &b).unwrap() / step;
        prop_assume!(x.fract() > 0.55 && x.fract() < 0.95);
        let coarse = check_motion(&inst.robot, &inst.world, &a, &b, step).unwrap();
        let fine = check_motion(&inst.robot, &inst.world, &a, &b, step / 2.0).unwrap();
        prop_assert!(!fine || coarse);
    }

    #[test]
    fn rrt_paths_validate(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_lattice_instance(&mut rng, 2);
        let start = inst.decode(&inst.start);
        let goal = GoalSpec::config(inst.decode(&inst.goal), vec![0.05; 2]);
        let query = Query::new(start, goal, 0.5).with_seed(seed);
        let params = RrtParams { seed, ..RrtParams::default() };
        let result = plan_rrt_connect(&inst.robot, &inst.world, &query, &params).unwrap();
        if let Some(path) = result.path() {
            prop_assert!(validate_path(&inst.robot, &inst.world, &query, path, params.edge_step).unwrap());
        }
    }
}

#[test]
fn ara_matches_dijkstra_on_small_lattices() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let dof = 2 + rng.gen_range(0..2);
        let inst = random_lattice_instance(&mut rng, dof);
        let optimum = inst.dijkstra();
        let checker = CollisionChecker::new(&inst.robot, &inst.world);
        let goal = inst.goal_spec();
        let target = inst.decode(&inst.goal);
        let prims =
            MotionPrimitiveSet::new(inst.robot.dof(), inst.primitives.clone(), 0.0).unwrap();
        let params = AraParams {
            epsilon_schedule: vec![2.0, 1.0],
            edge_step: inst.edge_step,
            ..AraParams::default()
        };
        let out = ara_search(
            &checker,
            &LatticeState::new(inst.start.clone()),
            SearchGoal {
                spec: &goal,
                config: Some(&target),
            },
            &prims,
            &params,
            &Deadline::after(60.0),
        )
        .unwrap();
        assert_eq!(out.cost, optimum);
        if let (Some(path), Some(first)) = (&out.path, out.stats.incumbents.first()) {
            assert_eq!(
                path.first().unwrap().values(),
                inst.decode(&inst.start).as_slice()
            );
            assert!(first.1 <= 2.0 * optimum.unwrap());
        }
    }
}
