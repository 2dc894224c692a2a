use mddsat::instance::{
    generate_random_instance, validate, ConflictPolicy, CostSemantics, GeneratorParams, Graph, MapfInstance,
};
use mddsat::oracle::{optimal_sum_of_costs, OracleLimits, OracleOutcome};
use mddsat::solver::{e_mdd_sat, mdd_sat, u_mdd_sat, Epsilon, SolveOptions, SolveOutcome, Verdict};

fn line3() -> MapfInstance {
    MapfInstance::from_pairs(Graph::path(3), [(0, 2)]).unwrap()
}

fn swap2x2() -> MapfInstance {
    MapfInstance::from_pairs(Graph::open_grid(2, 2), [(0, 3), (3, 0)]).unwrap()
}

/// 0 - 1 - 2 with a pocket 3 hanging off 1; the agents start at the ends
/// and swap sides.
fn side_pocket() -> MapfInstance {
    let g = Graph::from_edges(4, [(0, 1), (1, 2), (1, 3)]).unwrap();
    MapfInstance::from_pairs(g, [(0, 2), (2, 0)]).unwrap()
}

fn soc(outcome: &SolveOutcome) -> u64 {
    match outcome {
        SolveOutcome::Solved { soc, .. } => *soc,
        other => panic!("not solved: {other:?}"),
    }
}

fn oracle(inst: &MapfInstance, policy: ConflictPolicy) -> u64 {
    optimal_sum_of_costs(inst, policy, CostSemantics::GoalWaitFree, &OracleLimits::default())
        .cost()
        .expect("oracle solves fixture")
}

#[test]
fn line3_solves_at_zero() {
    let r = mdd_sat(&line3(), &SolveOptions::default()).unwrap();
    assert_eq!(soc(&r.outcome), 2);
    assert_eq!(r.final_delta(), Some(0));
    assert_eq!(r.certificates.lower_bound, 2);
    let u = u_mdd_sat(&line3(), &SolveOptions::default()).unwrap();
    assert_eq!(soc(&u.outcome), 2);
    assert_eq!(u.certificates.effective_ratio, Some(1.into()));
}

#[test]
fn swap2x2_all_algorithms() {
    let opts = SolveOptions::default();
    assert_eq!(soc(&mdd_sat(&swap2x2(), &opts).unwrap().outcome), 4);
    assert_eq!(oracle(&swap2x2(), ConflictPolicy::Swap), 4);
    let u = u_mdd_sat(&swap2x2(), &opts).unwrap();
    assert_eq!(u.final_delta(), Some(0));
    assert_eq!(soc(&u.outcome), 4);
    let e = e_mdd_sat(&swap2x2(), "0.5".parse().unwrap(), &opts).unwrap();
    assert_eq!(soc(&e.outcome), 4);
}

#[test]
fn side_pocket_needs_extra_cost() {
    let inst = side_pocket();
    let r = mdd_sat(&inst, &SolveOptions::default()).unwrap();
    let opt = oracle(&inst, ConflictPolicy::Swap);
    assert!(opt > r.sic as u64);
    assert_eq!(soc(&r.outcome), opt);
    assert!(r.final_delta().unwrap() > 0);
    assert!(r.iterations[..r.iterations.len() - 1].iter().all(|it| it.verdict.is_unsat()));
    assert_eq!(r.certificates.lower_bound, opt);
    assert_eq!(r.certificates.bound_holds, Some(true));
}

#[test]
fn unsolvable_hits_the_cap() {
    let inst = MapfInstance::from_pairs(Graph::path(2), [(0, 1), (1, 0)]).unwrap();
    let opts = SolveOptions { delta_cap: Some(3), ..SolveOptions::default() };
    let r = mdd_sat(&inst, &opts).unwrap();
    assert_eq!(r.outcome, SolveOutcome::BudgetExhausted { delta_cap: 3 });
    assert_eq!(r.iterations.len(), 4);
    assert!(r.iterations.iter().all(|it| it.verdict != Verdict::Sat));
}

#[test]
fn random_instances_match_the_oracle() {
    let mut checked = 0;
    for seed in 0..40u64 {
        let params = GeneratorParams {
            width: 4,
            height: 4,
            obstacle_ratio: 0.1,
            agents: 2 + (seed % 2) as usize,
            walk_length: 8,
        };
        let Ok(inst) = generate_random_instance(&params, seed) else { continue };
        for policy in [ConflictPolicy::Swap, ConflictPolicy::Follow] {
            let OracleOutcome::Optimal { cost: opt, .. } =
                optimal_sum_of_costs(&inst, policy, CostSemantics::GoalWaitFree, &OracleLimits::default())
            else {
                continue;
            };
            let opts = SolveOptions { policy, ..SolveOptions::default() };
            let r = mdd_sat(&inst, &opts).unwrap();
            assert_eq!(soc(&r.outcome), opt, "seed {seed} {policy}");
            let plan = r.outcome.plan().unwrap();
            assert!(validate(&inst, plan, policy).valid);

            let eps: Epsilon = "0.5".parse().unwrap();
            let e = e_mdd_sat(&inst, eps, &opts).unwrap();
            assert!(eps.admits(soc(&e.outcome), opt), "seed {seed}");

            let u = u_mdd_sat(&inst, &opts).unwrap();
            let SolveOutcome::Solved { soc: us, delta, plan, .. } = &u.outcome else { panic!() };
            assert!(validate(&inst, plan, policy).valid);
            assert!(*us <= inst.agent_count() as u64 * u64::from(u.mu0 + delta));
            checked += 1;
        }
    }
    assert!(checked > 30, "{checked}");
}

#[test]
fn report_serializes() {
    let r = e_mdd_sat(&swap2x2(), "0.1".parse().unwrap(), &SolveOptions::default()).unwrap();
    let json = r.to_json();
    assert_eq!(json["algorithm"]["name"], "e-mdd-sat");
    assert_eq!(json["algorithm"]["epsilon"], "0.1");
    assert_eq!(json["outcome"]["status"], "solved");
    assert_eq!(json["certificates"]["bound_holds"], true);
    let back: mddsat::solver::SolveReport = serde_json::from_value(json).unwrap();
    assert_eq!(back.outcome, r.outcome);
}
