//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use beliefnet::bp::{map_decode, run_bp, BpMode, Schedule};
use beliefnet::consensus::{
    run_coupled_inequality, run_dual_decomposition, ConsensusProblem, CoupledAgent, CoupledProblem, DualParams,
    QuadraticAgent, SlaveProblem, StepRule,
};
use beliefnet::fdd::{build_fdd_mrf, centralized_posterior, distributed_fdd, FddMethod, FddParams};
use beliefnet::free_energy::{bethe_free_energy, gibbs_free_energy, kl_divergence, mean_field_free_energy};
use beliefnet::io::read_scenario;
use beliefnet::model::{exact_marginals, partition_function, JointTable, DEFAULT_STATE_CAP};
use beliefnet::optimize::{minimize_bethe_direct, minimize_bethe_via_bp, minimize_mean_field, BOParams, InitMode};
use beliefnet::BeliefState;
use common::{random_fdd, random_graph, random_simplex, random_tree, tree_diameter};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tree_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for t in 0..200 {
        let m = random_tree(&mut rng, 10);
        let rounds = tree_diameter(&m) + 1;
        let r = run_bp(&m, BpMode::Sum, Schedule::synchronous(), rounds, 1e-12).map_err(|e| e.to_string())?;
        ensure(r.converged, || format!("tree {t} not converged in {rounds} rounds"))?;
        let exact = exact_marginals(&m).map_err(|e| e.to_string())?;
        let err = r.beliefs.max_node_difference(&exact);
        ensure(err <= 1e-9, || format!("tree {t}: error {err:.3e}"))?;
        worst = worst.max(err);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("max error {worst:.1e}"))
}

fn max_product_map() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut done, mut resampled) = (0, 0);
    while done < 200 {
        let m = random_tree(&mut rng, 10);
        let table = JointTable::enumerate(&m, DEFAULT_STATE_CAP).map_err(|e| e.to_string())?;
        let mut p = table.probabilities().to_vec();
        p.sort_by(|a, b| b.total_cmp(a));
        if p.len() > 1 && p[0] - p[1] <= 1e-9 * p[0] {
            resampled += 1;
            continue;
        }
        let r = run_bp(&m, BpMode::Max, Schedule::synchronous(), 100, 1e-12).map_err(|e| e.to_string())?;
        ensure(map_decode(&r) == table.argmax(), || format!("tree {done}: decoded MAP differs"))?;
        done += 1;
    }
    Ok(format!("200/200 ({resampled} tied trees resampled)"))
}

fn free_energy_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut kl_err, mut bethe_err, mut mf_slack) = (0.0f64, 0.0f64, f64::INFINITY);
    for t in 0..100 {
        let m = random_graph(&mut rng, 7);
        let table = JointTable::enumerate(&m, DEFAULT_STATE_CAP).map_err(|e| e.to_string())?;
        let f = table.partition().free_energy();
        let beta = random_simplex(&mut rng, table.len());
        let d = kl_divergence(&beta, table.probabilities()).map_err(|e| e.to_string())?;
        let g = gibbs_free_energy(&m, &beta).map_err(|e| e.to_string())?;
        kl_err = kl_err.max((d - (g - f)).abs());
        ensure((d - (g - f)).abs() <= 1e-9, || format!("model {t}: D - (G - F) = {:.3e}", d - (g - f)))?;

        let nodes = m.cardinalities().into_iter().map(|c| random_simplex(&mut rng, c)).collect();
        let mf = mean_field_free_energy(&m, &BeliefState::node_only(nodes)).map_err(|e| e.to_string())?;
        ensure(mf >= f - 1e-10, || format!("model {t}: mean field {mf} below F {f}"))?;
        mf_slack = mf_slack.min(mf - f);

        let tree = random_tree(&mut rng, 8);
        let exact = exact_marginals(&tree).map_err(|e| e.to_string())?;
        let ft = partition_function(&tree).map_err(|e| e.to_string())?.free_energy();
        let err = (bethe_free_energy(&tree, &exact).map_err(|e| e.to_string())? - ft).abs();
        ensure(err <= 1e-9, || format!("tree {t}: Bethe off by {err:.3e}"))?;
        bethe_err = bethe_err.max(err);
    }
    Ok(format!(
        "KL identity {kl_err:.1e}, Bethe on trees {bethe_err:.1e}, min mean-field gap {mf_slack:.1e}"
    ))
}

fn mean_field_monotone() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let m = random_graph(&mut rng, 8);
        let params = BOParams {
            init: InitMode::RandomDirichlet(t),
            restarts: 0,
            ..BOParams::default()
        };
        let r = minimize_mean_field(&m, &params).map_err(|e| e.to_string())?;
        for w in r.objective_trace.windows(2) {
            worst = worst.max(w[1] - w[0]);
            ensure(w[1] - w[0] <= 1e-12, || format!("model {t}: objective rose by {:.3e}", w[1] - w[0]))?;
        }
    }
    Ok(format!("largest step increase {worst:.1e}"))
}

fn bethe_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut belief_gap, mut objective_gap) = (0.0f64, 0.0f64);
    for t in 0..50 {
        let m = random_tree(&mut rng, 8);
        let f = partition_function(&m).map_err(|e| e.to_string())?.free_energy();
        let direct = minimize_bethe_direct(&m, &BOParams::default()).map_err(|e| e.to_string())?;
        let via_bp = minimize_bethe_via_bp(&m, &BOParams::default()).map_err(|e| e.to_string())?;
        let gap = direct.beliefs.max_node_difference(&via_bp.beliefs);
        ensure(gap <= 1e-6, || format!("tree {t}: beliefs differ by {gap:.3e}"))?;
        for r in [&direct, &via_bp] {
            let err = (r.objective - f).abs();
            ensure(err <= 1e-6, || format!("tree {t}: objective off by {err:.3e}"))?;
            objective_gap = objective_gap.max(err);
        }
        belief_gap = belief_gap.max(gap);
    }
    Ok(format!("beliefs {belief_gap:.1e}, objective vs -ln Z {objective_gap:.1e}"))
}

fn dual_decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_iters = 0;
    for alpha0 in [1.0, 0.5, 0.1] {
        let c: Vec<f64> = (0..2).map(|_| rand::Rng::random_range(&mut rng, -5.0..5.0)).collect();
        let agents: Vec<Box<dyn SlaveProblem>> =
            c.iter().map(|&c| Box::new(QuadraticAgent::new(vec![c])) as Box<dyn SlaveProblem>).collect();
        let problem = ConsensusProblem::consensus(agents).map_err(|e| e.to_string())?;
        let params = DualParams {
            step: StepRule::Diminishing { alpha0 },
            max_iters: 10_000,
            tolerance: 1e-6,
        };
        let r = run_dual_decomposition(&problem, &params).map_err(|e| e.to_string())?;
        ensure(r.converged, || format!("alpha0 {alpha0}: residual {:.3e}", r.residual))?;
        let target = (c[0] + c[1]) / 2.0;
        ensure((r.solution[0] - target).abs() <= 1e-6, || {
            format!("alpha0 {alpha0}: consensus {} vs {target}", r.solution[0])
        })?;
        ensure(r.max_price_consistency <= 1e-9, || {
            format!("alpha0 {alpha0}: C^T v reached {:.3e}", r.max_price_consistency)
        })?;
        worst_iters = worst_iters.max(r.iterations);
    }

    let agents: Vec<Box<dyn CoupledAgent>> = (0..2)
        .map(|_| Box::new(QuadraticAgent::new(vec![2.0]).with_curvature(2.0)) as Box<dyn CoupledAgent>)
        .collect();
    let problem = CoupledProblem::new(agents, vec![DMatrix::from_element(1, 1, -1.0); 2], vec![2.0])
        .map_err(|e| e.to_string())?;
    let r = run_coupled_inequality(&problem, &DualParams::default()).map_err(|e| e.to_string())?;
    for x in &r.local {
        ensure((x[0] - 1.0).abs() <= 1e-5, || format!("coupled inequality gave x = {}", x[0]))?;
    }
    Ok(format!("quadratic consensus within {worst_iters} updates, KKT point x1 = x2 = 1"))
}

fn fdd_end_to_end() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = FddParams::default();
    let mut worst = 0.0f64;
    for t in 0..100 {
        let inst = random_fdd(&mut rng, 1e-3);
        let post = centralized_posterior(&inst.bank, &inst.evidence).map_err(|e| e.to_string())?;
        for method in [FddMethod::BpSum, FddMethod::BetheConsensus] {
            let d = distributed_fdd(&inst.bank, &inst.evidence, &inst.topology, method, &params)
                .map_err(|e| e.to_string())?;
            ensure(d.oracle_agreement, || format!("scenario {t}: {method} decided {}", d.label))?;
            if method == FddMethod::BetheConsensus {
                let err = d
                    .consensus_belief
                    .iter()
                    .zip(&post)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                ensure(err <= 1e-5, || format!("scenario {t}: consensus off by {err:.3e}"))?;
                worst = worst.max(err);
            }
        }
    }
    Ok(format!("100/100 for bp-sum and bethe-consensus, consensus error {worst:.1e}"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = data("frustrated_triangle.json");
    let mmap = data("mmap_caveat.json");
    let star = data("fdd_star.json");
    let probe = data("fdd_loopy_probe.json");
    let commands: Vec<Vec<String>> = vec![
        vec!["infer".into(), model.display().to_string(), "--method".into(), "bethe".into()],
        vec!["infer".into(), mmap.display().to_string(), "--method".into(), "mf".into()],
        vec!["infer".into(), mmap.display().to_string(), "--method".into(), "bp-sum".into()],
        vec!["oracle".into(), model.display().to_string()],
        vec!["fdd".into(), star.display().to_string()],
        vec!["fdd".into(), probe.display().to_string()],
    ];
    let bin = env!("CARGO_BIN_EXE_beliefnet");
    for trial in 0..10 {
        let args = &commands[trial % commands.len()];
        let mut outputs = Vec::new();
        for threads in [1, 2, 4, 7] {
            let trace = dir.path().join(format!("trace-{trial}-{threads}.csv"));
            let mut cmd = Command::new(bin);
            cmd.args(args).args(["--threads", &threads.to_string()]);
            if args[0] != "oracle" {
                cmd.args(["--seed", "11", "--trace"]).arg(&trace);
            }
            let out = cmd.output().map_err(|e| e.to_string())?;
            let code = out.status.code();
            ensure(matches!(code, Some(0) | Some(3)), || {
                format!("{args:?} exited with {code:?}: {}", String::from_utf8_lossy(&out.stderr))
            })?;
            let trace_text = std::fs::read(&trace).unwrap_or_default();
            outputs.push((out.stdout, trace_text, code));
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || format!("trial {trial}: {args:?} output differs across thread counts"))?;
    }
    Ok("10 trials byte-identical across 1, 2, 4, 7 threads".into())
}

fn negative_probe() -> Outcome {
    let s = read_scenario(&data("fdd_loopy_probe.json")).map_err(|e| e.to_string())?;
    let mrf = build_fdd_mrf(&s.bank, &s.evidence, &s.topology, s.epsilon).map_err(|e| e.to_string())?;
    ensure(!mrf.is_forest(), || "probe topology is not loopy".into())?;
    let exact = exact_marginals(&mrf).map_err(|e| e.to_string())?;
    let post = centralized_posterior(&s.bank, &s.evidence).map_err(|e| e.to_string())?;
    let oracle = beliefnet::belief::argmax(&post);
    ensure(exact.nodes().iter().all(|b| beliefnet::belief::argmax(b) == oracle), || {
        "enumeration disagrees with the product posterior".into()
    })?;
    let params = FddParams {
        epsilon: s.epsilon,
        ..FddParams::default()
    };
    let d = distributed_fdd(&s.bank, &s.evidence, &s.topology, FddMethod::BpSum, &params).map_err(|e| e.to_string())?;
    ensure(d.diagnostics.converged, || "sum-product did not converge on the probe".into())?;
    ensure(!d.oracle_agreement, || "discrepancy detector did not fire".into())?;
    Ok(format!(
        "converged in {} rounds, decided `{}` against oracle `{}`",
        d.diagnostics.iterations,
        d.label,
        s.bank.labels()[oracle]
    ))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "tree exactness", tree_exactness),
        (2, "max-product joint MAP", max_product_map),
        (3, "free-energy identities", free_energy_identities),
        (4, "mean-field monotonicity", mean_field_monotone),
        (5, "Bethe solver agreement", bethe_agreement),
        (6, "dual decomposition", dual_decomposition),
        (7, "FDD end-to-end", fdd_end_to_end),
        (8, "CLI determinism", determinism),
        (9, "negative probe", negative_probe),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {n}: {name} ({detail}; {secs:.2} s)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {n}: {name}: {reason}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
