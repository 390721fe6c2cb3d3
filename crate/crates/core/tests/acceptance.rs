//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use classmem::encoder::{objective, EncoderSet, LinearEncoder, TrainConfig};
use classmem::harness::{preset, run_ablation, run_training, ExperimentConfig};
use classmem::memory::{
    load_bank, read, read_global, save_bank, update, ClassCluster, ClassId, Direction, Domain, MemoryBank, MemoryLayout,
};
use classmem::numerics::{AdamParams, SeededRng};
use classmem::objectives::{contrastive_loss, fd_check, triplet_loss, ContrastiveConfig, LossVariant};
use classmem::synthdata::{generate_scene_pair, DataParams, DomainSpec};
use classmem::{Error, Matrix};
use common::{items_of, max_diff, random_bank, random_class, random_cluster, rows, Side};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn stochasticity() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.int_inclusive(1, 16);
        let c = rng.int_inclusive(1, 16);
        let (px, py) = (rng.int_inclusive(1, 16), rng.int_inclusive(1, 16));
        let mut bank = random_bank(&mut rng, n, c);
        let class = random_class(&mut rng, &bank);
        let cx = random_cluster(&mut rng, class, px, c);
        let cy = random_cluster(&mut rng, class, py, c);
        for (cl, dir) in [(&cx, Direction::XToY), (&cy, Direction::YToX)] {
            let r = read(&bank, cl, dir).map_err(|e| e.to_string())?;
            for row in r.weights.iter_rows() {
                worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
            }
        }
        let w = update(&mut bank, &cx, &cy).map_err(|e| e.to_string())?;
        for beta in [w.beta_x.unwrap(), w.beta_y.unwrap()] {
            for j in 0..beta.cols() {
                worst = worst.max(((0..beta.rows()).map(|p| beta[(p, j)]).sum::<f64>() - 1.0).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-9, || format!("max deviation from 1 is {worst:.3e}"))?;
    ensure(secs < 5.0, || format!("took {secs:.2}s"))?;
    Ok(format!("max |sum - 1| = {worst:.1e}, {secs:.2}s"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = SeededRng::new(2);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.int_inclusive(1, 8);
        let c = rng.int_inclusive(1, 8);
        let (px, py) = (rng.int_inclusive(1, 8), rng.int_inclusive(1, 8));
        let mut bank = random_bank(&mut rng, n, c);
        let class = random_class(&mut rng, &bank);
        let cx = random_cluster(&mut rng, class, px, c);
        let cy = random_cluster(&mut rng, class, py, c);
        let keys = rows(bank.keys());
        for (cl, dir) in [(&cx, Direction::XToY), (&cy, Direction::YToX)] {
            let values = rows(bank.values(dir.target()));
            let r = read(&bank, cl, dir).map_err(|e| e.to_string())?;
            let (w, s) = common::read(&keys, &values, &rows(&cl.content), items_of(&bank, class));
            worst = worst.max(max_diff(&rows(&r.weights), &w)).max(max_diff(&rows(&r.aggregated_style), &s));
            let r = read_global(&bank, &cl.content, dir).map_err(|e| e.to_string())?;
            let (w, s) = common::read(&keys, &values, &rows(&cl.content), 0..n);
            worst = worst.max(max_diff(&rows(&r.weights), &w)).max(max_diff(&rows(&r.aggregated_style), &s));
        }
        let (k, vx, vy) = common::update(
            &keys,
            &rows(bank.values(Domain::X)),
            &rows(bank.values(Domain::Y)),
            &Side { content: &rows(&cx.content), style: &rows(&cx.style) },
            &Side { content: &rows(&cy.content), style: &rows(&cy.style) },
            items_of(&bank, class),
        );
        update(&mut bank, &cx, &cy).map_err(|e| e.to_string())?;
        worst = worst
            .max(max_diff(&rows(bank.keys()), &k))
            .max(max_diff(&rows(bank.values(Domain::X)), &vx))
            .max(max_diff(&rows(bank.values(Domain::Y)), &vy));
    }
    ensure(worst <= 1e-9, || format!("max element difference {worst:.3e}"))?;
    Ok(format!("max element difference {worst:.1e} over 200 instances"))
}

fn normalization() -> Outcome {
    let mut rng = SeededRng::new(3);
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let n = rng.int_inclusive(1, 16);
        let c = rng.int_inclusive(1, 16);
        let mut bank = random_bank(&mut rng, n, c);
        let class = random_class(&mut rng, &bank);
        let scale = 10f64.powi(i % 13 - 6);
        let px = rng.int_inclusive(1, 16);
        let mut cx = random_cluster(&mut rng, class, px, c);
        cx.content = cx.content.map(|v| v * scale);
        cx.style = cx.style.map(|v| v * scale);
        let cy = if i % 4 == 0 {
            ClassCluster::empty(class, c)
        } else {
            let p = rng.int_inclusive(1, 16);
            random_cluster(&mut rng, class, p, c)
        };
        update(&mut bank, &cx, &cy).map_err(|e| e.to_string())?;
        for n in items_of(&bank, class) {
            for m in [bank.keys(), bank.values(Domain::X), bank.values(Domain::Y)] {
                let norm = m.row(n).iter().map(|v| v * v).sum::<f64>().sqrt();
                worst = worst.max((norm - 1.0).abs());
            }
        }
    }
    ensure(worst <= 1e-9, || format!("max |norm - 1| = {worst:.3e}"))?;
    Ok(format!("max |norm - 1| = {worst:.1e} over 500 updates"))
}

fn tiny_objective_instance(seed: u64) -> (MemoryBank, EncoderSet, classmem::synthdata::FeatureScene, classmem::synthdata::FeatureScene) {
    let mut rng = SeededRng::new(seed);
    let params = DataParams {
        classes: 3,
        input_channels: 4,
        height: 4,
        width: 4,
        boxes_per_class: [1, 1],
        box_side: [1, 2],
        ..DataParams::default()
    };
    let spec = DomainSpec::generate(params, &mut rng).unwrap();
    let layout = MemoryLayout::new(&[(ClassId(1), 2), (ClassId(2), 1), (ClassId(0), 2)]).unwrap();
    let bank = MemoryBank::init(layout, 3, &mut rng).unwrap();
    let adam = AdamParams::default();
    let enc = EncoderSet::new(4, 3, 0.5, adam, adam, &mut rng);
    let (x, y) = generate_scene_pair(&spec, &mut rng).unwrap();
    (bank, enc, x, y)
}

fn gradients() -> Outcome {
    const STEP: f64 = 1e-5;
    const TOL: f64 = 1e-4;
    let mut rng = SeededRng::new(4);
    let mut worst = [0.0f64; 4];
    for i in 0..50 {
        let q = common::random_matrix(&mut rng, 4, 6);
        let items = common::unit_rows(&mut rng, 5, 6);
        let start = rng.int_inclusive(0, 4);
        let pool: Vec<usize> = (start..5).collect();
        let r = fd_check(|x| { let o = contrastive_loss(x, &items, &pool, 0.5).unwrap(); (o.loss, o.grad) }, &q, STEP, TOL);
        worst[0] = worst[0].max(r.max_rel_error);
        let r = fd_check(|x| { let o = triplet_loss(x, &items, &pool, 1.0).unwrap(); (o.loss, o.grad) }, &q, STEP, TOL);
        worst[1] = worst[1].max(r.max_rel_error);

        let x = common::random_matrix(&mut rng, 5, 4);
        let up = common::random_matrix(&mut rng, 5, 3);
        let w = common::random_matrix(&mut rng, 3, 4);
        let b = common::random_matrix(&mut rng, 1, 3);
        let eval = |w: &Matrix, b: &Matrix, x: &Matrix| {
            let e = LinearEncoder::from_parts(w.clone(), b.clone(), AdamParams::default()).unwrap();
            let v: f64 = e.forward(x).unwrap().as_slice().iter().zip(up.as_slice()).map(|(a, b)| a * b).sum();
            (v, e.backward(x, &up).unwrap())
        };
        for r in [
            fd_check(|p| { let (v, g) = eval(p, &b, &x); (v, g.weight) }, &w, STEP, TOL),
            fd_check(|p| { let (v, g) = eval(&w, p, &x); (v, g.bias) }, &b, STEP, TOL),
            fd_check(|p| { let (v, g) = eval(&w, &b, p); (v, g.input) }, &x, STEP, TOL),
        ] {
            worst[2] = worst[2].max(r.max_rel_error);
        }

        let (bank, enc, sx, sy) = tiny_objective_instance(1000 + i);
        let cfg = TrainConfig {
            contrastive: ContrastiveConfig { temperature: 0.5, lambda_key: 1.0, lambda_value: 0.5 },
            lambda_rec: 1.0,
            loss: LossVariant::Contrastive,
            triplet_margin: 1.0,
        };
        let flat = enc.flat_params();
        let point = Matrix::from_vec(1, flat.len(), flat).unwrap();
        let r = fd_check(
            |p| {
                let mut e = enc.clone();
                e.set_flat_params(p.as_slice()).unwrap();
                let out = objective(&e, &bank, &sx, &sy, &cfg).unwrap();
                let g = out.grads.flatten();
                (cfg.total(&out.report), Matrix::from_vec(1, g.len(), g).unwrap())
            },
            &point,
            STEP,
            TOL,
        );
        worst[3] = worst[3].max(r.max_rel_error);
    }
    let detail = format!(
        "max rel err: contrastive {:.1e}, triplet {:.1e}, encoder {:.1e}, full step {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    );
    ensure(worst.iter().all(|&w| w <= TOL), || detail.clone())?;
    Ok(detail)
}

fn contrastive_limits() -> Outcome {
    let mut rng = SeededRng::new(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let c = rng.int_inclusive(1, 8);
        let p = rng.int_inclusive(1, 8);
        let q = common::random_matrix(&mut rng, p, c);
        let one = common::unit_rows(&mut rng, 1, c);
        let l = contrastive_loss(&q, &one, &[0], 0.1).map_err(|e| e.to_string())?.loss;
        ensure(l == 0.0, || format!("N'=1 gave loss {l:e}"))?;
        let n = rng.int_inclusive(2, 12);
        let items = common::unit_rows(&mut rng, n, c);
        let l = contrastive_loss(&q, &items, &[0], 1e9).map_err(|e| e.to_string())?.loss;
        worst = worst.max((l / p as f64 - (n as f64).ln()).abs());
    }
    ensure(worst <= 1e-6, || format!("per-query deviation from log N' is {worst:.3e}"))?;
    Ok(format!("N'=1 loss exactly 0; |loss/P - log N'| <= {worst:.1e} at tau=1e9"))
}

fn toy_config() -> ExperimentConfig {
    preset("toy").unwrap()
}

fn desk_training(dir: &Path) -> Outcome {
    let cfg = toy_config();
    let start = Instant::now();
    let out = run_training(&cfg, Some(dir)).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (p, f) = (out.eval.cluster_purity, out.eval.style_fidelity);
    let detail = format!("purity {p:.4}, fidelity {f:.4}, {secs:.1}s");
    ensure(p >= 0.90 && f >= 0.95 && secs < 60.0, || detail.clone())?;
    Ok(detail)
}

fn ablation() -> Outcome {
    let rows = run_ablation(&toy_config(), None).map_err(|e| e.to_string())?;
    let purity = |name: &str| rows.iter().find(|(n, _)| *n == name).unwrap().1.cluster_purity;
    let (cmcl, cmtl, smtl, smcl) = (purity("cm+cl"), purity("cm+tl"), purity("sm+tl"), purity("sm+cl"));
    let detail = format!("cm+cl {cmcl:.4}, cm+tl {cmtl:.4}, sm+tl {smtl:.4}, sm+cl {smcl:.4}");
    let margins = [
        ("cm+cl - cm+tl", cmcl - cmtl),
        ("cm+tl - sm+tl", cmtl - smtl),
        ("cm+cl - sm+cl", cmcl - smcl),
    ];
    let short: Vec<String> = margins
        .iter()
        .filter(|(_, m)| *m < 0.02)
        .map(|(n, m)| format!("{n} = {m:.4}"))
        .collect();
    ensure(short.is_empty(), || format!("{detail}; margin below 0.02: {}", short.join(", ")))?;
    Ok(detail)
}

fn determinism(first: &Path) -> Outcome {
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_training(&toy_config(), Some(second.path())).map_err(|e| e.to_string())?;
    for f in ["metrics.csv", "bank.json"] {
        let a = std::fs::read(first.join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(second.path().join(f)).map_err(|e| e.to_string())?;
        ensure(!a.is_empty() && a == b, || format!("{f} differs between runs"))?;
    }
    Ok("metrics.csv and bank.json identical across two runs".into())
}

fn persistence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("bank.json");
    let layout = MemoryLayout::new(&[(ClassId(1), 5), (ClassId(2), 3), (ClassId(3), 2), (ClassId(0), 10)]).unwrap();
    let bank = MemoryBank::init(layout, 256, &mut SeededRng::new(9)).unwrap();
    save_bank(&bank, &path).map_err(|e| e.to_string())?;
    let back = load_bank(&path).map_err(|e| e.to_string())?;
    let bits = |b: &MemoryBank| -> Vec<u64> {
        [b.keys(), b.values(Domain::X), b.values(Domain::Y)]
            .iter()
            .flat_map(|m| m.as_slice().iter().map(|v| v.to_bits()))
            .collect()
    };
    ensure(bits(&back) == bits(&bank) && back.layout() == bank.layout(), || "round trip changed the bank".into())?;

    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    doc["layout"][3]["count"] = 9.into();
    std::fs::write(&path, doc.to_string()).map_err(|e| e.to_string())?;
    match load_bank(&path) {
        Err(Error::Validation(msg)) => Ok(format!("bitwise round trip; bad layout rejected ({msg})")),
        other => Err(format!("bad layout gave {other:?}")),
    }
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match result {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL  {name}: {detail}");
            false
        }
    }
}

fn main() -> ExitCode {
    let run_dir = tempfile::tempdir().expect("temporary directory");
    let results = [
        run("1 read/update weights are stochastic", stochasticity),
        run("2 read/update match the scalar oracle", oracle_equivalence),
        run("3 updated items have unit norm", normalization),
        run("4 analytic gradients match finite differences", gradients),
        run("5 contrastive loss limits", contrastive_limits),
        run("6 toy training purity/fidelity/runtime", || desk_training(run_dir.path())),
        run("7 ablation ordering", ablation),
        run("8 runs are bitwise deterministic", || determinism(run_dir.path())),
        run("9 bank persistence", persistence),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
