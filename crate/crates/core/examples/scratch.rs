// Ad-hoc timing and physics probe used while calibrating the experiment
// configurations. Not part of the deliverable surface.

use std::time::Instant;

use num_complex::Complex64;
use slres::experiment_harness::{run_single, PointConfig, TaskKind, TaskSource, TopologyKind};
use slres::readout::ReadoutObservable;
use slres::tasks::SplitLengths;

fn fig4_point(lambda: f64, phi: f64) -> PointConfig {
    PointConfig {
        topology: TopologyKind::Ring,
        n_real: 2,
        n_virtual: 128,
        theta: 12.0,
        tau: 2176.0,
        dt: 0.01,
        kappa: 0.04,
        omega: 1.0,
        gamma: Complex64::new(-0.1, 0.5),
        lambda,
        phi,
        eta: 0.01,
        ridge: 1e-8,
        observable: ReadoutObservable::Amplitude,
        split: SplitLengths::two_oscillator(),
        mask_seed: 1001,
        task_seed: 2002,
    }
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "speed".into());
    match mode.as_str() {
        "speed" => {
            let t0 = Instant::now();
            let out = run_single(&fig4_point(0.02, 1.0), TaskSource::Narma).unwrap();
            println!(
                "fig4 cell (0.02, 1.0): train {:.4} test {:.4} in {:.1}s",
                out.nrmse_train,
                out.nrmse_test,
                t0.elapsed().as_secs_f64()
            );
        }
        "off" => {
            for phi in [0.0, 1.0, 2.5, 4.0, 5.5] {
                let t0 = Instant::now();
                let out = run_single(&fig4_point(-0.02, phi), TaskSource::Narma).unwrap();
                println!(
                    "off cell (-0.02, {phi}): train {:.4} test {:.4} in {:.1}s",
                    out.nrmse_train,
                    out.nrmse_test,
                    t0.elapsed().as_secs_f64()
                );
            }
        }
        "grid" => {
            use rayon::prelude::*;
            let gamma_im: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);
            let task: String = std::env::args().nth(3).unwrap_or_else(|| "narma".into());
            let t0 = Instant::now();
            let mut cells = Vec::new();
            for lambda in [0.005, 0.0125, 0.02, 0.0275, 0.035, 0.0425, 0.05] {
                for phi in [0.0, 0.8, 1.6, 2.4, 3.2, 4.0, 4.8, 5.6] {
                    cells.push((lambda, phi));
                }
            }
            let sf_data = if task == "santafe" {
                let vals = slres::tasks::synthetic_laser_series(9000, 7);
                let text: String = vals.iter().map(|v| format!("{v}\n")).collect();
                std::fs::write("/tmp/sf.dat", text).unwrap();
                Some(slres::tasks::load_santa_fe_with_split(
                    "/tmp/sf.dat",
                    SplitLengths { buffer: 100, train: 1500, test: 500 },
                ).unwrap())
            } else { None };
            let results: Vec<String> = cells.par_iter().map(|&(lambda, phi)| {
                let mut p = fig4_point(lambda, phi);
                p.gamma = Complex64::new(-0.1, gamma_im);
                let out = match &sf_data {
                    Some(d) => { p.split = d.split; run_single(&p, TaskSource::SantaFe(d)) }
                    None => run_single(&p, TaskSource::Narma),
                };
                match out {
                    Ok(o) => format!("({lambda:.4}, {phi:.1}): train {:.4} test {:.4}", o.nrmse_train, o.nrmse_test),
                    Err(e) => format!("({lambda:.4}, {phi:.1}): FAILED {e}"),
                }
            }).collect();
            for r in &results { println!("{r}"); }
            println!("grid({task}, gamma_im={gamma_im}) done in {:.1}s", t0.elapsed().as_secs_f64());
        }
        "diag" => diag(),
        "cell" => {
            // cell <lambda> <phi> <eta> <train_len> <ridge> <seed_offset>
            let a = |i: usize, d: f64| {
                std::env::args()
                    .nth(i)
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(d)
            };
            let (lambda, phi, eta) = (a(2, 0.005), a(3, 2.4), a(4, 0.01));
            let train = a(5, 1500.0) as usize;
            let ridge = a(6, 1e-8);
            let seed_off = a(7, 0.0) as u64;
            let mut p = fig4_point(lambda, phi);
            p.gamma = Complex64::new(-0.1, 0.0);
            p.eta = eta;
            p.ridge = ridge;
            p.split = SplitLengths {
                buffer: 150,
                train,
                test: 500,
            };
            p.mask_seed += seed_off;
            p.task_seed += seed_off;
            let t0 = Instant::now();
            let out = run_single(&p, TaskSource::Narma).unwrap();
            println!(
                "cell l={lambda} phi={phi} eta={eta} train={train} ridge={ridge:.0e} seed+{seed_off}: train {:.4} test {:.4} ({:.0}s)",
                out.nrmse_train,
                out.nrmse_test,
                t0.elapsed().as_secs_f64()
            );
        }
        other => eprintln!("unknown mode {other}"),
    }
}

fn diag() {
    use slres::dde_engine::integrate;
    use slres::input_pipeline::{generate_mask, InputSchedule, ScheduledDrive, TimingConstants};
    use slres::readout::{self, Harvester};
    use slres::tasks::generate_narma_task;

    let lambda = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.02);
    let phi = std::env::args()
        .nth(3)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.5);
    let gamma_im: f64 = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let eta: f64 = std::env::args().nth(5).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let n_virtual = 8usize;
    let point = PointConfig {
        n_virtual,
        tau: 17.0 * n_virtual as f64,
        lambda,
        phi,
        eta,
        gamma: Complex64::new(-0.1, gamma_im),
        split: SplitLengths {
            buffer: 80,
            train: 300,
            test: 100,
        },
        ..fig4_point(lambda, phi)
    };
    println!("diag: lambda={lambda} phi={phi} gamma_im={gamma_im} eta={eta}");
    let task = generate_narma_task(point.split, point.task_seed).unwrap();
    let timing = TimingConstants::new(point.theta, point.n_virtual, point.n_real).unwrap();
    let iconfig = point.integrator();
    let adjacency = point.topology.build(point.n_real).unwrap();
    let mask = generate_mask(point.n_real, point.n_virtual, point.mask_seed).unwrap();
    println!("mask rows: {:?} {:?}", mask.row(0), mask.row(1));
    let schedule = InputSchedule::new(task.inputs.clone(), point.eta, point.lambda).unwrap();
    let mut drive = ScheduledDrive::new(schedule, mask, &timing, &iconfig).unwrap();
    let mut harvester =
        Harvester::new(&timing, &iconfig, task.split.total(), point.observable).unwrap();
    let t_end = harvester.t_end(&iconfig);
    integrate(
        &iconfig,
        &point.params(),
        &adjacency,
        &mut drive,
        t_end,
        |s, t, z| harvester.observe(s, t, z),
    )
    .unwrap();
    let states = harvester.finish().unwrap();

    // Feature statistics over the post-buffer rows.
    let b = task.split.buffer;
    let rows = task.split.total();
    for col in [0usize, 3, 7, 8, 11] {
        let vals: Vec<f64> = (b..rows).map(|r| states.row(r)[col]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let std =
            (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64).sqrt();
        // correlation with u[w], u[w-1], u[w-2]
        let mut corrs = Vec::new();
        for lag in 0..4 {
            let x: Vec<f64> = (b..rows).map(|r| task.inputs[r - lag]).collect();
            let mx = x.iter().sum::<f64>() / x.len() as f64;
            let my = mean;
            let mut cxy = 0.0;
            let mut vx = 0.0;
            let mut vy = 0.0;
            for (xi, yi) in x.iter().zip(&vals) {
                cxy += (xi - mx) * (yi - my);
                vx += (xi - mx) * (xi - mx);
                vy += (yi - my) * (yi - my);
            }
            corrs.push(if vx * vy > 0.0 {
                cxy / (vx * vy).sqrt()
            } else {
                0.0
            });
        }
        println!(
            "col {col}: mean {mean:.5} std {std:.2e} corr(u[w-0..3]) {:.3} {:.3} {:.3} {:.3}",
            corrs[0], corrs[1], corrs[2], corrs[3]
        );
    }

    // Can the readout learn the identity task y = u?
    let train_states = states.slice_rows(b..b + task.split.train);
    let id_targets: Vec<f64> = task.inputs[b..b + task.split.train].to_vec();
    let w = readout::train(&train_states, &id_targets, 1e-8).unwrap();
    let fit = readout::nrmse(&id_targets, &readout::predict(&train_states, &w).unwrap()).unwrap();
    println!("identity-task train NRMSE: {fit:.4}");

    // And the shifted inputs u[w-1], u[w-2] (memory)?
    for lag in 1..=3usize {
        let targets: Vec<f64> = (b..b + task.split.train)
            .map(|r| task.inputs[r - lag])
            .collect();
        let w = readout::train(&train_states, &targets, 1e-8).unwrap();
        let fit = readout::nrmse(&targets, &readout::predict(&train_states, &w).unwrap()).unwrap();
        println!("lag-{lag} recall train NRMSE: {fit:.4}");
    }

    // NARMA itself on this small config.
    let out = slres::experiment_harness::run_single_with_task(&point, &task).unwrap();
    println!(
        "narma on diag config: train {:.4} test {:.4}",
        out.nrmse_train, out.nrmse_test
    );
}
