use std::f64::consts::PI;

use ringsim::dynamics::{exponential_lifetime, LossCause, Status};
use ringsim::ensemble::{
    configured_orbit_period, probe_trace, run_scenario, schedule_multi_load, ProbeConfig,
    ScenarioConfig, ScenarioResult, ShapeMode, ShapingPulse, ShapingWindow,
};
use ringsim::magnetics::RingFrame;

const SPEED: f64 = 0.8857;

fn flat(seed: u64, n: usize, t_end: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::ring_stage(seed, n, SPEED, t_end).unwrap();
    cfg.ring.frame = RingFrame::tilted(PI / 2.0);
    cfg
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn same_seed_same_bytes_across_workers() {
    let mut cfg = ScenarioConfig::ring_stage(5, 60, SPEED, 0.08).unwrap();
    cfg.losses.background_lifetime = Some(0.18);
    let a = with_pool(1, || {
        serde_json::to_string(&run_scenario(&cfg).unwrap()).unwrap()
    });
    let b = with_pool(2, || {
        serde_json::to_string(&run_scenario(&cfg).unwrap()).unwrap()
    });
    assert_eq!(a, b);
    cfg.seed = 6;
    let c = with_pool(2, || {
        serde_json::to_string(&run_scenario(&cfg).unwrap()).unwrap()
    });
    assert_ne!(a, c);
}

#[test]
fn every_atom_is_alive_or_lost_once() {
    let mut cfg = ScenarioConfig::ring_stage(7, 200, SPEED, 0.15).unwrap();
    cfg.losses.background_lifetime = Some(0.1);
    cfg.losses.junction = true;
    let r = run_scenario(&cfg).unwrap();
    let s = &r.summary;
    let lost: usize = s.losses.values().sum();
    assert_eq!(s.alive + lost, s.n);
    assert_eq!(s.n, 200);
    assert_eq!(
        r.atoms.iter().filter(|a| a.state.is_alive()).count(),
        s.alive
    );
}

fn lost_to(r: &ScenarioResult, cause: LossCause) -> Vec<(f64, bool)> {
    r.atoms
        .iter()
        .map(|a| match a.state.status {
            Status::Lost { cause: c, t } if c == cause => (t - a.birth, true),
            Status::Lost { t, .. } => (t - a.birth, false),
            _ => (r.t_end - a.birth, false),
        })
        .collect()
}

#[test]
fn background_lifetime_recovered() {
    let mut cfg = flat(8, 4000, 0.1);
    cfg.losses.background_lifetime = Some(0.18);
    let r = run_scenario(&cfg).unwrap();
    let (tau, sigma) = exponential_lifetime(&lost_to(&r, LossCause::BackgroundGas));
    assert!((tau - 0.18).abs() < 0.05 * 0.18, "{tau} ± {sigma}");
}

#[test]
fn junction_heats_transverse_motion() {
    let run = |junction: bool| {
        // a cold, tight cloud keeps the spread of transverse energies small
        let mut cfg = flat(9, 5000, 0.15);
        cfg.loads[0].t_transverse = 5e-6;
        cfg.loads[0].sigma[1] = 3e-6;
        cfg.loads[0].sigma[2] = 3e-6;
        cfg.losses.junction = junction;
        run_scenario(&cfg).unwrap()
    };
    let off = run(false);
    let on = run(true);
    // same seed, so compare atom by atom over those alive in both runs
    let d: Vec<f64> = on
        .atoms
        .iter()
        .zip(&off.atoms)
        .filter(|(a, b)| a.state.is_alive() && b.state.is_alive())
        .map(|(a, b)| {
            (a.transverse_energy.1 - a.transverse_energy.0)
                - (b.transverse_energy.1 - b.transverse_energy.0)
        })
        .collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let alive = |r: &ScenarioResult| r.atoms.iter().filter(|a| a.state.is_alive()).count();
    assert!(
        mean > 2.0 * se,
        "{mean} ± {se} over {n}; alive {} {}",
        alive(&off),
        alive(&on)
    );
}

#[test]
fn probe_is_linear_in_atoms() {
    let mut cfg = flat(10, 120, 0.2);
    cfg.probe = ProbeConfig::default().sweep(0.0, 0.19, 5e-4).unwrap();
    let r = run_scenario(&cfg).unwrap();
    let full = probe_trace(&r, &cfg.probe).unwrap();
    let (mut a, mut b) = (r.clone(), r.clone());
    a.atoms.truncate(50);
    b.atoms.drain(..50);
    let ta = probe_trace(&a, &cfg.probe).unwrap();
    let tb = probe_trace(&b, &cfg.probe).unwrap();
    for i in 0..full.signal.len() {
        assert_eq!(full.signal[i], ta.signal[i] + tb.signal[i]);
    }
    // one atom counts once per passage
    let mut one = r.clone();
    one.atoms.retain(|a| a.state.is_alive());
    one.atoms.truncate(1);
    let t1 = probe_trace(&one, &cfg.probe).unwrap();
    assert!(t1.signal.iter().all(|&s| s == 0.0 || s == 1.0));
    let period = configured_orbit_period(&cfg, SPEED).unwrap();
    let passages = (0.19 / period).floor() as usize;
    let hits = t1
        .signal
        .windows(2)
        .filter(|w| w[0] == 0.0 && w[1] == 1.0)
        .count();
    assert!(
        hits == passages || hits == passages + 1,
        "{hits} {passages}"
    );
}

#[test]
fn doubling_atoms_doubles_peaks() {
    let peak = |seed: u64, n: usize| {
        let mut cfg = flat(seed, n, 0.16);
        cfg.probe = ProbeConfig::default().sweep(0.0, 0.15, 5e-4).unwrap();
        let r = run_scenario(&cfg).unwrap();
        let t = probe_trace(&r, &cfg.probe).unwrap();
        t.signal.iter().cloned().fold(0.0, f64::max)
    };
    let h1 = peak(20, 400);
    let h2 = peak(21, 800);
    assert!(h1 > 10.0);
    let sigma = (h2 + 4.0 * h1).sqrt();
    assert!((h2 - 2.0 * h1).abs() < 3.0 * sigma, "{h1} {h2}");
}

#[test]
fn destructive_probe_counts_each_atom_at_most_once() {
    let mut cfg = flat(11, 100, 0.2);
    cfg.probe = ProbeConfig {
        destructive: true,
        ..ProbeConfig::default()
    }
    .sweep(0.0, 0.19, 1e-3)
    .unwrap();
    let r = run_scenario(&cfg).unwrap();
    let t = probe_trace(&r, &cfg.probe).unwrap();
    assert!(t.signal.iter().sum::<f64>() <= 100.0);
}

#[test]
fn keep_and_remove_partition_the_cloud() {
    let run = |mode| {
        let mut cfg = flat(12, 400, 0.15);
        cfg.shaping = vec![ShapingPulse {
            t: 0.1,
            window: ShapingWindow {
                fraction: 0.4,
                mode,
            },
        }];
        run_scenario(&cfg).unwrap().summary.shaping[0]
    };
    let keep = run(ShapeMode::Keep);
    let remove = run(ShapeMode::Remove);
    assert_eq!(keep.kept, remove.removed);
    assert_eq!(keep.removed, remove.kept);
    assert!(keep.kept > 0 && keep.removed > 0);
    assert!((keep.center - remove.center).abs() < 1e-12);
}

#[test]
fn second_load_follows_half_an_orbit_later() {
    let cfg = flat(13, 100, 0.2);
    let period = configured_orbit_period(&cfg, SPEED).unwrap();
    let two = schedule_multi_load(&cfg, 0.5 * period).unwrap();
    assert_eq!(two.loads.len(), 2);
    let a0 = two.arrival_time(&two.loads[0]).unwrap();
    let a1 = two.arrival_time(&two.loads[1]).unwrap();
    assert!(((a1 - a0) - 0.5 * period).abs() < 1e-9, "{a0} {a1}");
    let r = run_scenario(&two).unwrap();
    assert_eq!(r.summary.n, 200);
    assert_eq!(r.atoms.iter().filter(|a| a.load == 1).count(), 100);
}

#[test]
fn invalid_scenarios_are_refused() {
    let mut cfg = flat(1, 10, 0.1);
    cfg.probe = ProbeConfig::default().sweep(0.0, 0.2, 1e-3).unwrap();
    assert!(run_scenario(&cfg).is_err());
    let mut cfg = flat(1, 10, 0.1);
    cfg.dt = -1.0;
    assert!(run_scenario(&cfg).is_err());
}

#[test]
fn transfer_moves_the_zero_from_guide_to_ring() {
    use ringsim::dynamics::track_zero;
    let cfg = ScenarioConfig::guide_stage(1, 10, 0.3).unwrap();
    let app = cfg.apparatus().unwrap();
    // the cross ramp spans the last two breakpoints
    let bp = app.schedule().breakpoints();
    let (t0, t1) = (bp[bp.len() - 2].t, bp[bp.len() - 1].t);
    let ring = *app.ring();
    let layout = cfg.guide.unwrap();
    let phi = 0.5 * layout.overlap_angle(&ring);
    let f = &ring.frame;
    let times: Vec<f64> = (0..=200)
        .map(|i| t0 + (t1 - t0) * i as f64 / 200.0)
        .collect();
    let start = f.point(layout.arc_radius(&ring), phi, 0.0);
    let path = track_zero(&app, &times, start, f.radial(phi), f.axis(), 20e-6).unwrap();
    let rho: Vec<f64> = path.iter().map(|(_, p)| f.to_cylindrical(p).0).collect();
    assert!(rho.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{rho:?}");
    assert!(
        (rho[0] - layout.arc_radius(&ring)).abs() < 50e-6,
        "{}",
        rho[0]
    );
    assert!((rho[200] - ring.radius).abs() < 50e-6, "{}", rho[200]);
}
