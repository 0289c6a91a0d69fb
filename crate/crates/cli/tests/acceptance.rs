//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! fails. Pass criterion numbers to run a subset:
//! `cargo test -p eegbi-cli --test acceptance -- 2 5`.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use eegbi::bnn::{
    gradient, objective, select_model, train_map, BnnData, BnnModel, HiddenPolicy, Loss, MlpArchitecture,
    ObjectiveSpec, SelectionConfig, TrainerConfig, WeightGroups,
};
use eegbi::eval::{
    build_loso_plan_stratified, check_leakage, run_experiment, run_pipeline, run_pipeline_audited, subject_index,
    AuditLog, DataSource, ExperimentConfig, FoldAccess, HybridPipeline, Phase, PipelineSpec, SvmPipeline,
};
use eegbi::features::{self, extract, FeatureConfig, FeatureSet, FeatureTable};
use eegbi::signal::{ClassLabel, SubjectId, TimeSeries};
use eegbi::svm::{fit_sigmoid, train, KernelSpec, SigmoidParams, SvmTrainConfig};
use eegbi::swarm::SwarmConfig;
use eegbi::data_io::SynthCohortSpec;
use eegbi::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Criterion = fn() -> Outcome;

fn main() {
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, Criterion, Option<u64>); 9] = [
        (1, "feature oracles", c1_features, Some(10)),
        (2, "svm dual brute force", c2_svm, Some(60)),
        (3, "sigmoid calibration grid", c3_calibration, None),
        (4, "network gradient check", c4_gradient, None),
        (5, "linear evidence oracle", c5_evidence, None),
        (6, "evidence width selection", c6_selection, Some(300)),
        (7, "pipeline ordering", c7_pipeline, Some(600)),
        (8, "leakage guard", c8_leakage, None),
        (9, "evaluate determinism", c9_determinism, None),
    ];
    let mut failed = 0;
    for (n, name, run, limit) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let mut o = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        if let Some(secs) = limit {
            if elapsed > Duration::from_secs(secs) {
                o.pass = false;
                o.detail.push_str(&format!("; exceeded {secs} s"));
            }
        }
        println!(
            "criterion {n} {name}: {} ({}, {:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `|a - b|` relative to the larger of `|b|` and a natural magnitude.
fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / b.abs().max(scale).max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------- 1

struct Naive {
    nleo_mean: f64,
    rms: f64,
    spec_energy: f64,
    rel_delta: f64,
    iav: f64,
    mavs: f64,
    zc: f64,
}

fn naive_features(x: &[f64], rate: f64) -> Naive {
    let n = x.len();
    let nf = n as f64;
    let sq: f64 = x[1..n - 1].iter().map(|v| v * v).sum();
    let cross: f64 = (1..n - 1).map(|j| x[j - 1] * x[j + 1]).sum();
    let cos: Vec<f64> = (0..n).map(|m| (std::f64::consts::TAU * m as f64 / nf).cos()).collect();
    let sin: Vec<f64> = (0..n).map(|m| (std::f64::consts::TAU * m as f64 / nf).sin()).collect();
    let mut total = 0.0;
    let mut delta = 0.0;
    for k in 0..n {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, &v) in x.iter().enumerate() {
            let m = (j * k) % n;
            re += v * cos[m];
            im -= v * sin[m];
        }
        let p = (re * re + im * im) / nf;
        total += p;
        let f = k.min(n - k) as f64 * rate / nf;
        if (0.5..4.0).contains(&f) {
            delta += p;
        }
    }
    Naive {
        nleo_mean: (sq - cross) / (n - 2) as f64,
        rms: (x.iter().map(|v| v * v).sum::<f64>() / nf).sqrt(),
        spec_energy: total,
        rel_delta: if total > 0.0 { delta / total } else { 0.0 },
        iav: x.iter().map(|v| v.abs()).sum(),
        mavs: (x[n - 1].abs() - x[0].abs()) / (n - 1) as f64,
        zc: x.windows(2).filter(|w| w[0] * w[1] <= 0.0).count() as f64,
    }
}

fn random_epoch(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    match rng.random_range(0..4) {
        0 => (0..n).map(|_| scale * normal(rng)).collect(),
        1 => {
            let (w1, w2) = (rng.random_range(0.01..3.0), rng.random_range(0.01..3.0));
            (0..n)
                .map(|j| scale * ((w1 * j as f64).sin() + 0.5 * (w2 * j as f64).cos() + 0.1 * normal(rng)))
                .collect()
        }
        2 => (0..n).map(|_| rng.random_range(-3..=3) as f64).collect(),
        _ => vec![scale; n],
    }
}

fn c1_features() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = FeatureConfig::<f64>::default();
    let rates = [64.0, 128.0, 173.61, 256.0];
    let mut worst = [0.0f64; 7];
    for _ in 0..1000 {
        let n = rng.random_range(3..=512);
        let rate = rates[rng.random_range(0..rates.len())];
        let x = random_epoch(&mut rng, n);
        let series = TimeSeries::new(x.clone(), rate, SubjectId::new("s"), "ch").unwrap();
        let v = extract(&series.as_epoch().unwrap(), FeatureSet::Union, None, &cfg).unwrap().values;
        let o = naive_features(&x, rate);
        let max_abs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let errs = [
            rel(v[0], o.nleo_mean, mean_sq),
            rel(v[1], o.rms, 0.0),
            rel(v[2], o.spec_energy, 0.0),
            rel(v[3], o.rel_delta, 1.0),
            rel(v[4], o.iav, 0.0),
            rel(v[5], o.mavs, max_abs / (n - 1) as f64),
            rel(v[6], o.zc, 1.0),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    let mut sinusoid = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(3..=512);
        let a = 10f64.powf(rng.random_range(-2.0..2.0));
        let w = rng.random_range(0.01..std::f64::consts::PI);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let x: Vec<f64> = (0..n).map(|j| a * (w * j as f64 + phi).sin()).collect();
        let expect = a * a * w.sin().powi(2);
        let e = features::nleo(&x).unwrap();
        for &v in &e[1..n - 1] {
            sinusoid = sinusoid.max((v - expect).abs() / (a * a));
        }
    }
    let max = worst.iter().copied().fold(sinusoid, f64::max);
    outcome(
        max <= 1e-9,
        format!("max relative error {max:.2e} over 1000 epochs, sinusoid identity {sinusoid:.2e}"),
    )
}

// ---------------------------------------------------------------- 2

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Exact dual maximizer by enumerating which multipliers sit at 0, at the
/// bound, or strictly between. Returns `(alpha, objective, free bias)`.
fn brute_force_dual(k: &[Vec<f64>], y: &[f64], cost: f64) -> (Vec<f64>, f64, Option<f64>) {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let mut best: Option<(Vec<f64>, f64, Option<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| (code / 3usize.pow(i as u32)) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 2 { cost } else { 0.0 }).collect();
        let mut bias = None;
        if free.is_empty() {
            if alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() > 1e-12 {
                continue;
            }
        } else {
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    a[r][c] = q(i, j);
                }
                a[r][m] = y[i];
                a[m][r] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|&j| state[j] == 2).map(|j| q(i, j) * cost).sum::<f64>();
            }
            rhs[m] = -(0..n).filter(|&j| state[j] == 2).map(|j| y[j] * cost).sum::<f64>();
            let Some(sol) = solve_dense(a, rhs) else { continue };
            // a free multiplier sitting on a bound duplicates another pattern
            let margin = 1e-9 * cost;
            if sol[..m].iter().any(|&v| !(margin..=cost - margin).contains(&v)) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, cost);
            }
            bias = Some(sol[m]);
        }
        let lin: f64 = alpha.iter().sum();
        let quad: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| alpha[i] * alpha[j] * q(i, j)).sum();
        let obj = lin - 0.5 * quad;
        if best.as_ref().is_none_or(|b| obj > b.1) {
            best = Some((alpha, obj, bias));
        }
    }
    best.expect("the zero vector is always feasible")
}

/// Range of offsets satisfying the KKT conditions when no multiplier is free.
fn bias_interval(kernel_part: &[f64], y: &[f64], alpha: &[f64], cost: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..y.len() {
        let edge = y[i] - kernel_part[i];
        let at_zero = alpha[i] <= 0.0;
        let at_cost = alpha[i] >= cost;
        match (y[i] > 0.0, at_zero, at_cost) {
            (true, true, _) | (false, _, true) => lo = lo.max(edge),
            (true, _, true) | (false, true, _) => hi = hi.min(edge),
            _ => {}
        }
    }
    (lo, hi)
}

fn c2_svm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_decision = 0.0f64;
    let mut worst_balance = 0.0f64;
    let mut box_ok = true;
    let mut bound_cases = 0;
    for set in 0..200 {
        let n = rng.random_range(2..=4);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let labels: Vec<ClassLabel> = (0..n)
            .map(|i| match i {
                0 => ClassLabel::Positive,
                1 => ClassLabel::Negative,
                _ if rng.random_bool(0.5) => ClassLabel::Positive,
                _ => ClassLabel::Negative,
            })
            .collect();
        let cost = [0.1, 0.5, 1.0, 10.0][set % 4];
        let kernel = KernelSpec::rbf(rng.random_range(0.5..2.0)).unwrap();
        let cfg = SvmTrainConfig {
            cost,
            kernel,
            kkt_tolerance: 1e-10,
            max_passes: 100_000,
            standardize: false,
        };
        let model = train(&rows, &labels, &cfg).unwrap();
        let y: Vec<f64> = labels.iter().map(|l| l.signed()).collect();
        let k: Vec<Vec<f64>> = rows.iter().map(|a| rows.iter().map(|b| kernel.eval(a, b)).collect()).collect();
        let (alpha, _, free_bias) = brute_force_dual(&k, &y, cost);
        let kernel_part = |x: &[f64]| -> f64 {
            (0..n).map(|j| alpha[j] * y[j] * kernel.eval(&rows[j], x)).sum()
        };
        let train_parts: Vec<f64> = rows.iter().map(|r| kernel_part(r)).collect();
        let bias = match free_bias {
            Some(b) => b,
            None => {
                bound_cases += 1;
                let (lo, hi) = bias_interval(&train_parts, &y, &alpha, cost);
                if !(model.bias >= lo - 1e-4 && model.bias <= hi + 1e-4) {
                    worst_decision = f64::INFINITY;
                }
                if lo.is_finite() && hi.is_finite() {
                    0.5 * (lo + hi)
                } else {
                    model.bias
                }
            }
        };
        let mut probes = rows.clone();
        probes.extend((0..5).map(|_| (0..2).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<f64>>()));
        for p in &probes {
            let d = (model.decision_value(p).unwrap() - (kernel_part(p) + bias)).abs();
            worst_decision = worst_decision.max(d);
        }
        worst_balance = worst_balance.max(model.dual_balance().abs());
        box_ok &= model.alphas.iter().all(|&a| a > 0.0 && a <= cost);
    }
    outcome(
        worst_decision <= 1e-4 && worst_balance <= 1e-6 && box_ok,
        format!(
            "max decision gap {worst_decision:.2e}, max |sum alpha y| {worst_balance:.2e}, box {}, {bound_cases} sets without free multipliers",
            if box_ok { "exact" } else { "violated" }
        ),
    )
}

// ---------------------------------------------------------------- 3

fn grid_nll(h: &[f64], labels: &[ClassLabel], a: f64, b: f64) -> f64 {
    let pos = labels.iter().filter(|l| l.is_positive()).count() as f64;
    let neg = labels.len() as f64 - pos;
    let (hi, lo) = ((pos + 1.0) / (pos + 2.0), 1.0 / (neg + 2.0));
    h.iter()
        .zip(labels)
        .map(|(&v, l)| {
            let t = if l.is_positive() { hi } else { lo };
            let z = a * v + b;
            // ln p = -ln(1 + e^z), ln(1 - p) = z - ln(1 + e^z)
            let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
            t * softplus + (1.0 - t) * (softplus - z)
        })
        .sum()
}

fn grid_search(h: &[f64], labels: &[ClassLabel]) -> f64 {
    let (mut ca, mut cb, mut span_a, mut span_b) = (-12.5, 0.0, 17.5, 15.0);
    let mut best = f64::INFINITY;
    for _ in 0..8 {
        let steps = 60;
        let (mut ba, mut bb) = (ca, cb);
        for i in 0..=steps {
            for j in 0..=steps {
                let a = ca - span_a + 2.0 * span_a * i as f64 / steps as f64;
                let b = cb - span_b + 2.0 * span_b * j as f64 / steps as f64;
                let v = grid_nll(h, labels, a, b);
                if v < best {
                    best = v;
                    ba = a;
                    bb = b;
                }
            }
        }
        ca = ba;
        cb = bb;
        span_a *= 0.1;
        span_b *= 0.1;
    }
    best
}

fn c3_calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut monotone = true;
    for _ in 0..20 {
        let n = rng.random_range(30..=200);
        let shift = rng.random_range(0.5..2.5);
        let scale = rng.random_range(0.3..3.0);
        let labels: Vec<ClassLabel> = (0..n)
            .map(|i| if i % 3 == 0 || rng.random_bool(0.4) { ClassLabel::Positive } else { ClassLabel::Negative })
            .collect();
        let h: Vec<f64> = labels
            .iter()
            .map(|l| scale * (normal(&mut rng) + if l.is_positive() { shift } else { -shift }))
            .collect();
        let fitted: SigmoidParams<f64> = fit_sigmoid(&h, &labels).unwrap();
        let nll = grid_nll(&h, &labels, fitted.x_slope, fitted.y_intercept);
        worst = worst.max((nll - grid_search(&h, &labels)).abs());
        let mut probe: Vec<f64> = h.clone();
        probe.sort_by(f64::total_cmp);
        monotone &= fitted.x_slope < 0.0
            && probe.windows(2).all(|w| fitted.probability(w[0]) <= fitted.probability(w[1]));
    }
    outcome(
        worst <= 1e-3 && monotone,
        format!("max NLL gap to grid {worst:.2e}, monotone {monotone}"),
    )
}

// ---------------------------------------------------------------- 4

fn c4_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let d = rng.random_range(1..=4);
        let hidden: Vec<usize> = (0..rng.random_range(0..=2)).map(|_| rng.random_range(1..=5)).collect();
        let arch = MlpArchitecture::new(d, hidden).unwrap();
        let loss = if case % 2 == 0 { Loss::SumSquares } else { Loss::CrossEntropy };
        let n = rng.random_range(1..=15);
        let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| normal(&mut rng)).collect()).collect();
        let targets: Vec<f64> = (0..n)
            .map(|_| match loss {
                Loss::SumSquares => normal(&mut rng),
                Loss::CrossEntropy => rng.random_range(0.0..1.0),
            })
            .collect();
        let data = BnnData::new(inputs, targets).unwrap();
        let base = WeightGroups::per_layer(&arch, 1.0);
        let decays: Vec<f64> = (0..base.len()).map(|_| 10f64.powf(rng.random_range(-2.0..1.0))).collect();
        let groups = base.with_decays(&decays).unwrap();
        let spec = ObjectiveSpec { loss, noise_precision: rng.random_range(0.5..5.0) };
        let p: Vec<f64> = (0..arch.param_count()).map(|_| 0.7 * normal(&mut rng)).collect();
        let g = gradient(&p, &arch, &data, &groups, &spec).unwrap();
        let h = 1e-5;
        for i in 0..p.len() {
            let mut up = p.clone();
            let mut down = p.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (objective(&up, &arch, &data, &groups, &spec).unwrap()
                - objective(&down, &arch, &data, &groups, &spec).unwrap())
                / (2.0 * h);
            worst = worst.max((g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-3));
        }
    }
    outcome(worst < 1e-5, format!("max relative error {worst:.2e} over 50 networks"))
}

// ---------------------------------------------------------------- 5

fn cholesky_logdet_solve(mut c: Vec<Vec<f64>>, t: &[f64]) -> (f64, f64) {
    let n = t.len();
    for j in 0..n {
        let s: f64 = (0..j).map(|k| c[j][k] * c[j][k]).sum();
        c[j][j] = (c[j][j] - s).sqrt();
        for i in j + 1..n {
            let s: f64 = (0..j).map(|k| c[i][k] * c[j][k]).sum();
            c[i][j] = (c[i][j] - s) / c[j][j];
        }
    }
    let logdet = 2.0 * (0..n).map(|i| c[i][i].ln()).sum::<f64>();
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| c[i][k] * z[k]).sum();
        z[i] = (t[i] - s) / c[i][i];
    }
    (logdet, z.iter().map(|v| v * v).sum())
}

fn symmetric_variants(arch: &MlpArchitecture, p: &[f64], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let layout = arch.layout();
    let (l0, l1) = (layout.layers[0], layout.layers[1]);
    let units = l0.n_out;
    let unit = rng.random_range(0..units);
    let mut flipped = p.to_vec();
    for i in 0..l0.n_in {
        flipped[l0.weights + unit * l0.n_in + i] *= -1.0;
    }
    flipped[l0.bias.unwrap() + unit] *= -1.0;
    for o in 0..l1.n_out {
        flipped[l1.weights + o * l1.n_in + unit] *= -1.0;
    }
    let mut perm: Vec<usize> = (0..units).collect();
    perm.rotate_left(1);
    let mut permuted = p.to_vec();
    for (new, &old) in perm.iter().enumerate() {
        for i in 0..l0.n_in {
            permuted[l0.weights + new * l0.n_in + i] = p[l0.weights + old * l0.n_in + i];
        }
        permuted[l0.bias.unwrap() + new] = p[l0.bias.unwrap() + old];
        for o in 0..l1.n_out {
            permuted[l1.weights + o * l1.n_in + new] = p[l1.weights + o * l1.n_in + old];
        }
    }
    vec![flipped, permuted]
}

fn c5_evidence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = rng.random_range(1..=4);
        let n = rng.random_range(3..=30);
        let beta: f64 = rng.random_range(0.5..4.0);
        let w: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
        let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| normal(&mut rng)).collect()).collect();
        let targets: Vec<f64> = inputs
            .iter()
            .map(|x| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 0.3 + normal(&mut rng) / beta.sqrt())
            .collect();
        let arch = MlpArchitecture::new(d, vec![]).unwrap();
        let (aw, ab) = (10f64.powf(rng.random_range(-2.0..1.0)), 10f64.powf(rng.random_range(-2.0..1.0)));
        let groups = WeightGroups::per_layer(&arch, 1.0).with_decays(&[aw, ab]).unwrap();
        let spec = ObjectiveSpec { loss: Loss::SumSquares, noise_precision: beta };
        let trainer = TrainerConfig { gradient_tolerance: 1e-7, max_iterations: 20_000, ..TrainerConfig::default() };
        let data = BnnData::new(inputs.clone(), targets.clone()).unwrap();
        let m = train_map(&data, &arch, &groups, &spec, &trainer).unwrap();
        let ours = m.evidence.core + m.evidence.prior_term + 0.5 * n as f64 * (beta / std::f64::consts::TAU).ln();

        let cov: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let dot: f64 = inputs[i].iter().zip(&inputs[j]).map(|(a, b)| a * b).sum();
                        dot / aw + 1.0 / ab + if i == j { 1.0 / beta } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        let (logdet, quad) = cholesky_logdet_solve(cov, &targets);
        let exact = -0.5 * quad - 0.5 * logdet - 0.5 * n as f64 * std::f64::consts::TAU.ln();
        worst = worst.max((ours - exact).abs());
    }

    let mut sym = 0.0f64;
    for case in 0..20 {
        let d = rng.random_range(1..=3);
        let width = rng.random_range(2..=4);
        let hidden = if case % 2 == 0 { vec![width] } else { vec![width, width] };
        let arch = MlpArchitecture::new(d, hidden).unwrap();
        let n = rng.random_range(5..=15);
        let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| normal(&mut rng)).collect()).collect();
        let targets: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let data = BnnData::new(inputs.clone(), targets).unwrap();
        let groups = WeightGroups::per_layer(&arch, 0.3);
        let spec = ObjectiveSpec::default();
        let p: Vec<f64> = (0..arch.param_count()).map(|_| normal(&mut rng)).collect();
        let base = BnnModel::from_weights(p.clone(), &data, &arch, &groups, &spec).unwrap();
        for q in symmetric_variants(&arch, &p, &mut rng) {
            let other = BnnModel::from_weights(q, &data, &arch, &groups, &spec).unwrap();
            for x in &inputs {
                sym = sym.max((other.output(x).unwrap() - base.output(x).unwrap()).abs());
            }
            sym = sym.max(rel(other.objective, base.objective, 1.0));
            sym = sym.max(rel(other.evidence.total, base.evidence.total, 1.0));
        }
    }
    outcome(
        worst <= 1e-6 && sym <= 1e-12,
        format!("max log marginal gap {worst:.2e} over 50 problems, symmetry gap {sym:.2e}"),
    )
}

// ---------------------------------------------------------------- 6

fn c6_selection() -> Outcome {
    let sigma = 0.2;
    let mut widths = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let inputs: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let targets: Vec<f64> = inputs
            .iter()
            .map(|x| (1.5 * x[0] - x[1] + 0.3).tanh() + sigma * normal(&mut rng))
            .collect();
        let data = BnnData::new(inputs, targets).unwrap();
        let cfg = SelectionConfig {
            candidates: vec![1, 2, 4, 8, 16],
            policy: HiddenPolicy::OneLayer,
            decay: 0.1,
            objective: ObjectiveSpec { loss: Loss::SumSquares, noise_precision: 1.0 / (sigma * sigma) },
            trainer: TrainerConfig { restarts: 3, seed, ..TrainerConfig::default() },
        };
        widths.push(select_model(&data, &cfg).unwrap().best.architecture.hidden_units());
    }
    let small = widths.iter().filter(|&&w| w <= 2).count();
    outcome(small >= 8, format!("selected widths {widths:?}, {small}/10 in {{1, 2}}"))
}

// ---------------------------------------------------------------- 7

fn c7_pipeline() -> Outcome {
    let cfg = ExperimentConfig { repetitions: 10, seed: 0, ..ExperimentConfig::default() };
    let exp = run_experiment(&DataSource::Synthetic(SynthCohortSpec::default()), &cfg, None).unwrap();
    println!("{}", exp.table.to_text());
    let mean = |name: &str| exp.table.mean_of(name).unwrap();
    let (knn, svm, hybrid) = (mean("kNN"), mean("SVM"), mean("Hybrid"));
    let pass = hybrid >= svm && svm >= knn && hybrid >= 85.0 && knn <= hybrid - 5.0;
    outcome(
        pass,
        format!("means over 10 seeds: Hybrid {hybrid:.2}, SVM {svm:.2}, kNN {knn:.2}, RBF {:.2}", mean("RBF")),
    )
}

// ---------------------------------------------------------------- 8

fn spy_table(poison: Option<&SubjectId>) -> FeatureTable<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut t = FeatureTable::new((0..4).map(|i| format!("f{i}")).collect());
    for s in 0..6 {
        let id = SubjectId(format!("spy{s}"));
        let label = if s % 2 == 0 { ClassLabel::Positive } else { ClassLabel::Negative };
        let centre = if label.is_positive() { 1.0 } else { -1.0 };
        for _ in 0..4 {
            let mut v: Vec<f64> = (0..4).map(|c| centre * (c as f64 + 1.0) * 0.5 + 0.8 * normal(&mut rng)).collect();
            if poison == Some(&id) {
                v = v.iter().map(|x| 1e3 * x - 50.0).collect();
            }
            t.push(id.clone(), label, v).unwrap();
        }
    }
    t
}

fn spy_pipelines() -> Vec<PipelineSpec> {
    let hybrid = HybridPipeline {
        swarm: SwarmConfig { particles: 3, iterations: 2, ..SwarmConfig::default() },
        widths: vec![1],
        ..HybridPipeline::default()
    };
    vec![
        PipelineSpec::Svm(SvmPipeline { costs: vec![1.0, 10.0], gammas: vec![0.1, 1.0], ..SvmPipeline::default() }),
        PipelineSpec::Hybrid(hybrid),
        PipelineSpec::Knn { k: 3 },
        PipelineSpec::Rbf { centers: 3, ridge: 1e-3 },
        PipelineSpec::Majority,
    ]
}

fn c8_leakage() -> Outcome {
    let table = spy_table(None);
    let subjects: Vec<(SubjectId, ClassLabel)> = (0..6)
        .map(|s| {
            let label = if s % 2 == 0 { ClassLabel::Positive } else { ClassLabel::Negative };
            (SubjectId(format!("spy{s}")), label)
        })
        .collect();
    let plan = build_loso_plan_stratified(&subjects, 2, 8).unwrap();
    let mut phases = BTreeSet::new();
    let mut violations = 0;
    let mut changed = 0;
    for spec in spy_pipelines() {
        let log = AuditLog::new();
        let report = run_pipeline_audited(&table, &spec, &plan, 8, &log).unwrap();
        for a in log.entries() {
            phases.insert(a.phase);
            let test = &plan.outer[a.fold].test;
            if (a.phase == Phase::Predict) != (&a.subject == test) {
                violations += 1;
            }
        }
        for (f, fold) in plan.outer.iter().enumerate() {
            let poisoned = run_pipeline(&spy_table(Some(&fold.test)), &spec, &plan, 8).unwrap();
            if poisoned.folds[f].choices != report.folds[f].choices {
                changed += 1;
            }
        }
    }
    let forged = AuditLog::new();
    let index = subject_index(&table);
    FoldAccess::new(&table, &index, 0, &forged).read(Phase::Train, &[plan.outer[0].test.clone()]).unwrap();
    let caught = matches!(check_leakage(&plan, &forged), Err(Error::Leakage(_)));
    let all_phases = phases.len() == 5;
    outcome(
        violations == 0 && changed == 0 && caught && all_phases,
        format!(
            "{violations} test reads outside prediction, {changed} fold choices moved by poisoning the test subject, forged log {}, phases seen {:?}",
            if caught { "rejected" } else { "accepted" },
            phases.iter().map(|p| p.name()).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------- 9

fn evaluate_into(dir: &Path) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_eegbi"))
        .args(["evaluate", "--seed", "7", "--classifier", "all", "--subjects", "4", "--epochs", "5"])
        .args(["--set", "swarm.particles=4", "--set", "swarm.iterations=3", "--set", "inner_folds=3"])
        .args(["--set", "bnn.widths=1,2", "--set", "bnn.restarts=1"])
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn c9_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = evaluate_into(dir);
        if !out.status.success() {
            return outcome(false, format!("evaluate failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    let seeded = fa
        .iter()
        .filter(|(n, _)| n.ends_with(".csv") || n.ends_with(".txt"))
        .all(|(n, bytes)| {
            let text = String::from_utf8_lossy(bytes);
            text.contains("seed = ") && (n != "comparison.txt" || text.contains("# seed = 7"))
        });
    outcome(
        !fa.is_empty() && fa == fb && seeded,
        format!("{} files, identical {}, seed headers {}", fa.len(), fa == fb, seeded),
    )
}
