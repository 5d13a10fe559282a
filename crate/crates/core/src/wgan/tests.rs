use super::*;
use crate::dataset::{build_dataset, SpeedClass, SweepSpec};
use crate::nn::{init_params, HiddenActivation, MlpSpec, OutputActivation};

const TANH: HiddenActivation = HiddenActivation::Tanh;

fn net(widths: &[usize], seed: u64) -> MlpParams<f64> {
    let s = MlpSpec::new(widths.to_vec(), TANH, OutputActivation::Identity).unwrap();
    let mut p: MlpParams<f64> = init_params(&s, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    for l in &mut p.layers {
        for b in &mut l.b {
            *b = rng.gen_range(-0.3..0.3);
        }
    }
    p
}

fn rand_tensor(rows: usize, cols: usize, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

/// Tiny instance: 8-dim data, 4-dim latent, batch 4.
struct Tiny {
    d: MlpParams<f64>,
    g: MlpParams<f64>,
    real: Tensor<f64>,
    labels: Tensor<f64>,
    z: Tensor<f64>,
    eps: Vec<f64>,
}

fn tiny() -> Tiny {
    Tiny {
        d: net(&[11, 6, 1], 1),
        g: net(&[7, 5, 8], 2),
        real: rand_tensor(4, 8, 3),
        labels: rand_tensor(4, 3, 4),
        z: rand_tensor(4, 4, 5),
        eps: vec![0.1, 0.4, 0.7, 0.95],
    }
}

fn fd4<F: Fn(&MlpParams<f64>) -> f64>(p: &MlpParams<f64>, i: usize, f: F) -> f64 {
    let h = 1e-3;
    let v = p.get_flat(i);
    let mut q = p.clone();
    let mut at = |d: f64| {
        q.set_flat(i, v + d);
        f(&q)
    };
    (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
}

fn assert_grads_match<F: Fn(&MlpParams<f64>) -> f64>(p: &MlpParams<f64>, grads: &MlpParams<f64>, f: F) {
    let mut checked = 0;
    for i in 0..p.param_count() {
        let an = grads.get_flat(i);
        let fd = fd4(p, i, &f);
        if an.abs().max(fd.abs()) > 1e-8 {
            let rel = (an - fd).abs() / an.abs().max(fd.abs());
            assert!(rel < 1e-4, "param {i}: {an} vs {fd}");
            checked += 1;
        }
    }
    assert!(checked > p.param_count() / 2);
}

fn constant_critic(widths: &[usize], c0: f64) -> MlpParams<f64> {
    let s = MlpSpec::new(widths.to_vec(), HiddenActivation::LeakyRelu { slope: 0.2 }, OutputActivation::Identity).unwrap();
    let mut p = MlpParams::zeros(&s);
    p.layers.last_mut().unwrap().b[0] = c0;
    p
}

#[test]
fn constant_critic_without_penalty_has_zero_loss() {
    let t = tiny();
    let d = constant_critic(&[11, 6, 1], 0.7);
    let r = d_loss(&d, &t.g, &t.real, &t.labels, &t.z, &t.eps, 0.0).unwrap();
    assert_eq!(r.loss, 0.0);
    assert_eq!(r.grads.norm(), 0.0);
}

#[test]
fn unit_norm_linear_critic_has_zero_penalty() {
    let t = tiny();
    let s = MlpSpec::new(vec![11, 1], TANH, OutputActivation::Identity).unwrap();
    let mut d = MlpParams::zeros(&s);
    let w = [0.5, -0.5, 0.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    d.layers[0].w.data_mut().copy_from_slice(&w);
    let with = d_loss(&d, &t.g, &t.real, &t.labels, &t.z, &t.eps, 10.0).unwrap();
    let without = d_loss(&d, &t.g, &t.real, &t.labels, &t.z, &t.eps, 0.0).unwrap();
    assert!(with.gp.abs() < 1e-30);
    assert_eq!(with.loss, without.loss);
    for i in 0..d.param_count() {
        assert!((with.grads.get_flat(i) - without.grads.get_flat(i)).abs() < 1e-15);
    }
}

#[test]
fn critic_gradients_match_finite_differences() {
    let t = tiny();
    let r = d_loss(&t.d, &t.g, &t.real, &t.labels, &t.z, &t.eps, 10.0).unwrap();
    assert!(r.gp > 0.0);
    assert_grads_match(&t.d, &r.grads, |q| d_loss(q, &t.g, &t.real, &t.labels, &t.z, &t.eps, 10.0).unwrap().loss);
}

#[test]
fn generator_gradients_match_finite_differences() {
    let t = tiny();
    let r = g_loss(&t.d, &t.g, &t.z, &t.labels).unwrap();
    assert_grads_match(&t.g, &r.grads, |q| g_loss(&t.d, q, &t.z, &t.labels).unwrap().loss);
}

#[test]
fn constant_critic_gives_constant_generator_loss() {
    let t = tiny();
    let d = constant_critic(&[11, 6, 1], 0.7);
    let r = g_loss(&d, &t.g, &t.z, &t.labels).unwrap();
    assert_eq!(r.loss, -0.7);
    assert_eq!(r.grads.norm(), 0.0);
}

#[test]
fn duplicated_batch_leaves_generator_loss_unchanged() {
    let t = tiny();
    let a = g_loss(&t.d, &t.g, &t.z, &t.labels).unwrap();
    let b = g_loss(&t.d, &t.g, &t.z.vstack(&t.z).unwrap(), &t.labels.vstack(&t.labels).unwrap()).unwrap();
    assert!((a.loss - b.loss).abs() < 1e-15);
}

#[test]
fn loss_shape_errors() {
    let t = tiny();
    let short = rand_tensor(3, 8, 1);
    assert!(matches!(d_loss(&t.d, &t.g, &short, &t.labels, &t.z, &t.eps, 1.0), Err(Error::Shape(_))));
    assert!(matches!(d_loss(&t.d, &t.g, &t.real, &t.labels, &t.z, &t.eps[..2], 1.0), Err(Error::Shape(_))));
    assert!(matches!(g_loss(&t.d, &t.g, &rand_tensor(3, 4, 1), &t.labels), Err(Error::Shape(_))));
}

#[test]
fn vanilla_losses_at_even_odds() {
    let t = tiny();
    let d = constant_critic(&[11, 6, 1], 0.0);
    let (dl, gl) = vanilla_gan_losses(&d, &t.g, &t.real, &t.labels, &t.z).unwrap();
    assert!((dl.loss - 4f64.ln()).abs() < 1e-15);
    assert!((gl.loss - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn vanilla_perfect_critic_loss_vanishes() {
    let t = tiny();
    // The generator always emits -1 in the first coordinate; real data are positive.
    let mut g = MlpParams::zeros(&t.g.spec);
    g.layers[1].b[0] = -1.0;
    let s = MlpSpec::new(vec![11, 1], TANH, OutputActivation::Identity).unwrap();
    let mut d = MlpParams::zeros(&s);
    d.layers[0].w.data_mut()[0] = 1e3;
    let (dl, _) = vanilla_gan_losses(&d, &g, &t.real.clone(), &t.labels, &t.z).unwrap();
    let floor = 2.0 * (-LOGIT_CLAMP).exp();
    assert!(dl.loss <= floor * 1.01 && dl.loss > 0.0, "{}", dl.loss);
}

#[test]
fn vanilla_gradients_match_finite_differences() {
    let t = tiny();
    let (dl, gl) = vanilla_gan_losses(&t.d, &t.g, &t.real, &t.labels, &t.z).unwrap();
    assert_grads_match(&t.d, &dl.grads, |q| vanilla_gan_losses(q, &t.g, &t.real, &t.labels, &t.z).unwrap().0.loss);
    assert_grads_match(&t.g, &gl.grads, |q| vanilla_gan_losses(&t.d, q, &t.real, &t.labels, &t.z).unwrap().1.loss);
}

#[test]
fn label_scaler_widens_constant_labels() {
    let stats = DatasetStats {
        count: 2,
        label_min: [1e-3, 1e4, 20.0],
        label_max: [3e-3, 2e4, 20.0],
        label_mean: [0.0; 3],
        label_std: [0.0; 3],
        coord_min: vec![0.0, 1.0],
        coord_max: vec![2.0, 1.0],
    };
    let s = LabelScaler::from_stats(&stats);
    let n = s.normalize(&HullLabel { cd: 2e-3, w: 1.5e4, u: 20.0 });
    assert!((n[0] - 0.5).abs() < 1e-12 && (n[1] - 0.5).abs() < 1e-12);
    assert_eq!(n[2], 0.5);
    let back = s.denormalize(&n);
    assert!((back.cd - 2e-3).abs() < 1e-15 && back.u == 20.0);
    let c = ConditionLabel::new(HullLabel { cd: 4e-3, w: 1.5e4, u: 20.0 }, &s);
    assert!(c.out_of_range());

    let cs = CoordScaler::from_stats(&stats);
    assert_eq!(cs.normalize(&[1.0, 1.0]), vec![0.5, 0.0]);
    assert_eq!(cs.denormalize(&[0.25, 0.7]), vec![0.5, 1.0]);
}

fn small_dataset() -> Dataset {
    let spec = SweepSpec {
        speed_class: SpeedClass::Medium,
        u_knots: 20.0,
        bl_values: vec![0.14],
        dl_values: vec![0.055, 0.06],
        cm_values: vec![0.98],
        cw_values: vec![0.8, 0.82],
        cb_values: vec![0.7],
        length: 100.0,
    };
    let setup = LabelingSetup::default();
    let b = build_dataset(&spec, &GridSpec::standard(), &setup);
    let stats = b.stats().unwrap();
    Dataset { samples: b.samples, stats, setup }
}

fn small_config() -> TrainConfig {
    TrainConfig {
        latent_dim: 4,
        g_hidden: vec![16],
        d_hidden: vec![16],
        n_critic: 2,
        batch_size: 3,
        iterations: 3,
        seed: 9,
        ..TrainConfig::default()
    }
}

fn to_bytes(c: &Checkpoint) -> Vec<u8> {
    let mut v = Vec::new();
    write_checkpoint(&mut v, c).unwrap();
    v
}

#[test]
fn smoke_training_writes_one_metrics_row() {
    let mut ds = small_dataset();
    ds.samples.truncate(2);
    let cfg = TrainConfig { iterations: 1, n_critic: 1, batch_size: 2, ..small_config() };
    let mut metrics = Vec::new();
    let ckpt = train_with(&ds, &GridSpec::standard(), &cfg, TrainHooks { metrics: Some(&mut metrics), ..Default::default() })
        .unwrap();
    let text = String::from_utf8(metrics).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "iteration,d_loss,g_loss,gp");
    assert!(lines[1].starts_with("1,"));
    assert_eq!(ckpt.iteration, 1);
}

#[test]
fn training_is_bit_reproducible() {
    let ds = small_dataset();
    let a = train(&ds, &GridSpec::standard(), &small_config()).unwrap();
    let b = train(&ds, &GridSpec::standard(), &small_config()).unwrap();
    assert_eq!(to_bytes(&a), to_bytes(&b));
    let c = train(&ds, &GridSpec::standard(), &TrainConfig { seed: 10, ..small_config() }).unwrap();
    assert_ne!(a.g, c.g);
}

#[test]
fn vanilla_mode_shares_the_training_loop() {
    let ds = small_dataset();
    let cfg = TrainConfig { loss_mode: LossMode::Vanilla, ..small_config() };
    let mut metrics = Vec::new();
    train_with(&ds, &GridSpec::standard(), &cfg, TrainHooks { metrics: Some(&mut metrics), ..Default::default() }).unwrap();
    let text = String::from_utf8(metrics).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0e0")));
}

struct NanRegularizer;

impl GeneratorRegularizer for NanRegularizer {
    fn value_and_grad(&self, fake: &Tensor<f64>) -> (f64, Tensor<f64>) {
        (f64::NAN, Tensor::zeros(fake.rows(), fake.cols()))
    }
}

#[test]
fn non_finite_loss_aborts_with_diagnostic_checkpoint() {
    let ds = small_dataset();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("diag.hfgn");
    let hooks = TrainHooks { diagnostic_path: Some(path.clone()), regularizer: Some(&NanRegularizer), ..Default::default() };
    let err = train_with(&ds, &GridSpec::standard(), &small_config(), hooks).unwrap_err();
    assert!(matches!(err, Error::Numerical(_)), "{err}");
    let diag = load_checkpoint(&path).unwrap();
    assert_eq!(diag.iteration, 0);
}

#[test]
fn generation_is_deterministic_and_ordered() {
    let ds = small_dataset();
    let ckpt = train(&ds, &GridSpec::standard(), &small_config()).unwrap();
    let reqs: Vec<_> = ds.samples.iter().take(3).map(|s| s.label).collect();
    let a = generate(&ckpt, &reqs, 5, 1).unwrap();
    assert_eq!(a.len(), 15);
    assert_eq!(a, generate(&ckpt, &reqs, 5, 1).unwrap());
    let longer = generate(&ckpt, &reqs, 7, 1).unwrap();
    for r in 0..3 {
        for s in 0..5 {
            assert_eq!(a[r * 5 + s], longer[r * 7 + s]);
        }
    }
    assert_ne!(a[0], a[1]);
    assert_ne!(a[0], generate(&ckpt, &reqs, 5, 2).unwrap()[0]);
    for c in &a {
        let flat = c.to_flat();
        assert_eq!(flat.len(), 1600);
        assert!(flat.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let ds = small_dataset();
    let ckpt = train(&ds, &GridSpec::standard(), &small_config()).unwrap();
    let bytes = to_bytes(&ckpt);
    let back = read_checkpoint(&mut bytes.as_slice()).unwrap();
    assert_eq!(back, ckpt);
    assert_eq!(to_bytes(&back), bytes);
    assert_eq!(&bytes[..4], MAGIC);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.hfgn");
    save_checkpoint(&path, &ckpt).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), ckpt);
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let ds = small_dataset();
    let ckpt = train(&ds, &GridSpec::standard(), &TrainConfig { iterations: 1, ..small_config() }).unwrap();
    let bytes = to_bytes(&ckpt);

    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    let e = read_checkpoint(&mut bad.as_slice()).unwrap_err();
    assert!(matches!(e, Error::Format(ref m) if m.contains("magic")), "{e}");

    let mut bad = bytes.clone();
    bad[4] = 9;
    let e = read_checkpoint(&mut bad.as_slice()).unwrap_err();
    assert!(matches!(e, Error::Format(ref m) if m.contains("version 9")), "{e}");

    let cut = &bytes[..bytes.len() - 12];
    let e = read_checkpoint(&mut &cut[..]).unwrap_err();
    assert!(matches!(e, Error::Format(ref m) if m.contains("expected") && m.contains("found")), "{e}");

    let e = read_checkpoint(&mut &bytes[..30]).unwrap_err();
    assert!(matches!(e, Error::Format(ref m) if m.contains("truncated")), "{e}");

    let mut bad = bytes.clone();
    let n = bad.len();
    bad[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
    let e = read_checkpoint(&mut bad.as_slice()).unwrap_err();
    assert!(matches!(e, Error::Format(ref m) if m.contains("non-finite")), "{e}");

    let mut nan = ckpt.clone();
    nan.g.set_flat(0, f64::INFINITY);
    assert!(matches!(write_checkpoint(&mut Vec::new(), &nan), Err(Error::Numerical(_))));
}

#[test]
fn config_file_overrides_defaults() {
    let mut c = TrainConfig::default();
    let unknown = c
        .apply_file_text("# comment\niterations = 2000\nlr=2e-4\ng_hidden=32,64\nhidden_activation=leaky_relu:0.1\nloss_mode=vanilla\nmax_samples=500\nn_per_label=3\n")
        .unwrap();
    assert_eq!(c.iterations, 2000);
    assert_eq!(c.adam.lr, 2e-4);
    assert_eq!(c.g_hidden, vec![32, 64]);
    assert_eq!(c.hidden_activation, HiddenActivation::LeakyRelu { slope: 0.1 });
    assert_eq!(c.loss_mode, LossMode::Vanilla);
    assert_eq!(c.max_samples, Some(500));
    assert_eq!(unknown, vec![("n_per_label".to_string(), "3".to_string())]);
    assert!(c.apply_file_text("iterations=many").is_err());
    assert!(c.apply_file_text("no equals sign").is_err());
    assert!(TrainConfig { batch_size: 1, ..TrainConfig::default() }.validate().is_err());
    assert!(TrainConfig { lambda_gp: -1.0, ..TrainConfig::default() }.validate().is_err());
}

#[test]
fn default_architecture() {
    let c = TrainConfig::default();
    assert_eq!(c.g_spec(1600).unwrap().layer_widths, vec![67, 256, 512, 1024, 1600]);
    assert_eq!(c.d_spec(1600).unwrap().layer_widths, vec![1603, 512, 256, 128, 1]);
    assert_eq!((c.lambda_gp, c.n_critic, c.batch_size, c.iterations), (10.0, 5, 64, 7000));
    assert_eq!((c.adam.lr, c.adam.beta1, c.adam.beta2), (1e-4, 0.0, 0.9));
}

fn flat(p: &MlpParams<f64>) -> Vec<f64> {
    (0..p.param_count()).map(|i| p.get_flat(i)).collect()
}

#[test]
fn precision_is_configurable() {
    let mut c = TrainConfig::default();
    assert_eq!(c.precision, Precision::F32);
    c.set("precision", "f64").unwrap();
    assert_eq!(c.precision, Precision::F64);
    assert!(c.set("precision", "f16").is_err());
}

#[test]
fn single_precision_losses_track_double_precision() {
    let t = tiny();
    let (d32, g32) = (t.d.cast::<f32>(), t.g.cast::<f32>());
    let (real, labels, z) = (t.real.cast::<f32>(), t.labels.cast::<f32>(), t.z.cast::<f32>());
    let eps: Vec<f32> = t.eps.iter().map(|&e| e as f32).collect();
    let a = d_loss(&t.d, &t.g, &t.real, &t.labels, &t.z, &t.eps, 10.0).unwrap();
    let b = d_loss(&d32, &g32, &real, &labels, &z, &eps, 10.0).unwrap();
    assert!((a.loss - b.loss as f64).abs() <= 1e-5 * a.loss.abs().max(1.0));
    let (ga, gb) = (flat(&a.grads), flat(&b.grads.cast()));
    let scale = ga.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(ga.iter().zip(&gb).all(|(x, y)| (x - y).abs() <= 1e-4 * scale));
    let a = g_loss(&t.d, &t.g, &t.z, &t.labels).unwrap();
    let b = g_loss(&d32, &g32, &z, &labels).unwrap();
    assert!((a.loss - b.loss as f64).abs() <= 1e-5 * a.loss.abs().max(1.0));
}

#[test]
fn single_precision_checkpoints_hold_f32_weights_exactly() {
    let ds = small_dataset();
    let ckpt = train(&ds, &GridSpec::standard(), &small_config()).unwrap();
    assert_eq!(ckpt.config.precision, Precision::F32);
    let all = flat(&ckpt.g);
    assert!(all.iter().all(|&v| v as f32 as f64 == v));
    let back = read_checkpoint(&mut to_bytes(&ckpt).as_slice()).unwrap();
    assert_eq!(back, ckpt);
    // generation runs the generator in f32
    let label = ds.samples[0].label;
    let cloud = &generate(&ckpt, &[label], 1, 4).unwrap()[0];
    let mut rng = request_rng(4, 0, 0);
    let mut row: Vec<f32> = (0..4).map(|_| rng.sample::<f64, _>(StandardNormal) as f32).collect();
    row.extend(ckpt.label_scaler().normalize(&label).map(|v| v as f32));
    let y = forward(&ckpt.g.cast::<f32>(), &Tensor::new(1, row.len(), row).unwrap()).unwrap();
    let want = ckpt.coord_scaler().denormalize(&y.cast::<f64>().into_data());
    assert_eq!(cloud.to_flat(), want);
}

#[test]
fn double_precision_training_is_reproducible() {
    let ds = small_dataset();
    let cfg = TrainConfig { precision: Precision::F64, ..small_config() };
    let a = train(&ds, &GridSpec::standard(), &cfg).unwrap();
    let b = train(&ds, &GridSpec::standard(), &cfg).unwrap();
    assert_eq!(to_bytes(&a), to_bytes(&b));
    let single = train(&ds, &GridSpec::standard(), &small_config()).unwrap();
    assert_ne!(a.g, single.g);
}
