//! Neural Q-function approximation: plain and dueling fully connected
//! networks with manual backprop, SGD/Adam updates, target synchronisation
//! and binary checkpoints.

pub mod checkpoint;
mod network;
mod optim;

pub use checkpoint::SavedPolicy;
pub use network::{combine_dueling, Architecture, Network};
pub use optim::Optimizer;

use crate::error::Result;
use crate::learning::{FitSample, QFunction};

/// One optimizer step on the batch; returns the pre-update loss.
pub fn fit_step(net: &mut Network, opt: &mut Optimizer, batch: &[FitSample<'_, Vec<f64>>]) -> Result<f64> {
    let (loss, grads) = net.loss_and_grad(batch)?;
    opt.step(net.params_mut(), &grads);
    Ok(loss)
}

/// Copies `live` into `target` whenever `step` is a multiple of `interval`.
pub fn sync_target(live: &Network, target: &mut Network, step: u64, interval: u64) -> bool {
    if interval > 0 && step.is_multiple_of(interval) {
        target.copy_from(live);
        true
    } else {
        false
    }
}

/// Network plus optimizer state, usable wherever a [`QFunction`] is expected.
#[derive(Clone, Debug)]
pub struct ApproxQ {
    pub net: Network,
    pub opt: Optimizer,
}

impl ApproxQ {
    pub fn new(net: Network, opt: Optimizer) -> Self {
        Self { net, opt }
    }
}

impl QFunction<Vec<f64>> for ApproxQ {
    fn num_actions(&self) -> usize {
        self.net.num_outputs()
    }

    fn values(&self, state: &Vec<f64>) -> Vec<f64> {
        self.net.forward(state).expect("state width matches the network")
    }

    fn fit(&mut self, batch: &[FitSample<'_, Vec<f64>>]) -> f64 {
        if batch.is_empty() {
            return 0.0;
        }
        fit_step(&mut self.net, &mut self.opt, batch).expect("batch matches the network")
    }

    fn snapshot(&self) -> Self {
        self.clone()
    }
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::learning::{StepSize, TabularQ};
    use crate::Error;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Straightforward re-evaluation of a plain network from its flat
    /// parameters, written without the library's layer bookkeeping.
    fn reference_plain(sizes: &[usize], params: &[f64], x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        let mut off = 0;
        for (k, w) in sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let mut out = vec![0.0; n_out];
            for o in 0..n_out {
                let mut z = params[off + n_in * n_out + o];
                for i in 0..n_in {
                    z += params[off + o * n_in + i] * h[i];
                }
                out[o] = if k + 2 < sizes.len() { z.max(0.0) } else { z };
            }
            off += n_in * n_out + n_out;
            h = out;
        }
        h
    }

    fn numeric_grad(net: &Network, batch: &[FitSample<'_, Vec<f64>>]) -> Vec<f64> {
        let h = 1e-5;
        let mut probe = net.clone();
        (0..net.params().len())
            .map(|k| {
                let base = net.params()[k];
                probe.params_mut()[k] = base + h;
                let up = probe.loss_and_grad(batch).unwrap().0;
                probe.params_mut()[k] = base - h;
                let down = probe.loss_and_grad(batch).unwrap().0;
                probe.params_mut()[k] = base;
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn assert_grad_close(net: &Network, batch: &[FitSample<'_, Vec<f64>>]) {
        let (_, analytic) = net.loss_and_grad(batch).unwrap();
        let numeric = numeric_grad(net, batch);
        for (k, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
            assert!(rel <= 1e-4 || (a - n).abs() < 1e-9, "param {k}: {a} vs {n}");
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        for arch in [Architecture::plain_default(5, 7), Architecture::dueling_default(5, 7)] {
            let net = Network::zeros(arch).unwrap();
            assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(), vec![0.0; 7]);
        }
    }

    #[test]
    fn identity_layer_passes_input() {
        let arch = Architecture::Plain { sizes: vec![3, 3] };
        let mut p = vec![0.0; 12];
        for i in 0..3 {
            p[i * 3 + i] = 1.0;
        }
        let net = Network::from_params(arch, p).unwrap();
        assert_eq!(net.forward(&[0.25, -4.0, 7.5]).unwrap(), vec![0.25, -4.0, 7.5]);
    }

    #[test]
    fn single_linear_unit_by_hand() {
        // Q = 2x + 1, sample (x = 3, y = 10): err = -3, loss 4.5,
        // dL/dw = err·x = -9, dL/db = -3
        let net = Network::from_params(Architecture::Plain { sizes: vec![1, 1] }, vec![2.0, 1.0]).unwrap();
        let s = vec![3.0];
        let batch = [FitSample { state: &s, action: 0, target: 10.0 }];
        let (loss, g) = net.loss_and_grad(&batch).unwrap();
        assert_eq!(loss, 4.5);
        assert_eq!(g, vec![-9.0, -3.0]);
        let mut net = net;
        let mut opt = Optimizer::sgd(0.1);
        fit_step(&mut net, &mut opt, &batch).unwrap();
        assert!((net.params()[0] - 2.9).abs() < 1e-12);
        assert!((net.params()[1] - 1.3).abs() < 1e-12);
    }

    #[test]
    fn forward_matches_reference() {
        let sizes = vec![4, 6, 5, 3];
        let net = Network::new(Architecture::Plain { sizes: sizes.clone() }, &mut rng(3)).unwrap();
        let x = [0.3, -1.2, 0.8, 2.0];
        let got = net.forward(&x).unwrap();
        let want = reference_plain(&sizes, net.params(), &x);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn width_mismatch_is_error() {
        let net = Network::zeros(Architecture::plain_default(3, 2)).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::InvalidArgument(_))));
        assert!(net.loss_and_grad(&[]).is_err());
    }

    #[test]
    fn gradient_check_plain() {
        let mut r = rng(7);
        let net = Network::new(Architecture::Plain { sizes: vec![3, 5, 4, 3] }, &mut r).unwrap();
        let states: Vec<Vec<f64>> = vec![vec![0.5, -0.3, 1.1], vec![-0.7, 0.2, 0.9], vec![1.5, 1.0, -0.4]];
        let batch: Vec<_> = states
            .iter()
            .enumerate()
            .map(|(k, s)| FitSample { state: s, action: k % 3, target: 0.7 - k as f64 })
            .collect();
        assert_grad_close(&net, &batch);
    }

    #[test]
    fn gradient_check_dueling() {
        let mut r = rng(8);
        let arch = Architecture::Dueling { input: 3, trunk: vec![6, 5], stream: 4, outputs: 4 };
        let net = Network::new(arch, &mut r).unwrap();
        let states: Vec<Vec<f64>> = vec![vec![0.5, -0.3, 1.1], vec![-0.7, 0.2, 0.9]];
        let batch: Vec<_> = states
            .iter()
            .enumerate()
            .map(|(k, s)| FitSample { state: s, action: k * 3, target: 1.0 + k as f64 })
            .collect();
        assert_grad_close(&net, &batch);
    }

    #[test]
    fn dueling_shift_identity() {
        let q = combine_dueling(1.5, &[0.2, -0.4, 3.0]);
        let shifted = combine_dueling(1.5, &[10.2, 9.6, 13.0]);
        for (a, b) in q.iter().zip(&shifted) {
            assert!((a - b).abs() < 1e-12);
        }
        let mean: f64 = q.iter().sum::<f64>() / 3.0;
        assert!((mean - 1.5).abs() < 1e-12);
    }

    #[test]
    fn adam_drives_loss_down() {
        let mut r = rng(1);
        let net = Network::new(Architecture::plain_default(2, 3), &mut r).unwrap();
        let mut q = ApproxQ::new(net, Optimizer::adam(1e-3));
        let states: Vec<Vec<f64>> = (0..16).map(|k| vec![k as f64 / 8.0 - 1.0, (k % 4) as f64 * 0.5]).collect();
        let batch: Vec<_> = states
            .iter()
            .enumerate()
            .map(|(k, s)| FitSample { state: s, action: k % 3, target: s[0] * 2.0 - s[1] })
            .collect();
        let first = q.fit(&batch);
        let mut last = first;
        for _ in 0..500 {
            last = q.fit(&batch);
        }
        assert!(last < first * 0.05, "{first} -> {last}");
    }

    #[test]
    fn init_is_deterministic() {
        let a = Network::new(Architecture::dueling_default(9, 5), &mut rng(42)).unwrap();
        let b = Network::new(Architecture::dueling_default(9, 5), &mut rng(42)).unwrap();
        assert_eq!(a, b);
        let c = Network::new(Architecture::dueling_default(9, 5), &mut rng(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn xavier_bounds() {
        let net = Network::new(Architecture::Plain { sizes: vec![10, 20] }, &mut rng(0)).unwrap();
        let lim = (6.0f64 / 30.0).sqrt();
        assert!(net.params()[..200].iter().all(|w| w.abs() <= lim));
        assert!(net.params()[200..].iter().all(|b| *b == 0.0));
    }

    #[test]
    fn target_sync_cadence() {
        let live = Network::new(Architecture::plain_default(2, 2), &mut rng(1)).unwrap();
        let mut target = Network::zeros(Architecture::plain_default(2, 2)).unwrap();
        let synced: Vec<u64> = (1..=1500).filter(|s| sync_target(&live, &mut target, *s, 500)).collect();
        assert_eq!(synced, vec![500, 1000, 1500]);
        assert_eq!(target, live);
        let mut t2 = Network::zeros(Architecture::plain_default(2, 2)).unwrap();
        assert!((1..=5).all(|s| sync_target(&live, &mut t2, s, 1)));
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let policies = [
            SavedPolicy::Network(Network::new(Architecture::plain_default(4, 6), &mut rng(2)).unwrap()),
            SavedPolicy::Network(Network::new(Architecture::dueling_default(9, 7), &mut rng(3)).unwrap()),
            SavedPolicy::Table(TabularQ::from_table(2, 3, vec![1.0, -2.5, 0.0, 3.0, 1e-300, 7.0], StepSize::CONVERGENT)),
        ];
        for (k, p) in policies.iter().enumerate() {
            let path = dir.path().join(format!("p{k}.easq"));
            checkpoint::save(p, &path).unwrap();
            assert_eq!(&checkpoint::load(&path).unwrap(), p);
        }
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        let good = checkpoint::encode(&SavedPolicy::Network(
            Network::new(Architecture::Plain { sizes: vec![2, 3] }, &mut rng(0)).unwrap(),
        ));
        assert!(checkpoint::decode(&good).is_ok());
        assert!(checkpoint::decode(&good[..good.len() - 1]).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(checkpoint::decode(&extra).is_err());
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(checkpoint::decode(&bad_magic).is_err());
        let mut bad_kind = good.clone();
        bad_kind[8] = 9;
        assert!(checkpoint::decode(&bad_kind).is_err());
        assert!(matches!(
            checkpoint::load(Path::new("/nonexistent/q.easq")),
            Err(Error::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let _ = checkpoint::decode(&bytes);
        }

        #[test]
        fn decode_header_fuzz(kind in 0u32..4, sizes in proptest::collection::vec(0u32..6, 0..5)) {
            let mut bytes = b"EASQ".to_vec();
            bytes.extend(1u32.to_le_bytes());
            bytes.extend(kind.to_le_bytes());
            bytes.extend((sizes.len() as u32).to_le_bytes());
            for s in &sizes {
                bytes.extend(s.to_le_bytes());
            }
            bytes.extend(vec![0u8; 8 * 40]);
            let _ = checkpoint::decode(&bytes);
        }
    }
}
