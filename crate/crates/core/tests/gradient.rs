use rand::Rng;
use seedstab::rng::seeded;
use seedstab::textmodel::{loss_and_grad, Dims, Encoded, ModelWeights};

const EPS: f64 = 1e-5;

fn central_difference(w: &ModelWeights, batch: &[&Encoded]) -> Vec<f64> {
    let mut probe = w.clone();
    (0..w.params().len())
        .map(|i| {
            let x = w.params()[i];
            probe.params_mut()[i] = x + EPS;
            let up = loss_and_grad(&probe, batch).unwrap().0;
            probe.params_mut()[i] = x - EPS;
            let down = loss_and_grad(&probe, batch).unwrap().0;
            probe.params_mut()[i] = x;
            (up - down) / (2.0 * EPS)
        })
        .collect()
}

fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = seeded(2024);
    for trial in 0..25 {
        let dims = Dims::new(rng.gen_range(3..10), rng.gen_range(1..6), rng.gen_range(1..6));
        let mut w = ModelWeights::init(dims, &mut rng);
        for p in w.params_mut() {
            *p *= rng.gen_range(1.0..5.0);
        }
        let batch: Vec<Encoded> = (0..rng.gen_range(1..6))
            .map(|_| Encoded {
                tokens: (0..rng.gen_range(1..7)).map(|_| rng.gen_range(0..dims.vocab_size)).collect(),
                label: rng.gen_range(0..2),
            })
            .collect();
        let refs: Vec<&Encoded> = batch.iter().collect();
        let analytic = loss_and_grad(&w, &refs).unwrap().1;
        let numeric = central_difference(&w, &refs);
        let err = max_relative_error(analytic.params(), &numeric);
        assert!(err < 1e-4, "trial {trial}: max relative error {err:e}");
    }
}
