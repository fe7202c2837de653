use ctaudit::synth::{default_params, generate_all_profiles, generate_profiles, provider_seed, AuxParams, SynthParams};
use ctaudit::Label;

const N: usize = 10_000;

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

#[test]
fn provider_rows_reproduce_their_marginals() {
    let aux = AuxParams::default();
    for (i, row) in default_params().into_iter().enumerate() {
        let mut p = row.clone();
        p.count = N;
        let profiles = generate_profiles(&p, &aux, provider_seed(42, i));
        assert_eq!(profiles.len(), N);
        let n = N as f64;
        for (what, target, std, got) in [
            ("followers", p.followers_mean, p.followers_std, mean(profiles.iter().map(|x| x.followers as f64))),
            ("following", p.following_mean, p.following_std, mean(profiles.iter().map(|x| x.following as f64))),
            ("posts", p.posts_mean, p.posts_std, mean(profiles.iter().map(|x| x.posts as f64))),
        ] {
            let tol = 3.0 * std / n.sqrt();
            assert!(
                (got - target).abs() <= tol,
                "{} {what}: mean {got} vs {target} (tolerance {tol})",
                p.name
            );
        }
        for (what, rate, got) in [
            ("private", p.private_rate, mean(profiles.iter().map(|x| f64::from(u8::from(x.is_private))))),
            ("url", p.url_rate, mean(profiles.iter().map(|x| f64::from(u8::from(x.external_url.is_some()))))),
        ] {
            let tol = 3.0 * (rate * (1.0 - rate) / n).sqrt();
            assert!((got - rate).abs() <= tol, "{} {what}: rate {got} vs {rate} (tolerance {tol})", p.name);
        }
        assert!(profiles.iter().all(|x| x.label == Some(row.label)));
    }
}

#[test]
fn default_dataset_counts() {
    let all = generate_all_profiles(&SynthParams::default(), 42).unwrap();
    assert_eq!(all.len(), 2600);
    assert_eq!(all.iter().filter(|p| p.label == Some(Label::Ct)).count(), 1293);
    assert_eq!(all.iter().filter(|p| p.label == Some(Label::Real)).count(), 1307);
}

#[test]
fn custom_params_change_only_their_row() {
    let mut params = SynthParams::default();
    params.providers.retain(|p| p.label == Label::Real || p.name == "CT-1");
    params.providers.iter_mut().find(|p| p.name == "CT-1").unwrap().count = 5;
    let all = generate_all_profiles(&params, 1).unwrap();
    assert_eq!(all.len(), 5 + 1307);
}
