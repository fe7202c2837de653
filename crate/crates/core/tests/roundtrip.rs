use proptest::prelude::*;

use ctaudit::datamodel::{load_model, read_matrix, read_profiles, save_model, write_matrix, write_profiles};
use ctaudit::features::build_matrix;
use ctaudit::learners::fit;
use ctaudit::{FeatureMatrix, Label, ModelKind, ProfileRecord};

fn profile() -> impl Strategy<Value = ProfileRecord> {
    (
        ("[a-z0-9_.]{1,20}", "\\PC{0,12}", "\\PC{0,40}", proptest::option::of("[a-z]{1,8}\\.(com|me|ee)/[a-z]{0,5}")),
        (0u64..10_000_000, 0u64..10_000, 0u64..5000, 0u64..500),
        proptest::collection::vec(any::<bool>(), 6),
        proptest::option::of(prop_oneof![Just(Label::Ct), Just(Label::Real)]),
    )
        .prop_map(|((username, fullname, biography, url), (followers, following, posts, videos), flags, label)| {
            ProfileRecord {
                user_id: String::new(),
                username,
                fullname,
                biography,
                external_url: url.map(|u| format!("https://{u}")),
                followers,
                following,
                posts,
                videos,
                is_private: flags[0],
                is_verified: flags[1],
                has_clips: flags[2],
                is_business: flags[3],
                has_category_name: flags[4],
                has_multiple_categories: flags[5],
                label,
                source: None,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn profiles_survive_jsonl(mut ps in proptest::collection::vec(profile(), 0..20)) {
        for (i, p) in ps.iter_mut().enumerate() {
            p.user_id = format!("u{i}");
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        write_profiles(&path, &ps).unwrap();
        prop_assert_eq!(read_profiles(&path).unwrap(), ps);
    }

    #[test]
    fn matrices_survive_csv(rows in proptest::collection::vec(proptest::collection::vec(-1e12f64..1e12, 17), 1..15), labeled in any::<bool>()) {
        let n = rows.len();
        let ids: Vec<String> = (0..n).map(|i| format!("id{i}")).collect();
        let labels = labeled.then(|| (0..n).map(|i| (i % 2) as u8).collect());
        let m = FeatureMatrix::new(FeatureMatrix::empty_canonical().feature_names().to_vec(), rows, labels, ids).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix(&m, &path).unwrap();
        let back = read_matrix(&path).unwrap();
        prop_assert_eq!(back.rows().iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        m.rows().iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(back, m);
    }
}

#[test]
fn saved_models_predict_identically() {
    let data = ctaudit::synth::generate_dataset(3);
    let small = data.subset(&(0..400).collect::<Vec<_>>());
    let all = build_matrix(&[]).feature_names().to_vec();
    assert_eq!(all.len(), 17);
    let dir = tempfile::tempdir().unwrap();
    for kind in [ModelKind::Knn, ModelKind::Logistic, ModelKind::Tree, ModelKind::Forest] {
        let model = fit(&kind.default_spec(), small.matrix(), 9).unwrap();
        let path = dir.path().join(format!("{}.json", kind.as_str()));
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
        let rows = data.matrix().rows();
        assert_eq!(back.predict_proba_rows(rows).unwrap(), model.predict_proba_rows(rows).unwrap());
    }
}
