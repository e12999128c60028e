use std::ffi::{CStr, CString};
use std::ptr;

use lungcad::classifiers::Hyperparams;
use lungcad::data::extract_nodule;
use lungcad::imaging::{normalize_intensity, RawImage};
use lungcad::modelsel::train_final;
use lungcad::{ClassifierConfig, FeatureLayout, Label, LabeledSet, Polygon, TrainedClassifier};
use lungcad_ffi::*;

fn last_error() -> String {
    let p = lungcad_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn trained(params: Hyperparams) -> TrainedClassifier {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            let t = i as f64;
            vec![t, (t * 0.7).sin(), (t * 1.3).cos()]
        })
        .collect();
    let labels = (0..40)
        .map(|i| {
            if i >= 20 {
                Label::Malignant
            } else {
                Label::Benign
            }
        })
        .collect();
    let data = LabeledSet::new(rows, labels).unwrap();
    train_final(&ClassifierConfig::new(params).with_seed(3), 0.1, &data).unwrap()
}

fn load(model: &TrainedClassifier) -> *mut LungcadModel {
    let json = CString::new(model.to_json().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { lungcad_model_from_json(json.as_ptr(), &mut handle) },
        LungcadStatus::Ok
    );
    assert!(!handle.is_null());
    handle
}

#[test]
fn handle_scores_match_library() {
    for params in [
        Hyperparams::Logreg { c: 1.0 },
        Hyperparams::Knn { k: 3 },
        Hyperparams::Rforest { trees: 5, depth: 3 },
    ] {
        let model = trained(params);
        let handle = load(&model);
        let mut dim = 0usize;
        let mut theta = 0.0;
        unsafe {
            assert_eq!(lungcad_model_dim(handle, &mut dim), LungcadStatus::Ok);
            assert_eq!(
                lungcad_model_threshold(handle, &mut theta),
                LungcadStatus::Ok
            );
        }
        assert_eq!((dim, theta), (3, 0.1));
        for i in 0..20 {
            let x = [i as f64 * 2.1, 0.3, -0.4];
            let (mut score, mut label, mut score2) = (0.0, 0i32, 0.0);
            unsafe {
                assert_eq!(
                    lungcad_model_score(handle, x.as_ptr(), 3, &mut score),
                    LungcadStatus::Ok
                );
                assert_eq!(
                    lungcad_model_predict(handle, x.as_ptr(), 3, &mut label, &mut score2),
                    LungcadStatus::Ok
                );
            }
            assert_eq!(score.to_bits(), model.score(&x).to_bits());
            assert_eq!(score2.to_bits(), score.to_bits());
            assert_eq!(label, if score >= theta { 1 } else { -1 });
        }
        unsafe { lungcad_model_free(handle) };
    }
}

#[test]
fn load_from_file_and_version_errors() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained(Hyperparams::Logreg { c: 0.5 });
    let path = dir.path().join("model.json");
    std::fs::write(&path, model.to_json().unwrap()).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { lungcad_model_load(cpath.as_ptr(), &mut handle) },
        LungcadStatus::Ok
    );
    unsafe { lungcad_model_free(handle) };

    let bumped = model
        .to_json()
        .unwrap()
        .replacen("\"schema\": 1", "\"schema\": 9", 1);
    let cjson = CString::new(bumped).unwrap();
    let mut h2 = ptr::null_mut();
    assert_eq!(
        unsafe { lungcad_model_from_json(cjson.as_ptr(), &mut h2) },
        LungcadStatus::SchemaVersion
    );
    assert!(h2.is_null());
    assert!(last_error().contains("schema"));

    let missing = CString::new(dir.path().join("nope.json").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { lungcad_model_load(missing.as_ptr(), &mut h2) },
        LungcadStatus::Io
    );
}

#[test]
fn null_and_dimension_errors() {
    let model = trained(Hyperparams::Logreg { c: 1.0 });
    let handle = load(&model);
    let x = [1.0, 2.0];
    let mut score = 0.0;
    unsafe {
        assert_eq!(
            lungcad_model_score(handle, x.as_ptr(), 2, &mut score),
            LungcadStatus::DimensionMismatch
        );
        assert_eq!(
            lungcad_model_score(ptr::null(), x.as_ptr(), 2, &mut score),
            LungcadStatus::NullPointer
        );
        assert_eq!(
            lungcad_model_score(handle, ptr::null(), 3, &mut score),
            LungcadStatus::NullPointer
        );
        assert_eq!(
            lungcad_model_from_json(ptr::null(), ptr::null_mut()),
            LungcadStatus::NullPointer
        );
        lungcad_model_free(handle);
        lungcad_model_free(ptr::null_mut());
    }
    assert!(last_error().contains("NULL"));
}

#[test]
fn extraction_matches_library() {
    let (w, h) = (16usize, 12usize);
    let pixels: Vec<u16> = (0..w * h).map(|i| ((i * 37) % 4096) as u16).collect();
    let contours = [
        vec![(2.0, 2.0), (9.0, 2.5), (8.0, 8.0), (3.0, 7.0)],
        vec![(4.0, 3.0), (11.0, 4.0), (6.0, 9.0)],
    ];
    let flat: Vec<f64> = contours
        .iter()
        .flatten()
        .flat_map(|&(x, y)| [x, y])
        .collect();
    let counts: Vec<usize> = contours.iter().map(Vec::len).collect();
    let mut out = vec![0.0; lungcad_feature_len()];
    let status = unsafe {
        lungcad_extract_features(
            pixels.as_ptr(),
            w,
            h,
            4095,
            0.7,
            0.8,
            flat.as_ptr(),
            counts.as_ptr(),
            counts.len(),
            0.05,
            out.as_mut_ptr(),
            out.len(),
        )
    };
    assert_eq!(status, LungcadStatus::Ok, "{}", last_error());

    let raw = RawImage {
        width: w,
        height: h,
        samples: pixels.iter().map(|&v| v as u32).collect(),
        bit_depth: 16,
    };
    let img = normalize_intensity(&raw, 4095, 0.7, 0.8).unwrap();
    let polys: Vec<Polygon> = contours
        .iter()
        .map(|c| Polygon::new(c.clone()).unwrap())
        .collect();
    let expected = extract_nodule(&img, &polys, 0.05, FeatureLayout::default()).unwrap();
    assert_eq!(out, expected.values);

    let outside = [20.0, 20.0, 30.0, 20.0, 25.0, 30.0];
    let status = unsafe {
        lungcad_extract_features(
            pixels.as_ptr(),
            w,
            h,
            4095,
            0.7,
            0.8,
            outside.as_ptr(),
            [3usize].as_ptr(),
            1,
            0.05,
            out.as_mut_ptr(),
            out.len(),
        )
    };
    assert_eq!(status, LungcadStatus::InvalidInput);
    let short = unsafe {
        lungcad_extract_features(
            pixels.as_ptr(),
            w,
            h,
            4095,
            0.7,
            0.8,
            flat.as_ptr(),
            counts.as_ptr(),
            counts.len(),
            0.05,
            out.as_mut_ptr(),
            10,
        )
    };
    assert_eq!(short, LungcadStatus::DimensionMismatch);
}

#[test]
fn metrics_and_auc() {
    let mut m = LungcadMetrics::default();
    assert_eq!(
        unsafe { lungcad_metrics(8, 2, 6, 4, &mut m) },
        LungcadStatus::Ok
    );
    assert_eq!(m.sensitivity, 0.8);
    assert_eq!(m.specificity, 0.6);
    assert_eq!(m.accuracy, 0.7);
    assert!((m.f_measure - 2.0 * 0.48 / 1.4).abs() < 1e-15);
    assert_eq!(
        unsafe { lungcad_metrics(0, 0, 3, 1, &mut m) },
        LungcadStatus::UndefinedMetric
    );

    let scores = [0.1, 0.4, 0.35, 0.8];
    let labels = [-1, -1, 1, 1];
    let mut a = 0.0;
    assert_eq!(
        unsafe { lungcad_auc(scores.as_ptr(), labels.as_ptr(), 4, &mut a) },
        LungcadStatus::Ok
    );
    assert_eq!(a, 0.75);
    let bad = [-1, 0, 1, 1];
    assert_eq!(
        unsafe { lungcad_auc(scores.as_ptr(), bad.as_ptr(), 4, &mut a) },
        LungcadStatus::InvalidInput
    );
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/lungcad.h");
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = std::process::Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, header])
            .status();
        match status {
            Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
            Err(_) => eprintln!("{compiler} not available; skipping"),
        }
    }
}
