use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use goe_ffi::*;

fn fixture_dir() -> CString {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/planted");
    CString::new(dir.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = goe_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dataset_handle_round_trip() {
    let dir = fixture_dir();
    let mut handle = ptr::null_mut();
    unsafe {
        assert_eq!(goe_dataset_load(dir.as_ptr(), &mut handle), GoeStatus::Ok);
        assert!(goe_last_error().is_null());
        let (mut n, mut d, mut k) = (0usize, 0usize, 0usize);
        assert_eq!(goe_dataset_node_count(handle, &mut n), GoeStatus::Ok);
        assert_eq!(goe_dataset_embedding_dim(handle, &mut d), GoeStatus::Ok);
        assert_eq!(goe_dataset_category_count(handle, &mut k), GoeStatus::Ok);
        assert_eq!((n, d, k), (600, 16, 3));
        goe_dataset_free(handle);
        goe_dataset_free(ptr::null_mut());
    }
}

#[test]
fn missing_dataset_reports_io() {
    let dir = CString::new("/nonexistent/goe").unwrap();
    let mut handle = ptr::null_mut();
    let status = unsafe { goe_dataset_load(dir.as_ptr(), &mut handle) };
    assert_eq!(status, GoeStatus::Io);
    assert!(handle.is_null());
    assert!(last_error().contains("/nonexistent/goe"));
}

#[test]
fn null_pointers_are_rejected() {
    let mut n = 0usize;
    unsafe {
        assert_eq!(goe_dataset_load(ptr::null(), &mut ptr::null_mut()), GoeStatus::NullPointer);
        assert_eq!(goe_dataset_node_count(ptr::null(), &mut n), GoeStatus::NullPointer);
        assert_eq!(goe_auroc(ptr::null(), 2, [1.0].as_ptr(), 1, &mut 0.0), GoeStatus::NullPointer);
    }
    assert!(last_error().contains("id_scores"));
}

#[test]
fn energy_matches_logsumexp() {
    let logits = [0.0, 0.0, 0.0, 1.0, 2.0, 3.0];
    let mut out = [0.0; 2];
    let status = unsafe { goe_energy(logits.as_ptr(), 2, 3, out.as_mut_ptr()) };
    assert_eq!(status, GoeStatus::Ok);
    assert!((out[0] + 3f64.ln()).abs() < 1e-12);
    let lse = (1f64.exp() + 2f64.exp() + 3f64.exp()).ln();
    assert!((out[1] + lse).abs() < 1e-12);

    assert_eq!(unsafe { goe_energy(logits.as_ptr(), 2, 0, out.as_mut_ptr()) }, GoeStatus::InvalidArgument);
}

#[test]
fn metrics_through_c_abi() {
    let id = [0.1, 0.2, 0.3];
    let ood = [0.4, 0.5];
    let (mut roc, mut pr, mut fpr) = (0.0, 0.0, 1.0);
    unsafe {
        assert_eq!(goe_auroc(id.as_ptr(), 3, ood.as_ptr(), 2, &mut roc), GoeStatus::Ok);
        assert_eq!(goe_aupr(id.as_ptr(), 3, ood.as_ptr(), 2, &mut pr), GoeStatus::Ok);
        assert_eq!(goe_fpr95(id.as_ptr(), 3, ood.as_ptr(), 2, &mut fpr), GoeStatus::Ok);
    }
    assert_eq!((roc, pr, fpr), (1.0, 1.0, 0.0));

    let status = unsafe { goe_auroc(id.as_ptr(), 3, ood.as_ptr(), 0, &mut roc) };
    assert_eq!(status, GoeStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn run_experiment_returns_report_json() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/planted");
    let config = serde_json::json!({
        "dataset": dataset,
        "method": "energy",
        "seeds": [0],
        "split": {"train_per_class": 20, "val_per_class": 10, "test_id": 150, "test_ood": 150},
        "train": {"max_epochs": 40},
        "output_dir": tmp.path(),
    });
    let config = CString::new(config.to_string()).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { goe_run_experiment(config.as_ptr(), &mut out) };
    assert_eq!(status, GoeStatus::Ok, "{:?}", goe_last_error().is_null().then(String::new).unwrap_or_else(last_error));
    let report: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    unsafe { goe_string_free(out) };
    assert_eq!(report["method"], "energy");
    assert_eq!(report["seeds"].as_array().unwrap().len(), 1);
    assert!(report["mean"]["auroc"].as_f64().unwrap() > 0.5);
    assert!(tmp.path().join("report.json").exists());
}

#[test]
fn bad_config_is_a_parse_error() {
    let config = CString::new("{\"method\": \"nope\"}").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { goe_run_experiment(config.as_ptr(), &mut out) }, GoeStatus::Parse);
    assert!(out.is_null());
    assert!(last_error().starts_with("config:"));
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/goe.h")).unwrap();
    for name in ["goe_dataset_load", "goe_energy", "goe_run_experiment", "goe_string_free", "GOE_STATUS_OK"] {
        assert!(header.contains(name), "{name} missing from goe.h");
    }
}

// The header must compile as plain C; skipped where no C compiler exists.
#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"goe.h\"\nint main(void) { GoeDataset *d = 0; return goe_dataset_load(\"x\", &d) == GOE_STATUS_OK; }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = match std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
    {
        Ok(out) => out,
        Err(_) => return,
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
