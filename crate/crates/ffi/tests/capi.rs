use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use pertvqe_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        pv_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn tfim_energy_and_ground_state() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(pv_model_tfim(3, 1.0, 0.0, &mut m), PvStatus::Ok);
        assert_eq!(pv_model_n_qubits(m), 3);
        let mut e0 = 0.0;
        assert_eq!(pv_model_ground_energy(m, &mut e0), PvStatus::Ok);
        assert!((e0 + 3.0).abs() < 1e-12);

        let mut a = ptr::null_mut();
        assert_eq!(pv_ansatz_qca(3, &mut a), PvStatus::Ok);
        assert_eq!(pv_ansatz_num_params(a), 14);
        let theta = [0.0; 14];
        let mut e = 0.0;
        assert_eq!(pv_energy(a, m, theta.as_ptr(), theta.len(), &mut e), PvStatus::Ok);
        assert!((e + 3.0).abs() < 1e-12);
        pv_ansatz_free(a);
        pv_model_free(m);
    }
}

#[test]
fn series_coefficient_matches_closed_form() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(pv_model_tfim(4, 1.0, 0.15, &mut m), PvStatus::Ok);
        let k = [1u32, 1, 0];
        let mut c = 0.0;
        assert_eq!(pv_series_coefficient(m, k.as_ptr(), 3, &mut c), PvStatus::Ok);
        assert!((c - 0.125).abs() < 1e-12);
        assert_eq!(pv_series_coefficient(m, k.as_ptr(), 2, &mut c), PvStatus::DimensionMismatch);
        assert!(!last_error().is_empty());
        pv_model_free(m);
    }
}

#[test]
fn custom_model_and_parse_errors() {
    unsafe {
        let h = [1.0, 1.0];
        let j = [0.2];
        let ok = CString::new("XX").unwrap();
        let bad = CString::new("XQ").unwrap();
        let mut m = ptr::null_mut();
        let labels = [ok.as_ptr()];
        assert_eq!(pv_model_new(2, h.as_ptr(), 1, j.as_ptr(), labels.as_ptr(), &mut m), PvStatus::Ok);
        pv_model_free(m);
        let labels = [bad.as_ptr()];
        let mut m2 = ptr::null_mut();
        assert_eq!(
            pv_model_new(2, h.as_ptr(), 1, j.as_ptr(), labels.as_ptr(), &mut m2),
            PvStatus::Parse
        );
        assert!(m2.is_null());
        assert_eq!(pv_model_tfim(2, 1.0, 0.1, ptr::null_mut()), PvStatus::NullPointer);
        assert!(last_error().contains("null"));
    }
}

#[test]
fn hierarchy_round_trip() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(pv_model_tfim(4, 1.0, 0.15, &mut m), PvStatus::Ok);
        let variant = CString::new("pert").unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(pv_hierarchy_build(m, 4, variant.as_ptr(), -1, &mut h), PvStatus::Ok);
        assert_eq!(pv_hierarchy_len(h), 7);

        let mut theta = 0.0;
        let mut label = vec![0 as c_char; 32];
        assert_eq!(pv_hierarchy_entry(h, 0, &mut theta, label.as_mut_ptr(), label.len()), PvStatus::Ok);
        assert!((theta + 0.15 / 4.0).abs() < 1e-14);
        assert_eq!(CStr::from_ptr(label.as_ptr()).to_str().unwrap(), "i^2*XYII");
        assert_eq!(pv_hierarchy_entry(h, 7, &mut theta, label.as_mut_ptr(), label.len()), PvStatus::InvalidArgument);

        let mut needed = 0;
        assert_eq!(pv_hierarchy_to_json(h, ptr::null_mut(), 0, &mut needed), PvStatus::Ok);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(pv_hierarchy_to_json(h, buf.as_mut_ptr(), needed, ptr::null_mut()), PvStatus::Ok);
        let json = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert!(json.contains("theta_tilde"));

        let mut a = ptr::null_mut();
        assert_eq!(pv_hierarchy_ansatz(h, 8, &mut a), PvStatus::Exhausted);
        assert_eq!(pv_hierarchy_ansatz(h, 7, &mut a), PvStatus::Ok);
        let mut th = vec![0.0; pv_ansatz_num_params(a)];
        let mut e = 0.0;
        assert_eq!(pv_optimize(a, m, th.as_mut_ptr(), th.len(), 0.0, 0, &mut e), PvStatus::Ok);
        let mut e0 = 0.0;
        pv_model_ground_energy(m, &mut e0);
        assert!(e >= e0 - 1e-12 && (e - e0) / e0.abs() < 1e-8);

        let mut g = vec![1.0; th.len()];
        assert_eq!(pv_gradient(a, m, th.as_ptr(), th.len(), g.as_mut_ptr()), PvStatus::Ok);
        assert!(g.iter().all(|v| v.abs() < 1e-8));

        let bad = CString::new("sideways").unwrap();
        let mut h2 = ptr::null_mut();
        assert_eq!(pv_hierarchy_build(m, 4, bad.as_ptr(), -1, &mut h2), PvStatus::InvalidArgument);
        pv_ansatz_free(a);
        pv_hierarchy_free(h);
        pv_model_free(m);
    }
}

#[test]
fn ansatz_json_round_trip() {
    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(pv_ansatz_qca(2, &mut a), PvStatus::Ok);
        let mut needed = 0;
        pv_ansatz_to_json(a, ptr::null_mut(), 0, &mut needed);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(pv_ansatz_to_json(a, buf.as_mut_ptr(), needed, ptr::null_mut()), PvStatus::Ok);
        let mut b = ptr::null_mut();
        assert_eq!(pv_ansatz_from_json(buf.as_ptr(), &mut b), PvStatus::Ok);
        assert_eq!(pv_ansatz_num_units(b), pv_ansatz_num_units(a));
        pv_ansatz_free(a);
        pv_ansatz_free(b);
    }
}

#[test]
fn degenerate_model_is_reported() {
    unsafe {
        let h = [1.0, 0.0];
        let j = [0.1];
        let x = CString::new("IX").unwrap();
        let labels = [x.as_ptr()];
        let mut m = ptr::null_mut();
        assert_eq!(pv_model_new(2, h.as_ptr(), 1, j.as_ptr(), labels.as_ptr(), &mut m), PvStatus::Ok);
        let k = [1u32];
        let mut c = 0.0;
        assert_eq!(pv_series_coefficient(m, k.as_ptr(), 1, &mut c), PvStatus::Degenerate);
        pv_model_free(m);
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = format!("{dir}/include/pertvqe.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for f in ["pv_model_tfim", "pv_hierarchy_build", "pv_optimize", "PV_STATUS_DEGENERATE"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let src = std::env::temp_dir().join(format!("pertvqe_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"pertvqe.h\"\nint f(void) { PvModel *m = 0; PvStatus s = pv_model_tfim(2, 1.0, 0.1, &m); pv_model_free(m); return (int)s; }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = match Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler ({cc}); header syntax not checked");
            return;
        }
    };
    let _ = std::fs::remove_file(&src);
    assert!(status.success());
}
