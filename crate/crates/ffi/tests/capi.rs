use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use spinrelax_ffi::*;

fn model(params: SrModelParams) -> *mut SrModel {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { sr_model_new(&params, &mut h) }, SrStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let n = unsafe { sr_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as std::ffi::c_char; n];
    unsafe { sr_last_error_message(buf.as_mut_ptr(), n) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(sr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn perturbation_values_through_the_abi() {
    let h = model(SrModelParams {
        modes: 50,
        ..sr_model_params_default()
    });
    let mut eps = 0.0;
    assert_eq!(unsafe { sr_perturbation_parameter(h, 1000.0, &mut eps) }, SrStatus::Ok);
    let want = 16.0 * 1000.0 * 0.008 / (27.0 * std::f64::consts::PI.powi(4) * 0.2);
    assert!((eps - want).abs() < 1e-15);

    for m in 1..=3 {
        let (mut summed, mut closed) = (0.0, 0.0);
        assert_eq!(
            unsafe { sr_second_order_rate(h, 1000.0, m, 1, 1, &mut summed) },
            SrStatus::Ok
        );
        assert_eq!(
            unsafe { sr_second_order_closed_form(h, 1000.0, m, &mut closed) },
            SrStatus::Ok
        );
        assert!(((summed - closed) / closed).abs() < 1e-6);
    }
    let mut untouched = -1.0;
    assert_eq!(
        unsafe { sr_second_order_closed_form(h, 1000.0, 4, &mut untouched) },
        SrStatus::InvalidParameter
    );
    assert_eq!(untouched, -1.0);
    assert!(last_error().contains("m = 4"));
    assert_eq!(
        unsafe { sr_second_order_rate(h, 1000.0, 51, 1, 1, &mut untouched) },
        SrStatus::ModeOutOfRange
    );
    unsafe { sr_model_free(h) };
}

#[test]
fn invalid_parameters_and_null_pointers_are_reported() {
    let mut h = ptr::null_mut();
    let bad = SrModelParams {
        length: -1.0,
        ..sr_model_params_default()
    };
    assert_eq!(unsafe { sr_model_new(&bad, &mut h) }, SrStatus::InvalidParameter);
    assert!(h.is_null());
    assert!(last_error().contains("length"));

    assert_eq!(unsafe { sr_model_new(ptr::null(), &mut h) }, SrStatus::NullPointer);
    let p = sr_model_params_default();
    assert_eq!(unsafe { sr_model_new(&p, ptr::null_mut()) }, SrStatus::NullPointer);
    let mut out = 0.0;
    assert_eq!(
        unsafe { sr_perturbation_parameter(ptr::null(), 1.0, &mut out) },
        SrStatus::NullPointer
    );

    let zero_pump = model(SrModelParams {
        pump_rate: 0.0,
        ..sr_model_params_default()
    });
    let mut serf = ptr::null_mut();
    assert_eq!(
        unsafe { sr_serf_new(zero_pump, 0.0, 0.0, 0.0, SrConvention::LiteralQ, &mut serf) },
        SrStatus::DegenerateParameters
    );
    unsafe {
        sr_model_free(zero_pump);
        sr_model_free(ptr::null_mut());
        sr_serf_free(ptr::null_mut());
    }
}

#[test]
fn truncated_error_messages_stay_terminated() {
    let mut out = 0.0;
    unsafe { sr_perturbation_parameter(ptr::null(), 1.0, &mut out) };
    let mut buf = [1 as std::ffi::c_char; 4];
    let needed = unsafe { sr_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(needed > buf.len());
    assert_eq!(buf[3], 0);
}

#[test]
fn fid_buffers_and_relaxation() {
    let h = model(SrModelParams {
        modes: 9,
        ..sr_model_params_default()
    });
    let n = 200;
    let (mut t, mut re, mut im) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
    let status = unsafe {
        sr_fid_spectral(
            h,
            1000.0,
            false,
            0.01,
            n,
            t.as_mut_ptr(),
            re.as_mut_ptr(),
            im.as_mut_ptr(),
            n + 1,
        )
    };
    assert_eq!(status, SrStatus::Ok);
    assert_eq!(re[0], 1.0);
    assert_eq!(im[0], 0.0);
    assert!((t[n] - 0.01).abs() < 1e-15);
    assert!(re.iter().zip(&im).all(|(a, b)| a.hypot(*b) <= 1.0 + 1e-9));

    let status = unsafe {
        sr_fid_spectral(
            h,
            1000.0,
            false,
            0.01,
            n,
            ptr::null_mut(),
            re.as_mut_ptr(),
            im.as_mut_ptr(),
            n,
        )
    };
    assert_eq!(status, SrStatus::BufferTooSmall);
    let status = unsafe {
        sr_fid_spectral(
            h,
            1000.0,
            false,
            0.01,
            n,
            ptr::null_mut(),
            re.as_mut_ptr(),
            ptr::null_mut(),
            n + 1,
        )
    };
    assert_eq!(status, SrStatus::NullPointer);

    let mut r = SrRelaxation::default();
    assert_eq!(unsafe { sr_delta_gamma2(h, 1000.0, &mut r) }, SrStatus::Ok);
    assert!((r.gamma2 * r.t2 - 1.0).abs() < 1e-12);
    assert!(r.delta_gamma2 > 0.0);
    assert!((r.phase_rate - 100.0).abs() < 0.5);
    unsafe { sr_model_free(h) };
}

#[test]
fn serf_through_the_abi() {
    let h = model(SrModelParams {
        modes: 9,
        gyro: 28.0,
        base_rate: 300.0,
        slow_down: 6.0,
        ..sr_model_params_default()
    });
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { sr_serf_new(h, 800.0, 0.0, 0.0, SrConvention::LiteralQ, &mut s) },
        SrStatus::Ok
    );
    unsafe { sr_model_free(h) };

    let (mut plus, mut minus) = (0.0, 0.0);
    assert_eq!(
        unsafe { sr_serf_mean_sx(s, 40.0, SrSerfSolver::Spectral, &mut plus) },
        SrStatus::Ok
    );
    assert_eq!(
        unsafe { sr_serf_mean_sx(s, -40.0, SrSerfSolver::Spectral, &mut minus) },
        SrStatus::Ok
    );
    assert!((plus + minus).abs() <= 1e-8 * plus.abs());

    let mut residual = 1.0;
    assert_eq!(unsafe { sr_serf_symmetry_xz(s, 40.0, &mut residual) }, SrStatus::Ok);
    assert!(residual <= 1e-8);

    let mut lw = SrLinewidth::default();
    assert_eq!(unsafe { sr_serf_linewidth(s, 41, &mut lw) }, SrStatus::Ok);
    assert!(lw.delta_w > 0.0);
    assert!((lw.w - lw.w0 - lw.delta_w).abs() < 1e-12 * lw.w);
    assert!((lw.w - (lw.b_max - lw.b_min).abs() / 2.0).abs() < 1e-12 * lw.w);
    assert_eq!(unsafe { sr_serf_linewidth(s, 2, &mut lw) }, SrStatus::InvalidParameter);
    unsafe { sr_serf_free(s) };
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/capi-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let lib = target_dir().join("libspinrelax_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "spinrelax.h"

int main(void) {
    SrModelParams p = sr_model_params_default();
    p.modes = 50;
    SrModel *m = NULL;
    if (sr_model_new(&p, &m) != SR_STATUS_OK) return 1;
    double summed = 0, closed = 0;
    if (sr_second_order_rate(m, 1000.0, 1, 1, 1, &summed) != SR_STATUS_OK) return 2;
    if (sr_second_order_closed_form(m, 1000.0, 1, &closed) != SR_STATUS_OK) return 3;
    double bad = 0;
    if (sr_second_order_closed_form(m, 1000.0, 7, &bad) != SR_STATUS_INVALID_PARAMETER) return 4;
    char msg[256];
    sr_last_error_message(msg, sizeof msg);
    sr_model_free(m);
    printf("%s %.12e %.12e %s\n", sr_version(), summed, closed, msg);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("C compiler");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8_lossy(&run.stdout);
    let fields: Vec<&str> = stdout.split_whitespace().collect();
    assert_eq!(fields[0], env!("CARGO_PKG_VERSION"));
    let summed: f64 = fields[1].parse().unwrap();
    let closed: f64 = fields[2].parse().unwrap();
    assert!(((summed - closed) / closed).abs() < 1e-6);
    assert!(stdout.contains("m = 7"));
}
