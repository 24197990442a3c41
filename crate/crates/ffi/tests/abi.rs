use eva_ffi::*;
use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let p = eva_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn distribution_calls() {
    let mut out = f64::NAN;
    unsafe {
        assert_eq!(eva_gev_cdf(0.0, 1.0, 0.0, 0.0, &mut out), EvaStatus::Ok);
        assert!((out - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(eva_return_level(0.0, 1.0, 0.0, 1.0, &mut out), EvaStatus::InvalidArgument);
        assert!(last_error().contains("return period"));
        assert_eq!(eva_gev_cdf(0.0, 1.0, 0.0, 0.0, ptr::null_mut()), EvaStatus::NullPointer);
    }
    // a successful call clears the message
    unsafe { eva_gev_cdf(0.0, 1.0, 0.0, 0.0, &mut out) };
    assert!(eva_last_error_message().is_null());
}

#[test]
fn pot_handle_lifecycle() {
    // deterministic exponential-tailed record: 100 years × 365 days
    let n = 36_500;
    let daily: Vec<f64> = (0..n).map(|i| -((i as f64 + 0.5) / n as f64).ln() * 3.0).collect();
    let mut fit: *mut EvaFit = ptr::null_mut();
    unsafe {
        assert_eq!(eva_fit_pot(daily.as_ptr(), n, 12.0, 100.0, &mut fit), EvaStatus::Ok);
        let (mut n_used, mut conv) = (0usize, 0i32);
        assert_eq!(eva_fit_info(fit, &mut n_used, &mut conv), EvaStatus::Ok);
        assert_eq!(n_used, daily.iter().filter(|v| **v > 12.0).count());
        assert_eq!(conv, 1);
        let mut v = 0.0;
        assert_eq!(eva_fit_aep(fit, 100.0, &mut v, ptr::null_mut()), EvaStatus::Ok);
        // exponential(3) daily tail: 1-in-100 annual value ≈ 3·ln(365·100)
        assert!((v - 3.0 * (36_500f64).ln()).abs() < 1.0, "{v}");
        eva_fit_free(fit);
        eva_fit_free(ptr::null_mut());
    }
}

#[test]
fn c_program_links_against_header_and_static_lib() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libeva_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let Ok(cc) = which_cc() else {
        eprintln!("skipping: no C compiler");
        return;
    };
    let out_dir = tempfile_dir();
    let exe = out_dir.join("smoke");
    let status = Command::new(&cc)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "clang", "gcc"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("eva-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
