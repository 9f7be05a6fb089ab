use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use tjpf_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tjpf_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn preset_run_and_series() {
    let name = CString::new("lorenz-standard").unwrap();
    let mut exp = ptr::null_mut();
    unsafe {
        assert_eq!(tjpf_experiment_from_preset(name.as_ptr(), &mut exp), TjpfStatus::Ok);
        assert_eq!(tjpf_experiment_set_steps(exp, 100), TjpfStatus::Ok);
        assert_eq!(tjpf_experiment_set_seed(exp, 5), TjpfStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(tjpf_experiment_run(exp, ptr::null(), &mut run), TjpfStatus::Ok);
        assert_eq!(tjpf_run_len(run), 100);
        assert_eq!(tjpf_run_n_analyses(run), 5);
        let mut rmse = vec![0.0; 100];
        let mut es = vec![0.0; 100];
        assert_eq!(tjpf_run_rmse(run, rmse.as_mut_ptr(), 100), TjpfStatus::Ok);
        assert_eq!(tjpf_run_es(run, es.as_mut_ptr(), 100), TjpfStatus::Ok);
        assert!(rmse.iter().chain(&es).all(|v| v.is_finite() && *v >= 0.0));
        assert_eq!(tjpf_run_rmse(run, rmse.as_mut_ptr(), 10), TjpfStatus::InvalidArgument);

        let dir = tempfile::tempdir().unwrap();
        let d = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(tjpf_run_write(run, d.as_ptr()), TjpfStatus::Ok);
        assert!(dir.path().join("metrics.csv").exists());
        tjpf_run_free(run);
        tjpf_experiment_free(exp);
    }
}

#[test]
fn errors_map_to_codes() {
    let mut exp = ptr::null_mut();
    unsafe {
        let bad = CString::new("no-such-preset").unwrap();
        assert_eq!(tjpf_experiment_from_preset(bad.as_ptr(), &mut exp), TjpfStatus::Config);
        assert!(last_error().contains("no-such-preset"));
        assert!(exp.is_null());
        let junk = CString::new("{\"name\": 1}").unwrap();
        assert_eq!(tjpf_experiment_from_json(junk.as_ptr(), &mut exp), TjpfStatus::Config);
        assert_eq!(tjpf_experiment_from_json(ptr::null(), &mut exp), TjpfStatus::NullPointer);
        assert_eq!(tjpf_experiment_set_seed(ptr::null_mut(), 1), TjpfStatus::NullPointer);

        let name = CString::new("lorenz-standard").unwrap();
        assert_eq!(tjpf_experiment_from_preset(name.as_ptr(), &mut exp), TjpfStatus::Ok);
        assert!(last_error().is_empty());
        assert_eq!(tjpf_experiment_set_steps(exp, 3), TjpfStatus::Config);
        tjpf_experiment_free(exp);
        tjpf_experiment_free(ptr::null_mut());
    }
}

#[test]
fn json_round_trip_through_buffer() {
    let name = CString::new("srsw-dense").unwrap();
    let mut exp = ptr::null_mut();
    unsafe {
        assert_eq!(tjpf_experiment_from_preset(name.as_ptr(), &mut exp), TjpfStatus::Ok);
        let mut need = 0usize;
        assert_eq!(tjpf_experiment_to_json(exp, ptr::null_mut(), 0, &mut need), TjpfStatus::Ok);
        let mut buf = vec![0u8; need + 1];
        assert_eq!(
            tjpf_experiment_to_json(exp, buf.as_mut_ptr().cast(), buf.len(), &mut need),
            TjpfStatus::Ok
        );
        let mut again = ptr::null_mut();
        assert_eq!(tjpf_experiment_from_json(buf.as_ptr().cast(), &mut again), TjpfStatus::Ok);
        tjpf_experiment_free(again);
        tjpf_experiment_free(exp);
    }
}

#[test]
fn lorenz_step_matches_core() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(tjpf_lorenz63_new(10.0, 28.0, 8.0 / 3.0, 0.01, 0.1, &mut m), TjpfStatus::Ok);
        let x = [1.508870, -1.531271, 25.46091];
        let mut y = [0.0; 3];
        assert_eq!(tjpf_lorenz63_step(m, x.as_ptr(), ptr::null(), y.as_mut_ptr()), TjpfStatus::Ok);
        let p = tjpf::lorenz63::Lorenz63Params::default();
        assert_eq!(y, tjpf::lorenz63::rk4_step_with(&p, x, p.dt));
        let w = [1.0, -1.0, 0.5];
        let mut z = [0.0; 3];
        assert_eq!(tjpf_lorenz63_step(m, x.as_ptr(), w.as_ptr(), z.as_mut_ptr()), TjpfStatus::Ok);
        let s = 0.1 * 0.01f64.sqrt();
        for k in 0..3 {
            assert!((z[k] - (y[k] + s * w[k])).abs() < 1e-14);
        }
        tjpf_lorenz63_free(m);
        assert_eq!(tjpf_lorenz63_new(10.0, 28.0, 8.0 / 3.0, -1.0, 0.1, &mut m), TjpfStatus::Config);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"tjpf.h\"\n\
         int main(void) {\n\
           TjpfExperiment *e = NULL;\n\
           enum TjpfStatus s = tjpf_experiment_from_preset(\"lorenz-standard\", &e);\n\
           tjpf_experiment_free(e);\n\
           return s == TJPF_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&header)
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "C compiler rejected the header"),
        Err(e) => eprintln!("skipping header check, no C compiler: {e}"),
    }
}
