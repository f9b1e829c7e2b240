//! Command-line contract: prints PASS/FAIL per check and exits non-zero on
//! any failure.

mod support;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rcp::io;
use support::{path, rcp, stderr};
use tempfile::tempdir;

fn round_trips(dir: &Path) -> Result<String, String> {
    let x = path(dir, "x.dten");
    let truth = path(dir, "t.kten");
    let model = path(dir, "m.kten");
    let o = rcp(&[
        "synth", "--shape", "15,14,13", "--rank", "3", "--snr", "10", "--seed", "9", "--out", &x,
        "--truth", &truth,
    ]);
    if !o.status.success() {
        return Err(stderr(&o));
    }
    let o = rcp(&[
        "decompose",
        "--in",
        &x,
        "--rank",
        "3",
        "--seed",
        "1",
        "--out",
        &model,
    ]);
    if o.status.code() == Some(1) {
        return Err(stderr(&o));
    }
    let tensor_bytes = fs::read(&x).unwrap();
    if io::tensor_to_bytes(&io::tensor_from_bytes(&tensor_bytes).map_err(|e| e.to_string())?)
        != tensor_bytes
    {
        return Err("tensor file changed on rewrite".into());
    }
    for file in [&truth, &model] {
        let bytes = fs::read(file).unwrap();
        if io::kruskal_to_bytes(&io::kruskal_from_bytes(&bytes).map_err(|e| e.to_string())?)
            != bytes
        {
            return Err(format!("{file} changed on rewrite"));
        }
    }
    Ok("tensor, truth and fitted model files rewrite byte-identically".into())
}

fn exit_codes(dir: &Path) -> Result<String, String> {
    let x = path(dir, "e.dten");
    let out = path(dir, "e.kten");
    rcp(&[
        "synth", "--shape", "20,20,20", "--rank", "6", "--seed", "3", "--snr", "3", "--out", &x,
    ]);
    let code = |args: &[&str]| rcp(args).status.code();
    let converged = code(&["decompose", "--in", &x, "--rank", "6", "--out", &out]);
    let capped = code(&[
        "decompose",
        "--in",
        &x,
        "--rank",
        "6",
        "--max-iter",
        "2",
        "--tol",
        "1e-15",
        "--out",
        &out,
    ]);
    let conflict = code(&[
        "decompose",
        "--in",
        &x,
        "--rank",
        "6",
        "--deterministic",
        "--power-iters",
        "1",
        "--out",
        &out,
    ]);
    let mut bad = fs::read(&x).unwrap();
    bad[..4].copy_from_slice(b"XTEN");
    let corrupt = path(dir, "bad.dten");
    fs::write(&corrupt, bad).unwrap();
    let o = rcp(&["decompose", "--in", &corrupt, "--rank", "6", "--out", &out]);
    let magic_msg = stderr(&o).contains("magic");
    let bad_rank = code(&["decompose", "--in", &x, "--rank", "0", "--out", &out]);
    let got = [converged, capped, conflict, o.status.code(), bad_rank];
    let want = [Some(0), Some(2), Some(1), Some(1), Some(1)];
    if got == want && magic_msg {
        Ok("converged=0, max-iter=2, flag conflict=1, corrupt magic=1, rank 0=1".into())
    } else {
        Err(format!(
            "exit codes {got:?}, expected {want:?}; magic message present: {magic_msg}"
        ))
    }
}

fn bound_rows(dir: &Path, shape: &str, rank: &str, ks: &str) -> Result<String, String> {
    let out = path(dir, "bound.csv");
    let o = rcp(&[
        "bound",
        "--shape",
        shape,
        "--rank",
        rank,
        "--k",
        ks,
        "--oversample",
        "2",
        "--trials",
        "100",
        "--seed",
        "2024",
        "--out",
        &out,
    ]);
    if !o.status.success() {
        return Err(stderr(&o));
    }
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    if lines.next() != Some(rcp::diagnostics::BOUND_CSV_HEADER) {
        return Err("unexpected bound CSV header".into());
    }
    let rows: Vec<&str> = lines.collect();
    let held = rows.iter().filter(|r| r.ends_with(",true")).count();
    let expected = ks.split(',').count();
    if held == rows.len() && rows.len() == expected {
        Ok(format!("{shape}: {held}/{expected} rows bound >= mean"))
    } else {
        Err(format!(
            "{shape}: {held}/{} rows hold, {expected} expected",
            rows.len()
        ))
    }
}

fn bound_cli(dir: &Path) -> Result<String, String> {
    let a = bound_rows(dir, "50,50,50", "25", "5,10,15,20,25,30,35,40,45")?;
    let b = bound_rows(dir, "20,20,20,20", "10", "2,4,6,8,10,12,14,16")?;
    Ok(format!("{a}; {b}"))
}

type Check = fn(&Path) -> Result<String, String>;

fn main() -> ExitCode {
    let dir = tempdir().unwrap();
    let checks: [(&str, Check); 3] = [
        ("file round-trips", round_trips),
        ("exit codes", exit_codes),
        ("bound CSV", bound_cli),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let (verdict, detail) = match check(dir.path()) {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{verdict} criterion 8 CLI contract, {name}: {detail} [{:.1}s]",
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
