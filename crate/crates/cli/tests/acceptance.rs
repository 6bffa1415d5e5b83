//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so the verdict lines are always printed.
//! Criteria 1 to 5 and 7 to 8 gate the exit status; criterion 6 is a
//! best-effort reproduction and reports a miss with its investigation data.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dla_cli::run::{
    run_experiment1, run_experiment2, Algorithm, Experiment1, Experiment2, ResultRow,
};
use dla_cli::{resolve, DatasetSource, DEFAULT_DATA_DIR};
use dla_core::badc::{aggregated_deviant, numeric_prediction, DeviantSequence};
use dla_core::htm::{mc_spatial_pool, ColumnPool};
use dla_core::inference::{extract_memory, row_overlap, MemoryStore};
use dla_core::mismatch::{first_order_mismatch, BinaryMatchMatrix};
use dla_core::overlap::{select_winners, OverlapStore, StandardsList};
use dla_core::{
    fit_predict, htm_fit_predict, load_csv, mapca, quantize, sweep_learning_extent, Benchmark,
    DlaConfig, HtmParams, QuantizedDataset, WinnerThreshold, DEFAULT_EXTENTS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:?}, limit {limit:?}")
    })
}

fn data_dir() -> PathBuf {
    PathBuf::from(DEFAULT_DATA_DIR)
}

fn benchmark(b: Benchmark) -> QuantizedDataset {
    let raw = load_csv(&data_dir().join(b.file_name()), &b.schema()).expect("vendored dataset");
    quantize(
        &raw,
        &b.quant_spec(DlaConfig::default().learning_extent as u32),
    )
    .expect("quantize")
}

fn mapca_metric() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tolerances = [0.0, 0.5, 1.0, 2.0, 3.5];
    for case in 0..20 {
        let n = rng.random_range(1..=30);
        let y: Vec<i64> = (0..n).map(|_| rng.random_range(-20..=20)).collect();
        let yhat: Vec<i64> = y.iter().map(|&v| v + rng.random_range(-4..=4)).collect();
        let tol = tolerances[case % tolerances.len()];
        let hits = y
            .iter()
            .zip(&yhat)
            .filter(|(a, b)| 2 * (*a - *b).abs() < (2.0 * tol) as i64)
            .count();
        let expected = 100.0 * hits as f64 / n as f64;
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let hf: Vec<f64> = yhat.iter().map(|&v| v as f64).collect();
        let got = mapca(&yf, &hf, tol).map_err(|e| e.to_string())?;
        ensure((got - expected).abs() <= 1e-9, || {
            format!("case {case}: mapca {got} vs oracle {expected}")
        })?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "20 vectors match the counting oracle in {:?}",
        start.elapsed()
    ))
}

fn kernel_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let rho1 = [0u32, 1, 2, 5][case % 4];
        let n_std = rng.random_range(1..=50);
        let standards = if case % 2 == 0 {
            StandardsList::new(n_std).unwrap()
        } else {
            StandardsList::from_values((0..n_std).map(|_| rng.random_range(0..80)).collect())
        };
        let exemplars: Vec<Vec<u32>> = (0..rng.random_range(1..=3))
            .map(|_| {
                (0..rng.random_range(1..=8))
                    .map(|_| rng.random_range(0..70))
                    .collect()
            })
            .collect();

        let mut store = OverlapStore::new(n_std);
        let mut oracle_counts = vec![0u64; n_std];
        for x in &exemplars {
            let m =
                first_order_mismatch(x, &standards, f64::from(rho1)).map_err(|e| e.to_string())?;
            for (i, &xi) in x.iter().enumerate() {
                for (j, &s) in standards.values().iter().enumerate() {
                    let hit = xi.abs_diff(s) <= rho1;
                    ensure(m.get(i, j) == hit, || {
                        format!("case {case}: first-order cell ({i}, {j})")
                    })?;
                    oracle_counts[j] += u64::from(hit);
                }
            }
            store = dla_core::overlap::accumulate_overlap(store, &m).map_err(|e| e.to_string())?;
        }
        ensure(store.counts() == oracle_counts.as_slice(), || {
            format!("case {case}: overlap store")
        })?;

        let floor = rng.random_range(0..4u64);
        for threshold in [WinnerThreshold::AtLeast(floor), WinnerThreshold::Auto] {
            let cut = match threshold {
                WinnerThreshold::AtLeast(n) => n.max(1),
                WinnerThreshold::Auto => oracle_counts.iter().copied().max().unwrap_or(0).max(1),
            };
            let expected: Vec<u32> = (0..n_std)
                .filter(|&j| oracle_counts[j] >= cut)
                .map(|j| standards.values()[j])
                .collect();
            let got = select_winners(&store, &standards, threshold);
            ensure(got.integers() == expected.as_slice(), || {
                format!("case {case}: winners under {threshold}")
            })?;
        }

        let width = rng.random_range(1..=8);
        let bits: Vec<Vec<bool>> = (0..rng.random_range(1..=6))
            .map(|_| (0..width).map(|_| rng.random_bool(0.5)).collect())
            .collect();
        let counts = row_overlap(&bits).map_err(|e| e.to_string())?;
        let oracle: Vec<usize> = bits
            .iter()
            .map(|r| r.iter().fold(0, |n, &b| if b { n + 1 } else { n }))
            .collect();
        ensure(counts == oracle, || format!("case {case}: row overlap"))?;
        BinaryMatchMatrix::from_rows(&bits).map_err(|e| e.to_string())?;

        let mut memory = MemoryStore::new(width);
        let rows: Vec<Vec<u32>> = (0..rng.random_range(0..=6))
            .map(|_| (0..width).map(|_| rng.random_range(0..4)).collect())
            .collect();
        for r in &rows {
            memory.memorize(r.clone()).map_err(|e| e.to_string())?;
        }
        let cur: Vec<u32> = (0..width).map(|_| rng.random_range(0..4)).collect();
        let rho2 = [0.0, 0.5, 1.0][case % 3];
        let got = extract_memory(&memory, &cur, rho2, 1.0).map_err(|e| e.to_string())?;
        let mut expected = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let matches = cur
                .iter()
                .zip(r)
                .filter(|(a, b)| {
                    let d = a.abs_diff(**b);
                    d == 0 || (d == 1 && rho2 == 1.0)
                })
                .count();
            if matches >= width / 2 {
                expected.push(i);
            }
        }
        ensure(got.matched_rows == expected, || {
            format!("case {case}: extracted rows")
        })?;
        let vectors: Vec<Vec<u32>> = expected.iter().map(|&i| rows[i].clone()).collect();
        ensure(got.matched_vectors == vectors, || {
            format!("case {case}: extracted vectors")
        })?;
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "1000 cases match brute force in {:?}",
        start.elapsed()
    ))
}

fn badc_algebra() -> Check {
    let predict = |chunks: &[f64]| {
        let seq = DeviantSequence::new(chunks.to_vec()).unwrap();
        numeric_prediction(aggregated_deviant(&seq), seq.latest())
    };
    let kp = predict(&[2.0, 4.0, 6.0]);
    let direct = ((6.0f64 - 2.0).abs() + (6.0f64 - 4.0).abs()) / 3.0 + 6.0;
    ensure(
        (kp - 8.0).abs() <= 1e-12 && (direct - 8.0).abs() <= 1e-12,
        || format!("[2, 4, 6] gave {kp}, direct evaluation {direct}"),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let chunks: Vec<f64> = (0..rng.random_range(1..=12))
            .map(|_| rng.random_range(-100.0..100.0))
            .collect();
        let c = rng.random_range(-100.0..100.0);
        let shifted: Vec<f64> = chunks.iter().map(|k| k + c).collect();
        let (a, b) = (predict(&chunks), predict(&shifted));
        ensure((b - (a + c)).abs() <= 1e-9, || {
            format!("case {case}: translation {a} + {c} vs {b}")
        })?;

        let k = chunks[0];
        let constant = vec![k; chunks.len()];
        let seq = DeviantSequence::new(constant.clone()).unwrap();
        ensure(
            aggregated_deviant(&seq) == 0.0 && predict(&constant) == k,
            || format!("case {case}: constant sequence {k}"),
        )?;
    }
    Ok("[2, 4, 6] -> 8.0, translation equivariance and zero-aggregate identity hold".to_owned())
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).expect("output file"),
            )
        })
        .collect()
}

fn experiment1(out: &Path) -> Result<Vec<ResultRow>, String> {
    let exp = Experiment1 {
        sources: Benchmark::ALL
            .iter()
            .map(|&b| DatasetSource::Benchmark(b))
            .collect(),
        algorithms: vec![Algorithm::Dla, Algorithm::Htm],
        config_text: None,
        seed: Some(0),
        data_dir: data_dir(),
        out: out.to_path_buf(),
    };
    run_experiment1(&exp)
        .map(|(rows, _)| rows)
        .map_err(|e| e.to_string())
}

fn experiment2(out: &Path, extents: &[usize]) -> Result<(), String> {
    let exp = Experiment2 {
        source: DatasetSource::Benchmark(Benchmark::Iris),
        extents: extents.to_vec(),
        config_text: None,
        seed: Some(0),
        data_dir: data_dir(),
        out: out.to_path_buf(),
    };
    run_experiment2(&exp).map(|_| ()).map_err(|e| e.to_string())
}

fn determinism(rows: &mut Vec<ResultRow>) -> Check {
    let dirs: Vec<tempfile::TempDir> = (0..4).map(|_| tempfile::tempdir().unwrap()).collect();
    let first = experiment1(dirs[0].path())?;
    let second = experiment1(dirs[1].path())?;
    ensure(first == second, || "experiment 1 rows differ".to_owned())?;
    experiment2(dirs[2].path(), &DEFAULT_EXTENTS)?;
    experiment2(dirs[3].path(), &DEFAULT_EXTENTS)?;
    let mut files = 0;
    for (a, b) in [(0, 1), (2, 3)] {
        let (x, y) = (
            read_dir_bytes(dirs[a].path()),
            read_dir_bytes(dirs[b].path()),
        );
        ensure(x == y, || "output files differ between runs".to_owned())?;
        files += x.len();
    }
    *rows = first;
    Ok(format!(
        "{files} output files byte-identical across two runs"
    ))
}

fn remember_and_forget() -> Check {
    let start = Instant::now();
    let ds = benchmark(Benchmark::Iris);
    ensure(ds.max_value() == 79, || {
        format!("max quantized value {}", ds.max_value())
    })?;
    let features = [0, 1, 2, 3];
    let extents = [50, 80, 100, 150, 200, 250];
    let runs =
        sweep_learning_extent(&ds, &DlaConfig::default(), &extents).map_err(|e| e.to_string())?;
    let stats: Vec<(usize, usize, f64)> = runs
        .iter()
        .map(|r| {
            (
                r.extent,
                r.outcome.state.winners().len(),
                r.outcome.coverage(&ds, &features),
            )
        })
        .collect();
    let (w50, c50) = (stats[0].1, stats[0].2);
    let (w250, c250) = (stats[5].1, stats[5].2);
    ensure(w50 < w250, || {
        format!("winners {w50} at 50 vs {w250} at 250")
    })?;
    ensure(c50 < c250, || {
        format!("coverage {c50} at 50 vs {c250} at 250")
    })?;
    for &(extent, _, c) in &stats[1..] {
        ensure(c == 1.0, || format!("coverage {c} at extent {extent}"))?;
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "winners {w50} -> {w250}, coverage {c50:.3} -> {c250:.3}, full coverage from extent 80"
    ))
}

const IRIS_BAND: (f64, f64) = (76.0, 96.0);

/// Best-effort; returns (in band, detail).
fn table2_attempt(rows: &[ResultRow]) -> (bool, String) {
    let cfg = resolve(Some(Benchmark::Iris), None, |_| None, Some(0)).unwrap();
    let ds = benchmark(Benchmark::Iris);
    let iris = fit_predict(&ds, &cfg.dla)
        .unwrap()
        .mapca(&ds, cfg.dla.tolerance)
        .unwrap();
    let mut detail = format!(
        "IRIS mapca {iris:.2} (band {:.0}..{:.0}), config {}",
        IRIS_BAND.0,
        IRIS_BAND.1,
        cfg.hash()
    );
    detail.push_str("\n      measured DLA table:");
    for r in rows.iter().filter(|r| r.algorithm == Algorithm::Dla) {
        let reported = r
            .benchmark
            .map(|b| Algorithm::Dla.reference(b))
            .unwrap_or(f64::NAN);
        detail.push_str(&format!(
            "\n        {:<8} {:>6.2}  reported {:>6.2}  config {}",
            r.dataset, r.mapca, reported, r.config_hash
        ));
    }
    let in_band = (IRIS_BAND.0..=IRIS_BAND.1).contains(&iris);
    if !in_band {
        detail.push_str(
            "\n      investigation: the interpolated prediction is the midpoint of the closest\
             \n      winner and the incoming element, so a feature scores whenever that element\
             \n      is itself a winner. With a winner floor of 1 the winners cover almost every\
             \n      observed IRIS value and accuracy saturates. Winner-floor scan on IRIS:",
        );
        for t in [
            WinnerThreshold::Auto,
            WinnerThreshold::AtLeast(1),
            WinnerThreshold::AtLeast(100),
            WinnerThreshold::AtLeast(400),
            WinnerThreshold::AtLeast(500),
        ] {
            let c = DlaConfig {
                winner_threshold: t,
                ..cfg.dla.clone()
            };
            let out = fit_predict(&ds, &c).unwrap();
            detail.push_str(&format!(
                "\n        floor {:<5} mapca {:>6.2}  winners {:>3}  scored steps {}",
                t.to_string(),
                out.mapca(&ds, c.tolerance).unwrap(),
                out.state.winners().len(),
                out.records.len()
            ));
        }
    }
    (in_band, detail)
}

fn htm_baseline(rows: &[ResultRow]) -> Check {
    let ds = benchmark(Benchmark::Iris);
    let params = HtmParams {
        mc_runs: 100,
        ..HtmParams::for_benchmark(Benchmark::Iris)
    };
    let a = htm_fit_predict(&ds, &params).map_err(|e| e.to_string())?;
    let b = htm_fit_predict(&ds, &params).map_err(|e| e.to_string())?;
    ensure(a == b, || "same seed gave different runs".to_owned())?;
    for c in 0..a.pool.len() {
        for (_, p) in a.pool.synapses(c) {
            ensure((0.0..=1.0).contains(&p), || {
                format!("permanence {p} on column {c}")
            })?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let encoder = dla_core::htm::ExemplarEncoder::for_dataset(&ds, params.active_bits)
        .map_err(|e| e.to_string())?;
    for hood in [8, 16, 128] {
        let p = HtmParams {
            neighborhood_size: hood,
            mc_runs: 50,
            ..params.clone()
        };
        let pool = ColumnPool::new(encoder.width(), &p, &mut ChaCha8Rng::seed_from_u64(5));
        for row in ds.rows.iter().step_by(10) {
            let input = encoder.encode(row).map_err(|e| e.to_string())?;
            let seed = rng.random::<u64>();
            let mut sizes = Vec::new();
            for minimum in [1, 30, 60, 90, 120, 200] {
                let q = HtmParams {
                    minimum_overlap: minimum,
                    ..p.clone()
                };
                let active =
                    mc_spatial_pool(&input, &pool, &q, &mut ChaCha8Rng::seed_from_u64(seed));
                for start in (0..pool.len()).step_by(hood) {
                    let n = active
                        .iter()
                        .filter(|&&c| c >= start && c < start + hood)
                        .count();
                    ensure(n <= q.desired_local_activity, || {
                        format!("{n} active in neighborhood at {start}")
                    })?;
                }
                sizes.push(active.len());
            }
            ensure(sizes.windows(2).all(|w| w[1] <= w[0]), || {
                format!("active set sizes {sizes:?} not monotone in minimum overlap")
            })?;
        }
    }

    let mut table = String::from("bounds, inhibition cap, monotonicity and determinism hold");
    for r in rows.iter().filter(|r| r.algorithm == Algorithm::Htm) {
        let reported = r
            .benchmark
            .map(|b| Algorithm::Htm.reference(b))
            .unwrap_or(f64::NAN);
        table.push_str(&format!(
            "\n        {:<8} {:>6.2}  reported {:>6.2}  config {}",
            r.dataset, r.mapca, reported, r.config_hash
        ));
    }
    ensure(
        rows.iter()
            .filter(|r| r.algorithm == Algorithm::Htm)
            .count()
            == 3,
        || "missing HTM measurements".to_owned(),
    )?;
    Ok(table)
}

fn sweep_artifact() -> Check {
    let dir = tempfile::tempdir().unwrap();
    experiment2(dir.path(), &DEFAULT_EXTENTS)?;
    let ds = benchmark(Benchmark::Iris);
    let mut grids: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("extent_") && n.ends_with(".csv"))
        .collect();
    grids.sort();
    let expected: Vec<String> = {
        let mut v: Vec<String> = [50, 100, 150, 200, 250]
            .iter()
            .map(|e| format!("extent_{e}.csv"))
            .collect();
        v.sort();
        v
    };
    ensure(grids == expected, || format!("matrix files {grids:?}"))?;
    let index = fs::read_to_string(dir.path().join("index.csv")).map_err(|e| e.to_string())?;
    let listed: Vec<&str> = index.lines().skip(1).collect();
    ensure(listed.len() == 5, || {
        format!("index has {} entries", listed.len())
    })?;
    let mut shape = (0, 0);
    for line in listed {
        let (_, file) = line.split_once(',').ok_or("bad index line")?;
        let text = fs::read_to_string(dir.path().join(file)).map_err(|e| e.to_string())?;
        let cells: Vec<Vec<f64>> = text
            .lines()
            .map(|l| {
                l.split(',')
                    .map(|c| c.parse::<f64>().map_err(|e| e.to_string()))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        shape = (cells.len(), cells.first().map_or(0, Vec::len));
        ensure(shape == (ds.len() - 1, ds.width()), || {
            format!("{file} is {shape:?}")
        })?;
        ensure(cells.iter().all(|r| r.len() == ds.width()), || {
            format!("{file} is ragged")
        })?;
    }
    Ok(format!(
        "5 rectangular {}x{} matrices for extents 50..250",
        shape.0, shape.1
    ))
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| (*s).to_owned()))
            .unwrap_or_else(|| "panic".to_owned());
        Err(format!("panicked: {msg}"))
    })
}

fn report(n: u32, name: &str, result: &Check) -> bool {
    match result {
        Ok(detail) => println!("PASS  criterion {n} ({name}): {detail}"),
        Err(detail) => println!("FAIL  criterion {n} ({name}): {detail}"),
    }
    result.is_ok()
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= report(1, "metric exactness", &guarded(mapca_metric));
    ok &= report(2, "kernel oracle equivalence", &guarded(kernel_oracles));
    ok &= report(3, "BADC algebra", &guarded(badc_algebra));
    let mut rows = Vec::new();
    ok &= report(4, "determinism", &guarded(|| determinism(&mut rows)));
    ok &= report(5, "remember and forget", &guarded(remember_and_forget));

    match panic::catch_unwind(AssertUnwindSafe(|| table2_attempt(&rows))) {
        Ok((true, detail)) => {
            println!("PASS  criterion 6 (DLA accuracy band, best-effort): {detail}")
        }
        Ok((false, detail)) => {
            println!("MISS  criterion 6 (DLA accuracy band, best-effort, not gating): {detail}")
        }
        Err(_) => {
            println!("FAIL  criterion 6 (DLA accuracy band, best-effort): measurement panicked");
            ok = false;
        }
    }

    ok &= report(
        7,
        "HTM baseline properties",
        &guarded(|| htm_baseline(&rows)),
    );
    ok &= report(
        8,
        "learning-extent sweep artifact",
        &guarded(sweep_artifact),
    );

    if ok {
        println!("acceptance: all gating criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: gating criteria failed");
        ExitCode::FAILURE
    }
}
