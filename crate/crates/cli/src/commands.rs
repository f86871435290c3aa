use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use covsketch::kernels::{
    self, equispaced_grid, gram_matrix, KernelSpec, StationaryGridRows,
};
use covsketch::lowrank::{
    condition_number, jacobi_eig, projection_error, randomized_lowrank,
    randomized_lowrank_rows, range_finder, NormKind,
};
use covsketch::tsqr::{tsqr_factor, TallMatrix};
use covsketch::{gp::GpModel, rng, Result, SymMatrix, Workers};

use crate::csvout::{fmt_f64, CsvDoc};
use crate::{
    CondArgs, DecayArgs, KernelArg, LoglikArgs, MatrixArg, SketchArg, SketchErrorArgs,
    SpeedupArgs,
};

const SQEXP_SWEEP: [f64; 6] = [0.05, 0.5, 1.0, 1.5, 2.0, 10.0];
const MATERN_SWEEP: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
/// Truncation levels reported by `cond`, clipped to the matrix order.
const COND_RANKS: [usize; 5] = [50, 20, 15, 10, 5];

fn invalid_argument(msg: impl Into<String>) -> covsketch::Error {
    covsketch::Error::InvalidArgument(msg.into())
}

/// Kernel specs of the parameter sweep, with the swept value first.
fn sweep(args_kernel: KernelArg, theta1: f64, theta2: f64) -> Result<Vec<(f64, KernelSpec)>> {
    match args_kernel {
        KernelArg::Sqexp => SQEXP_SWEEP
            .iter()
            .map(|&t2| Ok((t2, KernelSpec::squared_exponential(theta1, t2)?)))
            .collect(),
        KernelArg::Matern => MATERN_SWEEP
            .iter()
            .map(|&nu| Ok((nu, KernelSpec::matern(theta1, theta2, nu)?)))
            .collect(),
    }
}

fn kernel_name(k: KernelArg) -> &'static str {
    match k {
        KernelArg::Sqexp => "sqexp",
        KernelArg::Matern => "matern",
    }
}

fn sketch_name(s: SketchArg) -> &'static str {
    match s {
        SketchArg::Gaussian => "gaussian",
        SketchArg::Wht => "wht",
        SketchArg::Dct => "dct",
        SketchArg::Dht => "dht",
    }
}

/// Paper default: floor(n / 2r) + 1 blocks, clipped to the legal range.
pub fn default_blocks(n: usize, r: usize) -> usize {
    if 2 * r > n {
        1
    } else {
        n / (2 * r) + 1
    }
}

fn fnv1a64(mat: &covsketch::DenseMatrix) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in mat.data() {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

pub fn cmd_decay(args: &DecayArgs) -> Result<CsvDoc> {
    let grid = equispaced_grid(args.n, 0.0, 1.0)?;
    let mut doc = CsvDoc::new("decay", vec!["param", "index", "eigenvalue"]);
    doc.meta("kernel", kernel_name(args.kernel));
    doc.meta("n", args.n);
    doc.meta("theta1", fmt_f64(args.theta1));
    doc.meta("theta2", fmt_f64(args.theta2));
    doc.meta("grid", "equispaced [0,1]");
    for (param, spec) in sweep(args.kernel, args.theta1, args.theta2)? {
        let eig = jacobi_eig(&gram_matrix(&spec, &grid))?;
        for (i, &v) in eig.eigenvalues().iter().enumerate() {
            doc.row(vec![fmt_f64(param), (i + 1).to_string(), fmt_f64(v)]);
        }
    }
    Ok(doc)
}

pub fn cmd_cond(args: &CondArgs) -> Result<CsvDoc> {
    let grid = equispaced_grid(args.n, 0.0, 1.0)?;
    let mut doc = CsvDoc::new(
        "cond",
        vec!["param", "m", "condition", "log10_condition", "infinite"],
    );
    doc.meta("kernel", kernel_name(args.kernel));
    doc.meta("n", args.n);
    doc.meta("theta1", fmt_f64(args.theta1));
    doc.meta("theta2", fmt_f64(args.theta2));
    doc.meta("grid", "equispaced [0,1]");
    doc.meta(
        "note",
        "full-matrix entries saturate at the f64 eigensolver floor (~1e16) or report inf",
    );
    let mut ranks = vec![args.n];
    ranks.extend(COND_RANKS.iter().copied().filter(|&m| m < args.n));
    for (param, spec) in sweep(args.kernel, args.theta1, args.theta2)? {
        let eig = jacobi_eig(&gram_matrix(&spec, &grid))?;
        for &m in &ranks {
            let c = condition_number(eig.eigenvalues(), m)?;
            doc.row(vec![
                fmt_f64(param),
                m.to_string(),
                fmt_f64(c.value),
                fmt_f64(c.value.log10()),
                u8::from(c.infinite).to_string(),
            ]);
        }
    }
    Ok(doc)
}

/// Matrix plus its true tail spectrum for the bound (planted when synthetic,
/// eigensolved otherwise).
fn build_matrix(
    matrix: MatrixArg,
    n: usize,
    lambda1: f64,
    lambda2: f64,
    kernel: KernelArg,
    theta1: f64,
    theta2: f64,
    nu: f64,
    seed: u64,
) -> Result<(SymMatrix, Vec<f64>)> {
    match matrix {
        MatrixArg::Synthetic => kernels::synthetic_psd(n, lambda1, lambda2, seed),
        MatrixArg::Kernel => {
            let spec = match kernel {
                KernelArg::Sqexp => KernelSpec::squared_exponential(theta1, theta2)?,
                KernelArg::Matern => KernelSpec::matern(theta1, theta2, nu)?,
            };
            let k = gram_matrix(&spec, &equispaced_grid(n, 0.0, 1.0)?);
            let eig = jacobi_eig(&k)?;
            Ok((k, eig.eigenvalues().to_vec()))
        }
    }
}

pub fn cmd_sketch_error(args: &SketchErrorArgs) -> Result<CsvDoc> {
    let blocks = args.blocks.unwrap_or_else(|| default_blocks(args.n, args.r));
    let workers = Workers::new(args.workers)?;
    let (k, spectrum) = build_matrix(
        args.matrix,
        args.n,
        args.lambda1,
        args.lambda2,
        args.kernel,
        args.theta1,
        args.theta2,
        args.nu,
        args.seed,
    )?;
    if args.r > args.n {
        return Err(invalid_argument(format!(
            "sketch dimension {} exceeds matrix order {}",
            args.r, args.n
        )));
    }

    // Tail-spectrum bound: (1 + sqrt(7 n / r)) * sum_{j > r} d(j, j).
    let tail: f64 = spectrum[args.r..].iter().sum();
    let bound = (1.0 + (7.0 * args.n as f64 / args.r as f64).sqrt()) * tail;

    let mut kinds: Vec<SketchArg> = match args.sketch {
        Some(kind) => vec![kind],
        None => vec![SketchArg::Gaussian, SketchArg::Wht, SketchArg::Dct, SketchArg::Dht],
    };
    let mut skipped_wht = false;
    if !args.n.is_power_of_two() {
        skipped_wht = kinds.contains(&SketchArg::Wht) && args.sketch.is_none();
        if args.sketch == Some(SketchArg::Wht) {
            return Err(invalid_argument(format!(
                "Walsh-Hadamard sketches require a power-of-2 n, got {}",
                args.n
            )));
        }
        kinds.retain(|&k| k != SketchArg::Wht);
    }

    let mut doc = CsvDoc::new(
        "sketch-error",
        vec![
            "seed",
            "sketch",
            "r",
            "frobenius_error",
            "spectral_error",
            "bound_value",
            "within_bound",
        ],
    );
    doc.meta("matrix", match args.matrix {
        MatrixArg::Synthetic => "synthetic",
        MatrixArg::Kernel => "kernel",
    });
    doc.meta("n", args.n);
    doc.meta("r", args.r);
    doc.meta("lambda1", fmt_f64(args.lambda1));
    doc.meta("lambda2", fmt_f64(args.lambda2));
    doc.meta("kernel", kernel_name(args.kernel));
    doc.meta("theta1", fmt_f64(args.theta1));
    doc.meta("theta2", fmt_f64(args.theta2));
    doc.meta("nu", fmt_f64(args.nu));
    doc.meta("trials", args.trials);
    doc.meta("seed", args.seed);
    doc.meta("blocks", blocks);
    doc.meta("scheme", args.scheme.scheme(1).name());
    doc.meta("workers", args.workers);
    doc.meta("bound", "(1 + sqrt(7n/r)) * tail eigenvalue sum");
    doc.meta("trial_sketch_seed", "seed + 1 + trial");
    if skipped_wht {
        doc.meta("note", "wht skipped: n is not a power of 2");
    }

    if let Some(path) = &args.dump_sketch {
        dump_sketches(path, &kinds, args)?;
    }

    for t in 0..args.trials {
        let sketch_seed = args.seed + 1 + t as u64;
        for &kind in &kinds {
            let rf = range_finder(
                &k,
                args.r,
                kind.kind(),
                sketch_seed,
                blocks,
                args.scheme.scheme(1),
                &workers,
            )?;
            let frob = projection_error(&k, &rf.q, NormKind::Frobenius)?;
            let spec_err = projection_error(&k, &rf.q, NormKind::Spectral)?;
            doc.row(vec![
                sketch_seed.to_string(),
                sketch_name(kind).to_string(),
                args.r.to_string(),
                fmt_f64(frob),
                fmt_f64(spec_err),
                fmt_f64(bound),
                u8::from(frob <= bound).to_string(),
            ]);
        }
    }
    Ok(doc)
}

/// Reproducibility record: the structured draws (signs, selected columns)
/// behind the first trial, one row per (kind, position).
fn dump_sketches(
    path: &std::path::Path,
    kinds: &[SketchArg],
    args: &SketchErrorArgs,
) -> Result<()> {
    let mut doc = CsvDoc::new("sketch-error --dump-sketch", vec!["sketch", "seed", "field", "position", "value"]);
    doc.meta("n", args.n);
    doc.meta("r", args.r);
    let seed = args.seed + 1;
    for &kind in kinds {
        let Some(transform) = kind.kind().transform() else {
            continue; // Gaussian sketches are reproduced from the seed alone.
        };
        let s = covsketch::transforms::build_structured(args.n, args.r, transform, seed)?;
        for (i, &sign) in s.signs().iter().enumerate() {
            doc.row(vec![
                sketch_name(kind).to_string(),
                seed.to_string(),
                "sign".to_string(),
                i.to_string(),
                fmt_f64(sign),
            ]);
        }
        for (j, &col) in s.selected().iter().enumerate() {
            doc.row(vec![
                sketch_name(kind).to_string(),
                seed.to_string(),
                "selected".to_string(),
                j.to_string(),
                col.to_string(),
            ]);
        }
    }
    doc.write(Some(path))
        .map_err(|e| invalid_argument(format!("cannot write sketch dump: {e}")))
}

pub fn cmd_speedup(args: &SpeedupArgs) -> Result<CsvDoc> {
    if args.repeats == 0 {
        return Err(invalid_argument("repeats must be at least 1"));
    }
    if args.workers.is_empty() {
        return Err(invalid_argument("workers sweep must not be empty"));
    }
    let baseline_workers = if args.workers.contains(&1) {
        1
    } else {
        args.workers[0]
    };

    let mut doc = CsvDoc::new(
        "speedup",
        vec![
            "n",
            "r",
            "blocks",
            "scheme",
            "sketch",
            "workers",
            "median_seconds",
            "efficiency",
            "r_checksum",
        ],
    );
    doc.meta("n", args.n.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "));
    doc.meta("r", args.r);
    doc.meta("scheme", args.scheme.scheme(1).name());
    doc.meta("sketch", sketch_name(args.sketch));
    doc.meta("seed", args.seed);
    doc.meta(
        "workers",
        args.workers.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" "),
    );
    doc.meta("repeats", args.repeats);
    doc.meta("theta1", fmt_f64(args.theta1));
    doc.meta("theta2", fmt_f64(args.theta2));
    doc.meta("matrix", "sq-exp Gram rows on the equispaced [0,1] grid, streamed");
    doc.meta("timed_region", "sketch apply + TSQR factor (setup excluded)");
    doc.meta("efficiency_baseline_workers", baseline_workers);

    for &n in &args.n {
        let blocks = args.blocks.unwrap_or_else(|| default_blocks(n, args.r));
        let spec = KernelSpec::squared_exponential(args.theta1, args.theta2)?;
        let rows = StationaryGridRows::new(&spec, n, 0.0, 1.0)?;

        // Measure every cell first, then report efficiencies against the
        // baseline cell.
        let mut cells: Vec<(usize, f64, String)> = Vec::with_capacity(args.workers.len());
        for &w in &args.workers {
            let workers = Workers::new(w)?;
            let mut times = Vec::with_capacity(args.repeats);
            let mut checksum = String::new();
            for _ in 0..args.repeats {
                let start = Instant::now();
                let k_omega = covsketch::transforms::apply_sketch_kind(
                    &rows,
                    args.sketch.kind(),
                    args.r,
                    args.seed + 1,
                    &workers,
                )?;
                let f = tsqr_factor(
                    &TallMatrix::new(k_omega)?,
                    blocks,
                    args.scheme.scheme(1),
                    &workers,
                )?;
                times.push(start.elapsed().as_secs_f64());
                checksum = fnv1a64(f.final_r());
            }
            times.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
            cells.push((w, times[times.len() / 2], checksum));
        }
        let baseline = cells
            .iter()
            .find(|(w, _, _)| *w == baseline_workers)
            .map(|(_, t, _)| *t)
            .expect("baseline worker count is in the sweep");
        for (w, median, checksum) in cells {
            doc.row(vec![
                n.to_string(),
                args.r.to_string(),
                blocks.to_string(),
                args.scheme.scheme(1).name().to_string(),
                sketch_name(args.sketch).to_string(),
                w.to_string(),
                fmt_f64(median),
                fmt_f64(baseline / median),
                checksum,
            ]);
        }
    }
    Ok(doc)
}

pub fn cmd_loglik(args: &LoglikArgs) -> Result<CsvDoc> {
    let blocks = args.blocks.unwrap_or_else(|| default_blocks(args.n, args.r));
    let workers = Workers::new(args.workers)?;

    // Observations: file, or a seeded standard-normal draw.
    let y: Vec<f64> = match &args.data {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid_argument(format!("cannot read {}: {e}", path.display())))?;
            let parsed: std::result::Result<Vec<f64>, _> = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.trim().parse::<f64>())
                .collect();
            parsed.map_err(|e| invalid_argument(format!("bad data file: {e}")))?
        }
        None => {
            let mut gen = rng::seeded(args.seed + 2);
            (0..args.n).map(|_| gen.sample(StandardNormal)).collect()
        }
    };
    if y.len() != args.n {
        return Err(invalid_argument(format!(
            "data vector has {} entries, expected n = {}",
            y.len(),
            args.n
        )));
    }

    let sketch_seed = args.seed + 1;
    let scheme = args.scheme.scheme(1);

    // Factor the matrix and evaluate the likelihood inside the timed region.
    let start = Instant::now();
    let factor = match args.matrix {
        MatrixArg::Synthetic => {
            let (k, _) = kernels::synthetic_psd(args.n, args.lambda1, args.lambda2, args.seed)?;
            randomized_lowrank(&k, args.r, args.sketch.kind(), sketch_seed, blocks, scheme, &workers)?
        }
        MatrixArg::Kernel => {
            let spec = match args.kernel {
                KernelArg::Sqexp => KernelSpec::squared_exponential(args.theta1, args.theta2)?,
                KernelArg::Matern => KernelSpec::matern(args.theta1, args.theta2, args.nu)?,
            };
            let rows = StationaryGridRows::new(&spec, args.n, 0.0, 1.0)?;
            randomized_lowrank_rows(
                &rows,
                args.r,
                args.sketch.kind(),
                sketch_seed,
                blocks,
                scheme,
                &workers,
            )?
        }
    };
    let model = GpModel::new(factor, args.nugget)?;
    let loglik = model.log_likelihood(&y)?;
    let seconds = start.elapsed().as_secs_f64();

    // Dense oracle at desk scale.
    let (dense_loglik, gap) = if args.n <= 512 {
        let k = match args.matrix {
            MatrixArg::Synthetic => {
                kernels::synthetic_psd(args.n, args.lambda1, args.lambda2, args.seed)?.0
            }
            MatrixArg::Kernel => {
                let spec = match args.kernel {
                    KernelArg::Sqexp => {
                        KernelSpec::squared_exponential(args.theta1, args.theta2)?
                    }
                    KernelArg::Matern => KernelSpec::matern(args.theta1, args.theta2, args.nu)?,
                };
                gram_matrix(&spec, &equispaced_grid(args.n, 0.0, 1.0)?)
            }
        };
        let dense = dense_log_density(&k, args.nugget, &y)?;
        (dense, (loglik - dense).abs())
    } else {
        (f64::NAN, f64::NAN)
    };

    let mut doc = CsvDoc::new(
        "loglik",
        vec![
            "n",
            "r",
            "sketch",
            "seed",
            "nugget",
            "loglik",
            "seconds",
            "dense_loglik",
            "abs_gap",
        ],
    );
    doc.meta("matrix", match args.matrix {
        MatrixArg::Synthetic => "synthetic",
        MatrixArg::Kernel => "kernel",
    });
    doc.meta("n", args.n);
    doc.meta("r", args.r);
    doc.meta("lambda1", fmt_f64(args.lambda1));
    doc.meta("lambda2", fmt_f64(args.lambda2));
    doc.meta("kernel", kernel_name(args.kernel));
    doc.meta("theta1", fmt_f64(args.theta1));
    doc.meta("theta2", fmt_f64(args.theta2));
    doc.meta("nu", fmt_f64(args.nu));
    doc.meta("nugget", fmt_f64(args.nugget));
    doc.meta("sketch", sketch_name(args.sketch));
    doc.meta("seed", args.seed);
    doc.meta("blocks", blocks);
    doc.meta("scheme", scheme.name());
    doc.meta("workers", args.workers);
    doc.meta("sketch_seed", "seed + 1");
    doc.meta(
        "data",
        match &args.data {
            Some(p) => p.display().to_string(),
            None => "N(0,1) draw with seed + 2".to_string(),
        },
    );
    doc.meta("dense_oracle", "computed when n <= 512, otherwise NaN");
    doc.row(vec![
        args.n.to_string(),
        args.r.to_string(),
        sketch_name(args.sketch).to_string(),
        args.seed.to_string(),
        fmt_f64(args.nugget),
        fmt_f64(loglik),
        fmt_f64(seconds),
        fmt_f64(dense_loglik),
        fmt_f64(gap),
    ]);
    Ok(doc)
}

/// Log density of y under N(0, K + nugget I) via the dense eigensolver.
fn dense_log_density(k: &SymMatrix, nugget: f64, y: &[f64]) -> Result<f64> {
    let n = k.order();
    let eig = jacobi_eig(k)?;
    let y_col = covsketch::DenseMatrix::from_vec(n, 1, y.to_vec())?;
    let vt_y = eig.eigenvectors().transpose_matmul(&y_col)?;
    let mut quad = 0.0;
    let mut log_det = 0.0;
    for (i, &d) in eig.eigenvalues().iter().enumerate() {
        let shifted = d + nugget;
        quad += vt_y.get(i, 0) * vt_y.get(i, 0) / shifted;
        log_det += shifted.ln();
    }
    Ok(-0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad))
}
