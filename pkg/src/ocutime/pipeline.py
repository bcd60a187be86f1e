"""File-based pipeline stages: simulate -> preprocess -> window -> train /
ablate -> analyze -> stats -> report.

Each stage reads only the on-disk outputs of its prerequisites, writes
into its own subdirectory of ``out_dir``, and records a content digest
for every emitted file. Reruns with an unchanged config and seed are
byte-identical (wall-clock timing lives only in the per-stage records,
never in the report bundle).
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import metrics as mt
from .config import PipelineConfig
from .errors import (
    InsufficientDataError,
    StageOrderError,
    StaleInputError,
    UndefinedCorrelationError,
)
from .io_formats import (
    read_eeg_csv,
    read_manifest,
    read_trajectory_csv,
    write_eeg_csv,
    write_manifest,
    write_trajectory_csv,
)
from .model import (
    build_model,
    forward_batch,
    load_checkpoint,
    save_checkpoint,
    split_dataset,
    train,
    validity_gate,
)
from .preprocess import butter_bandpass_zero_phase, preprocess_record, qc_stats
from .signal_core import (
    MultiChannelRecord,
    TaskKind,
    WindowPair,
    make_windows,
    normalize_trajectory,
    slice_task_segments,
)
from .voms_synth import gen_dataset

FLOAT_FMT = "%.10g"


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [FLOAT_FMT % v if isinstance(v, float) else v for v in row]
            )


def _read_csv(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


def _record_stage(cfg: PipelineConfig, stage: str, outputs, wall_clock_s: float) -> None:
    out_dir = Path(cfg.out_dir)
    rec_dir = out_dir / "records"
    rec_dir.mkdir(parents=True, exist_ok=True)
    record = {
        "stage": stage,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "wall_clock_s": wall_clock_s,
        "outputs": {
            str(p.relative_to(out_dir)): _digest(p) for p in sorted(outputs)
        },
    }
    (rec_dir / f"{stage}.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _load_record(cfg: PipelineConfig, stage: str, required_by: str) -> dict:
    path = Path(cfg.out_dir) / "records" / f"{stage}.json"
    if not path.exists():
        raise StageOrderError(
            f"stage '{required_by}' requires '{stage}' to have run first "
            f"(missing {path})"
        )
    return json.loads(path.read_text())


def _emitted(root: Path):
    return [p for p in root.rglob("*") if p.is_file()]


# -- simulate --------------------------------------------------------------

def stage_simulate(cfg: PipelineConfig):
    t0 = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    raw_dir = out_dir / "data" / "raw"
    gen_dataset(raw_dir, cfg.session_config())
    # quarantine the ground-truth lags outside the analysis inputs
    truth = raw_dir / "truth.json"
    truth.replace(out_dir / "truth.json")
    _record_stage(cfg, "simulate", _emitted(raw_dir), time.perf_counter() - t0)
    return raw_dir


def _iter_sessions(raw_dir: Path):
    for subject_dir in sorted(p for p in raw_dir.iterdir() if p.is_dir()):
        for session_dir in sorted(p for p in subject_dir.iterdir() if p.is_dir()):
            yield subject_dir.name, session_dir


# -- preprocess ------------------------------------------------------------

def stage_preprocess(cfg: PipelineConfig):
    t0 = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    raw_dir = out_dir / "data" / "raw"
    if not raw_dir.exists():
        raise StageOrderError("stage 'preprocess' requires 'simulate' (or raw data) first")
    pre_dir = out_dir / "preprocessed"
    qc_records = []
    qc_ids = []
    for subject_id, session_dir in _iter_sessions(raw_dir):
        manifest = read_manifest(session_dir / "manifest.json")
        dest = pre_dir / subject_id / manifest.session_id
        dest.mkdir(parents=True, exist_ok=True)
        for trial in manifest.trials:
            record = read_eeg_csv(session_dir / trial.eeg_path)
            processed = preprocess_record(record, cfg.target_fs, cfg.bandpass)
            write_eeg_csv(dest / trial.eeg_path, processed)
            traj = read_trajectory_csv(session_dir / trial.trajectory_path)
            write_trajectory_csv(dest / trial.trajectory_path, traj)
            qc_records.append(processed)
            qc_ids.append(f"{subject_id}/{manifest.session_id}/{trial.trial_id}")
        write_manifest(dest / "manifest.json", manifest)
    report = qc_stats(qc_records, qc_ids)
    _write_csv(
        pre_dir / "qc_report.csv",
        ["trial_id", "channel", "mean_mV", "std_mV"],
        report.to_rows(),
    )
    _record_stage(cfg, "preprocess", _emitted(pre_dir), time.perf_counter() - t0)
    return report


# -- window ----------------------------------------------------------------

def stage_window(cfg: PipelineConfig):
    t0 = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    pre_dir = out_dir / "preprocessed"
    if not pre_dir.exists():
        raise StageOrderError("stage 'window' requires 'preprocess' first")
    win_dir = out_dir / "windows"
    win_dir.mkdir(parents=True, exist_ok=True)
    rejections = []
    wcfg = cfg.window
    for subject_dir in sorted(p for p in pre_dir.iterdir() if p.is_dir()):
        subject_id = subject_dir.name
        eeg_list, target_list, meta = [], [], []
        for session_dir in sorted(p for p in subject_dir.iterdir() if p.is_dir()):
            manifest = read_manifest(session_dir / "manifest.json")
            for trial in manifest.trials:
                record = read_eeg_csv(session_dir / trial.eeg_path, fs=cfg.target_fs)
                traj = read_trajectory_csv(
                    session_dir / trial.trajectory_path, fs=cfg.target_fs
                )
                segments = slice_task_segments(record, traj, trial)
                trial_counter = 0
                for task, seg_rec, seg_traj in segments:
                    seg_traj = normalize_trajectory(seg_traj)
                    result = make_windows(
                        seg_rec, seg_traj,
                        win=wcfg.win, stride=wcfg.stride, min_len=wcfg.min_len,
                        subject_id=subject_id, session_id=manifest.session_id,
                        trial_id=trial.trial_id,
                    )
                    if result.rejected:
                        rejections.append(
                            (subject_id, manifest.session_id, trial.trial_id,
                             task.value, seg_rec.n_samples)
                        )
                        continue
                    # window_index runs across the whole trial so that the
                    # chronological sort key stays monotonic over segments
                    for w in result.windows:
                        eeg_list.append(w.eeg)
                        target_list.append(w.target)
                        meta.append(
                            (manifest.session_id, trial.trial_id, task.value,
                             trial_counter, w.start_sample)
                        )
                        trial_counter += 1
        if not eeg_list:
            continue
        np.savez_compressed(
            win_dir / f"{subject_id}.npz",
            eeg=np.stack(eeg_list),
            target=np.stack(target_list),
            session=np.array([m[0] for m in meta]),
            trial=np.array([m[1] for m in meta]),
            task=np.array([m[2] for m in meta]),
            window_index=np.array([m[3] for m in meta], dtype=np.int64),
            start_sample=np.array([m[4] for m in meta], dtype=np.int64),
        )
    _write_csv(
        win_dir / "rejections.csv",
        ["subject", "session", "trial", "task", "n_samples"],
        rejections,
    )
    _record_stage(cfg, "window", _emitted(win_dir), time.perf_counter() - t0)
    return rejections


def load_windows(cfg: PipelineConfig, subject_id: str):
    path = Path(cfg.out_dir) / "windows" / f"{subject_id}.npz"
    if not path.exists():
        raise StageOrderError(f"no windows for {subject_id}; run the 'window' stage first")
    with np.load(path, allow_pickle=False) as blob:
        windows = [
            WindowPair(
                eeg=blob["eeg"][i],
                target=blob["target"][i],
                task=TaskKind(str(blob["task"][i])),
                subject_id=subject_id,
                session_id=str(blob["session"][i]),
                trial_id=str(blob["trial"][i]),
                window_index=int(blob["window_index"][i]),
                start_sample=int(blob["start_sample"][i]),
            )
            for i in range(len(blob["eeg"]))
        ]
    return windows


def list_subjects(cfg: PipelineConfig):
    win_dir = Path(cfg.out_dir) / "windows"
    if not win_dir.exists():
        raise StageOrderError("run the 'window' stage first")
    return sorted(p.stem for p in win_dir.glob("*.npz"))


# -- train / ablate --------------------------------------------------------

def _train_one(cfg: PipelineConfig, subject_id: str, variant: str, dest: Path):
    windows = load_windows(cfg, subject_id)
    train_split, val_split = split_dataset(windows)
    state = build_model(cfg.model_config(variant))
    report = train(state, train_split, val_split, cfg.train)
    state.meta = {
        "subject_id": subject_id,
        "variant": variant,
        "best_epoch": report.best_epoch,
        "best_val_mse": report.best_val_mse,
        "stopping_reason": report.stopping_reason,
    }
    dest.mkdir(parents=True, exist_ok=True)
    save_checkpoint(dest / f"{variant}.json", state)
    _write_csv(
        dest / f"{variant}_curve.csv",
        ["epoch", "train_mse", "val_mse", "val_r_mean"],
        report.to_rows(),
    )
    return state, report, (train_split, val_split)


def stage_train(cfg: PipelineConfig):
    t0 = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    train_dir = out_dir / "train"
    reports = {}
    for subject_id in list_subjects(cfg):
        _, report, _ = _train_one(cfg, subject_id, cfg.variant, train_dir / subject_id)
        reports[subject_id] = report
    _record_stage(cfg, "train", _emitted(train_dir), time.perf_counter() - t0)
    return reports


def stage_ablate(cfg: PipelineConfig, variants=("M0", "M1", "M2")):
    """Train every variant on identical splits and seeds per subject."""
    t0 = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    abl_dir = out_dir / "ablate"
    rows = []
    for subject_id in list_subjects(cfg):
        for variant in variants:
            state, report, (_, val_split) = _train_one(
                cfg, subject_id, variant, abl_dir / subject_id
            )
            per_task = {}
            for start in range(0, len(val_split), cfg.train.batch_size):
                chunk = val_split[start : start + cfg.train.batch_size]
                pred, _ = forward_batch(state, np.stack([w.eeg for w in chunk]))
                for w, p in zip(chunk, pred.data):
                    ok = validity_gate(p, w.target, cfg.metrics.tau, cfg.metrics.strict_gate)
                    n_ok, n_all = per_task.get(w.task.value, (0, 0))
                    per_task[w.task.value] = (n_ok + int(ok), n_all + 1)
            for task in sorted(per_task):
                n_ok, n_all = per_task[task]
                rows.append((variant, subject_id, task, 100.0 * n_ok / n_all))
    _write_csv(
        abl_dir / "ablation.csv",
        ["variant", "subject", "task", "pct_acceptable"],
        rows,
    )
    _record_stage(cfg, "ablate", _emitted(abl_dir), time.perf_counter() - t0)
    return rows


# -- analyze ---------------------------------------------------------------

# Onset cross-correlation search half-width, in seconds.  Periodic
# stimuli make the plain signal-vs-signal correlation multi-peaked
# (secondary lobes at harmonic spacings of the repetition period), so
# the lag search must stay below half the shortest repetition period
# (1 s for saccade transitions) to keep the peak unique.
ONSET_MAX_LAG_S = 0.48


def _onset_umax(a, b, max_lag, fs):
    """uMax lag between the transition onsets of two signals.

    Correlating |first difference| instead of the signals themselves
    makes the estimate invariant to the feature's sign (downstream
    layers can absorb a polarity flip) and concentrates the curve on
    the stimulus transitions, which survive band-pass filtering even
    when the stimulus fundamental does not.
    """
    lag_cap = min(int(max_lag), int(round(ONSET_MAX_LAG_S * fs)))
    da = np.abs(np.diff(np.asarray(a, dtype=np.float64)))
    db = np.abs(np.diff(np.asarray(b, dtype=np.float64)))
    curve = mt.normalized_xcorr(da, db, max_lag=lag_cap, fs=fs)
    k = int(np.argmax(curve.values))
    return float(curve.lags_ms[k]), float(curve.values[k])


def _window_metrics(args):
    """Per-window response-time metrics (picklable for worker pools)."""
    feature, target, target_filtered, eeg, radius, use_znorm, max_lag, fs = args
    try:
        f = mt.znorm(feature) if use_znorm else np.asarray(feature, dtype=np.float64)
        g = mt.znorm(target) if use_znorm else np.asarray(target, dtype=np.float64)
        # the learned front end has a free (unconstrained) group delay;
        # measure it directly against the EEG channels so the reported
        # lag reflects stimulus-to-response time, not the model's filter
        delays = []
        for ch in range(eeg.shape[0]):
            try:
                delays.append(_onset_umax(feature, eeg[ch], max_lag, fs)[0])
            except UndefinedCorrelationError:
                continue
        front_delay = float(np.median(delays)) if delays else 0.0
        raw_umax, raw_peak = _onset_umax(feature, target_filtered, max_lag, fs)
        umax = raw_umax - front_delay
        res = mt.dtw(f, g, radius=radius)
        aligned = mt.dtw_align(f, g, res.path)
        try:
            ax = mt.normalized_xcorr(aligned, g, max_lag=max_lag, fs=fs)
            aligned_umax, aligned_peak, curve = ax.umax_lag_ms, ax.peak_value, ax.values
        except UndefinedCorrelationError:
            aligned_umax, aligned_peak, curve = np.nan, np.nan, None
        return res.distance, umax, raw_peak, front_delay, aligned_umax, aligned_peak, curve
    except UndefinedCorrelationError:
        return np.nan, np.nan, np.nan, np.nan, np.nan, np.nan, None


def stage_analyze(cfg: PipelineConfig):
    """Gate windows, then compute DTW / cross-correlation / PSD metrics.

    Returns the total number of valid windows across subjects. The
    reported umax_lag_ms comes from the unaligned feature-vs-target
    transition-onset cross-correlation (it carries the global response
    lag), with the target band-limited by the same zero-phase filter
    as the EEG and the front end's measured group delay
    (frontend_delay_ms, the median onset lag of the feature against
    the EEG channels) subtracted; aligned_umax_lag_ms is the post-DTW
    residual.
    """
    t0 = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    ana_dir = out_dir / "analyze"
    mcfg = cfg.metrics
    total_valid = 0
    for subject_id in list_subjects(cfg):
        ckpt = out_dir / "train" / subject_id / f"{cfg.variant}.json"
        if not ckpt.exists():
            raise StageOrderError(
                f"stage 'analyze' requires a trained checkpoint; run 'train' first "
                f"(missing {ckpt})"
            )
        state = load_checkpoint(ckpt)
        windows = load_windows(cfg, subject_id)
        preds = []
        feats = []
        for start in range(0, len(windows), cfg.train.batch_size):
            chunk = windows[start : start + cfg.train.batch_size]
            pred, feat = forward_batch(state, np.stack([w.eeg for w in chunk]))
            preds.append(pred.data)
            feats.append(feat.data)
        preds = np.concatenate(preds)
        feats = np.concatenate(feats)

        rows = []
        valid_jobs = []
        valid_info = []
        validity = {}
        for i, w in enumerate(windows):
            try:
                r = mt.pearson_r(preds[i], w.target)
            except UndefinedCorrelationError:
                r = np.nan
            ok = validity_gate(preds[i], w.target, mcfg.tau, mcfg.strict_gate)
            n_ok, n_all = validity.get(w.task.value, (0, 0))
            validity[w.task.value] = (n_ok + int(ok), n_all + 1)
            if ok:
                filtered = butter_bandpass_zero_phase(
                    MultiChannelRecord(
                        data=w.target[None],
                        fs=cfg.target_fs,
                        channel_names=("target",),
                    ),
                    cfg.bandpass,
                ).data[0]
                valid_jobs.append(
                    (feats[i], w.target, filtered, w.eeg, mcfg.dtw_radius,
                     mcfg.dtw_znorm, mcfg.xcorr_max_lag, cfg.target_fs)
                )
                valid_info.append((i, w))
            rows.append(
                [subject_id, w.session_id, w.task.value, w.window_index, r, int(ok),
                 np.nan, np.nan, np.nan, np.nan, np.nan, np.nan]
            )
        if cfg.jobs > 1 and len(valid_jobs) > 1:
            with Pool(cfg.jobs) as pool:
                results = pool.map(_window_metrics, valid_jobs, chunksize=16)
        else:
            results = [_window_metrics(job) for job in valid_jobs]

        curves = {}
        feats_by_task = {}
        for (i, w), (dist, umax, peak, fdelay, a_umax, a_peak, curve) in zip(
            valid_info, results
        ):
            rows[i][6:12] = [dist, umax, peak, fdelay, a_umax, a_peak]
            if curve is not None:
                curves.setdefault(w.task.value, []).append(curve)
            feats_by_task.setdefault(w.task.value, []).append(feats[i])

        dest = ana_dir / subject_id
        dest.mkdir(parents=True, exist_ok=True)
        _write_csv(
            dest / "metrics.csv",
            ["subject", "session", "task", "window", "r", "valid", "dtw_distance",
             "umax_lag_ms", "peak_xcorr", "frontend_delay_ms", "aligned_umax_lag_ms",
             "aligned_peak_xcorr"],
            [[*row[:4], float(row[4]), row[5], *map(float, row[6:])] for row in rows],
        )
        _write_csv(
            dest / "validity.csv",
            ["subject", "task", "n_windows", "n_valid", "pct_valid"],
            [
                (subject_id, task, n_all, n_ok, 100.0 * n_ok / n_all)
                for task, (n_ok, n_all) in sorted(validity.items())
            ],
        )
        for task, task_feats in sorted(feats_by_task.items()):
            summary = mt.psd_summary(
                task_feats, fs=cfg.target_fs, seg=mcfg.welch_seg, overlap=mcfg.welch_overlap
            )
            _write_csv(
                dest / f"psd_{task}.csv",
                ["freq", "mean", "min", "max"],
                zip(
                    summary.freqs, summary.mean_psd,
                    summary.min_envelope, summary.max_envelope,
                ),
            )
        for task, task_curves in sorted(curves.items()):
            arr = np.array(task_curves)
            lags_ms = (
                np.arange(-mcfg.xcorr_max_lag, mcfg.xcorr_max_lag + 1)
                * 1000.0 / cfg.target_fs
            )
            _write_csv(
                dest / f"xcorr_{task}.csv",
                ["lag_ms", "mean", "min", "max"],
                zip(lags_ms, arr.mean(axis=0), arr.min(axis=0), arr.max(axis=0)),
            )
        total_valid += sum(n_ok for n_ok, _ in validity.values())
    _record_stage(cfg, "analyze", _emitted(ana_dir), time.perf_counter() - t0)
    return total_valid


# -- stats -----------------------------------------------------------------

def _dtw_by_subject_task(cfg: PipelineConfig):
    ana_dir = Path(cfg.out_dir) / "analyze"
    if not ana_dir.exists():
        raise StageOrderError("stage 'stats' requires 'analyze' first")
    data = {}
    for metrics_path in sorted(ana_dir.glob("*/metrics.csv")):
        header, rows = _read_csv(metrics_path)
        col = {name: k for k, name in enumerate(header)}
        for row in rows:
            if row[col["valid"]] != "1":
                continue
            dist = float(row[col["dtw_distance"]])
            if not np.isfinite(dist):
                continue
            key = (row[col["subject"]], row[col["task"]])
            data.setdefault(key, []).append(dist)
    return data


def stage_stats(cfg: PipelineConfig):
    """Per-task Mann-Whitney U comparison of subject DTW distributions."""
    t0 = time.perf_counter()
    data = _dtw_by_subject_task(cfg)
    subjects = sorted({s for s, _ in data})
    if len(subjects) < 2:
        raise InsufficientDataError(
            f"stats needs >= 2 subjects with valid windows, found {len(subjects)}"
        )
    sa, sb = subjects[:2]
    rows = []
    tasks = sorted({t for _, t in data})
    for task in tasks:
        x = data.get((sa, task), [])
        y = data.get((sb, task), [])
        if not x or not y:
            continue
        res = mt.mann_whitney_u(x, y)
        direction = res.direction.replace("x", sa).replace("y", sb)
        rows.append((task, res.p_value, res.median_x, res.median_y, direction))
    stats_dir = Path(cfg.out_dir) / "stats"
    _write_csv(
        stats_dir / "utest.csv",
        ["task", "p_value", "median_a", "median_b", "direction"],
        rows,
    )
    _record_stage(cfg, "stats", _emitted(stats_dir), time.perf_counter() - t0)
    return rows


# -- report ----------------------------------------------------------------

REQUIRED_STAGES = ("simulate", "preprocess", "window", "train", "ablate", "analyze", "stats")


def _check_stale(cfg: PipelineConfig, stages=REQUIRED_STAGES) -> None:
    out_dir = Path(cfg.out_dir)
    for stage in stages:
        record = _load_record(cfg, stage, required_by="report")
        for rel, digest in record["outputs"].items():
            path = out_dir / rel
            if not path.exists() or _digest(path) != digest:
                raise StaleInputError(
                    f"output of stage '{stage}' changed since it ran: {rel}"
                )


def stage_report(cfg: PipelineConfig):
    """Consolidated, deterministic report bundle plus figure-data CSVs."""
    t0 = time.perf_counter()
    _check_stale(cfg)
    out_dir = Path(cfg.out_dir)
    rep_dir = out_dir / "report"
    fig_dir = rep_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)

    def copy_csv(src: Path, dest_name: str, prepend=None):
        header, rows = _read_csv(src)
        if prepend is not None:
            header = [prepend[0]] + header
            rows = [[prepend[1](src)] + row for row in rows]
        dest = fig_dir / dest_name
        with open(dest, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        return dest

    copy_csv(out_dir / "preprocessed" / "qc_report.csv", "fig4_qc.csv")
    copy_csv(out_dir / "ablate" / "ablation.csv", "fig7_ablation.csv")

    # fig8: validity; fig10: per-window DTW; fig9/fig11: per task+subject
    validity_rows, dtw_rows, psd_rows, xcorr_rows = [], [], [], []
    for sub_dir in sorted((out_dir / "analyze").iterdir()):
        if not sub_dir.is_dir():
            continue
        header, rows = _read_csv(sub_dir / "validity.csv")
        validity_rows.extend(rows)
        header, rows = _read_csv(sub_dir / "metrics.csv")
        col = {name: k for k, name in enumerate(header)}
        for row in rows:
            if row[col["valid"]] == "1" and row[col["dtw_distance"]] != "nan":
                dtw_rows.append(
                    (row[col["subject"]], row[col["task"]], row[col["dtw_distance"]])
                )
        for psd_path in sorted(sub_dir.glob("psd_*.csv")):
            task = psd_path.stem[len("psd_"):]
            _, rows = _read_csv(psd_path)
            psd_rows.extend([(sub_dir.name, task, *row) for row in rows])
        for xc_path in sorted(sub_dir.glob("xcorr_*.csv")):
            task = xc_path.stem[len("xcorr_"):]
            _, rows = _read_csv(xc_path)
            xcorr_rows.extend([(sub_dir.name, task, *row) for row in rows])
    _write_csv(fig_dir / "fig8_validity.csv",
               ["subject", "task", "n_windows", "n_valid", "pct_valid"], validity_rows)
    _write_csv(fig_dir / "fig9_psd.csv",
               ["subject", "task", "freq", "mean", "min", "max"], psd_rows)
    _write_csv(fig_dir / "fig10_dtw.csv",
               ["subject", "task", "dtw_distance"], dtw_rows)
    _write_csv(fig_dir / "fig11_xcorr.csv",
               ["subject", "task", "lag_ms", "mean", "min", "max"], xcorr_rows)
    copy_csv(out_dir / "stats" / "utest.csv", "table3_utest.csv")

    files = {
        str(p.relative_to(rep_dir)): _digest(p) for p in sorted(fig_dir.rglob("*"))
        if p.is_file()
    }
    bundle = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "files": files,
        "stages": {
            stage: _load_record(cfg, stage, "report")["outputs"]
            for stage in REQUIRED_STAGES
        },
    }
    (rep_dir / "bundle.json").write_text(
        json.dumps(bundle, indent=2, sort_keys=True) + "\n"
    )
    # wall-clock bookkeeping lives outside the deterministic bundle
    run_record = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "stage_wall_clock_s": {
            stage: _load_record(cfg, stage, "report")["wall_clock_s"]
            for stage in REQUIRED_STAGES
        },
        "inventory": files,
    }
    (rep_dir / "run_record.json").write_text(
        json.dumps(run_record, indent=2, sort_keys=True) + "\n"
    )
    _record_stage(
        cfg, "report",
        [p for p in rep_dir.rglob("*") if p.is_file() and p.name != "run_record.json"],
        time.perf_counter() - t0,
    )
    return rep_dir


def run_all(cfg: PipelineConfig):
    """Convenience driver: every stage in order."""
    stage_simulate(cfg)
    stage_preprocess(cfg)
    stage_window(cfg)
    stage_train(cfg)
    stage_ablate(cfg)
    stage_analyze(cfg)
    stage_stats(cfg)
    return stage_report(cfg)
