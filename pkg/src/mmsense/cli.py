"""Command-line front end: simulate, spectrogram, train, eval, sweep, fit.

Exit codes: 0 success, 2 configuration error, 3 input/IO error,
4 numerical error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import fileio
from .caf import CafGrid, spectrogram, spectrogram_fast
from .channel import GESTURES, scenario_preset, synthesize_sample
from .config import config_hash, load_config
from .csi import csi_spectrogram, estimate_csi
from .dataset import images_from_bank, spectrogram_bank, stratified_split
from .errors import ConfigError, InputError, NumericsError
from .fit import AccuracyCurve, eval_curve, fit
from .net import ResidualNet, ResidualNetConfig
from .training import accuracy_sweep, evaluate, run_training, spearman
from .waveform import FrameSpec

log = logging.getLogger("mmsense")


def _frame_spec(cfg: dict) -> FrameSpec:
    f = cfg["frame"]
    return FrameSpec(
        training_duration=f["training_duration"],
        payload_duration=f["payload_duration"],
        sample_rate=f["sample_rate"],
        training_seed=f["training_seed"],
        payload_seed=f["payload_seed"],
    )


def _grid(cfg: dict, n_delay_samples: int | None = None) -> CafGrid:
    g = cfg["grid"]
    spec = _frame_spec(cfg)
    n_delay = g["n_delay_samples"] if n_delay_samples is None else n_delay_samples
    delays = np.arange(int(n_delay) + 1) / spec.sample_rate
    n_steps = int(round(g["f_span"] / g["f_step"]))
    freqs = np.arange(-n_steps, n_steps + 1) * g["f_step"]
    return CafGrid(delays, freqs, cit=g["cit"], hop=g["hop"],
                   frame_rate=spec.frame_rate)


def _sample_seed(base_seed: int, scenario: str, gesture: str, index: int) -> int:
    ss = np.random.SeedSequence(
        [int(base_seed), int(GESTURES.index(gesture)), hash_scenario(scenario), int(index)]
    )
    return int(ss.generate_state(1, np.uint64)[0])


def hash_scenario(scenario: str) -> int:
    return {"LoS": 0, "NLoS": 1}[scenario]


def _frames_for_duration(spec: FrameSpec, duration: float) -> int:
    return max(1, math.ceil(int(round(duration * spec.sample_rate)) / spec.n_frame))


def _build_bank(cfg: dict):
    """Synthesize the configured dataset and return its spectrogram bank.

    Samples are generated lazily: only one trace pair is alive at a time
    (a 2 s pair is ~64 MB; the bank keeps just the spectrograms).
    """
    spec = _frame_spec(cfg)
    d = cfg["dataset"]
    preset = scenario_preset(d["scenario"])
    n_frames = _frames_for_duration(spec, d["duration"])
    grid = _grid(cfg, n_delay_samples=d["delay_samples"])

    def generate():
        for gesture in GESTURES:
            for i in range(int(d["n_per_gesture"])):
                seed = _sample_seed(d["seed"], d["scenario"], gesture, i)
                yield synthesize_sample(
                    spec, n_frames, preset, gesture,
                    snr_db=cfg["channel"]["snr_db"],
                    offset_hz=cfg["channel"]["offset_hz"], seed=seed)

    log.info("synthesizing %d samples (%s, %d frames each)",
             len(GESTURES) * int(d["n_per_gesture"]), d["scenario"], n_frames)
    return spectrogram_bank(generate(), grid), grid


def _net_config(cfg: dict, seed: int = 0) -> ResidualNetConfig:
    c = cfg["classifier"]
    return ResidualNetConfig(
        n_blocks=int(c["n_blocks"]), channels=tuple(c["channels"]),
        input_shape=tuple(c["image_size"]), n_classes=int(c["n_classes"]),
        seed=seed)


def _train_kwargs(cfg: dict) -> dict:
    c = cfg["classifier"]
    return {"epochs": int(c["epochs"]), "batch_size": int(c["batch_size"]),
            "lr": float(c["lr"]), "momentum": float(c["momentum"])}


# ------------------------------------------------------------------ commands

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    spec = _frame_spec(cfg)
    n = int(args.n) if args.n is not None else int(cfg["simulate"]["n_per_gesture"])
    if n < 1:
        raise ConfigError(f"sample count must be >= 1, got {n}")
    base_seed = args.seed if args.seed is not None else cfg["dataset"]["seed"]
    n_frames = int(cfg["burst"]["n_frames"])
    entries = []
    for scenario in cfg["simulate"]["scenarios"]:
        preset = scenario_preset(scenario)
        for gesture in GESTURES:
            for i in range(n):
                seed = _sample_seed(base_seed, scenario, gesture, i)
                sample = synthesize_sample(
                    spec, n_frames, preset, gesture,
                    snr_db=cfg["channel"]["snr_db"],
                    offset_hz=cfg["channel"]["offset_hz"], seed=seed)
                stem = f"{gesture}_{scenario.lower()}_{i:03d}"
                tags = {"label": gesture, "scenario": scenario,
                        "snr_db": cfg["channel"]["snr_db"],
                        "offset_hz": cfg["channel"]["offset_hz"], "seed": seed}
                fileio.write_iq(os.path.join(args.out, stem + ".ref.iq"),
                                sample.y_r, tags)
                fileio.write_iq(os.path.join(args.out, stem + ".surv.iq"),
                                sample.y_s, tags)
                entries.append({"stem": stem, "label": gesture,
                                "scenario": scenario, "seed": seed})
    manifest = {"config_hash": config_hash(cfg), "n_frames": n_frames,
                "entries": entries}
    fileio.atomic_write_text(os.path.join(args.out, "manifest.json"),
                             json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(entries)} samples to {args.out}")
    return 0


def _spg_to_pgm(values: np.ndarray) -> np.ndarray:
    # display orientation: frequency vertical (highest bin on top), time horizontal
    return np.flipud(values.T)


def cmd_spectrogram(args) -> int:
    cfg = load_config(args.config)
    spec = _frame_spec(cfg)
    y_r, _ = fileio.read_iq(args.input + ".ref.iq")
    y_s, _ = fileio.read_iq(args.input + ".surv.iq")
    if args.mode == "caf":
        grid = _grid(cfg)
        try:
            spg = spectrogram_fast(y_s, y_r, grid)
            method = "fast"
        except InputError:
            spg = spectrogram(y_s, y_r, grid)
            method = "direct"
        log.info("caf spectrogram via %s path: %s windows", method, spg.values.shape[0])
    else:
        csi = estimate_csi(y_s, spec, n_taps=int(cfg["csi"]["n_taps"]))
        spg = csi_spectrogram(csi, cit=cfg["grid"]["cit"], hop=cfg["grid"]["hop"])
    fileio.write_spectrogram(args.out, spg.values, spg.cit, spg.hop,
                             spg.freq_axis, t0=float(spg.time_axis[0]))
    if args.pgm:
        fileio.write_pgm(args.pgm, _spg_to_pgm(spg.values))
    print(f"wrote {args.out}: {spg.values.shape[0]} windows x "
          f"{spg.values.shape[1]} bins, f [{spg.freq_axis[0]:g}, {spg.freq_axis[-1]:g}] Hz")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    if args.duration is not None:
        cfg["dataset"]["duration"] = float(args.duration)
    if args.seed is not None:
        cfg["dataset"]["seed"] = int(args.seed)
    bank, _ = _build_bank(cfg)
    d = cfg["dataset"]
    images, labels = images_from_bank(bank, d["duration"],
                                      tuple(cfg["classifier"]["image_size"]))
    net, report = run_training(images, labels, _net_config(cfg),
                               int(d["n_train_per_class"]), int(d["seed"]),
                               **_train_kwargs(cfg))
    fileio.save_params(os.path.join(args.out, "params.bin"), net.state())
    fileio.write_csv(os.path.join(args.out, "loss.csv"), ["epoch", "loss"],
                     [[i, f"{v:.8f}"] for i, v in enumerate(report.epoch_losses)])
    fileio.write_csv(os.path.join(args.out, "confusion.csv"),
                     ["true\\pred"] + list(GESTURES),
                     [[GESTURES[i]] + list(map(int, row))
                      for i, row in enumerate(report.confusion)])
    summary = {"accuracy": report.accuracy, "duration": d["duration"],
               "seed": d["seed"], "config_hash": config_hash(cfg)}
    fileio.atomic_write_text(os.path.join(args.out, "report.json"),
                             json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"test accuracy {report.accuracy:.4f} (duration {d['duration']} s)")
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    bank, _ = _build_bank(cfg)
    d = cfg["dataset"]
    images, labels = images_from_bank(bank, d["duration"],
                                      tuple(cfg["classifier"]["image_size"]))
    split_seed = int(np.random.SeedSequence(int(d["seed"])).generate_state(1, np.uint64)[0])
    _, test_idx = stratified_split(labels, int(d["n_train_per_class"]), split_seed)
    net = ResidualNet(_net_config(cfg))
    net.load_state(fileio.load_params(args.params))
    report = evaluate(net, images[test_idx], labels[test_idx])
    out = {"accuracy": report.accuracy,
           "confusion": report.confusion.tolist(),
           "n_test": int(len(test_idx)), "config_hash": config_hash(cfg)}
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out:
        fileio.atomic_write_text(args.out, text + "\n")
    print(text)
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    sw = cfg["sweep"]
    durations = [float(t) for t in sw["durations"]]
    if not durations:
        raise ConfigError("sweep.durations must be nonempty")
    cfg["dataset"]["duration"] = max(durations)
    bank, _ = _build_bank(cfg)
    seeds = [int(sw["base_seed"]) + j for j in range(int(sw["n_seeds"]))]
    rows = accuracy_sweep(bank, durations, seeds, _net_config(cfg),
                          int(cfg["dataset"]["n_train_per_class"]),
                          tuple(cfg["classifier"]["image_size"]),
                          **_train_kwargs(cfg))
    fileio.write_csv(os.path.join(args.out, "accuracy.csv"),
                     ["duration_s", "seed", "accuracy"],
                     [[r["duration"], r["seed"], f"{r['accuracy']:.6f}"] for r in rows])
    for r in rows:
        name = f"confusion_T{r['duration']:g}_s{r['seed']}.csv"
        fileio.write_csv(os.path.join(args.out, name),
                         ["true\\pred"] + list(GESTURES),
                         [[GESTURES[i]] + list(map(int, row))
                          for i, row in enumerate(r["confusion"])])
    means = {t: float(np.mean([r["accuracy"] for r in rows if r["duration"] == t]))
             for t in durations}
    summary = {"mean_accuracy": {f"{t:g}": means[t] for t in durations},
               "config_hash": config_hash(cfg)}
    if len(durations) >= 2:
        try:
            summary["spearman"] = spearman(np.array(durations),
                                           np.array([means[t] for t in durations]))
        except NumericsError as exc:
            # a flat accuracy series is a finding, not a failure
            summary["spearman"] = None
            summary["spearman_warning"] = str(exc)
            log.warning("spearman skipped: %s", exc)
    curve = None
    if len(set(durations)) >= 3:
        curve = fit(np.array(durations), np.array([means[t] for t in durations]))
        summary["curve"] = {"gamma": curve.gamma, "alpha": curve.alpha,
                            "beta": curve.beta, "rmse": curve.rmse,
                            "degenerate": curve.degenerate}
    else:
        summary["curve_warning"] = ("curve fit skipped: needs >= 3 distinct "
                                    "durations, table still written")
        log.warning(summary["curve_warning"])
    fileio.atomic_write_text(os.path.join(args.out, "summary.json"),
                             json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if curve is not None:
        _write_curve(args.out, curve, min(durations), max(durations))
    print(json.dumps(summary["mean_accuracy"], indent=2))
    return 0


def _write_curve(out_dir: str, curve: AccuracyCurve, t_lo: float, t_hi: float) -> None:
    fileio.write_csv(os.path.join(out_dir, "curve.csv"),
                     ["gamma", "alpha", "beta", "rmse", "degenerate"],
                     [[f"{curve.gamma:.6f}", f"{curve.alpha:.6f}",
                       f"{curve.beta:.6f}", f"{curve.rmse:.3e}", curve.degenerate]])
    ts = np.linspace(t_lo, t_hi, 101)
    raw = eval_curve(curve, ts, clamp=False)
    clamped = eval_curve(curve, ts, clamp=True)
    fileio.write_csv(os.path.join(out_dir, "curve_samples.csv"),
                     ["duration_s", "psi_raw", "psi_clamped"],
                     [[f"{t:.6f}", f"{r:.6f}", f"{c:.6f}"]
                      for t, r, c in zip(ts, raw, clamped)])


def cmd_fit(args) -> int:
    header, rows = fileio.read_csv(args.points)
    if len(header) < 2:
        raise InputError(f"{args.points} needs columns (duration_s, accuracy)")
    try:
        durations = np.array([row[0] for row in rows], dtype=np.float64)
        accuracies = np.array([row[1] for row in rows], dtype=np.float64)
    except (ValueError, IndexError) as exc:
        raise InputError(f"{args.points}: non-numeric or short row: {exc}") from exc
    curve = fit(durations, accuracies)
    os.makedirs(args.out, exist_ok=True)
    _write_curve(args.out, curve, float(durations.min()), float(durations.max()))
    result = {"gamma": curve.gamma, "alpha": curve.alpha, "beta": curve.beta,
              "rmse": curve.rmse, "degenerate": curve.degenerate}
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON config overriding defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmsense",
        description="Passive bistatic motion sensing pipeline: synthesize, "
                    "process, classify, fit.")
    parser.add_argument("--verbose", action="store_true", help="INFO-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a labeled IQ dataset")
    _add_config_arg(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=None, help="samples per gesture per scenario")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrogram", help="time-Doppler spectrogram of one sample")
    _add_config_arg(p)
    p.add_argument("--input", required=True,
                   help="sample prefix (expects PREFIX.ref.iq and PREFIX.surv.iq)")
    p.add_argument("--mode", choices=["caf", "csi"], default="caf")
    p.add_argument("--out", required=True, help="output spectrogram file")
    p.add_argument("--pgm", default=None, help="optional grayscale image path")
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("train", help="train the classifier on a synthetic dataset")
    _add_config_arg(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--duration", type=float, default=None, help="sensing duration (s)")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate saved parameters on the test split")
    _add_config_arg(p)
    p.add_argument("--params", required=True, help="params.bin path (with .json manifest)")
    p.add_argument("--out", default=None, help="optional report JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="accuracy vs sensing duration sweep + curve fit")
    _add_config_arg(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit the accuracy curve to a points CSV")
    p.add_argument("--points", required=True, help="CSV with duration_s, accuracy")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv: list | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    except NumericsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
