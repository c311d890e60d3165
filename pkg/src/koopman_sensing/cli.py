"""Command line front end: simulate, identify, reconstruct, evaluate.

Configuration is layered: built-in defaults, then a flat ``key = value``
file (``--config``) whose keys carry a section prefix such as
``identify.rank``, then command line flags, which always win. Every key
has a flag; ``identify.rank`` is ``--rank`` on the ``identify`` command.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical failure.
"""

import argparse
import hashlib
import json
import logging
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import io, koopman, metrics, sensing, synth
from .embedding import build_hankel
from .errors import (ConfigError, KoopmanSensingError, MemoryBudgetExceeded, ModelDataMismatch,
                     UsageError)
from .preprocessing import FilterSpec, TimeSeriesMatrix, bandpass_zero_phase, zscore_apply, zscore_fit

log = logging.getLogger("koopman_sensing")


@dataclass(frozen=True)
class Key:
    name: str
    kind: type
    default: object
    help: str

    @property
    def section(self):
        return self.name.split(".", 1)[0]

    @property
    def flag(self):
        return "--" + self.name.split(".", 1)[1].replace("_", "-")

    @property
    def dest(self):
        return self.name.replace(".", "__")


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


KEYS = [
    Key("run.seed", int, 0, "seed for every random draw"),
    Key("run.out_dir", str, ".", "directory for all outputs"),
    Key("run.threads", int, 1, "worker threads for independent fits"),
    Key("run.timing", _bool, False, "record wall time in JSON outputs (breaks byte identity)"),
    Key("data.dt", float, None, "sampling interval when the CSV has no time column"),
    Key("filter.order", int, 4, "Butterworth order"),
    Key("filter.low_hz", float, 0.25, "lower passband edge (Hz)"),
    Key("filter.high_hz", float, 5.0, "upper passband edge (Hz)"),
    Key("filter.zero_phase", _bool, True, "forward-backward filtering"),
    Key("synth.preset", str, "fowt_like", "plant preset (fowt_like)"),
    Key("synth.spec", str, None, "JSON plant spec; overrides the preset"),
    Key("synth.noise_std", float, 0.05, "noise standard deviation as a fraction of channel RMS"),
    Key("synth.duration_s", float, 600.0, "record length (s)"),
    Key("synth.sample_dt", float, 0.02, "sampling interval (s)"),
    Key("synth.kick_rate_hz", float, 1.0 / 30.0, "mean re-excitation rate per mode (1/s)"),
    Key("synth.harmonic_amplitude", float, 0.5, "amplitude of the 0.61 Hz harmonic"),
    Key("synth.chaotic", _bool, False, "add a Lorenz-63 drive to every channel"),
    Key("synth.chaos_gain", float, 1.0, "Lorenz drive RMS relative to the modal RMS"),
    Key("synth.data_file", str, "data.csv", "output data CSV name"),
    Key("synth.truth_file", str, "truth.json", "output truth JSON name"),
    Key("identify.input", str, None, "training CSV"),
    Key("identify.start_s", float, 0.0, "training segment start (s)"),
    Key("identify.end_s", float, None, "training segment end (s); default end of file"),
    Key("identify.delay_s", float, 60.0, "delay window T_d (s); d = round(T_d / dt)"),
    Key("identify.max_d", int, 100, "cap on the delay depth in samples"),
    Key("identify.memory_budget_mb", float, 2048.0, "limit for the dense Hankel matrix (MB)"),
    Key("identify.rank_policy", str, "fixed", "fixed | energy | gavish_donoho"),
    Key("identify.rank", int, 90, "rank for the fixed policy"),
    Key("identify.energy_tau", float, 0.99, "energy fraction for the energy policy"),
    Key("identify.svd_method", str, "auto", "auto | lapack | gram"),
    Key("identify.exact_modes", _bool, False, "exact instead of projected modes"),
    Key("identify.global_amplitudes", _bool, False, "fit amplitudes on the whole trajectory"),
    Key("identify.energy_floor", float, 0.01, "minimum energy share of a structural mode"),
    Key("identify.ensemble_delays_s", str, "", "delay windows for shape bands, e.g. 0.9,1.0,1.1"),
    Key("identify.model_file", str, "model.npz", "model container name"),
    Key("identify.modes_file", str, "modes.csv", "modes table name"),
    Key("identify.eigen_file", str, "eigenvalues.csv", "eigenvalue table name"),
    Key("identify.bands_file", str, "shape_bands.csv", "ensemble shape band table name"),
    Key("reconstruct.model", str, None, "model container"),
    Key("reconstruct.input", str, None, "test CSV"),
    Key("reconstruct.start_s", float, 0.0, "test segment start (s)"),
    Key("reconstruct.end_s", float, None, "test segment end (s)"),
    Key("reconstruct.hidden", str, "", "hidden channels: names or indices, comma separated"),
    Key("reconstruct.horizon_s", float, 1.0, "update horizon T_up (s); W = round(T_up / dt)"),
    Key("reconstruct.calibration_len", int, 0, "calibration samples; 0 means the model delay depth"),
    Key("reconstruct.alignment", str, "causal", "causal | lookahead"),
    Key("reconstruct.denormalize", _bool, False, "write the reconstruction in physical units"),
    Key("reconstruct.allow_underdetermined", _bool, False, "warn instead of failing"),
    Key("reconstruct.score_from", int, -1, "first scored sample; -1 skips the warm-up"),
    Key("reconstruct.output_file", str, "reconstruction.csv", "reconstruction CSV name"),
    Key("reconstruct.metrics_file", str, "metrics.json", "metrics JSON name"),
    Key("evaluate.model", str, None, "model container"),
    Key("evaluate.truth", str, None, "truth JSON written by simulate"),
    Key("evaluate.reference", str, None, "reference modes CSV"),
    Key("evaluate.gate", float, 0.1, "relative frequency gate for mode matching"),
    Key("evaluate.lyapunov_input", str, None, "CSV with the channel for the Lyapunov estimate"),
    Key("evaluate.lyapunov_channel", str, "", "channel name or index (default first)"),
    Key("evaluate.embed_dim", int, 10, "delay embedding dimension"),
    Key("evaluate.embed_lag", int, 0, "embedding lag in samples; 0 = first autocorrelation zero"),
    Key("evaluate.theiler", int, -1, "temporal exclusion in samples; -1 = one mean period"),
    Key("evaluate.horizon", int, 0, "divergence steps; 0 = four mean periods"),
    Key("evaluate.fit_start", int, -1, "fit window start step; -1 = automatic"),
    Key("evaluate.fit_stop", int, -1, "fit window stop step; -1 = automatic"),
    Key("evaluate.report_file", str, "evaluation.json", "evaluation JSON name"),
    Key("evaluate.mac_file", str, "mac.csv", "mode match CSV name"),
]
KEY_BY_NAME = {k.name: k for k in KEYS}
GLOBAL_KEYS = {"run.seed": "--seed", "run.out_dir": "--out-dir", "run.threads": "--threads",
               "run.timing": "--timing"}
COMMAND_SECTIONS = {
    "simulate": ("synth",),
    "identify": ("identify", "filter", "data"),
    "reconstruct": ("reconstruct", "data"),
    "evaluate": ("evaluate", "data"),
}


def read_config_file(path):
    """Parse a flat ``section.key = value`` file (``[section]`` headers allowed)."""
    try:
        fh = open(path)
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {path}") from exc
    values, section = {}, None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if "." not in key and section:
                key = f"{section}.{key}"
            if key not in KEY_BY_NAME:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _convert(KEY_BY_NAME[key], value)
    return values


def _convert(key, value):
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none", "null")
                         and key.kind is not str):
        return None
    try:
        return key.kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key.name}: {exc}") from exc


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    for name, flag in GLOBAL_KEYS.items():
        key = KEY_BY_NAME[name]
        common.add_argument(flag, dest=key.dest, default=argparse.SUPPRESS,
                            help=f"{key.help} [{name}]")
    common.add_argument("--config", dest="config_file", default=argparse.SUPPRESS,
                        help="flat key = value configuration file")

    parser = argparse.ArgumentParser(
        prog="koopman-sensing", parents=[common],
        description="Hankel-DMD identification and rolling-horizon virtual sensing.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "generate a synthetic plant record and its truth file",
        "identify": "fit a model and write modes, eigenvalues and the model container",
        "reconstruct": "rebuild hidden channels with the rolling-horizon scheme",
        "evaluate": "match modes against references and estimate a Lyapunov exponent",
    }
    for command, sections in COMMAND_SECTIONS.items():
        p = sub.add_parser(command, parents=[common], help=helps[command])
        for key in KEYS:
            if key.section in sections:
                p.add_argument(key.flag, dest=key.dest, default=argparse.SUPPRESS,
                               help=f"{key.help} [{key.name}]")
    return parser


def resolve_config(args):
    """Defaults, then the config file, then explicit flags."""
    config = {k.name: k.default for k in KEYS}
    ns = vars(args)
    if "config_file" in ns:
        config.update(read_config_file(ns["config_file"]))
    for key in KEYS:
        if key.dest in ns:
            config[key.name] = _convert(key, ns[key.dest])
    return config


def _section(config, *sections):
    return {k: v for k, v in config.items() if k.split(".", 1)[0] in sections}


def run_id(command, echo):
    blob = json.dumps({"command": command, "config": echo}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _out(config, name):
    out_dir = config["run.out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _segment(x, start_s, end_s):
    start = int(round((start_s or 0.0) / x.dt))
    stop = x.n_samples if end_s is None else int(round(end_s / x.dt))
    if not 0 <= start < stop <= x.n_samples:
        raise ConfigError(f"segment [{start_s}, {end_s}] s is outside the record")
    return x.with_values(x.values[:, start:stop])


def _require(config, name):
    if not config[name]:
        raise UsageError(f"{name} is required (flag {KEY_BY_NAME[name].flag})")
    return config[name]


# -- simulate -----------------------------------------------------------------

def build_plant_spec(config):
    if config["synth.spec"]:
        spec = synth.SyntheticPlantSpec.from_dict(io.read_json(config["synth.spec"]))
        return synth.SyntheticPlantSpec(**{**spec.__dict__, "seed": config["run.seed"]})
    if config["synth.preset"] != "fowt_like":
        raise ConfigError(f"unknown preset {config['synth.preset']!r}")
    return synth.fowt_like_preset(
        noise_std=config["synth.noise_std"], seed=config["run.seed"],
        chaotic=config["synth.chaotic"], chaos_gain=config["synth.chaos_gain"],
        duration_s=config["synth.duration_s"], dt=config["synth.sample_dt"],
        kick_rate_hz=config["synth.kick_rate_hz"],
        harmonic_amplitude=config["synth.harmonic_amplitude"])


def cmd_simulate(config):
    spec = build_plant_spec(config)
    truth = synth.generate(spec)
    echo = _section(config, "run", "synth")
    echo.pop("run.out_dir")
    echo.pop("run.timing")
    io.write_timeseries_csv(truth.data, _out(config, config["synth.data_file"]))
    io.write_json({
        "run_id": run_id("simulate", echo),
        "config": echo,
        "spec": spec.to_dict(),
        "planted": {
            "frequencies_hz": truth.frequencies_hz.tolist(),
            "damping_ratios": truth.damping_ratios.tolist(),
            "damped_frequencies_hz": truth.damped_frequencies_hz.tolist(),
            "shapes": truth.shapes.T.tolist(),
            "harmonic_frequencies_hz": truth.harmonic_frequencies_hz.tolist(),
            "harmonic_shapes": [list(h.profile) for h in spec.harmonics],
        },
    }, _out(config, config["synth.truth_file"]))
    return 0


# -- identify -----------------------------------------------------------------

def filter_spec(config):
    return FilterSpec(order=config["filter.order"], low_hz=config["filter.low_hz"],
                      high_hz=config["filter.high_hz"], zero_phase=config["filter.zero_phase"])


def delay_depth(config, delay_s, dt, p, n):
    d = int(round(delay_s / dt))
    if d < 2:
        raise ConfigError(f"delay of {delay_s} s gives d = {d} < 2 samples")
    if d > config["identify.max_d"]:
        log.warning("delay depth %d capped at identify.max_d = %d", d, config["identify.max_d"])
        d = config["identify.max_d"]
    need_mb = 8.0 * p * d * max(n - d + 1, 1) / 2 ** 20
    if need_mb > config["identify.memory_budget_mb"]:
        raise MemoryBudgetExceeded(
            f"Hankel matrix of {p * d} x {n - d + 1} needs {need_mb:.0f} MB, budget is "
            f"{config['identify.memory_budget_mb']:.0f} MB")
    return d


def identify_model(x, d, config):
    h = build_hankel(x, d)
    svd = koopman.hankel_svd(h, method=config["identify.svd_method"])
    policy = config["identify.rank_policy"]
    value = {"fixed": config["identify.rank"], "energy": config["identify.energy_tau"]}.get(policy)
    r = koopman.select_rank(svd.s, *h.shape, policy=policy, value=value)
    return koopman.fit(h, r, svd=svd, exact_modes=config["identify.exact_modes"],
                       fit_amplitudes_global=config["identify.global_amplitudes"])


def real_shape(phi):
    """Rotate a complex shape so its largest entry is real, keep the real part."""
    k = int(np.argmax(np.abs(phi)))
    rotated = phi * np.exp(-1j * np.angle(phi[k]))
    out = rotated.real
    norm = np.linalg.norm(out)
    return out / norm if norm > 0 else out


def _oscillatory_structural(model, labels):
    idx = [j for j in range(model.r) if labels[j] == "structural" and model.lambda_c[j].imag > 0]
    energy = koopman.mode_energy(model)
    return sorted(idx, key=lambda j: -energy[j])


def shape_bands(base, members, scale):
    """Per-sensor 2.5/50/97.5 percentiles of ensemble shapes matched to `base`.

    Each base mode is matched to the member mode with the highest MAC; the
    member shape is realised, sign-aligned with the ensemble mean and scaled
    back to physical units.
    """
    base_labels = koopman.classify_stability(base, 0.0)
    rows = []
    for j in _oscillatory_structural(base, base_labels):
        ref = base.phi_phys[:, j] * scale
        shapes = []
        for m in members:
            cand = [c for c in range(m.r) if m.lambda_c[c].imag > 0]
            if not cand:
                continue
            macs = metrics.mac_matrix(ref[:, None], m.phi_phys[:, cand] * scale[:, None])[0]
            shapes.append(real_shape(m.phi_phys[:, cand[int(np.argmax(macs))]] * scale))
        if not shapes:
            continue
        stack = np.array(shapes)
        mean = stack.mean(axis=0)
        stack *= np.where(stack @ mean < 0, -1.0, 1.0)[:, None]
        lo, mid, hi = np.percentile(stack, [2.5, 50, 97.5], axis=0)
        freq = abs(base.lambda_c[j].imag) / (2 * np.pi)
        for s in range(base.p):
            rows.append([j, freq, s, float(lo[s]), float(mid[s]), float(hi[s])])
    return rows


def cmd_identify(config):
    t0 = time.perf_counter()
    raw = _segment(io.ingest_csv(_require(config, "identify.input"), dt=config["data.dt"]),
                   config["identify.start_s"], config["identify.end_s"])
    fspec = filter_spec(config)
    x = bandpass_zero_phase(raw, fspec)
    norm = zscore_fit(x)
    x = zscore_apply(x, norm)
    d = delay_depth(config, config["identify.delay_s"], x.dt, x.p, x.n_samples)
    model = identify_model(x, d, config)
    model.norm, model.filter, model.channel_names = norm, fspec, list(x.channel_names)

    labels = koopman.classify_stability(model, config["identify.energy_floor"])
    spectrum = koopman.continuous_spectrum(model)
    koopman.save_model(model, _out(config, config["identify.model_file"]))
    rows = []
    for pos in range(len(spectrum)):
        j = int(spectrum.mode_index[pos])
        zeta = spectrum.damping_ratio[pos]
        rows.append([j, float(spectrum.frequency_hz[pos]),
                     float(100 * zeta) if np.isfinite(zeta) else "nan",
                     float(spectrum.discrete_magnitude[pos]), float(spectrum.energy[pos]), labels[j]])
    io.write_rows_csv(_out(config, config["identify.modes_file"]),
                      ["mode_id", "freq_hz", "damping_pct", "discrete_mag", "energy", "label"], rows)
    io.write_rows_csv(_out(config, config["identify.eigen_file"]), ["re_mu", "im_mu"],
                      [[float(m.real), float(m.imag)] for m in model.mu])

    delays = [float(v) for v in config["identify.ensemble_delays_s"].split(",") if v.strip()]
    if delays:
        depths = sorted({delay_depth(config, t, x.dt, x.p, x.n_samples) for t in delays})
        with ThreadPoolExecutor(max_workers=max(1, config["run.threads"])) as pool:
            members = list(pool.map(lambda dd: identify_model(x, dd, config), depths))
        io.write_rows_csv(_out(config, config["identify.bands_file"]),
                          ["mode_id", "freq_hz", "sensor", "p2_5", "median", "p97_5"],
                          shape_bands(model, members, norm.stds))
    log.info("identified d=%d r=%d in %.2f s", model.d, model.r, time.perf_counter() - t0)
    return 0


# -- reconstruct --------------------------------------------------------------

def parse_channels(text, names):
    out = []
    for token in (t.strip() for t in text.split(",")):
        if not token:
            continue
        if token in names:
            out.append(names.index(token))
        else:
            try:
                idx = int(token)
            except ValueError:
                raise ConfigError(f"unknown channel {token!r}") from None
            if not 0 <= idx < len(names):
                raise ConfigError(f"channel index {idx} out of range")
            out.append(idx)
    return sorted(set(out))


def prepare_test_data(model, x):
    if x.p != model.p or (model.channel_names and list(x.channel_names) != list(model.channel_names)):
        raise ModelDataMismatch("test channels do not match the model's channels")
    if not np.isclose(x.dt, model.dt, rtol=1e-9):
        raise ModelDataMismatch(f"test dt {x.dt} differs from model dt {model.dt}")
    if model.filter is not None:
        x = bandpass_zero_phase(x, model.filter)
    if model.norm is not None:
        x = zscore_apply(x, model.norm)
    return x


def cmd_reconstruct(config):
    t0 = time.perf_counter()
    model = koopman.load_model(_require(config, "reconstruct.model"))
    raw = _segment(io.ingest_csv(_require(config, "reconstruct.input"), dt=config["data.dt"]),
                   config["reconstruct.start_s"], config["reconstruct.end_s"])
    x = prepare_test_data(model, raw)
    mask = sensing.SensorMask.from_hidden(model.p, parse_channels(config["reconstruct.hidden"],
                                                                  list(x.channel_names)))
    w = int(round(config["reconstruct.horizon_s"] / x.dt))
    rolling = sensing.RollingConfig(
        horizon_w=max(w, 1),
        calibration_len=config["reconstruct.calibration_len"] or None,
        denormalize=config["reconstruct.denormalize"],
        alignment=config["reconstruct.alignment"],
        allow_underdetermined=config["reconstruct.allow_underdetermined"],
        score_from=None if config["reconstruct.score_from"] < 0 else config["reconstruct.score_from"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sensing.UnderdeterminedWarning)
        report = sensing.rolling_reconstruct(model, mask, x, rolling)
    sensing.write_reconstruction_csv(report, _out(config, config["reconstruct.output_file"]))
    echo = _section(config, "reconstruct", "data")
    echo["run.seed"] = config["run.seed"]
    io.write_json({
        "run_id": run_id("reconstruct", echo),
        "config": echo,
        "score_from": report.score_from,
        "per_channel": report.per_channel(),
        "wall_time_s": round(time.perf_counter() - t0, 6) if config["run.timing"] else None,
    }, _out(config, config["reconstruct.metrics_file"]))
    return 0


# -- evaluate -----------------------------------------------------------------

def cmd_evaluate(config):
    t0 = time.perf_counter()
    sources = [config["evaluate.truth"], config["evaluate.reference"], config["evaluate.lyapunov_input"]]
    if not any(sources):
        raise UsageError("evaluate needs --truth, --reference or --lyapunov-input")
    result = {}
    mac_rows = []
    if config["evaluate.truth"] or config["evaluate.reference"]:
        model = koopman.load_model(_require(config, "evaluate.model"))
        scale = model.norm.stds if model.norm is not None else np.ones(model.p)
        labels = koopman.classify_stability(model, 0.0)
        idx = _oscillatory_structural(model, labels)
        f_id = np.array([abs(model.lambda_c[j].imag) / (2 * np.pi) for j in idx])
        zeta_all = koopman.modal_parameters(model.lambda_c)[1]
        shapes_id = model.phi_phys[:, idx] * scale[:, None]
        refs = []
        if config["evaluate.truth"]:
            truth = io.read_json(config["evaluate.truth"])
            planted = truth["planted"]
            # harmonics compete for partners too, so a forcing line whose
            # profile resembles a bending shape cannot steal that mode's match
            f_ref = planted["frequencies_hz"] + planted.get("harmonic_frequencies_hz", [])
            shapes = planted["shapes"] + planted.get("harmonic_shapes", [])
            damping = planted["damping_ratios"] + [0.0] * (len(f_ref) - len(planted["shapes"]))
            refs.append(("truth", np.array(f_ref), np.array(shapes, dtype=complex).T,
                         np.array(damping)))
        if config["evaluate.reference"]:
            f_ref, s_ref = io.read_reference_modes(config["evaluate.reference"], model.p)
            refs.append(("reference", f_ref, s_ref, None))
        for source, f_ref, s_ref, z_ref in refs:
            match = metrics.match_modes(f_id, shapes_id, f_ref, s_ref, gate=config["evaluate.gate"])
            pairs = []
            for i, j, mac_val, ferr in match.pairs:
                mode = idx[i]
                entry = {"mode_id": int(mode), "reference": int(j), "freq_hz": float(f_id[i]),
                         "ref_freq_hz": float(f_ref[j]), "mac": mac_val, "freq_error": ferr,
                         "damping_ratio": float(zeta_all[mode])}
                if z_ref is not None:
                    entry["ref_damping_ratio"] = float(z_ref[j])
                pairs.append(entry)
                mac_rows.append([source, int(mode), int(j), float(f_id[i]), float(f_ref[j]),
                                 mac_val, ferr])
            result[source] = {"pairs": pairs,
                              "unmatched_reference": [int(j) for j in match.unmatched_reference]}
    if config["evaluate.lyapunov_input"]:
        x = io.ingest_csv(config["evaluate.lyapunov_input"], dt=config["data.dt"])
        chan = parse_channels(config["evaluate.lyapunov_channel"], list(x.channel_names)) or [0]
        fit_window = None
        if config["evaluate.fit_start"] >= 0 and config["evaluate.fit_stop"] > 0:
            fit_window = (config["evaluate.fit_start"], config["evaluate.fit_stop"])
        est = metrics.lyapunov_max(
            x.values[chan[0]], x.dt, embed_dim=config["evaluate.embed_dim"],
            embed_lag=config["evaluate.embed_lag"] or None,
            theiler=None if config["evaluate.theiler"] < 0 else config["evaluate.theiler"],
            fit_window=fit_window, horizon=config["evaluate.horizon"] or None)
        result["lyapunov"] = {
            "channel": x.channel_names[chan[0]],
            "lambda_max": est.lambda_max,
            "lyapunov_time": None if est.non_positive_slope else est.lyapunov_time,
            "non_positive_slope": est.non_positive_slope,
            "fit_range": list(est.fit_range),
            "embed_dim": est.embed_dim, "embed_lag": est.embed_lag, "theiler": est.theiler,
        }
    echo = _section(config, "evaluate", "data")
    echo["run.seed"] = config["run.seed"]
    io.write_rows_csv(_out(config, config["evaluate.mac_file"]),
                      ["source", "mode_id", "reference", "freq_hz", "ref_freq_hz", "mac", "freq_error"],
                      mac_rows)
    io.write_json({"run_id": run_id("evaluate", echo), "config": echo, **result,
                   "wall_time_s": round(time.perf_counter() - t0, 6) if config["run.timing"] else None},
                  _out(config, config["evaluate.report_file"]))
    return 0


COMMANDS = {"simulate": cmd_simulate, "identify": cmd_identify, "reconstruct": cmd_reconstruct,
            "evaluate": cmd_evaluate}


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        if config["run.threads"] < 1:
            raise ConfigError("--threads must be >= 1")
        return COMMANDS[args.command](config)
    except KoopmanSensingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
