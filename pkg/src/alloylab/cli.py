"""Experiment driver: config parsing, estimator subcommands, CSV output.

Configs are JSON files with blocks ``model``, ``geometry``, ``estimator``,
``ensemble`` and (optionally) ``output``; the schema is documented in the
README.  Every run writes one CSV (atomically, temp file + rename) whose rows
all carry the tool version, the hash of the fully resolved config, the master
seed and the sample count, plus a JSON sidecar with the resolved config —
enough to reproduce the file byte for byte.

Exit codes: 0 success, 2 config error, 3 numerical failure beyond policy,
4 inequality-verification failure (verify-bounds / stone only).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import diagnostics, lattice, polyavg
from .diagnostics import ModelSpec
from .ensemble import EnsembleAbort, EnsembleConfig, sample_rng
from .lattice import BoxSpec, DisorderSpec, SingleSitePotential

__version__ = "0.1.0"


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# ----------------------------------------------------------------------------
# config parsing

_TOP_KEYS = {"model", "geometry", "estimator", "ensemble", "output"}


def _err(errors, path, msg):
    errors.append(f"{path}: {msg}")


def _get(block, key, errors, path, required=True, default=None):
    if key not in block:
        if required:
            _err(errors, f"{path}.{key}", "missing required key")
        return default
    return block[key]


def _check_keys(block, allowed, errors, path):
    for k in block:
        if k not in allowed:
            _err(errors, f"{path}.{k}", "unknown key")


def _parse_u(raw, d, errors):
    if raw is None:
        return None
    if raw == {"dirac": True} or raw == "dirac":
        return SingleSitePotential.dirac(d)
    if not isinstance(raw, dict):
        _err(errors, "model.u", "must be 'dirac' or an offsets/values table")
        return None
    _check_keys(raw, {"dirac", "offsets", "values"}, errors, "model.u")
    offsets = raw.get("offsets")
    values = raw.get("values")
    if not isinstance(offsets, list) or not isinstance(values, list) \
            or len(offsets) != len(values) or not offsets:
        _err(errors, "model.u", "offsets and values must be matching nonempty lists")
        return None
    try:
        pairs = [((o,) if isinstance(o, int) else tuple(o), float(v))
                 for o, v in zip(offsets, values)]
        return SingleSitePotential.from_pairs(d, pairs)
    except (TypeError, ValueError) as exc:
        _err(errors, "model.u", str(exc))
        return None


def _parse_mu(raw, errors):
    if raw is None:
        return None
    if not isinstance(raw, dict):
        _err(errors, "model.mu", "must be a table")
        return None
    kind = raw.get("kind")
    try:
        if kind == "uniform":
            _check_keys(raw, {"kind", "a", "b"}, errors, "model.mu")
            return DisorderSpec.uniform(float(raw["a"]), float(raw["b"]))
        if kind == "piecewise":
            _check_keys(raw, {"kind", "nodes", "density"}, errors, "model.mu")
            return DisorderSpec.piecewise_linear(raw["nodes"], raw["density"])
    except (KeyError, TypeError, ValueError) as exc:
        _err(errors, "model.mu", str(exc))
        return None
    _err(errors, "model.mu.kind", f"unknown kind {kind!r}")
    return None


def parse_config(text: str, subcommand: str):
    """Parse and fully validate a config; returns (resolved dict, ModelSpec,
    geometry dict, estimator dict, ensemble dict).  All schema violations are
    collected and raised together."""
    errors: list[str] = []
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a JSON object"])
    _check_keys(raw, _TOP_KEYS, errors, "config")

    model_raw = raw.get("model")
    model = None
    if not isinstance(model_raw, dict):
        _err(errors, "config.model", "missing or not a table")
    else:
        _check_keys(model_raw, {"d", "u", "mu", "lambda"}, errors, "model")
        d = _get(model_raw, "d", errors, "model", default=1)
        lam = _get(model_raw, "lambda", errors, "model")
        u = _parse_u(_get(model_raw, "u", errors, "model"), d if isinstance(d, int) else 1, errors)
        mu = _parse_mu(_get(model_raw, "mu", errors, "model"), errors)
        if not isinstance(d, int) or d < 1:
            _err(errors, "model.d", "dimension must be an integer >= 1")
        if lam is not None and (not isinstance(lam, (int, float)) or lam <= 0):
            _err(errors, "model.lambda", "disorder strength must be > 0")
        if not errors and u is not None and mu is not None:
            model = ModelSpec(d, u, mu, float(lam))

    geometry = raw.get("geometry", {})
    if not isinstance(geometry, dict):
        _err(errors, "config.geometry", "must be a table")
        geometry = {}
    else:
        _check_keys(geometry, {"L", "center", "x", "y"}, errors, "geometry")
        L = geometry.get("L")
        if L is not None and (not isinstance(L, int) or L < 0):
            _err(errors, "geometry.L", "half-width must be an integer >= 0")

    estimator = raw.get("estimator", {})
    if not isinstance(estimator, dict):
        _err(errors, "config.estimator", "must be a table")
        estimator = {}

    ens_raw = raw.get("ensemble", {})
    ensemble = {"samples": 100, "master_seed": 1, "workers": 1,
                "failure_policy": 0.01}
    if not isinstance(ens_raw, dict):
        _err(errors, "config.ensemble", "must be a table")
    else:
        _check_keys(ens_raw, set(ensemble), errors, "ensemble")
        ensemble.update(ens_raw)
        if not isinstance(ensemble["samples"], int) or ensemble["samples"] < 1:
            _err(errors, "ensemble.samples", "must be an integer >= 1")
        if not isinstance(ensemble["master_seed"], int):
            _err(errors, "ensemble.master_seed", "must be an integer")

    output = raw.get("output", {})
    if not isinstance(output, dict):
        _err(errors, "config.output", "must be a table")
        output = {}
    else:
        _check_keys(output, {"path"}, errors, "output")

    runner = SUBCOMMANDS.get(subcommand)
    if runner is not None:
        runner.validate(estimator, geometry, errors)
    if errors:
        raise ConfigError(errors)
    resolved = {"model": model_raw, "geometry": geometry, "estimator": estimator,
                "ensemble": ensemble, "output": output, "subcommand": subcommand,
                "version": __version__}
    return resolved, model, geometry, estimator, ensemble


def config_hash(resolved: dict) -> str:
    # the worker count is a performance hint with no effect on results,
    # so it must not perturb the hash
    hashed = {k: (dict(v) if isinstance(v, dict) else v)
              for k, v in resolved.items()}
    hashed.get("ensemble", {}).pop("workers", None)
    blob = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ----------------------------------------------------------------------------
# CSV output

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    s = str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_csv_atomic(path: str, columns, rows, resolved: dict) -> None:
    """Write rows (dicts) with provenance columns, atomically."""
    meta = {"version": __version__, "config_hash": config_hash(resolved),
            "master_seed": resolved["ensemble"]["master_seed"],
            "n_samples": resolved["ensemble"]["samples"]}
    header = list(columns) + list(meta)
    lines = [",".join(header)]
    for row in rows:
        full = {**row, **meta}
        lines.append(",".join(_fmt(full[c]) for c in header))
    data = "\n".join(lines) + "\n"
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    with open(path + ".config.json", "w") as fh:
        json.dump({**resolved, "config_hash": meta["config_hash"]}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------------------
# subcommands

class Runner:
    """One estimator subcommand: parameter validation plus execution."""

    name: str = ""
    estimator_keys: set = set()
    needs_model = True

    def validate(self, est: dict, geo: dict, errors: list) -> None:
        _check_keys(est, self.estimator_keys, errors, "estimator")

    def run(self, model, geo, est, cfg: EnsembleConfig):
        """Returns (columns, rows, exit_code)."""
        raise NotImplementedError

    # shared helpers
    @staticmethod
    def _site(raw, d):
        if raw is None:
            return (0,) * d
        return (raw,) if isinstance(raw, int) else tuple(raw)


class SpectrumRunner(Runner):
    name = "spectrum"
    estimator_keys = {"trace_every"}

    def run(self, model, geo, est, cfg):
        box = model.box(geo.get("L", 20), geo.get("center"))
        hull = diagnostics.spectrum_union_estimate(model, box, cfg)
        every = est.get("trace_every", max(1, hull.n // 50))
        rows = []
        for i in range(0, hull.n, every):
            rows.append({"samples_seen": i + 1,
                         "running_min": float(hull.min_trace[i]),
                         "running_max": float(hull.max_trace[i])})
        rows.append({"samples_seen": hull.n, "running_min": hull.minimum,
                     "running_max": hull.maximum})
        return ["samples_seen", "running_min", "running_max"], rows, 0


class EnvelopeRunner(Runner):
    name = "envelope"
    estimator_keys = {"t_points"}

    def run(self, model, geo, est, cfg):
        box = model.box(geo.get("L", 20), geo.get("center"))
        ts = np.linspace(0.0, 1.0, int(est.get("t_points", 21)))
        sample = model.sample_for(box.sites(), sample_rng(cfg.master_seed, 0))
        env = diagnostics.spectrum_envelope(model, box, sample, ts)
        rows = [{"t": float(t), "min_eig": float(lo), "max_eig": float(hi),
                 "lipschitz_ok": env.lipschitz_ok}
                for t, lo, hi in zip(env.ts, env.minima, env.maxima)]
        return ["t", "min_eig", "max_eig", "lipschitz_ok"], rows, 0


class WegnerRunner(Runner):
    name = "wegner"
    estimator_keys = {"E", "eps_grid", "L_grid"}

    def validate(self, est, geo, errors):
        super().validate(est, geo, errors)
        if "eps_grid" not in est or not isinstance(est.get("eps_grid"), list):
            _err(errors, "estimator.eps_grid", "missing list of interval half-widths")

    def run(self, model, geo, est, cfg):
        E = float(est.get("E", 0.0))
        l_grid = [int(v) for v in est.get("L_grid", [geo.get("L", 20)])]
        rows = []
        for L in l_grid:
            for eps in est["eps_grid"]:
                wc = diagnostics.wegner_count(model, model.box(L), E, float(eps), cfg)
                rows.append({"E": E, "eps": float(eps), "L": L,
                             "mean_count": wc.count_mean,
                             "stderr": wc.count_stderr,
                             "hit_probability": wc.hit_probability})
        return ["E", "eps", "L", "mean_count", "stderr", "hit_probability"], rows, 0


class FracMomRunner(Runner):
    name = "fracmom"
    estimator_keys = {"z_re", "z_im", "s", "distances", "reduced_exponent"}

    def validate(self, est, geo, errors):
        super().validate(est, geo, errors)
        s = est.get("s")
        if not isinstance(s, (int, float)) or not 0 < s < 1:
            _err(errors, "estimator.s", "fractional exponent must be in (0, 1)")

    def run(self, model, geo, est, cfg):
        z = complex(float(est.get("z_re", 0.0)), float(est.get("z_im", 1.0)))
        L = geo.get("L", 20)
        distances = est.get("distances", list(range(0, L + 1, max(1, L // 10))))
        fit = diagnostics.frac_moment_decay_fit(
            model, z, float(est["s"]), L, distances, cfg,
            reduced_exponent=bool(est.get("reduced_exponent", False)))
        rows = [{"distance": r, "mean": m, "stderr": se, "used_in_fit": uu,
                 "rate": fit.rate, "prefactor": fit.prefactor,
                 "r_squared": fit.r_squared, "exponent": fit.exponent_used}
                for r, m, se, uu in zip(fit.distances, fit.means, fit.stderrs, fit.used)]
        cols = ["distance", "mean", "stderr", "used_in_fit", "rate",
                "prefactor", "r_squared", "exponent"]
        return cols, rows, 0


class FvcRunner(Runner):
    name = "fvc"
    estimator_keys = {"z_re", "z_im", "s", "L_inner", "x"}

    def validate(self, est, geo, errors):
        super().validate(est, geo, errors)
        if not isinstance(est.get("L_inner"), int):
            _err(errors, "estimator.L_inner", "missing inner scale (integer)")
        s = est.get("s")
        if not isinstance(s, (int, float)) or not 0 < s < 1:
            _err(errors, "estimator.s", "fractional exponent must be in (0, 1)")

    def run(self, model, geo, est, cfg):
        z = complex(float(est.get("z_re", 0.0)), float(est.get("z_im", 1.0)))
        box = model.box(geo.get("L", 20), geo.get("center"))
        x = self._site(est.get("x"), model.d)
        rep = diagnostics.finite_volume_sum(model, box, x, int(est["L_inner"]),
                                            z, float(est["s"]), cfg)
        row = {"raw_sum": rep.raw_sum, "raw_stderr": rep.raw_stderr,
               "criterion_product": rep.criterion_product,
               "collar_size": len(rep.collar),
               "boundary_size": len(rep.collar_boundary),
               "depleted_size": rep.depleted_size, "exponent": rep.exponent}
        return list(row), [row], 0


class RegularPairsRunner(Runner):
    name = "regular-pairs"
    estimator_keys = {"interval", "m"}

    def validate(self, est, geo, errors):
        super().validate(est, geo, errors)
        iv = est.get("interval")
        if not (isinstance(iv, list) and len(iv) == 2):
            _err(errors, "estimator.interval", "missing [a, b] energy interval")
        if "x" not in geo or "y" not in geo:
            _err(errors, "geometry", "regular-pairs needs both centers x and y")

    def run(self, model, geo, est, cfg):
        x = self._site(geo.get("x"), model.d)
        y = self._site(geo.get("y"), model.d)
        res = diagnostics.regular_pair_probability(
            model, est["interval"], float(est.get("m", 0.5)),
            geo.get("L", 8), x, y, cfg)
        row = {"probability": res.probability, "stderr": res.stderr,
               "uncertified": res.uncertified, "m": res.m, "L": res.L,
               "a": res.interval[0], "b": res.interval[1]}
        return list(row), [row], 0


class SuitabilityRunner(Runner):
    name = "suitability"
    estimator_keys = {"E", "gamma", "r_list"}

    def validate(self, est, geo, errors):
        super().validate(est, geo, errors)
        if not isinstance(est.get("r_list"), list):
            _err(errors, "estimator.r_list", "missing list of scales")

    def run(self, model, geo, est, cfg):
        ests = diagnostics.suitability_probability(
            model, float(est.get("E", 0.0)), float(est.get("gamma", 0.5)),
            est["r_list"], cfg)
        rows = [{"r": e.r, "p_bad": e.p_bad, "ci_lo": e.p_bad_ci[0],
                 "ci_hi": e.p_bad_ci[1], "p_good": e.p_good,
                 "threshold": e.threshold,
                 "bad_below_threshold": e.bad_below_threshold,
                 "good_below_threshold": e.good_below_threshold}
                for e in ests]
        cols = ["r", "p_bad", "ci_lo", "ci_hi", "p_good", "threshold",
                "bad_below_threshold", "good_below_threshold"]
        return cols, rows, 0


class DynlocRunner(Runner):
    name = "dynloc"
    estimator_keys = {"interval", "p", "t_grid", "x"}

    def run(self, model, geo, est, cfg):
        box = model.box(geo.get("L", 30), geo.get("center"))
        x = self._site(est.get("x"), model.d)
        iv = est.get("interval", [-1e6, 1e6])
        p = float(est.get("p", 2.0))
        ts = [float(t) for t in est.get("t_grid", [0.0, 1.0, 10.0, 100.0])]

        def task(rng):
            H = model.random_hamiltonian(box, rng)
            return diagnostics.dynamical_moment(H, x, iv, p, ts)

        from .ensemble import run_ensemble
        res = run_ensemble(task, cfg)
        rows = [{"t": t, "moment_mean": st.mean, "stderr": st.stderr, "p": p}
                for t, st in zip(ts, res.stats)]
        return ["t", "moment_mean", "stderr", "p"], rows, 0


class StoneRunner(Runner):
    name = "stone"
    estimator_keys = {"instances", "L_max"}

    def run(self, model, geo, est, cfg):
        n_inst = int(est.get("instances", 50))
        l_max = int(est.get("L_max", 9))
        rows, worst = [], 0
        for i in range(n_inst):
            rng = sample_rng(cfg.master_seed, i)
            L = int(rng.integers(0, l_max + 1))
            H = model.random_hamiltonian(model.box(L), rng)
            scale = H.norm_bound + 1.0
            a = float(rng.uniform(-scale, scale))
            b = a + float(rng.uniform(0.05, 1.0))
            eps = float(rng.uniform(0.01, 1.0)) * (b - a)
            x = H.sites[int(rng.integers(0, H.n))]
            rep = diagnostics.stone_inequality_check(H, x, a, b, eps)
            rows.append({"instance": i, "L": L, "a": a, "b": b, "eps": eps,
                         "lhs": rep.lhs, "rhs": rep.rhs, "margin": rep.margin,
                         "error": rep.error, "pass": rep.passed})
            worst += 0 if rep.passed else 1
        cols = ["instance", "L", "a", "b", "eps", "lhs", "rhs", "margin",
                "error", "pass"]
        return cols, rows, 4 if worst else 0


def _random_inequality_instance(rng: np.random.Generator, family: str):
    """One randomized instance of a deterministic averaging inequality."""
    if family == "polya":
        deg = int(rng.integers(1, 9))
        roots = rng.uniform(-2, 2, deg)
        P = polyavg.MonicPolynomial.from_roots(roots)
        alpha = 10.0 ** rng.uniform(-4, 0)
        return polyavg.polya_sublevel_measure(P, alpha), \
            {"family": family, "degree": deg, "alpha": alpha,
             "roots": roots.tolist()}
    if family == "fracint":
        deg = int(rng.integers(1, 9))
        roots = rng.uniform(-2, 2, deg)
        P = polyavg.MonicPolynomial.from_roots(roots)
        s = float(rng.uniform(0.1, 0.9))
        rho = DisorderSpec.uniform(-1.0, 1.0)
        return polyavg.polynomial_fractional_integral(P, rho, s), \
            {"family": family, "degree": deg, "s": s, "roots": roots.tolist()}
    if family == "detavg":
        n = int(rng.integers(1, 7))
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        V = np.diag(rng.choice([-1, 1], n) * rng.uniform(0.5, 2.0, n))
        s = float(rng.uniform(0.1, 0.9))
        rho = DisorderSpec.uniform(0.0, 1.0)
        return polyavg.determinant_average(A, V, rho, s), \
            {"family": family, "n": n, "s": s}
    if family == "invnorm":
        n = int(rng.integers(1, 7))
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        V = np.diag(rng.choice([-1, 1], n) * rng.uniform(0.5, 2.0, n))
        s = float(rng.uniform(0.1, 0.9))
        R = float(rng.uniform(0.5, 2.0))
        return polyavg.inverse_norm_average(A, V, s, R), \
            {"family": family, "n": n, "s": s, "R": R}
    if family == "cartan":
        deg = int(rng.integers(1, 5))
        while True:
            roots = rng.uniform(-1, 1, deg)
            if np.abs(roots).min() >= 0.05:
                break
        coeffs = np.polynomial.polynomial.polyfromroots(roots) / (4.0 * math.e) ** deg
        eps = float(abs(coeffs[0]))
        s = float(rng.uniform(0.1, 5.0))
        return polyavg.cartan_disc(coeffs, eps, s), \
            {"family": family, "degree": deg, "s": s, "eps": eps,
             "roots": roots.tolist()}
    raise ValueError(f"unknown inequality family {family!r}")


VERIFY_FAMILIES = ("polya", "fracint", "detavg", "invnorm", "cartan")


class VerifyBoundsRunner(Runner):
    name = "verify-bounds"
    estimator_keys = {"instances", "families"}
    needs_model = False

    def run(self, model, geo, est, cfg):
        families = est.get("families", list(VERIFY_FAMILIES))
        n_inst = int(est.get("instances", 40))
        rows, failing = [], []
        idx = 0
        for family in families:
            for _ in range(n_inst):
                rng = sample_rng(cfg.master_seed, idx)
                rep, params = _random_inequality_instance(rng, family)
                h = hashlib.sha1(json.dumps(params, sort_keys=True,
                                            default=str).encode()).hexdigest()[:12]
                rows.append({"instance": h, "family": family, "lhs": rep.lhs,
                             "rhs": rep.rhs, "margin": rep.margin,
                             "error": rep.error,
                             "hypotheses_met": rep.hypotheses_met,
                             "pass": rep.passed})
                if not rep.passed:
                    failing.append({"instance": h, **params,
                                    "lhs": rep.lhs, "rhs": rep.rhs})
                idx += 1
        cols = ["instance", "family", "lhs", "rhs", "margin", "error",
                "hypotheses_met", "pass"]
        return cols, rows, (4, failing) if failing else 0


SUBCOMMANDS: dict[str, Runner] = {r.name: r for r in [
    SpectrumRunner(), EnvelopeRunner(), WegnerRunner(), FracMomRunner(),
    FvcRunner(), RegularPairsRunner(), SuitabilityRunner(), DynlocRunner(),
    StoneRunner(), VerifyBoundsRunner()]}


# ----------------------------------------------------------------------------
# entry point

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="alloylab",
        description="Finite-volume diagnostics for alloy-type random operators")
    parser.add_argument("subcommand", choices=sorted(SUBCOMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--samples", type=int, default=None, help="sample count override")
    parser.add_argument("--workers", type=int, default=None, help="parallelism hint")
    parser.add_argument("--out", default=None, help="output CSV path override")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2

    try:
        resolved, model, geo, est, ens = parse_config(text, args.subcommand)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2

    if args.seed is not None:
        ens["master_seed"] = args.seed
    if args.samples is not None:
        ens["samples"] = args.samples
    if args.workers is not None:
        ens["workers"] = args.workers
    resolved["ensemble"] = ens
    out_path = args.out or resolved.get("output", {}).get("path")
    if not out_path:
        print("config error: output.path (or --out) is required", file=sys.stderr)
        return 2

    runner = SUBCOMMANDS[args.subcommand]
    if runner.needs_model and model is None:
        print("config error: model block is required for this subcommand",
              file=sys.stderr)
        return 2
    cfg = EnsembleConfig(ens["samples"], ens["master_seed"], ens["workers"],
                         ens["failure_policy"])
    try:
        cols, rows, code = runner.run(model, geo, est, cfg)
    except (EnsembleAbort, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    failing = None
    if isinstance(code, tuple):
        code, failing = code
    write_csv_atomic(out_path, cols, rows, resolved)
    if failing:
        with open(out_path + ".fail.json", "w") as fh:
            json.dump(failing, fh, indent=2, default=str)
        print(f"{len(failing)} inequality instance(s) FAILED; "
              f"serialized to {out_path}.fail.json", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
