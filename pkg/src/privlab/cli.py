"""Command line front end.

Every subcommand compiles its flags into one JSON-serialisable config
(flags override --config file entries, unknown config keys are rejected),
runs deterministically from --seed, and emits a run report as JSON or CSV.
Exit codes: 2 for invalid configs or values, 3 for violated invariants,
4 for I/O failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .css_codes import CssCode, sample_universal_css, universality_estimate
from .distillation import (build_css_decoders, coherent_hashing_sim,
                           distillable_rate, one_shot_distill,
                           shielded_bit_state, tensor_power_grouped,
                           two_copy_scenario)
from .info_measures import uncertainty_audit
from .privacy import (PrivacyReport, certify_private, epsilon_secret_direct,
                      twisting_conjugate_measurement,
                      uhlmann_conjugate_measurement)
from .qudit_ops import (ConjugateBasis, Povm, TwistingOperator,
                        build_private_state, maximally_entangled)
from .sampling import haar_unitary, haar_vector, random_pure_state, substream
from .tensor_core import (DensityOperator, HilbertSpace, InvariantViolation,
                          StateVector)

STATE_KINDS = {
    "bell": {"d"},
    "bell_power": {"d", "n"},
    "werner": {"d", "p"},
    "twisted": {"d", "shield_dim"},
    "shielded_bit": {"s", "shield_dim"},
    "inline": {"dims", "labels", "amps"},
    "file": {"path"},
}

CODE_KINDS = {
    "explicit": {"d", "n", "mz_rows", "mx_rows"},
    "sampled": {"d", "n", "m_z", "m_x"},
    "two_copy": {"stabilizer"},
}


def _threads() -> int:
    raw = os.environ.get("PRIVLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"PRIVLAB_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def _check_keys(spec: Mapping, allowed: set, what: str) -> None:
    unknown = sorted(set(spec) - allowed)
    if unknown:
        raise ValueError(f"unknown {what} keys {unknown}; allowed: {sorted(allowed)}")


def _shield_pair(s: float, shield_dim: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 <= s <= 1.0:
        raise ValueError("shield overlap must lie in [0, 1]")
    if shield_dim < 2:
        raise ValueError("shield needs dimension at least 2")
    phi0 = np.zeros(shield_dim, dtype=np.complex128)
    phi0[0] = 1.0
    phi1 = np.zeros(shield_dim, dtype=np.complex128)
    phi1[0] = s
    phi1[1] = math.sqrt(max(1.0 - s * s, 0.0))
    return phi0, phi1


def build_state(spec: Mapping, seed: int):
    """Build the state named by a spec dict; returns (state, extras)."""
    if not isinstance(spec, Mapping) or "kind" not in spec:
        raise ValueError("state spec must be an object with a 'kind' entry")
    kind = spec["kind"]
    if kind not in STATE_KINDS:
        raise ValueError(f"unknown state kind {kind!r}; "
                         f"choose from {sorted(STATE_KINDS)}")
    _check_keys({k: v for k, v in spec.items() if k != "kind"},
                STATE_KINDS[kind], f"state[{kind}]")
    extras: dict = {}
    if kind == "bell":
        return maximally_entangled(int(spec.get("d", 2))), extras
    if kind == "bell_power":
        return tensor_power_grouped(maximally_entangled(int(spec.get("d", 2))),
                                    int(spec.get("n", 1))), extras
    if kind == "werner":
        d = int(spec.get("d", 2))
        p = float(spec.get("p", 1.0))
        if not 0.0 <= p <= 1.0:
            raise ValueError("werner weight must lie in [0, 1]")
        phi = maximally_entangled(d).density()
        mat = p * phi.matrix + (1.0 - p) * np.eye(d * d) / (d * d)
        return DensityOperator(phi.space, mat), extras
    if kind == "twisted":
        d = int(spec.get("d", 2))
        sh = int(spec.get("shield_dim", 2))
        space = HilbertSpace((d, d, sh), ("A", "B", "S"))
        blocks = {(j, k): haar_unitary(sh, substream(seed, 1 + j * d + k))
                  for j in range(d) for k in range(d)}
        t = TwistingOperator(space, blocks)
        xi_space = HilbertSpace((sh,), ("S",))
        xi = StateVector(xi_space, haar_vector(sh, substream(seed, 0)))
        extras["twisting"] = t
        return build_private_state(d, t, xi), extras
    if kind == "shielded_bit":
        phi0, phi1 = _shield_pair(float(spec.get("s", 0.6)),
                                  int(spec.get("shield_dim", 2)))
        extras["shields"] = (phi0, phi1)
        return shielded_bit_state(phi0, phi1), extras
    if kind == "inline":
        return _inline_state(spec), extras
    path = spec.get("path")
    if not path:
        raise ValueError("file state spec needs a 'path'")
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    _check_keys({k: v for k, v in payload.items()},
                STATE_KINDS["inline"], "state[file]")
    return _inline_state(payload), extras


def _inline_state(spec: Mapping) -> StateVector:
    dims = tuple(int(v) for v in spec.get("dims", ()))
    labels = tuple(str(v) for v in spec.get("labels", ()))
    raw = spec.get("amps")
    if not dims or not labels or raw is None:
        raise ValueError("inline state needs dims, labels and amps")
    pairs = np.asarray(raw, dtype=np.float64)
    if pairs.ndim == 1 and pairs.size % 2 == 0:
        pairs = pairs.reshape(-1, 2)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("amps must be (re, im) pairs in row-major register order")
    amps = pairs[:, 0] + 1j * pairs[:, 1]
    return StateVector(HilbertSpace(dims, labels), amps)


def build_code(spec: Mapping, seed: int) -> CssCode:
    if not isinstance(spec, Mapping) or "kind" not in spec:
        raise ValueError("code spec must be an object with a 'kind' entry")
    kind = spec["kind"]
    if kind not in CODE_KINDS:
        raise ValueError(f"unknown code kind {kind!r}; "
                         f"choose from {sorted(CODE_KINDS)}")
    _check_keys({k: v for k, v in spec.items() if k != "kind"},
                CODE_KINDS[kind], f"code[{kind}]")
    if kind == "explicit":
        d = int(spec.get("d", 2))
        n = int(spec["n"])
        return CssCode.from_stabilizers(d, spec.get("mz_rows", []),
                                        spec.get("mx_rows", []), n=n)
    if kind == "sampled":
        return sample_universal_css(int(spec.get("d", 2)), int(spec["n"]),
                                    int(spec.get("m_z", 0)), int(spec.get("m_x", 0)),
                                    substream(seed, 90))
    raise ValueError("two_copy codes are driven through the distill command")


def _rows_arg(text: str) -> list[list[int]]:
    rows = []
    for part in text.split(";"):
        part = part.strip()
        if part:
            rows.append([int(v) for v in part.replace(",", " ").split()])
    return rows


# ---------------------------------------------------------------------------
# subcommands


def cmd_rates(cfg: Mapping, seed: int):
    _check_keys(cfg, {"state"}, "rates")
    state, _ = build_state(cfg.get("state", {"kind": "bell"}), seed)
    rb = distillable_rate(state)
    results = dataclasses.asdict(rb)
    return results, [results]


def cmd_verify(cfg: Mapping, seed: int):
    _check_keys(cfg, {"state", "measurement", "soundness_margin"}, "verify")
    state, extras = build_state(cfg.get("state", {"kind": "bell"}), seed)
    meas = cfg.get("measurement", "projective")
    margin = float(cfg.get("soundness_margin", 1e-6))
    if meas == "projective":
        report = certify_private(state, soundness_margin=margin)
        extra_out = {}
    elif meas == "twisting":
        t = extras.get("twisting")
        if t is None:
            raise ValueError("twisting verification needs a twisted state")
        d = state.space.dim_of("A")
        povm = twisting_conjugate_measurement(t, ConjugateBasis.fourier(d))
        report = certify_private(state, conj_povm=povm, povm_labels=("B", "S"),
                                 soundness_margin=margin,
                                 measurement_name="twisting_conjugate")
        extra_out = {}
    elif meas == "uhlmann":
        rec = uhlmann_conjugate_measurement(state)
        eps_cert = rec.p_e + math.sqrt(rec.p_tilde_e)
        eps_direct = epsilon_secret_direct(state)
        if eps_direct > eps_cert + margin:
            raise InvariantViolation(
                f"direct distance {eps_direct:.6e} exceeds certified bound "
                f"{eps_cert:.6e} + margin {margin:g}")
        report = PrivacyReport(p_e=rec.p_e, p_tilde_e=rec.p_tilde_e,
                               eps_certified=eps_cert, eps_direct=eps_direct,
                               measurement_used="uhlmann_partner")
        extra_out = {"fidelity": rec.fidelity, "bound": rec.bound,
                     "pad_dim": rec.pad_dim}
    else:
        raise ValueError(f"unknown measurement {meas!r} "
                         "(use projective, twisting or uhlmann)")
    results = dataclasses.asdict(report)
    results.update(extra_out)
    return results, [results]


def cmd_distill(cfg: Mapping, seed: int):
    _check_keys(cfg, {"state", "code", "adaptive"}, "distill")
    code_spec = cfg.get("code", {"kind": "two_copy"})
    adaptive = bool(cfg.get("adaptive", True))
    if isinstance(code_spec, Mapping) and code_spec.get("kind") == "two_copy":
        _check_keys({k: v for k, v in code_spec.items() if k != "kind"},
                    CODE_KINDS["two_copy"], "code[two_copy]")
        state_spec = cfg.get("state", {"kind": "shielded_bit"})
        if state_spec.get("kind") != "shielded_bit":
            raise ValueError("two_copy distillation needs a shielded_bit state")
        _, extras = build_state(state_spec, seed)
        phi0, phi1 = extras["shields"]
        sc = two_copy_scenario(phi0, phi1,
                               code_spec.get("stabilizer", "XX"), adaptive)
        outcome = one_shot_distill(sc.state, sc.code, sc.key_decoders,
                                   sc.conj_decoders)
        results = dict(outcome.transcript)
        results.update({"key_dim": outcome.key_dims[0],
                        "scenario_error": sc.error_prob,
                        "scenario_analytic_error": sc.analytic_error,
                        "stabilizer": sc.stabilizer, "adaptive": sc.adaptive})
        return results, [results]
    state, _ = build_state(cfg.get("state", {"kind": "bell"}), seed)
    code = build_code(code_spec, seed)
    decs = build_css_decoders(state, code)
    outcome = one_shot_distill(state, code, decs.key_decoders, decs.conj_decoders)
    results = dict(outcome.transcript)
    results["key_dim"] = outcome.key_dims[0]
    return results, [results]


def cmd_hashing_sim(cfg: Mapping, seed: int):
    _check_keys(cfg, {"state", "n", "code"}, "hashing-sim")
    state, _ = build_state(cfg.get("state", {"kind": "bell"}), seed)
    n = int(cfg.get("n", 1))
    code_spec = dict(cfg.get("code", {"kind": "explicit", "n": n}))
    code = build_code(code_spec, seed)
    res = coherent_hashing_sim(state, n, code)
    results = dataclasses.asdict(res)
    return results, [results]


def cmd_css(cfg: Mapping, seed: int):
    _check_keys(cfg, {"mode", "d", "n", "m_z", "m_x", "count", "m",
                      "row_slice", "trials"}, "css")
    mode = cfg.get("mode", "sample")
    d = int(cfg.get("d", 2))
    n = int(cfg.get("n", 3))
    if mode == "sample":
        count = int(cfg.get("count", 1))
        m_z, m_x = int(cfg.get("m_z", 1)), int(cfg.get("m_x", 1))
        rows = []
        for i in range(count):
            code = sample_universal_css(d, n, m_z, m_x, substream(seed, i))
            rows.append({"index": i, "d": d, "n": n, "m_z": m_z, "m_x": m_x,
                         "mz_rows": json.dumps(code.mz.entries.tolist()),
                         "mx_rows": json.dumps(code.mx.entries.tolist()),
                         "logical_z": json.dumps(code.logical_z.entries.tolist()),
                         "logical_x": json.dumps(code.logical_x.entries.tolist())})
        return {"codes": rows}, rows
    if mode == "universality":
        est = universality_estimate(d, n, int(cfg.get("m", 1)),
                                    str(cfg.get("row_slice", "z")),
                                    trials=int(cfg.get("trials", 10_000)),
                                    rng=substream(seed, 0),
                                    m_other=int(cfg.get("m_x", 0)))
        results = {"collision_rate": est.collision_rate,
                   "std_error": est.std_error, "trials": est.trials,
                   "reference": est.reference,
                   "strings": json.dumps([list(s) for s in est.strings])}
        return results, [results]
    raise ValueError(f"unknown css mode {mode!r} (use sample or universality)")


def cmd_uncertainty(cfg: Mapping, seed: int):
    _check_keys(cfg, {"mode", "d", "trials"}, "uncertainty")
    mode = str(cfg.get("mode", "maassen_uffink"))
    d = int(cfg.get("d", 2))
    trials = int(cfg.get("trials", 100))
    if trials < 1:
        raise ValueError("need at least one trial")

    def one(i: int):
        rng = substream(seed, i)
        if mode == "maassen_uffink":
            space = HilbertSpace((d, d), ("A", "K"))
            state = random_pure_state(space, rng).marginal(("A",))
            return uncertainty_audit(mode, state)
        space = HilbertSpace((d, d, d), ("A", "B", "E"))
        state = random_pure_state(space, rng)
        if mode == "quantum_cit":
            return uncertainty_audit(mode, state)
        zw = Povm.projective_from_columns(haar_unitary(d, substream(seed, 10_000 + i)))
        xw = Povm.projective_from_columns(haar_unitary(d, substream(seed, 20_000 + i)))
        return uncertainty_audit(mode, state, z_witness=(("E",), zw),
                                 x_witness=(("B",), xw))

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        records = list(pool.map(one, range(trials)))
    slacks = np.array([r.slack for r in records])
    worst = int(np.argmin(slacks))
    results = {"mode": mode, "d": d, "trials": trials,
               "min_slack": float(slacks.min()), "mean_slack": float(slacks.mean()),
               "rhs": records[0].rhs,
               "worst_lhs_terms": list(records[worst].lhs_terms)}
    return results, [results]


def cmd_appd(cfg: Mapping, seed: int):
    _check_keys(cfg, {"s", "stabilizer"}, "appd")
    raw = cfg.get("s", 0.6)
    grid = [float(v) for v in (raw if isinstance(raw, (list, tuple)) else [raw])]
    stab = str(cfg.get("stabilizer", "XX"))

    def one(s: float):
        phi0, phi1 = _shield_pair(s, 2)
        ad = two_copy_scenario(phi0, phi1, stab, adaptive=True)
        na = two_copy_scenario(phi0, phi1, stab, adaptive=False)
        return {"s": s, "adaptive_error": ad.error_prob,
                "adaptive_analytic": ad.analytic_error,
                "nonadaptive_error": na.error_prob,
                "nonadaptive_analytic": na.analytic_error}

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(one, grid))
    return {"stabilizer": stab, "sweep": rows}, rows


COMMANDS = {
    "rates": cmd_rates,
    "verify": cmd_verify,
    "distill": cmd_distill,
    "hashing-sim": cmd_hashing_sim,
    "css": cmd_css,
    "uncertainty": cmd_uncertainty,
    "appd": cmd_appd,
}


# ---------------------------------------------------------------------------
# config plumbing and output


def _pyify(value):
    if isinstance(value, Mapping):
        return {str(k): _pyify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_pyify(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_pyify(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    return value


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "%.17g" % value
    text = str(value)
    if any(c in text for c in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _render(report: dict, fmt: str, rows: list[dict]) -> str:
    if fmt == "json":
        return json.dumps(_pyify(report), sort_keys=True, indent=2) + "\n"
    if not rows:
        raise ValueError("this command produced no rows for CSV output")
    rows = [_pyify(r) for r in rows]
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_csv_cell(row.get(c, "")) for c in cols))
    return "\n".join(lines) + "\n"


def _write_atomic(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(prefix=".privlab-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _merge_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError("--config must hold a JSON object")
        cfg.update(loaded)
    for key, value in (args.overrides or {}).items():
        if value is not None:
            cfg[key] = value
    return cfg


def _state_from_flags(args) -> dict | None:
    if getattr(args, "state", None) is None:
        return None
    spec: dict = {"kind": args.state}
    allowed = STATE_KINDS.get(args.state, set())
    for flag, key in (("d", "d"), ("copies", "n"), ("p", "p"), ("s", "s"),
                      ("shield_dim", "shield_dim"), ("state_file", "path")):
        value = getattr(args, flag, None)
        if value is None:
            continue
        if key not in allowed:
            raise ValueError(f"flag --{flag.replace('_', '-')} does not apply "
                             f"to {args.state} states")
        spec[key] = value
    return spec


def _code_from_flags(args) -> dict | None:
    kind = getattr(args, "code_kind", None)
    if kind is None:
        return None
    spec: dict = {"kind": kind}
    for flag, key in (("code_d", "d"), ("code_n", "n"), ("m_z", "m_z"),
                      ("m_x", "m_x"), ("stabilizer", "stabilizer")):
        value = getattr(args, flag, None)
        if value is not None and key in CODE_KINDS.get(kind, set()):
            spec[key] = value
    if kind == "explicit":
        if getattr(args, "mz_rows", None) is not None:
            spec["mz_rows"] = _rows_arg(args.mz_rows)
        if getattr(args, "mx_rows", None) is not None:
            spec["mx_rows"] = _rows_arg(args.mx_rows)
    return spec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privlab",
        description="Private-state toolbox: rates, certification, "
                    "distillation and code sampling.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_state=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=7, help="master RNG seed")
        p.add_argument("--out", help="output path (atomic write)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        if with_state:
            p.add_argument("--state", choices=sorted(STATE_KINDS))
            p.add_argument("--d", type=int)
            p.add_argument("--copies", type=int, help="n for bell_power states")
            p.add_argument("--p", type=float, help="werner weight")
            p.add_argument("--s", type=float, help="shield overlap")
            p.add_argument("--shield-dim", dest="shield_dim", type=int)
            p.add_argument("--state-file", dest="state_file",
                           help="path for file states")

    def code_flags(p: argparse.ArgumentParser):
        p.add_argument("--code-kind", choices=sorted(CODE_KINDS))
        p.add_argument("--code-d", type=int)
        p.add_argument("--code-n", type=int)
        p.add_argument("--m-z", dest="m_z", type=int)
        p.add_argument("--m-x", dest="m_x", type=int)
        p.add_argument("--mz-rows", dest="mz_rows",
                       help="semicolon-separated rows, e.g. '1 1 0; 0 1 1'")
        p.add_argument("--mx-rows", dest="mx_rows")
        p.add_argument("--stabilizer", choices=("XX", "XI", "IX"))

    p = sub.add_parser("rates", help="one-way key rate breakdown")
    common(p, with_state=True)

    p = sub.add_parser("verify", help="certify a state as an approximate private state")
    common(p, with_state=True)
    p.add_argument("--measurement", choices=("projective", "twisting", "uhlmann"))
    p.add_argument("--soundness-margin", dest="soundness_margin", type=float)

    p = sub.add_parser("distill", help="run the certified one-shot protocol")
    common(p, with_state=True)
    code_flags(p)
    p.add_argument("--adaptive", dest="adaptive", action="store_true", default=None)
    p.add_argument("--no-adaptive", dest="adaptive", action="store_false")

    p = sub.add_parser("hashing-sim", help="coherent hashing chain on n copies")
    common(p, with_state=True)
    code_flags(p)
    p.add_argument("--n", type=int, help="number of copies")

    p = sub.add_parser("css", help="sample codes or estimate two-universality")
    common(p)
    p.add_argument("--mode", choices=("sample", "universality"))
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m-z", dest="m_z", type=int)
    p.add_argument("--m-x", dest="m_x", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--row-slice", dest="row_slice", choices=("z", "x"))
    p.add_argument("--trials", type=int)

    p = sub.add_parser("uncertainty", help="audit entropic uncertainty relations")
    common(p)
    p.add_argument("--mode", choices=("maassen_uffink", "cit", "quantum_cit"))
    p.add_argument("--d", type=int)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("appd", help="two-copy scenario error sweep")
    common(p)
    p.add_argument("--s", type=float, action="append",
                   help="shield overlap (repeatable for a sweep)")
    p.add_argument("--stabilizer", choices=("XX", "XI", "IX"))
    return parser


def _collect_overrides(args: argparse.Namespace) -> dict:
    over: dict = {}
    state = _state_from_flags(args)
    if state is not None:
        over["state"] = state
    code = _code_from_flags(args)
    if code is not None:
        over["code"] = code
    if args.command == "verify":
        over["measurement"] = getattr(args, "measurement", None)
        over["soundness_margin"] = getattr(args, "soundness_margin", None)
    if args.command == "distill":
        over["adaptive"] = getattr(args, "adaptive", None)
    if args.command == "hashing-sim":
        over["n"] = getattr(args, "n", None)
    if args.command == "css":
        for key in ("mode", "d", "n", "m_z", "m_x", "count", "m",
                    "row_slice", "trials"):
            over[key] = getattr(args, key, None)
    if args.command == "uncertainty":
        for key in ("mode", "d", "trials"):
            over[key] = getattr(args, key, None)
    if args.command == "appd":
        over["s"] = getattr(args, "s", None)
        over["stabilizer"] = getattr(args, "stabilizer", None)
    return {k: v for k, v in over.items() if v is not None}


def run(argv: Sequence[str] | None = None) -> str:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.overrides = _collect_overrides(args)
    cfg = _merge_config(args)
    start = time.perf_counter()
    results, rows = COMMANDS[args.command](cfg, int(args.seed))
    report = {"command": args.command, "config": _pyify(cfg),
              "seed": int(args.seed), "version": __version__,
              "results": _pyify(results),
              "wall_time_s": time.perf_counter() - start}
    text = _render(report, args.format, rows)
    _write_atomic(text, args.out)
    return text


def main(argv: Sequence[str] | None = None) -> int:
    try:
        run(argv)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, KeyError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
