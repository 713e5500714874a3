"""Experiment orchestration: validated configs in, :class:`ExperimentReport` out.

A config is a JSON object.  Common keys:

``experiment``
    One of :data:`KINDS`.
``model`` / ``models``
    A model reference (file path, relative to the config file, or an inline
    model object), or a mapping from display names to references.
``seed``, ``epsilon``, ``trials``, ``n_grid``, ``schemes``, ``out``, ``format``

Kind-specific keys are documented on each runner.  Everything is validated
by :func:`validate_config` before any computation starts.
"""

from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np

from ergolab import seeds
from ergolab.core import empirical_block_arrays, l1_distance_arrays
from ergolab.entropy import conditional_block_entropy, relative_smb_set, smb_trajectory
from ergolab.errors import AtypicalColumnError, ErgolabError, ValidationError
from ergolab.models import JointModel, ProductModel, load_model
from ergolab.recode import HeightCodebook, compute_M, decode_path, detect_bases, marker_period, recode_path
from ergolab.reports import ExperimentReport, Row, Verdict
from ergolab.schemes import SchemeDescriptor, convergence_report
from ergolab.towers import extract_columns, kakutani_decompose, rohlin_tower
from ergolab.transplant import IdentityConditional, ProductConditional, TransplantParams, transplant_blocks

KINDS = (
    "entropy-convergence", "indistinguishability", "smb", "relative-smb",
    "recode-roundtrip", "transplant", "decompose",
)
ENTROPY_SCHEMES = ("plugin", "lz78", "returntime")


class AllRowsFailed(ErgolabError):
    """Every row of an experiment raised a computational error."""


# --------------------------------------------------------------------------
# validation


def _require(cond, message):
    if not cond:
        raise ValidationError(message)


def _int(cfg, key, default=None, minimum=None):
    value = cfg.get(key, default)
    _require(value is not None, f"config needs '{key}'")
    _require(isinstance(value, int) and not isinstance(value, bool), f"'{key}' must be an integer")
    if minimum is not None:
        _require(value >= minimum, f"'{key}' must be at least {minimum}")
    return value


def _float(cfg, key, default=None, positive=True):
    value = cfg.get(key, default)
    _require(value is not None, f"config needs '{key}'")
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), f"'{key}' must be a number")
    value = float(value)
    _require(math.isfinite(value), f"'{key}' must be finite")
    if positive:
        _require(value > 0, f"'{key}' must be positive")
    return value


def _model_refs(cfg) -> dict:
    _require(not ("model" in cfg and "models" in cfg), "give either 'model' or 'models', not both")
    if "models" in cfg:
        refs = cfg["models"]
        _require(isinstance(refs, dict) and refs, "'models' must be a non-empty object")
        return dict(refs)
    _require("model" in cfg, "config needs 'model' or 'models'")
    ref = cfg["model"]
    if isinstance(ref, dict):
        return {ref.get("name", ref.get("kind", "model")): ref}
    return {Path(str(ref)).stem: ref}


def _load(ref, base_dir):
    if isinstance(ref, dict):
        return load_model({k: v for k, v in ref.items() if k != "name"})
    path = Path(str(ref))
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    _require(path.exists(), f"model file {path} does not exist")
    return load_model(str(path))


def validate_config(cfg: dict, base_dir=None) -> dict:
    """Check a config and resolve its models; returns a normalized plan.

    Raises :class:`ValidationError` for every violated precondition.
    """
    _require(isinstance(cfg, dict), "config must be a JSON object")
    kind = cfg.get("experiment")
    _require(kind in KINDS, f"'experiment' must be one of {', '.join(KINDS)}")
    plan = {"kind": kind, "seed": _int(cfg, "seed", 0, 0)}
    _require(plan["seed"] < 1 << 64, "'seed' must fit in 64 bits")
    models = {name: _load(ref, base_dir) for name, ref in _model_refs(cfg).items()}
    plan["models"] = models

    if kind in ("entropy-convergence", "indistinguishability"):
        names = cfg.get("schemes", list(ENTROPY_SCHEMES))
        _require(isinstance(names, list) and names, "'schemes' must be a non-empty list")
        plan["schemes"] = [SchemeDescriptor.parse(str(s)) for s in names]
        grid = cfg.get("n_grid")
        _require(isinstance(grid, list) and grid, "'n_grid' must be a non-empty list of lengths")
        _require(all(isinstance(n, int) and n >= 1 for n in grid), "'n_grid' entries must be positive integers")
        _require(all(b > a for a, b in zip(grid, grid[1:])), "'n_grid' must be strictly increasing")
        for s in plan["schemes"]:
            _require(grid[0] >= s.min_length(), f"{s.name} needs lengths of at least {s.min_length()}")
        plan["n_grid"] = grid
        plan["trials"] = _int(cfg, "trials", 10, 10)
        plan["epsilon"] = _float(cfg, "epsilon", 0.05)
        plan["min_fraction"] = _float(cfg, "min_fraction", 0.9)
        tol = cfg.get("tolerance", {})
        _require(isinstance(tol, (dict, int, float)), "'tolerance' must be a number or an object")
        plan["tolerance"] = tol
        if kind == "indistinguishability":
            _require(len(models) >= 2, "indistinguishability needs at least two models")
            plan["agreement"] = _float(cfg, "agreement", 0.05)
            plan["separation"] = _float(cfg, "separation", 0.15)
            plan["freq_tolerance"] = _float(cfg, "freq_tolerance", 0.005)
            zb = cfg.get("zero_bound")
            plan["zero_bound"] = None if zb is None else _float(cfg, "zero_bound")
    elif kind == "smb":
        plan["length"] = _int(cfg, "length", None, 1)
        plan["trials"] = _int(cfg, "trials", 50, 1)
        plan["epsilon"] = _float(cfg, "epsilon", 0.05)
        plan["min_fraction"] = _float(cfg, "min_fraction", 0.96)
    elif kind == "relative-smb":
        for m in models.values():
            _require(isinstance(m, JointModel), "relative-smb needs a joint model")
        grid = cfg.get("n_grid", [cfg.get("length", 8)])
        _require(isinstance(grid, list) and all(isinstance(n, int) and n >= 1 for n in grid),
                 "'n_grid' must list positive block lengths")
        plan["n_grid"] = grid
        plan["epsilon"] = _float(cfg, "epsilon", 0.3)
        mc = cfg.get("min_coverage")
        plan["min_coverage"] = None if mc is None else _float(cfg, "min_coverage")
    elif kind == "recode-roundtrip":
        for m in models.values():
            _require(isinstance(m, JointModel), "recode-roundtrip needs a joint model")
        heights = cfg.get("heights", [32, 64])
        _require(isinstance(heights, list) and heights and all(isinstance(h, int) and h > 0 for h in heights),
                 "'heights' must list positive tower heights")
        plan["heights"] = heights
        plan["epsilon"] = _float(cfg, "epsilon", 0.15)
        _require(plan["epsilon"] < 1, "'epsilon' must lie in (0, 1)")
        plan["k"] = _int(cfg, "k", 16, 2)
        plan["length"] = _int(cfg, "length", 1 << 14, 1)
        plan["tower_gap"] = _float(cfg, "tower_gap", 0.05)
        for h in heights:
            _require(h <= plan["tower_gap"] * plan["length"],
                     f"height {h} exceeds tower_gap * length = {plan['tower_gap'] * plan['length']}")
        plan["typical_length"] = _int(cfg, "typical_length", 8, 1)
        for m in models.values():
            for h in heights:
                s, t = typical_rates(m, min(h, plan["typical_length"]))
                _require(math.log2(plan["k"]) > t, f"log2 k = {math.log2(plan['k'])} must exceed the rate {t}")
                M, _ = compute_M(h, t, s, plan["k"], plan["epsilon"])
                m_period = marker_period(plan["epsilon"])
                _require(2 * m_period + 1 < M,
                         f"height {h} gives M = {M}, no room above the {2 * m_period}-level marker run")
    elif kind == "transplant":
        plan["length"] = _int(cfg, "length", None, 1)
        plan["tower_height"] = _int(cfg, "tower_height", 4096, 1)
        plan["block_length"] = _int(cfg, "block_length", 6, 1)
        plan["delta"] = _float(cfg, "delta", 0.05)
        plan["tower_gap"] = _float(cfg, "tower_gap", 0.05)
        plan["conditional"] = cfg.get("conditional", "product")
        _require(plan["conditional"] in ("product", "identity"), "'conditional' must be 'product' or 'identity'")
        beta = cfg.get("beta")
        L, N = plan["tower_height"], plan["block_length"]
        plan["beta"] = 16.0 * N / L if beta is None else _float(cfg, "beta")
        TransplantParams(N, plan["delta"], L, plan["beta"])
        _require(L <= plan["tower_gap"] * plan["length"], "tower_height exceeds tower_gap * length")
        if plan["conditional"] == "product":
            for m in models.values():
                _require(isinstance(m, ProductModel), "a product conditional needs a product model")
                _require(m.alphabet_size <= 256, "product alphabet too large")
    elif kind == "decompose":
        plan["length"] = _int(cfg, "length", None, 1)
        plan["height"] = _int(cfg, "height", 16, 1)
        plan["method"] = cfg.get("method", "kakutani")
        _require(plan["method"] in ("kakutani", "rohlin"), "'method' must be 'kakutani' or 'rohlin'")
        plan["epsilon"] = _float(cfg, "epsilon", 0.05)
        pattern = cfg.get("pattern", "1")
        _require(isinstance(pattern, str) and pattern.isdigit(), "'pattern' must be a string of digits")
        _require(len(pattern) <= plan["height"], "'pattern' must not be longer than the height")
        plan["pattern"] = pattern
        if plan["method"] == "rohlin":
            _require(plan["height"] <= plan["epsilon"] * plan["length"],
                     "rohlin towers need height <= epsilon * length")
    return plan


# --------------------------------------------------------------------------
# runners


def _tolerance(tol, scheme):
    if isinstance(tol, (int, float)):
        return float(tol)
    return tol.get(scheme.label, tol.get(scheme.name))


def _sample_p(model, n, seed):
    x = model.sample(n, seed)
    return x[0] if isinstance(x, tuple) else x


def _run_convergence(plan, report):
    limits = {}
    units = [(name, model, s) for name, model in plan["models"].items() for s in plan["schemes"]]
    failures = 0
    for name, model, scheme in units:
        t0 = time.perf_counter()
        try:
            rep = convergence_report(scheme, model, plan["n_grid"], plan["trials"], plan["epsilon"],
                                     plan["seed"], model_name=name)
        except ErgolabError as exc:
            failures += 1
            report.errors.append(f"{name}/{scheme.label}: {exc}")
            continue
        report.timings[f"{name}/{scheme.label}"] = time.perf_counter() - t0
        within = rep.within()
        for t in range(rep.trials):
            for j, n in enumerate(rep.n_grid):
                report.rows.append(Row(plan["kind"], name, scheme.label, n, t, float(rep.estimates[t, j]),
                                       rep.limit_estimate, bool(within[t, j]), rep.seeds[t]))
        frac = rep.in_probability_fraction()
        limits[(name, scheme)] = rep.limit_estimate
        report.summary[f"limit[{name}/{scheme.label}]"] = rep.limit_estimate
        report.verdicts.append(Verdict(
            f"convergence in probability [{name}/{scheme.label}]", frac >= plan["min_fraction"],
            f"fraction within {plan['epsilon']} of the median = {frac:.3f}",
        ))
        tol = _tolerance(plan["tolerance"], scheme)
        exact = model.entropy_rate() if scheme.is_entropy else _symbol_measure(model, scheme)
        if tol is not None and exact is not None:
            report.verdicts.append(Verdict(
                f"oracle agreement [{name}/{scheme.label}]", abs(rep.limit_estimate - exact) <= tol,
                f"limit {rep.limit_estimate:.6f} vs exact {exact:.6f}, tolerance {tol}",
            ))
    if units and failures == len(units):
        raise AllRowsFailed("; ".join(report.errors))
    if failures:
        report.verdicts.append(Verdict("all rows computed", False, f"{failures} of {len(units)} failed"))
    return limits


def _symbol_measure(model, scheme):
    symbol = int(dict(scheme.parameters).get("symbol", 1))
    if symbol >= model.alphabet_size:
        return 0.0
    try:
        return model.cylinder_measure([symbol])
    except (AttributeError, ErgolabError):
        return None


def run_entropy_convergence(plan, report):
    """Rows per (model, scheme, n, trial); verdicts on concentration and on exact rates."""
    _run_convergence(plan, report)


def run_indistinguishability(plan, report):
    """Entropy schemes must agree across the models; ``freq`` must separate them."""
    limits = _run_convergence(plan, report)
    names = list(plan["models"])
    for scheme in plan["schemes"]:
        vals = [limits.get((n, scheme)) for n in names]
        if any(v is None for v in vals):
            continue
        spread = max(vals) - min(vals)
        if scheme.is_entropy:
            report.verdicts.append(Verdict(
                f"invariant agreement [{scheme.label}]", spread <= plan["agreement"],
                f"limits spread {spread:.4f}, allowed {plan['agreement']}",
            ))
            if plan["zero_bound"] is not None:
                report.verdicts.append(Verdict(
                    f"zero-entropy constancy [{scheme.label}]", max(vals) <= plan["zero_bound"],
                    f"largest limit {max(vals):.4f}, bound {plan['zero_bound']}",
                ))
        else:
            gaps = [abs(a - b) for i, a in enumerate(vals) for b in vals[i + 1:]]
            report.verdicts.append(Verdict(
                f"non-invariant separation [{scheme.label}]", min(gaps) >= plan["separation"],
                f"smallest gap {min(gaps):.4f}, required {plan['separation']}",
            ))
            for n in names:
                exact = _symbol_measure(plan["models"][n], scheme)
                if exact is not None:
                    lim = limits[(n, scheme)]
                    report.verdicts.append(Verdict(
                        f"frequency oracle [{n}/{scheme.label}]", abs(lim - exact) <= plan["freq_tolerance"],
                        f"limit {lim:.6f} vs exact {exact:.6f}",
                    ))


def run_smb(plan, report):
    """-(1/n) log2 mu(x_1..x_n) at the final length for ``trials`` sampled paths."""
    for name, model in plan["models"].items():
        sampler = model.pair_model if isinstance(model, JointModel) else model
        exact = sampler.entropy_rate()
        finals = []
        t0 = time.perf_counter()
        for t in range(plan["trials"]):
            seed = seeds.mix64(plan["seed"], t)
            try:
                traj = smb_trajectory(sampler, sampler.sample(plan["length"], seed))
            except ErgolabError as exc:
                report.errors.append(f"{name} trial {t}: {exc}")
                continue
            finals.append((t, seed, traj.final))
        report.timings[name] = time.perf_counter() - t0
        if not finals:
            raise AllRowsFailed("; ".join(report.errors))
        limit = exact if exact is not None else float(np.median([f for _, _, f in finals]))
        hits = 0
        for t, seed, value in finals:
            ok = abs(value - limit) <= plan["epsilon"]
            hits += ok
            report.rows.append(Row("smb", name, "smb", plan["length"], t, value, limit, ok, seed))
        frac = hits / plan["trials"]
        report.verdicts.append(Verdict(
            f"SMB concentration [{name}]", frac >= plan["min_fraction"],
            f"{hits} of {plan['trials']} final values within {plan['epsilon']} of {limit:.6f}",
        ))


def run_relative_smb(plan, report):
    """Build A_n for each block length; counting bounds are hard assertions."""
    for name, model in plan["models"].items():
        coverage = None
        for n in plan["n_grid"]:
            t0 = time.perf_counter()
            rset = relative_smb_set(model, n, plan["epsilon"])  # raises if a bound fails
            report.timings[f"{name}/n={n}"] = time.perf_counter() - t0
            coverage = rset.coverage
            ok_cov = plan["min_coverage"] is None or coverage >= plan["min_coverage"]
            report.rows.append(Row("relative-smb", name, "relative-smb", n, 0, coverage, 1.0, ok_cov, plan["seed"]))
            report.verdicts.append(Verdict(
                f"counting bounds [{name}, n={n}]", True,
                f"#u={rset.distinct_u} < {rset.u_bound():.1f}; max #v={rset.max_v_per_u} < {rset.v_bound():.1f}",
            ))
            report.summary[f"coverage[{name}, n={n}]"] = coverage
        if plan["min_coverage"] is not None:
            report.verdicts.append(Verdict(
                f"coverage [{name}, n={plan['n_grid'][-1]}]", coverage >= plan["min_coverage"],
                f"coverage {coverage:.4f}, required {plan['min_coverage']}",
            ))


def typical_rates(model: JointModel, n: int):
    """(s, t): conditional block entropies of the P-process and of the joint process at length n."""
    u, v, p = model.joint_blocks(n)
    pair = (u.astype(np.int64) * model.r_q + v).astype(np.uint8)
    t = conditional_block_entropy(pair, p)
    pw, pp = model.p_model.blocks(n)
    s = conditional_block_entropy(pw, pp)
    return min(s, t), t


def codebook_from_columns(model: JointModel, columns, n, epsilon, k, typical_length=8):
    """A codebook over the observed columns of height ``n``, each checked to lie in A_n.

    ``s`` and ``t`` are the conditional block entropies at
    ``min(n, typical_length)``; measures are exact.
    """
    s, t = typical_rates(model, min(n, typical_length))
    # compare in the log domain: at heights in the thousands the measures underflow
    u_floor = -(s + epsilon) * n
    v_floor = -(t - s + epsilon) * n
    pairs = []
    for col in columns:
        u = np.asarray(col.name_p, dtype=np.int64)
        pair = (u * model.r_q + np.asarray(col.name_q, dtype=np.int64)).astype(np.uint8)
        log_u = float(model.p_model.log2_prefix_measures(u.astype(np.uint8))[-1])
        log_joint = float(model.pair_model.log2_prefix_measures(pair)[-1])
        if not (log_u > u_floor and log_joint - log_u > v_floor):
            raise AtypicalColumnError(f"column of height {n} lies outside A_n", column=col)
        pairs.append((col.name_p, col.name_q))
    return HeightCodebook.from_pairs(pairs, n, k, t, s, epsilon)


def run_recode_roundtrip(plan, report):
    """Recode sampled joint paths on equal-height towers and decode them back."""
    for name, model in plan["models"].items():
        for idx, height in enumerate(plan["heights"]):
            seed = seeds.mix64(plan["seed"], idx)
            t0 = time.perf_counter()
            p, q = model.sample(plan["length"], seed)
            deco = rohlin_tower(plan["length"], height, plan["tower_gap"])
            cols = extract_columns(deco, p, q)
            book = codebook_from_columns(model, cols, height, plan["epsilon"], plan["k"], plan["typical_length"])
            report.artifacts.setdefault("codebooks", {})[height] = book
            rec = recode_path(p, q, deco, {height: book})
            dp, dq = decode_path(rec.recoded, deco, {height: book})
            on = np.zeros(plan["length"], dtype=bool)
            for tw in deco.towers:
                on[tw.base_position:tw.top] = True
            exact = bool(np.array_equal(dp[on], p[on]) and np.array_equal(dq[on], q[on]))
            det = detect_bases(rec.recoded, book.params.m, deco)
            report.timings[f"{name}/height={height}"] = time.perf_counter() - t0
            ok = exact and rec.change_fraction <= rec.bound
            report.rows.append(Row("recode-roundtrip", name, "recode", height, 0, rec.change_fraction,
                                   rec.bound, ok, seed))
            report.verdicts.append(Verdict(f"decoder exactness [{name}, n={height}]", exact,
                                           f"{rec.columns} towers, {len(cols)} columns"))
            report.verdicts.append(Verdict(
                f"change accounting [{name}, n={height}]", rec.max_modified_excess <= 0 and ok,
                f"change {rec.change_fraction:.4f}, modified {rec.modified_fraction:.4f}, bound {rec.bound:.4f}",
            ))
            report.summary[f"base collisions[{name}, n={height}]"] = (
                f"{det.spurious} spurious, {det.missed} missed of {det.true_bases}"
            )


def run_transplant(plan, report):
    """Relabel Rohlin towers of a Y-path and compare block statistics with X."""
    for idx, (name, model) in enumerate(plan["models"].items()):
        seed = seeds.mix64(plan["seed"], idx)
        t0 = time.perf_counter()
        n, L, N = plan["length"], plan["tower_height"], plan["block_length"]
        deco = rohlin_tower(n, L, plan["tower_gap"])
        if plan["conditional"] == "identity":
            y = _sample_p(model, n, seed)
            res = transplant_blocks(y, deco, IdentityConditional(), seeds.mix64(seed, 1))
            change = float(np.count_nonzero(res.output != y)) / n
            report.rows.append(Row("transplant", name, "identity", n, 0, change, 0.0, change == 0.0, seed))
            report.verdicts.append(Verdict(f"identity transplant [{name}]", change == 0.0,
                                           f"change fraction {change}"))
            continue
        y = model.left.sample(n, seed)
        res = transplant_blocks(y, deco, ProductConditional(model, L), seeds.mix64(seed, 1))
        words, probs = empirical_block_arrays(res.output, N)
        xw, xp = model.blocks(N)
        dist = l1_distance_arrays(words, probs, xw, xp)
        windows = n - N + 1
        bound = plan["delta"] + 3 * math.sqrt(2 ** N / windows)
        report.timings[name] = time.perf_counter() - t0
        report.rows.append(Row("transplant", name, "transplant", n, 0, dist, bound, dist <= bound, seed))
        report.verdicts.append(Verdict(f"transplant l1 bound [{name}]", dist <= bound,
                                       f"l1 {dist:.5f}, bound {bound:.5f}, fallbacks {len(res.fallbacks)}"))
        report.summary[f"boundary share[{name}]"] = 2 * N / L + deco.leftover_fraction


def run_decompose(plan, report):
    """Tower decomposition of one sampled path, with its invariants checked."""
    for idx, (name, model) in enumerate(plan["models"].items()):
        seed = seeds.mix64(plan["seed"], idx)
        n, N = plan["length"], plan["height"]
        if plan["method"] == "kakutani":
            path = _sample_p(model, n, seed)
            deco = kakutani_decompose(path, [int(c) for c in plan["pattern"]], N)
            bound = 1.0
        else:
            deco = rohlin_tower(n, N, plan["epsilon"])
            bound = N / n
        deco.check(N)
        ok = deco.leftover_fraction <= bound
        report.rows.append(Row("decompose", name, plan["method"], n, 0, deco.leftover_fraction, bound, ok, seed))
        report.verdicts.append(Verdict(f"tower invariants [{name}]", ok,
                                       f"{len(deco.towers)} towers, leftover {len(deco.leftover)}"))


RUNNERS = {
    "entropy-convergence": run_entropy_convergence,
    "indistinguishability": run_indistinguishability,
    "smb": run_smb,
    "relative-smb": run_relative_smb,
    "recode-roundtrip": run_recode_roundtrip,
    "transplant": run_transplant,
    "decompose": run_decompose,
}


def run_experiment(cfg: dict, base_dir=None) -> ExperimentReport:
    """Validate ``cfg`` completely, then run it.  Deterministic given the config."""
    plan = validate_config(cfg, base_dir)
    report = ExperimentReport(config=_echo(cfg))
    t0 = time.perf_counter()
    RUNNERS[plan["kind"]](plan, report)
    report.timings["total"] = time.perf_counter() - t0
    return report


def _echo(cfg):
    return {k: v for k, v in cfg.items() if k not in ("out", "format")}

