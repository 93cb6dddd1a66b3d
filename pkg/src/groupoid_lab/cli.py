"""Command line entry point: ``groupoid-lab <subcommand> --config <path> [--out <path>] [--seed <u64>]``.

Configs are INI files.  Keys are read from ``[experiment]`` and then
overridden by a section named after the subcommand, if present.  Exit status
is 0 when every checked property holds, 1 when a violation is found and 2 for
invalid input.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import af_audit as afm
from . import invariant_measure as im
from . import odometer as od
from .cantor_algebra import ClopenSet, ProductCylinder
from .certificate import Certificate, merge_verdict, parse_rational
from .errors import ChainError, GroupoidLabError, InfeasibleSystem, InvalidInput
from .group_words import (ball, exhaustive_folner_audit, folner_audit, interval_family, parse_group,
                          shortlex)
from .sft_groupoid import PrefixBisection
from .twisted_groupoid import (Truncation, diagonal_measure, effectiveness_witness, measure_invariance_check,
                               minimality_witness, random_effectiveness_instance, random_minimality_instance,
                               verify_effectiveness_witness, verify_minimality_witness)

SUBCOMMANDS = (
    "measure-solve", "twisted-measure-solve", "invariance-check", "folner-audit", "af-audit",
    "pi-obstruct", "witness-minimal", "witness-effective", "diagonal", "odometer-check",
)


class Config:
    """Flat key lookup with typed getters; every missing or malformed value is an :class:`InvalidInput`."""

    def __init__(self, parser: configparser.ConfigParser, subcommand: str):
        self.values: dict = {}
        for section in ("experiment", subcommand):
            if parser.has_section(section):
                self.values.update(parser.items(section))

    def raw(self, key, default=None):
        v = self.values.get(key.lower())
        if v is None or v.strip() == "":
            if default is None:
                raise InvalidInput(f"missing config key {key!r}")
            return default
        return v.strip()

    def int(self, key, default=None, minimum=None):
        text = self.raw(key, None if default is None else str(default))
        try:
            v = int(text)
        except ValueError:
            raise InvalidInput(f"{key} must be an integer, got {text!r}") from None
        if minimum is not None and v < minimum:
            raise InvalidInput(f"{key} must be >= {minimum}, got {v}")
        return v

    def rational(self, key, default=None):
        return parse_rational(self.raw(key, default))

    def group(self):
        return parse_group(self.raw("group", "F2"))

    def alphabet(self):
        n = self.int("n", 2)
        if not 2 <= n <= 10:
            raise InvalidInput(f"alphabet size n must be in [2, 10], got {n}")
        return n

    def elements(self, key, group, default=None):
        text = self.raw(key, default)
        if text == "gens":
            return group.generators()
        return [group.parse(s) for s in text.split(",")]


def load_config(path: str, subcommand: str) -> Config:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise InvalidInput(f"malformed config: {exc}") from None
    return Config(parser, subcommand)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


# ------------------------------------------------------------------ runners

def run_measure_solve(cfg: Config, seed: int) -> Certificate:
    n, k = cfg.alphabet(), cfg.int("depth", minimum=1)
    spec = cfg.raw("bisections", "all")
    bis = None
    if spec != "all":
        bis = []
        for item in spec.split(","):
            u, _, v = item.strip().partition(">")
            bis.append(PrefixBisection(u, v, n))
    system = im.sft_system(n, k, bis)
    params = {"n": n, "depth": k, "bisections": spec, "rows": len(system.rows)}
    try:
        mu, result = im.unique_measure_solve(system, n, k)
    except InfeasibleSystem as exc:
        return Certificate("sft_measure_uniqueness", params, "fail", {"combination": exc.combination},
                           {"infeasible": True})
    if mu is None:
        return Certificate("sft_measure_uniqueness", params, "fail",
                           {"null_basis": result.null_basis}, {"dimension": result.dimension})
    uniform = all(v == Fraction(1, n**k) for v in mu.values.values())
    return Certificate("sft_measure_uniqueness", params, "pass" if uniform else "fail", None,
                       {"measure": mu, "dimension": 0, "rank": result.rank})


def run_twisted_measure_solve(cfg: Config, seed: int) -> Certificate:
    group = cfg.group()
    window = cfg.elements("window", group, ",".join(map(str, shortlex(ball(group, 1)))))
    return im.twisted_unique_measure_solve(group, cfg.alphabet(), cfg.int("depth", minimum=1), window,
                                           cfg.int("twist_radius", 1, minimum=0))


def run_invariance_check(cfg: Config, seed: int) -> Certificate:
    return measure_invariance_check(cfg.group(), cfg.alphabet(), cfg.int("depth", minimum=1),
                                    cfg.int("window_radius", 1, minimum=0), cfg.int("twist_radius", 1, minimum=0),
                                    cfg.int("max_constraints", 1, minimum=0), cfg.raw("engine", "kernel"))


def run_folner_audit(cfg: Config, seed: int) -> Certificate:
    group = cfg.group()
    B = cfg.elements("B", group, "gens")
    mode = cfg.raw("family", "exhaustive")
    if mode == "exhaustive":
        return exhaustive_folner_audit(group, B, cfg.int("radius", 2, minimum=0), cfg.int("max_size", 6, minimum=1))
    if mode == "intervals":
        m_max = cfg.int("m_max", 100, minimum=1)
        return folner_audit(group, B, interval_family(m_max), scale={"intervals": m_max})
    if mode == "balls":
        r_max = cfg.int("radius", 3, minimum=0)
        return folner_audit(group, B, [ball(group, r) for r in range(r_max + 1)], scale={"balls": r_max})
    raise InvalidInput(f"unknown folner family {mode!r}")


def run_af_audit(cfg: Config, seed: int) -> Certificate:
    group = cfg.group()
    n, d = cfg.alphabet(), cfg.int("depth", 3, minimum=1)
    B = afm.TestSet(cfg.elements("B", group, "gens"))
    delta_text = cfg.raw("delta", "auto")
    if delta_text == "auto":
        delta = exhaustive_folner_audit(group, B.B, 2, 6).values["delta"]
    else:
        delta = parse_rational(delta_text)
    family = cfg.raw("family", "random")
    rng = _rng(seed)
    scale = {"n": n, "depth": d, "family": family}
    if family == "random":
        count = cfg.int("count", 100, minimum=0)
        fibers = afm.random_fiber_family(seed, count, group, n, d)
        cap = afm.random_cap(group)
        scale.update({"window": "ball(1) shapes translated by ball(2)", "twist_radius": 2, "count": count})
    elif family == "elementary":
        from .twisted_groupoid import random_point
        k = cfg.int("k", d, minimum=1)
        r = cfg.int("window_radius", 1, minimum=0)
        count = cfg.int("count", 10, minimum=0)
        idx = shortlex(ball(group, r))
        fibers = []
        for i in range(count):
            x = random_point(rng, idx, n, d)
            j = int(rng.integers(1, min(2, len(idx)) + 1))
            chosen = sorted(int(c) for c in rng.choice(len(idx), size=j, replace=False))
            F = afm.elementary_product_fiber(x, k, [idx[c] for c in chosen])
            fibers.append(afm.Fiber(F.base, F.arrows, f"elementary-{i:04d}"))
        cap = None
        scale.update({"k": k, "window_radius": r, "twist_radius": 0})
    elif family == "shift":
        from .group_words import IntegerGroup
        from .twisted_groupoid import random_point
        if not isinstance(group, IntegerGroup):
            raise InvalidInput("shift fibers need group = Z")
        m_min, m_max = cfg.int("m_min", 2, minimum=1), cfg.int("m_max", 50, minimum=1)
        x = random_point(rng, ball(group, 1), n, d)
        fibers = [afm.shift_fiber(x, m) for m in range(m_min, m_max + 1)]
        cap = afm.shift_cap(m_max, 1, B.B)
        scale.update({"m_min": m_min, "m_max": m_max})
    else:
        raise InvalidInput(f"unknown fiber family {family!r}")
    return afm.af_audit(fibers, B, delta, scale, cap)


def _parse_product_cylinder(text: str, group, n: int) -> ProductCylinder:
    """``"e:0,a:1"``; ``"all"`` is the whole unit space."""
    if text == "all":
        return ProductCylinder({}, n)
    assignment = {}
    for item in text.split(","):
        t, _, w = item.strip().partition(":")
        assignment[group.parse(t)] = w.strip()
    return ProductCylinder(assignment, n)


def _parse_clopen(text: str, n: int) -> ClopenSet:
    if text == "all":
        return ClopenSet.full(n)
    return ClopenSet.of([s.strip() for s in text.split(",")], n)


def run_pi_obstruct(cfg: Config, seed: int) -> Certificate:
    kind = cfg.raw("measure", "product")
    n = cfg.alphabet()
    if kind == "product":
        group = cfg.group()
        U = _parse_product_cylinder(cfg.raw("U", "all"), group, n)
        V = _parse_product_cylinder(cfg.raw("V"), group, n)
        return im.pi_obstruction(im.ProductMeasure(n), U, V)
    if kind == "sft":
        d = cfg.int("depth", minimum=1)
        mu, _ = im.unique_measure_solve(im.sft_system(n, d), n, d)
        return im.pi_obstruction(mu, _parse_clopen(cfg.raw("U", "all"), n), _parse_clopen(cfg.raw("V"), n))
    if kind == "odometer":
        chain = _chain_from_config(cfg)
        certs = []
        for level in range(len(chain.levels)):
            N = chain.levels[level].order
            certs.append(im.pi_obstruction(od.UniformLevelMeasure(chain, level), set(range(N)), {0}))
        verdict = merge_verdict(*(c.verdict for c in certs))
        return Certificate("not_purely_infinite", {"measure": "odometer", "orders": chain.orders}, verdict,
                           None, {"levels": [c.values for c in certs]})
    raise InvalidInput(f"unknown measure {kind!r}")


def _truncation(cfg: Config) -> Truncation:
    return Truncation(cfg.group(), cfg.alphabet(), cfg.int("depth", 2, minimum=1),
                      cfg.int("window_radius", 1, minimum=0), cfg.int("twist_radius", 1, minimum=0))


def run_witness_minimal(cfg: Config, seed: int) -> Certificate:
    trunc = _truncation(cfg)
    count = cfg.int("count", 100, minimum=0)
    rng = _rng(seed)
    failures = []
    for i in range(count):
        x, target, gamma = random_minimality_instance(rng, trunc)
        p = minimality_witness(x, target, gamma)
        if not verify_minimality_witness(p, x, target, gamma):
            failures.append({"instance": i, "point": x, "target": target, "gamma": gamma})
    return Certificate("minimality_witness", _trunc_params(trunc, count), "fail" if failures else
                       ("pass" if count else "vacuous"), {"failures": failures[:5]},
                       {"checked": count, "failures": len(failures)}, seed)


def run_witness_effective(cfg: Config, seed: int) -> Certificate:
    trunc = _truncation(cfg)
    count = cfg.int("count", 100, minimum=0)
    rng = _rng(seed)
    failures = []
    for i in range(count):
        p, S = random_effectiveness_instance(rng, trunc)
        q = effectiveness_witness(p, S)
        if not verify_effectiveness_witness(p, q, S):
            failures.append({"instance": i, "arrow": p, "neighborhood": S})
    return Certificate("effectiveness_witness", _trunc_params(trunc, count), "fail" if failures else
                       ("pass" if count else "vacuous"), {"failures": failures[:5]},
                       {"checked": count, "failures": len(failures)}, seed)


def _trunc_params(trunc: Truncation, count: int) -> dict:
    return {"group": trunc.group.name, "n": trunc.n, "depth": trunc.depth, "window_radius": trunc.window_radius,
            "twist_radius": trunc.twist_radius, "count": count}


def run_diagonal(cfg: Config, seed: int) -> Certificate:
    group, n = cfg.group(), cfg.alphabet()
    t, t2 = group.parse(cfg.raw("t", "e")), group.parse(cfg.raw("t_prime", "a" if group.name != "Z" else "1"))
    d_max = cfg.int("depth", 8, minimum=1)
    values, bad = {}, []
    for d in range(1, d_max + 1):
        v = diagonal_measure(t, t2, d, n)
        values[str(d)] = v
        if v != Fraction(1, n**d):
            bad.append(d)
    return Certificate("diagonal_measure", {"group": group.name, "n": n, "t": t, "t_prime": t2, "depth": d_max},
                       "fail" if bad else "pass", {"mismatched_depths": bad}, {"by_depth": values})


def _chain_from_config(cfg: Config) -> od.QuotientChain:
    kind = cfg.raw("chain", "dyadic")
    if kind == "dyadic":
        return od.dyadic_chain(cfg.int("levels", 4, minimum=1))
    if kind == "cyclic":
        return od.cyclic_chain([int(m) for m in cfg.raw("moduli").split(",")])
    if kind == "free":
        group = cfg.group()
        levels = []
        i = 1
        while f"level{i}" in cfg.values:
            images = [[int(x) for x in part.split()] for part in cfg.raw(f"level{i}").split("|")]
            levels.append(od.regular_level(images))
            i += 1
        if not levels:
            return od.free_chain()
        return od.build_chain(group, levels)
    raise InvalidInput(f"unknown chain kind {kind!r}")


def run_odometer_check(cfg: Config, seed: int) -> Certificate:
    try:
        chain = _chain_from_config(cfg)
    except ChainError as exc:
        return Certificate("odometer_chain", {"chain": cfg.raw("chain", "dyadic")}, "fail",
                           {"reason": str(exc), "witness": exc.witness}, {})
    levels = []
    verdicts = []
    for level in range(len(chain.levels)):
        ker = od.kernel(chain, level)
        top_points = range(chain.levels[-1].order)
        same = all(od.stabilizer_level(chain, od.make_point(chain, p), level) == ker for p in top_points)
        uni = od.uniform_invariance_check(chain, level)
        idx = od.intersection_index(chain, level + 1)
        ok = same and uni.verdict == "pass" and idx == chain.levels[level].order
        verdicts.append("pass" if ok else "fail")
        levels.append({"level": level + 1, "order": chain.levels[level].order, "kernel": ker,
                       "stabilizer_is_kernel": same, "uniform_invariance": uni.verdict,
                       "intersection_index": idx})
    return Certificate("odometer_chain", {"group": chain.group.name, "orders": chain.orders},
                       merge_verdict(*verdicts), {"connecting_maps": [list(c) for c in chain.connecting]},
                       {"levels": levels})


RUNNERS = {
    "measure-solve": run_measure_solve,
    "twisted-measure-solve": run_twisted_measure_solve,
    "invariance-check": run_invariance_check,
    "folner-audit": run_folner_audit,
    "af-audit": run_af_audit,
    "pi-obstruct": run_pi_obstruct,
    "witness-minimal": run_witness_minimal,
    "witness-effective": run_witness_effective,
    "diagonal": run_diagonal,
    "odometer-check": run_odometer_check,
}


def run(subcommand: str, cfg: Config, seed: int) -> Certificate:
    if subcommand not in RUNNERS:
        raise InvalidInput(f"unknown subcommand {subcommand!r}")
    cert = RUNNERS[subcommand](cfg, seed)
    cert.seed = seed
    return cert


# ------------------------------------------------------------------- report

def report(cert: Certificate | dict | str) -> str:
    """One-screen text summary of a certificate."""
    if isinstance(cert, str):
        cert = Certificate.from_json(cert)
    elif isinstance(cert, dict):
        cert = Certificate.from_dict(cert)
    data = cert.as_dict()
    values, wit = data["values"] or {}, data["witnesses"]
    lines = [f"{data['property']}: {cert.verdict.upper()}"]
    if cert.verdict == "vacuous":
        lines[0] += " (empty family or no obstruction at this pair)"
    params = data["parameters"] or {}
    lines.append("scale: " + ", ".join(f"{k}={_short(v)}" for k, v in sorted(params.items())))
    for key in ("min_deficiency", "delta", "checked", "violations", "failures", "dimension",
                "measure_U", "measure_V", "violation_count", "count"):
        if key in values:
            lines.append(f"{key}: {_short(values[key])}")
    if isinstance(wit, dict):
        for key in ("below_delta", "formula_mismatch", "minimiser", "K", "first_violation", "witness",
                    "mismatched_cells", "failures", "reason"):
            if wit.get(key):
                lines.append(f"{key}: {_short(wit[key])}")
    lines.append(f"seed: {data['seed']}  tool: {data['tool_version']}")
    return "\n".join(lines)


def _short(v, limit=160) -> str:
    text = v if isinstance(v, str) else json.dumps(v, sort_keys=True, ensure_ascii=False)
    return text if len(text) <= limit else text[: limit - 3] + "..."


def exit_code(cert: Certificate) -> int:
    return 1 if cert.verdict == "fail" else 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="groupoid-lab", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS + ("report",))
    ap.add_argument("--config", required=True, help="INI config (or a certificate JSON for 'report')")
    ap.add_argument("--out", help="certificate output path")
    ap.add_argument("--seed", type=int, help="overrides the config seed")
    args = ap.parse_args(argv)
    try:
        if args.subcommand == "report":
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                raise InvalidInput(f"cannot read certificate: {exc}") from None
            print(report(text))
            return 0
        cfg = load_config(args.config, args.subcommand)
        seed = args.seed if args.seed is not None else cfg.int("seed", 0, minimum=0)
        if not 0 <= seed < 2**64:
            raise InvalidInput("seed must fit in 64 bits")
        cert = run(args.subcommand, cfg, seed)
    except (GroupoidLabError, ValueError) as exc:
        print(f"groupoid-lab: error: {exc}", file=sys.stderr)
        return 2
    out = args.out or cfg.values.get("out")
    text = cert.to_json()
    if out:
        Path(out).write_text(text, encoding="utf-8")
        print(report(cert))
    else:
        sys.stdout.write(text)
    return exit_code(cert)


if __name__ == "__main__":
    sys.exit(main())
