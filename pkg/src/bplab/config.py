"""Experiment configuration: YAML in, validated :class:`ExperimentConfig` out.

Errors name the offending field and its line in the file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import yaml

from .opnorm import SolverBudget

KNOWN_TOP = {"seed", "group", "groups", "p", "representation", "probes", "r_max", "budget", "suites", "output"}


class ConfigError(ValueError):
    def __init__(self, message, path="", line=None):
        where = path or "config"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def _plain(node, path, lines):
    """Python value of a YAML node, recording the line of every field path."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = yaml.safe_load(yaml.serialize(k)) if not isinstance(k, yaml.ScalarNode) else k.value
            sub = f"{path}.{key}" if path else str(key)
            lines[sub] = k.start_mark.line + 1
            out[key] = _plain(v, sub, lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_plain(v, f"{path}[{i}]", lines) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    groups: list  # group specs: {"family": ..., "n": ...} or {"table": ...}
    exponents: list  # p values in (1, inf)
    representation: dict = field(default_factory=lambda: {"kind": "regular"})
    probes: object = 2  # count of random probes, or explicit value lists
    r_max: int = 4
    budget: SolverBudget = field(default_factory=SolverBudget)
    suites: dict = field(default_factory=dict)  # name -> parameter overrides
    output: dict = field(default_factory=lambda: {"dir": "reports", "name": "report"})

    def settings(self):
        """(group spec, p) pairs in config order."""
        return [(g, p) for g in self.groups for p in self.exponents]

    def to_dict(self) -> dict:
        b = {f.name: getattr(self.budget, f.name) for f in fields(SolverBudget)}
        return {"seed": self.seed, "groups": self.groups, "p": self.exponents,
                "representation": self.representation, "probes": self.probes, "r_max": self.r_max,
                "budget": b, "suites": self.suites, "output": self.output}


def _check_p(p, path, lines):
    if isinstance(p, bool) or not isinstance(p, (int, float)):
        raise ConfigError("p must be a number", path, lines.get(path))
    if not (1 < p < math.inf):
        raise ConfigError("p must lie in (1, ∞)", path, lines.get(path))
    return float(p)


def _check_group(g, path, lines):
    if not isinstance(g, dict):
        raise ConfigError("group must be a mapping with 'family' and 'n', or 'table'", path, lines.get(path))
    if "family" in g:
        if g["family"] not in ("cyclic", "dihedral"):
            raise ConfigError(f"unknown group family {g['family']!r}", f"{path}.family", lines.get(f"{path}.family"))
        n = g.get("n")
        if isinstance(n, bool) or not isinstance(n, int) or n < (2 if g["family"] == "dihedral" else 1):
            raise ConfigError("n must be a positive integer (at least 2 for dihedral)", f"{path}.n",
                              lines.get(f"{path}.n", lines.get(path)))
        return {"family": g["family"], "n": n}
    if "table" in g:
        from .groups import NotAGroup, group_from_table

        try:
            group_from_table(g["table"], g.get("identity"))
        except (NotAGroup, ValueError, TypeError) as e:
            raise ConfigError(str(e), f"{path}.table", lines.get(f"{path}.table")) from None
        return {"table": g["table"], "identity": g.get("identity")}
    raise ConfigError("group needs 'family' or 'table'", path, lines.get(path))


def parse_config(text: str, *, seed=None) -> ExperimentConfig:
    from .suites import SUITES

    try:
        root = yaml.compose(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(e, 'problem', e)}", "",
                          mark.line + 1 if mark is not None else None) from None
    lines = {}
    data = _plain(root, "", lines) if root is not None else {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", "", lines.get(""))
    for k in data:
        if k not in KNOWN_TOP:
            raise ConfigError(f"unknown field {k!r}", str(k), lines.get(str(k)))

    if seed is None:
        if "seed" not in data:
            raise ConfigError("seed is required (runs must be reproducible)", "seed", None)
        seed = data["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed must be a nonnegative integer", "seed", lines.get("seed"))

    if "group" in data and "groups" in data:
        raise ConfigError("give either 'group' or 'groups'", "groups", lines.get("groups"))
    key = "groups" if "groups" in data else "group"
    raw = data.get(key)
    if raw is None:
        raise ConfigError("a group is required", key, None)
    raw = raw if isinstance(raw, list) else [raw]
    paths = [f"{key}[{i}]" for i in range(len(raw))] if key == "groups" else ["group"]
    groups = [_check_group(g, pth, lines) for g, pth in zip(raw, paths)]

    if "p" not in data:
        raise ConfigError("p is required", "p", None)
    ps = data["p"] if isinstance(data["p"], list) else [data["p"]]
    ppaths = [f"p[{i}]" for i in range(len(ps))] if isinstance(data["p"], list) else ["p"]
    exponents = [_check_p(p, pth, lines) for p, pth in zip(ps, ppaths)]
    if not exponents:
        raise ConfigError("p must list at least one exponent", "p", lines.get("p"))

    rep = data.get("representation", {"kind": "regular"})
    if not isinstance(rep, dict) or rep.get("kind") not in ("regular", "trivial", "permutation", "direct_sum",
                                                          "explicit", "cyclic"):
        raise ConfigError("representation needs a known 'kind'", "representation", lines.get("representation"))

    probes = data.get("probes", 2)
    if isinstance(probes, bool) or not (isinstance(probes, int) and probes >= 1 or isinstance(probes, list)):
        raise ConfigError("probes must be a positive count or a list of value lists", "probes", lines.get("probes"))

    r_max = data.get("r_max", 4)
    if isinstance(r_max, bool) or not isinstance(r_max, int) or r_max < 1:
        raise ConfigError("r_max must be an integer >= 1", "r_max", lines.get("r_max"))

    bdata = data.get("budget", {}) or {}
    if not isinstance(bdata, dict):
        raise ConfigError("budget must be a mapping", "budget", lines.get("budget"))
    names = {f.name for f in fields(SolverBudget)}
    for k in bdata:
        if k not in names:
            raise ConfigError(f"unknown budget field {k!r}", f"budget.{k}", lines.get(f"budget.{k}"))
    budget = SolverBudget.from_dict(bdata)

    sdata = data.get("suites")
    if not sdata:
        raise ConfigError("at least one suite is required", "suites", lines.get("suites"))
    if isinstance(sdata, list):
        sdata = {name: {} for name in sdata}
    if not isinstance(sdata, dict):
        raise ConfigError("suites must be a list of names or a mapping", "suites", lines.get("suites"))
    suites = {}
    for name, params in sdata.items():
        path = f"suites.{name}"
        if name not in SUITES:
            raise ConfigError(f"unknown suite {name!r} (known: {', '.join(SUITES)})", path, lines.get(path))
        params = params or {}
        if not isinstance(params, dict):
            raise ConfigError("suite parameters must be a mapping", path, lines.get(path))
        for k in params:
            if k not in SUITES[name].defaults:
                raise ConfigError(f"unknown parameter {k!r} for suite {name}", f"{path}.{k}",
                                  lines.get(f"{path}.{k}"))
        for k, v in params.items():
            if isinstance(v, bool) or (isinstance(SUITES[name].defaults[k], int) and not isinstance(v, int)):
                raise ConfigError(f"{k} must be an integer", f"{path}.{k}", lines.get(f"{path}.{k}"))
        suites[name] = {**SUITES[name].defaults, **params}

    out = data.get("output", {}) or {}
    if not isinstance(out, dict):
        raise ConfigError("output must be a mapping", "output", lines.get("output"))
    output = {"dir": str(out.get("dir", "reports")), "name": str(out.get("name", "report"))}
    return ExperimentConfig(int(seed), groups, exponents, rep, probes, r_max, budget, suites, output)


def load_config(path, *, seed=None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, seed=seed)
