"""Experiment configuration: JSON documents, validation and named presets.

A simulation document::

    {"instance": {"mu": [0.7, 0.5, 0.5], "sigma": 0.5, "sigma_hat": 0.5},
     "T": 10000, "n_reps": 200, "seed": 42,
     "scenarios": [{"name": "lam-0.01",
                    "arrivals": {"kind": "stationary", "lam": 0.01},
                    "policies": [{"kind": "aUCB1", "c": 1.0}]}]}

A single scenario may also be given as top-level ``arrivals`` + ``policies``.
A replay document has ``"kind": "replay"`` and a ``corpus`` block instead of
``instance``/``scenarios``.
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .arrivals import ArrivalKind, ArrivalSpec
from .core import ConfigError, Family, ProblemInstance
from .policies import PolicyConfig, PolicyKind
from .replay import REPLAY_KINDS, CorpusParams
from .sim import Scenario

DEFAULT_SEED = 42

SIM_KEYS = {"kind", "name", "instance", "T", "n_reps", "seed", "regenerate_H", "stride", "scenarios", "arrivals", "policies"}
REPLAY_KEYS = {"kind", "name", "n_cases", "corpus", "corpus_path", "policies", "n_reps", "seed"}
INSTANCE_KEYS = {"mu", "sigma", "sigma_hat", "y", "alpha", "reward_family", "aux_family", "aux_equals_reward"}
ARRIVAL_KEYS = {"kind", "lam", "kappa", "kappa_aux", "gamma", "delta", "sigma_hat", "path", "arms"}
POLICY_KEYS = {"kind", "c", "delta", "alpha_bar", "alpha_low", "label"}
SCENARIO_KEYS = {"name", "arrivals", "policies"}
CORPUS_KEYS = {"T", "ctr_range", "cvr_range", "alpha_range", "delta_range", "arrival_rate", "alpha_ratio", "misspec"}


@dataclass
class ExperimentConfig:
    kind: str
    name: str
    n_reps: int
    seed: int
    instance: Optional[ProblemInstance] = None
    T: int = 0
    scenarios: list = field(default_factory=list)
    regenerate_H: bool = True
    stride: int = 1
    # replay only
    policies: list = field(default_factory=list)
    n_cases: int = 0
    corpus: Optional[CorpusParams] = None
    corpus_path: Optional[str] = None
    raw: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        """Normalised document; parsing it again gives an equal config."""
        d = {"kind": self.kind, "name": self.name, "n_reps": self.n_reps, "seed": self.seed}
        if self.kind == "replay":
            d["policies"] = [p.to_dict() for p in self.policies]
            if self.corpus_path:
                d["corpus_path"] = self.corpus_path
            else:
                d["n_cases"] = self.n_cases
                d["corpus"] = self.corpus.to_dict()
            return d
        inst = self.instance
        d["instance"] = {
            "mu": list(inst.mu),
            "sigma": inst.sigma,
            "sigma_hat": inst.sigma_hat,
            "y": list(inst.y),
            "alpha": list(inst.alpha),
            "reward_family": inst.reward_family.value,
            "aux_family": inst.aux_family.value,
        }
        d["T"] = self.T
        d["regenerate_H"] = self.regenerate_H
        d["stride"] = self.stride
        d["scenarios"] = [sc.to_dict() for sc in self.scenarios]
        return d


# -- presets -----------------------------------------------------------------

# Auxiliary observations are i.i.d. draws from the reward distributions.
FIG2_INSTANCE = {"mu": [0.7, 0.5, 0.5], "sigma": 0.5, "aux_equals_reward": True}
T_APPF = 10_000
GAP = 0.2


def _p(kind, c, label=None, **kw) -> dict:
    d = {"kind": kind, "c": c}
    if label:
        d["label"] = label
    d.update(kw)
    return d


def _fig2() -> dict:
    scen = [{"name": "no-aux", "arrivals": {"kind": "none"}, "policies": [_p("UCB1", 1.0), _p("TS", 0.5)]}]
    for lam in (0.001, 0.01, 0.05):
        scen.append({
            "name": f"lam-{lam:g}",
            "arrivals": {"kind": "stationary", "lam": lam},
            "policies": [_p("aUCB1", 1.0), _p("aTS", 0.5)],
        })
    return {"name": "fig2", "instance": FIG2_INSTANCE, "T": 10_000, "n_reps": 200, "stride": 100, "scenarios": scen}


def _fig6() -> dict:
    scen = []
    for lam in (0.001, 0.01, 0.05):
        scen.append({
            "name": f"lam-{lam:g}",
            "arrivals": {"kind": "stationary", "lam": lam},
            "policies": [_p(k, 1.0, delta=GAP) for k in ("EG", "nEG", "aEG")],
        })
    return {"name": "fig6", "instance": FIG2_INSTANCE, "T": 10_000, "n_reps": 200, "stride": 100, "scenarios": scen}


def _appf_policies() -> list:
    return [
        _p("UCB1", 1.0), _p("aUCB1", 1.0),
        _p("TS", 0.5), _p("aTS", 0.5),
        _p("EG", 1.0, delta=GAP), _p("nEG", 1.0, delta=GAP), _p("aEG", 1.0, delta=GAP),
    ]


def _stationary(n: int) -> dict:
    return {"kind": "stationary", "lam": n / T_APPF}


def _diminishing(kappa: float) -> dict:
    return {"kind": "diminishing-bernoulli", "kappa_aux": kappa}


def _appf_single(name: str, arrivals: dict) -> dict:
    return {
        "name": name, "instance": FIG2_INSTANCE, "T": T_APPF, "n_reps": 400, "stride": 100,
        "scenarios": [{"name": name, "arrivals": arrivals, "policies": _appf_policies()}],
    }


GRID_ARRIVALS = (
    ("stationary-500", _stationary(500)),
    ("stationary-10", _stationary(10)),
    ("diminishing-4", _diminishing(4)),
    ("diminishing-1", _diminishing(1)),
)


def _appf_cgrid() -> dict:
    pols = []
    for c in (0.4, 1.0, 1.6):
        pols.append(_p("aEG", c, f"aEG-c{c:g}", delta=GAP))
    for c in (0.4, 1.0, 1.6):
        pols.append(_p("aUCB1", c, f"aUCB1-c{c:g}"))
    for c in (0.1, 0.5, 0.7):
        pols.append(_p("aTS", c, f"aTS-c{c:g}"))
    scen = [{"name": n, "arrivals": a, "policies": pols} for n, a in GRID_ARRIVALS]
    return {"name": "appF-cgrid", "instance": FIG2_INSTANCE, "T": T_APPF, "n_reps": 400, "stride": 100, "scenarios": scen}


def _appf_delta_grid() -> dict:
    pols = [_p("aEG", 1.0, f"aEG-d{d:g}", delta=d) for d in (0.05, 0.2, 0.35)]
    scen = [{"name": n, "arrivals": a, "policies": pols} for n, a in GRID_ARRIVALS]
    return {"name": "appF-delta-grid", "instance": FIG2_INSTANCE, "T": T_APPF, "n_reps": 400, "stride": 100, "scenarios": scen}


def _appe_replay() -> dict:
    return {
        "kind": "replay",
        "name": "appE-replay",
        "n_cases": 100,
        "n_reps": 200,
        "corpus": {"T": 2000, "delta_range": [0.03, 0.03], "arrival_rate": 1.0},
        "policies": [
            _p("UCB1", 0.05),
            _p("aUCB1", 0.05),
            # In replay alpha_bar multiplies each case's mapping estimate.
            _p("TwoUCBs", 0.05, alpha_bar=1.1),
        ],
    }


PRESETS = {
    "fig2": _fig2,
    "fig6": _fig6,
    "appF-stationary-500": lambda: _appf_single("appF-stationary-500", _stationary(500)),
    "appF-stationary-100": lambda: _appf_single("appF-stationary-100", _stationary(100)),
    "appF-stationary-10": lambda: _appf_single("appF-stationary-10", _stationary(10)),
    "appF-diminishing-4": lambda: _appf_single("appF-diminishing-4", _diminishing(4)),
    "appF-diminishing-2": lambda: _appf_single("appF-diminishing-2", _diminishing(2)),
    "appF-diminishing-1": lambda: _appf_single("appF-diminishing-1", _diminishing(1)),
    "appF-cgrid": _appf_cgrid,
    "appF-delta-grid": _appf_delta_grid,
    "appE-replay": _appe_replay,
}


def preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name]())
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None


# -- parsing -----------------------------------------------------------------

def load_document(source) -> dict:
    """A dict, inline JSON, a path to a JSON file, or a preset name."""
    if isinstance(source, dict):
        return copy.deepcopy(source)
    text = str(source)
    if text in PRESETS:
        return preset(text)
    if not text.lstrip().startswith("{") and os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    return doc


def _unknown(d: dict, allowed: set, where: str, errs: list) -> None:
    for k in sorted(set(d) - allowed):
        errs.append(f"{where}: unknown key {k!r}")


def _int(d, key, where, errs, lo=None, required=True, default=None):
    if key not in d:
        if required:
            errs.append(f"{where}.{key} is required")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v != int(v):
        errs.append(f"{where}.{key} must be an integer")
        return default
    v = int(v)
    if lo is not None and v < lo:
        errs.append(f"{where}.{key}={v} must be at least {lo}")
        return default
    return v


def _policy(d, where: str, errs: list) -> Optional[PolicyConfig]:
    if not isinstance(d, dict):
        errs.append(f"{where} must be an object")
        return None
    _unknown(d, POLICY_KEYS, where, errs)
    if "kind" not in d:
        errs.append(f"{where}.kind is required")
        return None
    try:
        kind = PolicyKind(d["kind"])
    except ValueError:
        errs.append(f"{where}.kind: unknown policy kind {d['kind']!r}")
        return None
    try:
        cfg = PolicyConfig(kind, **{k: v for k, v in d.items() if k in POLICY_KEYS - {"kind"}})
    except (TypeError, ValueError) as exc:
        errs.append(f"{where}: {exc}")
        return None
    errs.extend(f"{where}: {e}" for e in cfg.errors())
    return cfg


def _arrivals(d, where: str, errs: list) -> Optional[ArrivalSpec]:
    if not isinstance(d, dict):
        errs.append(f"{where} must be an object")
        return None
    _unknown(d, ARRIVAL_KEYS, where, errs)
    try:
        spec = ArrivalSpec(**{k: v for k, v in d.items() if k in ARRIVAL_KEYS})
    except (TypeError, ValueError) as exc:
        errs.append(f"{where}: {exc}")
        return None
    errs.extend(f"{where}: {e}" for e in spec.errors())
    return spec


def _instance(d, errs: list) -> Optional[ProblemInstance]:
    if not isinstance(d, dict):
        errs.append("instance is required and must be an object")
        return None
    _unknown(d, INSTANCE_KEYS, "instance", errs)
    missing = [k for k in ("mu", "sigma") if k not in d]
    for k in missing:
        errs.append(f"instance.{k} is required")
    if missing:
        return None
    kw = {k: v for k, v in d.items() if k in INSTANCE_KEYS - {"aux_equals_reward"}}
    if d.get("aux_equals_reward", False):
        clash = sorted({"sigma_hat", "y", "alpha", "aux_family"} & set(d))
        if clash:
            errs.append(f"instance: aux_equals_reward fixes {clash}; drop them")
            return None
        kw.update(sigma_hat=d["sigma"], y=None, alpha=None, aux_family=d.get("reward_family", "gaussian"))
    for k in ("mu", "y", "alpha"):
        if k in kw and kw[k] is not None:
            kw[k] = tuple(kw[k])
    try:
        for k in ("reward_family", "aux_family"):
            if k in kw:
                kw[k] = Family(kw[k])
        return ProblemInstance(**kw)
    except (TypeError, ValueError) as exc:
        errs.append(f"instance: {exc}")
        return None


def _parse_sim(doc: dict, errs: list) -> dict:
    _unknown(doc, SIM_KEYS, "config", errs)
    inst = _instance(doc.get("instance"), errs)
    T = _int(doc, "T", "config", errs, lo=1)
    n_reps = _int(doc, "n_reps", "config", errs, lo=1)
    stride = _int(doc, "stride", "config", errs, lo=1, required=False, default=1)
    regen = doc.get("regenerate_H", True)
    if not isinstance(regen, bool):
        errs.append("config.regenerate_H must be true or false")
    if "scenarios" in doc:
        if "arrivals" in doc or "policies" in doc:
            errs.append("config: give either scenarios or top-level arrivals/policies, not both")
        raw_scen = doc["scenarios"]
        if not isinstance(raw_scen, list) or not raw_scen:
            errs.append("config.scenarios must be a non-empty list")
            raw_scen = []
    else:
        for k in ("arrivals", "policies"):
            if k not in doc:
                errs.append(f"config.{k} is required (or give scenarios)")
        raw_scen = [{"name": "default", "arrivals": doc.get("arrivals", {"kind": "none"}), "policies": doc.get("policies", [])}]
    scenarios = []
    names = set()
    for i, s in enumerate(raw_scen):
        where = f"scenarios[{i}]"
        if not isinstance(s, dict):
            errs.append(f"{where} must be an object")
            continue
        _unknown(s, SCENARIO_KEYS, where, errs)
        name = str(s.get("name", f"scenario-{i}"))
        if name in names:
            errs.append(f"{where}: duplicate scenario name {name!r}")
        names.add(name)
        spec = _arrivals(s.get("arrivals", {"kind": "none"}), f"{where}.arrivals", errs)
        pols = s.get("policies")
        if not isinstance(pols, list) or not pols:
            errs.append(f"{where}.policies must be a non-empty list")
            pols = []
        cfgs = [_policy(p, f"{where}.policies[{j}]", errs) for j, p in enumerate(pols)]
        labels = [c.label for c in cfgs if c is not None]
        if len(set(labels)) != len(labels):
            errs.append(f"{where}: duplicate policy labels")
        if spec is not None and inst is not None and spec.arms is not None:
            bad = [a for a in spec.arms if not 0 <= a < inst.K]
            if bad:
                errs.append(f"{where}.arrivals.arms {bad} outside 0..{inst.K - 1}")
        if spec is not None and spec.kind is ArrivalKind.FROM_FILE and spec.path and not os.path.exists(spec.path):
            errs.append(f"{where}.arrivals.path {spec.path!r} does not exist")
        scenarios.append(Scenario(name, spec, [c for c in cfgs if c is not None]))
    return {"instance": inst, "T": T, "n_reps": n_reps, "stride": stride, "regenerate_H": regen, "scenarios": scenarios}


def _parse_replay(doc: dict, errs: list) -> dict:
    _unknown(doc, REPLAY_KEYS, "config", errs)
    n_reps = _int(doc, "n_reps", "config", errs, lo=1)
    pols = doc.get("policies")
    if not isinstance(pols, list) or not pols:
        errs.append("config.policies must be a non-empty list")
        pols = []
    cfgs = [_policy(p, f"policies[{j}]", errs) for j, p in enumerate(pols)]
    cfgs = [c for c in cfgs if c is not None]
    for c in cfgs:
        if c.kind not in REPLAY_KINDS:
            errs.append(f"policy {c.label}: replay supports UCB1, aUCB1 and TwoUCBs")
    if "UCB1" not in [c.label for c in cfgs]:
        errs.append("config.policies needs a UCB1 baseline labelled 'UCB1'")
    corpus_path = doc.get("corpus_path")
    corpus = None
    n_cases = 0
    if corpus_path is not None:
        if "corpus" in doc or "n_cases" in doc:
            errs.append("config: give either corpus_path or corpus/n_cases, not both")
        if not os.path.exists(str(corpus_path)):
            errs.append(f"config.corpus_path {corpus_path!r} does not exist")
    else:
        n_cases = _int(doc, "n_cases", "config", errs, lo=1)
        raw = doc.get("corpus", {})
        if not isinstance(raw, dict):
            errs.append("config.corpus must be an object")
            raw = {}
        _unknown(raw, CORPUS_KEYS, "corpus", errs)
        kw = {k: (tuple(v) if isinstance(v, list) else v) for k, v in raw.items() if k in CORPUS_KEYS}
        try:
            corpus = CorpusParams(**kw)
            errs.extend(corpus.errors())
        except TypeError as exc:
            errs.append(f"corpus: {exc}")
    return {"n_reps": n_reps, "policies": cfgs, "corpus": corpus, "corpus_path": corpus_path, "n_cases": n_cases}


def parse_config(source, seed: Optional[int] = None) -> ExperimentConfig:
    """Validate a document (dict, JSON text or path).

    Raises :class:`ConfigError` whose ``errors`` lists every problem found.
    ``seed`` (from the command line) overrides the document's seed, which
    overrides the default 42.
    """
    doc = load_document(source)
    errs: list = []
    kind = doc.get("kind", "simulate")
    if kind not in ("simulate", "replay"):
        errs.append(f"config.kind must be 'simulate' or 'replay', not {kind!r}")
        kind = "simulate"
    doc_seed = _int(doc, "seed", "config", errs, lo=0, required=False)
    parts = _parse_replay(doc, errs) if kind == "replay" else _parse_sim(doc, errs)
    name = doc.get("name", "experiment")
    if not isinstance(name, str):
        errs.append("config.name must be a string")
    if errs:
        raise ConfigError(f"{len(errs)} configuration error(s):\n  " + "\n  ".join(errs), errs)
    if seed is not None:
        eff = int(seed)
    elif doc_seed is not None:
        eff = doc_seed
    else:
        eff = DEFAULT_SEED
    return ExperimentConfig(kind=kind, name=name, seed=eff, raw=doc, **parts)
